"""Shrinking-target counts along orbits of the transvection, uniform base."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from kshear.measures import UniformTorus
from kshear.targets import TargetScheme, run_counting

from _common import parse_config, save


@dataclass
class Config:
    C: float = 1.0
    p: float = 0.25
    N: int = 100_000
    orbits: int = 100
    seed: int = 0
    out_dir: str = "results"


def main(cfg: Config):
    hits = run_counting(UniformTorus(), TargetScheme(cfg.C, cfg.p, cfg.N), cfg.orbits, cfg.seed)
    n = hits.checkpoints.astype(float)
    sel = n >= 10
    scale = np.sqrt(n[sel]) * np.log(n[sel]) ** 1.5
    k = (np.abs(hits.counts - hits.expectation[None, :])[:, sel] / scale).max()
    for j in np.flatnonzero(sel)[::4]:
        print(f"N={int(n[j]):7d}  E={hits.expectation[j]:10.1f}  mean ratio {hits.mean_ratio(j):.4f} "
              f"+- {hits.ratio_stderr(j):.4f}")
    print(f"max |S_N - E S_N| / (sqrt N log^1.5 N) over checkpoints: {k:.3f}")
    print("saved", save(cfg.out_dir, "borel_cantelli", {"config": asdict(cfg), "K": float(k),
                                                       "mean_ratio": hits.mean_ratio(),
                                                       "max_deviation": hits.max_deviation(),
                                                       "bound": 20 * math.sqrt(cfg.N) * math.log(cfg.N) ** 1.5}))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
