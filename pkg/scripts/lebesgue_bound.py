"""Decay of covariances over the Lebesgue base against two candidate bounds.

For unit-norm observables in the anisotropic space H^{s,0} this compares
``|E Cov_n|`` with ``4^s n^(-2s)`` and with ``(1 + n^2/2)^(-s/2)``. Random
draws sit well inside both; the two-mode pair ``e(y), e(-n x + y)`` has
covariance exactly 1 at time n and shows that only the second one holds in
general.
"""

from dataclasses import asdict, dataclass

import numpy as np

from kshear.measures import UniformTorus
from kshear.observables import TrigPoly2, hs0_norm, random_sobolev_poly
from kshear.shear import ShearSystem, cov_spectral

from _common import parse_config, save


@dataclass
class Config:
    s: float = 3.0
    radius: int = 4
    pairs: int = 200
    n_max: int = 64
    seed: int = 7
    out_dir: str = "results"


def main(cfg: Config):
    sys_ = ShearSystem(UniformTorus())
    n = np.arange(1, cfg.n_max + 1)
    steep = 4.0 ** cfg.s / n.astype(float) ** (2 * cfg.s)
    sharp = (1 + n ** 2 / 2.0) ** (-cfg.s / 2)
    rng = np.random.default_rng(cfg.seed)
    worst_steep = worst_sharp = 0.0
    for _ in range(cfg.pairs):
        f1, f2 = (random_sobolev_poly(rng, cfg.radius, cfg.s) for _ in range(2))
        f1, f2 = f1.scale(1 / hs0_norm(f1, cfg.s)), f2.scale(1 / hs0_norm(f2, cfg.s))
        c = np.abs(cov_spectral(sys_, f1, f2, n))
        worst_steep = max(worst_steep, float((c / steep).max()))
        worst_sharp = max(worst_sharp, float((c / sharp).max()))
    print(f"random pairs: max |cov| / 4^s n^-2s = {worst_steep:.3f}, max |cov| / (1+n^2/2)^-s/2 = {worst_sharp:.3f}")
    pair = []
    for k in (2, 5, 10, 20, 40):
        f1, f2 = TrigPoly2.mode(0, 1), TrigPoly2.mode(-k, 1)
        norm = hs0_norm(f1, cfg.s) * hs0_norm(f2, cfg.s)
        c = abs(cov_spectral(sys_, f1, f2, k))
        pair.append({"n": k, "cov": c, "steep_bound": 4 ** cfg.s / k ** (2 * cfg.s) * norm,
                     "sharp_bound": (1 + k * k / 2) ** (-cfg.s / 2) * norm})
        print(f"pair n={k:3d}: |cov| = {c:.3f}, 4^s n^-2s bound {pair[-1]['steep_bound']:.3g}, "
              f"sharp bound {pair[-1]['sharp_bound']:.3g}")
    print("saved", save(cfg.out_dir, "lebesgue_bound", {"config": asdict(cfg), "worst_steep": worst_steep,
                                                       "worst_sharp": worst_sharp, "pair": pair}))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
