"""Diophantine exponent estimates for classical constants and Bernoulli samples."""

from dataclasses import asdict, dataclass

from kshear.diophantine import cf_expand, dio_estimate, liouville_constant, rajchman_dio_check
from kshear.measures import BernoulliConvolution

from _common import parse_config, save


@dataclass
class Config:
    depth: int = 40
    samples: int = 200
    theta: float = 2.5
    out_dir: str = "results"


def main(cfg: Config):
    rows = []
    for label, x in [("phi", "phi"), ("sqrt2", "sqrt(2)"), ("e", "e"), ("pi", "pi"),
                     ("liouville", liouville_constant(7))]:
        d = dio_estimate(cf_expand(x, cfg.depth))
        rows.append({"x": label, **d.to_dict()})
        print(f"{label:10s} estimate {d.estimate:7.3f}  max s_k {d.exponents.max():7.3f}  {d.verdict}")
    chk = rajchman_dio_check(BernoulliConvolution(cfg.theta), cfg.samples, cfg.depth)
    print(f"Bernoulli theta={cfg.theta}: r = {chk.r_hat:.4f}, bound {chk.bound:.2f}, "
          f"violation fraction {chk.violation_fraction:.3f}")
    print("saved", save(cfg.out_dir, "diophantine", {"config": asdict(cfg), "rows": rows,
                                                    "violation_fraction": chk.violation_fraction}))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
