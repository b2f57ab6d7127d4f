"""Fitted Rajchman orders of Bernoulli convolutions and their window dependence.

Integer bases (Pisot) keep a flat envelope; for non-Pisot rational bases such
as 5/2 the decay is slow enough that the fitted power shrinks as the window
grows, which is what a logarithmic rate looks like on a log-log fit.
"""

from dataclasses import asdict, dataclass

from kshear.measures import BernoulliConvolution, rajchman_fit

from _common import parse_config, save


@dataclass
class Config:
    thetas: tuple = (2.5, 3.0, 2.2, 3.7, 4.0)
    t_max: tuple = (1e3, 1e4, 1e5)
    blocks: int = 16
    out_dir: str = "results"


def main(cfg: Config):
    rows = []
    print(f"{'theta':>6} " + " ".join(f"{'r(' + format(t, '.0e') + ')':>12}" for t in cfg.t_max) + "  env_min")
    for theta in cfg.thetas:
        m = BernoulliConvolution(theta)
        fits = [rajchman_fit(m, 1, t, cfg.blocks) for t in cfg.t_max]
        orders = [f.fitted_order for f in fits]
        rows.append({"theta": theta, "orders": orders, "envelope_min": float(fits[-1].envelope.min())})
        print(f"{theta:6.2f} " + " ".join(f"{o:12.4f}" for o in orders) + f"  {fits[-1].envelope.min():.4f}")
    print("saved", save(cfg.out_dir, "rajchman_orders", {"config": asdict(cfg), "rows": rows}))


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
