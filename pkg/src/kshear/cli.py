"""Command-line experiment driver.

Every command writes ``<out-dir>/<stem>.csv`` and a JSON summary
``<out-dir>/<stem>.json`` that embeds the full configuration, the library
version and the seed. Exit codes: 0 success, 2 precondition violation,
3 failed verdict (check commands), 64 unknown command.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import math
import os
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .decay import INF_ORDER, fit_envelope, is_infinite, order_from_json, order_to_json
from .diophantine import cf_expand, dio_estimate, liouville_constant, rajchman_dio_check
from .lie import LieFlowSpec, lie_cov_mc, orbit_torus_reduce
from .measures import char_fn, equidistribution_stat, parse_measure, rajchman_fit
from .observables import TrigPoly2, read_poly_csv
from .phase import (DegenerateField, catalog_field, critical_points_scan, load_piecewise_csv,
                    oscillatory_curve, phase_decay_order)
from .shear import (CovCurve, ShearSystem, Verdict, bound_check, decay_fit, monte_carlo_curve,
                    spectral_curve, time_grid)
from .targets import TargetScheme, mstp_experiment, run_counting

EXIT_OK, EXIT_PRECONDITION, EXIT_FAIL, EXIT_UNKNOWN = 0, 2, 3, 64
THREADS_ENV = "KSHEAR_THREADS"


class PreconditionError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise PreconditionError(message)


# --- helpers ------------------------------------------------------------------


def _load_schema() -> dict:
    return json.loads(resources.files("kshear").joinpath("schemas/summary.schema.json").read_text())


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if v is INF_ORDER:
        return "inf"
    return v


def _parse_order(text: str):
    return order_from_json(text)


def _parse_real(text: str):
    """Exact rational when possible (``22/7``, ``0.5``), else an interval expression."""
    low = text.strip().lower()
    if low.startswith("liouville"):
        terms = int(low.split(":", 1)[1]) if ":" in low else 7
        return liouville_constant(terms)
    try:
        return Fraction(text)
    except ValueError:
        return text


def _real_value(text: str) -> float:
    x = _parse_real(text)
    if isinstance(x, Fraction):
        return float(x)
    import mpmath
    return float(mpmath.mpf(eval(x, {"__builtins__": {}}, {"sqrt": mpmath.sqrt, "pi": mpmath.pi, "e": mpmath.e,
                                                            "phi": mpmath.phi, "exp": mpmath.exp, "log": mpmath.log})))


def _observable(text: str, base_dir: Path) -> TrigPoly2:
    """``mode:k1,k2`` or a CSV file of (k1, k2, re, im)."""
    if text.startswith("mode:"):
        k1, k2 = (int(v) for v in text[5:].split(","))
        return TrigPoly2.mode(k1, k2)
    return read_poly_csv(base_dir / text)


def _field(args):
    if getattr(args, "field_csv", None):
        return load_piecewise_csv(args.field_csv)
    return catalog_field(args.field)


def _grid(args, integer: bool):
    return time_grid(args.t_min, args.t_max, args.ratio, integer)


# --- commands -----------------------------------------------------------------
# Each returns (csv_text, result_dict, verdict or None, exit_code).


def cmd_char(args):
    m = parse_measure(args.measure)
    if args.t is not None:
        t = np.array([float(v) for v in args.t.split(",")])
    else:
        t = np.geomspace(args.t_min, args.t_max, args.n_points)
    v = np.atleast_1d(char_fn(m, t))
    text = _rows_to_csv(["t", "re", "im", "abs"], [(a, b.real, b.imag, abs(b)) for a, b in zip(t, v)])
    return text, {"points": int(t.size), "max_abs": float(np.abs(v).max())}, None, EXIT_OK


def cmd_rajchman_fit(args):
    m = parse_measure(args.measure)
    est = rajchman_fit(m, args.t_min, args.t_max, args.blocks, not args.real_grid)
    text = _rows_to_csv(["block_centre", "envelope"], zip(est.freqs, est.envelope))
    res = {k: v for k, v in est.to_dict().items() if k not in ("freqs", "envelope")}
    return text, res, None, EXIT_OK


def cmd_equidist(args):
    m = parse_measure(args.measure)
    ns = [int(v) for v in args.n.split(",")]
    stats = [equidistribution_stat(m, n, args.a, args.samples, args.seed) for n in ns]
    text = _rows_to_csv(["n", "ks_distance"], zip(ns, stats))
    return text, {"ks_distance": dict(zip(map(str, ns), stats))}, None, EXIT_OK


def cmd_cov(args):
    base_dir = Path(args.base_dir)
    sys_ = ShearSystem(parse_measure(args.measure, base_dir), args.time_kind)
    f1, f2 = _observable(args.f1, base_dir), _observable(args.f2, base_dir)
    times = _grid(args, args.time_kind == "discrete")
    if args.method == "spectral":
        curve = spectral_curve(sys_, f1, f2, times)
    else:
        curve = monte_carlo_curve(sys_, f1, f2, times, args.samples, args.seed)
    curve.params.update({"system": "shear", "measure": args.measure, "time_kind": args.time_kind})
    res = {"points": int(times.size), "max_abs": float(np.abs(curve.values).max())}
    try:
        res["gamma_hat"] = order_to_json(decay_fit(curve).fitted_order)
    except ValueError as exc:
        # the curve itself is still valid; only the summary fit is skipped
        res["gamma_hat_skipped"] = str(exc)
    return curve.to_csv(), res, None, EXIT_OK


def cmd_decay_fit(args):
    curve = CovCurve.from_csv(args.curve)
    est = decay_fit(curve, args.blocks)
    text = _rows_to_csv(["block_centre", "envelope"], zip(est.freqs, est.envelope))
    res = {k: v for k, v in est.to_dict().items() if k not in ("freqs", "envelope")}
    return text, res, None, EXIT_OK


def cmd_bound_check(args):
    if args.curve:
        gamma = decay_fit(CovCurve.from_csv(args.curve)).fitted_order
    elif args.gamma is not None:
        gamma = _parse_order(args.gamma)
    else:
        raise PreconditionError("bound-check needs --curve or --gamma")
    if args.r is not None:
        r = _parse_order(args.r)
    elif args.measure:
        r = rajchman_fit(parse_measure(args.measure), 1, args.r_t_max).fitted_order
    else:
        raise PreconditionError("bound-check needs --r or --measure")
    verdict = bound_check(gamma, args.s, r, args.tol)
    res = {"gamma_hat": order_to_json(gamma), "r_hat": order_to_json(r), "s": args.s, "tol": args.tol}
    text = _rows_to_csv(["gamma_hat", "r_hat", "s", "verdict"], [(str(order_to_json(gamma)), str(order_to_json(r)),
                                                                  args.s, verdict.value)])
    code = {Verdict.PASS: EXIT_OK, Verdict.NOT_APPLICABLE: EXIT_PRECONDITION}.get(verdict, EXIT_FAIL)
    return text, res, verdict.value, code


def cmd_phase(args):
    fld = _field(args)
    t = np.geomspace(args.t_min, args.t_max, args.n_points)
    vals = oscillatory_curve(fld, args.xi, t, args.quad)
    est = fit_envelope(t, vals, blocks=args.blocks)
    text = _rows_to_csv(["t", "re", "im", "abs"], [(a, b.real, b.imag, abs(b)) for a, b in zip(t, vals)])
    res = {"fitted_order": order_to_json(est.fitted_order), "smoothness": fld.smoothness,
           "expected_order": 1.0 / fld.smoothness, "residual_rms": est.residual_rms}
    return text, res, None, EXIT_OK


def cmd_critical_scan(args):
    out = critical_points_scan(_field(args), args.xi, args.grid_size)
    if isinstance(out, DegenerateField):
        return _rows_to_csv(["location", "order"], []), {"degenerate": True,
                                                          "max_derivative": out.max_derivative}, None, EXIT_OK
    text = _rows_to_csv(["location", "order"], out)
    return text, {"degenerate": False, "points": [[float(a), int(b)] for a, b in out]}, None, EXIT_OK


def cmd_borel_cantelli(args):
    scheme = TargetScheme(args.C, args.p, args.N)
    hits = run_counting(parse_measure(args.measure), scheme, args.orbits, args.seed)
    N = scheme.N_max
    bound = args.K * math.sqrt(N) * math.log(N) ** 1.5
    res = {"ratio_mean": hits.mean_ratio(), "ratio_stderr": hits.ratio_stderr(),
           "max_deviation": hits.max_deviation(), "deviation_bound": bound,
           "expected_S_N": float(hits.expectation[-1])}
    return hits.to_csv(), res, None, EXIT_OK


def cmd_mstp(args):
    alpha = _real_value(args.alpha)
    r = mstp_experiment(alpha, args.s, args.C, args.points, args.N, args.seed)
    text = _rows_to_csv(["point_id", "window_hits"], enumerate(r.counts))
    return text, {**r.to_dict(), "alpha": alpha}, None, EXIT_OK


def cmd_cf(args):
    cf = cf_expand(_parse_real(args.x), args.depth, args.bits)
    text = _rows_to_csv(["k", "a_k", "p_k", "q_k"], [(k, a, p, q) for k, (a, p, q) in
                                                     enumerate(zip(cf.quotients, cf.p, cf.q))])
    res = {"depth": cf.depth, "rational": cf.rational, "precision_exhausted": cf.precision_exhausted,
           "quotients": [str(a) for a in cf.quotients[:64]]}
    return text, res, None, EXIT_OK


def cmd_dio(args):
    cf = cf_expand(_parse_real(args.x), args.depth, args.bits)
    d = dio_estimate(cf)
    text = _rows_to_csv(["level", "s_k"], zip(d.levels, d.exponents))
    res = {"estimate": d.estimate, "classification": d.verdict, "depth": d.depth, "truncated": d.truncated}
    return text, res, None, EXIT_OK


def cmd_rajchman_dio(args):
    m = parse_measure(args.measure)
    r = _parse_order(args.r) if args.r is not None else None
    chk = rajchman_dio_check(m, args.samples, args.depth, args.seed, r_hat=r, margin=args.margin)
    res = {"violation_fraction": chk.violation_fraction, "bound": chk.bound, "r_hat": order_to_json(chk.r_hat),
           "vacuous": chk.vacuous, "max_violation": args.max_violation}
    if chk.vacuous:
        return chk.to_csv(), res, "VACUOUS", EXIT_OK
    ok = chk.violation_fraction <= args.max_violation
    return chk.to_csv(), res, "PASS" if ok else "FAIL", EXIT_OK if ok else EXIT_FAIL


def _lie_spec(args) -> LieFlowSpec:
    axis = tuple(float(v) for v in args.axis.split(","))
    norm = math.sqrt(sum(a * a for a in axis))
    idx = [int(v) for v in args.indices.split(",")]
    if len(idx) != 4:
        raise PreconditionError("--indices needs four comma-separated integers i,j,k,l")
    return LieFlowSpec(parse_measure(args.measure), args.omega, tuple(a / norm for a in axis), *idx, group=args.group)


def cmd_lie_cov(args):
    spec = _lie_spec(args)
    t = np.geomspace(args.t_min, args.t_max, args.n_points)
    out = lie_cov_mc(spec, t, args.samples, args.seed)
    curve = out.to_curve(spec)
    res = {"fitted_order": order_to_json(fit_envelope(t, out.value, blocks=args.blocks).fitted_order),
           "max_abs_gap_to_prediction": float(np.abs(out.value - out.prediction).max()),
           "prediction": [float(p.real) for p in out.prediction]}
    return curve.to_csv(), res, None, EXIT_OK


def cmd_lie_reduce(args):
    red = orbit_torus_reduce(_lie_spec(args))
    est = rajchman_fit(red, args.t_min, args.t_max, args.blocks, integer_grid=False,
                       points_per_block=args.points_per_block)
    text = _rows_to_csv(["block_centre", "envelope"], zip(est.freqs, est.envelope))
    return text, {"fitted_order": order_to_json(est.fitted_order), "field": red.field.name, "xi": red.xi,
                  "wrap": red.wrap}, None, EXIT_OK


COMMANDS: dict[str, Callable] = {
    "char": cmd_char, "rajchman-fit": cmd_rajchman_fit, "equidist": cmd_equidist, "cov": cmd_cov,
    "decay-fit": cmd_decay_fit, "bound-check": cmd_bound_check, "phase": cmd_phase,
    "critical-scan": cmd_critical_scan, "borel-cantelli": cmd_borel_cantelli, "mstp": cmd_mstp, "cf": cmd_cf,
    "dio": cmd_dio, "rajchman-dio": cmd_rajchman_dio, "lie-cov": cmd_lie_cov, "lie-reduce": cmd_lie_reduce,
}


# --- parser ---------------------------------------------------------------------


def _positive(kind):
    def conv(text):
        v = kind(float(text)) if kind is int else kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kshear", description="Keplerian shear experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out-dir", default=".")
        sp.add_argument("--stem", default=None, help="output file stem (default: command name)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=_positive(int), default=int(os.environ.get(THREADS_ENV, "1")))
        return sp

    def time_args(sp, t_min=1.0, t_max=1e4, ratio=1.25):
        sp.add_argument("--t-min", type=_positive(float), default=t_min)
        sp.add_argument("--t-max", type=_positive(float), default=t_max)
        sp.add_argument("--ratio", type=float, default=ratio)

    sp = add("char", "Fourier transform table of a measure")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--t", default=None, help="comma-separated frequencies")
    time_args(sp)
    sp.add_argument("--n-points", type=_positive(int), default=64)

    sp = add("rajchman-fit", "fitted Rajchman order")
    sp.add_argument("--measure", required=True)
    time_args(sp)
    sp.add_argument("--blocks", type=int, default=16)
    sp.add_argument("--real-grid", action="store_true")

    sp = add("equidist", "KS distance of (n x / a) mod 1 from uniform")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--n", default="1,10,100,1000")
    sp.add_argument("--a", type=_positive(float), default=1.0)
    sp.add_argument("--samples", type=_positive(int), default=100_000)

    sp = add("cov", "expected conditional covariance curve")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--f1", default="mode:1,1")
    sp.add_argument("--f2", default="mode:1,1")
    sp.add_argument("--base-dir", default=".")
    sp.add_argument("--time-kind", choices=["discrete", "continuous"], default="discrete")
    sp.add_argument("--method", choices=["spectral", "monte_carlo"], default="spectral")
    sp.add_argument("--samples", type=_positive(int), default=100_000)
    time_args(sp)

    sp = add("decay-fit", "fit the decay order of a covariance curve CSV")
    sp.add_argument("--curve", required=True)
    sp.add_argument("--blocks", type=int, default=16)

    sp = add("bound-check", "check a decay order against [min(s/2-1, r), r]")
    sp.add_argument("--curve", default=None)
    sp.add_argument("--gamma", default=None)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--r", default=None, help="Rajchman order or 'inf'")
    sp.add_argument("--measure", default=None, help="fit r from this measure instead")
    sp.add_argument("--r-t-max", type=float, default=1e4)
    sp.add_argument("--tol", type=float, default=0.15)

    sp = add("phase", "oscillatory integrals of a velocity field and their decay order")
    sp.add_argument("--field", default="cos")
    sp.add_argument("--field-csv", default=None)
    sp.add_argument("--xi", type=int, default=1)
    time_args(sp, 10.0, 1e4)
    sp.add_argument("--n-points", type=_positive(int), default=240)
    sp.add_argument("--blocks", type=int, default=12)
    sp.add_argument("--quad", choices=["filon", "dense"], default="filon")

    sp = add("critical-scan", "critical points of xi * v and their orders")
    sp.add_argument("--field", default="cos")
    sp.add_argument("--field-csv", default=None)
    sp.add_argument("--xi", type=int, default=1)
    sp.add_argument("--grid-size", type=_positive(int), default=512)

    sp = add("borel-cantelli", "shrinking-target hit counts along transvection orbits")
    sp.add_argument("--measure", default="kind=uniform")
    sp.add_argument("--C", type=_positive(float), default=1.0)
    sp.add_argument("--p", type=float, default=0.25)
    sp.add_argument("--N", type=_positive(int), default=100_000)
    sp.add_argument("--orbits", type=_positive(int), default=100)
    sp.add_argument("--K", type=float, default=20.0, help="deviation bound constant")

    sp = add("mstp", "monotone shrinking targets for a circle rotation")
    sp.add_argument("--alpha", required=True, help="number or expression, e.g. 'sqrt(2)-1'")
    sp.add_argument("--s", type=_positive(float), default=1.0)
    sp.add_argument("--C", type=_positive(float), default=1.0)
    sp.add_argument("--points", type=_positive(int), default=1000)
    sp.add_argument("--N", type=_positive(int), default=100_000)

    for name, help_ in (("cf", "continued fraction expansion"), ("dio", "Diophantine exponent estimate")):
        sp = add(name, help_)
        sp.add_argument("--x", required=True, help="rational (22/7), expression (sqrt(2)) or liouville[:terms]")
        sp.add_argument("--depth", type=int, default=40)
        sp.add_argument("--bits", type=_positive(int), default=512)

    sp = add("rajchman-dio", "Diophantine exponents of samples against 1/r - 1 + margin")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--samples", type=_positive(int), default=200)
    sp.add_argument("--depth", type=int, default=30)
    sp.add_argument("--r", default=None)
    sp.add_argument("--margin", type=float, default=0.5)
    sp.add_argument("--max-violation", type=float, default=0.05)

    for name, help_ in (("lie-cov", "covariance decay of a rotation flow"),
                        ("lie-reduce", "Rajchman order of the reduced angular-speed measure")):
        sp = add(name, help_)
        sp.add_argument("--measure", default="kind=uniform")
        sp.add_argument("--omega", default="linear")
        sp.add_argument("--axis", default="0,0,1")
        sp.add_argument("--indices", default="0,0,0,0")
        sp.add_argument("--group", choices=["so3", "su2"], default="so3")
        time_args(sp, 1.0, 200.0)
        sp.add_argument("--blocks", type=int, default=16)
        if name == "lie-cov":
            sp.add_argument("--n-points", type=_positive(int), default=256)
            sp.add_argument("--samples", type=_positive(int), default=100_000)
        else:
            sp.add_argument("--points-per-block", type=_positive(int), default=32)
    return p


def _summary(command: str, args, outputs: dict, result: dict, verdict: Optional[str]) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("command",)}
    return _jsonable({
        "schema_version": 1,
        "command": command,
        "version": __version__,
        "seed": args.seed,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
        "config": config,
        "outputs": outputs,
        "result": result,
        "verdict": verdict,
    })


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv or (argv[0] not in COMMANDS and argv[0] not in ("-h", "--help", "--version")):
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"unknown command {argv[0] if argv else '(none)'}; known: {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_UNKNOWN
    try:
        args = parser.parse_args(argv)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    out_dir = Path(args.out_dir)
    stem = args.stem or args.command
    try:
        with threadpool_limits(limits=args.threads):
            text, result, verdict, code = COMMANDS[args.command](args)
    except (PreconditionError, ValueError, KeyError, NotImplementedError, FileNotFoundError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    csv_path.write_text(text)
    summary = _summary(args.command, args, {"csv": str(csv_path)}, result, verdict)
    jsonschema.validate(summary, _load_schema())
    (out_dir / f"{stem}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if verdict is not None:
        print(f"{args.command}: {verdict}")
    return code


if __name__ == "__main__":
    sys.exit(main())
