"""Continued fractions and Diophantine exponent estimates.

Partial quotients are certified with interval arithmetic: the expansion stops
as soon as the enclosing interval straddles an integer, instead of silently
producing quotients of the rounding error. Convergents are exact integers.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath
import numpy as np
from mpmath import iv

from .decay import is_infinite

Real = Union[int, float, Fraction, str, "mpmath.mpf"]

DIVERGENCE_THRESHOLD = 10.0


@dataclass(frozen=True)
class ContinuedFraction:
    """``x = [a0; a1, a2, ...]`` with convergents ``p_k / q_k``.

    ``rational`` marks an expansion that terminated exactly;
    ``precision_exhausted`` one that stopped because the working precision
    could not certify the next quotient.
    """

    quotients: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]
    rational: bool = False
    precision_exhausted: bool = False

    @property
    def depth(self) -> int:
        """Index of the last certified quotient."""
        return len(self.quotients) - 1

    def convergent(self, k: int) -> Fraction:
        return Fraction(self.p[k], self.q[k])


def convergents(quotients: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    p_prev, p = 1, int(quotients[0])
    q_prev, q = 0, 1
    ps, qs = [p], [q]
    for a in quotients[1:]:
        p_prev, p = p, int(a) * p + p_prev
        q_prev, q = q, int(a) * q + q_prev
        ps.append(p)
        qs.append(q)
    return tuple(ps), tuple(qs)


_IV_NAMES = {"sqrt": iv.sqrt, "pi": None, "e": None, "exp": iv.exp, "log": iv.log, "phi": None}


def _interval(x, bits: int):
    """Enclosing interval of ``x`` at the current interval precision."""
    if isinstance(x, str):
        ns = dict(_IV_NAMES, pi=iv.pi, e=iv.e, phi=(1 + iv.sqrt(5)) / 2)
        return iv.mpf(eval(x, {"__builtins__": {}}, ns))
    if isinstance(x, float):
        # a float stands for a value known to half an ulp
        u = math.ulp(x)
        return iv.mpf([x - u, x + u])
    if isinstance(x, mpmath.mpf):
        u = abs(x) * mpmath.mpf(2) ** (-mpmath.mp.prec) + mpmath.mpf(2) ** (-mpmath.mp.prec - 64)
        return iv.mpf([x - u, x + u])
    if isinstance(x, iv.mpf):
        return x
    raise TypeError(f"cannot expand {type(x).__name__}")


def cf_expand(x: Real, depth: int = 40, precision_bits: int = 512) -> ContinuedFraction:
    """Gauss-map expansion of ``x`` up to quotient ``a_depth``.

    ``int`` and ``Fraction`` are expanded exactly (finite for rationals).
    Strings are evaluated in interval arithmetic with ``sqrt``, ``exp``,
    ``log``, ``pi``, ``e`` and ``phi`` available, e.g. ``"sqrt(2)"``. Floats
    and ``mpf`` values are treated as approximations known to one ulp.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    quotients: list[int] = []
    rational = exhausted = False
    if isinstance(x, (int, Fraction)):
        r = Fraction(x)
        while len(quotients) <= depth:
            a = math.floor(r)
            quotients.append(a)
            r -= a
            if r == 0:
                rational = True
                break
            r = 1 / r
    else:
        saved = iv.prec
        iv.prec = precision_bits
        try:
            v = _interval(x, precision_bits)
            while len(quotients) <= depth:
                lo, hi = int(mpmath.floor(v.a)), int(mpmath.floor(v.b))
                if lo != hi:
                    exhausted = True
                    break
                quotients.append(lo)
                rem = v - lo
                if rem.a <= 0:
                    if rem.a == 0 and rem.b == 0:
                        rational = True
                    else:
                        exhausted = True
                    break
                v = 1 / rem
        finally:
            iv.prec = saved
    if not quotients:
        raise ValueError("precision too low to certify the integer part")
    p, q = convergents(quotients)
    return ContinuedFraction(tuple(quotients), p, q, rational, exhausted)


@dataclass(frozen=True)
class DioEstimate:
    """Per-level exponents ``s_k = log q_{k+1} / log q_k`` and their maximum
    over the deepest half of the levels (``k > depth / 2``)."""

    levels: np.ndarray
    exponents: np.ndarray
    estimate: float
    depth: int
    verdict: str
    truncated: bool = False

    @property
    def running_max(self) -> np.ndarray:
        return np.maximum.accumulate(self.exponents)

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "depth": self.depth, "verdict": self.verdict,
                "truncated": self.truncated, "levels": [int(k) for k in self.levels],
                "exponents": [float(s) for s in self.exponents]}


def dio_estimate(cf: ContinuedFraction, min_depth: int = 5) -> DioEstimate:
    """Diophantine exponent proxy from the convergent denominators.

    ``|q_k x - p_k|`` is of order ``1/q_{k+1}``, so ``s_k`` is the local
    exponent at level ``k``. The verdict is ``diverging`` when the last
    exponent exceeds 10 and is still increasing, ``finite`` otherwise.
    """
    if cf.depth < min_depth:
        raise ValueError(f"need depth >= {min_depth}, expansion has {cf.depth}"
                         + (" (precision exhausted)" if cf.precision_exhausted else ""))
    levels, exps = [], []
    for k in range(1, cf.depth):
        if cf.q[k] >= 2:
            levels.append(k)
            exps.append(math.log(cf.q[k + 1]) / math.log(cf.q[k]))
    if len(exps) < 2:
        raise ValueError("too few levels with q_k >= 2")
    exps_a = np.array(exps)
    levels_a = np.array(levels)
    deep = exps_a[levels_a > cf.depth / 2]
    if deep.size == 0:
        deep = exps_a[-1:]
    est = float(deep.max())
    diverging = exps_a[-1] > DIVERGENCE_THRESHOLD and exps_a[-1] > exps_a[-2]
    return DioEstimate(levels_a, exps_a, est, cf.depth, "diverging" if diverging else "finite",
                       cf.precision_exhausted)


def liouville_constant(terms: int = 7) -> Fraction:
    """Partial sum ``sum_{k=1}^{terms} 10^(-k!)``; agrees with the Liouville
    constant far beyond any convergent reachable at depth ``<= terms``."""
    return sum((Fraction(1, 10 ** math.factorial(k)) for k in range(1, terms + 1)), Fraction(0))


@dataclass
class DioCheck:
    """Outcome of the statistical check ``Dio(alpha) <= bound`` over samples."""

    violation_fraction: float
    bound: float
    r_hat: object
    vacuous: bool
    estimates: list = field(default_factory=list)
    depths: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "depth_used", "dio_estimate", "verdict"])
        for i, (d, e, v) in enumerate(zip(self.depths, self.estimates, self.verdicts)):
            w.writerow([i, d, "" if e is None else repr(float(e)), v])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def dio_bound(r_hat, margin: float = 0.5) -> float:
    """``1/r - 1 + margin``, capped at ``1 + margin`` once ``r > 1/2`` (a.c. regime)."""
    if is_infinite(r_hat) or r_hat > 0.5:
        return 1.0 + margin
    if r_hat <= 0:
        return math.inf
    return 1.0 / r_hat - 1.0 + margin


def exact_samples(m, rng: np.random.Generator, n: int) -> list:
    """Samples reduced mod 1, as exact fractions when the measure supports it."""
    if hasattr(m, "sample_exact"):
        xs = m.sample_exact(rng, n)
        return [x - math.floor(x) for x in xs]
    if getattr(m, "kind", None) == "uniform":
        return [Fraction(int(v), 1 << 256) for v in (int.from_bytes(rng.bytes(32), "big") for _ in range(n))]
    return [float(v) for v in np.mod(m.sample(rng, n), 1.0)]


def rajchman_dio_check(m, n_samples: int = 200, depth: int = 30, seed: int = 0, r_hat=None,
                       margin: float = 0.5, t_max: float = 1e4) -> DioCheck:
    """Fraction of samples ``alpha ~ m`` whose estimated ``Dio(alpha)`` exceeds
    ``1/r - 1 + margin``. ``r = 0`` makes the bound vacuous (flagged)."""
    if r_hat is None:
        from .measures import rajchman_fit
        r_hat = rajchman_fit(m, 1, t_max).fitted_order
    bound = dio_bound(r_hat, margin)
    rng = np.random.default_rng(seed)
    ests, depths, verdicts = [], [], []
    violations = 0
    for x in exact_samples(m, rng, n_samples):
        cf = cf_expand(x, depth)
        try:
            d = dio_estimate(cf)
        except ValueError:
            ests.append(None)
            depths.append(cf.depth)
            verdicts.append("too_shallow")
            continue
        ests.append(d.estimate)
        depths.append(d.depth)
        bad = d.estimate > bound or d.verdict == "diverging"
        verdicts.append("violation" if bad else "ok")
        violations += bad
    usable = sum(v != "too_shallow" for v in verdicts)
    frac = violations / usable if usable else math.nan
    return DioCheck(frac, bound, r_hat, math.isinf(bound), ests, depths, verdicts)
