"""Push-forward measures of velocity fields and oscillatory integrals.

For a velocity ``v`` on the circle and a base measure ``mu`` the relevant
object is the law of ``xi * v(x)`` under ``mu``. With Lebesgue base its Fourier
transform is the oscillatory integral ``int_0^1 exp(2i pi t xi v(x)) dx``,
whose decay is governed by the most degenerate critical point of ``v``: a
critical point of order ``l - 1`` gives ``|I(t)| ~ t^(-1/l)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from .decay import DecayEstimate, fit_envelope

_GL10 = np.polynomial.legendre.leggauss(10)
_SQRT_PI_HALF_E = 0.5 * math.sqrt(math.pi) * np.exp(0.25j * math.pi)
_EIPI4 = np.exp(0.25j * math.pi)


class QuadratureBudgetError(RuntimeError):
    """Dense quadrature would need more panels than allowed; use ``quad='filon'``."""


class GridTooCoarse(ValueError):
    def __init__(self, suggested: int):
        super().__init__(f"critical point scan grid too coarse; retry with grid_size >= {suggested}")
        self.suggested = suggested


# --- derivative estimation -------------------------------------------------

_TAYLOR_DEG = 10
_TAYLOR_J = np.arange(-10, 11)
_TAYLOR_PINV = np.linalg.pinv(np.vander(_TAYLOR_J.astype(float), _TAYLOR_DEG + 1, increasing=True))
_FACT = np.array([math.factorial(m) for m in range(_TAYLOR_DEG + 1)], dtype=float)


def taylor_derivatives(func: Callable, points, max_order: int = 6, h: float = 0.01) -> np.ndarray:
    """Derivatives ``0..max_order`` of ``func`` at ``points`` from a local
    degree-10 least-squares fit on 21 equispaced samples of spacing ``h``.

    Returns an array of shape ``(len(points), max_order + 1)``.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    samples = func(pts[:, None] + h * _TAYLOR_J[None, :])
    coef = samples @ _TAYLOR_PINV.T
    m = np.arange(max_order + 1)
    return coef[:, : max_order + 1] * _FACT[m] / h ** m


# --- velocity fields --------------------------------------------------------


@dataclass
class VelocityField1D:
    """Velocity on the circle with declared critical points ``(location, order)``.

    ``smoothness`` is ``l`` = (largest declared critical order) + 1; with no
    critical points it is 1 (non-stationary phase).
    """

    eval: Callable[[np.ndarray], np.ndarray]
    declared_critical_points: list = field(default_factory=list)
    name: str = "custom"
    verify: bool = True
    periodic: bool = True
    _scales: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.verify:
            for loc, q in self.declared_critical_points:
                check_critical_order(self, loc, q)

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    @property
    def smoothness(self) -> int:
        if not self.declared_critical_points:
            return 1
        return max(q for _, q in self.declared_critical_points) + 1

    def derivative_scales(self, max_order: int = 6, grid: int = 512) -> np.ndarray:
        """``max |v^(m)|`` over a grid, ``m = 0..max_order``."""
        if self._scales is None or self._scales.size < max_order + 1:
            x = np.arange(grid) / grid
            d = taylor_derivatives(self.eval, x, max_order)
            self._scales = np.abs(d).max(axis=0)
        return self._scales[: max_order + 1]

    def derivative(self, x, order: int = 1) -> np.ndarray:
        return taylor_derivatives(self.eval, x, order)[:, order]


def check_critical_order(fieldv: VelocityField1D, loc: float, q: int) -> None:
    scales = fieldv.derivative_scales(max(6, q + 1))
    d = taylor_derivatives(fieldv.eval, [loc], q + 1)[0]
    for m in range(1, q + 1):
        if abs(d[m]) > 1e-5 * max(scales[m], 1e-300):
            raise ValueError(f"declared critical point {loc} of order {q}: derivative {m} = {d[m]:.3g} does not vanish")
    if abs(d[q + 1]) < 1e-3 * scales[q + 1]:
        raise ValueError(f"declared critical point {loc} of order {q}: derivative {q + 1} vanishes too")


def _cos(x):
    return np.cos(2 * np.pi * x)


def _cos_quartic(x):
    # v' = -2 pi sin(2 pi x) (1 + cos(2 pi x)): triple zero at x = 1/2
    return np.cos(2 * np.pi * x) + 0.25 * np.cos(4 * np.pi * x)


def _cos_sextic(x):
    # v' = -(3 pi / 4) sin(2 pi x) (1 + cos(2 pi x))^2: fifth-order zero at x = 1/2
    return (1 + np.cos(2 * np.pi * x)) ** 3 / 8


def _linear(x):
    return np.asarray(x, dtype=float)


def catalog_field(name: str, **kw) -> VelocityField1D:
    """Built-in fields: ``cos`` (l=2), ``cos_quartic`` (l=4), ``cos_sextic``
    (l=6), ``linear`` (v(x) = x on the chart [0, 1)), ``const`` (``value``)."""
    if name == "cos":
        return VelocityField1D(_cos, [(0.0, 1), (0.5, 1)], "cos")
    if name == "cos_quartic":
        return VelocityField1D(_cos_quartic, [(0.0, 1), (0.5, 3)], "cos_quartic")
    if name == "cos_sextic":
        return VelocityField1D(_cos_sextic, [(0.0, 1), (0.5, 5)], "cos_sextic")
    if name == "linear":
        return VelocityField1D(_linear, [], "linear", periodic=False)
    if name == "const":
        c = float(kw.get("value", 0.3))
        return VelocityField1D(lambda x: np.full(np.shape(x), c), [], "const")
    raise KeyError(f"unknown field {name!r}")


FIELD_NAMES = ("cos", "cos_quartic", "cos_sextic", "linear", "const")


def piecewise_polynomial_field(breakpoints, coefficients, name: str = "piecewise",
                               critical_points=()) -> VelocityField1D:
    """``v(x) = sum_m c[i][m] (x - b_i)^m`` on ``[b_i, b_{i+1})``, extended 1-periodically."""
    b = np.asarray(breakpoints, dtype=float)
    coefs = [np.asarray(c, dtype=float) for c in coefficients]
    if b.size != len(coefs) or b[0] != 0.0 or np.any(np.diff(b) <= 0) or b[-1] >= 1.0:
        raise ValueError("breakpoints must start at 0, increase, and stay below 1, one per coefficient row")

    def ev(x):
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        i = np.clip(np.searchsorted(b, x, side="right") - 1, 0, b.size - 1)
        out = np.zeros_like(x)
        for k, c in enumerate(coefs):
            sel = i == k
            out[sel] = np.polynomial.polynomial.polyval(x[sel] - b[k], c)
        return out

    return VelocityField1D(ev, list(critical_points), name)


def load_piecewise_csv(path) -> VelocityField1D:
    """CSV rows ``breakpoint, c0, c1, ...``."""
    bps, coefs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                vals = [float(v) for v in row if v.strip() != ""]
            except ValueError:
                continue
            bps.append(vals[0])
            coefs.append(vals[1:])
    return piecewise_polynomial_field(bps, coefs, name=str(path))


# --- oscillatory integrals --------------------------------------------------


def _gtilde(z):
    """``exp(-i z^2) * int_z^inf exp(i s^2) ds`` for real ``z >= 0``; bounded."""
    return _SQRT_PI_HALF_E * special.wofz(_EIPI4 * z)


def quadratic_phase_integral(a, b, c, w):
    """``int_{-w}^{w} exp(i (a + b u + c u^2)) du``, vectorised over panels.

    Three regimes: nearly constant phase (Gauss-Legendre on the model),
    negligible curvature (linear phase plus first-order curvature
    correction), and the general case via the Faddeeva function, arranged so
    that no large phase is exponentiated on its own.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    out = np.empty(a.shape, dtype=complex)
    bw = np.abs(b) * w
    cw2 = np.abs(c) * w * w
    reg_a = bw + cw2 <= 1.0
    reg_b = ~reg_a & (cw2 < 1e-9)
    reg_c = ~reg_a & ~reg_b

    if np.any(reg_a):
        nodes, weights = _GL10
        u = w * nodes
        ph = b[reg_a, None] * u[None, :] + c[reg_a, None] * u[None, :] ** 2
        out[reg_a] = w * (np.exp(1j * ph) @ weights)

    if np.any(reg_b):
        bb, cc = b[reg_b], c[reg_b]
        s, co = np.sin(bb * w), np.cos(bb * w)
        m0 = 2 * s / bb
        m2 = 2 * (w * w * s / bb + 2 * w * co / bb ** 2 - 2 * s / bb ** 3)
        out[reg_b] = m0 + 1j * cc * m2

    if np.any(reg_c):
        bb, cc = b[reg_c], c[reg_c]
        neg = cc < 0
        # I(b, c) = conj(I(-b, -c)): reduce to c > 0
        bb = np.where(neg, -bb, bb)
        cc = np.abs(cc)
        alpha = np.sqrt(cc)
        beta = bb / (2 * cc)
        z2 = alpha * (w + beta)
        z1 = alpha * (beta - w)
        e_hi = np.exp(1j * (cc * w * w + bb * w))
        e_lo = np.exp(1j * (cc * w * w - bb * w))
        val = np.empty(bb.shape, dtype=complex)
        pos = z1 >= 0
        negz = z2 <= 0
        mid = ~pos & ~negz
        # F(z2) - F(z1) with F(z) = int_0^z exp(i s^2) ds, F odd, G = tail from z
        val[pos] = e_lo[pos] * _gtilde(z1[pos]) - e_hi[pos] * _gtilde(z2[pos])
        val[negz] = e_hi[negz] * _gtilde(-z2[negz]) - e_lo[negz] * _gtilde(-z1[negz])
        if np.any(mid):
            full = 2 * _SQRT_PI_HALF_E * np.exp(-1j * cc[mid] * beta[mid] ** 2)
            val[mid] = full - e_hi[mid] * _gtilde(z2[mid]) - e_lo[mid] * _gtilde(-z1[mid])
        val /= alpha
        val = np.where(neg, np.conj(val), val)
        out[reg_c] = val

    return np.exp(1j * a) * out


@lru_cache(maxsize=32)
def _filon_nodes(n_panels: int):
    return np.arange(2 * n_panels + 1) / (2 * n_panels)


def _filon_panels(fieldv: VelocityField1D, xi: int, t: float, phase_tol: float) -> int:
    m3 = fieldv.derivative_scales(6)[3]
    k = 2 * np.pi * abs(t * xi) * max(m3, 1e-300)
    # quadratic interpolation residual <= m3 * 0.064 w^3 in phase units
    w = (phase_tol / (0.064 * k)) ** (1 / 3) if k > 0 else 0.5
    return int(max(64, math.ceil(1 / (2 * w))))


def oscillatory_integral(fieldv: VelocityField1D, xi: int, t: float, quad: str = "filon",
                         weight: Optional[Callable] = None, max_panels: int = 200_000,
                         phase_tol: float = 1e-10, panel_multiple: int = 1) -> complex:
    """``int_0^1 w(x) exp(2i pi t xi v(x)) dx`` (``w = 1`` by default).

    ``dense``: composite 10-point Gauss-Legendre with at least 20 panels per
    oscillation; raises :class:`QuadratureBudgetError` past ``max_panels``.
    ``filon``: the phase is interpolated quadratically on each panel and the
    panel integrals are done in closed form, so the panel count grows like
    ``t^(1/3)`` rather than ``t``. A weight is applied at panel midpoints in
    this mode. ``panel_multiple`` rounds the dense panel count up to a
    multiple, so that panels can be aligned with jumps of a piecewise weight.
    """
    if t < 0:
        raise ValueError("need t >= 0")
    if t == 0:
        if weight is None:
            return 1.0 + 0j
        quad = "dense"
    if quad == "dense":
        vmax1 = fieldv.derivative_scales(6)[1]
        n = int(max(64, math.ceil(20 * abs(t * xi) * vmax1)))
        n = -(-n // panel_multiple) * panel_multiple
        if n > max_panels:
            raise QuadratureBudgetError(f"dense quadrature needs {n} panels (> {max_panels}); use quad='filon'")
        nodes, weights = _GL10
        left = np.arange(n) / n
        x = left[:, None] + (nodes[None, :] + 1) / (2 * n)
        vals = np.exp(2j * np.pi * t * xi * fieldv(x))
        if weight is not None:
            vals = vals * weight(x)
        return complex((vals @ weights).sum() / (2 * n))
    if quad != "filon":
        raise ValueError("quad must be 'filon' or 'dense'")
    n = _filon_panels(fieldv, xi, t, phase_tol)
    x = _filon_nodes(n)
    phi = 2 * np.pi * t * xi * fieldv(x)
    lo, mid, hi = phi[0:-1:2], phi[1::2], phi[2::2]
    w = 1.0 / (2 * n)
    b = (hi - lo) / (2 * w)
    c = (hi - 2 * mid + lo) / (2 * w * w)
    # keep the panel constant term small before exponentiating
    a = np.mod(mid, 2 * np.pi)
    panels = quadratic_phase_integral(a, b, c, w)
    if weight is not None:
        panels = panels * weight(x[1::2])
    return complex(panels.sum())


def oscillatory_curve(fieldv: VelocityField1D, xi: int, t_grid, quad: str = "filon", **kw) -> np.ndarray:
    return np.array([oscillatory_integral(fieldv, xi, float(t), quad, **kw) for t in np.asarray(t_grid)])


def phase_decay_order(fieldv: VelocityField1D, xi: int, t_grid, blocks: int = 12, quad: str = "filon",
                      **kw) -> DecayEstimate:
    """Fitted decay order of ``|oscillatory_integral|``; compare with ``1/l``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 24:
        raise ValueError("phase_decay_order needs at least 24 grid points")
    vals = oscillatory_curve(fieldv, xi, t_grid, quad, **kw)
    return fit_envelope(t_grid, vals, blocks=blocks)


# --- critical points ---------------------------------------------------------


@dataclass(frozen=True)
class DegenerateField:
    """``xi * v`` is (numerically) constant: every point is critical."""

    max_derivative: float


def critical_points_scan(fieldv: VelocityField1D, xi: int = 1, grid_size: int = 512,
                         max_order: int = 6):
    """Critical points of ``xi * v`` on the circle with estimated orders.

    Sign changes of the derivative are bisected; even-order points (no sign
    change) are found as near-zero local minima of ``|v'|``. Orders come from
    local Taylor fits, thresholded relative to ``max |v^(m)|`` over the grid.
    Returns a sorted list of ``(location, order)``, or :class:`DegenerateField`.
    """
    scales = np.abs(xi) * fieldv.derivative_scales(max_order + 1)
    vscale = max(scales[0], 1.0)
    if scales[1] < 1e-10 * vscale:
        return DegenerateField(float(scales[1]))

    def d1(x):
        return xi * taylor_derivatives(fieldv.eval, x, 1, h=1e-3)[:, 1]

    def sign_changes(n):
        g = np.arange(n) / n
        d = d1(g)
        zero = np.abs(d) <= 1e-9 * scales[1]
        s = np.sign(np.where(zero, 0, d))
        nxt = np.roll(s, -1)
        if not fieldv.periodic:
            nxt[-1] = s[-1]
        return g, d, zero, s, nxt

    g, d, zero, s, nxt = sign_changes(grid_size)
    n_changes = int(np.sum((s * nxt) < 0))
    fine = sign_changes(4 * grid_size)
    if int(np.sum((fine[3] * fine[4]) < 0)) > n_changes:
        raise GridTooCoarse(4 * grid_size)

    h = 1.0 / grid_size
    roots = [float(x) for x in g[zero]]
    for i in np.flatnonzero((s * nxt) < 0):
        lo, hi = g[i], g[i] + h
        f = lambda x: float(d1(np.array([x]))[0])
        roots.append(optimize.brentq(f, lo, hi, xtol=1e-10) % 1.0)
    # even-order candidates: |v'| dips towards zero without a sign change
    mag = np.abs(d)
    left, right = np.roll(mag, 1), np.roll(mag, -1)
    dips = np.flatnonzero((mag <= left) & (mag <= right) & (mag < 1e-2 * scales[1]) & ~zero)
    for i in dips:
        if s[i] * nxt[i] < 0 or s[i] * np.roll(s, 1)[i] < 0:
            continue
        res = optimize.minimize_scalar(lambda x: abs(float(d1(np.array([x]))[0])),
                                       bounds=(g[i] - h, g[i] + h), method="bounded",
                                       options={"xatol": 1e-10})
        if abs(res.fun) < 1e-6 * scales[1]:
            roots.append(res.x % 1.0)

    # merge candidates from the same cell; high-order zeros are flat and noisy
    found: list[list[float]] = []
    for r in sorted(roots):
        if found and min(abs(r - found[-1][-1]), 1 - abs(r - found[-1][-1])) <= 2 * h:
            found[-1].append(r)
        else:
            found.append([r])
    if len(found) > 1 and fieldv.periodic and 1 - found[-1][-1] + found[0][0] <= 2 * h:
        found[0] = found.pop() + found[0]

    def order_at(r):
        der = np.abs(xi * taylor_derivatives(fieldv.eval, [r], max_order + 1)[0])
        for m in range(2, max_order + 2):
            if der[m] > 1e-3 * scales[m]:
                return m - 1
        return max_order

    out = []
    for cluster in found:
        r = min(cluster, key=lambda x: abs(float(d1(np.array([x]))[0])))
        q = order_at(r)
        if q >= 2:
            # v^(q) has a simple zero at the critical point: locate it instead
            dq = lambda x: float(taylor_derivatives(fieldv.eval, [x], q)[0, q])
            lo, hi = r - 2 * h, r + 2 * h
            if dq(lo) * dq(hi) < 0:
                r = optimize.brentq(dq, lo, hi, xtol=1e-12) % 1.0
                q = order_at(r)
        loc = 0.0 if min(r, 1 - r) < 1e-9 else r
        out.append((loc, q))
    return sorted(out)


# --- push-forward measures -------------------------------------------------


@dataclass
class PushforwardSpec:
    """Law of ``xi * v(x)``, ``x ~ base``; ``wrap='mod1'`` reduces it to the
    circle and removes the zero fibre."""

    base: object
    field: VelocityField1D
    xi: int = 1
    wrap: str = "none"

    def __post_init__(self):
        if self.xi == 0:
            raise ValueError("xi must be nonzero")
        if self.wrap not in ("none", "mod1"):
            raise ValueError("wrap must be 'none' or 'mod1'")

    def values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = self.xi * self.field(np.mod(x, 1.0))
        if self.wrap == "none":
            return s, np.ones(s.shape, dtype=bool)
        s = np.mod(s, 1.0)
        keep = np.minimum(s, 1 - s) > 1e-12
        return s, keep

    def char(self, t):
        """Deterministic transform: exact for atomic/empirical bases, dense
        quadrature against the density for uniform and grid bases."""
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        kind = getattr(self.base, "kind", None)
        if kind in ("atomic", "empirical"):
            pos = self.base.positions if kind == "atomic" else self.base.samples
            w = self.base.weights if kind == "atomic" else np.full(pos.size, 1.0 / pos.size)
            s, keep = self.values(pos)
            if not np.any(keep):
                raise ValueError("degenerate push-forward: every sample lies in the zero fibre")
            w = w[keep] / w[keep].sum()
            out = np.exp(2j * np.pi * np.multiply.outer(flat, s[keep])) @ w
            return out.reshape(t.shape)
        multiple = 1
        if kind == "uniform":
            weight = None
        elif kind == "density":
            g = self.base.cells
            vals = self.base.values
            weight = lambda x: vals[np.minimum((np.mod(x, 1.0) * g).astype(int), g - 1)]
            multiple = g
        else:
            raise ValueError(f"no deterministic transform for base {kind!r}; use pushforward_char")
        if self.wrap == "mod1":
            # reduction mod 1 does not change the transform at integer t
            if np.any(np.mod(flat, 1.0) != 0):
                raise ValueError("wrapped push-forward is a circle measure: integer t only")
        out = np.array([oscillatory_integral(self.field, self.xi, abs(float(tt)), "dense", weight=weight,
                                             max_panels=2_000_000, panel_multiple=multiple) for tt in flat])
        out = np.where(flat < 0, np.conj(out), out)
        return out.reshape(t.shape)


def pushforward_char(spec: PushforwardSpec, t: float, n_samples: int = 100_000, seed: int = 0) -> tuple[complex, float]:
    """Monte-Carlo transform ``E exp(2i pi t s)`` of the push-forward and its stderr."""
    rng = np.random.default_rng(seed)
    x = spec.base.sample(rng, n_samples)
    s, keep = spec.values(x)
    if not np.any(keep):
        raise ValueError("degenerate push-forward: every sample lies in the zero fibre")
    z = np.exp(2j * np.pi * t * s[keep])
    n = z.size
    if n == 1:
        return complex(z[0]), 0.0
    err = float(np.sqrt((z.real.var(ddof=1) + z.imag.var(ddof=1)) / n))
    return complex(z.mean()), err
