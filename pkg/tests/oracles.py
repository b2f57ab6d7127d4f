"""Independent reference computations used by the tests.

None of these call into the spectral or Filon code paths: they integrate the
defining formulas directly, by tensor quadrature, series or sampling.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate, special


def _x_nodes(base, n_x: int = 512):
    """Nodes and weights integrating functions of ``x`` against ``base``."""
    kind = base.kind
    if kind == "uniform":
        return (np.arange(n_x) + 0.5) / n_x, np.full(n_x, 1.0 / n_x)
    if kind == "atomic":
        return base.positions, base.weights
    if kind == "density":
        cells = base.cells
        per = n_x // cells
        nodes, weights = np.polynomial.legendre.leggauss(per)
        left = np.arange(cells)[:, None] / cells
        x = left + (nodes[None, :] + 1) / (2 * cells)
        w = base.values[:, None] * weights[None, :] / (2 * cells)
        return x.ravel(), w.ravel()
    raise ValueError(kind)


def _grid_values(modes, coeffs, x, y, t: int = 0) -> np.ndarray:
    """``sum c e(k1 x + k2 (y + t x))`` on the tensor grid ``x (x) y``.

    Each term factors as ``e((k1 + t k2) x) e(k2 y)``, so the grid values are
    one small matrix product instead of a loop over grid points.
    """
    modes = np.asarray(modes).reshape(-1, 2)
    ex = np.exp(2j * np.pi * np.outer(x, modes[:, 0] + t * modes[:, 1]))
    ey = np.exp(2j * np.pi * np.outer(modes[:, 1], y))
    return (ex * np.asarray(coeffs)[None, :]) @ ey


def quadrature_cov(base, f1, f2, t: int, n_x: int = 512, n_y: int = 512) -> complex:
    """``E[conj f1 f2 o T^t] - E[conj E(f1|x) E(f2 o T^t|x)]`` on a tensor grid.

    The ``y`` rule is the periodic trapezoid, exact for the degrees involved;
    the ``x`` rule is midpoint (uniform), Gauss-Legendre per cell (density)
    or the exact atom sum.
    """
    x, wx = _x_nodes(base, n_x)
    y = np.arange(n_y) / n_y
    g1 = _grid_values(f1.modes, f1.coeffs, x, y)
    g2 = _grid_values(f2.modes, f2.coeffs, x, y, t)
    joint = (np.conj(g1) * g2).mean(axis=1)
    # conditional expectations: average over the fibre first
    e1 = g1.mean(axis=1)
    e2 = g2.mean(axis=1)
    return complex(np.sum(wx * (joint - np.conj(e1) * e2)))


def bessel_j0_series(z: float, dps: int = 40) -> complex:
    """``J_0(z) = sum (-1)^m (z/2)^(2m) / (m!)^2`` summed in extended precision.

    The largest term is about ``exp(z)``, so ``z / ln 10`` extra digits are
    spent on cancellation.
    """
    dps = dps + int(abs(z) / math.log(10)) + 5
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        term = mpmath.mpf(1)
        total = term
        m = 0
        while True:
            m += 1
            term *= -(z / 2) ** 2 / (m * m)
            total += term
            if abs(term) < mpmath.mpf(10) ** (-dps + 5) and m > z:
                break
        return complex(total)


def cos_oscillatory_oracle(t: float) -> complex:
    """``int_0^1 exp(2i pi t cos 2 pi x) dx = J_0(2 pi t)``."""
    return bessel_j0_series(2 * math.pi * t)


def bernoulli_mc_char(theta: float, t: np.ndarray, n: int = 1_000_000, terms: int = 60, seed: int = 99):
    """Monte-Carlo transform of the Bernoulli convolution with its own sampler."""
    rng = np.random.default_rng(seed)
    scales = theta ** -np.arange(1, terms + 1, dtype=float)
    x = np.zeros(n)
    for k in range(terms):
        x += np.where(rng.random(n) < 0.5, -1.0, 1.0) * scales[k]
    t = np.atleast_1d(t)
    z = np.exp(2j * np.pi * np.multiply.outer(t, x))
    return z.mean(axis=1), np.sqrt(1.0 / n) * np.ones(t.size)


def erf_panel(a: float, b: float, c: float, w: float) -> complex:
    """``int_{-w}^{w} exp(i (a + b u + c u^2)) du`` through the complex error function."""
    with mpmath.workdps(40):
        a, b, c, w = (mpmath.mpf(v) for v in (a, b, c, w))
        s = mpmath.sqrt(-1j * c)
        pref = mpmath.sqrt(mpmath.pi) / (2 * s) * mpmath.exp(1j * (a - b * b / (4 * c)))
        hi = mpmath.erf(s * (w + b / (2 * c)))
        lo = mpmath.erf(s * (-w + b / (2 * c)))
        return complex(pref * (hi - lo))


def direct_panel(a: float, b: float, c: float, w: float) -> complex:
    """The same panel integral by adaptive quadrature (moderate phases only)."""
    re = integrate.quad(lambda u: math.cos(a + b * u + c * u * u), -w, w, limit=400, epsabs=1e-14)[0]
    im = integrate.quad(lambda u: math.sin(a + b * u + c * u * u), -w, w, limit=400, epsabs=1e-14)[0]
    return complex(re, im)


def haar_angle_cdf(theta: float) -> float:
    """CDF of the rotation angle of a Haar rotation, density ``(1 - cos) / pi``."""
    return integrate.quad(lambda a: (1 - math.cos(a)) / math.pi, 0, theta)[0]


def j0(z):
    return special.j0(z)
