"""Trigonometric polynomials on the 2-torus and their Sobolev-type norms."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

import numpy as np


@dataclass(frozen=True, eq=False)
class TrigPoly2:
    """``f(x, y) = sum c[k] exp(2i pi (k1 x + k2 y))`` with finite support.

    Stored sparsely: ``modes`` is an ``(n, 2)`` int array, ``coeffs`` complex.
    Zero coefficients are dropped; modes are unique and sorted.
    """

    modes: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, 2)
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if modes.shape[0] != coeffs.shape[0]:
            raise ValueError("modes and coeffs must have equal length")
        if modes.shape[0]:
            uniq, inv = np.unique(modes, axis=0, return_inverse=True)
            summed = np.zeros(uniq.shape[0], dtype=complex)
            np.add.at(summed, inv.reshape(-1), coeffs)
            keep = summed != 0
            modes, coeffs = uniq[keep], summed[keep]
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_dict(cls, coeffs: Mapping[tuple[int, int], complex]) -> "TrigPoly2":
        if not coeffs:
            return cls.zero()
        keys = np.array(list(coeffs.keys()), dtype=np.int64)
        return cls(keys, np.array(list(coeffs.values()), dtype=complex))

    @classmethod
    def zero(cls) -> "TrigPoly2":
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=complex))

    @classmethod
    def mode(cls, k1: int, k2: int, c: complex = 1.0) -> "TrigPoly2":
        return cls(np.array([[k1, k2]]), np.array([c]))

    def to_dict(self) -> dict[tuple[int, int], complex]:
        return {(int(a), int(b)): complex(c) for (a, b), c in zip(self.modes, self.coeffs)}

    def __len__(self) -> int:
        return self.coeffs.size

    @property
    def radius(self) -> int:
        return int(np.abs(self.modes).max()) if len(self) else 0

    def coeff(self, k1: int, k2: int) -> complex:
        hit = np.flatnonzero((self.modes[:, 0] == k1) & (self.modes[:, 1] == k2))
        return complex(self.coeffs[hit[0]]) if hit.size else 0j

    def __add__(self, other: "TrigPoly2") -> "TrigPoly2":
        return TrigPoly2(np.vstack([self.modes, other.modes]), np.concatenate([self.coeffs, other.coeffs]))

    def __sub__(self, other: "TrigPoly2") -> "TrigPoly2":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "TrigPoly2":
        return TrigPoly2(self.modes, self.coeffs * c)

    def __call__(self, x, y):
        """Evaluate on broadcastable arrays ``x``, ``y``."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = np.zeros(x.shape, dtype=complex)
        for (k1, k2), c in zip(self.modes, self.coeffs):
            out += c * np.exp(2j * np.pi * (k1 * x + k2 * y))
        return out

    def fiber_part(self, k2: int = 0) -> "TrigPoly2":
        sel = self.modes[:, 1] == k2
        return TrigPoly2(self.modes[sel], self.coeffs[sel])

    def coefficients_by_quadrature(self, grid: int) -> dict[tuple[int, int], complex]:
        """Recover coefficients from samples on a ``grid x grid`` lattice (FFT)."""
        u = np.arange(grid) / grid
        vals = self(u[:, None], u[None, :])
        spec = np.fft.fft2(vals) / grid**2
        out = {}
        half = grid // 2
        for a in range(-half + 1, half):
            for b in range(-half + 1, half):
                c = spec[a % grid, b % grid]
                if abs(c) > 1e-13:
                    out[(a, b)] = complex(c)
        return out


def hs_norm(f: TrigPoly2, s: float) -> float:
    """``(sum |c_k|^2 (1 + |k|^2)^s)^(1/2)``."""
    if s < 0:
        raise ValueError("need s >= 0")
    w = (1.0 + (f.modes.astype(float) ** 2).sum(axis=1)) ** s
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2 * w)))


def cf_constant(f: TrigPoly2, s: float) -> float:
    """``max |c_k| (1 + |k|^2)^(s/2)``; 0 for the zero polynomial."""
    if not len(f):
        return 0.0
    w = (1.0 + (f.modes.astype(float) ** 2).sum(axis=1)) ** (s / 2)
    return float(np.max(np.abs(f.coeffs) * w))


def anisotropic_weight(modes: np.ndarray) -> np.ndarray:
    """``h(k) = (1 + k1^2/k2^2)^(1/2)`` for ``k2 != 0``, else 1."""
    k1 = modes[:, 0].astype(float)
    k2 = modes[:, 1].astype(float)
    out = np.ones(modes.shape[0])
    nz = k2 != 0
    out[nz] = np.sqrt(1 + k1[nz] ** 2 / k2[nz] ** 2)
    return out


def hs0_norm(f: TrigPoly2, s: float) -> float:
    """Anisotropic ``H^{s,0}`` norm ``(sum |c_k|^2 h(k)^{2s})^(1/2)``."""
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2 * anisotropic_weight(f.modes) ** (2 * s))))


def conditional_expectation(f: TrigPoly2, base) -> TrigPoly2:
    """Projection onto functions of ``x`` alone (the ``k2 = 0`` modes).

    This is the conditional expectation on the invariant sigma-algebra for the
    transvection and the linear flow ``y -> y + t x`` as long as the base
    measure has no atoms: then ``k2 x`` is an integer only on a null set.
    """
    if not getattr(base, "nonatomic", False):
        raise ValueError("invariant algebra exceeds fiber projection: base measure must be nonatomic "
                         f"(got {getattr(base, 'kind', type(base).__name__)})")
    return f.fiber_part(0)


def random_sobolev_poly(rng: np.random.Generator, radius: int, s: float, fiber_only: bool = False,
                        exponent_margin: float = 0.51) -> TrigPoly2:
    """Random polynomial with ``|c_k| = (1 + |k|^2)^(-s/2 - margin)`` and random phases.

    With ``fiber_only`` the ``k2 = 0`` modes are left out.
    """
    r = np.arange(-radius, radius + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    modes = np.column_stack([k1.ravel(), k2.ravel()])
    if fiber_only:
        modes = modes[modes[:, 1] != 0]
    mag = (1.0 + (modes.astype(float) ** 2).sum(axis=1)) ** (-s / 2 - exponent_margin)
    phase = np.exp(2j * np.pi * rng.random(modes.shape[0]))
    return TrigPoly2(modes, mag * phase)


def random_poly(rng: np.random.Generator, radius: int, n_terms: int) -> TrigPoly2:
    """Sparse random polynomial with Gaussian coefficients on ``|k_i| <= radius``."""
    modes = rng.integers(-radius, radius + 1, size=(n_terms, 2))
    coeffs = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    return TrigPoly2(modes, coeffs)


def write_poly_csv(f: TrigPoly2, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k1", "k2", "re", "im"])
        for (a, b), c in zip(f.modes, f.coeffs):
            w.writerow([int(a), int(b), repr(float(c.real)), repr(float(c.imag))])


def read_poly_csv(path) -> TrigPoly2:
    modes, coeffs = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            modes.append((int(row["k1"]), int(row["k2"])))
            coeffs.append(complex(float(row["re"]), float(row["im"])))
    if not modes:
        return TrigPoly2.zero()
    return TrigPoly2(np.array(modes), np.array(coeffs))
