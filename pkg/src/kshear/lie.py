"""Rotation flows ``(x, M) -> (x, exp(t A(x)) M)`` on ``T x SO(3)`` and ``T x SU(2)``.

With a fixed axis ``e`` and speed ``omega(x)`` the orbit closures are circles
and the flow reduces to a linear flow on a 1-torus with speed
``omega(x) / 2 pi``. For Haar-distributed ``M`` the expected conditional
covariance of matrix coefficients is

    E[M_ij (R M)_kl] - E[(P M)_ij (P M)_kl] = delta_jl / 3 * E_x[(R_x(t) - P)_ki]

with ``P = e e^T`` the average of the rotations about ``e``; expanding
``R = P + cos(w t) (I - P) + sin(w t) K`` turns this into a combination of
``nu^(t)`` and ``nu^(-t)``, ``nu`` the law of ``omega / 2 pi``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .phase import PushforwardSpec, VelocityField1D, pushforward_char
from .shear import CovCurve


# --- Haar sampling ------------------------------------------------------------


def random_unit_quaternions(rng: np.random.Generator, n: int) -> np.ndarray:
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def quaternion_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrices of unit quaternions ``(w, x, y, z)``, shape ``(n, 3, 3)``."""
    q = np.atleast_2d(q)
    w, x, y, z = q.T
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1),
    ], axis=1)


def haar_sample_so3(seed, n: int) -> np.ndarray:
    """``n`` Haar-random rotations; ``seed`` may be an int or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return quaternion_to_rotation(random_unit_quaternions(rng, n))


def haar_sample_su2(seed, n: int) -> np.ndarray:
    """``n`` Haar-random elements of SU(2) as unit quaternions, shape ``(n, 4)``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return random_unit_quaternions(rng, n)


def quaternion_to_su2(q: np.ndarray) -> np.ndarray:
    """``[[a + ib, -c + id], [c + id, a - ib]]`` for ``q = (a, b, c, d)``."""
    q = np.atleast_2d(q)
    alpha = q[:, 0] + 1j * q[:, 1]
    beta = q[:, 2] + 1j * q[:, 3]
    return np.stack([np.stack([alpha, -np.conj(beta)], -1), np.stack([beta, np.conj(alpha)], -1)], axis=1)


def quaternion_left_matrix(u: np.ndarray) -> np.ndarray:
    """4x4 matrices ``L(u)`` with ``L(u) q = u q`` (Hamilton product)."""
    u = np.atleast_2d(u)
    w, x, y, z = u.T
    return np.stack([
        np.stack([w, -x, -y, -z], -1),
        np.stack([x, w, -z, y], -1),
        np.stack([y, z, w, -x], -1),
        np.stack([z, -y, x, w], -1),
    ], axis=1)


def octahedral_group() -> np.ndarray:
    """The 24 rotations of the cube (signed permutation matrices, det 1)."""
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3))
            m[range(3), perm] = signs
            if np.linalg.det(m) > 0:
                mats.append(m)
    return np.array(mats)


def quaternion_group() -> np.ndarray:
    """``{+-1, +-i, +-j, +-k}`` as unit quaternions."""
    e = np.eye(4)
    return np.concatenate([e, -e])


# --- generators ---------------------------------------------------------------


def cross_matrix(axis) -> np.ndarray:
    a = np.asarray(axis, dtype=float)
    return np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])


@dataclass(frozen=True)
class RotationGenerator:
    """``A = speed * [axis]_x`` for a unit axis."""

    axis: tuple
    speed: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,) or abs(np.linalg.norm(a) - 1) > 1e-12:
            raise ValueError("axis must be a unit 3-vector")
        if self.speed < 0:
            raise ValueError("speed must be nonnegative")
        object.__setattr__(self, "axis", tuple(float(v) for v in a))

    @property
    def matrix(self) -> np.ndarray:
        return self.speed * cross_matrix(self.axis)


def rodrigues_exp(gen: RotationGenerator, t: float) -> np.ndarray:
    """``exp(t A) = I + sin(w t) K + (1 - cos(w t)) K^2``."""
    k = cross_matrix(gen.axis)
    th = gen.speed * t
    return np.eye(3) + np.sin(th) * k + (1 - np.cos(th)) * (k @ k)


# --- flow specification -------------------------------------------------------


def _omega_linear(x):
    return 2 * np.pi * np.asarray(x, dtype=float)


def _omega_cos(x):
    return 2 * np.pi * np.cos(2 * np.pi * np.asarray(x, dtype=float))


def _omega_cos_quartic(x):
    x = np.asarray(x, dtype=float)
    return 2 * np.pi * (np.cos(2 * np.pi * x) + 0.25 * np.cos(4 * np.pi * x))


def _omega_zero(x):
    return np.zeros(np.shape(x))


OMEGA_CATALOG: dict[str, Callable] = {
    "zero": _omega_zero,
    "linear": _omega_linear,
    "cos": _omega_cos,
    "cos_quartic": _omega_cos_quartic,
}

# declared critical points of omega / 2 pi, shared with the phase catalog
_OMEGA_CRITICAL = {"linear": [], "cos": [(0.0, 1), (0.5, 1)], "cos_quartic": [(0.0, 1), (0.5, 3)], "zero": []}


@dataclass
class LieFlowSpec:
    """Fixed-axis rotation flow over a base measure on the circle.

    ``omega`` is a catalog name or a callable ``x -> speed``. Observables are
    the matrix coefficients ``M[i, j]`` and ``(g_t M)[k, l]`` (0-based); on
    SU(2) they are the quaternion coordinates ``q[i]`` and ``(g_t q)[k]``.
    ``generator_field`` (``x -> (axes, speeds)``) replaces the fixed axis for
    Monte-Carlo runs only.
    """

    base: object
    omega: object = "linear"
    axis: tuple = (0.0, 0.0, 1.0)
    i: int = 0
    j: int = 0
    k: int = 0
    l: int = 0
    group: str = "so3"
    generator_field: Optional[Callable] = None

    def __post_init__(self):
        if self.group not in ("so3", "su2"):
            raise ValueError("group must be 'so3' or 'su2'")
        dim = 3 if self.group == "so3" else 4
        for name in ("i", "j", "k", "l"):
            v = getattr(self, name)
            if not (0 <= v < dim):
                raise ValueError(f"index {name}={v} out of range for {self.group}")
        RotationGenerator(self.axis, 0.0)
        if isinstance(self.omega, str) and self.omega not in OMEGA_CATALOG:
            raise KeyError(f"unknown omega field {self.omega!r}; known: {sorted(OMEGA_CATALOG)}")

    @property
    def omega_fn(self) -> Callable:
        return OMEGA_CATALOG[self.omega] if isinstance(self.omega, str) else self.omega

    @property
    def fixed_axis(self) -> bool:
        return self.generator_field is None

    def axes_speeds(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.generator_field is not None:
            axes, speeds = self.generator_field(x)
            return np.asarray(axes, dtype=float), np.asarray(speeds, dtype=float)
        speeds = self.omega_fn(np.mod(x, 1.0))
        return np.broadcast_to(np.asarray(self.axis, dtype=float), (x.size, 3)), speeds

    def zero_speed_mass(self) -> float:
        """Base mass of ``{omega = 0}`` for catalog fields (exact for atoms)."""
        if isinstance(self.omega, str) and self.omega == "zero":
            return 1.0
        if getattr(self.base, "kind", None) == "atomic":
            w = self.omega_fn(np.mod(self.base.positions, 1.0))
            return float(self.base.weights[w == 0].sum())
        return 0.0


def _rotations(axes: np.ndarray, theta: np.ndarray) -> np.ndarray:
    n = theta.size
    k = np.zeros((n, 3, 3))
    k[:, 0, 1], k[:, 0, 2] = -axes[:, 2], axes[:, 1]
    k[:, 1, 0], k[:, 1, 2] = axes[:, 2], -axes[:, 0]
    k[:, 2, 0], k[:, 2, 1] = -axes[:, 1], axes[:, 0]
    s, c = np.sin(theta)[:, None, None], np.cos(theta)[:, None, None]
    return np.eye(3)[None] + s * k + (1 - c) * (k @ k)


def _symmetrizer(spec: LieFlowSpec) -> np.ndarray:
    """``W[a, b] = mean_g g[a, j] g[b, l]`` over a finite group whose right
    action averages degree-2 coefficients exactly as Haar measure does."""
    if spec.group == "so3":
        g = octahedral_group()
        return np.einsum("na,nb->ab", g[:, :, spec.j], g[:, :, spec.l]) / g.shape[0]
    # right multiplication by q8 on quaternion coordinates: (q g)_a = sum_c q_c R(g)[c, a]
    r = np.array([_right_matrix(u) for u in quaternion_group()])
    return np.einsum("nc,nd->cd", r[:, :, spec.i], r[:, :, spec.k]) / r.shape[0]


def _right_matrix(u: np.ndarray) -> np.ndarray:
    """``R`` with ``(q u)_a = sum_c q_c R[c, a]``."""
    w, x, y, z = u
    right = np.array([[w, -x, -y, -z], [x, w, z, -y], [y, -z, w, x], [z, y, -x, w]])
    return right.T


@dataclass
class LieCov:
    times: np.ndarray
    value: np.ndarray
    stderr: np.ndarray
    prediction: np.ndarray

    def to_curve(self, spec: LieFlowSpec) -> CovCurve:
        params = {"system": "lie", "group": spec.group, "omega": spec.omega if isinstance(spec.omega, str) else "custom",
                  "indices": [spec.i, spec.j, spec.k, spec.l]}
        return CovCurve(self.times, self.value, "monte_carlo", self.stderr, params)


def _stratified_base(base, rng: np.random.Generator, n: int) -> np.ndarray:
    if hasattr(base, "ppf"):
        u = (np.arange(n) + rng.random(n)) / n
        return base.ppf(u)
    return base.sample(rng, n)


def lie_cov_mc(spec: LieFlowSpec, t, n_samples: int = 100_000, seed: int = 0, replicates: int = 8,
               symmetrize: bool = True, centering: str = "invariant") -> LieCov:
    """Monte-Carlo expected conditional covariance and its reduced prediction.

    Each Haar sample is averaged over a finite subgroup acting on the right,
    which is exact for these degree-2 observables; the base variable is
    stratified. The stderr comes from independent replicates. ``centering``
    ``invariant`` subtracts the product of conditional expectations on the
    invariant sigma-algebra (orbit averages), ``haar`` the product of Haar
    means (zero).
    """
    if centering not in ("invariant", "haar"):
        raise ValueError("centering must be 'invariant' or 'haar'")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    rng = np.random.default_rng(seed)
    per = max(1, n_samples // replicates)
    w = _symmetrizer(spec) if symmetrize else None
    means = np.zeros((replicates, times.size))
    for r in range(replicates):
        x = _stratified_base(spec.base, rng, per)
        axes, speeds = spec.axes_speeds(x)
        static = speeds == 0
        if spec.group == "so3":
            m = haar_sample_so3(rng, per)
            proj = axes[:, :, None] * axes[:, None, :]
            pm = proj @ m
            for ti, tt in enumerate(times):
                rm = _rotations(axes, speeds * tt) @ m
                if w is None:
                    val = m[:, spec.i, spec.j] * rm[:, spec.k, spec.l]
                    cen = pm[:, spec.i, spec.j] * pm[:, spec.k, spec.l]
                else:
                    val = np.einsum("na,ab,nb->n", m[:, spec.i, :], w, rm[:, spec.k, :])
                    cen = np.einsum("na,ab,nb->n", pm[:, spec.i, :], w, pm[:, spec.k, :])
                if centering == "invariant":
                    # where omega = 0 every function is invariant and the covariance vanishes
                    val = np.where(static, 0.0, val - cen)
                means[r, ti] = val.mean()
        else:
            q = haar_sample_su2(rng, per)
            for ti, tt in enumerate(times):
                half = 0.5 * speeds * tt
                u = np.concatenate([np.cos(half)[:, None], np.sin(half)[:, None] * axes], axis=1)
                uq = np.einsum("nab,nb->na", quaternion_left_matrix(u), q)
                if w is None:
                    val = q[:, spec.i] * uq[:, spec.k]
                else:
                    val = np.einsum("nc,cd,nd->n", q, w, uq)
                # orbit averages of quaternion coordinates vanish when omega != 0
                if centering == "invariant":
                    val = np.where(static, 0.0, val)
                means[r, ti] = val.mean()
    value = means.mean(axis=0)
    stderr = means.std(axis=0, ddof=1) / np.sqrt(replicates) if replicates > 1 else np.zeros(times.size)
    pred = reduced_prediction(spec, times, centering, seed=seed)
    return LieCov(times, value.astype(complex), stderr, pred)


def _nu_char(spec: LieFlowSpec, t: np.ndarray, seed: int = 0) -> np.ndarray:
    red = orbit_torus_reduce(spec)
    try:
        return np.asarray(red.char(t), dtype=complex)
    except ValueError:
        return np.array([pushforward_char(red, float(tt), 200_000, seed)[0] for tt in t])


def reduced_prediction(spec: LieFlowSpec, t, centering: str = "invariant", seed: int = 0) -> np.ndarray:
    """Closed-form covariance in terms of ``nu^(+-t)`` (``nu^(+-t/2)`` on SU(2))."""
    if not spec.fixed_axis:
        raise NotImplementedError("reduced prediction needs a fixed-axis generator field")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p0 = spec.zero_speed_mass()
    if spec.group == "so3":
        k = cross_matrix(spec.axis)
        k2 = k @ k
        i, kk = spec.i, spec.k
        if spec.j != spec.l:
            return np.zeros(t.size, dtype=complex)
        plus, minus = _nu_char(spec, t, seed), _nu_char(spec, -t, seed)
        a1 = k[kk, i] / 2j - k2[kk, i] / 2
        am1 = -k[kk, i] / 2j - k2[kk, i] / 2
        a0 = (np.eye(3) + k2)[kk, i]
        osc = a1 * plus + am1 * minus
        if centering == "invariant":
            # the atom of nu at 0 contributes a1 + am1 but is invariant
            return (osc - p0 * (a1 + am1)) / 3
        return (a0 + osc) / 3
    plus, minus = _nu_char(spec, t / 2, seed), _nu_char(spec, -t / 2, seed)
    lmat = quaternion_left_matrix(np.concatenate([[0.0], np.asarray(spec.axis)]))[0]
    cos_part = (plus + minus) / 2
    sin_part = (plus - minus) / 2j
    val = (cos_part * (spec.k == spec.i) + sin_part * lmat[spec.k, spec.i]) / 4
    if centering == "invariant":
        val = val - p0 * (spec.k == spec.i) / 4
    return val


def orbit_torus_reduce(spec: LieFlowSpec) -> PushforwardSpec:
    """Push-forward of ``omega / 2 pi`` (xi = 1, unwrapped): the measure whose
    Rajchman property governs the decay of the flow's covariances."""
    if not spec.fixed_axis:
        raise NotImplementedError("unsupported: varying-axis generator fields have varying orbit tori")
    fn = spec.omega_fn
    name = spec.omega if isinstance(spec.omega, str) else "custom"
    crit = _OMEGA_CRITICAL.get(name, [])
    field_ = VelocityField1D(lambda x: fn(x) / (2 * np.pi), crit, f"omega/2pi:{name}", verify=False,
                             periodic=name not in ("linear",))
    return PushforwardSpec(spec.base, field_, 1, "none")
