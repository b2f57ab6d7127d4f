"""Shrinking-target hit counting along transvection and rotation orbits.

``S_N(x, y) = #{1 <= k <= N : y + k x mod 1 in B(b_k, r_k)}`` with
``r_k = C k^(-p)``. Under a Rajchman base with enough decay the counts grow
like their expectation ``E(S_N) = sum_k 2 r_k``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

GOLDEN_STEP = (math.sqrt(5.0) - 1.0) / 2.0
_CHUNK = 8192


def circular_distance(a, b):
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), 1.0))
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class TargetScheme:
    """Balls ``B(b_n, min(C n^(-p), 1/2))`` on the circle, ``n = 1..N_max``.

    ``centers`` defaults to the golden rotation ``b_n = n * (sqrt5 - 1)/2 mod 1``.
    """

    C: float = 1.0
    p: float = 0.25
    N_max: int = 100_000
    centers: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if not (0 <= self.p < 1):
            raise ValueError("need 0 <= p < 1 for a divergent expectation")
        if self.p >= 0.5:
            warnings.warn(f"p = {self.p} is outside the worked regime 0 < p < 1/2", stacklevel=2)
        if self.N_max < 1:
            raise ValueError("N_max must be positive")
        if self.centers is not None:
            c = np.mod(np.asarray(self.centers, dtype=float), 1.0)
            if c.shape != (self.N_max,):
                raise ValueError("need exactly N_max centers")
            object.__setattr__(self, "centers", c)

    def radii(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return np.minimum(self.C * n ** (-self.p), 0.5)

    def center(self, n) -> np.ndarray:
        n = np.asarray(n)
        if self.centers is None:
            return np.mod(n * GOLDEN_STEP, 1.0)
        return self.centers[n - 1]

    def expected_hits(self, checkpoints) -> np.ndarray:
        """``E(S_N) = sum_{k <= N} 2 r_k`` with clipped radii (uniform fibre)."""
        cum = np.cumsum(2 * self.radii(np.arange(1, self.N_max + 1)))
        return cum[np.asarray(checkpoints) - 1]


@dataclass
class HitCount:
    """Hit counts of an orbit ensemble; ``counts[i, j]`` is ``S_N`` of orbit
    ``i`` at ``checkpoints[j]``."""

    checkpoints: np.ndarray
    counts: np.ndarray
    expectation: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.counts / self.expectation[None, :]

    def mean_ratio(self, j: int = -1) -> float:
        return float(self.ratio[:, j].mean())

    def ratio_stderr(self, j: int = -1) -> float:
        r = self.ratio[:, j]
        return float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0

    def max_deviation(self, j: int = -1) -> float:
        return float(np.abs(self.counts[:, j] - self.expectation[j]).max())

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["orbit_id", "N", "S_N", "E_S_N", "ratio"])
        for i in range(self.counts.shape[0]):
            for j, n in enumerate(self.checkpoints):
                w.writerow([i, int(n), int(self.counts[i, j]), repr(float(self.expectation[j])),
                            repr(float(self.ratio[i, j]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def default_checkpoints(N_max: int, per_decade: int = 4) -> np.ndarray:
    pts = np.unique(np.round(np.logspace(0, math.log10(N_max), per_decade * max(1, int(math.log10(N_max))) + 1)))
    return np.unique(np.append(pts, N_max)).astype(np.int64)


def run_counting(base, scheme: TargetScheme, n_orbits: int = 100, seed: int = 0,
                 checkpoints: Optional[Sequence[int]] = None) -> HitCount:
    """Count hits of ``T^k (x, y) = (x, y + k x)`` in the scheme's balls for
    ``n_orbits`` starting points drawn from ``base (x) uniform``."""
    cps = default_checkpoints(scheme.N_max) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    if np.any(np.diff(cps) <= 0) or cps[0] < 1 or cps[-1] > scheme.N_max:
        raise ValueError("checkpoints must be increasing within [1, N_max]")
    rng = np.random.default_rng(seed)
    x = np.mod(base.sample(rng, n_orbits), 1.0)
    y = rng.random(n_orbits)
    running = np.zeros(n_orbits, dtype=np.int64)
    counts = np.zeros((n_orbits, cps.size), dtype=np.int64)
    nxt = 0
    for start in range(1, scheme.N_max + 1, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, scheme.N_max + 1))
        pos = np.mod(y[:, None] + np.mod(k[None, :] * x[:, None], 1.0), 1.0)
        hit = circular_distance(pos, scheme.center(k)[None, :]) < scheme.radii(k)[None, :]
        cum = running[:, None] + np.cumsum(hit, axis=1)
        while nxt < cps.size and cps[nxt] <= k[-1]:
            counts[:, nxt] = cum[:, cps[nxt] - start]
            nxt += 1
        running = cum[:, -1]
    return HitCount(cps, counts, scheme.expected_hits(cps))


@dataclass(frozen=True)
class ExpectationSeries:
    N: np.ndarray
    partial: np.ndarray
    asymptotic: np.ndarray

    @property
    def relative_gap(self) -> np.ndarray:
        return np.abs(self.partial - self.asymptotic) / self.partial


def expectation_series(scheme: TargetScheme, N=None) -> ExpectationSeries:
    """Unclipped partial sums ``2 sum_{k<=N} C k^(-p)`` next to their
    asymptotic ``2C/(1-p) N^(1-p)``."""
    N = np.arange(1, scheme.N_max + 1) if N is None else np.atleast_1d(np.asarray(N, dtype=np.int64))
    terms = 2 * scheme.C * np.arange(1, int(N.max()) + 1, dtype=float) ** (-scheme.p)
    partial = np.cumsum(terms)[N - 1]
    asym = 2 * scheme.C / (1 - scheme.p) * N.astype(float) ** (1 - scheme.p)
    return ExpectationSeries(N, partial, asym)


@dataclass(frozen=True)
class MSTPResult:
    """Fraction of starting points whose late-window hit count reaches
    ``threshold_fraction`` of its expectation."""

    fraction: float
    window: tuple[int, int]
    expected_window_hits: float
    threshold_fraction: float
    counts: np.ndarray

    def to_dict(self) -> dict:
        return {"fraction": self.fraction, "window": list(self.window),
                "expected_window_hits": self.expected_window_hits,
                "threshold_fraction": self.threshold_fraction}


def mstp_experiment(alpha: float, s: float = 1.0, C: float = 1.0, n_points: int = 1000, N_max: int = 100_000,
                    seed: int = 0, threshold_fraction: float = 0.5) -> MSTPResult:
    """Monotone shrinking targets ``B(0, C n^(-1/s))`` for the rotation by ``alpha``.

    A point counts as having unbounded growth when its hits in the late
    window ``(sqrt(N_max), N_max]`` reach ``threshold_fraction`` times the
    expected number there. This is a finite-N indicator, not a decision.
    """
    if not (0 < alpha < 1):
        raise ValueError("need 0 < alpha < 1")
    if s <= 0:
        raise ValueError("need s > 0")
    rng = np.random.default_rng(seed)
    y = rng.random(n_points)
    lo = int(math.isqrt(N_max)) + 1
    counts = np.zeros(n_points, dtype=np.int64)
    expected = 0.0
    for start in range(lo, N_max + 1, _CHUNK):
        n = np.arange(start, min(start + _CHUNK, N_max + 1))
        r = np.minimum(C * n.astype(float) ** (-1.0 / s), 0.5)
        expected += float(np.sum(2 * r))
        pos = np.mod(y[:, None] + np.mod(n * alpha, 1.0)[None, :], 1.0)
        counts += np.sum(circular_distance(pos, 0.0) < r[None, :], axis=1)
    frac = float(np.mean(counts >= threshold_fraction * expected))
    return MSTPResult(frac, (lo, N_max), expected, threshold_fraction, counts)
