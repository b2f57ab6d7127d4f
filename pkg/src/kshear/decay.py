"""Power-law envelope fitting for Fourier transforms and covariance curves.

Both the Rajchman order of a measure and the decay order of a correlation
curve are estimated the same way: take blockwise maxima of ``|values|`` over
a geometric partition of the frequency (or time) axis and regress
``log(envelope)`` on ``log(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

ENVELOPE_FLOOR = 1e-14


class InfiniteOrder:
    """Tagged sentinel for an envelope that vanishes to working precision.

    Deliberately supports no arithmetic: callers must branch on it.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF_ORDER"

    def __str__(self) -> str:
        return "inf"

    def __bool__(self) -> bool:
        return True

    def __float__(self):
        raise TypeError("INF_ORDER is a sentinel; branch on is_infinite() instead")


INF_ORDER = InfiniteOrder()

Order = Union[float, InfiniteOrder]


def is_infinite(order) -> bool:
    return order is INF_ORDER


def order_to_json(order: Order):
    return "inf" if is_infinite(order) else float(order)


def order_from_json(value) -> Order:
    if isinstance(value, str) and value.lower() in ("inf", "+inf", "infinity"):
        return INF_ORDER
    return float(value)


@dataclass(frozen=True)
class DecayEstimate:
    """Blockwise envelope and its fitted power law ``C * t**(-order)``.

    ``freqs`` are the geometric block centres, ``envelope`` the block maxima
    (blocks below ``ENVELOPE_FLOOR`` are kept in ``envelope`` but excluded from
    the regression; ``block_count`` counts the blocks actually fitted).
    """

    freqs: np.ndarray
    envelope: np.ndarray
    fitted_order: Order
    intercept: float
    residual_rms: float
    block_count: int

    @property
    def is_infinite(self) -> bool:
        return is_infinite(self.fitted_order)

    def to_dict(self) -> dict:
        return {
            "fitted_order": order_to_json(self.fitted_order),
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
            "block_count": self.block_count,
            "freqs": [float(f) for f in self.freqs],
            "envelope": [float(e) for e in self.envelope],
        }


def block_edges(t_min: float, t_max: float, blocks: int) -> np.ndarray:
    return np.geomspace(t_min, t_max, blocks + 1)


def frequency_grid(t_min: float, t_max: float, blocks: int, integer_grid: bool,
                   points_per_block: int = 128, max_integer_points: int = 200_000) -> np.ndarray:
    """Evaluation points covering ``[t_min, t_max]``.

    On integer grids every integer is used when there are at most
    ``max_integer_points`` of them; the limsup of ``|mu^(n)|`` can sit on
    sparse arithmetic subsequences (powers of a Pisot base) that a geometric
    subsample would miss.
    """
    if integer_grid:
        lo, hi = int(np.ceil(t_min)), int(np.floor(t_max))
        if hi - lo + 1 <= max_integer_points:
            return np.arange(lo, hi + 1, dtype=float)
        pts = np.unique(np.round(np.geomspace(lo, hi, max_integer_points)))
        return pts.astype(float)
    pts = np.geomspace(t_min, t_max, blocks * points_per_block)
    return pts


def fit_envelope(times, values, t_min: float | None = None, t_max: float | None = None,
                 blocks: int = 16) -> DecayEstimate:
    """Blockwise-max log-log fit of ``|values|`` against ``times``.

    Blocks are a geometric partition of ``[t_min, t_max]`` (defaults: the
    range of ``times``). Every block must contain at least one time point.
    """
    times = np.asarray(times, dtype=float)
    mags = np.abs(np.asarray(values))
    if times.ndim != 1 or times.shape != mags.shape:
        raise ValueError("times and values must be 1-D arrays of equal length")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if times[0] <= 0:
        raise ValueError("times must be positive for a log-log fit")
    t_min = times[0] if t_min is None else t_min
    t_max = times[-1] if t_max is None else t_max
    edges = block_edges(t_min, t_max, blocks)
    # searchsorted side='right' puts t_max into the last block
    idx = np.clip(np.searchsorted(edges, times, side="right") - 1, 0, blocks - 1)
    inside = (times >= t_min) & (times <= t_max)
    envelope = np.full(blocks, np.nan)
    for b in range(blocks):
        sel = inside & (idx == b)
        if not np.any(sel):
            raise ValueError(f"block {b} [{edges[b]:.4g}, {edges[b + 1]:.4g}] has no points")
        envelope[b] = mags[sel].max()
    centres = np.sqrt(edges[:-1] * edges[1:])
    keep = envelope >= ENVELOPE_FLOOR
    if not np.any(keep):
        return DecayEstimate(centres, envelope, INF_ORDER, float("-inf"), 0.0, 0)
    if keep.sum() == 1:
        # one surviving block: the envelope collapses after it
        return DecayEstimate(centres, envelope, INF_ORDER, float(np.log(envelope[keep][0])), 0.0, 1)
    x = np.log(centres[keep])
    y = np.log(envelope[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    order = max(0.0, -float(slope))
    return DecayEstimate(centres, envelope, order, float(intercept),
                         float(np.sqrt(np.mean(resid ** 2))), int(keep.sum()))


def envelope_of(func: Callable[[np.ndarray], np.ndarray], t_min: float, t_max: float,
                blocks: int, integer_grid: bool, points_per_block: int = 128,
                max_integer_points: int = 200_000) -> DecayEstimate:
    """Evaluate ``func`` on a frequency grid and fit its envelope."""
    if not (1 <= t_min < t_max):
        raise ValueError("need 1 <= t_min < t_max")
    if blocks < 2:
        raise ValueError("need at least 2 blocks")
    grid = frequency_grid(t_min, t_max, blocks, integer_grid, points_per_block, max_integer_points)
    values = func(grid)
    return fit_envelope(grid, values, t_min, t_max, blocks)
