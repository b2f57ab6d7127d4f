import numpy as np
import pytest
from hypothesis import given, strategies as st

from kshear.decay import (INF_ORDER, fit_envelope, frequency_grid, is_infinite, order_from_json,
                          order_to_json, envelope_of)


@given(st.floats(0.05, 3.0), st.floats(0.1, 10.0))
def test_pure_power_law_recovered(order, amp):
    t = np.geomspace(1, 1e4, 16 * 25 + 1)  # block edges on the grid
    est = fit_envelope(t, amp * t ** -order, blocks=16)
    assert est.fitted_order == pytest.approx(order, abs=1e-9)
    assert est.residual_rms < 1e-9


@given(st.floats(0.1, 2.0), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_order_invariant_under_rescaling(order, a, b):
    t = np.geomspace(1, 1e3, 300)
    v = t ** -order * (1.5 + np.sin(t))
    o1 = fit_envelope(t, a * v).fitted_order
    o2 = fit_envelope(t, b * v).fitted_order
    assert o1 == pytest.approx(o2, abs=1e-9)


def test_growth_is_clipped_to_zero():
    t = np.geomspace(1, 100, 200)
    assert fit_envelope(t, t).fitted_order == 0.0


def test_vanishing_curve_gives_infinite_order():
    t = np.geomspace(1, 100, 200)
    est = fit_envelope(t, np.zeros_like(t))
    assert is_infinite(est.fitted_order)
    assert est.block_count == 0


def test_sentinel_refuses_arithmetic():
    with pytest.raises(TypeError):
        float(INF_ORDER)
    with pytest.raises(TypeError):
        INF_ORDER + 1


def test_order_json_roundtrip():
    assert order_from_json(order_to_json(INF_ORDER)) is INF_ORDER
    assert order_from_json(order_to_json(0.25)) == 0.25


def test_empty_block_is_an_error():
    t = np.array([1.0, 2.0, 1000.0])
    with pytest.raises(ValueError, match="no points"):
        fit_envelope(t, np.ones(3), blocks=8)


def test_integer_grid_is_dense_when_small():
    g = frequency_grid(1, 500, 8, True)
    assert np.array_equal(g, np.arange(1, 501))


def test_envelope_of_uses_blockwise_maxima():
    # peaks on powers of two only: a sparse grid would miss them
    def f(t):
        t = np.asarray(t)
        return np.where(np.log2(t) % 1 == 0, 1.0, 1e-6)
    est = envelope_of(f, 1, 4096, 12, True)
    assert est.fitted_order < 0.05
