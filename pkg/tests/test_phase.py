import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from kshear.measures import Atomic, BernoulliConvolution, UniformTorus, cos_density
from kshear.phase import (DegenerateField, GridTooCoarse, PushforwardSpec, QuadratureBudgetError, VelocityField1D,
                          catalog_field, critical_points_scan, load_piecewise_csv, oscillatory_integral,
                          phase_decay_order, piecewise_polynomial_field, pushforward_char,
                          quadratic_phase_integral, taylor_derivatives)
from oracles import cos_oscillatory_oracle, direct_panel, erf_panel


@given(st.floats(-50, 50), st.floats(-400, 400), st.floats(0.5, 3000).map(lambda c: c), st.booleans(),
       st.floats(1e-4, 0.05))
def test_panel_matches_erf_form(a, b, c, neg, w):
    c = -c if neg else c
    got = complex(quadratic_phase_integral(a, b, c, w))
    assert got == pytest.approx(erf_panel(a, b, c, w), abs=1e-11 * max(1.0, w))


@pytest.mark.parametrize("a,b,c,w", [(0.3, 2.0, 1e-12, 0.01), (1.0, 5e3, 1e-7, 0.01), (0.0, 0.5, 3.0, 0.1),
                                     (2.0, -800.0, 4e4, 0.01), (0.0, 0.0, 2e5, 0.01)])
def test_panel_regimes_against_direct_quadrature(a, b, c, w):
    assert complex(quadratic_phase_integral(a, b, c, w)) == pytest.approx(direct_panel(a, b, c, w), abs=1e-11)


@pytest.mark.parametrize("t", [0.0, 0.7, 3.0, 12.5, 31.0, 50.0])
@pytest.mark.parametrize("quad", ["filon", "dense"])
def test_cos_field_matches_bessel_series(t, quad):
    got = oscillatory_integral(catalog_field("cos"), 1, t, quad)
    assert abs(got - cos_oscillatory_oracle(t)) < 1e-6


@pytest.mark.parametrize("name", ["cos_quartic", "cos_sextic", "linear"])
def test_filon_matches_dense(name):
    f = catalog_field(name)
    for t in (5.0, 40.0, 170.0):
        assert abs(oscillatory_integral(f, 1, t) - oscillatory_integral(f, 1, t, "dense")) < 1e-8


def test_linear_field_closed_form():
    f = catalog_field("linear")
    for t in (0.25, 3.5, 1000.3):
        want = (np.exp(2j * np.pi * t) - 1) / (2j * np.pi * t)
        assert oscillatory_integral(f, 1, t) == pytest.approx(want, abs=1e-10)


def test_weighted_integral():
    d = cos_density(64)
    g = d.cells
    weight = lambda x: d.values[np.minimum((np.mod(x, 1) * g).astype(int), g - 1)]
    # the linear field turns the weighted integral into the transform of the density
    got = oscillatory_integral(catalog_field("linear"), 1, 7.0, "dense", weight=weight, panel_multiple=g)
    assert got == pytest.approx(complex(d.char(7.0)), abs=1e-10)
    spec = PushforwardSpec(d, catalog_field("linear"))
    assert spec.char(7.0) == pytest.approx(complex(d.char(7.0)), abs=1e-10)


def test_dense_budget():
    with pytest.raises(QuadratureBudgetError):
        oscillatory_integral(catalog_field("cos"), 1, 1e6, "dense")


def test_time_must_be_nonnegative():
    with pytest.raises(ValueError):
        oscillatory_integral(catalog_field("cos"), 1, -1.0)


@pytest.mark.slow
def test_sextic_order_frozen():
    # observed 0.184 over [10, 1e4] with 240 points; the asymptotic value is 1/6
    t = np.geomspace(10, 1e4, 240)
    est = phase_decay_order(catalog_field("cos_sextic"), 1, t)
    assert est.fitted_order == pytest.approx(0.184, abs=0.03)


def test_linear_order_one():
    est = phase_decay_order(catalog_field("linear"), 1, np.geomspace(10, 1e4, 120) + 0.5)
    assert est.fitted_order == pytest.approx(1.0, abs=0.05)


def test_velocity_factorisations():
    x = sp.symbols("x")
    c = sp.cos(2 * sp.pi * x)
    s = sp.sin(2 * sp.pi * x)
    quartic = sp.cos(2 * sp.pi * x) + sp.cos(4 * sp.pi * x) / 4
    sextic = (1 + c) ** 3 / 8
    assert sp.simplify(sp.diff(quartic, x) + 2 * sp.pi * s * (1 + c)) == 0
    assert sp.simplify(sp.diff(sextic, x) + sp.Rational(3, 4) * sp.pi * s * (1 + c) ** 2) == 0


def test_taylor_derivatives_on_sine():
    x = np.array([0.1, 0.4])
    d = taylor_derivatives(lambda u: np.sin(2 * np.pi * u), x, 6)
    # accuracy degrades with the order: the fit is degree 10 on 21 points
    for m, tol in enumerate([1e-7, 1e-10, 1e-6, 1e-8, 1e-4, 1e-5, 1e-2]):
        want = (2 * np.pi) ** m * np.sin(2 * np.pi * x + m * np.pi / 2)
        assert np.abs(d[:, m] - want).max() < tol * (2 * np.pi) ** m


@pytest.mark.parametrize("name,want", [("cos", [(0.0, 1), (0.5, 1)]), ("cos_quartic", [(0.0, 1), (0.5, 3)]),
                                       ("cos_sextic", [(0.0, 1), (0.5, 5)]), ("linear", [])])
def test_scan_finds_declared_points(name, want):
    got = critical_points_scan(catalog_field(name))
    assert [q for _, q in got] == [q for _, q in want]
    assert np.allclose([p for p, _ in got], [p for p, _ in want], atol=1e-4)


@given(st.floats(0.05, 0.95), st.integers(1, 3))
def test_scan_shifted_cos(shift, xi):
    f = VelocityField1D(lambda u: np.cos(2 * np.pi * (u - shift)), verify=False)
    got = critical_points_scan(f, xi)
    locs = sorted([shift % 1, (shift + 0.5) % 1])
    assert [q for _, q in got] == [1, 1]
    assert np.allclose([p for p, _ in got], locs, atol=1e-6)


def test_scan_degenerate_and_coarse():
    assert isinstance(critical_points_scan(catalog_field("const")), DegenerateField)
    # 80 sign changes of v' cannot be seen on 64 points
    fast = VelocityField1D(lambda u: np.cos(2 * np.pi * 40 * u), verify=False)
    with pytest.raises(GridTooCoarse) as exc:
        critical_points_scan(fast, grid_size=64)
    assert exc.value.suggested == 256
    assert len(critical_points_scan(fast, grid_size=256)) == 80


def test_declared_order_is_checked():
    with pytest.raises(ValueError):
        VelocityField1D(np.cos, [(0.25, 1)])
    with pytest.raises(ValueError):
        VelocityField1D(lambda u: np.cos(2 * np.pi * u), [(0.0, 3)])


def test_piecewise_field(tmp_path):
    p = tmp_path / "v.csv"
    # v(x) = (x - 1/2)^3 on the whole circle chart
    p.write_text("breakpoint,c0,c1,c2,c3\n0,-0.125,0.75,-1.5,1\n")
    f = load_piecewise_csv(p)
    x = np.array([0.1, 0.5, 0.9])
    assert np.allclose(f(x), (x - 0.5) ** 3)
    with pytest.raises(ValueError):
        piecewise_polynomial_field([0.2], [[1.0]])


def test_pushforward_uniform_cos_is_bessel():
    spec = PushforwardSpec(UniformTorus(), catalog_field("cos"))
    t = np.array([1.0, 4.5, -4.5])
    got = spec.char(t)
    want = [cos_oscillatory_oracle(abs(v)) for v in t]
    assert np.allclose(got, want, atol=1e-9)


def test_pushforward_atomic_exact_and_mc():
    base = Atomic(np.array([0.1, 0.3]), np.array([0.5, 0.5]))
    spec = PushforwardSpec(base, catalog_field("cos"), xi=2)
    t = 3.7
    want = 0.5 * sum(np.exp(2j * np.pi * t * 2 * np.cos(2 * np.pi * p)) for p in (0.1, 0.3))
    assert spec.char(t) == pytest.approx(want)
    est, err = pushforward_char(spec, t, 100_000, 1)
    assert abs(est - want) < 5 * err


def test_pushforward_mc_on_line_base():
    spec = PushforwardSpec(BernoulliConvolution(2.5), catalog_field("cos"))
    with pytest.raises(ValueError):
        spec.char(1.0)
    est, err = pushforward_char(spec, 0.0, 1000)
    assert est == 1 and err == 0.0


def test_wrapped_pushforward():
    base = Atomic(np.array([0.0, 0.1]), np.array([0.5, 0.5]))
    spec = PushforwardSpec(base, catalog_field("cos"), wrap="mod1")
    # cos(0) = 1 sits in the zero fibre mod 1 and is dropped
    assert spec.char(3.0) == pytest.approx(np.exp(6j * np.pi * np.cos(0.2 * np.pi)))
    uni = PushforwardSpec(UniformTorus(), catalog_field("cos"), wrap="mod1")
    with pytest.raises(ValueError):
        uni.char(0.5)
    only_zero = PushforwardSpec(Atomic(np.array([0.0]), np.array([1.0])), catalog_field("cos"), wrap="mod1")
    with pytest.raises(ValueError, match="zero fibre"):
        only_zero.char(1.0)
    with pytest.raises(ValueError):
        PushforwardSpec(base, catalog_field("cos"), xi=0)
