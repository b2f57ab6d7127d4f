import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import linalg, stats

from kshear.lie import (LieFlowSpec, RotationGenerator, _symmetrizer, haar_sample_so3, haar_sample_su2,
                        lie_cov_mc, octahedral_group, orbit_torus_reduce, quaternion_group,
                        quaternion_left_matrix, quaternion_to_rotation, quaternion_to_su2, reduced_prediction,
                        rodrigues_exp)
from kshear.measures import Atomic, UniformTorus, rajchman_fit
from oracles import haar_angle_cdf

unit = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1).map(
    lambda v: tuple(np.asarray(v) / np.linalg.norm(v)))


def test_haar_rotations_are_rotations():
    m = haar_sample_so3(0, 500)
    assert np.allclose(m @ m.transpose(0, 2, 1), np.eye(3), atol=1e-12)
    assert np.allclose(np.linalg.det(m), 1)


def test_haar_angle_distribution():
    m = haar_sample_so3(1, 20_000)
    angle = np.arccos(np.clip((np.trace(m, axis1=1, axis2=2) - 1) / 2, -1, 1))
    res = stats.kstest(angle, np.vectorize(haar_angle_cdf))
    assert res.pvalue > 1e-3


def test_haar_second_moments():
    m = haar_sample_so3(2, 200_000)
    mom = np.einsum("nij,nkl->ijkl", m, m) / m.shape[0]
    want = np.einsum("ik,jl->ijkl", np.eye(3), np.eye(3)) / 3
    assert np.abs(mom - want).max() < 0.01


def test_su2_embedding_is_unitary():
    u = quaternion_to_su2(haar_sample_su2(3, 100))
    assert np.allclose(u @ np.conj(u.transpose(0, 2, 1)), np.eye(2), atol=1e-12)
    assert np.allclose(np.linalg.det(u), 1)


def test_left_matrix_is_hamilton_product():
    q = haar_sample_su2(4, 2)
    a, b = q
    # (a b) rotates like R(a) R(b)
    ab = quaternion_left_matrix(a)[0] @ b
    assert np.allclose(quaternion_to_rotation(ab)[0], quaternion_to_rotation(a)[0] @ quaternion_to_rotation(b)[0])


def test_finite_groups():
    g = octahedral_group()
    assert g.shape == (24, 3, 3)
    keys = {tuple(np.round(x).astype(int).ravel()) for x in g}
    for a in g[:6]:
        for b in g:
            assert tuple(np.round(a @ b).astype(int).ravel()) in keys
    assert quaternion_group().shape == (8, 4)


def test_octahedral_symmetrizer_matches_haar_moment():
    for j in range(3):
        for l in range(3):
            w = _symmetrizer(LieFlowSpec(UniformTorus(), j=j, l=l))
            assert np.allclose(w, np.eye(3) * (j == l) / 3)


def test_quaternion_symmetrizer_matches_haar_moment():
    # E_h[(e_c h)_i (e_d h)_k] = (L(e_c) L(e_d)^T)[i, k] / 4 for Haar h
    left = quaternion_left_matrix(np.eye(4))
    h = haar_sample_su2(5, 200_000)
    for i in range(4):
        for k in range(4):
            w = _symmetrizer(LieFlowSpec(UniformTorus(), i=i, k=k, group="su2"))
            want = np.einsum("cm,dm->cd", left[:, i, :], left[:, k, :]) / 4
            assert np.allclose(w, want)
    rows = np.einsum("cim,nm->nci", left, h)  # (e_c h)_i per sample
    est = np.einsum("nc,nd->cd", rows[:, :, 1], rows[:, :, 2]) / h.shape[0]
    w = _symmetrizer(LieFlowSpec(UniformTorus(), i=1, k=2, group="su2"))
    assert np.abs(est - w).max() < 0.01


@given(unit, st.floats(0, 5), st.floats(-20, 20))
def test_rodrigues_matches_expm(axis, speed, t):
    gen = RotationGenerator(axis, speed)
    assert np.allclose(rodrigues_exp(gen, t), linalg.expm(t * gen.matrix), atol=1e-9)


def test_generator_validation():
    with pytest.raises(ValueError):
        RotationGenerator((1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        RotationGenerator((1.0, 0.0, 0.0), -1.0)
    with pytest.raises(ValueError):
        LieFlowSpec(UniformTorus(), i=3)
    with pytest.raises(KeyError):
        LieFlowSpec(UniformTorus(), omega="nope")


@pytest.mark.parametrize("group,idx", [("so3", (0, 0, 0, 0)), ("so3", (0, 1, 1, 1)), ("so3", (2, 2, 2, 2)),
                                       ("so3", (1, 0, 0, 2)), ("su2", (0, 0, 0, 0)), ("su2", (1, 0, 2, 0)),
                                       ("su2", (3, 0, 3, 0))])
@pytest.mark.parametrize("omega", ["linear", "cos"])
def test_mc_matches_reduced_prediction(group, idx, omega):
    spec = LieFlowSpec(UniformTorus(), omega, (0.6, 0.0, 0.8), *idx, group=group)
    t = np.array([0.3, 1.7, 6.0, 25.0])
    out = lie_cov_mc(spec, t, 40_000, seed=2)
    assert np.all(np.abs(out.value - out.prediction) < 5 * out.stderr + 2e-4)


def test_symmetrization_reduces_variance_only():
    spec = LieFlowSpec(UniformTorus(), "linear", (0.0, 0.0, 1.0), 0, 0, 0, 0)
    t = np.array([2.0])
    sym = lie_cov_mc(spec, t, 40_000, seed=3)
    raw = lie_cov_mc(spec, t, 40_000, seed=3, symmetrize=False)
    assert abs(raw.value[0] - raw.prediction[0]) < 5 * raw.stderr[0]
    assert sym.stderr[0] < raw.stderr[0]


def test_haar_centering_keeps_axis_term():
    spec = LieFlowSpec(UniformTorus(), "linear", (0.0, 0.0, 1.0), 2, 0, 2, 0)
    # along the axis R - P vanishes, but the Haar-centred covariance keeps P_22 / 3
    inv = reduced_prediction(spec, [5.0], "invariant")
    haar = reduced_prediction(spec, [5.0], "haar")
    assert abs(inv[0]) < 1e-12 and haar[0] == pytest.approx(1 / 3)
    out = lie_cov_mc(spec, [5.0], 20_000, centering="haar")
    assert abs(out.value[0] - 1 / 3) < 5 * out.stderr[0] + 1e-3


def test_atomic_base_does_not_decay():
    base = Atomic(np.array([0.25, 0.5]), np.array([0.5, 0.5]))
    spec = LieFlowSpec(base, "linear", (0.0, 0.0, 1.0), 0, 0, 0, 0)
    t = np.linspace(100, 200, 101)
    out = lie_cov_mc(spec, t, 20_000)
    assert np.abs(out.value).max() >= 0.2
    assert np.allclose(out.value, out.prediction, atol=5 * out.stderr.max() + 1e-3)


def test_zero_speed_atom_is_invariant():
    base = Atomic(np.array([0.0, 0.5]), np.array([0.5, 0.5]))
    spec = LieFlowSpec(base, "linear", (0.0, 0.0, 1.0), 0, 0, 0, 0)
    assert spec.zero_speed_mass() == 0.5
    out = lie_cov_mc(spec, np.array([1.0, 3.0]), 20_000)
    assert np.allclose(out.value, out.prediction, atol=5 * out.stderr.max() + 1e-3)


def test_reduction_of_linear_speed_is_uniform():
    red = orbit_torus_reduce(LieFlowSpec(UniformTorus(), "linear"))
    t = np.array([0.5, 1.5, 3.25])
    assert np.allclose(red.char(t), UniformTorus().char(t), atol=1e-10)


@pytest.mark.slow
def test_reduced_order_tracks_mc_order_for_cos_speed():
    # observed 0.497 (MC) against 0.493 (reduction)
    spec = LieFlowSpec(UniformTorus(), "cos")
    t = np.geomspace(1, 200, 256)
    from kshear.decay import fit_envelope
    mc = fit_envelope(t, lie_cov_mc(spec, t, 100_000).value, blocks=16).fitted_order
    red = rajchman_fit(orbit_torus_reduce(spec), 1, 200, 16, integer_grid=False, points_per_block=32).fitted_order
    assert abs(mc - red) < 0.1


def test_varying_axis_is_unsupported():
    def field(x):
        ax = np.stack([np.cos(2 * np.pi * x), np.sin(2 * np.pi * x), np.zeros_like(x)], axis=1)
        return ax, np.ones_like(x)
    spec = LieFlowSpec(UniformTorus(), generator_field=field)
    with pytest.raises(NotImplementedError):
        orbit_torus_reduce(spec)
    with pytest.raises(NotImplementedError):
        lie_cov_mc(spec, [1.0], 1000)
