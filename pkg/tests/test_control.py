import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from hamperturb.control import (
    ControlCurve,
    ControlData,
    bracket_closed_forms,
    bracket_sequence,
    dirac_control_span,
    from_hamvec,
    hamvec,
    kd_characterization_check,
    kd_membership,
    random_hamiltonian_matrix,
    span_test,
    symmetric_basis,
    synthesize_control,
    target_from_direction,
    transition_ode_solve,
)
from hamperturb.exceptions import UncontrollableError
from hamperturb.geometry import is_hamiltonian_matrix


def random_sym(rng, d, scale=1.0):
    A = rng.normal(size=(d, d)) * scale
    return 0.5 * (A + A.T)


def random_D(rng, d):
    return np.diag(rng.choice([-1.0, 1.0], size=d))


def test_zero_curvature_gives_a_shear():
    D = np.diag([1.0, -1.0])
    L = np.asarray(transition_ode_solve(ControlData.constant(D, np.zeros((2, 2)), delta=0.7)))
    expected = np.eye(4)
    expected[:2, 2:] = 0.7 * D
    assert np.allclose(L, expected, atol=1e-12)


def test_unit_curvature_gives_a_rotation():
    L = np.asarray(transition_ode_solve(ControlData.constant([[1.0]], [[1.0]], delta=1.2)))
    c, s = np.cos(1.2), np.sin(1.2)
    assert np.allclose(L, [[c, s], [-s, c]], atol=1e-11)


def test_control_data_validation():
    with pytest.raises(ValueError):
        ControlData.constant([[2.0]], [[1.0]])
    with pytest.raises(ValueError):
        ControlData.constant([[1.0]], [[1.0]], delta=0.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), d=st.integers(1, 3))
def test_brackets_match_closed_forms(seed, d):
    rng = np.random.default_rng(seed)
    D, K0, K1, B = random_D(rng, d), random_sym(rng, d), random_sym(rng, d), random_sym(rng, d)
    W = bracket_sequence(ControlData.constant(D, K0, K1), B, m=3)
    for Wi, Ci in zip(W[1:], bracket_closed_forms(D, K0, K1, B)):
        assert np.allclose(Wi, Ci, atol=1e-12)
    assert all(is_hamiltonian_matrix(Wi, 1e-10) for Wi in W)


def test_bracket_depth_cap():
    cd = ControlData.constant([[1.0]], [[1.0]])
    with pytest.raises(ValueError):
        bracket_sequence(cd, [[1.0]], m=5)


@pytest.mark.parametrize(
    "D,K0,rank",
    [
        ([[1.0]], [[0.3]], 3),
        (np.diag([1.0, -1.0]), np.diag([1.0, 2.0]), 10),
        (np.eye(2), np.eye(2), 9),
        (np.eye(3), np.eye(3), 18),
    ],
)
def test_span_ranks_frozen(D, K0, rank):
    rep = span_test(ControlData.constant(D, K0))
    assert rep.rank == rank
    assert rep.full == (rank == rep.dim_target)


def test_span_depth_must_be_at_least_three():
    with pytest.raises(ValueError):
        span_test(ControlData.constant([[1.0]], [[1.0]]), m=2)


def test_kd_membership_frozen():
    assert kd_membership(np.eye(2), np.eye(2)).member
    assert not kd_membership(np.eye(2), np.diag([1.0, 2.0])).member
    assert kd_membership(np.diag([1.0, -1.0]), np.diag([1.0, -1.0])).member
    # d = 1 has nothing to obstruct
    rep = kd_membership([[1.0]], [[4.0]])
    assert not rep.member and rep.dim_target == 0
    with pytest.raises(ValueError):
        kd_membership(np.diag([2.0, 1.0]), np.eye(2))


@pytest.mark.parametrize("d", [2, 3])
def test_kd_characterization_agrees_with_repeated_eigenvalues(d):
    rep = kd_characterization_check(d, 200, np.random.default_rng(d))
    assert rep.disagreements_outside_band == 0
    assert rep.agreements + rep.disagreements_outside_band == rep.trials


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), d=st.integers(1, 3))
def test_hamvec_roundtrip(seed, d):
    N = random_hamiltonian_matrix(np.random.default_rng(seed), d)
    assert np.allclose(from_hamvec(hamvec(N), d), N, atol=1e-13)
    # the coordinates are an isometry for the Frobenius norm of J N
    assert np.linalg.norm(hamvec(N)) == pytest.approx(np.linalg.norm(N), rel=1e-12)


def test_symmetric_basis_is_orthonormal():
    basis = symmetric_basis(3)
    G = np.array([[np.sum(a * b) for b in basis] for a in basis])
    assert len(basis) == 6 and np.allclose(G, np.eye(6))


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.0, 1.0), seed=st.integers(0, 2**31 - 1))
def test_control_curve_jets(t, seed):
    rng = np.random.default_rng(seed)
    c = ControlCurve.zero(1.0, 2).with_coeffs(rng.normal(size=24))
    h = 1e-6
    B0, B1, B2 = c.jet(t, 2)
    assert np.allclose(B0, B0.T)
    assert np.allclose((c(t + h) - c(t - h)) / (2 * h), B1, atol=1e-5)
    assert np.allclose((c(t + h, 1) - c(t - h, 1)) / (2 * h), B2, atol=1e-3)


def test_control_curve_support_is_inside_the_segment():
    c = ControlCurve.zero(0.5, 1, start=0.25).with_coeffs(np.ones(8))
    a, b = c.support()
    assert 0.25 < a < b < 0.75
    assert np.all(c(0.25) == 0) and np.all(c(0.75) == 0)
    assert c.scaled(-2.0).coeffs.tolist() == (-2 * np.ones((8, 1))).tolist()
    assert c.to_dict()["kind"] == "ControlCurve"


def test_small_controls_act_linearly():
    cd = ControlData.constant([[1.0]], [[0.0]], delta=1.0)
    c = ControlCurve.zero(1.0, 1).with_coeffs(np.linspace(-1, 1, 8))
    L0 = np.asarray(transition_ode_solve(cd))
    d1 = np.asarray(transition_ode_solve(cd, c.scaled(1e-4))) - L0
    d2 = np.asarray(transition_ode_solve(cd, c.scaled(2e-4))) - L0
    assert np.linalg.norm(d1) > 1e-6
    assert np.allclose(d2, 2 * d1, atol=1e-7)


@pytest.mark.parametrize(
    "D,K0,K1",
    [
        ([[1.0]], [[0.5]], [[0.2]]),
        ([[-1.0]], [[1.3]], [[0.0]]),
        (np.diag([1.0, -1.0]), np.diag([1.0, 0.5]), np.zeros((2, 2))),
    ],
)
def test_synthesis_reaches_nearby_targets(rng, D, K0, K1):
    cd = ControlData.constant(D, K0, K1, delta=0.5)
    L0 = np.asarray(transition_ode_solve(cd))
    N = random_hamiltonian_matrix(rng, cd.d)
    target = target_from_direction(L0, N, 1e-3)
    res = synthesize_control(cd, target)
    assert res.residual <= 1e-10
    assert res.warning == ""
    assert res.history[0] > res.history[-1]
    assert np.allclose(np.asarray(transition_ode_solve(cd, res.B)), target, atol=1e-10)


def test_synthesis_rejects_far_targets():
    cd = ControlData.constant([[1.0]], [[0.5]], delta=0.5)
    L0 = np.asarray(transition_ode_solve(cd))
    with pytest.raises(ValueError):
        synthesize_control(cd, L0 @ expm(np.array([[0.0, 1.0], [0.0, 0.0]])))


def test_synthesis_reports_the_obstructed_direction():
    cd = ControlData.constant(np.eye(2), np.eye(2), delta=0.5)
    L0 = np.asarray(transition_ode_solve(cd))
    N = np.zeros((4, 4))
    N[0, 1], N[1, 0], N[2, 3], N[3, 2] = 1.0, -1.0, 1.0, -1.0
    with pytest.raises(UncontrollableError) as err:
        synthesize_control(cd, target_from_direction(L0, N, 1e-3))
    null = err.value.null_directions
    assert len(null) == 1
    # the unreachable direction is the rotation commuting with everything here
    v = hamvec(null[0])
    u = hamvec(N)
    assert abs(v @ u) / (np.linalg.norm(v) * np.linalg.norm(u)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("d", [1, 2])
def test_dirac_controls_span_and_converge(d):
    D = np.diag([1.0, -1.0][:d])
    cd = ControlData.constant(D, np.diag([0.7, 1.2][:d]), delta=1.0)
    rep = dirac_control_span(cd, 0.5, 0.05)
    assert rep.rank == 2 * d
    assert rep.combined_rank == 2 * d - 1
    assert 0.9 < rep.convergence_rate < 1.1
    assert rep.errors[-1] < rep.errors[0]


def test_dirac_span_validates_times():
    cd = ControlData.constant([[1.0]], [[1.0]])
    with pytest.raises(ValueError):
        dirac_control_span(cd, 0.05, 0.1)
