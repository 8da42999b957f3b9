import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamperturb.exceptions import HypothesisViolation
from hamperturb.flow import flow_map
from hamperturb.geometry import standard_symplectic_form
from hamperturb.models import zoo
from hamperturb.normalform import (
    SampledCurve,
    build_normal_form,
    signature_matrix,
    solve_diagonalizing_curve,
    verify_normal_form,
)

ZOO = zoo()
SIGNATURES = {
    "harmonic_detuned": [1],
    "nonconvex_d1": [-1],
    "nonconvex_d2": [1, -1],
    "pendulum": [1],
    "nonconvex_curved_d2": [1, -1],
}


@pytest.fixture(scope="module")
def forms():
    return {name: build_normal_form(ZOO[name].H, ZOO[name].x0, 0.5) for name in SIGNATURES}


@pytest.mark.parametrize("name", sorted(SIGNATURES))
def test_signatures_and_residuals_frozen(forms, name):
    nf = forms[name]
    assert np.diag(nf.D).tolist() == SIGNATURES[name]
    assert nf.delta == 0.5 and nf.halvings == 0
    assert nf.residuals.passed
    assert [p.name for p in nf.chart.pieces] == ["straighten", "momentum", "flowbox", "shear", "diagonalize", "restore"]


def test_constant_coefficient_models_keep_their_curvature(forms):
    assert np.allclose(forms["harmonic_detuned"].K(0.2), [[1.69]], atol=1e-8)
    assert np.allclose(forms["nonconvex_d1"].K(-0.4), [[1.0]], atol=1e-8)
    assert np.allclose(forms["nonconvex_d2"].K(0.1), np.diag([1.0, 0.5]), atol=1e-8)


@pytest.mark.parametrize("t", [-0.4, 0.0, 0.3])
def test_pendulum_curvature_follows_the_orbit(forms, t):
    z = ZOO["pendulum"]
    q1 = flow_map(z.H, z.x0, t)[0] if t else 0.0
    assert forms["pendulum"].K(t)[0, 0] == pytest.approx(1 + 0.3 * np.cos(q1), abs=1e-7)


def test_curved_d2_frozen(forms):
    K = forms["nonconvex_curved_d2"].K
    assert np.allclose(K(0.0), [[0.590133, 0.110441], [0.110441, 0.672061]], atol=1e-6)
    assert np.allclose(K(0.3), [[0.513841, 0.034477], [0.034477, 0.716645]], atol=1e-6)


@settings(max_examples=15, deadline=None)
@given(t=st.floats(-0.5, 0.5), name=st.sampled_from(sorted(SIGNATURES)))
def test_chart_is_symplectic_and_carries_the_orbit(forms, t, name):
    nf = forms[name]
    z = ZOO[name]
    n = nf.chart.n
    y = np.zeros(2 * n)
    y[0] = t
    assert nf.chart.symplectic_residual(y) < 1e-8
    x_orbit = flow_map(z.H, z.x0, t) if t else z.x0
    assert np.allclose(z.H.wrap(nf.orbit_point(t) - x_orbit), 0, atol=1e-7)
    E = nf.frame(t)
    d = n - 1
    assert np.allclose(E.T @ standard_symplectic_form(n) @ E, standard_symplectic_form(d), atol=1e-8)
    a = nf.section_normal(t)
    assert a @ z.H.vector_field(x_orbit) == pytest.approx(1.0, abs=1e-7)


@settings(max_examples=10, deadline=None)
@given(qhat=st.lists(st.floats(-0.05, 0.05), min_size=2, max_size=2), t=st.floats(-0.4, 0.4))
def test_base_inverse_roundtrip(forms, qhat, t):
    chart = forms["nonconvex_curved_d2"].chart
    y = np.array([t, *qhat])
    target = chart.base_map(y)
    assert np.allclose(chart.base_inverse(target), y, atol=1e-10)


def test_charted_hamiltonian_is_invariant(forms):
    nf = forms["nonconvex_curved_d2"]
    y = np.array([0.1, 0.02, -0.03, 0.05, 0.01, -0.02])
    assert nf.H_chart.value(y) == pytest.approx(nf.H.value(nf.chart.forward(y)), abs=1e-14)


def test_untransformed_hamiltonian_fails_verification():
    z = ZOO["nonconvex_curved"]
    res = verify_normal_form(z.H, 0.3)
    assert not res.passed
    assert len(res.lines()) == 6


@pytest.mark.parametrize("name", ["momentum_linear", "null_torus"])
def test_degenerate_start_points_are_rejected(name):
    z = ZOO[name]
    with pytest.raises(HypothesisViolation):
        build_normal_form(z.H, z.x0, 0.5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), d=st.integers(1, 3))
def test_signature_matrix_factors(seed, d):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    A = A + A.T + 0.1 * np.sign(rng.normal()) * np.eye(d)
    if np.min(np.abs(np.linalg.eigvalsh(A))) < 1e-3:
        return
    D, M0 = signature_matrix(A)
    assert np.allclose(M0 @ D @ M0.T, A, atol=1e-10)
    s = np.diag(D)
    assert np.all(np.abs(s) == 1) and np.all(np.diff(s) <= 0)


def test_diagonalizing_curve_has_symmetric_generator():
    ts = np.linspace(-1, 1, 81)
    A = np.array([[[1 + 0.3 * t, 0.2 * t**2], [0.2 * t**2, -1 + 0.1 * np.sin(t)]] for t in ts])
    data = solve_diagonalizing_curve(ts, A)
    assert data.factor_residual < 1e-9
    assert data.symmetry_residual < 1e-9
    assert np.diag(data.D).tolist() == [1, -1]


def test_sampled_curve_jets():
    ts = np.linspace(-1, 1, 41)
    c = SampledCurve(ts, np.sin(ts)[:, None])
    v, d1, d2 = c.jet(0.37, 2)
    assert v[0] == pytest.approx(np.sin(0.37), abs=1e-9)
    assert d1[0] == pytest.approx(np.cos(0.37), abs=1e-7)
    assert d2[0] == pytest.approx(-np.sin(0.37), abs=1e-5)


def test_text_export(forms):
    text = forms["nonconvex_d2"].to_text(n_samples=3)
    assert text.startswith("[normal_form]\n")
    assert "D = [1, -1]" in text
    assert text.count("\n") == len(text.splitlines())
