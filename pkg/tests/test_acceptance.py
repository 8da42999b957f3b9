"""The ten acceptance criteria, each at its stated tolerance and time budget."""

import numpy as np
from scipy.optimize import brentq

from hamperturb.control import (
    ControlCurve,
    ControlData,
    bracket_closed_forms,
    bracket_sequence,
    dirac_control_span,
    kd_characterization_check,
    kd_membership,
    random_hamiltonian_matrix,
    span_test,
    transition_ode_solve,
    vertical_span_check,
)
from hamperturb.flow import FlowConfig, integrate_flow
from hamperturb.geometry import (
    CallablePotential,
    add_potential,
    fiberwise_iso_energetic_test,
    standard_symplectic_form,
)
from hamperturb.models import random_fiberwise_quadratic, zoo
from hamperturb.normalform import build_normal_form
from hamperturb.orbits import (
    find_periodic_orbit,
    make_section_frame,
    neat_times,
    orbit_from_data,
    restricted_return_map,
    restricted_transition_map,
    sigma_scan,
)
from hamperturb.pipeline import design_perturbation, prepare_segment
from hamperturb.potentials import admissible_from_B, potential_for_control, transport_potential


def _restricted_action(A, frame):
    """Matrix of a linear phase-space map preserving the frame span, in the frame basis."""
    E = frame.basis
    n = E.shape[0] // 2
    return -standard_symplectic_form(E.shape[1] // 2) @ E.T @ standard_symplectic_form(n) @ A @ E


def test_criterion_01_bordered_determinant_identity(criterion, rng):
    c = criterion(1, "bordered determinant = -2 det(G) H; degeneracy crossings at H = 0", 5.0)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        H = random_fiberwise_quadratic(rng, n)
        x = rng.normal(size=2 * n)
        G = H.hessian(x)[n:, n:]
        det = fiberwise_iso_energetic_test(H, x, tol=0.0).det_value
        scale = 1.0 + abs(np.linalg.det(G) * H.value(x))
        worst = max(worst, abs(det + 2 * np.linalg.det(G) * H.value(x)) / scale)
    c.check(worst <= 1e-8, f"identity error {worst:.1e} <= 1e-8 (100 models)")

    # the scan runs on the kinetic part along a trajectory of kinetic + potential,
    # so that the kinetic energy actually changes sign
    worst_t, matched, total, spurious = 0.0, 0, 0, 0
    for _ in range(5):
        n = 2
        K = random_fiberwise_quadratic(rng, n, q_dependent=False)
        b = rng.normal(size=n)
        V = CallablePotential(
            lambda q, b=b: 0.3 * np.sin(b @ q) + 0.1 * q @ q,
            lambda q, b=b: 0.3 * np.cos(b @ q) * b + 0.2 * q,
            lambda q, b=b: -0.3 * np.sin(b @ q) * np.outer(b, b) + 0.2 * np.eye(n),
        )
        x0 = rng.normal(size=2 * n)
        traj = integrate_flow(add_potential(K, V), x0, (0.0, 4.0), FlowConfig(1e-12, 1e-13))
        events = [e for e in sigma_scan(K, traj) if e.kind == "crossing"]
        energy = lambda t: K.value(traj.state(t))
        ts = np.linspace(0.0, 4.0, 4001)
        vals = np.array([energy(t) for t in ts])
        roots = [brentq(energy, a, b, xtol=1e-15) for a, b, fa, fb in zip(ts[:-1], ts[1:], vals[:-1], vals[1:]) if fa * fb < 0]
        total += len(roots)
        spurious += sum(min((abs(e.t - r) for r in roots), default=np.inf) > 1e-8 for e in events)
        for r in roots:
            if events:
                dt = min(abs(e.t - r) for e in events)
                worst_t = max(worst_t, dt)
                matched += dt <= 1e-8
    c.check(total > 0 and matched == total and spurious == 0,
            f"{matched}/{total} energy zeros matched, worst {worst_t:.1e} <= 1e-8, {spurious} spurious crossings")
    assert c.finish()


def test_criterion_02_normal_form_zoo(criterion):
    c = criterion(2, "normal form on the model zoo", 60.0)
    names = ["convex_curved", "nonconvex_d1", "nonconvex_d2", "harmonic_detuned", "pendulum"]
    for name in names:
        z = zoo()[name]
        nf = build_normal_form(z.H, z.x0, 0.5)
        r = nf.residuals
        worst = max(r.orbit, r.qp_hat, r.p1_phat, r.phat_phat, r.q1_q)
        dg = nf.diagonalization
        ok = r.n_samples == 20 and worst <= 1e-6 and dg.factor_residual <= 1e-8 and dg.symmetry_residual <= 1e-10
        c.check(ok, f"{name}: residual {worst:.1e}, MDM^T-A {dg.factor_residual:.1e}, B asym {dg.symmetry_residual:.1e}")
    assert c.finish()


def test_criterion_03_linearized_map_consistency(criterion, rng):
    c = criterion(3, "variational transition maps vs control ODE", 60.0)
    for name in ["harmonic_detuned", "nonconvex_d2"]:
        z = zoo()[name]
        nf = build_normal_form(z.H, z.x0, 0.5)
        cd = ControlData.from_normal_form(nf)
        d, delta = cd.d, nf.delta
        fa = make_section_frame(z.H, nf.orbit_point(0.0), normal=nf.section_normal(0.0), basis=nf.frame(0.0))
        fb = make_section_frame(z.H, nf.orbit_point(delta), normal=nf.section_normal(delta), basis=nf.frame(delta))
        worst = 0.0
        for _ in range(5):
            B = ControlCurve(delta, d, 2.0 * rng.normal(size=(8, d * (d + 1) // 2)))
            u = transport_potential(potential_for_control(B, 0.05), nf.chart, z.H)
            L = np.asarray(restricted_transition_map(z.H, fa, fb, delta, u=u))
            worst = max(worst, float(np.max(np.abs(L - np.asarray(transition_ode_solve(cd, B))))))
        c.check(worst <= 1e-5, f"{name}: max deviation {worst:.1e} <= 1e-5 over 5 potentials")
    assert c.finish()


def test_criterion_04_bracket_closed_forms(criterion, rng):
    c = criterion(4, "bracket recursion vs closed forms", 5.0)
    worst, ham = 0.0, 0.0
    J = standard_symplectic_form
    for _ in range(100):
        d = int(rng.integers(1, 4))
        D = np.diag(rng.choice([-1.0, 1.0], d))
        K0, K1, B = (0.5 * (A + A.T) for A in rng.normal(size=(3, d, d)))
        W = bracket_sequence(ControlData.constant(D, K0, K1), B, 3)
        C = bracket_closed_forms(D, K0, K1, B)
        worst = max(worst, max(float(np.max(np.abs(W[i + 1] - C[i]))) for i in range(3)))
        ham = max(ham, max(float(np.max(np.abs(J(d) @ w - (J(d) @ w).T))) for w in W))
    c.check(worst <= 1e-9, f"closed-form mismatch {worst:.1e} <= 1e-9")
    c.check(ham <= 1e-10, f"Hamiltonian defect {ham:.1e} <= 1e-10")
    assert c.finish()


def test_criterion_05_kd_membership(criterion, rng):
    c = criterion(5, "commutator obstruction set", 10.0)
    K1 = rng.normal(size=(1, 1))
    c.check(not kd_membership(np.eye(1), K1).member and kd_membership(np.eye(1), K1).dim_target == 0, "d=1 never a member")
    r = kd_membership(np.eye(2), np.eye(2))
    c.check(r.rank == 0 and r.member, f"D=I, K=I: rank {r.rank}, member {r.member}")
    r = kd_membership(np.eye(2), np.diag([1.0, 2.0]))
    c.check(r.rank == 1 and not r.member, f"D=I, K=diag(1,2): rank {r.rank}, member {r.member}")
    outside, trials = 0, 0
    for d in (1, 2, 3, 4):
        rep = kd_characterization_check(d, 125, rng, band=1e-6)
        outside += rep.disagreements_outside_band
        trials += rep.trials
    c.check(outside == 0 and trials == 500, f"{outside} disagreements outside the band over {trials} random K")
    assert c.finish()


def test_criterion_06_controllability_span(criterion, rng):
    c = criterion(6, "bracket span ranks", 30.0)
    for d in (1, 2, 3):
        full = 0
        count = 0
        while count < 100:
            D = np.diag(rng.choice([-1.0, 1.0], d))
            K0, K1 = (0.5 * (A + A.T) for A in rng.normal(size=(2, d, d)))
            if kd_membership(D, K0).member:
                continue
            count += 1
            full += span_test(ControlData.constant(D, K0, K1), 3).full
        c.check(full == 100, f"d={d}: {full}/100 non-member K(0) give full rank {d * (2 * d + 1)}")
        r = span_test(ControlData.constant(np.eye(d), np.eye(d)), 3)
        expect = d * (2 * d + 1) - d * (d - 1) // 2
        c.check(r.rank == expect, f"d={d}, K=I: rank {r.rank} == {expect}")
    assert c.finish()


def test_criterion_07_perturbation_realization(criterion, rng):
    c = criterion(7, "return map moved to L0 exp(eps N)", 300.0)
    z = zoo()["harmonic_detuned"]
    orbit = find_periodic_orbit(z.H, z.x0, z.period)
    setup = prepare_segment(z.H, orbit, 0.0, 0.5)
    worst = 0.0
    disjoint = True
    for _ in range(5):
        N = random_hamiltonian_matrix(rng, setup.control.d)
        des = design_perturbation(setup, N, 1e-3)
        worst = max(worst, des.relative_residual)
        disjoint &= des.disjoint
    c.check(worst <= 0.1, f"worst relative residual {worst:.1e} <= 0.1 over 5 directions")
    c.check(disjoint, "potential supports avoid the rest of the orbit")
    assert c.finish()


def test_criterion_08_reversible_libration(criterion, rng):
    c = criterion(8, "libration: R = LRL and no neat time", 60.0)
    z = zoo()["libration"]
    orbit = orbit_from_data(z.H, z.x0, z.period)
    nt = neat_times(orbit)
    c.check(len(nt) == 0 and not nt.full, f"neat times {list(nt)}")
    n = z.H.n
    Rfull = np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
    A = z.x0[0]
    frame0 = make_section_frame(z.H, z.x0, normal=np.array([0.0, 0.0, 1.0, 0.0]))
    L0 = np.asarray(restricted_return_map(z.H, orbit, frame0, period=z.period))
    worst, moved = 0.0, np.inf
    for _ in range(10):
        # admissible along the axis q2 = 0 that the brake orbit sweeps
        B = ControlCurve(2 * A, 1, rng.normal(size=(8, 1)), start=-A)
        u = admissible_from_B(B, 0.1)
        Hu = add_potential(z.H, u)
        frame = make_section_frame(Hu, z.x0, normal=np.array([0.0, 0.0, 1.0, 0.0]))
        R = _restricted_action(Rfull, frame)
        L = np.asarray(restricted_return_map(Hu, orbit, frame, period=z.period))
        worst = max(worst, float(np.max(np.abs(R - L @ R @ L))))
        moved = min(moved, float(np.max(np.abs(L - L0))))
    c.check(worst <= 1e-5, f"|R - LRL| {worst:.1e} <= 1e-5 over 10 potentials")
    c.check(moved > 1e-3, f"every potential changes L (smallest change {moved:.1e})")
    assert c.finish()


def test_criterion_09_momentum_linear_block_row(criterion, rng):
    c = criterion(9, "H = p1: first block row [I, 0]", 10.0)
    z = zoo()["momentum_linear"]
    H = z.H
    orbit = orbit_from_data(H, z.x0, z.period)
    basis = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    worst, moved = 0.0, np.inf
    for _ in range(10):
        B = ControlCurve(5.0, 1, rng.normal(size=(8, 1)), start=0.5)
        u = admissible_from_B(B, 0.2)
        frame = make_section_frame(add_potential(H, u), z.x0, normal=np.array([1.0, 0, 0, 0]), basis=basis)
        L = np.asarray(restricted_return_map(H, orbit, frame, u=u))
        worst = max(worst, float(np.max(np.abs(L[:1] - np.array([[1.0, 0.0]])))))
        moved = min(moved, abs(L[1, 0]))
    c.check(worst <= 1e-8, f"|first block row - [I, 0]| {worst:.1e} <= 1e-8 over 10 potentials")
    c.check(moved > 1e-3, f"second block row does move (smallest |L21| {moved:.1e})")
    assert c.finish()


def test_criterion_10_dirac_spanning(criterion):
    c = criterion(10, "Dirac-control and vertical spanning", 60.0)
    for D, K in [(np.eye(1), np.eye(1)), (np.diag([1.0, -1.0]), np.diag([1.0, 3.0]))]:
        cd = ControlData.constant(D, K, delta=1.0)
        d = cd.d
        sp = dirac_control_span(cd, 0.6, 0.1, halvings=3)
        c.check(sp.rank == 2 * d, f"d={d}: joint rank {sp.rank} == {2 * d}")
        c.check(0.8 <= sp.convergence_rate <= 1.2, f"d={d}: width convergence rate {sp.convergence_rate:.2f}")
    for name in ["momentum_linear", "nonconvex_d2"]:
        z = zoo()[name]
        d = z.H.n - 1
        k = 2 * d + 3
        vs = vertical_span_check(z.H, z.x0, np.linspace(0.1, 0.5, k), 0.01)
        c.check(vs.spans_verticals, f"{name}: rank {vs.rank} == k(d+1) = {k * (d + 1)}, margin {vs.margin:.2e}")
    assert c.finish()
