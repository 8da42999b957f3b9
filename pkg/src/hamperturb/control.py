"""Linear control system on the symplectic group.

Along a normalized segment the restricted linearized transition maps solve
``L' = (Y(t) + W0(B(t))) L`` with ``Y = [[0, D], [-K, 0]]`` and
``W0(B) = [[0, 0], [B, 0]]``, where ``B(t)`` is the transverse Hessian of the
added potential.  This module integrates that system, computes the iterated
bracket families, runs the rank tests and solves for controls.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, logm

from .bumps import dirac_bump, poly_bump
from .exceptions import ConstructionError, UncontrollableError
from .geometry import SympMatrix, standard_symplectic_form
from .flow import DEFAULT_CONFIG, FlowConfig, integrate_flow, integrate_variational
from .geometry import add_potential
from .normalform import (
    EXTENSION,
    ChartedHamiltonian,
    ConstantCurve,
    FiberedChart,
    straighten_projection,
    vertical_normalization,
)
from .potentials import ScaledPotential, dirac_jet_potential

RANK_RTOL = 1e-9


# ---------------------------------------------------------------------------
# data


class LinearCurve:
    """``K(t) = K0 + t K1`` (exact jets)."""

    def __init__(self, K0, K1=None):
        self.K0 = np.asarray(K0, dtype=float)
        self.K1 = np.zeros_like(self.K0) if K1 is None else np.asarray(K1, dtype=float)
        self.shape = self.K0.shape

    def jet(self, s, order=2):
        out = [self.K0 + s * self.K1, self.K1]
        out += [np.zeros(self.shape)] * (order - 1)
        return out[: order + 1]

    def __call__(self, s, nu=0):
        return self.jet(float(s), max(nu, 1))[nu]


@dataclass(frozen=True)
class ControlData:
    """``D`` and the curve ``K(t)`` of a normalized segment on ``[0, delta]``."""

    D: np.ndarray
    K: object
    delta: float

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        if D.ndim != 2 or not np.allclose(D, np.diag(np.diag(D))) or not np.allclose(np.abs(np.diag(D)), 1.0):
            raise ValueError("D must be diagonal with entries +-1")
        object.__setattr__(self, "D", D)
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @classmethod
    def constant(cls, D, K0, K1=None, delta=1.0):
        return cls(np.asarray(D, dtype=float), LinearCurve(K0, K1), float(delta))

    @classmethod
    def from_normal_form(cls, nf):
        return cls(nf.D, nf.K, nf.delta)

    @property
    def d(self):
        return self.D.shape[0]

    def K_prime(self, t):
        return self.K.jet(float(t), 1)[1]

    def Y(self, t):
        d = self.d
        out = np.zeros((2 * d, 2 * d))
        out[:d, d:] = self.D
        out[d:, :d] = -self.K(t)
        return out

    def Y_jet(self, t, order):
        """Taylor coefficients ``Y^(k)(t)/k!`` for ``k = 0..order``."""
        d = self.d
        Ks = self.K.jet(float(t), max(order, 1))
        out = np.zeros((order + 1, 2 * d, 2 * d))
        fact = 1.0
        for k in range(order + 1):
            if k:
                fact *= k
            out[k, d:, :d] = -Ks[k] / fact
        out[0, :d, d:] = self.D
        return out


def symmetric_basis(d):
    """Orthonormal basis of symmetric ``d x d`` matrices (Frobenius inner product)."""
    basis = []
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1 / np.sqrt(2)
            basis.append(E)
    return basis


def antisymmetric_coords(A):
    d = A.shape[0]
    return np.array([A[i, j] for i in range(d) for j in range(i + 1, d)])


def hamvec(N):
    """Coordinates of a Hamiltonian matrix: upper triangle of the symmetric ``J N``."""
    m = N.shape[0] // 2
    S = standard_symplectic_form(m) @ N
    S = 0.5 * (S + S.T)
    iu = np.triu_indices(2 * m)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2))
    return S[iu] * w


def from_hamvec(v, m):
    iu = np.triu_indices(2 * m)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2))
    S = np.zeros((2 * m, 2 * m))
    S[iu] = v / w
    S = S + S.T - np.diag(np.diag(S))
    return -standard_symplectic_form(m) @ S


@dataclass(frozen=True)
class ControlCurve:
    """``B(t) = sum_m coeffs[m, s] bump_m(t) E_s`` with polynomial bumps inside ``(start, start + delta)``."""

    delta: float
    d: int
    coeffs: np.ndarray
    n_centers: int = 8
    start: float = 0.0

    @classmethod
    def zero(cls, delta, d, n_centers=8, start=0.0):
        return cls(float(delta), d, np.zeros((n_centers, d * (d + 1) // 2)), n_centers, float(start))

    @property
    def n_params(self):
        return self.coeffs.size

    def with_coeffs(self, flat):
        coeffs = np.asarray(flat, dtype=float).reshape(self.coeffs.shape)
        return ControlCurve(self.delta, self.d, coeffs, self.n_centers, self.start)

    def centers(self):
        return self.start + self.delta * (np.arange(self.n_centers) + 1) / (self.n_centers + 1)

    @property
    def half_width(self):
        return 0.9 * self.delta / (self.n_centers + 1)

    def support(self):
        c = self.centers()
        return float(c[0] - self.half_width), float(c[-1] + self.half_width)

    def jet(self, t, order=2):
        d = self.d
        out = [np.zeros((d, d)) for _ in range(order + 1)]
        hw = self.half_width
        basis = symmetric_basis(d)
        for m, c in enumerate(self.centers()):
            x = (t - c) / hw
            if abs(x) >= 1.0:
                continue
            prof = poly_bump(x, order)
            S = sum(self.coeffs[m, s] * basis[s] for s in range(len(basis)))
            for nu in range(order + 1):
                out[nu] = out[nu] + prof[nu] / hw**nu * S
        return out

    def __call__(self, t, nu=0):
        return self.jet(float(t), nu)[nu]

    def scaled(self, c):
        return ControlCurve(self.delta, self.d, c * self.coeffs, self.n_centers, self.start)

    def to_dict(self):
        return {
            "kind": "ControlCurve",
            "delta": self.delta,
            "d": self.d,
            "n_centers": self.n_centers,
            "start": self.start,
            "coeffs": self.coeffs.tolist(),
        }


# ---------------------------------------------------------------------------
# transition maps


def transition_ode_solve(cd, B=None, t_end=None, t_start=0.0, rtol=1e-12, atol=1e-13):
    """``L(t_end)`` for ``L' = (Y(t) + [[0, 0], [B(t), 0]]) L``, ``L(t_start) = I``."""
    d = cd.d
    t_end = cd.delta if t_end is None else float(t_end)
    if not 0 < t_end <= cd.delta * (1 + 1e-12) and t_start == 0.0:
        raise ValueError(f"t_end must lie in (0, delta], got {t_end}")
    max_step = np.inf
    if B is not None and hasattr(B, "half_width"):
        max_step = B.half_width / 4

    def rhs(t, y):
        L = y.reshape(2 * d, 2 * d)
        A = cd.Y(t)
        if B is not None:
            A[d:, :d] += B(t)
        return (A @ L).ravel()

    sol = solve_ivp(rhs, (t_start, t_end), np.eye(2 * d).ravel(), method="DOP853", rtol=rtol, atol=atol, max_step=max_step)
    if sol.status != 0:
        raise ConstructionError(f"transition ODE failed: {sol.message}", step="transition")
    return SympMatrix(sol.y[:, -1].reshape(2 * d, 2 * d), tol=1e-7)


# ---------------------------------------------------------------------------
# brackets


def _series_mul(A, B):
    m = A.shape[0]
    out = np.zeros_like(A)
    for i in range(m):
        for j in range(m - i):
            out[i + j] += A[i] @ B[j]
    return out


def _series_diff(A):
    out = np.zeros_like(A)
    for k in range(A.shape[0] - 1):
        out[k] = (k + 1) * A[k + 1]
    return out


def bracket_sequence(cd, B, m=3, t=0.0):
    """``[W_0(t, B), ..., W_m(t, B)]`` for a constant symmetric ``B``.

    ``W_{i+1} = W_i' + [W_i, Y]``.  The recursion runs on truncated Taylor
    series in time, so only the jet of ``K`` at ``t`` is needed.
    """
    if m > 4:
        raise ValueError("bracket depth is capped at 4")
    d = cd.d
    B = np.asarray(B, dtype=float)
    Yser = cd.Y_jet(t, m)
    W = np.zeros_like(Yser)
    W[0, d:, :d] = B
    out = [W[0].copy()]
    for _ in range(m):
        W = _series_diff(W) + _series_mul(W, Yser) - _series_mul(Yser, W)
        out.append(W[0].copy())
    return out


def bracket_closed_forms(D, K0, K1, B):
    """Block formulas for ``W_1, W_2, W_3`` at ``t = 0`` (``K1 = K'(0)``)."""
    d = D.shape[0]
    Z = np.zeros((d, d))
    W1 = np.block([[-D @ B, Z], [Z, B @ D]])
    W2 = np.block([[Z, -2 * D @ B @ D], [-(B @ D @ K0 + K0 @ D @ B), Z]])
    W3 = np.block(
        [
            [3 * D @ B @ D @ K0 + D @ K0 @ D @ B, Z],
            [-(B @ D @ K1 + K1 @ D @ B), -B @ D @ K0 @ D - 3 * K0 @ D @ B @ D],
        ]
    )
    return [W1, W2, W3]


def _rank(M, scale=0.0):
    """Singular values above ``RANK_RTOL * max(sigma_max, scale)`` count."""
    s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
    ref = max(s[0] if s.size else 0.0, scale)
    if ref == 0:
        return 0, s
    return int(np.sum(s > RANK_RTOL * ref)), s


@dataclass(frozen=True)
class SpanReport:
    rank: int
    full: bool
    dim_target: int
    singular_values: np.ndarray = field(repr=False)


def span_test(cd, m=3, t=0.0):
    """Rank of ``span{W_i(t, E)}`` over ``i <= m`` and symmetric ``E``, against ``dim sp(2d)``."""
    if m < 3:
        raise ValueError("span test needs depth m >= 3")
    d = cd.d
    cols = []
    for E in symmetric_basis(d):
        for W in bracket_sequence(cd, E, m, t):
            cols.append(hamvec(W))
    rank, s = _rank(np.column_stack(cols))
    target = d * (2 * d + 1)
    return SpanReport(rank, rank == target, target, s)


# ---------------------------------------------------------------------------
# the obstruction set


@dataclass(frozen=True)
class KDReport:
    rank: int
    member: bool
    dim_target: int
    singular_values: np.ndarray = field(repr=False)


def kd_membership(D, K):
    """Rank of ``B -> B D K - K D B`` from symmetric to antisymmetric matrices."""
    D = np.asarray(D, dtype=float)
    K = np.asarray(K, dtype=float)
    d = D.shape[0]
    if not np.allclose(D @ D, np.eye(d)):
        raise ValueError("D must square to the identity")
    target = d * (d - 1) // 2
    if target == 0:
        return KDReport(0, False, 0, np.zeros(0))
    cols = [antisymmetric_coords(E @ D @ K - K @ D @ E) for E in symmetric_basis(d)]
    # the whole map may be tiny (K close to a multiple of D), so the threshold is tied to |K|
    rank, s = _rank(np.column_stack(cols), scale=np.linalg.norm(K, 2))
    return KDReport(rank, rank < target, target, s)


def min_eigen_gap(K):
    w = np.linalg.eigvalsh(0.5 * (K + K.T))
    return float(np.min(np.diff(w))) if w.size > 1 else np.inf


@dataclass(frozen=True)
class KDCharacterization:
    trials: int
    agreements: int
    disagreements_outside_band: int
    in_band: int
    band: float


def kd_characterization_check(d, trials, rng, band=1e-6, repeated_fraction=0.5):
    """Compare ``K_D`` membership (``D = I``) with the repeated-eigenvalue test on random ``K``.

    A fraction of the samples is given an exactly repeated eigenvalue so both
    outcomes occur.  Samples whose eigenvalue gap lies within ``band`` of the
    rank threshold scale are counted separately.
    """
    D = np.eye(d)
    agree = outside = in_band = 0
    for k in range(trials):
        Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        lam = rng.normal(size=d) * 2
        if d > 1 and k < repeated_fraction * trials:
            i, j = rng.choice(d, size=2, replace=False)
            lam[j] = lam[i]
        K = Q @ np.diag(lam) @ Q.T
        K = 0.5 * (K + K.T)
        member = kd_membership(D, K).member
        gap = min_eigen_gap(K)
        repeated = gap < band * max(1.0, np.max(np.abs(lam)))
        if abs(gap) < 10 * band and abs(gap) > 1e-3 * band:
            in_band += 1
            agree += member == repeated
            continue
        if member == repeated:
            agree += 1
        else:
            outside += 1
    return KDCharacterization(trials, agree, outside, in_band, band)


# ---------------------------------------------------------------------------
# synthesis


@dataclass
class SynthesisResult:
    B: ControlCurve
    achieved: SympMatrix
    residual: float
    history: list
    warning: str = ""
    sensitivity_singular_values: np.ndarray = None


def _log_coords(L, target):
    X = np.linalg.solve(L, target)
    N = np.real(logm(X))
    return hamvec(N)


def _sensitivity(cd, curve, L, h):
    base = curve.coeffs.ravel()
    cols = []
    Linv = np.linalg.inv(L)
    for k in range(base.size):
        c = base.copy()
        c[k] += h
        Lk = np.asarray(transition_ode_solve(cd, curve.with_coeffs(c)))
        cols.append(hamvec(Linv @ (Lk - L) / h))
    return np.column_stack(cols)


def synthesize_control(cd, target, basis=None, max_iter=20, tol=1e-10, reg=1e-12, trust=1e-2, fd_step=1e-6):
    """Gauss-Newton shooting for bump coefficients with ``L(delta) = target``.

    The mismatch is measured in Lie-algebra coordinates ``log(L^{-1} target)``.
    Rank-deficient sensitivities raise :class:`UncontrollableError` with the
    unreachable directions (as Hamiltonian matrices).
    """
    d = cd.d
    target = np.asarray(target, dtype=float)
    curve = basis if basis is not None else ControlCurve.zero(cd.delta, d)
    warn = ""
    span = span_test(cd)
    if not span.full:
        warn = f"bracket span has rank {span.rank} < {span.dim_target}; control may be obstructed"
    L = np.asarray(transition_ode_solve(cd, curve))
    r = _log_coords(L, target)
    if np.linalg.norm(r) > trust:
        raise ValueError(f"target outside the trust region (|log| = {np.linalg.norm(r):.3e} > {trust})")
    history = [float(np.linalg.norm(L - target))]
    sv = None
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol:
            break
        S = _sensitivity(cd, curve, L, fd_step)
        U, sv, _ = np.linalg.svd(S, full_matrices=True)
        rank = int(np.sum(sv > RANK_RTOL * 1e3 * sv[0])) if sv.size and sv[0] > 0 else 0
        dim = d * (2 * d + 1)
        if rank < dim:
            null = [from_hamvec(U[:, k], d) for k in range(rank, dim)]
            raise UncontrollableError(
                f"sensitivity has rank {rank} < {dim}; {dim - rank} direction(s) of sp({2 * d}) unreachable",
                null_directions=null,
                singular_values=sv,
            )
        A = np.vstack([S, np.sqrt(reg) * np.eye(S.shape[1])])
        rhs = np.concatenate([r, np.zeros(S.shape[1])])
        step, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        base = curve.coeffs.ravel()
        accepted = False
        lam = 1.0
        for _ in range(10):
            cand = curve.with_coeffs(base + lam * step)
            Lc = np.asarray(transition_ode_solve(cd, cand))
            rc = _log_coords(Lc, target)
            if np.linalg.norm(rc) < np.linalg.norm(r):
                curve, L, r = cand, Lc, rc
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
        history.append(float(np.linalg.norm(L - target)))
    achieved = SympMatrix(L, tol=1e-6)
    return SynthesisResult(curve, achieved, float(np.linalg.norm(L - target)), history, warn, sv)


def target_from_direction(L0, N, eps):
    return np.asarray(L0) @ expm(eps * np.asarray(N))


def random_hamiltonian_matrix(rng, d):
    S = rng.normal(size=(2 * d, 2 * d))
    S = 0.5 * (S + S.T)
    N = -standard_symplectic_form(d) @ S
    return N / np.linalg.norm(N)


# ---------------------------------------------------------------------------
# Dirac controls


@dataclass(frozen=True)
class DiracSpan:
    vectors: np.ndarray  # 2d x 2d: d responses to delta e_i, then d to delta' e_j
    limits: np.ndarray
    rank: int
    combined_rank: int
    widths: tuple
    errors: tuple
    convergence_rate: float


def _dirac_response(cd, sigma, w, slot, use_derivative):
    d = cd.d
    v = np.zeros(2 * d)
    v[d + slot] = 1.0

    def b(t):
        prof = dirac_bump(t, w, 1)
        return (prof[1] if use_derivative else prof[0]) * v

    def rhs(t, z):
        M = z[: 4 * d * d].reshape(2 * d, 2 * d)
        om = z[4 * d * d :]
        Y = cd.Y(t)
        return np.concatenate([(Y @ M).ravel(), Y @ om + b(t)])

    z0 = np.concatenate([np.eye(2 * d).ravel(), np.zeros(2 * d)])
    # integrate across the bump with short steps, then to sigma
    sol1 = solve_ivp(rhs, (0.0, w), z0, method="DOP853", rtol=1e-12, atol=1e-14, max_step=w / 40)
    sol2 = solve_ivp(rhs, (w, sigma), sol1.y[:, -1], method="DOP853", rtol=1e-12, atol=1e-14)
    z = sol2.y[:, -1]
    M = z[: 4 * d * d].reshape(2 * d, 2 * d)
    return np.linalg.solve(M, z[4 * d * d :])


def dirac_control_span(cd, sigma, width, halvings=3):
    """Responses ``y(sigma) = M(sigma)^{-1} w(sigma)`` to vertical Dirac-like controls.

    ``delta_w e_i`` tends to ``(0 | e_i)`` and ``delta_w' e_j`` to ``Y(0)(0 | e_j) = (D e_j | 0)``
    as the width shrinks.  The reported rate is the slope of the log error
    against the log width over the halvings.
    """
    d = cd.d
    if not 0 < width < sigma <= cd.delta * (1 + 1e-12):
        raise ValueError("need 0 < width < sigma <= delta")
    limits = np.zeros((2 * d, 2 * d))
    for i in range(d):
        limits[d + i, i] = 1.0
        limits[:d, d + i] = cd.D[:, i]
    widths, errors = [], []
    vectors = None
    w = width
    for _ in range(halvings + 1):
        V = np.zeros((2 * d, 2 * d))
        for i in range(d):
            V[:, i] = _dirac_response(cd, sigma, w, i, False)
            V[:, d + i] = _dirac_response(cd, sigma, w, i, True)
        if vectors is None:
            vectors = V
        widths.append(w)
        errors.append(float(np.linalg.norm(V - limits)))
        w /= 2
    rank, _ = _rank(vectors)
    combined = np.column_stack([vectors[:, i] + vectors[:, d + j] for i in range(d) for j in range(d)])
    crank, _ = _rank(combined)
    rate = float(np.polyfit(np.log(widths), np.log(errors), 1)[0]) if min(errors) > 0 else float("inf")
    return DiracSpan(vectors, limits, rank, crank, tuple(widths), tuple(errors), rate)


# ---------------------------------------------------------------------------
# vertical spanning by Dirac potentials


@dataclass(frozen=True)
class VerticalSpan:
    eta: np.ndarray  # 2n*k x k(d+1), finite-difference flow responses
    eta_predicted: np.ndarray  # same layout, built from the transition matrices
    rank: int
    spans_verticals: bool
    margin: float
    discrepancy: float
    singular_values: np.ndarray = field(repr=False)


def _straightened_chart(H, x0, delta, cfg):
    n = H.n
    chart = FiberedChart(n, [], radius=0.5 * delta, delta=delta)
    chart = chart.extended(straighten_projection(H, x0, delta, cfg))
    Hc = ChartedHamiltonian(H, chart)
    y0 = np.concatenate([np.zeros(n), chart.pieces[0].base_jet(np.zeros(n))[1].T @ x0[n:]])
    chart = chart.extended(vertical_normalization(Hc, y0, delta, cfg))
    return chart, ChartedHamiltonian(H, chart)


def vertical_span_check(H, x0, sigmas, width, delta=None, r=None, eps=1e-4, cfg=DEFAULT_CONFIG):
    """Flow responses to Dirac-like potentials at times ``sigmas`` and their vertical span.

    Works in the chart that straightens the projected orbit through ``x0`` to
    ``t e_0`` and moves its momentum to zero.  For each time ``sigma_i`` and
    base direction ``j`` the potential has axis differential ``e_j`` times a
    unit bump supported in ``(sigma_i - width, sigma_i)``.  The response of the
    flow at every ``sigma_i'`` is taken by a central difference in the
    amplitude ``eps``.  The p-components of the stacked responses must have
    rank ``k (d + 1)``.  ``eta_predicted`` holds the limit ``Xi(sigma_i, sigma_i') l_j``
    with ``l_j = -(0 | e_j)``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = H.n
    d = n - 1
    sig = np.asarray(sigmas, dtype=float)
    k = sig.size
    if k <= 2 * d + 2:
        raise ValueError(f"need more than 2d+2 = {2 * d + 2} times, got {k}")
    if not (sig[0] - width > 0 and np.all(np.diff(sig) > width)):
        raise ValueError("times must increase with gaps larger than the bump width, starting after the width")
    delta = float(sig[-1] / 0.9 if delta is None else delta)
    chart, Hc = _straightened_chart(H, x0, delta, cfg)
    r = 0.25 * chart.radius if r is None else float(r)
    tail = (sig[-1], EXTENSION * delta * 0.96)
    fcfg = FlowConfig(1e-12, 1e-13, width / 8, True, cfg.method)
    rest_cfg = FlowConfig(1e-12, 1e-13, np.inf, True, cfg.method)
    z0 = np.zeros(2 * n)
    var = integrate_variational(Hc, z0, (0.0, sig[-1]), FlowConfig(1e-12, 1e-13, sig[-1] / 32, True, cfg.method))
    m = k * (d + 1)
    eta = np.zeros((2 * n * k, m))
    pred = np.zeros_like(eta)
    col = 0
    for i, s in enumerate(sig):
        t_on = s - width
        z_on = var.base.state(t_on) if t_on > 0 else z0
        for j in range(n):
            u = dirac_jet_potential(j, s - 0.5 * width, width, r, n, tail=tail if j == 0 else None)
            ends = []
            for sign in (1.0, -1.0):
                Hu = add_potential(Hc, ScaledPotential(u, sign * eps))
                # fine steps across the bump, ordinary steps afterwards
                z_off = integrate_flow(Hu, z_on, (t_on, s), fcfg).state(s)
                pts = [z_off]
                if i + 1 < k:
                    tr = integrate_flow(Hu, z_off, (s, sig[-1]), rest_cfg)
                    pts += [tr.state(t) for t in sig[i + 1 :]]
                ends.append(np.array(pts))
            resp = (ends[0] - ends[1]) / (2 * eps)
            l = np.zeros(2 * n)
            l[n + j] = -1.0
            for ii in range(i, k):
                eta[2 * n * ii : 2 * n * (ii + 1), col] = resp[ii - i]
                pred[2 * n * ii : 2 * n * (ii + 1), col] = var.transition(s, sig[ii]) @ l
            col += 1
    rows = np.concatenate([np.arange(2 * n * ii + n, 2 * n * (ii + 1)) for ii in range(k)])
    rank, sv = _rank(eta[rows])
    margin = float(sv[-1] / sv[0]) if sv.size and sv[0] > 0 else 0.0
    disc = float(np.max(np.abs(eta - pred)))
    return VerticalSpan(eta, pred, rank, rank == m, margin, disc, sv)


__all__ = [
    "ConstantCurve",
    "ControlCurve",
    "ControlData",
    "LinearCurve",
    "bracket_closed_forms",
    "bracket_sequence",
    "dirac_control_span",
    "kd_characterization_check",
    "kd_membership",
    "random_hamiltonian_matrix",
    "symmetric_basis",
    "target_from_direction",
    "span_test",
    "synthesize_control",
    "transition_ode_solve",
    "vertical_span_check",
]
