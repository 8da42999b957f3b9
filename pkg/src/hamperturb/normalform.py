"""Fibered symplectic normal form along an orbit segment.

A chart is an ordered list of elementary fibered maps.  Each one sends new
coordinates to old ones:

* homogeneous: ``(q, p) -> (phi(q), dphi(q)^{-T} p)``
* vertical:    ``(q, p) -> (q, p + dg(q))``

The composition maps chart coordinates ``y`` to original coordinates ``x``.
Base maps are stored as 2-jets in the transverse variables ``qhat``::

    phi(s, qhat) = c(s) + C1(s) qhat + 1/2 C2(s)[qhat, qhat]

with ``c``, ``C1``, ``C2`` quintic splines in ``s``.  Every map fixes the axis
``{(s, 0)}`` where the construction is exact; away from it the jets define a
genuine local diffeomorphism of the tube.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline

from .exceptions import ConstructionError, HypothesisViolation
from .flow import DEFAULT_CONFIG, FlowConfig, integrate_flow
from .geometry import Hamiltonian, fiberwise_iso_energetic_test, standard_symplectic_form

POINTS_PER_DELTA = 64
EXTENSION = 1.25  # curves are built on [-1.25 delta, 1.25 delta]
MAX_HALVINGS = 12


# ---------------------------------------------------------------------------
# sampled curves


class SampledCurve:
    """Quintic interpolating spline of array-valued samples with cheap derivative jets."""

    def __init__(self, t, values, k=5):
        t = np.asarray(t, dtype=float)
        values = np.asarray(values, dtype=float)
        self.t = t
        self.values = values
        self.shape = values.shape[1:]
        flat = values.reshape(len(t), -1)
        spl = make_interp_spline(t, flat, k=k, axis=0)
        # local Taylor coefficients on each knot interval, highest power first
        x = np.unique(spl.t[k : len(spl.t) - k])[:-1]
        self._x = x
        self._c = np.array([spl(x, nu=k - m) / factorial(k - m) for m in range(k + 1)])
        self._k = k
        # coefficients of the derivatives, same layout
        self._dc = []
        for nu in range(4):
            fall = np.array([np.prod(np.arange(k - j, k - j - nu, -1)) for j in range(k + 1 - nu)], dtype=float)
            self._dc.append(self._c[: k + 1 - nu] * fall[:, None, None])
        self.lo, self.hi = float(t[0]), float(t[-1])

    def jet(self, s, order=2):
        """``[f(s), f'(s), ..., f^(order)(s)]``; extrapolates polynomially outside the grid."""
        i = int(np.clip(np.searchsorted(self._x, s, side="right") - 1, 0, len(self._x) - 1))
        h = s - self._x[i]
        out = []
        for nu in range(order + 1):
            c = self._dc[nu]
            powers = h ** np.arange(c.shape[0] - 1, -1, -1)
            out.append((powers @ c[:, i, :]).reshape(self.shape))
        return out

    def __call__(self, s, nu=0):
        if np.ndim(s):
            return np.array([self.jet(float(v), nu)[nu] for v in np.ravel(s)]).reshape(np.shape(s) + self.shape)
        return self.jet(float(s), nu)[nu]


class ConstantCurve:
    def __init__(self, value):
        self.value = np.asarray(value, dtype=float)
        self.shape = self.value.shape

    def jet(self, s, order=2):
        z = np.zeros(self.shape)
        return [self.value] + [z] * order

    def __call__(self, s, nu=0):
        return self.value if nu == 0 else np.zeros(self.shape)


class OrbitCurve:
    """Projected orbit ``s -> Q(s)`` with derivatives taken from the vector field, not from the interpolant."""

    def __init__(self, H, trajectories):
        self.H = H
        self.trajectories = trajectories  # (forward, backward)
        self.shape = (H.n,)

    def _state(self, s):
        fwd, bwd = self.trajectories
        tr = fwd if s >= 0 else bwd
        return tr.state(s)

    def jet(self, s, order=2):
        H = self.H
        n = H.n
        x = self._state(s)
        out = [x[:n]]
        if order >= 1:
            out.append(H.gradient(x)[n:])
        if order >= 2:
            out.append(H.hessian(x)[n:] @ H.vector_field(x))
        if order >= 3:
            raise ValueError("orbit curves provide at most two derivatives")
        return out

    def __call__(self, s, nu=0):
        return self.jet(float(s), nu)[nu]


def _grid(delta):
    ext = EXTENSION * delta
    m = int(round(POINTS_PER_DELTA * 2 * EXTENSION))
    return np.linspace(-ext, ext, m + 1)


# ---------------------------------------------------------------------------
# elementary pieces


class JetBaseMap:
    """Homogeneous piece generated by a base 2-jet map."""

    kind = "homogeneous"

    def __init__(self, name, n, c, C1, C2=None):
        self.name = name
        self.n = n
        self.d = n - 1
        self.c = c
        self.C1 = C1
        self.C2 = C2

    def base_jet(self, q):
        """``phi(q)``, ``dphi(q)`` and ``d2phi(q)[i, j, k] = d^2 phi_i / dq_j dq_k``."""
        n = self.n
        s, y = q[0], q[1:]
        c0, c1, c2 = self.c.jet(s, 2)
        A0, A1, A2 = self.C1.jet(s, 2)
        phi = c0 + A0 @ y
        dphi = np.empty((n, n))
        d2 = np.zeros((n, n, n))
        dphi[:, 0] = c1 + A1 @ y
        dphi[:, 1:] = A0
        d2[:, 0, 0] = c2 + A2 @ y
        d2[:, 0, 1:] = A1
        if self.C2 is not None:
            B0, B1, B2 = self.C2.jet(s, 2)
            B0y = B0 @ y
            B1y = B1 @ y
            phi = phi + 0.5 * B0y @ y
            dphi[:, 0] += 0.5 * B1y @ y
            dphi[:, 1:] += B0y
            d2[:, 0, 0] += 0.5 * (B2 @ y) @ y
            d2[:, 0, 1:] += B1y
            d2[:, 1:, 1:] = B0
        d2[:, 1:, 0] = d2[:, 0, 1:]
        return phi, dphi, d2

    def apply_jacobian(self, x):
        n = self.n
        q, P = x[:n], x[n:]
        phi, dphi, d2 = self.base_jet(q)
        W = np.linalg.inv(dphi)
        p_old = W.T @ P
        # d/dq_k (W^T P) = -(W T_k W)^T P = -W^T T_k^T W^T P
        R = -np.einsum("ib,jik,j->bk", W, d2, p_old)
        Jm = np.zeros((2 * n, 2 * n))
        Jm[:n, :n] = dphi
        Jm[n:, :n] = R
        Jm[n:, n:] = W.T
        return np.concatenate([phi, p_old]), Jm

    def apply(self, x):
        n = self.n
        phi, dphi, _ = self.base_jet(x[:n])
        return np.concatenate([phi, np.linalg.solve(dphi.T, x[n:])])

    def sample_data(self, t):
        """Coefficient samples for serialization."""
        out = {"c": np.array([self.c(s) for s in t]), "C1": np.array([self.C1(s) for s in t])}
        if self.C2 is not None:
            out["C2"] = np.array([self.C2(s) for s in t])
        return out


class VerticalMap:
    """Vertical piece ``p -> p + dg(q)`` with
    ``g = v(s) + b(s) . qhat + 1/2 qhat^T S(s) qhat`` (only ``v'`` is stored)."""

    kind = "vertical"

    def __init__(self, name, n, slope=None, b=None, S=None):
        self.name = name
        self.n = n
        d = n - 1
        self.slope = slope if slope is not None else ConstantCurve(0.0)
        self.b = b if b is not None else ConstantCurve(np.zeros(d))
        self.S = S if S is not None else ConstantCurve(np.zeros((d, d)))

    def dg_jet(self, q):
        """``dg(q)`` and ``d^2 g(q)``."""
        n = self.n
        s, y = q[0], q[1:]
        v1, v2, v3 = self.slope.jet(s, 2)
        b0, b1, b2 = self.b.jet(s, 2)
        S0, S1, S2 = self.S.jet(s, 2)
        dg = np.empty(n)
        dg[0] = v1 + b1 @ y + 0.5 * y @ S1 @ y
        dg[1:] = b0 + S0 @ y
        h = np.empty((n, n))
        h[0, 0] = v2 + b2 @ y + 0.5 * y @ S2 @ y
        h[0, 1:] = h[1:, 0] = b1 + S1 @ y
        h[1:, 1:] = S0
        return dg, h

    def apply_jacobian(self, x):
        n = self.n
        dg, h = self.dg_jet(x[:n])
        Jm = np.eye(2 * n)
        Jm[n:, :n] = h
        out = x.copy()
        out[n:] += dg
        return out, Jm

    def apply(self, x):
        n = self.n
        dg, _ = self.dg_jet(x[:n])
        out = x.copy()
        out[n:] += dg
        return out

    def base_jet(self, q):
        n = self.n
        return q.copy(), np.eye(n), np.zeros((n, n, n))

    def sample_data(self, t):
        return {
            "slope": np.array([self.slope(s) for s in t]),
            "b": np.array([self.b(s) for s in t]),
            "S": np.array([self.S(s) for s in t]),
        }


# ---------------------------------------------------------------------------
# composed chart


class FiberedChart:
    """Composition of elementary pieces; ``pieces[0]`` is applied last (closest to the original coordinates)."""

    def __init__(self, n, pieces=(), radius=np.inf, delta=np.inf):
        self.n = n
        self.pieces = list(pieces)
        self.radius = radius
        self.delta = delta

    def extended(self, piece):
        return FiberedChart(self.n, self.pieces + [piece], self.radius, self.delta)

    def forward(self, y):
        x = np.asarray(y, dtype=float)
        for piece in reversed(self.pieces):
            x = piece.apply(x)
        return x

    def forward_jacobian(self, y):
        x = np.asarray(y, dtype=float)
        J = np.eye(2 * self.n)
        for piece in reversed(self.pieces):
            x, Jp = piece.apply_jacobian(x)
            J = Jp @ J
        return x, J

    def base_jet(self, q):
        """Composed base map with first and second derivatives."""
        n = self.n
        f = np.asarray(q, dtype=float)
        Df = np.eye(n)
        D2f = np.zeros((n, n, n))
        for piece in reversed(self.pieces):
            if piece.kind != "homogeneous":
                continue
            g, Dg, D2g = piece.base_jet(f)
            D2f = np.einsum("iab,aj,bk->ijk", D2g, Df, Df) + np.einsum("ia,ajk->ijk", Dg, D2f)
            Df = Dg @ Df
            f = g
        return f, Df, D2f

    def base_map(self, q):
        return self.base_jet(q)[0]

    def base_inverse(self, q_target, guess=None, tol=1e-13, max_iter=50):
        """Chart base point mapped to ``q_target`` (Newton iteration)."""
        q_target = np.asarray(q_target, dtype=float)
        if guess is None:
            guess = self._inverse_guess(q_target)
        q = np.array(guess, dtype=float)
        for _ in range(max_iter):
            f, Df, _ = self.base_jet(q)
            r = f - q_target
            if np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(q_target)):
                return q
            q = q - np.linalg.solve(Df, r)
        f = self.base_map(q)
        if np.linalg.norm(f - q_target) > 1e-9 * max(1.0, np.linalg.norm(q_target)):
            raise ConstructionError("base inverse did not converge", step="inverse")
        return q

    def _inverse_guess(self, q_target):
        if not hasattr(self, "_axis"):
            s = np.linspace(-EXTENSION * self.delta, EXTENSION * self.delta, 81) if np.isfinite(self.delta) else np.zeros(1)
            self._axis = (s, np.array([self.base_map(np.concatenate([[v], np.zeros(self.n - 1)])) for v in s]))
        s, pts = self._axis
        k = int(np.argmin(np.linalg.norm(pts - q_target, axis=1)))
        return np.concatenate([[s[k]], np.zeros(self.n - 1)])

    def symplectic_residual(self, y):
        _, J = self.forward_jacobian(y)
        Om = standard_symplectic_form(self.n)
        return float(np.max(np.abs(J.T @ Om @ J - Om)))

    def describe(self):
        return [f"{i}: {p.kind} {p.name}" for i, p in enumerate(self.pieces)]


class ChartedHamiltonian(Hamiltonian):
    """``H o Psi`` with the chain-rule gradient; the Hessian differences that gradient."""

    def __init__(self, H, chart, fd_step=(1e-5, 1e-4)):
        super().__init__(H.n, None, "analytic", fd_step)
        self.base_hamiltonian = H
        self.chart = chart

    def value(self, y):
        return self.base_hamiltonian.value(self.chart.forward(y))

    def _gradient(self, y):
        x, J = self.chart.forward_jacobian(np.asarray(y, dtype=float))
        return J.T @ self.base_hamiltonian.gradient(x)


def _axis_point(n, t):
    y = np.zeros(2 * n)
    y[0] = t
    return y


def _axis_hessians(Hc, ts):
    return np.array([Hc.hessian(_axis_point(Hc.n, t)) for t in ts])


# ---------------------------------------------------------------------------
# construction steps


def _complement(v):
    """Orthonormal columns spanning ``v^perp``; equal to ``e_2..e_n`` when ``v`` is along ``e_1``."""
    n = v.size
    u = v / np.linalg.norm(v)
    E = np.eye(n)
    cols = []
    for k in range(n):
        w = E[:, k] - (E[:, k] @ u) * u
        for c in cols:
            w = w - (w @ c) * c
        if np.linalg.norm(w) > 1e-8:
            cols.append(w / np.linalg.norm(w))
        if len(cols) == n - 1:
            break
    N = np.column_stack(cols)
    if np.linalg.det(np.column_stack([u, N])) < 0:
        N[:, -1] = -N[:, -1]
    return N


def _orbit_samples(H, x0, ts, cfg):
    """States of the orbit through ``x0`` at the (sorted, zero-straddling) times ``ts``."""
    out = np.empty((len(ts), x0.size))
    # short steps keep the dense-output error well below the spline error
    # the samples are differentiated later, so integrate tighter than the default
    h = (ts[-1] - ts[0]) / 32
    cfg = FlowConfig(min(cfg.rel_tol, 1e-13), min(cfg.abs_tol, 1e-14), min(cfg.max_step, h), True, cfg.method)
    pos = ts >= 0
    neg = ~pos
    if pos.any():
        tr = integrate_flow(H, x0, (0.0, ts[pos].max() if ts[pos].max() > 0 else 1e-12), cfg)
        out[pos] = np.array([tr.state(t) for t in ts[pos]])
    if neg.any():
        tr = integrate_flow(H, x0, (0.0, ts[neg].min()), cfg)
        out[neg] = np.array([tr.state(t) for t in ts[neg]])
    return out


def straighten_projection(H, x0, delta, cfg=DEFAULT_CONFIG):
    """Homogeneous piece whose base map sends ``(s, 0)`` to the projected orbit point at time ``s``."""
    x0 = np.asarray(x0, dtype=float)
    n = H.n
    v0 = H.gradient(x0)[n:]
    if np.linalg.norm(v0) < 1e-10:
        raise HypothesisViolation("d_p H vanishes at the base point; the projected orbit is not embedded", t=0.0)
    ext = EXTENSION * delta
    cfg = FlowConfig(min(cfg.rel_tol, 1e-13), min(cfg.abs_tol, 1e-14), min(cfg.max_step, ext / 16), True, cfg.method)
    c = OrbitCurve(H, (integrate_flow(H, x0, (0.0, ext), cfg), integrate_flow(H, x0, (0.0, -ext), cfg)))
    N = _complement(v0)
    return JetBaseMap("straighten", n, c, ConstantCurve(N))


def vertical_normalization(Hc, y0, delta, cfg=DEFAULT_CONFIG):
    """Vertical piece removing the momentum of the orbit through ``y0`` (projected orbit ``t e1``)."""
    n = Hc.n
    ts = _grid(delta)
    ys = _orbit_samples(Hc, np.asarray(y0, dtype=float), ts, cfg)
    drift = np.max(np.abs(ys[:, 0] - ts)) + np.max(np.abs(ys[:, 1:n]))
    if drift > 1e-6:
        raise ConstructionError(f"projected orbit is not t e1 (deviation {drift:.2e})", step="vertical")
    P = ys[:, n:]
    return VerticalMap("momentum", n, slope=SampledCurve(ts, P[:, 0]), b=SampledCurve(ts, P[:, 1:]))


def _pq_block_derivative(Hc, t, h=1e-3):
    """``d^2/dq_j dq_k`` of ``d_p H`` at ``(t e1, 0)`` by mixed central differences of the gradient."""
    n = Hc.n
    out = np.zeros((n, n, n))
    base = _axis_point(n, t)
    g0 = Hc.gradient(base)[n:]
    E = np.eye(2 * n) * h
    for j in range(n):
        gp = Hc.gradient(base + E[j])[n:]
        gm = Hc.gradient(base - E[j])[n:]
        out[:, j, j] = (gp - 2 * g0 + gm) / h**2
        for k in range(j):
            gpp = Hc.gradient(base + E[j] + E[k])[n:]
            gpm = Hc.gradient(base + E[j] - E[k])[n:]
            gmp = Hc.gradient(base - E[j] + E[k])[n:]
            gmm = Hc.gradient(base - E[j] - E[k])[n:]
            out[:, j, k] = out[:, k, j] = (gpp - gpm - gmp + gmm) / (4 * h**2)
    return out


def flowbox_normalization(Hc, delta, cfg=DEFAULT_CONFIG):
    """Homogeneous piece straightening ``V(q) = d_p H(q, 0)`` to ``e1`` to second order in ``qhat``.

    The base map is the 2-jet of ``(s, qhat) -> flow of V for time s from (0, qhat)``.
    """
    n = Hc.n
    d = n - 1
    ts = _grid(delta)
    DV = SampledCurve(ts, np.array([Hc.hessian(_axis_point(n, t))[n:, :n] for t in ts]))
    # only the second-order part of the jet depends on this, so a coarse grid is enough
    coarse = ts[::4]
    D2V = SampledCurve(coarse, np.array([_pq_block_derivative(Hc, t) for t in coarse]))
    F0 = np.zeros((n, d))
    F0[1:, :] = np.eye(d)

    def rhs(s, z):
        F1 = z[: n * d].reshape(n, d)
        F2 = z[n * d :].reshape(n, d, d)
        A = DV(s)
        T = D2V(s)
        dF1 = A @ F1
        dF2 = np.einsum("ij,jab->iab", A, F2) + np.einsum("ijk,ja,kb->iab", T, F1, F1)
        return np.concatenate([dF1.ravel(), dF2.ravel()])

    z0 = np.concatenate([F0.ravel(), np.zeros(n * d * d)])
    vals = np.empty((len(ts), z0.size))
    for sel, end in ((ts >= 0, ts[-1]), (ts < 0, ts[0])):
        te = ts[sel] if end > 0 else ts[sel][::-1]
        sol = solve_ivp(rhs, (0.0, end), z0, method="DOP853", rtol=1e-12, atol=1e-13, t_eval=te)
        if sol.status != 0:
            raise ConstructionError("flow-box variational solve failed", step="flowbox")
        vals[sel] = sol.y.T if end > 0 else sol.y.T[::-1]
    c = SampledCurve(ts, np.outer(ts, np.eye(n)[0]))
    C1 = SampledCurve(ts, vals[:, : n * d].reshape(-1, n, d))
    C2 = SampledCurve(ts, vals[:, n * d :].reshape(-1, n, d, d))
    return JetBaseMap("flowbox", n, c, C1, C2)


def _check_invertible(A, ts, step, threshold=1e-8):
    for t, Am in zip(ts, A):
        if abs(np.linalg.det(Am)) < threshold * max(1.0, np.linalg.norm(Am)) ** Am.shape[0]:
            raise HypothesisViolation(f"{step}: fiber Hessian block is singular at t = {t:.6g}", t=float(t))


def shear_normalization(Hc, delta):
    """Homogeneous piece ``(q1, qhat) -> (q1 + l(q1) . qhat, qhat)`` removing the ``p1``-``phat`` coupling."""
    n = Hc.n
    d = n - 1
    ts = _grid(delta)
    Hs = _axis_hessians(Hc, ts)
    A = Hs[:, n + 1 :, n + 1 :]
    _check_invertible(A, ts, "shear")
    m = Hs[:, n + 1 :, n]
    l = np.array([np.linalg.solve(Ai, mi) for Ai, mi in zip(A, m)])
    C1 = np.zeros((len(ts), n, d))
    C1[:, 0, :] = l
    C1[:, 1:, :] = np.eye(d)
    return JetBaseMap("shear", n, SampledCurve(ts, np.outer(ts, np.eye(n)[0])), SampledCurve(ts, C1))


def signature_matrix(A):
    """``D`` (``+1`` entries first) and ``M0`` with ``M0 D M0^T = A`` for symmetric invertible ``A``."""
    A = 0.5 * (A + A.T)
    w, Q = np.linalg.eigh(A)
    order = np.concatenate([np.where(w > 0)[0], np.where(w <= 0)[0]])
    w, Q = w[order], Q[:, order]
    D = np.diag(np.sign(w))
    M0 = Q @ np.diag(np.sqrt(np.abs(w)))
    return D, M0


@dataclass(frozen=True)
class DiagonalizationData:
    D: np.ndarray
    M: SampledCurve
    B: SampledCurve
    A: SampledCurve
    factor_residual: float  # max |M D M^T - A|
    symmetry_residual: float  # max |B - B^T| before symmetrizing


def solve_diagonalizing_curve(ts, A_samples):
    """``M' = A' M^{-T} D / 2`` with ``M(0) D M(0)^T = A(0)``; returns the sampled solution."""
    d = A_samples.shape[1]
    A = SampledCurve(ts, A_samples)
    D, M0 = signature_matrix(A(0.0))

    def rhs(t, z):
        M = z.reshape(d, d)
        return (A(t, 1) @ np.linalg.inv(M).T @ D / 2).ravel()

    Ms = np.empty((len(ts), d, d))
    dMs = np.empty((len(ts), d, d))
    for sel, end in ((ts >= 0, ts[-1]), (ts < 0, ts[0])):
        te = ts[sel] if end > 0 else ts[sel][::-1]
        sol = solve_ivp(rhs, (0.0, end), M0.ravel(), method="DOP853", rtol=1e-12, atol=1e-13, t_eval=te)
        if sol.status != 0:
            raise ConstructionError("matrix ODE for the diagonalizing curve failed", step="diagonalize")
        y = sol.y.T if end > 0 else sol.y.T[::-1]
        Ms[sel] = y.reshape(-1, d, d)
    for k, t in enumerate(ts):
        dMs[k] = rhs(t, Ms[k].ravel()).reshape(d, d)
    Bs = np.array([D @ np.linalg.solve(M, dM) for M, dM in zip(Ms, dMs)])
    asym = float(np.max(np.abs(Bs - np.transpose(Bs, (0, 2, 1)))))
    Bs = 0.5 * (Bs + np.transpose(Bs, (0, 2, 1)))
    fres = float(max(np.max(np.abs(M @ D @ M.T - A(t))) for M, t in zip(Ms, ts)))
    return DiagonalizationData(D, SampledCurve(ts, Ms), SampledCurve(ts, Bs), A, fres, asym)


def diagonalize_vertical_hessian(Hc, delta):
    """Homogeneous piece ``(q1, qhat) -> (q1, M(q1) qhat)`` followed by the vertical piece
    with generator ``1/2 qhat^T B(q1) qhat``; returns both pieces and the diagonalization data."""
    n = Hc.n
    d = n - 1
    ts = _grid(delta)
    Hs = _axis_hessians(Hc, ts)
    A = 0.5 * (Hs[:, n + 1 :, n + 1 :] + np.transpose(Hs[:, n + 1 :, n + 1 :], (0, 2, 1)))
    _check_invertible(A, ts, "diagonalize")
    data = solve_diagonalizing_curve(ts, A)
    C1 = np.zeros((len(ts), n, d))
    C1[:, 1:, :] = data.M.values
    hom = JetBaseMap("diagonalize", n, SampledCurve(ts, np.outer(ts, np.eye(n)[0])), SampledCurve(ts, C1))
    vert = VerticalMap("restore", n, S=data.B)
    return hom, vert, data


# ---------------------------------------------------------------------------
# verification and assembly


@dataclass(frozen=True)
class NormalFormResiduals:
    orbit: float  # chart orbit is t e1 with zero momentum
    qp_hat: float  # no q / phat coupling
    p1_phat: float  # no p1 / phat coupling
    phat_phat: float  # fiber Hessian in phat equals D
    q1_q: float  # no q1 row in the base Hessian
    tol: float
    n_samples: int

    @property
    def passed(self):
        return max(self.orbit, self.qp_hat, self.p1_phat, self.phat_phat, self.q1_q) <= self.tol

    def lines(self):
        return [
            f"orbit on axis residual = {self.orbit:.3e}",
            f"d2H/dq dphat residual = {self.qp_hat:.3e}",
            f"d2H/dp1 dphat residual = {self.p1_phat:.3e}",
            f"d2H/dphat2 - D residual = {self.phat_phat:.3e}",
            f"d2H/dq1 dq residual = {self.q1_q:.3e}",
            f"normal form tolerance = {self.tol:.1e} passed = {self.passed}",
        ]


def verify_normal_form(Hc, delta, D=None, n_samples=20, tol=1e-6, cfg=DEFAULT_CONFIG):
    """Residuals of the normal-form conditions at ``n_samples`` times in ``[-delta, delta]``.

    Works on any Hamiltonian (no exception for non-normalized input).
    With ``D=None`` the signs of the diagonal of the fiber Hessian at 0 are used.
    """
    n = Hc.n
    ts = np.linspace(-delta, delta, n_samples)
    y0 = np.zeros(2 * n)
    orbit = 0.0
    for end in (delta, -delta):
        tr = integrate_flow(Hc, y0, (0.0, end), cfg)
        for t in ts[(ts * np.sign(end)) >= 0]:
            orbit = max(orbit, float(np.linalg.norm(tr.state(t) - _axis_point(n, t))))
    Hs = _axis_hessians(Hc, ts)
    if D is None:
        D = np.diag(np.sign(np.diag(Hs[n_samples // 2][n + 1 :, n + 1 :])))
    qp = max(np.max(np.abs(h[:n, n + 1 :])) for h in Hs)
    p1p = max(np.max(np.abs(h[n, n + 1 :])) for h in Hs)
    pp = max(np.max(np.abs(h[n + 1 :, n + 1 :] - D)) for h in Hs)
    qq = max(np.max(np.abs(h[0, :n])) for h in Hs)
    return NormalFormResiduals(orbit, float(qp), float(p1p), float(pp), float(qq), tol, n_samples)


@dataclass(frozen=True)
class NormalFormData:
    chart: FiberedChart
    delta: float
    D: np.ndarray
    K: SampledCurve
    a: SampledCurve
    residuals: NormalFormResiduals
    H: object = field(repr=False)
    H_chart: ChartedHamiltonian = field(repr=False)
    x0: np.ndarray = None
    diagonalization: DiagonalizationData = field(repr=False, default=None)
    halvings: int = 0

    @property
    def d(self):
        return self.D.shape[0]

    def K_prime(self, t):
        return self.K(t, 1)

    def frame(self, t):
        """Symplectic basis (columns) of the chart section ``{q1 = t}`` pushed to original coordinates."""
        n = self.chart.n
        _, J = self.chart.forward_jacobian(_axis_point(n, t))
        cols = list(range(1, n)) + list(range(n + 1, 2 * n))
        return J[:, cols]

    def section_normal(self, t):
        """Covector ``dq1`` of the chart written in original coordinates."""
        n = self.chart.n
        _, J = self.chart.forward_jacobian(_axis_point(n, t))
        return np.linalg.inv(J)[0]

    def orbit_point(self, t):
        return self.chart.forward(_axis_point(self.chart.n, t))

    def to_text(self, n_samples=21):
        ts = np.linspace(-self.delta, self.delta, n_samples)
        lines = [
            "[normal_form]",
            f"delta = {self.delta:.17g}",
            f"halvings = {self.halvings}",
            f"D = {np.diag(self.D).astype(int).tolist()}",
            f"pieces = {', '.join(p.name for p in self.chart.pieces)}",
        ]
        if self.x0 is not None:
            lines.append(f"x0 = {np.asarray(self.x0).tolist()}")
        lines += ["", "[residuals]"] + self.residuals.lines() + ["", "[samples]", "t\ta\tK (row-major)"]
        for t in ts:
            K = self.K(t)
            lines.append("\t".join([f"{t:.17g}", f"{float(self.a(t)):.17g}"] + [f"{v:.17g}" for v in np.ravel(K)]))
        return "\n".join(lines) + "\n"


def build_normal_form(H, x0, delta_request=0.5, cfg=DEFAULT_CONFIG, tol=1e-6, n_samples=20):
    """Compose the five construction steps, halving ``delta`` until every step and the verification succeed."""
    x0 = np.asarray(x0, dtype=float)
    fi = fiberwise_iso_energetic_test(H, x0)
    if not fi.non_degenerate:
        raise HypothesisViolation(
            f"not fiberwise iso-energetically non-degenerate at x0 (det {fi.det_value:.3e}, tol {fi.tol:.1e})", t=0.0
        )
    n = H.n
    delta = float(delta_request)
    last_error = None
    for halvings in range(MAX_HALVINGS + 1):
        step = "straighten"
        try:
            chart = FiberedChart(n, [], radius=0.5 * delta, delta=delta)
            chart = chart.extended(straighten_projection(H, x0, delta, cfg))
            Hc = ChartedHamiltonian(H, chart)
            y0 = np.concatenate([np.zeros(n), chart.pieces[0].base_jet(np.zeros(n))[1].T @ x0[n:]])
            step = "vertical"
            chart = chart.extended(vertical_normalization(Hc, y0, delta, cfg))
            step = "flowbox"
            chart = chart.extended(flowbox_normalization(ChartedHamiltonian(H, chart), delta, cfg))
            step = "shear"
            chart = chart.extended(shear_normalization(ChartedHamiltonian(H, chart), delta))
            step = "diagonalize"
            hom, vert, diag = diagonalize_vertical_hessian(ChartedHamiltonian(H, chart), delta)
            chart = chart.extended(hom).extended(vert)
            Hc = ChartedHamiltonian(H, chart)
            step = "verify"
            res = verify_normal_form(Hc, delta, diag.D, n_samples, tol, cfg)
            if not res.passed:
                raise ConstructionError("normal form residuals above tolerance:\n" + "\n".join(res.lines()), step="verify")
            ts = _grid(delta)
            Hs = _axis_hessians(Hc, ts)
            Ks = Hs[:, 1:n, 1:n]
            Ks = 0.5 * (Ks + np.transpose(Ks, (0, 2, 1)))
            return NormalFormData(
                chart=chart,
                delta=delta,
                D=diag.D,
                K=SampledCurve(ts, Ks),
                a=SampledCurve(ts, Hs[:, n, n]),
                residuals=res,
                H=H,
                H_chart=Hc,
                x0=x0,
                diagonalization=diag,
                halvings=halvings,
            )
        except HypothesisViolation as exc:
            if step == "straighten":
                raise
            last_error = (step, exc)
        except (ConstructionError, np.linalg.LinAlgError) as exc:
            last_error = (step, exc)
        delta *= 0.5
    step, exc = last_error
    raise ConstructionError(f"normal form construction failed at step {step!r}: {exc}", step=step)
