"""Hamiltonian flow, variational flow and section crossings.

Integration uses scipy's DOP853 (order 8 with a 7th order dense output).
Symplecticity of the variational flow is monitored, not enforced.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .exceptions import IntegrationError
from .geometry import standard_symplectic_form


@dataclass(frozen=True)
class FlowConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-12
    max_step: float = np.inf
    dense_output: bool = True
    method: str = "DOP853"

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0 < v <= 1e-2):
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v}")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


DEFAULT_CONFIG = FlowConfig()


def _solve(rhs, t_span, y0, cfg, t_eval=None):
    sol = solve_ivp(
        rhs,
        t_span,
        y0,
        method=cfg.method,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        dense_output=cfg.dense_output,
        t_eval=t_eval,
    )
    if sol.status != 0:
        raise IntegrationError(
            f"integration failed at t={sol.t[-1]:.6g}: {sol.message}",
            last_state=sol.y[:, -1].copy(),
            last_time=float(sol.t[-1]),
        )
    return sol


@dataclass(frozen=True)
class Trajectory:
    """A flow segment with its dense interpolant.

    ``times`` are the accepted integrator steps, ordered in the direction of
    integration (they decrease for backward runs).
    """

    times: np.ndarray
    states: np.ndarray
    interpolant: object
    energy_reference: float
    energy_drift: float
    H: object = field(repr=False, default=None)

    def __call__(self, t):
        return self.interpolant(t)

    def state(self, t):
        return np.asarray(self.interpolant(t))

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t1(self):
        return float(self.times[-1])

    @property
    def n(self):
        return self.states.shape[1] // 2

    def to_table(self, n_samples=None):
        """Rows ``t, q..., p...``; ``n_samples`` resamples on a uniform grid."""
        if n_samples is None:
            ts, xs = self.times, self.states
        else:
            ts = np.linspace(self.t0, self.t1, n_samples)
            xs = np.array([self.state(t) for t in ts])
        return np.column_stack([ts, xs])

    def export(self, path, n_samples=None):
        n = self.n
        header = "\t".join(["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)])
        np.savetxt(path, self.to_table(n_samples), delimiter="\t", header=header, comments="", fmt="%.17g")


def integrate_flow(H, x0, t_span, cfg=DEFAULT_CONFIG):
    """Solve ``x' = J grad H(x)`` from ``x0`` over ``t_span``."""
    x0 = np.asarray(x0, dtype=float)
    t0, t1 = map(float, t_span)
    if t1 == t0:
        raise ValueError("empty time span")

    def rhs(t, x):
        return H.vector_field(x)

    sol = _solve(rhs, (t0, t1), x0, cfg)
    E0 = H.value(x0)
    drift = max(abs(H.value(x) - E0) for x in sol.y.T)
    return Trajectory(sol.t.copy(), sol.y.T.copy(), sol.sol, float(E0), float(drift), H)


@dataclass(frozen=True)
class VariationalTrajectory:
    """Base trajectory plus the fundamental solution ``X(t)``, ``X(t0) = I``."""

    base: Trajectory
    _fundamental: object = field(repr=False)
    dim: int = 0

    def fundamental(self, t):
        y = self._fundamental(t)
        return np.asarray(y[self.dim :]).reshape(self.dim, self.dim)

    def transition(self, s, t):
        """Transition matrix from time ``s`` to time ``t`` (``Xi_s^t``)."""
        Xt = self.fundamental(t)
        if s == self.base.t0:
            return Xt
        return np.linalg.solve(self.fundamental(s).T, Xt.T).T

    def symplectic_residual(self, t):
        X = self.fundamental(t)
        J = standard_symplectic_form(self.dim // 2)
        return float(np.max(np.abs(X.T @ J @ X - J)))


def variational_rhs(H):
    n2 = 2 * H.n
    J = standard_symplectic_form(H.n)

    def rhs(t, y):
        x = y[:n2]
        X = y[n2:].reshape(n2, n2)
        g = H.gradient(x)
        A = J @ H.hessian(x)
        return np.concatenate([J @ g, (A @ X).ravel()])

    return rhs


def integrate_variational(H, x0, t_span, cfg=DEFAULT_CONFIG):
    """Jointly integrate the flow and ``X' = J Hess H(x(t)) X`` with ``X(t0) = I``."""
    x0 = np.asarray(x0, dtype=float)
    n2 = x0.size
    y0 = np.concatenate([x0, np.eye(n2).ravel()])
    sol = _solve(variational_rhs(H), tuple(map(float, t_span)), y0, cfg)
    E0 = H.value(x0)
    xs = sol.y[:n2].T
    drift = max(abs(H.value(x) - E0) for x in xs)

    class _Base:
        # restrict the dense output to the phase-space block
        def __init__(self, s):
            self.s = s

        def __call__(self, t):
            return self.s(t)[:n2]

    traj = Trajectory(sol.t.copy(), xs.copy(), _Base(sol.sol), float(E0), float(drift), H)
    return VariationalTrajectory(traj, sol.sol, n2)


def monodromy(H, x0, T, cfg=DEFAULT_CONFIG):
    """Endpoint and fundamental matrix at time ``T`` (no dense output)."""
    x0 = np.asarray(x0, dtype=float)
    n2 = x0.size
    y0 = np.concatenate([x0, np.eye(n2).ravel()])
    cfg2 = FlowConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step, False, cfg.method)
    sol = _solve(variational_rhs(H), (0.0, float(T)), y0, cfg2)
    y = sol.y[:, -1]
    return y[:n2].copy(), y[n2:].reshape(n2, n2).copy()


def flow_map(H, x0, T, cfg=DEFAULT_CONFIG):
    x0 = np.asarray(x0, dtype=float)
    cfg2 = FlowConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step, False, cfg.method)
    sol = _solve(lambda t, x: H.vector_field(x), (0.0, float(T)), x0, cfg2)
    return sol.y[:, -1].copy()


@dataclass(frozen=True)
class Crossing:
    t: float
    x: np.ndarray
    direction: int


def section_crossing(traj, section, direction="both", subdivisions=8, rtol=1e-10):
    """Zeros of ``section(x(t))`` along ``traj``.

    Sign changes are bracketed on the accepted steps (each split into
    ``subdivisions`` pieces) and polished with Brent's method on the dense output.
    ``direction`` is ``"+"`` (increasing), ``"-"`` (decreasing) or ``"both"``.
    """
    want = {"+": 1, "-": -1, "both": 0, 1: 1, -1: -1, 0: 0}[direction]
    ts = traj.times
    grid = [ts[0]]
    for a, b in zip(ts[:-1], ts[1:]):
        grid.extend(np.linspace(a, b, subdivisions + 1)[1:])
    grid = np.asarray(grid)
    tsign = np.sign(grid[-1] - grid[0])

    def g(t):
        return float(section(traj.state(t)))

    vals = np.array([g(t) for t in grid])
    scale = max(1.0, float(np.max(np.abs(vals))))
    out = []
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            if i == 0 or vals[i - 1] != 0.0:
                root = a
            else:
                continue
        elif fa * fb < 0:
            root = brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        else:
            continue
        # orientation of the crossing in forward time
        h = 1e-6 * max(1.0, abs(root))
        lo, hi = sorted((grid[0], grid[-1]))
        slope = (g(min(root + h, hi)) - g(max(root - h, lo))) * tsign
        sgn = int(np.sign(slope)) if slope != 0 else int(np.sign(fb - fa) * tsign)
        if want and sgn != want:
            continue
        x = traj.state(root)
        if abs(section(x)) > rtol * scale:
            # polishing failed to meet tolerance; bisect once more on a tighter bracket
            root = brentq(g, a, b, xtol=1e-16, maxiter=400)
            x = traj.state(root)
        if out and abs(out[-1].t - root) < 1e-12:
            continue
        out.append(Crossing(float(root), x, sgn))
    return out
