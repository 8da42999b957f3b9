"""Periodic orbits: Newton shooting, minimal periods, neat times, restricted
linearized return maps and the scan for the degeneracy locus."""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar

from .exceptions import ConvergenceError, HypothesisViolation, TangencyError
from .flow import DEFAULT_CONFIG, Trajectory, integrate_flow, monodromy
from .geometry import (
    SympMatrix,
    add_potential,
    fiberwise_iso_energetic_test,
    standard_symplectic_form,
)


class DegenerateOrbitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PeriodicOrbit:
    x0: np.ndarray
    period: float
    minimal_period: float
    energy: float
    samples: Trajectory = field(repr=False)
    closure_residual: float
    iterations: int = 0
    residual_history: tuple = ()
    H: object = field(repr=False, default=None)

    def state(self, t):
        """Point of the orbit at time ``t`` (reduced modulo the period)."""
        T = self.period
        tt = np.mod(t, T)
        return self.samples.state(tt)


def _phase_normal(H, x):
    X = H.vector_field(x)
    nrm = np.linalg.norm(X)
    if nrm == 0:
        raise HypothesisViolation("the guess is an equilibrium; no phase condition exists")
    a = X / nrm
    k = int(np.argmax(np.abs(a)))
    if abs(a[k]) > 1 - 1e-12:
        a = np.zeros_like(a)
        a[k] = np.sign(X[k])
    return a


def find_periodic_orbit(H, guess_x, guess_T, cfg=DEFAULT_CONFIG, energy=None, max_iter=30, tol=1e-10):
    """Newton shooting on ``phi^T(x) - x = 0`` with a phase condition.

    The phase condition pins ``x`` to the hyperplane through ``guess_x``
    orthogonal to the flow there.  With ``energy`` given, ``H(x) = energy`` is
    appended.  Steps are least-squares solutions, so orbits lying in families
    (where the Newton matrix is singular) are handled; a
    :class:`DegenerateOrbitWarning` reports the multiplicity of the eigenvalue 1.
    """
    xg = np.asarray(guess_x, dtype=float)
    x = xg.copy()
    T = float(guess_T)
    a = _phase_normal(H, xg)
    n2 = x.size
    scale = max(1.0, float(np.linalg.norm(xg)))
    history = []
    warned = False
    it = 0
    for it in range(max_iter + 1):
        xT, M = monodromy(H, x, T, cfg)
        r = H.wrap(xT - x)
        rows = [r, [a @ (x - xg)]]
        if energy is not None:
            rows.append([H.value(x) - energy])
        F = np.concatenate(rows)
        res = float(np.linalg.norm(F))
        history.append(res)
        if res <= tol * scale:
            break
        if it == max_iter:
            raise ConvergenceError(f"shooting did not converge in {max_iter} iterations (residual {res:.3e})", history)
        Jm = np.zeros((F.size, n2 + 1))
        Jm[:n2, :n2] = M - np.eye(n2)
        Jm[:n2, n2] = H.vector_field(xT)
        Jm[n2, :n2] = a
        if energy is not None:
            Jm[n2 + 1, :n2] = H.gradient(x)
        sv = np.linalg.svd(Jm, compute_uv=False)
        if not warned and sv[-1] < 1e-9 * sv[0]:
            ev = np.linalg.eigvals(M)
            mult = int(np.sum(np.abs(ev - 1) < 1e-6))
            warnings.warn(
                f"singular shooting matrix: monodromy has {mult} eigenvalues within 1e-6 of 1",
                DegenerateOrbitWarning,
                stacklevel=2,
            )
            warned = True
        step, *_ = np.linalg.lstsq(Jm, -F, rcond=1e-12)
        x = x + step[:n2]
        T = T + step[n2]
    samples = integrate_flow(H, x, (0.0, T), cfg)
    closure = float(np.linalg.norm(H.wrap(samples.states[-1] - x)))
    orbit = PeriodicOrbit(x, T, T, float(H.value(x)), samples, closure, it, tuple(history), H)
    return orbit


def convergence_order(history):
    """Estimated order from the last three residuals (``nan`` if unavailable)."""
    h = [v for v in history if v > 0]
    if len(h) < 3:
        return float("nan")
    e0, e1, e2 = h[-3:]
    if e0 <= e1 or e1 <= e2:
        return float("nan")
    return float(np.log(e2 / e1) / np.log(e1 / e0))


@dataclass(frozen=True)
class MinimalPeriod:
    T_min: float
    multiplicity: int


def _closure_distance(H, traj, x0, t):
    return float(np.linalg.norm(H.wrap(traj.state(t) - x0)))


def minimal_period(orbit, tol=1e-7, max_multiplicity=8, cfg=DEFAULT_CONFIG):
    """Smallest ``T/k`` at which the orbit closes, found by scanning divisors and refining."""
    H = orbit.H
    T = orbit.period
    x0 = orbit.x0
    traj = orbit.samples
    if traj.t1 < T * (1 - 1e-12):
        traj = integrate_flow(H, x0, (0.0, T), cfg)
    scale = max(1.0, float(np.linalg.norm(x0)))
    for k in range(max_multiplicity, 1, -1):
        tk = T / k
        dist = _closure_distance(H, traj, x0, tk)
        if dist > 1e3 * tol * scale:
            continue
        w = 0.02 * tk
        res = minimize_scalar(
            lambda t: _closure_distance(H, traj, x0, t), bounds=(tk - w, tk + w), method="bounded",
            options={"xatol": 1e-13},
        )
        if res.fun <= tol * scale and abs(res.x * k - T) <= 1e-6 * T:
            return MinimalPeriod(float(tk), k)
    return MinimalPeriod(float(T), 1)


def with_minimal_period(orbit, tol=1e-7):
    mp = minimal_period(orbit, tol)
    return PeriodicOrbit(
        orbit.x0, orbit.period, mp.T_min, orbit.energy, orbit.samples, orbit.closure_residual,
        orbit.iterations, orbit.residual_history, orbit.H,
    )


def orbit_from_data(H, x0, period, cfg=DEFAULT_CONFIG, minimal=None):
    """Wrap a known periodic point without shooting."""
    x0 = np.asarray(x0, dtype=float)
    samples = integrate_flow(H, x0, (0.0, float(period)), cfg)
    closure = float(np.linalg.norm(H.wrap(samples.states[-1] - x0)))
    return PeriodicOrbit(x0, float(period), float(minimal or period), float(H.value(x0)), samples, closure, 0, (), H)


# ---------------------------------------------------------------------------
# neat times


@dataclass(frozen=True)
class NeatTimes:
    """Maximal open intervals of neat times in one minimal period.

    An interval ``(a, b)`` may have ``b > T`` (it wraps past the period).
    """

    intervals: tuple
    T: float
    full: bool = False

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def contains(self, t):
        if self.full:
            return True
        t = np.mod(t, self.T)
        for a, b in self.intervals:
            if a < t < b or a < t + self.T < b:
                return True
        return False

    def measure(self):
        return float(sum(b - a for a, b in self.intervals))


class _NeatPredicate:
    def __init__(self, orbit, n_grid, tol_speed, tol_sep):
        self.H = orbit.H
        self.T = orbit.minimal_period
        self.traj = orbit.samples
        self.N = n_grid
        n = self.H.n
        ts = np.arange(n_grid) * self.T / n_grid
        xs = np.asarray(self.traj(ts)).T
        self.grid_t = ts
        self.grid_q = xs[:, :n]
        self.speeds = np.array([np.linalg.norm(self.H.gradient(x)[n:]) for x in xs])
        span = np.ptp(self.grid_q, axis=0)
        for i, per in enumerate(self.H.periods):
            if per:
                span[i] = min(span[i], per)
        self.diam = max(float(np.linalg.norm(span)), 1e-300)
        self.eps = tol_sep * self.diam
        self.tol_speed = tol_speed if tol_speed is not None else 1e-8 * max(1.0, float(self.speeds.max()))

    def _q(self, t):
        x = np.asarray(self.traj(np.mod(t, self.T)))
        return x[: self.H.n].T if x.ndim > 1 else x[: self.H.n]

    def _dist(self, qs, q):
        return np.linalg.norm(self.H.wrap_base(qs - q), axis=-1)

    def _decide(self, s, dist_profile):
        """``dist_profile[j] = |Q(s + j T/N) - Q(s)|`` for ``j = 0..N-1``."""
        d = dist_profile
        N = d.size
        R = 2 * self.eps
        kf = 1
        while kf < N and d[kf] > d[kf - 1] and d[kf] < R:
            kf += 1
        if kf < N and d[kf] >= R and d[kf] > d[kf - 1]:
            kf += 1
        kb = 1
        while kb < N and d[-kb] > d[-kb + 1 if kb > 1 else 0] and d[-kb] < R:
            kb += 1
        if kb < N and d[-kb] >= R and d[-kb] > d[(-kb + 1) % N]:
            kb += 1
        lo, hi = kf, N - kb + 1
        if hi <= lo:
            return True
        rest = d[lo:hi]
        m = int(np.argmin(rest))
        if rest[m] <= self.eps:
            return False
        if rest[m] > 3 * self.eps:
            return True
        # refine the near approach on the dense output
        j = lo + m
        h = self.T / N
        q0 = self._q(s)
        res = minimize_scalar(
            lambda tau: float(self._dist(self._q(s + tau), q0)),
            bounds=((j - 1) * h, (j + 1) * h),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return bool(res.fun > self.eps)

    def at_grid(self, i):
        if self.speeds[i] <= self.tol_speed:
            return False
        prof = self._dist(np.roll(self.grid_q, -i, axis=0), self.grid_q[i])
        return self._decide(self.grid_t[i], prof)

    def at(self, s):
        n = self.H.n
        x = np.asarray(self.traj(np.mod(s, self.T)))
        if np.linalg.norm(self.H.gradient(x)[n:]) <= self.tol_speed:
            return False
        ts = s + np.arange(self.N) * self.T / self.N
        qs = self._q(ts)
        return self._decide(s, self._dist(qs, qs[0]))


def neat_times(orbit, tol_speed=None, tol_sep=1e-3, n_grid=1024, refine=True):
    """Intervals of times ``s`` with ``Q'(s) != 0`` visited once per minimal period.

    A time is rejected when the projected orbit comes back within
    ``tol_sep * diameter`` of ``Q(s)`` outside the local arc through ``s``.
    The local arc ends where the distance from ``Q(s)`` stops increasing (this
    catches folds such as turning points) or exceeds twice the threshold.
    """
    pred = _NeatPredicate(orbit, n_grid, tol_speed, tol_sep)
    flags = np.array([pred.at_grid(i) for i in range(n_grid)])
    T = pred.T
    h = T / n_grid
    if flags.all():
        return NeatTimes(((0.0, T),), T, True)
    if not flags.any():
        return NeatTimes((), T, False)
    start = int(np.argmin(flags))  # a False index; runs are read starting there
    order = [(start + k) % n_grid for k in range(n_grid)]
    runs = []
    k = 0
    while k < n_grid:
        if flags[order[k]]:
            j = k
            while j + 1 < n_grid and flags[order[j + 1]]:
                j += 1
            runs.append((start + k, start + j))
            k = j + 1
        else:
            k += 1

    def edge(t_in, t_out):
        # bisection between a neat and a non-neat time
        for _ in range(30):
            mid = 0.5 * (t_in + t_out)
            if pred.at(mid):
                t_in = mid
            else:
                t_out = mid
            if abs(t_out - t_in) < 1e-10 * T:
                break
        return 0.5 * (t_in + t_out)

    intervals = []
    for i0, i1 in runs:
        a_in, b_in = i0 * h, i1 * h
        if refine:
            a = edge(a_in, a_in - h)
            b = edge(b_in, b_in + h)
        else:
            a, b = a_in - 0.5 * h, b_in + 0.5 * h
        a_mod = a % T
        intervals.append((a_mod, a_mod + (b - a)))
    intervals.sort()
    return NeatTimes(tuple(intervals), T, False)


def self_distance(orbit, window, n_grid=1024, guard=0.0):
    """Minimum distance between projected points inside ``window`` and those outside it.

    Outside points closer in time than ``guard`` to the window are ignored, so
    that a simple closed curve is not penalized for its own continuation.
    """
    H = orbit.H
    T = orbit.minimal_period
    ts = np.arange(n_grid) * T / n_grid
    xs = np.asarray(orbit.samples(ts)).T
    qs = xs[:, : H.n]
    ta, tb = window
    inside = np.array([_in_window(t, ta, tb, T) for t in ts])
    outside = np.array([not _in_window(t, ta - guard, tb + guard, T) for t in ts])
    A, B = qs[inside], qs[outside]
    if len(A) == 0 or len(B) == 0:
        return np.inf
    dif = H.wrap_base(A[:, None, :] - B[None, :, :])
    return float(np.linalg.norm(dif, axis=-1).min())


def _in_window(t, ta, tb, T):
    t = np.mod(t - ta, T)
    return t <= (tb - ta)


# ---------------------------------------------------------------------------
# sections and return maps


@dataclass(frozen=True)
class SectionFrame:
    """Transverse hyperplane ``{a . (x - point) = 0}`` with a symplectic basis of its
    intersection with the tangent space of the energy level."""

    anchor_time: float
    point: np.ndarray
    normal: np.ndarray
    basis: np.ndarray

    @property
    def d(self):
        return self.basis.shape[1] // 2

    def gram(self):
        J = standard_symplectic_form(self.point.size // 2)
        return self.basis.T @ J @ self.basis


def _omega(u, v, n):
    return u[:n] @ v[n:] - u[n:] @ v[:n]


def _symplectic_gram_schmidt(S, n):
    """Symplectic basis ``(e_1..e_d, f_1..f_d)`` of the span of the columns of ``S``."""
    J = standard_symplectic_form(n)
    vecs = [S[:, k] for k in range(S.shape[1])]
    es, fs = [], []
    while vecs:
        e = vecs.pop(0)
        pairing = [abs(e @ J @ v) for v in vecs]
        k = int(np.argmax(pairing))
        f = vecs.pop(k)
        f = f / (e @ J @ f)
        es.append(e)
        fs.append(f)
        new = []
        for v in vecs:
            v = v - (v @ J @ f) * e * -1 - (e @ J @ v) * f
            # v <- v - omega(e, v) f + omega(f, v) e
            new.append(v)
        vecs = new
    return np.column_stack(es + fs)


def adapted_basis(S, n):
    """Symplectic basis of the 2d-space spanned by ``S`` (orthonormal columns).

    The last ``d`` vectors span its intersection with the vertical ``{dq = 0}``
    when that intersection is Lagrangian; the first ``d`` complete them with
    ``Gram = J``.
    """
    d = S.shape[1] // 2
    C = null_space(S[:n, :], rcond=1e-10)
    if C.shape[1] != d:
        return _symplectic_gram_schmidt(S, n)
    F = S @ C
    Hc = S @ null_space(C.T)
    J = standard_symplectic_form(n)
    P = Hc.T @ J @ F
    Hc = Hc @ np.linalg.inv(P).T
    A = Hc.T @ J @ Hc
    Hc = Hc + F @ (0.5 * A).T
    return np.column_stack([Hc, F])


def make_section_frame(H, x, normal=None, anchor_time=0.0, basis=None):
    """Section through ``x`` with a symplectic basis of ``ker(a) & ker(dH)``.

    The default normal is the base hyperplane orthogonal to the projected
    velocity ``d_p H(x)``; any phase-space covector may be passed instead.
    """
    x = np.asarray(x, dtype=float)
    n = H.n
    g = H.gradient(x)
    X = H.vector_field(x)
    if normal is None:
        v = g[n:]
        if np.linalg.norm(v) < 1e-12:
            raise TangencyError("d_p H vanishes: pass a phase-space section normal")
        normal = np.concatenate([v / np.linalg.norm(v), np.zeros(n)])
    a = np.asarray(normal, dtype=float)
    if abs(a @ X) < 1e-12 * max(1.0, np.linalg.norm(X)):
        raise TangencyError("the section is tangent to the flow")
    if basis is None:
        S = null_space(np.vstack([a, g]))
        basis = adapted_basis(S, n)
    basis = np.asarray(basis, dtype=float)
    fr = SectionFrame(float(anchor_time), x, a, basis)
    gerr = np.max(np.abs(fr.gram() - standard_symplectic_form(basis.shape[1] // 2)))
    if gerr > 1e-8:
        raise ValueError(f"frame basis is not symplectic (Gram error {gerr:.2e})")
    return fr


def _restrict(H, M, x_end, frame_start, frame_end):
    n = H.n
    X = H.vector_field(x_end)
    a = frame_end.normal
    s = a @ X
    if abs(s) < 1e-12:
        raise TangencyError("flow is tangent to the target section")
    Pi = np.eye(2 * n) - np.outer(X, a) / s
    W = Pi @ M @ frame_start.basis
    E = frame_end.basis
    J = standard_symplectic_form(n)
    Jd = standard_symplectic_form(E.shape[1] // 2)
    return -Jd @ E.T @ J @ W


def restricted_return_map(H, orbit, frame, u=None, cfg=DEFAULT_CONFIG, period=None):
    """Restricted linearized return map of ``H + u`` in the frame basis (``2d x 2d``).

    The frame tangent vectors are transported over one minimal period by the
    variational flow, pushed back onto the section along the flow direction and
    read in the frame basis.
    """
    Hu = add_potential(H, u)
    T = period or orbit.minimal_period
    xT, M = monodromy(Hu, frame.point, T, cfg)
    gap = np.linalg.norm(Hu.wrap(xT - frame.point))
    if gap > 1e-6 * max(1.0, np.linalg.norm(frame.point)):
        warnings.warn(f"orbit does not close for the perturbed Hamiltonian (gap {gap:.2e})", stacklevel=2)
    L = _restrict(Hu, M, frame.point, frame, frame)
    return SympMatrix(L, tol=1e-6)


def restricted_transition_map(H, frame_start, frame_end, t, u=None, cfg=DEFAULT_CONFIG):
    """Linearized transition between two sections along an orbit segment of duration ``t``."""
    Hu = add_potential(H, u)
    xT, M = monodromy(Hu, frame_start.point, t, cfg)
    gap = np.linalg.norm(Hu.wrap(xT - frame_end.point))
    if gap > 1e-6 * max(1.0, np.linalg.norm(xT)):
        warnings.warn(f"segment end misses the target frame point (gap {gap:.2e})", stacklevel=2)
    return _restrict(Hu, M, xT, frame_start, frame_end)


@dataclass(frozen=True)
class NondegeneracyVerdict:
    verdict: bool
    distance_to_1: float
    eigenvalues: np.ndarray = field(repr=False, default=None)


def orbit_nondegenerate(L, tol=1e-8):
    """Non-degenerate iff 1 is not an eigenvalue of the restricted map."""
    ev = np.linalg.eigvals(np.asarray(L, dtype=float))
    dist = float(np.min(np.abs(ev - 1.0)))
    return NondegeneracyVerdict(dist > tol, dist, ev)


# ---------------------------------------------------------------------------
# degeneracy locus


@dataclass(frozen=True)
class SigmaEvent:
    t: float
    t_lo: float
    t_hi: float
    det_lo: float
    det_hi: float
    kind: str  # "crossing" or "touch"


def _det_along(H, traj):
    def f(t):
        return fiberwise_iso_energetic_test(H, traj.state(t), tol=0.0).det_value

    return f


def sigma_scan(H, traj, tol=None, subdivisions=8):
    """Sign changes and near-zeros of the bordered determinant along ``traj``.

    Sign changes are refined by Brent's method; the returned bracket
    ``[t_lo, t_hi]`` has endpoint determinants of opposite sign.
    """
    f = _det_along(H, traj)
    ts = traj.times
    grid = [ts[0]]
    for a, b in zip(ts[:-1], ts[1:]):
        grid.extend(np.linspace(a, b, subdivisions + 1)[1:])
    grid = np.asarray(grid)
    vals = np.array([f(t) for t in grid])
    if tol is None:
        tol = 1e-8 * max(1.0, float(np.max(np.abs(vals))))
    events = []
    for i in range(len(grid) - 1):
        a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
        if fa * fb < 0:
            r = brentq(f, min(a, b), max(a, b), xtol=1e-15, rtol=4 * np.finfo(float).eps)
            lo, hi = (a, b) if a < b else (b, a)
            events.append(SigmaEvent(float(r), float(lo), float(hi), float(f(lo)), float(f(hi)), "crossing"))
        elif fa == 0.0 and fb == 0.0:
            continue
    # near-zeros without a sign change
    absv = np.abs(vals)
    for i in range(1, len(grid) - 1):
        if absv[i] <= tol and absv[i] <= absv[i - 1] and absv[i] <= absv[i + 1] and vals[i - 1] * vals[i + 1] > 0:
            lo, hi = sorted((grid[i - 1], grid[i + 1]))
            events.append(SigmaEvent(float(grid[i]), float(lo), float(hi), float(vals[i - 1]), float(vals[i + 1]), "touch"))
    events.sort(key=lambda e: e.t)
    return events


# ---------------------------------------------------------------------------
# classification


@dataclass
class OrbitReport:
    energy: float
    period: float
    minimal_period: float
    multiplicity: int
    neat: NeatTimes
    sigma_events: list
    sigma_fraction: float
    joint_times: NeatTimes
    return_map: np.ndarray
    nondegeneracy: NondegeneracyVerdict
    anchor_time: float
    perturbable: bool
    det_tol: float

    def lines(self):
        out = [
            f"energy = {self.energy:.12g}",
            f"period = {self.period:.12g}",
            f"minimal_period = {self.minimal_period:.12g}",
            f"multiplicity = {self.multiplicity}",
            f"neat_intervals = {_fmt_intervals(self.neat)}",
            f"neat_time_exists = {len(self.neat) > 0}",
            f"fiberwise_isoenergetic_tol = {self.det_tol:.3e}",
            f"sigma_fraction_of_period = {self.sigma_fraction:.6g}",
            f"sigma_events = {len(self.sigma_events)}",
            f"joint_neat_and_nondegenerate = {_fmt_intervals(self.joint_times)}",
            f"anchor_time = {self.anchor_time:.12g}",
            f"return_map_distance_to_1 = {self.nondegeneracy.distance_to_1:.6e}",
            f"orbit_nondegenerate = {self.nondegeneracy.verdict}",
            f"perturbable = {self.perturbable}",
        ]
        return out


def _fmt_intervals(nt):
    if nt.full:
        return "full circle"
    if len(nt) == 0:
        return "none"
    return "; ".join(f"({a:.9g}, {b:.9g})" for a, b in nt)


def classify_orbit(H, orbit, tol=None, n_grid=512, neat_kwargs=None):
    """Check the perturbation hypotheses along an orbit.

    The orbit is flagged perturbable iff some time is both neat and a point of
    fiberwise iso-energetic non-degeneracy.
    """
    mp = minimal_period(orbit)
    if abs(mp.T_min - orbit.minimal_period) > 1e-9 * orbit.period:
        orbit = with_minimal_period(orbit)
    T = orbit.minimal_period
    neat = neat_times(orbit, **(neat_kwargs or {}))
    ts = np.arange(n_grid) * T / n_grid
    xs = np.asarray(orbit.samples(ts)).T
    dets = np.array([fiberwise_iso_energetic_test(H, x, tol=0.0).det_value for x in xs])
    if tol is None:
        tol = max(fiberwise_iso_energetic_test(H, x).tol for x in xs[:: max(1, n_grid // 16)])
    good = np.abs(dets) > tol
    neat_flags = np.array([neat.contains(t) for t in ts])
    joint = good & neat_flags
    h = T / n_grid
    if joint.all():
        joint_nt = NeatTimes(((0.0, T),), T, True)
    else:
        ivs = []
        k = 0
        while k < n_grid:
            if joint[k]:
                j = k
                while j + 1 < n_grid and joint[j + 1]:
                    j += 1
                ivs.append((k * h, j * h + h))
                k = j + 1
            else:
                k += 1
        joint_nt = NeatTimes(tuple(ivs), T, False)
    sub = integrate_flow(H, orbit.x0, (0.0, T))
    events = sigma_scan(H, sub, tol)
    if joint.any():
        k_anchor = int(np.argmax(np.where(joint, np.abs(dets), -np.inf)))
    else:
        speeds = np.array([np.linalg.norm(H.gradient(x)[H.n :]) for x in xs])
        k_anchor = int(np.argmax(speeds))
    t_anchor = ts[k_anchor]
    try:
        frame = make_section_frame(H, xs[k_anchor], anchor_time=t_anchor)
        L = np.asarray(restricted_return_map(H, orbit, frame))
        verdict = orbit_nondegenerate(L)
    except TangencyError:
        L = np.full((2 * H.d, 2 * H.d), np.nan)
        verdict = NondegeneracyVerdict(False, float("nan"))
    return OrbitReport(
        energy=orbit.energy,
        period=orbit.period,
        minimal_period=T,
        multiplicity=int(round(orbit.period / T)),
        neat=neat,
        sigma_events=events,
        sigma_fraction=float(np.mean(~good)),
        joint_times=joint_nt,
        return_map=L,
        nondegeneracy=verdict,
        anchor_time=float(t_anchor),
        perturbable=bool(joint.any()),
        det_tol=float(tol),
    )
