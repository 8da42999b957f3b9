"""Phase-space types, Hamiltonian models and pointwise degeneracy tests.

Phase points are flat arrays ``x = (q, p)`` of length ``2n`` where ``n = d + 1``
is the dimension of the base.  The standard symplectic matrix is
``J = [[0, I], [-I, 0]]`` and the Hamiltonian vector field is ``X_H = J grad H``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import EvaluationError, InvalidDimensionError, SymplecticityError


def standard_symplectic_form(d):
    """Return the ``2d x 2d`` matrix ``[[0, I], [-I, 0]]``."""
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    J = np.zeros((2 * d, 2 * d))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    return J


def is_hamiltonian_matrix(W, tol=1e-12):
    W = np.asarray(W, dtype=float)
    JW = standard_symplectic_form(W.shape[0] // 2) @ W
    return bool(np.max(np.abs(JW - JW.T), initial=0.0) <= tol)


def symplectic_residual(L):
    """``max |L^T J L - J|``."""
    L = np.asarray(L, dtype=float)
    J = standard_symplectic_form(L.shape[0] // 2)
    return float(np.max(np.abs(L.T @ J @ L - J)))


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).ravel()
        p = np.asarray(self.p, dtype=float).ravel()
        if q.shape != p.shape or q.size < 2:
            raise InvalidDimensionError("q and p must have equal length d+1 >= 2")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise EvaluationError("phase point has non-finite entries", x=np.r_[q, p])
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float).ravel()
        n = x.size // 2
        return cls(x[:n], x[n:])

    @property
    def x(self):
        return np.concatenate([self.q, self.p])

    @property
    def d(self):
        return self.q.size - 1


@dataclass(frozen=True)
class SympMatrix:
    """A symplectic matrix checked at construction."""

    entries: np.ndarray
    tol: float = 1e-6

    def __post_init__(self):
        L = np.array(self.entries, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] % 2:
            raise InvalidDimensionError(f"expected an even square matrix, got {L.shape}")
        res = symplectic_residual(L)
        if res > self.tol:
            raise SymplecticityError(f"matrix is not symplectic: residual {res:.3e} > {self.tol:.1e}")
        L.setflags(write=False)
        object.__setattr__(self, "entries", L)

    @property
    def d(self):
        return self.entries.shape[0] // 2

    @property
    def residual(self):
        return symplectic_residual(self.entries)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class HamMatrix:
    """An element of sp(2d): ``J W`` symmetric."""

    entries: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        W = np.array(self.entries, dtype=float)
        if not is_hamiltonian_matrix(W, self.tol * max(1.0, np.max(np.abs(W), initial=0.0))):
            raise SymplecticityError("matrix is not Hamiltonian (J W not symmetric)")
        W.setflags(write=False)
        object.__setattr__(self, "entries", W)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


# ---------------------------------------------------------------------------
# finite differences


def fd_gradient(f, x, rel_step=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_jacobian(F, x, rel_step=1e-5):
    """Central-difference Jacobian of a vector (or array) valued map; the new axis is last."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(F(x + e)) - np.asarray(F(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(f, x, rel_step=1e-4):
    x = np.asarray(x, dtype=float)
    m = x.size
    H = np.empty((m, m))
    f0 = f(x)
    hs = rel_step * (1.0 + np.abs(x))
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = hs[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / hs[i] ** 2
        for j in range(i + 1, m):
            ej = np.zeros(m)
            ej[j] = hs[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * hs[i] * hs[j])
            H[i, j] = H[j, i] = v
    return H


# ---------------------------------------------------------------------------
# Hamiltonians


class Hamiltonian:
    """Base class for Hamiltonians on a chart domain of ``T*R^n``.

    Subclasses implement :meth:`value` and may override :meth:`gradient` and
    :meth:`hessian`.  With ``derivative_mode="fd"`` derivatives always come
    from central differences with the configured steps.

    ``periods`` holds, for each base coordinate, its period or ``None``.
    """

    def __init__(self, n, periods=None, derivative_mode="analytic", fd_step=(1e-5, 1e-4)):
        if n < 2:
            raise InvalidDimensionError("base dimension n = d+1 must be >= 2")
        self.n = int(n)
        self.periods = tuple(periods) if periods is not None else (None,) * self.n
        if len(self.periods) != self.n:
            raise InvalidDimensionError("periods must have one entry per base coordinate")
        if derivative_mode not in ("analytic", "fd"):
            raise ValueError(f"unknown derivative_mode {derivative_mode!r}")
        self.derivative_mode = derivative_mode
        self.fd_step = tuple(fd_step)

    @property
    def d(self):
        return self.n - 1

    # subclasses override ------------------------------------------------
    def value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        return fd_gradient(self.value, x, self.fd_step[0])

    def _hessian(self, x):
        # difference the gradient when it is analytic; it is far more accurate
        if type(self)._gradient is not Hamiltonian._gradient:
            Hs = fd_jacobian(self._gradient, x, self.fd_step[1])
            return 0.5 * (Hs + Hs.T)
        return fd_hessian(self.value, x, self.fd_step[1])

    # public --------------------------------------------------------------
    def __call__(self, x):
        return self.value(x)

    def gradient(self, x):
        x = self._check(x)
        g = fd_gradient(self.value, x, self.fd_step[0]) if self.derivative_mode == "fd" else self._gradient(x)
        g = np.asarray(g, dtype=float)
        if not np.all(np.isfinite(g)):
            raise EvaluationError("non-finite gradient", x=x)
        return g

    def hessian(self, x):
        x = self._check(x)
        if self.derivative_mode == "fd":
            H = fd_hessian(self.value, x, self.fd_step[1])
        else:
            H = self._hessian(x)
        H = np.asarray(H, dtype=float)
        if not np.all(np.isfinite(H)):
            raise EvaluationError("non-finite Hessian", x=x)
        return H

    def with_derivative_mode(self, mode, fd_step=None):
        import copy

        other = copy.copy(self)
        other.derivative_mode = mode
        if fd_step is not None:
            other.fd_step = (fd_step, fd_step) if np.isscalar(fd_step) else tuple(fd_step)
        return other

    def vector_field(self, x):
        g = self.gradient(x)
        n = self.n
        return np.concatenate([g[n:], -g[:n]])

    def _check(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != 2 * self.n:
            raise InvalidDimensionError(f"expected a phase point of length {2 * self.n}, got {x.size}")
        return x

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., : self.n], x[..., self.n :]

    def wrap(self, dx):
        """Reduce a phase-space displacement modulo the periodic base coordinates."""
        dx = np.array(dx, dtype=float)
        for i, per in enumerate(self.periods):
            if per:
                dx[..., i] = (dx[..., i] + 0.5 * per) % per - 0.5 * per
        return dx

    def wrap_base(self, dq):
        dq = np.array(dq, dtype=float)
        for i, per in enumerate(self.periods):
            if per:
                dq[..., i] = (dq[..., i] + 0.5 * per) % per - 0.5 * per
        return dq


def hamiltonian_vector_field(H, x):
    """``X_H(x) = (d_p H, -d_q H)``."""
    return H.vector_field(x)


class FiberwiseQuadratic(Hamiltonian):
    """``H(q, p) = 1/2 p^T G(q) p + V(q)``.

    ``G`` and ``V`` may be constants or callables of ``q``.  Optional ``dG``
    (shape ``(n, n, n)``, last axis is the derivative index), ``d2G``,
    ``dV`` and ``d2V`` give exact derivatives; missing ones are differenced.
    """

    def __init__(self, G, V=0.0, dG=None, d2G=None, dV=None, d2V=None, periods=None, n=None, **kw):
        if callable(G):
            n = n or self._guess_n(G)
        else:
            n = np.asarray(G).shape[0]
        super().__init__(n, periods=periods, **kw)
        n = self.n
        if callable(G):
            self._G = G
        else:
            Gc = np.array(G, dtype=float)
            self._G = lambda q: Gc
            dG = dG or (lambda q: np.zeros((n, n, n)))
            d2G = d2G or (lambda q: np.zeros((n, n, n, n)))
        if callable(V):
            self._V = V
        else:
            Vc = float(V)
            self._V = lambda q: Vc
            dV = dV or (lambda q: np.zeros(n))
            d2V = d2V or (lambda q: np.zeros((n, n)))
        self._dG, self._d2G, self._dV, self._d2V = dG, d2G, dV, d2V

    @staticmethod
    def _guess_n(G):
        # callables are probed with growing inputs until one works
        for n in range(2, 16):
            try:
                out = np.asarray(G(np.zeros(n)))
                if out.shape == (n, n):
                    return n
            except Exception:
                continue
        raise InvalidDimensionError("could not infer the base dimension from G")

    def G(self, q):
        return np.asarray(self._G(q), dtype=float)

    def V(self, q):
        return float(self._V(q))

    def dG(self, q):
        if self._dG is not None:
            return np.asarray(self._dG(q), dtype=float)
        return fd_jacobian(self.G, q, 1e-5)

    def d2G(self, q):
        if self._d2G is not None:
            return np.asarray(self._d2G(q), dtype=float)
        return fd_jacobian(self.dG, q, 1e-4)

    def dV(self, q):
        if self._dV is not None:
            return np.asarray(self._dV(q), dtype=float)
        return fd_gradient(self.V, q, 1e-5)

    def d2V(self, q):
        if self._d2V is not None:
            return np.asarray(self._d2V(q), dtype=float)
        return fd_jacobian(self.dV, q, 1e-4)

    def value(self, x):
        q, p = self.split(np.asarray(x, dtype=float))
        return 0.5 * p @ self.G(q) @ p + self.V(q)

    def _gradient(self, x):
        q, p = self.split(x)
        gq = 0.5 * np.einsum("i,ijk,j->k", p, self.dG(q), p) + self.dV(q)
        gp = self.G(q) @ p
        return np.concatenate([gq, gp])

    def _hessian(self, x):
        q, p = self.split(x)
        n = self.n
        Hm = np.empty((2 * n, 2 * n))
        Hm[:n, :n] = 0.5 * np.einsum("i,ijkl,j->kl", p, self.d2G(q), p) + self.d2V(q)
        # d2H/dq_k dp_i = (dG/dq_k p)_i
        qp = np.einsum("ijk,j->ki", self.dG(q), p)
        Hm[:n, n:] = qp
        Hm[n:, :n] = qp.T
        Hm[n:, n:] = self.G(q)
        return 0.5 * (Hm + Hm.T)


class Natural(FiberwiseQuadratic):
    """``H = 1/2 p^T g(q) p + v(q)`` with ``g`` positive definite (a cometric)."""

    def __init__(self, g, v=0.0, **kw):
        super().__init__(g, v, **kw)
        G0 = self.G(np.zeros(self.n))
        if np.min(np.linalg.eigvalsh(0.5 * (G0 + G0.T))) <= 0:
            raise ValueError("natural systems need a positive definite cometric")


class MomentumLinear(Hamiltonian):
    """``H = p_1`` on a base whose first coordinate is periodic."""

    def __init__(self, n, period=2 * np.pi, **kw):
        periods = (period,) + (None,) * (n - 1)
        super().__init__(n, periods=periods, **kw)

    def value(self, x):
        return float(np.asarray(x, dtype=float)[self.n])

    def _gradient(self, x):
        g = np.zeros(2 * self.n)
        g[self.n] = 1.0
        return g

    def _hessian(self, x):
        return np.zeros((2 * self.n, 2 * self.n))


class CustomHamiltonian(Hamiltonian):
    """Wrap user callables; missing derivatives are differenced."""

    def __init__(self, n, func, grad=None, hess=None, periods=None, **kw):
        super().__init__(n, periods=periods, **kw)
        self._f, self._g, self._h = func, grad, hess

    def value(self, x):
        return float(self._f(np.asarray(x, dtype=float)))

    def _gradient(self, x):
        if self._g is None:
            return fd_gradient(self.value, x, self.fd_step[0])
        return np.asarray(self._g(x), dtype=float)

    def _hessian(self, x):
        if self._h is None:
            if self._g is None:
                return fd_hessian(self.value, x, self.fd_step[1])
            Hs = fd_jacobian(self._gradient, x, self.fd_step[1])
            return 0.5 * (Hs + Hs.T)
        return np.asarray(self._h(x), dtype=float)


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Support:
    """Conservative support descriptor: union of balls of ``radius`` around ``centers``."""

    centers: np.ndarray
    radius: float

    def distance(self, q):
        q = np.atleast_2d(q)
        c = np.atleast_2d(self.centers)
        dist = np.linalg.norm(q[:, None, :] - c[None, :, :], axis=-1).min(axis=1)
        return dist - self.radius


class PotentialField:
    """A function ``u(q)`` on the base with first and second derivatives."""

    support = None

    def value(self, q):
        raise NotImplementedError

    def gradient(self, q):
        return fd_gradient(self.value, q, 1e-5)

    def hessian(self, q):
        return fd_jacobian(self.gradient, q, 1e-4)

    def __call__(self, q):
        return self.value(q)

    def __add__(self, other):
        return SumPotential([self, other])

    def to_dict(self):
        return {"kind": type(self).__name__}


class ZeroPotential(PotentialField):
    def __init__(self, n):
        self.n = n

    def value(self, q):
        return 0.0

    def gradient(self, q):
        return np.zeros(self.n)

    def hessian(self, q):
        return np.zeros((self.n, self.n))


class CallablePotential(PotentialField):
    def __init__(self, func, grad=None, hess=None, support=None):
        self._f, self._g, self._h = func, grad, hess
        self.support = support

    def value(self, q):
        return float(self._f(np.asarray(q, dtype=float)))

    def gradient(self, q):
        if self._g is None:
            return super().gradient(q)
        return np.asarray(self._g(np.asarray(q, dtype=float)), dtype=float)

    def hessian(self, q):
        if self._h is None:
            return super().hessian(q)
        return np.asarray(self._h(np.asarray(q, dtype=float)), dtype=float)


class SumPotential(PotentialField):
    def __init__(self, parts):
        self.parts = list(parts)

    def value(self, q):
        return sum(u.value(q) for u in self.parts)

    def gradient(self, q):
        return sum(u.gradient(q) for u in self.parts)

    def hessian(self, q):
        return sum(u.hessian(q) for u in self.parts)

    def to_dict(self):
        return {"kind": "SumPotential", "parts": [u.to_dict() for u in self.parts]}


class PerturbedHamiltonian(Hamiltonian):
    """``H + u`` for a potential ``u`` on the base."""

    def __init__(self, H, u):
        super().__init__(H.n, periods=H.periods, derivative_mode=H.derivative_mode, fd_step=H.fd_step)
        self.base, self.potential = H, u

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.base.value(x) + self.potential.value(x[: self.n])

    def gradient(self, x):
        x = self._check(x)
        g = self.base.gradient(x).copy()
        g[: self.n] += self.potential.gradient(x[: self.n])
        return g

    def hessian(self, x):
        x = self._check(x)
        Hm = self.base.hessian(x).copy()
        Hm[: self.n, : self.n] += self.potential.hessian(x[: self.n])
        return Hm


def add_potential(H, u):
    """Potential perturbation ``H + u``; fiber derivatives are untouched."""
    if u is None:
        return H
    return PerturbedHamiltonian(H, u)


# ---------------------------------------------------------------------------
# pointwise tests


@dataclass(frozen=True)
class IsoEnergeticResult:
    det_value: float
    non_degenerate: bool
    tol: float = field(default=0.0)


def bordered_matrix(H, x):
    n = H.n
    g = H.gradient(x)
    Hm = H.hessian(x)
    Bm = np.zeros((n + 1, n + 1))
    Bm[:n, :n] = Hm[n:, n:]
    Bm[:n, n] = g[n:]
    Bm[n, :n] = g[n:]
    return Bm


def default_det_tol(H, x):
    n = H.n
    App = H.hessian(x)[n:, n:]
    return 1e-8 * (1.0 + np.linalg.norm(App, 2) ** (n - 1))


def fiberwise_iso_energetic_test(H, x, tol=None):
    """Bordered-determinant test ``det [[H_pp, H_p], [H_p^T, 0]] != 0``.

    ``tol`` defaults to ``1e-8 (1 + |H_pp|^d)``; the value used is returned.
    """
    x = np.asarray(x, dtype=float)
    if tol is None:
        tol = default_det_tol(H, x)
    det = float(np.linalg.det(bordered_matrix(H, x)))
    return IsoEnergeticResult(det, abs(det) > tol, float(tol))


def reversibility_check(H, sample_points, tol=1e-10):
    """True iff ``|H(q, -p) - H(q, p)| <= tol`` at every sample."""
    n = H.n
    for x in np.atleast_2d(sample_points):
        xr = np.array(x, dtype=float)
        xr[n:] *= -1
        if abs(H.value(xr) - H.value(x)) > tol:
            return False
    return True
