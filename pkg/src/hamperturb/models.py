"""A small zoo of Hamiltonians with known orbits, used by tests, the CLI and the
verification suite."""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .geometry import FiberwiseQuadratic, MomentumLinear, Natural

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class ZooEntry:
    name: str
    H: object
    x0: np.ndarray
    period: float = None


def harmonic(omega=1.0):
    """``1/2 (p1^2 + p2^2) + 1/2 omega^2 q2^2`` on ``S^1 x R``."""
    G = np.eye(2)
    w2 = omega**2
    return Natural(
        G,
        lambda q: 0.5 * w2 * q[1] ** 2,
        dV=lambda q: np.array([0.0, w2 * q[1]]),
        d2V=lambda q: np.diag([0.0, w2]),
        periods=(TWO_PI, None),
    )


def nonconvex_d1():
    """``1/2 (p1^2 - p2^2) + 1/2 q2^2 - 1/2`` on ``S^1 x R``."""
    return FiberwiseQuadratic(
        np.diag([1.0, -1.0]),
        lambda q: 0.5 * q[1] ** 2 - 0.5,
        dV=lambda q: np.array([0.0, q[1]]),
        d2V=lambda q: np.diag([0.0, 1.0]),
        periods=(TWO_PI, None),
    )


def nonconvex_d2(k2=1.0, k3=0.5):
    """``1/2 (p1^2 + p2^2 - p3^2) + 1/2 (k2 q2^2 + k3 q3^2) - 1/2`` on ``S^1 x R^2``."""
    return FiberwiseQuadratic(
        np.diag([1.0, 1.0, -1.0]),
        lambda q: 0.5 * (k2 * q[1] ** 2 + k3 * q[2] ** 2) - 0.5,
        dV=lambda q: np.array([0.0, k2 * q[1], k3 * q[2]]),
        d2V=lambda q: np.diag([0.0, k2, k3]),
        periods=(TWO_PI, None, None),
    )


def null_torus():
    """``1/2 (p1^2 - p2^2)`` on ``T^2``; its zero level lies in the degeneracy locus."""
    return FiberwiseQuadratic(np.diag([1.0, -1.0]), 0.0, periods=(TWO_PI, TWO_PI))


def momentum_linear(d=1):
    return MomentumLinear(d + 1)


def _quartic_well(omega, beta, gamma):
    def V(q):
        return 0.5 * q[0] ** 2 + beta * q[0] ** 4 + 0.5 * omega**2 * q[1] ** 2 + gamma * q[0] ** 2 * q[1] ** 2

    def dV(q):
        return np.array(
            [q[0] + 4 * beta * q[0] ** 3 + 2 * gamma * q[0] * q[1] ** 2, omega**2 * q[1] + 2 * gamma * q[0] ** 2 * q[1]]
        )

    def d2V(q):
        a = 1 + 12 * beta * q[0] ** 2 + 2 * gamma * q[1] ** 2
        b = 4 * gamma * q[0] * q[1]
        c = omega**2 + 2 * gamma * q[0] ** 2
        return np.array([[a, b], [b, c]])

    return V, dV, d2V


def libration_model(omega=1.7, beta=0.1, gamma=0.3):
    """Natural system whose ``q2 = 0`` axis carries brake (libration) orbits.

    ``V = q1^2/2 + beta q1^4 + omega^2 q2^2/2 + gamma q1^2 q2^2``.
    """
    V, dV, d2V = _quartic_well(omega, beta, gamma)
    return Natural(np.eye(2), V, dV=dV, d2V=d2V)


def libration_period(amplitude, beta=0.1):
    """Period of the axis brake orbit by quadrature (``q1 = A sin(theta)`` removes the endpoint singularity)."""

    def V1(x):
        return 0.5 * x**2 + beta * x**4

    A = amplitude
    E = V1(A)

    def integrand(th):
        return A * np.cos(th) / np.sqrt(2 * (E - V1(A * np.sin(th))))

    val, _ = quad(integrand, 0, np.pi / 2, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 4 * val


def curved_quadratic(kind="nonconvex", d=1):
    """Fiberwise quadratic models with base-dependent ``G(q)``; normal forms are non-trivial here."""
    n = d + 1
    rng = np.random.default_rng(1234 + d + (0 if kind == "convex" else 7))
    S1 = rng.normal(size=(n, n))
    S1 = 0.15 * (S1 + S1.T)
    S2 = rng.normal(size=(n, n))
    S2 = 0.1 * (S2 + S2.T)
    if kind == "convex":
        G0 = np.eye(n) + 0.2 * np.ones((n, n)) / n
    else:
        signs = np.ones(n)
        signs[-1] = -1.0
        G0 = np.diag(signs) + 0.2 * (np.eye(n, k=1) + np.eye(n, k=-1))
    a = rng.normal(size=n)

    def G(q):
        return G0 + np.sin(q[0]) * S1 + q[-1] * S2

    def dG(q):
        out = np.zeros((n, n, n))
        out[:, :, 0] += np.cos(q[0]) * S1
        out[:, :, -1] += S2
        return out

    def d2G(q):
        out = np.zeros((n, n, n, n))
        out[:, :, 0, 0] = -np.sin(q[0]) * S1
        return out

    def V(q):
        return 0.3 * np.sum(q[1:] ** 2) + 0.1 * np.sin(a @ q)

    def dV(q):
        g = 0.1 * np.cos(a @ q) * a
        g[1:] += 0.6 * q[1:]
        return g

    def d2V(q):
        h = -0.1 * np.sin(a @ q) * np.outer(a, a)
        h[1:, 1:] += 0.6 * np.eye(d)
        return h

    return FiberwiseQuadratic(G, V, dG=dG, d2G=d2G, dV=dV, d2V=d2V, n=n)


def pendulum_natural():
    """``1/2 |p|^2 - cos q1 + 1/2 (1 + 0.3 cos q1) q2^2``."""

    def V(q):
        return -np.cos(q[0]) + 0.5 * (1 + 0.3 * np.cos(q[0])) * q[1] ** 2

    def dV(q):
        return np.array([np.sin(q[0]) - 0.15 * np.sin(q[0]) * q[1] ** 2, (1 + 0.3 * np.cos(q[0])) * q[1]])

    def d2V(q):
        return np.array(
            [
                [np.cos(q[0]) - 0.15 * np.cos(q[0]) * q[1] ** 2, -0.3 * np.sin(q[0]) * q[1]],
                [-0.3 * np.sin(q[0]) * q[1], 1 + 0.3 * np.cos(q[0])],
            ]
        )

    return Natural(np.eye(2), V, dV=dV, d2V=d2V, periods=(TWO_PI, None))


def random_fiberwise_quadratic(rng, n, indefinite=True, q_dependent=True, potential=False):
    """Random ``1/2 p^T G(q) p (+ V)`` with ``G`` invertible; returns the model."""
    while True:
        A = rng.normal(size=(n, n))
        G0 = 0.5 * (A + A.T)
        if indefinite:
            w, U = np.linalg.eigh(G0)
            w = np.where(np.abs(w) < 0.3, np.sign(w + 1e-300) * 0.3, w)
            if np.all(w > 0) or np.all(w < 0):
                w[0] = -w[0]
            G0 = U @ np.diag(w) @ U.T
        else:
            G0 = A @ A.T + n * np.eye(n)
        if abs(np.linalg.det(G0)) > 1e-2:
            break
    S = rng.normal(size=(n, n))
    S = 0.05 * (S + S.T) if q_dependent else np.zeros((n, n))
    c = rng.normal(size=n)

    def G(q):
        return G0 + np.sin(c @ q) * S

    def dG(q):
        return np.cos(c @ q) * S[:, :, None] * c[None, None, :]

    def d2G(q):
        return -np.sin(c @ q) * S[:, :, None, None] * np.outer(c, c)[None, None, :, :]

    if potential:
        b = rng.normal(size=n)
        V = lambda q: 0.5 * np.sin(b @ q) + 0.2 * q @ q
        dV = lambda q: 0.5 * np.cos(b @ q) * b + 0.4 * q
        d2V = lambda q: -0.5 * np.sin(b @ q) * np.outer(b, b) + 0.4 * np.eye(n)
        return FiberwiseQuadratic(G, V, dG=dG, d2G=d2G, dV=dV, d2V=d2V, n=n)
    return FiberwiseQuadratic(G, 0.0, dG=dG, d2G=d2G, dV=lambda q: np.zeros(n), d2V=lambda q: np.zeros((n, n)), n=n)


def zoo():
    """Named models with a reference orbit start point and period (when known)."""
    A = 0.8
    return {
        "harmonic": ZooEntry("harmonic", harmonic(), np.array([0.0, 0, 1, 0]), TWO_PI),
        "harmonic_detuned": ZooEntry("harmonic_detuned", harmonic(1.3), np.array([0.0, 0, 1, 0]), TWO_PI),
        "nonconvex_d1": ZooEntry("nonconvex_d1", nonconvex_d1(), np.array([0.0, 0, 1, 0]), TWO_PI),
        "nonconvex_d2": ZooEntry("nonconvex_d2", nonconvex_d2(), np.array([0.0, 0, 0, 1, 0, 0]), TWO_PI),
        "null_torus": ZooEntry("null_torus", null_torus(), np.array([0.0, 0, 1, 1]), TWO_PI),
        "momentum_linear": ZooEntry("momentum_linear", momentum_linear(1), np.array([0.0, 0, 1, 0]), TWO_PI),
        "libration": ZooEntry("libration", libration_model(), np.array([A, 0, 0, 0]), libration_period(A)),
        "pendulum": ZooEntry("pendulum", pendulum_natural(), np.array([0.0, 0, 2.5, 0]), None),
        "convex_curved": ZooEntry("convex_curved", curved_quadratic("convex", 1), np.array([0.1, -0.2, 0.8, 0.3]), None),
        "nonconvex_curved": ZooEntry(
            "nonconvex_curved", curved_quadratic("nonconvex", 1), np.array([0.1, -0.2, 0.9, 0.3]), None
        ),
        "nonconvex_curved_d2": ZooEntry(
            "nonconvex_curved_d2", curved_quadratic("nonconvex", 2), np.array([0.1, -0.2, 0.1, 0.9, 0.3, 0.2]), None
        ),
    }


def get_model(name, **params):
    builders = {
        "harmonic": harmonic,
        "nonconvex_d1": nonconvex_d1,
        "nonconvex_d2": nonconvex_d2,
        "null_torus": null_torus,
        "momentum_linear": momentum_linear,
        "libration": libration_model,
        "pendulum": pendulum_natural,
        "curved_quadratic": curved_quadratic,
    }
    if name not in builders:
        raise KeyError(f"unknown model {name!r}; known: {sorted(builders)}")
    return builders[name](**params)
