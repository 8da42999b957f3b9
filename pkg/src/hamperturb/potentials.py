"""Potentials with prescribed jets along a straightened segment.

All constructors work in chart base coordinates, where the projected
segment is ``t -> t e_0``.  :func:`transport_potential` hands the result back
to the original coordinates through the base map of a fibered chart.
"""

import numpy as np

from .bumps import dirac_bump, dirac_cumulative, plateau
from .exceptions import TransportError
from .geometry import PotentialField, Support
from .orbits import _in_window, self_distance


def _cutoff_jet(qhat, r):
    """``chi(|qhat|/r)`` with gradient and Hessian in ``qhat``."""
    m = qhat.size
    rho = float(np.linalg.norm(qhat))
    chi, c1, c2 = plateau(rho / r, 2)
    grad = np.zeros(m)
    hess = np.zeros((m, m))
    if c1 != 0.0 or c2 != 0.0:
        nh = qhat / rho
        grad = c1 * nh / r
        P = np.outer(nh, nh)
        hess = c2 * P / r**2 + c1 * (np.eye(m) - P) / (r * rho)
    return chi, grad, hess


def _times_cutoff(P, dP, d2P, qhat, r):
    """Jets of ``P(q) chi(|qhat|/r)`` from the jets of ``P``."""
    n = dP.size
    chi, g, h = _cutoff_jet(qhat, r)
    dc = np.zeros(n)
    dc[1:] = g
    d2c = np.zeros((n, n))
    d2c[1:, 1:] = h
    u = P * chi
    du = chi * dP + P * dc
    d2u = chi * d2P + np.outer(dP, dc) + np.outer(dc, dP) + P * d2c
    return u, du, d2u


def _axis_support(a, b, r, n):
    """Balls of radius ``r + h`` around axis points spaced ``2h`` apart covering ``[a, b]``."""
    h = r / 4
    m = max(2, int(np.ceil((b - a) / (2 * h))) + 1)
    centers = np.zeros((m, n))
    centers[:, 0] = np.linspace(a, b, m)
    return Support(centers, r + (b - a) / (2 * (m - 1)))


class _ChartPotential(PotentialField):
    """Base class: subclasses supply ``_profile(q) -> (P, dP, d2P)``."""

    def __init__(self, n, r):
        if not r > 0:
            raise ValueError("tube radius must be positive")
        self.n = int(n)
        self.r = float(r)

    def jets(self, q):
        q = np.asarray(q, dtype=float)
        if np.linalg.norm(q[1:]) >= self.r:
            return 0.0, np.zeros(self.n), np.zeros((self.n, self.n))
        P, dP, d2P = self._profile(q)
        return _times_cutoff(P, dP, d2P, q[1:], self.r)

    def tube_distance(self, q):
        """Distance to the tube ``[a, b] x {|qhat| <= r}`` (negative inside)."""
        q = np.asarray(q, dtype=float)
        a, b = self.interval
        dx = max(a - q[0], q[0] - b, 0.0)
        rho = float(np.linalg.norm(q[1:]))
        dr = max(rho - self.r, 0.0)
        if dx == 0.0 and dr == 0.0:
            return -min(q[0] - a, b - q[0], self.r - rho)
        return float(np.hypot(dx, dr))

    def value(self, q):
        return float(self.jets(q)[0])

    def gradient(self, q):
        return self.jets(q)[1]

    def hessian(self, q):
        return self.jets(q)[2]


class AdmissiblePotential(_ChartPotential):
    """``u(q) = 1/2 qhat^T B(q_0) qhat chi(|qhat|/r)``.

    Value and differential vanish on the axis ``qhat = 0`` and the transverse
    Hessian there equals ``B(q_0)``.
    """

    def __init__(self, B, r, n=None):
        d = B.d if hasattr(B, "d") else np.asarray(B(0.0)).shape[0]
        super().__init__(n or d + 1, r)
        self.B = B
        a, b = B.support() if hasattr(B, "support") else (-np.inf, np.inf)
        self.interval = (a, b)
        self.support = _axis_support(a, b, self.r, self.n) if np.isfinite(a) and np.isfinite(b) else None

    def _profile(self, q):
        s, y = q[0], q[1:]
        B0, B1, B2 = self.B.jet(s, 2)
        By = B0 @ y
        P = 0.5 * y @ By
        dP = np.concatenate([[0.5 * y @ B1 @ y], By])
        d2P = np.zeros((self.n, self.n))
        d2P[0, 0] = 0.5 * y @ B2 @ y
        d2P[0, 1:] = d2P[1:, 0] = B1 @ y
        d2P[1:, 1:] = B0
        return P, dP, d2P

    def to_dict(self):
        data = {"kind": "AdmissiblePotential", "r": self.r, "n": self.n}
        if hasattr(self.B, "to_dict"):
            data["B"] = self.B.to_dict()
        return data


def admissible_from_B(B, r):
    """Admissible potential in chart coordinates whose transverse Hessian on the axis is ``B``."""
    return AdmissiblePotential(B, r)


class DiracJetPotential(_ChartPotential):
    """Potential whose differential on the axis is ``e_j`` times a narrow unit-mass bump.

    For ``j >= 1`` this is ``bump(q_0 - sigma) q_j chi``.  For ``j = 0`` the
    profile is the cumulative bump, brought back to zero over ``tail``; the
    axis differential therefore also carries a negative unit mass inside
    ``tail``.  ``sigma`` is the midpoint of the bump.
    """

    def __init__(self, n, j, sigma, width, r, tail=None):
        super().__init__(n, r)
        if not 0 <= j < n:
            raise ValueError(f"direction index {j} out of range for n = {n}")
        self.j, self.sigma, self.width = int(j), float(sigma), float(width)
        self.start = self.sigma - 0.5 * self.width
        if j == 0:
            if tail is None:
                tail = (self.start + 2 * self.width, self.start + 3 * self.width)
            if not tail[0] >= self.start + self.width and tail[1] > tail[0]:
                raise ValueError("tail must start after the bump")
        self.tail = tail
        end = tail[1] if j == 0 else self.start + self.width
        self.interval = (self.start, end)
        self.support = _axis_support(self.start, end, self.r, self.n)

    def _profile(self, q):
        n, j = self.n, self.j
        s = q[0]
        dP = np.zeros(n)
        d2P = np.zeros((n, n))
        b0, b1, b2 = dirac_bump(s - self.start, self.width, 2)
        if j == 0:
            ta, tb = self.tail
            F = dirac_cumulative(s - self.start, self.width)
            c0, c1, c2 = dirac_bump(s - ta, tb - ta, 2)
            T, T1, T2 = 1.0 - dirac_cumulative(s - ta, tb - ta), -c0, -c1
            dP[0] = b0 * T + F * T1
            d2P[0, 0] = b1 * T + 2 * b0 * T1 + F * T2
            return F * T, dP, d2P
        qj = q[j]
        dP[0] = b1 * qj
        dP[j] = b0
        d2P[0, 0] = b2 * qj
        d2P[0, j] = d2P[j, 0] = b1
        return b0 * qj, dP, d2P

    def to_dict(self):
        return {
            "kind": "DiracJetPotential",
            "n": self.n,
            "j": self.j,
            "sigma": self.sigma,
            "width": self.width,
            "r": self.r,
            "tail": None if self.tail is None else list(self.tail),
        }


def dirac_jet_potential(j, sigma, width, r, n, tail=None):
    """Potential with ``du(t e_0) = e_j bump(t)``, bump of unit mass centred at ``sigma``.

    ``j`` is 0-based; ``j = 0`` is the direction along the segment.
    """
    return DiracJetPotential(n, j, sigma, width, r, tail)


# ---------------------------------------------------------------------------
# transport to original coordinates


class TransportedPotential(PotentialField):
    """``u o psi`` with ``psi`` the inverse of the chart base map, zero away from the tube."""

    def __init__(self, u, chart, wrap_base=None, anchor=None, n_skeleton=None):
        self.u, self.chart = u, chart
        self.n = chart.n
        self._wrap = wrap_base
        a, b = u.interval
        lim = getattr(chart, "delta", np.inf) * 1.25
        rad = getattr(chart, "radius", np.inf)
        if not (-lim <= a and b <= lim and u.r <= rad):
            raise TransportError(
                f"support [{a:.4g}, {b:.4g}] x radius {u.r:.4g} leaves the chart domain "
                f"[{-lim:.4g}, {lim:.4g}] x radius {rad:.4g}"
            )
        m = n_skeleton or max(8, int(np.ceil((b - a) / (u.r / 4))) + 1)
        ts = np.linspace(a, b, m)
        axis = np.zeros((m, self.n))
        axis[:, 0] = ts
        jets = [chart.base_jet(p) for p in axis]
        centers = np.array([f for f, _, _ in jets])
        lip = max(np.linalg.norm(Df[:, 1:], 2) for _, Df, _ in jets)
        gap = np.max(np.linalg.norm(np.diff(centers, axis=0), axis=1)) if m > 1 else 0.0
        self._centers = centers
        self._axis_t = ts
        self.support = Support(centers, 1.5 * lip * u.r + 0.5 * gap)
        self._anchor = centers[m // 2] if anchor is None else np.asarray(anchor, dtype=float)
        self._last = None

    def _lift(self, q):
        q = np.asarray(q, dtype=float)
        if self._wrap is None:
            return q
        return self._anchor + self._wrap(q - self._anchor)

    def _pull(self, q):
        """Chart point and chart-map jets there, or ``None`` outside the tube."""
        ql = self._lift(q)
        last = self._last
        if last is not None and np.array_equal(ql, last[0]):
            return last[1]
        if self.support.distance(ql)[0] > 0:
            self._last = (ql, None)
            return None
        if last is not None and last[1] is not None and np.linalg.norm(ql - last[0]) < self.u.r:
            y0, Df0, _ = last[1]
            y = y0 + np.linalg.solve(Df0, ql - last[0])
        else:
            k = int(np.argmin(np.linalg.norm(self._centers - ql, axis=1)))
            y = np.zeros(self.n)
            y[0] = self._axis_t[k]
        scale = max(1.0, float(np.linalg.norm(ql)))
        for _ in range(30):
            f, Df, D2f = self.chart.base_jet(y)
            r = f - ql
            if np.linalg.norm(r) <= 1e-13 * scale:
                break
            y = y - np.linalg.solve(Df, r)
        else:
            raise TransportError(f"chart inverse did not converge at {ql} (residual {np.linalg.norm(r):.2e})")
        out = (y, Df, D2f)
        self._last = (ql, out)
        return out

    def tube_distance(self, q):
        """Lower estimate of the distance to the support (negative inside)."""
        ql = self._lift(q)
        dist = float(self.support.distance(ql)[0])
        if dist > 0:
            return dist
        y, Df, _ = self._pull(q)
        return self.u.tube_distance(y) * float(np.linalg.svd(Df, compute_uv=False)[-1])

    def value(self, q):
        pulled = self._pull(q)
        if pulled is None:
            return 0.0
        return self.u.value(pulled[0])

    def gradient(self, q):
        pulled = self._pull(q)
        if pulled is None:
            return np.zeros(self.n)
        y, Df, _ = pulled
        return np.linalg.solve(Df.T, self.u.gradient(y))

    def hessian(self, q):
        pulled = self._pull(q)
        if pulled is None:
            return np.zeros((self.n, self.n))
        y, Df, D2f = pulled
        _, g, h = self.u.jets(y)
        Dpsi = np.linalg.inv(Df)
        # second derivative of the inverse map: -Dpsi . D2f[Dpsi ., Dpsi .]
        D2psi = -np.einsum("im,mce,ca,eb->iab", Dpsi, D2f, Dpsi, Dpsi)
        return Dpsi.T @ h @ Dpsi + np.einsum("i,iab->ab", g, D2psi)

    def to_dict(self):
        return {"kind": "TransportedPotential", "chart": self.chart.describe(), "u": self.u.to_dict()}


def transport_potential(u, chart, H=None):
    """Express a chart-coordinate potential in original coordinates.

    With ``H`` given, its periodic base coordinates are lifted next to the
    segment before inversion.
    """
    if not chart.pieces:
        return u
    return TransportedPotential(u, chart, None if H is None else H.wrap_base)


# ---------------------------------------------------------------------------
# support checks


def disjoint_support_check(u, orbit, window, margin=0.0, n_grid=2048):
    """True iff the projected orbit outside ``window`` keeps distance ``> margin`` from the support of ``u``."""
    if u.support is None:
        raise ValueError("potential has no declared support")
    H = orbit.H
    T = orbit.minimal_period
    ts = np.arange(n_grid) * T / n_grid
    outside = np.array([not _in_window(t, window[0], window[1], T) for t in ts])
    if not outside.any():
        return True
    qs = np.asarray(orbit.samples(ts[outside])).T[:, : H.n]
    return bool(min(u.tube_distance(q) for q in qs) > margin)


def default_radius(orbit, window, chart):
    """``min(1/4 self-distance, 1/4 chart radius)``; the self-distance ignores a quarter window of continuation."""
    guard = 0.25 * (window[1] - window[0])
    return min(0.25 * self_distance(orbit, window, guard=guard), 0.25 * chart.radius)


def potential_for_control(B, r):
    """Admissible potential whose contribution to the transition system is the control ``B``.

    The linearized flow of ``H + u`` picks up ``J d^2u``, whose lower-left
    block is ``-d^2_{qhat qhat} u``; the potential therefore carries ``-B``.
    """
    return AdmissiblePotential(B.scaled(-1.0), r)


class ScaledPotential(PotentialField):
    """``c u`` for a constant ``c``."""

    def __init__(self, u, c):
        self.u, self.c = u, float(c)
        self.n = getattr(u, "n", None)
        self.support = u.support

    def value(self, q):
        return self.c * self.u.value(q)

    def gradient(self, q):
        return self.c * self.u.gradient(q)

    def hessian(self, q):
        return self.c * self.u.hessian(q)
