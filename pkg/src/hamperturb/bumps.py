"""Compactly supported polynomial profiles with closed-form derivatives."""

import numpy as np


def dirac_bump(t, width, order=2):
    """Unit-mass bump ``140/w (s(1-s))^3``, ``s = t/w``, supported in ``(0, w)``.

    Returns the value and derivatives up to ``order`` (at most 3).
    """
    w = float(width)
    s = t / w
    if not 0.0 < s < 1.0:
        return [0.0] * (order + 1)
    # f(s) = 140 (s - s^2)^3 expanded: 140 (s^3 - 3 s^4 + 3 s^5 - s^6)
    c = 140.0 * np.array([0, 0, 0, 1, -3, 3, -1], dtype=float)
    out = []
    poly = np.polynomial.Polynomial(c)
    for nu in range(order + 1):
        out.append(float(poly.deriv(nu)(s)) / w ** (nu + 1) if nu else float(poly(s)) / w)
    return out


def dirac_cumulative(t, width):
    """``int_{-inf}^t`` of :func:`dirac_bump`."""
    w = float(width)
    s = t / w
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    c = 140.0 * np.array([0, 0, 0, 1, -3, 3, -1], dtype=float)
    return float(np.polynomial.Polynomial(c).integ()(s))


def poly_bump(x, order=2):
    """``(1 - x^2)^3`` on ``|x| < 1``; C^2 at the endpoints."""
    if abs(x) >= 1.0:
        return [0.0] * (order + 1)
    u = 1.0 - x * x
    vals = [u**3, -6 * x * u**2, -6 * u**2 + 24 * x * x * u, 72 * x * u - 48 * x**3]
    return vals[: order + 1]


_SMOOTHSTEP = np.polynomial.Polynomial([0, 0, 0, 0, 35, -84, 70, -20])


def plateau(r, order=2):
    """C^3 cutoff: 1 on ``[0, 1/2]``, 0 on ``[1, inf)``, as a function of ``r >= 0``."""
    if r <= 0.5:
        return [1.0] + [0.0] * order
    if r >= 1.0:
        return [0.0] * (order + 1)
    u = 2.0 * r - 1.0
    out = [1.0 - float(_SMOOTHSTEP(u))]
    for nu in range(1, order + 1):
        out.append(-float(_SMOOTHSTEP.deriv(nu)(u)) * 2.0**nu)
    return out
