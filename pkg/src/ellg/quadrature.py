"""Gauss rules on the unit interval and on triangles."""

import numpy as np


def gauss01(n):
    """n-point Gauss-Legendre rule on [0,1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_rule(order, grade=None):
    """Collapsed tensor Gauss rule on the reference triangle.

    Returns (uv, w) with uv of shape (order**2, 2).  A point (u, v) maps to
    v0 + u*(v1-v0) + u*v*(v2-v1); the physical weight is w * 2*area, so that
    sum(w) == 0.5 and the rule integrates degree <= order-2 exactly (the
    collapse contributes one extra power of u).

    grade='v0' substitutes u = tau^2 (extra clustering at the collapse
    vertex); grade='edge12' substitutes u = 1 - (1-tau)^3 (clustering toward
    the edge v1-v2).  Both regularize integrands whose derivatives blow up
    logarithmically at the corresponding set.
    """
    x, wx = gauss01(order)
    if grade == 'v0':
        wx = wx * 2.0 * x
        x = x * x
    elif grade == 'edge12':
        wx = wx * 3.0 * (1.0 - x) ** 2
        x = 1.0 - (1.0 - x) ** 3
    elif grade is not None:
        raise ValueError(f"unknown grading {grade!r}")
    u = np.repeat(x, order)
    v = np.tile(gauss01(order)[0], order)
    w = np.repeat(wx, order) * np.tile(gauss01(order)[1], order) * u
    return np.column_stack([u, v]), w


def map_triangle_rule(tris, order, grade=None):
    """Map the collapsed rule onto a batch of triangles.

    tris: (m, 3, 3) vertex coordinates.  Returns points (m, q, 3) and
    weights (m, q) that include the area factor.
    """
    uv, w = triangle_rule(order, grade=grade)
    u = uv[:, 0]
    uvw = uv[:, 0] * uv[:, 1]
    v0 = tris[:, 0, :]
    e1 = tris[:, 1, :] - tris[:, 0, :]
    e2 = tris[:, 2, :] - tris[:, 1, :]
    pts = (v0[:, None, :]
           + u[None, :, None] * e1[:, None, :]
           + uvw[None, :, None] * e2[:, None, :])
    n = np.cross(e1, tris[:, 2, :] - tris[:, 0, :])
    area2 = np.linalg.norm(n, axis=1)
    wts = w[None, :] * area2[:, None]
    return pts, wts
