"""Patch builders for the bundled cases.

Both parametric directions run over [0, 1]. Straight directions use Greville abscissae as
control-point coordinates, which keeps the parametrization linear.
"""

import logging

import numpy as np

from mechanics.errors import InvalidDegreeError
from mechanics.spline_basis import KnotVector, PatchMesh, insert_knots, uniform_knots

logger = logging.getLogger(__name__)


def flat_patch(width=1.0, height=1.0, degrees=(2, 2), elements=(1, 1)):
    """Rectangle [0, width] x [0, height] in the plane z = 0."""
    kv_xi = uniform_knots(degrees[0], elements[0])
    kv_eta = uniform_knots(degrees[1], elements[1])
    gx = kv_xi.greville() * width
    gy = kv_eta.greville() * height
    X, Y = np.meshgrid(gx, gy)     # eta rows, xi fastest
    controls = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    return PatchMesh(kv_xi, kv_eta, controls, np.ones(X.size))


def circular_arc(radius, half_angle, n_elements):
    """Exact quadratic NURBS arc in the (y, z) plane, symmetric about the z axis.

    Returns the refined knot vector, (n, 2) control points and weights.
    """
    kv = KnotVector(np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 2)
    c, s = np.cos(half_angle), np.sin(half_angle)
    points = np.array([[-radius * s, radius * c], [0.0, radius / c], [radius * s, radius * c]])
    weights = np.array([1.0, c, 1.0])
    interior = np.linspace(0.0, 1.0, n_elements + 1)[1:-1]
    kv, D = insert_knots(kv, interior)
    homogeneous = D @ np.column_stack([points * weights[:, None], weights])
    w = homogeneous[:, 2]
    return kv, homogeneous[:, :2] / w[:, None], w


def scordelis_lo(radius=25.0, length=50.0, half_angle_deg=40.0, degrees=(2, 2), elements=(8, 8)):
    """Cylindrical roof: xi along the axis x in [0, length], eta along the arc."""
    if degrees[1] != 2:
        raise InvalidDegreeError("the exact arc is quadratic; use degree 2 along eta")
    kv_xi = uniform_knots(degrees[0], elements[0])
    kv_eta, arc, arc_w = circular_arc(radius, np.radians(half_angle_deg), elements[1])
    gx = kv_xi.greville() * length
    n_xi = gx.size
    controls = np.array([[x, y, z] for (y, z) in arc for x in gx])
    weights = np.repeat(arc_w, n_xi)
    logger.debug("Scordelis-Lo patch with %d x %d elements", *elements)
    return PatchMesh(kv_xi, kv_eta, controls, weights)


def build_mesh(geometry):
    """PatchMesh for a validated geometry spec."""
    if geometry.type == "flat":
        return flat_patch(geometry.width, geometry.height, geometry.degrees, geometry.elements)
    if geometry.type == "scordelis_lo":
        return scordelis_lo(
            geometry.radius, geometry.length, geometry.half_angle_deg, geometry.degrees,
            geometry.elements,
        )
    raise ValueError(f"unknown geometry type {geometry.type!r}")
