# KSymplectic project.
#
# Rectangles spanned by a vertical and a horizontal curve. For every s the
# velocity alpha'(0) is parallel transported along beta to beta(s) and the
# geodesic with that velocity gives the vertical slice sigma(., s).
#
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from ksymplectic.common.errors import (DimensionMismatch, NotGeodesic, NotHorizontal,
                                       NotVertical)
from ksymplectic.geometry.chart import frame_data, solve_in_frame
from ksymplectic.geometry.connection import (Curve, coeffs_from_frame_data, geodesic, rk4,
                                             transport_components)

logger = logging.getLogger(__name__)

EDGE_TOLERANCE = 1e-6
JOIN_TOLERANCE = 1e-8
SUBSTEPS = 20


@dataclass
class Rectangle:
    t_grid: np.ndarray
    s_grid: np.ndarray
    # points[i, j] = sigma(t_i, s_j)
    points: np.ndarray
    alpha: Curve
    beta: Curve
    # transported alpha'(0) at beta(s_j), coordinate basis
    transported: np.ndarray
    tangency_residual: float = 0.0

    def as_dict(self):
        return {
            "t": self.t_grid.tolist(),
            "s": self.s_grid.tolist(),
            "points": self.points.tolist(),
            "transported": self.transported.tolist(),
        }


def horizontal_integral_curve(spec, p0, direction, T, steps):
    """Integral curve of sum_i c_i X_i from p0 for time T (RK4)."""
    p0 = np.asarray(p0, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if p0.shape != (spec.dim,) or direction.shape != (spec.n,):
        raise DimensionMismatch(f"need a point of length {spec.dim} and {spec.n} coefficients")
    if not np.any(direction):
        raise NotHorizontal("direction must be nonzero")
    n = spec.n

    def rhs(s, p):
        return frame_data(spec, p, second=False).F[:, :n] @ direction

    times, points, velocities = [], [], []

    def record(s, p):
        times.append(s)
        points.append(p.copy())
        velocities.append(rhs(s, p))

    rk4(rhs, p0, 0.0, float(T), steps, observer=record)
    return Curve(np.array(times), np.array(points), np.array(velocities))


def vertical_line(spec, p0, direction, T, samples=2):
    """Straight vertical curve p0 + s (0, direction) (always a geodesic)."""
    p0 = np.asarray(p0, dtype=float)
    velocity = np.zeros(spec.dim)
    velocity[spec.n:] = direction
    return Curve.line(p0, p0 + T * velocity, samples, duration=T)


def split_curve(curve, knots, samples=32):
    """Pieces of curve between consecutive knots, each reparametrized to start at 0."""
    knots = [float(k) for k in knots]
    if knots[0] != curve.t0 or knots[-1] != curve.t1 or np.any(np.diff(knots) <= 0):
        raise ValueError("knots must increase from the curve start to its end")
    pieces = []
    for start, end in zip(knots[:-1], knots[1:]):
        times = np.linspace(start, end, samples)
        pieces.append(Curve(times - start, curve.point(times), curve.velocity(times)))
    return pieces


#####################################################################
# Edge checks
#
def _frame_velocity(spec, curve, times):
    """Frame components of the curve velocity at the given times."""
    result = []
    for s in times:
        data = frame_data(spec, curve.point(s), second=False)
        result.append(solve_in_frame(data.F, curve.velocity(s)))
    return np.array(result)


def vertical_residual(spec, curve):
    """Largest x-component of the velocity over the curve samples."""
    return float(np.max(np.abs(curve.velocities[:, :spec.n])))


def horizontal_residual(spec, curve):
    """Largest Y frame component of the velocity over the curve samples."""
    return float(np.max(np.abs(_frame_velocity(spec, curve, curve.times)[:, spec.n:])))


def geodesic_residual(spec, curve):
    """Largest frame component of nabla_{c'} c' over the curve samples."""
    worst = 0.0
    for s in curve.times:
        data = frame_data(spec, curve.point(s), second=False)
        velocity = curve.velocity(s)
        w = solve_in_frame(data.F, velocity)
        acceleration = curve.spline(s, 2)
        # d/ds (F^-1 c') = F^-1 (c'' - (dF . c') F^-1 c')
        dw = solve_in_frame(data.F, acceleration - np.einsum("mal,l->ma", data.dF, velocity) @ w)
        gamma = coeffs_from_frame_data(spec, data).gamma
        worst = max(worst, float(np.max(np.abs(dw + np.einsum("cab,a,b->c", gamma, w, w)))))
    return worst


#####################################################################
# Construction
#
def build_rectangle(spec, alpha_curve, beta_curve, grid, substeps=SUBSTEPS):
    """
    Rectangle on [0, a] x [0, b] from a vertical geodesic alpha and a horizontal
    curve beta with a common origin; grid = (N_t, N_s) cells.
    """
    n_t, n_s = grid
    if np.max(np.abs(alpha_curve.start - beta_curve.start)) > JOIN_TOLERANCE:
        raise DimensionMismatch("alpha(0) and beta(0) differ")
    residual = vertical_residual(spec, alpha_curve)
    if residual > EDGE_TOLERANCE:
        raise NotVertical(f"alpha has x-velocity {residual:.3e}")
    residual = geodesic_residual(spec, alpha_curve)
    if residual > EDGE_TOLERANCE:
        raise NotGeodesic(f"alpha has geodesic residual {residual:.3e}")
    residual = horizontal_residual(spec, beta_curve)
    if residual > EDGE_TOLERANCE:
        raise NotHorizontal(f"beta has vertical frame velocity {residual:.3e}")

    t_grid = np.linspace(alpha_curve.t0, alpha_curve.t1, n_t + 1)
    s_grid = np.linspace(beta_curve.t0, beta_curve.t1, n_s + 1)
    duration = alpha_curve.t1 - alpha_curve.t0

    # transport alpha'(0) along beta, node to node
    start = frame_data(spec, beta_curve.start, second=False)
    components = solve_in_frame(start.F, alpha_curve.velocity(alpha_curve.t0))
    transported = []
    points = np.zeros((n_t + 1, n_s + 1, spec.dim))
    tangency = 0.0
    for j, s in enumerate(s_grid):
        if j > 0:
            components = transport_components(spec, beta_curve, components, substeps,
                                              t0=s_grid[j - 1], t1=s)
        base = beta_curve.point(s)
        velocity = frame_data(spec, base, second=False).F @ components
        tangency = max(tangency, float(np.max(np.abs(velocity[:spec.n]))))
        transported.append(velocity)
        slice_curve = geodesic(spec, base, velocity, duration, n_t * substeps)
        points[:, j, :] = slice_curve.points[::substeps]

    if tangency > EDGE_TOLERANCE:
        raise NotVertical(f"transported velocity left F (x-component {tangency:.3e})")
    logger.debug("rectangle %dx%d built, tangency residual %.3e", n_t, n_s, tangency)
    return Rectangle(t_grid, s_grid, points, alpha_curve, beta_curve,
                     np.array(transported), tangency)


def _top_edge(spec, rect):
    """The last horizontal slice of a rectangle as a curve (x-velocity from beta)."""
    n = spec.n
    points = rect.points[-1]
    velocities = []
    for point, s in zip(points, rect.s_grid):
        x_velocity = rect.beta.velocity(s)[:n]
        velocities.append(frame_data(spec, point, second=False).F[:, :n] @ x_velocity)
    return Curve(rect.s_grid.copy(), points, np.array(velocities))


def build_rectangle_chain(spec, alpha_curve, beta_curve, knots=None, grid=(10, 10),
                          substeps=SUBSTEPS):
    """
    Rectangles stacked along a piecewise geodesic vertical curve. alpha_curve is a
    Curve split at the given knots, or a list of geodesic pieces. Each piece uses
    the top edge of the previous rectangle as its horizontal curve.
    """
    if knots is not None:
        pieces = split_curve(alpha_curve, knots)
    else:
        pieces = list(alpha_curve)
    rectangles: List[Rectangle] = []
    beta = beta_curve
    for piece in pieces:
        rect = build_rectangle(spec, piece, beta, grid, substeps)
        rectangles.append(rect)
        beta = _top_edge(spec, rect)
    return rectangles


#####################################################################
# Verification
#
def verify_rectangle(rect, spec, detail=False):
    """
    Max over grid edges of: x-components of the finite-difference tangents of
    the vertical slices, Y frame components of the horizontal slice tangents, and
    mismatches of the initial edges against alpha and beta. With detail=True the
    three parts come back separately as a dict.
    """
    n = spec.n
    points = rect.points

    dt = np.diff(rect.t_grid)
    vertical = np.diff(points, axis=0) / dt[:, None, None]
    vertical_worst = float(np.max(np.abs(vertical[:, :, :n])))

    horizontal_worst = 0.0
    ds = np.diff(rect.s_grid)
    for i in range(points.shape[0]):
        for j in range(points.shape[1] - 1):
            tangent = (points[i, j + 1] - points[i, j]) / ds[j]
            midpoint = (points[i, j + 1] + points[i, j]) / 2
            w = solve_in_frame(frame_data(spec, midpoint, second=False).F, tangent)
            horizontal_worst = max(horizontal_worst, float(np.max(np.abs(w[n:]))))

    alpha_nodes = rect.alpha.point(rect.t_grid)
    beta_nodes = rect.beta.point(rect.s_grid)
    edges = max(float(np.max(np.abs(points[:, 0, :] - alpha_nodes))),
                float(np.max(np.abs(points[0, :, :] - beta_nodes))))
    if detail:
        return {"vertical": vertical_worst, "horizontal": horizontal_worst, "edges": edges}
    return max(vertical_worst, horizontal_worst, edges)


def horizontal_flow_residual(rect, spec, substeps=SUBSTEPS):
    """
    Largest node mismatch between sigma(t_i, s_j+1) and the horizontal lift of
    beta's x-velocity integrated from sigma(t_i, s_j), over every grid cell.
    """
    n = spec.n

    def rhs(s, p):
        return frame_data(spec, p, second=False).F[:, :n] @ rect.beta.velocity(s)[:n]

    worst = 0.0
    points, s_grid = rect.points, rect.s_grid
    for i in range(points.shape[0]):
        for j in range(len(s_grid) - 1):
            end = rk4(rhs, points[i, j], s_grid[j], s_grid[j + 1], substeps)
            worst = max(worst, float(np.max(np.abs(end - points[i, j + 1]))))
    return worst


def verify_rectangle_chain(rectangles, spec):
    return max(verify_rectangle(rect, spec) for rect in rectangles)
