# KSymplectic project.
#
# Flat normal form. On a flat spec the adapted frame at a base point x0 is
# transported to a parallel frame E_1..E_N; its fields commute and their flows
# give coordinates in which every omega_alpha is the standard Darboux form, Q is
# spanned by the d/dx' and each L_alpha by its d/dy'.
#
# Parallel fields have geodesic integral curves, so a flow is integrated as the
# pair (point, frame components M) with p' = F(p) M[:, l] and M transported
# along, which keeps the whole E-frame available at the end of every flow.
#
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ksymplectic.common.errors import NewtonDivergence, NotFlat, PathDependence
from ksymplectic.geometry.chart import frame_data, solve_in_frame
from ksymplectic.geometry.connection import (Curve, affine_transversal_residual,
                                             coeffs_from_frame_data, curvature_at, rk4,
                                             torsion_at)
from ksymplectic.geometry.structures import forms_of, standard_omega

logger = logging.getLogger(__name__)

FLATNESS_SAMPLES = 50
FLATNESS_TOLERANCE = 1e-9
PATH_TOLERANCE = 1e-7
COMMUTATION_SAMPLES = 8
COMMUTATION_TOLERANCE = 1e-7
NEWTON_ITERATIONS = 50
NEWTON_TOLERANCE = 1e-12
DETERMINANT_BOUND = 1e-8
FD_STEP = 1e-5
FLOW_STEPS = 32
SEGMENT_STEPS = 64


#####################################################################
# Flatness
#
def flatness_residual(spec, region=None, samples=FLATNESS_SAMPLES, seed=0):
    """
    Largest curvature component and largest leafwise second derivative of t over
    seeded sample points of the region.
    """
    lo, hi = region if region is not None else spec.box()
    points = np.random.default_rng(seed).uniform(lo, hi, size=(samples, spec.dim))
    curvature = max(float(np.max(np.abs(curvature_at(spec, p)))) for p in points)
    transversal = max(affine_transversal_residual(spec, p) for p in points)
    return curvature, transversal


def require_flat(spec, region=None):
    curvature, transversal = flatness_residual(spec, region)
    if curvature > FLATNESS_TOLERANCE or transversal > FLATNESS_TOLERANCE:
        raise NotFlat(f"curvature {curvature:.3e}, leafwise d2t {transversal:.3e} "
                      f"(tolerance {FLATNESS_TOLERANCE:g})")


#####################################################################
# Parallel frame
#
def _transport_matrix(spec, curve, M, steps):
    """Transport every column of the frame-component matrix M along the curve."""
    def rhs(s, state):
        data = frame_data(spec, curve.point(s), second=False)
        w = solve_in_frame(data.F, curve.velocity(s))
        gamma = coeffs_from_frame_data(spec, data).gamma
        return -np.einsum("cab,a,bl->cl", gamma, w, state)

    return rk4(rhs, M, curve.t0, curve.t1, steps)


def _polyline(x0, p, n, x_first):
    corner = np.array(x0, dtype=float)
    if x_first:
        corner[:n] = p[:n]
    else:
        corner[n:] = p[n:]
    return [segment for segment in ((x0, corner), (corner, p))
            if np.max(np.abs(segment[1] - segment[0])) > 0.0]


def _transport_along(spec, segments, M, steps):
    for start, end in segments:
        M = _transport_matrix(spec, Curve.line(start, end), M, steps)
    return M


def parallel_components(spec, x0, p, steps=SEGMENT_STEPS):
    """
    Adapted-frame components of the frame at x0 transported to p along the
    x-then-y polyline, checked against the y-then-x polyline.
    """
    x0 = np.asarray(x0, dtype=float)
    p = np.asarray(p, dtype=float)
    identity = np.eye(spec.dim)
    first = _transport_along(spec, _polyline(x0, p, spec.n, True), identity, steps)
    second = _transport_along(spec, _polyline(x0, p, spec.n, False), identity, steps)
    mismatch = float(np.max(np.abs(first - second)))
    if mismatch > PATH_TOLERANCE:
        raise PathDependence(f"transport to {list(p)} depends on the path by {mismatch:.3e}")
    return first


def parallel_frame(spec, x0, p, steps=SEGMENT_STEPS, check_flat=True):
    """
    Columns are the adapted frame at x0 transported to p, in the coordinate basis.
    """
    if check_flat:
        require_flat(spec)
    M = parallel_components(spec, x0, p, steps)
    return frame_data(spec, np.asarray(p, dtype=float), second=False).F @ M


def commutation_residual(spec, x0, points, steps=SEGMENT_STEPS):
    """max |[E_a, E_b]| in E-frame components; the brackets equal -T(E_a, E_b)."""
    worst = 0.0
    for p in points:
        M = parallel_components(spec, x0, p, steps)
        torsion = np.einsum("cab,ai,bj->cij", torsion_at(spec, p), M, M)
        worst = max(worst, float(np.max(np.abs(_in_e_frame(M, torsion)))))
    return worst


def _in_e_frame(M, tensor):
    dim = M.shape[0]
    return np.linalg.solve(M, tensor.reshape(dim, -1)).reshape(tensor.shape)


#####################################################################
# Coordinate map
#
def default_order(spec):
    """Application order of the flows: Y-block first, X-block after."""
    return tuple(range(spec.n, spec.dim)) + tuple(range(spec.n))


@dataclass
class CoordinateMap:
    spec: object
    base: np.ndarray
    # adapted frame at the base point, coordinate basis
    frame: np.ndarray
    region: Tuple[np.ndarray, np.ndarray]
    order: Tuple[int, ...]
    steps: int = FLOW_STEPS
    newton_iterations: int = field(default=0, compare=False)

    def flow(self, p, M, index, time):
        spec = self.spec

        def rhs(s, state):
            q, frame = state[:spec.dim], state[spec.dim:].reshape(spec.dim, spec.dim)
            data = frame_data(spec, q, second=False)
            gamma = coeffs_from_frame_data(spec, data).gamma
            w = frame[:, index]
            return np.concatenate([data.F @ w,
                                   -np.einsum("cab,a,bl->cl", gamma, w, frame).ravel()])

        state = rk4(rhs, np.concatenate([p, M.ravel()]), 0.0, float(time), self.steps)
        return state[:spec.dim], state[spec.dim:].reshape(spec.dim, spec.dim)

    def _compose(self, a):
        a = np.asarray(a, dtype=float)
        p = np.array(self.base, dtype=float)
        M = np.eye(self.spec.dim)
        for index in self.order:
            if a[index] != 0.0:
                p, M = self.flow(p, M, index, a[index])
        return p, M

    def point(self, a):
        """The point reached from the base by the flows with parameters a."""
        return self._compose(a)[0]

    def jacobian(self, a):
        """d point / d a = F(q) M(q): the E-frame at q = point(a)."""
        q, M = self._compose(a)
        return q, frame_data(self.spec, q, second=False).F @ M

    def parameters(self, p, guess=None):
        """New coordinates of p: Newton on point(a) = p."""
        p = np.asarray(p, dtype=float)
        a = np.array(p - self.base if guess is None else guess, dtype=float)
        for iteration in range(NEWTON_ITERATIONS):
            q, J = self.jacobian(a)
            residual = q - p
            if float(np.max(np.abs(residual))) <= NEWTON_TOLERANCE:
                self.newton_iterations = iteration
                return a
            determinant = abs(np.linalg.det(J))
            if not np.isfinite(determinant) or determinant <= DETERMINANT_BOUND:
                raise NewtonDivergence(f"flow Jacobian degenerate near {list(q)} "
                                       f"(|det| = {determinant:.3e})")
            a = a - np.linalg.solve(J, residual)
        raise NewtonDivergence(f"no convergence for {list(p)} after {NEWTON_ITERATIONS} "
                               f"iterations (residual {float(np.max(np.abs(residual))):.3e})")

    __call__ = parameters

    def pairs(self, points):
        return [(np.asarray(p, dtype=float), self.parameters(p)) for p in points]

    def reordered(self, order):
        return CoordinateMap(self.spec, self.base, self.frame, self.region, tuple(order),
                             self.steps)


def normal_form_chart(spec, x0=None, region=None, order: Optional[Sequence[int]] = None,
                      steps=FLOW_STEPS, seed=0):
    """
    Coordinates given by the flow parameters of the commuting parallel frame
    through x0. Requires a flat spec; the commutation of the frame is checked at
    a few seeded points of the region.
    """
    x0 = np.asarray(spec.base_point if x0 is None else x0, dtype=float)
    region = region if region is not None else spec.box()
    require_flat(spec, region)
    lo, hi = region
    probes = np.random.default_rng(seed).uniform(lo, hi, size=(COMMUTATION_SAMPLES, spec.dim))
    residual = commutation_residual(spec, x0, probes)
    if residual > COMMUTATION_TOLERANCE:
        raise NotFlat(f"parallel frame does not commute (bracket {residual:.3e})")
    order = tuple(order) if order is not None else default_order(spec)
    if sorted(order) != list(range(spec.dim)):
        raise ValueError(f"order must be a permutation of 0..{spec.dim - 1}")
    frame = frame_data(spec, x0, second=False).F
    logger.debug("normal form chart at %s, order %s", list(x0), order)
    return CoordinateMap(spec, x0, frame, region, order, steps)


#####################################################################
# Verification
#
def grid_points(region, grid, dim, seed=0):
    """grid x grid tensor points in dimension 2, else grid^2 seeded points."""
    lo, hi = (np.asarray(b, dtype=float) for b in region)
    if dim == 2:
        xs = np.linspace(lo[0], hi[0], grid)
        ys = np.linspace(lo[1], hi[1], grid)
        return np.array([(x, y) for x in xs for y in ys])
    return np.random.default_rng(seed).uniform(lo, hi, size=(grid * grid, dim))


def _inverse_jacobian(cmap, a):
    dim = cmap.spec.dim
    J = np.zeros((dim, dim))
    for l in range(dim):
        step = np.zeros(dim)
        step[l] = FD_STEP
        J[:, l] = (cmap.point(a + step) - cmap.point(a - step)) / (2 * FD_STEP)
    return J


def _block_residual(spec, pushed):
    """Components of pushed-forward adapted frame vectors outside their own block."""
    n = spec.n
    worst = float(np.max(np.abs(pushed[n:, :n]))) if n else 0.0
    for alpha in range(1, spec.k + 1):
        block = spec.chart.y_block(alpha)
        outside = [index for index in range(spec.dim) if index not in block]
        worst = max(worst, float(np.max(np.abs(pushed[np.ix_(outside, block)]))))
    return worst


def verify_normal_form(cmap, spec, grid=20, detail=False):
    """
    Max over grid points of the deviation of the pulled-back omega_alpha from the
    standard Darboux coefficients, of the y'-components of the X_i and of the
    components of each Y_{alpha j} outside the y'_alpha block, all in the new
    coordinates (Jacobian of the inverse map by central differences).
    """
    standards = [standard_omega(spec.chart, alpha).matrix_at(cmap.base)
                 for alpha in range(1, spec.k + 1)]
    forms = forms_of(spec)
    darboux, blocks = 0.0, 0.0
    for p in grid_points(cmap.region, grid, spec.dim):
        a = cmap.parameters(p)
        J = _inverse_jacobian(cmap, a)
        q = cmap.point(a)
        for omega, standard in zip(forms, standards):
            pulled = J.T @ omega.matrix_at(q) @ J
            darboux = max(darboux, float(np.max(np.abs(pulled - standard))))
        pushed = np.linalg.solve(J, frame_data(spec, q, second=False).F)
        blocks = max(blocks, _block_residual(spec, pushed))
    if detail:
        return {"darboux": darboux, "blocks": blocks}
    return max(darboux, blocks)


def order_residual(cmap, points, order=None):
    """Largest parameter change when the flows are composed in another order."""
    other = cmap.reordered(order if order is not None else tuple(reversed(cmap.order)))
    return max(float(np.max(np.abs(cmap.parameters(p) - other.parameters(p)))) for p in points)
