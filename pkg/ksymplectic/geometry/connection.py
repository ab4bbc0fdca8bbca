# KSymplectic project.
#
# The canonical connection: closed-form coefficients from the t jets, an
# independent reconstruction from the defining relations, torsion, curvature,
# parallel transport and geodesics.
#
# Index conventions (all in the adapted frame, 0-based frame indices):
#
#   gamma[c, a, b]   nabla_{e_a} e_b = sum_c gamma[c, a, b] e_c
#   torsion[c, a, b] T(e_a, e_b) = sum_c torsion[c, a, b] e_c
#   R[f, a, b, c]    R(e_a, e_b) e_c = sum_f R[f, a, b, c] e_f
#
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ksymplectic.common.errors import (CompatibilityError, DimensionMismatch, IncompleteLeaf,
                                       SingularSystem)
from ksymplectic.geometry.chart import frame_data, solve_in_frame
from ksymplectic.geometry.structures import forms_of

logger = logging.getLogger(__name__)

COMPATIBILITY_TOLERANCE = 1e-9
SINGULAR_TOLERANCE = 1e-12
BLOWUP = 1e6


@dataclass
class ConnCoeffs:
    point: np.ndarray
    gamma: np.ndarray
    # coordinate derivatives dgamma[c, a, b, l] = d_l gamma[c, a, b]
    dgamma: Optional[np.ndarray] = None


#####################################################################
# Closed form
#
def _y_derivatives(n, k, dT):
    """D[i, a, j, b, h] = d t_i^{aj} / d y_{(b-1)n+h} (0-based)."""
    return dT[:, :, :, n:].reshape(n, k, n, k, n)


def _check_alpha_independence(n, k, D, p):
    reference = D[:, 0, :, 0, :]
    for alpha in range(1, k):
        mismatch = np.max(np.abs(D[:, alpha, :, alpha, :] - reference))
        if mismatch > COMPATIBILITY_TOLERANCE:
            i, j, h = np.unravel_index(np.argmax(np.abs(D[:, alpha, :, alpha, :] - reference)),
                                       reference.shape)
            raise CompatibilityError(
                f"d t[{i + 1}][{alpha + 1}][{j + 1}] / d y{alpha * n + h + 1} differs from "
                f"d t[{i + 1}][1][{j + 1}] / d y{h + 1} by {mismatch:.3e} at {list(p)}")


def _fill_gamma(n, k, D):
    """Coefficient table from D; extra trailing axes (derivatives) are carried along."""
    dim = n * (k + 1)
    extra = D.shape[5:]
    gamma = np.zeros((dim, dim, dim) + extra)
    # gamma[Y(b,h), X_i, Y(a,j)] = d t_i^{bh} / d y_{aj}
    axes = (1, 2, 0, 3, 4) + tuple(range(5, 5 + len(extra)))
    gamma[n:, :n, n:] = D.transpose(axes).reshape((k * n, n, k * n) + extra)
    # gamma[X_h, X_i, X_j] = -d t_i^{1j} / d y_{1h}
    axes = (2, 0, 1) + tuple(range(3, 3 + len(extra)))
    gamma[:n, :n, :n] = -D[:, 0, :, 0, :].transpose(axes)
    return gamma


def coeffs_from_frame_data(spec, data, check=True):
    n, k = spec.n, spec.k
    D = _y_derivatives(n, k, data.dT)
    if check:
        _check_alpha_independence(n, k, D, data.point)
    gamma = _fill_gamma(n, k, D)
    dgamma = None
    if data.d2T is not None:
        D2 = data.d2T[:, :, :, n:, :].reshape(n, k, n, k, n, spec.dim)
        dgamma = _fill_gamma(n, k, D2)
    return ConnCoeffs(data.point, gamma, dgamma)


def connection_coeffs_at(spec, p, check=True, second=False):
    """
    Coefficients of the canonical connection at p from the t jets:

        nabla_{X_i} Y_{aj} = sum d t_i^{bh} / d y_{(a-1)n+j} Y_{bh}
        nabla_{X_i} X_j    = -sum d t_i^{1j} / d y_h X_h
        nabla_Y (anything) = 0

    With check=True the own-block slopes are asserted alpha independent first.
    """
    return coeffs_from_frame_data(spec, frame_data(spec, p, second=second), check)


#####################################################################
# Defining relations
#
def frame_form_jets(data, W, dW):
    """
    Frame Gram matrix Wf[b, c] = omega(e_b, e_c) and its frame derivatives
    eWf[a, b, c] = e_a(omega(e_b, e_c)).
    """
    F, dF = data.F, data.dF
    Wf = F.T @ W @ F
    dWf = (np.einsum("mbl,mn,nc->bcl", dF, W, F)
           + np.einsum("mb,mnl,nc->bcl", F, dW, F)
           + np.einsum("mb,mn,ncl->bcl", F, W, dF))
    eWf = np.einsum("bcl,la->abc", dWf, F)
    return Wf, eWf


def _solve_pairing(P, rhs, what):
    s = np.linalg.svd(P, compute_uv=False)
    if s.size == 0 or s[-1] <= SINGULAR_TOLERANCE * max(1.0, s[0]):
        raise SingularSystem(f"pairing matrix {what} is singular (smallest singular value "
                             f"{s[-1] if s.size else 0.0:.3e})")
    return np.linalg.solve(P, rhs)


def coeffs_from_defining_relations(spec, p):
    """
    Rebuild the connection from its defining relations: bracket projections for
    the mixed terms and, for each alpha, the linear systems given by
    nabla omega_alpha = 0 against the adapted frame. The Q-valued solutions must
    agree across alpha.
    """
    data = frame_data(spec, p, second=False)
    n, k, dim = spec.n, spec.k, spec.dim
    chart = spec.chart
    C = data.C
    forms = [frame_form_jets(data, *omega.jets_at(data.point)) for omega in forms_of(spec)]
    gamma = np.zeros((dim, dim, dim))
    X = chart.x_block()

    for a in range(n, dim):
        # nabla_Y X = [Y, X]_Q
        for b in X:
            gamma[:n, a, b] = C[:n, a, b]

    for alpha in range(1, k + 1):
        Wf, eWf = forms[alpha - 1]
        L = chart.y_block(alpha)
        # omega_alpha(Y_{alpha h}, X_m) and omega_alpha(X_h, Y_{alpha m})
        P_yx = Wf[np.ix_(L, X)].T
        P_xy = Wf[np.ix_(X, L)].T

        for i in X:
            # nabla_X Y = [X, Y]_{L_alpha}
            for j in L:
                gamma[L, i, j] = C[L, i, j]

        for a in range(n, dim):
            for j in L:
                rhs = eWf[a, j, X] - C[:, a, X].T @ Wf[j, :]
                gamma[L, a, j] = _solve_pairing(P_yx, rhs, f"omega_{alpha}(L_{alpha}, Q)")

        for i in X:
            for j in X:
                rhs = eWf[i, j, L] - C[:, i, L].T @ Wf[j, :]
                solution = _solve_pairing(P_xy, rhs, f"omega_{alpha}(Q, L_{alpha})")
                if alpha == 1:
                    gamma[:n, i, j] = solution
                else:
                    mismatch = float(np.max(np.abs(solution - gamma[:n, i, j])))
                    if mismatch > COMPATIBILITY_TOLERANCE:
                        raise CompatibilityError(
                            f"nabla_{chart.frame_label(i)} {chart.frame_label(j)} from omega_{alpha} "
                            f"differs from omega_1 by {mismatch:.3e} at {list(data.point)}")
    return ConnCoeffs(data.point, gamma)


#####################################################################
# Torsion and curvature
#
def torsion_from(gamma, C):
    return gamma - gamma.transpose(0, 2, 1) - C


def torsion_at(spec, p):
    """torsion[c, a, b]: T(e_a, e_b) = nabla_a e_b - nabla_b e_a - [e_a, e_b]."""
    data = frame_data(spec, p, second=False)
    return torsion_from(coeffs_from_frame_data(spec, data).gamma, data.C)


def curvature_from(coeffs, data):
    gamma, dgamma = coeffs.gamma, coeffs.dgamma
    # e_gamma[f, b, c, a] = e_a(gamma[f, b, c])
    e_gamma = np.einsum("fbcl,la->fbca", dgamma, data.F)
    R = e_gamma.transpose(0, 3, 1, 2) - e_gamma.transpose(0, 1, 3, 2)
    R = R + np.einsum("dbc,fad->fabc", gamma, gamma) - np.einsum("dac,fbd->fabc", gamma, gamma)
    R = R - np.einsum("dab,fdc->fabc", data.C, gamma)
    return R


def curvature_at(spec, p):
    """
    R[f, a, b, c] from the bracket definition
    R(e_a, e_b) e_c = nabla_a nabla_b e_c - nabla_b nabla_a e_c - nabla_[e_a, e_b] e_c,
    with the outer derivatives taken from exact second jets of t.
    """
    data = frame_data(spec, p, second=True)
    return curvature_from(coeffs_from_frame_data(spec, data), data)


def curvature_closed_form_at(spec, p):
    """
    Curvature filled directly from second derivatives of t:

        R(Y_{ai}, X_j) Y_{bh} = sum d2 t_j^{gl} / d y_{(a-1)n+i} d y_{(b-1)n+h} Y_{gl}
        R(Y_{ai}, X_j) X_m    = -sum d2 t_j^{am} / d y_{(a-1)n+i} d y_{(a-1)n+l} X_l

    and the antisymmetric (X, Y) entries; everything else vanishes. The second
    line carries the lower index j on t, which is what expanding the bracket
    definition gives.
    """
    data = frame_data(spec, p, second=True)
    n, k, dim = spec.n, spec.k, spec.dim
    d2T = data.d2T
    R = np.zeros((dim, dim, dim, dim))
    for alpha in range(k):
        for i in range(n):
            a = n + alpha * n + i
            for j in range(n):
                # Y-valued part: R[Y(g,l), Y(a,i), X_j, Y(b,h)]
                R[n:, a, j, n:] = d2T[j, :, :, a, n:].reshape(k * n, k * n)
                for m in range(n):
                    for l in range(n):
                        R[l, a, j, m] = -d2T[j, alpha, m, a, n + alpha * n + l]
    R[:, :n, n:, :] = -R[:, n:, :n, :].transpose(0, 2, 1, 3)
    return R


def affine_transversal_residual(spec, p):
    """max |d2 t / dy dy| at p; zero exactly when the t functions are leafwise affine."""
    n = spec.n
    data = frame_data(spec, p, second=True)
    block = data.d2T[:, :, :, n:, n:]
    return float(np.max(np.abs(block))) if block.size else 0.0


def nabla_omega_residual(spec, p):
    """max over alpha, a, b, c of (nabla_{e_a} omega_alpha)(e_b, e_c)."""
    data = frame_data(spec, p, second=False)
    gamma = coeffs_from_frame_data(spec, data).gamma
    worst = 0.0
    for omega in forms_of(spec):
        Wf, eWf = frame_form_jets(data, *omega.jets_at(data.point))
        residual = (eWf - np.einsum("dab,dc->abc", gamma, Wf)
                    - np.einsum("dac,bd->abc", gamma, Wf))
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst


#####################################################################
# Curves and integration
#
@dataclass
class Curve:
    """
    Dense samples of a curve with velocities; evaluated between samples by
    piecewise cubic Hermite interpolation.
    """
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.points.ndim != 2 or self.points.shape != self.velocities.shape or \
                self.points.shape[0] != self.times.shape[0]:
            raise DimensionMismatch("curve times, points and velocities do not line up")
        if self.times.shape[0] < 2 or np.any(np.diff(self.times) <= 0):
            raise ValueError("curve sample times must be strictly increasing")

    @classmethod
    def line(cls, start, end, samples=2, duration=1.0):
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        times = np.linspace(0.0, duration, samples)
        velocity = (end - start) / duration
        points = start + np.outer(times, velocity)
        return cls(times, points, np.tile(velocity, (samples, 1)))

    @cached_property
    def spline(self):
        return CubicHermiteSpline(self.times, self.points, self.velocities, axis=0)

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    @property
    def t0(self):
        return self.times[0]

    @property
    def t1(self):
        return self.times[-1]

    def point(self, s):
        return self.spline(s)

    def velocity(self, s):
        return self.spline(s, 1)


def rk4(f, y0, t0, t1, steps, observer=None):
    """Classical fixed-step Runge-Kutta; observer(t, y) is called at every node."""
    h = (t1 - t0) / steps
    y = np.array(y0, dtype=float)
    t = t0
    if observer:
        observer(t, y)
    for step in range(steps):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (step + 1) * h
        if observer:
            observer(t, y)
    return y


def _check_bounded(p, what):
    if not np.all(np.isfinite(p)) or np.max(np.abs(p)) > BLOWUP:
        raise IncompleteLeaf(f"{what} left every bounded region (|p| > {BLOWUP:g})")


def parallel_transport(spec, curve, v0, steps):
    """
    Solve nabla_{gamma'} V = 0 along the curve with RK4 in adapted-frame
    components; returns V at the curve end in the coordinate basis.
    """
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (spec.dim,):
        raise DimensionMismatch(f"vector must have length {spec.dim}")
    components = solve_in_frame(frame_data(spec, curve.start, second=False).F, v0)
    result = transport_components(spec, curve, components, steps)
    return frame_data(spec, curve.end, second=False).F @ result


def transport_components(spec, curve, components, steps, t0=None, t1=None):
    """Same as parallel_transport but frame components in and out, optionally over [t0, t1]."""
    def rhs(s, v):
        data = frame_data(spec, curve.point(s), second=False)
        w = solve_in_frame(data.F, curve.velocity(s))
        return -np.einsum("cab,a,b->c", coeffs_from_frame_data(spec, data).gamma, w, v)

    t0 = curve.t0 if t0 is None else t0
    t1 = curve.t1 if t1 is None else t1
    return rk4(rhs, np.asarray(components, dtype=float), t0, t1, steps)


def geodesic(spec, p0, v0, T, steps):
    """
    Integrate nabla_{gamma'} gamma' = 0 from (p0, v0) for time T as the first order
    system p' = F(p) w, w' = -gamma(w, w) in frame components w.
    """
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    dim = spec.dim
    if p0.shape != (dim,) or v0.shape != (dim,):
        raise DimensionMismatch(f"point and vector must have length {dim}")
    w0 = solve_in_frame(frame_data(spec, p0, second=False).F, v0)

    def rhs(s, state):
        p, w = state[:dim], state[dim:]
        _check_bounded(p, "geodesic")
        data = frame_data(spec, p, second=False)
        gamma = coeffs_from_frame_data(spec, data).gamma
        return np.concatenate([data.F @ w, -np.einsum("cab,a,b->c", gamma, w, w)])

    times, points, velocities = [], [], []

    def record(s, state):
        p, w = state[:dim], state[dim:]
        _check_bounded(p, "geodesic")
        times.append(s)
        points.append(p.copy())
        velocities.append(frame_data(spec, p, second=False).F @ w)

    rk4(rhs, np.concatenate([p0, w0]), 0.0, float(T), steps, observer=record)
    return Curve(np.array(times), np.array(points), np.array(velocities))
