# KSymplectic project.
#
# Compatible almost k-Kaehler tensors. On L_alpha + Q (frame order
# Y_{alpha,1}..Y_{alpha,n}, X_1..X_n) the structure operator A solves
# omega_alpha(u, v) = g(u, A v); J is the orthogonal factor of its polar
# decomposition and ghat(u, v) = omega_alpha(J u, v) the metric it is compatible
# with.
#
import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, eigh, null_space, \
    solve_triangular, subspace_angles

from ksymplectic.common.errors import (IndexOutOfRange, NotSPD, OrthogonalityError,
                                       PropertyViolation, SingularMetric)
from ksymplectic.geometry.chart import frame_data, solve_in_frame
from ksymplectic.geometry.connection import connection_coeffs_at, frame_form_jets
from ksymplectic.geometry.expr import eval_value
from ksymplectic.geometry.structures import forms_of

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOLERANCE = 1e-9
PROPERTY_TOLERANCE = 1e-10
FD_STEP = 1e-5


@dataclass
class StructureOperator:
    alpha: int
    A: np.ndarray
    # metric and form Gram matrices on the block frame
    G: np.ndarray
    W: np.ndarray
    # frame indices of the block frame (L_alpha then Q)
    indices: list


@dataclass
class AlmostComplex:
    alpha: int
    J: np.ndarray
    ghat: np.ndarray
    operator: StructureOperator
    residuals: Dict[str, float] = field(default_factory=dict)


#####################################################################
# Metric in the adapted frame
#
def frame_metric_at(spec, p, data=None):
    """
    Metric Gram matrix in the adapted frame. The "identity" metric is the one for
    which the adapted frame is orthonormal.
    """
    if spec.metric is None:
        return np.eye(spec.dim)
    data = data or frame_data(spec, p, second=False)
    G = np.array([[eval_value(f, data.point) for f in row] for row in spec.metric])
    return data.F.T @ G @ data.F


def _blocks(spec):
    chart = spec.chart
    return [("Q", chart.x_block())] + [(f"L{alpha}", chart.y_block(alpha))
                                       for alpha in range(1, spec.k + 1)]


def check_orthogonality(spec, G):
    blocks = _blocks(spec)
    for first in range(len(blocks)):
        for second in range(first + 1, len(blocks)):
            name_a, a = blocks[first]
            name_b, b = blocks[second]
            value = float(np.max(np.abs(G[np.ix_(a, b)])))
            if value > ORTHOGONALITY_TOLERANCE:
                raise OrthogonalityError(f"{name_a} and {name_b} are not g-orthogonal "
                                         f"(largest pairing {value:.3e})")


def _block_indices(spec, alpha):
    if not 1 <= alpha <= spec.k:
        raise IndexOutOfRange(f"alpha {alpha} outside 1..{spec.k}")
    return spec.chart.y_block(alpha) + spec.chart.x_block()


#####################################################################
# Operators
#
def _structure_operator(spec, alpha, data):
    indices = _block_indices(spec, alpha)
    G_full = frame_metric_at(spec, data.point, data)
    check_orthogonality(spec, G_full)
    omega = forms_of(spec)[alpha - 1]
    Wf, _ = frame_form_jets(data, *omega.jets_at(data.point))
    G = G_full[np.ix_(indices, indices)]
    W = Wf[np.ix_(indices, indices)]
    try:
        factor = cho_factor(G)
    except LinAlgError:
        raise SingularMetric(f"metric is not positive definite on L{alpha} + Q at {list(data.point)}")
    return StructureOperator(alpha, cho_solve(factor, W), G, W, indices)


def structure_operator(spec, alpha, p):
    """A with omega_alpha(u, v) = g(u, A v) on L_alpha + Q, i.e. G A = W."""
    return _structure_operator(spec, alpha, frame_data(spec, p, second=False))


def sqrt_spd(M, tolerance=1e-12):
    """Unique symmetric positive-definite square root via eigendecomposition."""
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T)) > tolerance * scale:
        raise NotSPD("matrix is not symmetric")
    values, vectors = eigh(M)
    if values[0] <= tolerance * scale:
        raise NotSPD(f"matrix has a nonpositive eigenvalue {values[0]:.3e}")
    return (vectors * np.sqrt(values)) @ vectors.T


def _polar_complex(op):
    # work in a g-orthonormal basis: G = L L^T
    L = cholesky(op.G, lower=True)
    A_tilde = L.T @ op.A @ np.linalg.inv(L.T)
    S = sqrt_spd(A_tilde @ A_tilde.T)
    J_tilde = np.linalg.solve(S, A_tilde)
    return solve_triangular(L.T, J_tilde @ L.T, lower=False)


def _complex_residuals(J, ghat, W, n):
    identity = np.eye(J.shape[0])
    return {
        "J^2 = -I": float(np.max(np.abs(J @ J + identity))),
        "J L = Q, J Q = L": float(max(np.max(np.abs(J[:n, :n])), np.max(np.abs(J[n:, n:])))),
        "ghat symmetric": float(np.max(np.abs(ghat - ghat.T))),
        "omega(u, v) = ghat(u, J v)": float(np.max(np.abs(ghat @ J - W))),
        "ghat(J u, J v) = ghat(u, v)": float(np.max(np.abs(J.T @ ghat @ J - ghat))),
    }


def _almost_complex(spec, alpha, data, verify=True):
    op = _structure_operator(spec, alpha, data)
    J = _polar_complex(op)
    ghat = J.T @ op.W
    residuals = _complex_residuals(J, ghat, op.W, spec.n)
    smallest = float(np.min(np.linalg.eigvalsh((ghat + ghat.T) / 2)))
    if verify:
        for identity, residual in residuals.items():
            if residual > PROPERTY_TOLERANCE:
                raise PropertyViolation(identity, residual)
        if smallest <= 0:
            raise PropertyViolation("ghat positive definite", -smallest)
    residuals["ghat min eigenvalue"] = smallest
    return AlmostComplex(alpha, J, ghat, op, residuals)


def almost_complex(spec, alpha, p):
    """
    J = (sqrt(A A*))^-1 A by polar decomposition, with ghat(u, v) = omega(J u, v).
    Verifies J^2 = -I, the L/Q block swap, ghat SPD, omega(u, v) = ghat(u, J v)
    and J-invariance of ghat.
    """
    return _almost_complex(spec, alpha, frame_data(spec, p, second=False))


def _extended_frame_j(spec, alpha, data, verify=True):
    """J_alpha on the whole frame, zero on L_beta for beta != alpha."""
    ac = _almost_complex(spec, alpha, data, verify)
    J = np.zeros((spec.dim, spec.dim))
    J[np.ix_(ac.operator.indices, ac.operator.indices)] = ac.J
    return J


def kernel_property_residual(spec, p):
    """
    Largest principal angle between L_alpha and the joint kernel of the J_beta,
    beta != alpha (extended by zero), over alpha. A dimension mismatch counts 1.
    """
    if spec.k < 2:
        return 0.0
    data = frame_data(spec, p, second=False)
    Js = [_extended_frame_j(spec, alpha, data) for alpha in range(1, spec.k + 1)]
    worst = 0.0
    for alpha in range(1, spec.k + 1):
        stacked = np.vstack([Js[beta - 1] for beta in range(1, spec.k + 1) if beta != alpha])
        kernel = null_space(stacked)
        block = np.eye(spec.dim)[:, spec.chart.y_block(alpha)]
        if kernel.shape[1] != block.shape[1]:
            return 1.0
        worst = max(worst, float(np.max(subspace_angles(kernel, block))))
    return worst


#####################################################################
# Nijenhuis tensor
#
def _coordinate_j(spec, alpha, p):
    data = frame_data(spec, p, second=False)
    J = _extended_frame_j(spec, alpha, data, verify=False)
    return data.F @ J @ np.linalg.inv(data.F)


def _has_constant_frame_j(spec):
    return spec.metric is None and spec.forms is None


def nijenhuis_at(spec, alpha, p, u, v):
    """
    N(u, v) = J^2 [u, v] + [J u, J v] - J [J u, v] - J [u, J v] for frame fields
    e_u, e_v, as a coordinate vector. The frame derivatives come from exact jets;
    the frame entries of J are differentiated by central differences unless they
    are constant (identity metric, Darboux forms).
    """
    data = frame_data(spec, p, second=False)
    dim = spec.dim
    F, dF = data.F, data.dF
    J = _extended_frame_j(spec, alpha, data, verify=False)

    dJ = np.zeros((dim, dim, dim))
    if not _has_constant_frame_j(spec):
        for l in range(dim):
            step = np.zeros(dim)
            step[l] = FD_STEP
            plus = _extended_frame_j(spec, alpha, frame_data(spec, data.point + step, second=False), False)
            minus = _extended_frame_j(spec, alpha, frame_data(spec, data.point - step, second=False), False)
            dJ[:, :, l] = (plus - minus) / (2 * FD_STEP)

    # a field given by frame components c(p) has coordinate jet (F c, dF c + F dc)
    def frame_field(c, dc):
        return F @ c, np.einsum("mal,a->ml", dF, c) + np.einsum("ma,al->ml", F, dc)

    def bracket(A, B):
        return B[1] @ A[0] - A[1] @ B[0]

    zero = np.zeros((dim, dim))
    eu = frame_field(np.eye(dim)[u], zero)
    ev = frame_field(np.eye(dim)[v], zero)
    Jeu = frame_field(J[:, u], dJ[:, u, :])
    Jev = frame_field(J[:, v], dJ[:, v, :])

    Jc = F @ J @ np.linalg.inv(F)
    return (Jc @ Jc @ bracket(eu, ev) + bracket(Jeu, Jev)
            - Jc @ bracket(Jeu, ev) - Jc @ bracket(eu, Jev))


def nijenhuis_fd_at(spec, alpha, p, u, v):
    """N(u, v) with every derivative taken by central differences."""
    p = np.asarray(p, dtype=float)
    dim = spec.dim

    def fields(q):
        F = frame_data(spec, q, second=False).F
        Jc = _coordinate_j(spec, alpha, q)
        return {"u": F[:, u], "v": F[:, v], "Ju": Jc @ F[:, u], "Jv": Jc @ F[:, v]}

    values = fields(p)
    jacobians = {name: np.zeros((dim, dim)) for name in values}
    for l in range(dim):
        step = np.zeros(dim)
        step[l] = FD_STEP
        plus, minus = fields(p + step), fields(p - step)
        for name in values:
            jacobians[name][:, l] = (plus[name] - minus[name]) / (2 * FD_STEP)

    def bracket(a, b):
        return jacobians[b] @ values[a] - jacobians[a] @ values[b]

    Jc = _coordinate_j(spec, alpha, p)
    return (Jc @ Jc @ bracket("u", "v") + bracket("Ju", "Jv")
            - Jc @ bracket("Ju", "v") - Jc @ bracket("u", "Jv"))


#####################################################################
# Levi-Civita comparison
#
def global_frame_metric(spec, data):
    """Frame metric assembled from the per-alpha ghat; the Q block comes from alpha = 1."""
    G = np.zeros((spec.dim, spec.dim))
    X = spec.chart.x_block()
    for alpha in range(1, spec.k + 1):
        ac = _almost_complex(spec, alpha, data, verify=False)
        indices = ac.operator.indices
        L = spec.chart.y_block(alpha)
        n = spec.n
        G[np.ix_(L, L)] = ac.ghat[:n, :n]
        G[np.ix_(L, X)] = ac.ghat[:n, n:]
        G[np.ix_(X, L)] = ac.ghat[n:, :n]
        if alpha == 1:
            G[np.ix_(X, X)] = ac.ghat[n:, n:]
        logger.debug("ghat_%d on %s assembled", alpha, indices)
    return G


def _coordinate_metric(spec, q):
    data = frame_data(spec, q, second=False)
    Finv = np.linalg.inv(data.F)
    return Finv.T @ global_frame_metric(spec, data) @ Finv


def levi_civita_comparison(spec, p):
    """
    max |Gamma_LC - Gamma_canonical| over frame indices, with the Levi-Civita
    connection of the ghat-assembled metric from the Koszul formula in
    coordinates (metric derivatives by central differences).
    """
    p = np.asarray(p, dtype=float)
    dim = spec.dim
    data = frame_data(spec, p, second=False)
    G = _coordinate_metric(spec, p)
    dG = np.zeros((dim, dim, dim))
    for l in range(dim):
        step = np.zeros(dim)
        step[l] = FD_STEP
        dG[:, :, l] = (_coordinate_metric(spec, p + step) - _coordinate_metric(spec, p - step)) / (2 * FD_STEP)
    # lowered[r, l, q] = 1/2 (d_l G_rq + d_q G_rl - d_r G_lq)
    lowered = 0.5 * (dG.transpose(0, 2, 1) + dG - dG.transpose(2, 0, 1))
    christoffel = np.linalg.solve(G, lowered.reshape(dim, dim * dim)).reshape(dim, dim, dim)
    F = data.F
    # nabla_{e_a} e_b in coordinates, then back to the frame
    coordinate = (np.einsum("mbl,la->mab", data.dF, F)
                  + np.einsum("mlq,la,qb->mab", christoffel, F, F))
    gamma_lc = solve_in_frame(F, coordinate.reshape(dim, dim * dim)).reshape(dim, dim, dim)
    gamma = connection_coeffs_at(spec, p).gamma
    return float(np.max(np.abs(gamma_lc - gamma)))
