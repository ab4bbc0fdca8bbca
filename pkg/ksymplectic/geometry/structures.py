# KSymplectic project.
#
# The k-symplectic forms, their evaluation, the validation suite for the
# hypotheses under which the canonical connection exists, and k-symplectic group
# membership.
#
# Normalization: a form with coefficient c on the slot (l, m), l < m, evaluates as
#
#   omega(u, v) = sum_{l<m} c_lm (u_l v_m - u_m v_l)
#
# and the Darboux forms carry c = 1/2 on (x_i, y_{(alpha-1)n+i}), so that
# (dx ^ dy)(d/dx, d/dy) = 1/2 and omega_alpha(Y_{beta i}, X_j) = -1/2 delta delta.
#
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ksymplectic.common.errors import DimensionMismatch, IndexOutOfRange
from ksymplectic.common.utils import format_residual, map_ordered
from ksymplectic.geometry.chart import ChartSpec, frame_data
from ksymplectic.geometry.expr import Lit, ScalarField, eval_jet1, is_constant

logger = logging.getLogger(__name__)

HALF = 0.5


#####################################################################
# Two-forms
#
@dataclass(frozen=True)
class TwoFormField:
    chart: ChartSpec
    # (l, m) with l < m -> coefficient field; absent slots are zero
    coefficients: Dict[Tuple[int, int], ScalarField]

    def is_constant(self):
        return all(is_constant(f) for f in self.coefficients.values())

    def matrix_at(self, p):
        """Antisymmetric matrix W with omega(u, v) = u^T W v."""
        W, _ = self.jets_at(p)
        return W

    def jets_at(self, p):
        """W and its first derivatives dW[l, m, q] = d_q W[l, m]."""
        dim = self.chart.dim
        W = np.zeros((dim, dim))
        dW = np.zeros((dim, dim, dim))
        for (l, m), f in self.coefficients.items():
            jet = eval_jet1(f, p)
            W[l, m] = jet.value
            W[m, l] = -jet.value
            dW[l, m] = jet.grad
            dW[m, l] = -jet.grad
        return W, dW


def standard_omega(chart, alpha):
    """Darboux form omega_alpha = sum_i dx_i ^ dy_{(alpha-1)n+i} (coefficients 1/2)."""
    if not 1 <= alpha <= chart.k:
        raise IndexOutOfRange(f"alpha {alpha} outside 1..{chart.k}")
    half = ScalarField(Lit(HALF), chart.n, chart.k, source="1/2")
    return TwoFormField(chart, {(chart.x(i), chart.y(alpha, i)): half
                                for i in range(1, chart.n + 1)})


def forms_of(spec):
    """The k forms of a spec: user supplied when present, Darboux otherwise."""
    if spec.forms is None:
        return [standard_omega(spec.chart, alpha) for alpha in range(1, spec.k + 1)]
    return [TwoFormField(spec.chart, coefficients) for coefficients in spec.forms]


def eval_two_form(omega, p, u, v):
    dim = omega.chart.dim
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (dim,) or v.shape != (dim,):
        raise DimensionMismatch(f"vectors must have length {dim}")
    return float(u @ omega.matrix_at(p) @ v)


#####################################################################
# Reports and sampling
#
PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"


@dataclass
class CheckRecord:
    id: str
    description: str
    status: str
    max_residual: float
    witness: Optional[dict] = None

    @property
    def passed(self):
        return self.status != FAIL

    def as_dict(self):
        result = {
            "id": self.id,
            "description": self.description,
            "status": self.status,
            "max_residual": format_residual(self.max_residual),
        }
        if self.witness is not None:
            result["witness"] = self.witness
        return result


@dataclass
class ValidationReport:
    checks: List[CheckRecord] = field(default_factory=list)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def get(self, check_id):
        for check in self.checks:
            if check.id == check_id:
                return check
        raise KeyError(check_id)

    def as_dict(self):
        return [check.as_dict() for check in self.checks]


@dataclass
class SamplingPlan:
    sample_count: int = 100
    seed: int = 0
    # (lo, hi) arrays; None means the spec region, else [-1, 1] per coordinate
    box: Optional[Tuple[np.ndarray, np.ndarray]] = None
    tolerance: float = 1e-9
    threads: int = 1

    def bounds(self, spec):
        if self.box is None:
            return spec.box()
        lo, hi = self.box
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (spec.dim,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (spec.dim,))
        return lo, hi

    def points(self, spec, count=None):
        lo, hi = self.bounds(spec)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(lo, hi, size=(count or self.sample_count, spec.dim))

    def rng(self, salt=0):
        return np.random.default_rng([self.seed, salt])


def _witness(index, point, detail, vectors=None):
    witness = {"sample": int(index), "point": [float(x) for x in point], "detail": detail}
    if vectors is not None:
        witness["vectors"] = [[float(x) for x in v] for v in vectors]
    return witness


def reduce_samples(check_id, description, per_sample, points, tolerance):
    """
    Deterministic reduction of per-sample (residual, detail, vectors) results:
    max residual, witness at the lowest failing sample index.
    """
    worst = 0.0
    witness = None
    for index, (residual, detail, vectors) in enumerate(per_sample):
        worst = max(worst, residual)
        if witness is None and residual > tolerance:
            witness = _witness(index, points[index], detail, vectors)
    status = FAIL if witness is not None else PASS
    return CheckRecord(check_id, description, status, worst, witness)


#####################################################################
# Validation
#
CHECKS = [
    ("C1", "closedness: d(omega_alpha) = 0"),
    ("C2", "characteristic intersection: joint kernel of the omega_alpha is {0}"),
    ("C3", "isotropy: omega_alpha vanishes on LxL and QxQ"),
    ("C4", "[Y_(beta i), X_j] lies in L_beta + Q"),
    ("C5", "t-compatibility: cross-block y-derivatives vanish, own-block slopes agree"),
    ("C6", "Q integrable: [X_i, X_j] has no Y component"),
    ("C7", "Lie derivative of omega_alpha along L_beta vanishes (alpha != beta)"),
]


def _closedness(jets):
    worst = 0.0
    detail = ""
    for alpha, (_, dW) in enumerate(jets, start=1):
        # (d omega)_{qlm} ~ cyclic sum of d_q W[l, m]
        cyclic = dW + dW.transpose(1, 2, 0) + dW.transpose(2, 0, 1)
        value = float(np.max(np.abs(cyclic))) if cyclic.size else 0.0
        if value > worst:
            worst = value
            detail = f"d(omega_{alpha}) has a coefficient of size {value:.3e}"
    return worst, detail, None


def _characteristic_intersection(jets):
    stacked = np.vstack([W for W, _ in jets])
    _, s, vt = np.linalg.svd(stacked)
    dim = stacked.shape[1]
    largest = s[0] if s.size else 0.0
    rank = int(np.sum(s > 1e-10 * largest)) if largest > 0 else 0
    deficit = dim - rank
    if deficit == 0:
        return 0.0, "", None
    return float(deficit), f"joint kernel has dimension {deficit}", [vt[-1]]


def _isotropy(chart, jets, F):
    n = chart.n
    worst = 0.0
    detail = ""
    vectors = None
    for alpha, (W, _) in enumerate(jets, start=1):
        gram = F.T @ W @ F
        for name, block in (("LxL", gram[n:, n:]), ("QxQ", gram[:n, :n])):
            if block.size == 0:
                continue
            a, b = np.unravel_index(np.argmax(np.abs(block)), block.shape)
            value = float(abs(block[a, b]))
            if value > worst:
                offset = n if name == "LxL" else 0
                worst = value
                detail = (f"omega_{alpha}({chart.frame_label(a + offset)}, "
                          f"{chart.frame_label(b + offset)}) = {block[a, b]:.6g} on {name}")
                vectors = [F[:, a + offset], F[:, b + offset]]
    return worst, detail, vectors


def _condition_two(chart, C):
    n = chart.n
    worst = 0.0
    detail = ""
    for beta in range(1, chart.k + 1):
        for i in range(1, n + 1):
            a = chart.y(beta, i)
            for j in range(n):
                bracket = C[:, a, j]
                for c in range(n, chart.dim):
                    if chart.block_of(c) != beta and abs(bracket[c]) > worst:
                        worst = abs(bracket[c])
                        detail = (f"[{chart.frame_label(a)}, {chart.frame_label(j)}] has "
                                  f"{chart.frame_label(c)} component {bracket[c]:.6g}")
    return worst, detail, None


def _t_compatibility(chart, dT):
    n, k = chart.n, chart.k
    worst = 0.0
    detail = ""
    for i in range(n):
        for alpha in range(k):
            for j in range(n):
                for beta in range(k):
                    for h in range(n):
                        value = dT[i, alpha, j, chart.y(beta + 1, h + 1)]
                        if beta != alpha:
                            residual = abs(value)
                            expected = "0"
                        else:
                            reference = dT[i, 0, j, chart.y(1, h + 1)]
                            residual = abs(value - reference)
                            expected = f"d t[{i + 1}][1][{j + 1}] / d y{h + 1} = {reference:.6g}"
                        if residual > worst:
                            worst = residual
                            detail = (f"d t[{i + 1}][{alpha + 1}][{j + 1}] / d "
                                      f"{chart.coordinate_label(chart.y(beta + 1, h + 1))} = "
                                      f"{value:.6g}, expected {expected}")
    return worst, detail, None


def _q_integrability(chart, C):
    n = chart.n
    block = C[n:, :n, :n]
    if block.size == 0:
        return 0.0, "", None
    c, i, j = np.unravel_index(np.argmax(np.abs(block)), block.shape)
    value = float(abs(block[c, i, j]))
    detail = (f"[{chart.frame_label(i)}, {chart.frame_label(j)}] has "
              f"{chart.frame_label(c + n)} component {block[c, i, j]:.6g}")
    return value, detail if value > 0 else "", None


def _lie_derivative(chart, jets):
    worst = 0.0
    detail = ""
    for alpha, (_, dW) in enumerate(jets, start=1):
        for beta in range(1, chart.k + 1):
            if beta == alpha:
                continue
            for i in range(1, chart.n + 1):
                # Y_{beta i} is a coordinate field, so L_Y omega = d_Y W
                value = float(np.max(np.abs(dW[:, :, chart.y(beta, i)])))
                if value > worst:
                    worst = value
                    detail = f"L_{chart.frame_label(chart.y(beta, i))} omega_{alpha} has size {value:.3e}"
    return worst, detail, None


def _validate_point(spec, forms, p):
    data = frame_data(spec, p, second=False)
    jets = [omega.jets_at(p) for omega in forms]
    chart = spec.chart
    return {
        "C1": _closedness(jets),
        "C2": _characteristic_intersection(jets),
        "C3": _isotropy(chart, jets, data.F),
        "C4": _condition_two(chart, data.C),
        "C5": _t_compatibility(chart, data.dT),
        "C6": _q_integrability(chart, data.C),
        "C7": _lie_derivative(chart, jets),
    }


def validate_spec(spec, plan=None):
    """
    Run the checks C1..C7 at every sampled point. Falsified checks are reported,
    not raised.
    """
    plan = plan or SamplingPlan()
    forms = forms_of(spec)
    points = plan.points(spec)
    results = map_ordered(lambda p: _validate_point(spec, forms, p), points, plan.threads)

    report = ValidationReport()
    for check_id, description in CHECKS:
        per_sample = [result[check_id] for result in results]
        # rank deficits are integers; any deficit fails
        tolerance = 0.5 if check_id == "C2" else plan.tolerance
        record = reduce_samples(check_id, description, per_sample, points, tolerance)
        if check_id == "C1" and spec.forms is None:
            record.description += " (standard forms)"
        report.checks.append(record)
        logger.debug("%s %s max=%.3e", check_id, record.status, record.max_residual)
    return report


#####################################################################
# k-symplectic group
#
GROUP_TOLERANCE = 1e-10


def is_group_element(M, n, k, tolerance=GROUP_TOLERANCE):
    """
    Whether M has the k-symplectic group pattern

        | T             S_1      |
        |    ...        ...      |
        |         T     S_k      |
        |               T^-t     |

    with T invertible and T S_alpha^t symmetric. Returns (bool, diagnostic).
    """
    M = np.asarray(M, dtype=float)
    dim = n * (k + 1)
    if M.shape != (dim, dim):
        raise DimensionMismatch(f"expected a {dim}x{dim} matrix, got shape {M.shape}")

    def block(r, c):
        return M[r * n:(r + 1) * n, c * n:(c + 1) * n]

    T = block(0, 0)
    if abs(np.linalg.det(T)) <= tolerance:
        return False, "T is singular"
    for r in range(k + 1):
        for c in range(k + 1):
            B = block(r, c)
            if r == c and r < k:
                if np.max(np.abs(B - T)) > tolerance:
                    return False, f"diagonal block {r + 1} differs from T"
            elif r == c:
                if np.max(np.abs(B - np.linalg.inv(T).T)) > tolerance:
                    return False, "last diagonal block is not the inverse transpose of T"
            elif c == k:
                S = B
                product = T @ S.T
                if np.max(np.abs(product - product.T)) > tolerance:
                    return False, f"T S_{r + 1}^t is not symmetric"
            elif np.max(np.abs(B)) > tolerance:
                return False, f"block ({r + 1},{c + 1}) is not zero"
    return True, "ok"
