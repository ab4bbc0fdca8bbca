# KSymplectic project.
#
# Curvature 2-form, matrix wedge powers and trace-power forms in an exact
# coefficient representation.
#
# A form of degree d is a table {I: c_I} over strictly increasing index tuples I,
# evaluated on vectors v_1..v_d as sum_I c_I det([v_j]_I). The wedge of two
# tables is the shuffle product, so the evaluation convention matches
# eval_two_form's (a coefficient c on (l, m) evaluates to c (u_l v_m - u_m v_l)).
#
# The basis 1-forms are the adapted coframe {dx_i, theta_{alpha j}} dual to the
# adapted frame, theta_{alpha j} = dy_{(alpha-1)n+j} + sum_i t_i^{alpha j} dx_i.
# Slot (a, b) therefore pairs frame indices, and dx ^ theta slots are the
# mixed X/Y pairs.
#
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ksymplectic.common.errors import DegreeOverflow, StructureViolation
from ksymplectic.geometry.connection import curvature_at

logger = logging.getLogger(__name__)

SLOT_TOLERANCE = 1e-10


def shuffle_sign(first, second):
    """Sign of the permutation sorting first + second, 0 when they overlap."""
    if set(first) & set(second):
        return 0
    inversions = sum(1 for i in first for j in second if i > j)
    return -1 if inversions % 2 else 1


@dataclass
class FormValue:
    degree: int
    dim: int
    coefficients: Dict[Tuple[int, ...], float] = field(default_factory=dict)

    def wedge(self, other):
        result = {}
        for I, a in self.coefficients.items():
            for J, b in other.coefficients.items():
                sign = shuffle_sign(I, J)
                if sign:
                    key = tuple(sorted(I + J))
                    result[key] = result.get(key, 0.0) + sign * a * b
        return FormValue(self.degree + other.degree, self.dim, result)

    def __add__(self, other):
        result = dict(self.coefficients)
        for key, value in other.coefficients.items():
            result[key] = result.get(key, 0.0) + value
        return FormValue(self.degree, self.dim, result)

    def scaled(self, factor):
        return FormValue(self.degree, self.dim,
                         {key: factor * value for key, value in self.coefficients.items()})

    def max_abs(self):
        return max((abs(v) for v in self.coefficients.values()), default=0.0)

    def evaluate(self, vectors):
        V = np.asarray(vectors, dtype=float).reshape(self.degree, self.dim).T
        return sum(c * np.linalg.det(V[list(I), :]) for I, c in self.coefficients.items())


@dataclass
class MatrixOfForms:
    """
    dim x dim matrix of forms of a common degree, stored as {I: matrix} so that
    entry (a, b) has coefficient matrix[a, b] on the slot I.
    """
    degree: int
    dim: int
    slots: Dict[Tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def entry(self, a, b):
        return FormValue(self.degree, self.dim,
                         {I: float(M[a, b]) for I, M in self.slots.items() if M[a, b] != 0.0})

    def wedge(self, other):
        """(self ^ other)^a_b = sum_c self^a_c ^ other^c_b."""
        result = {}
        for I, M in self.slots.items():
            for J, N in other.slots.items():
                sign = shuffle_sign(I, J)
                if sign:
                    key = tuple(sorted(I + J))
                    product = sign * (M @ N)
                    result[key] = result[key] + product if key in result else product
        return MatrixOfForms(self.degree + other.degree, self.dim, result)

    def trace(self):
        return FormValue(self.degree, self.dim,
                         {I: float(np.trace(M)) for I, M in self.slots.items()})

    def max_abs(self):
        return max((float(np.max(np.abs(M))) for M in self.slots.values()), default=0.0)

    def evaluate(self, vectors):
        V = np.asarray(vectors, dtype=float).reshape(self.degree, self.dim).T
        result = np.zeros((self.dim, self.dim))
        for I, M in self.slots.items():
            result += np.linalg.det(V[list(I), :]) * M
        return result

    def as_dict(self, labels=None):
        def name(I):
            return "^".join(labels[i] for i in I) if labels else ",".join(str(i) for i in I)
        return {name(I): M.tolist() for I, M in sorted(self.slots.items())}


#####################################################################
# Curvature forms
#
def _forbidden_slots(spec, R):
    """(a, b, size) for every dx ^ dx and theta ^ theta slot of Omega."""
    n = spec.n
    return [(a, b, float(np.max(np.abs(0.5 * R[:, a, b, :]))))
            for a, b in itertools.combinations(range(spec.dim), 2) if (a < n) == (b < n)]


def slot_residual(spec, p):
    """Largest coefficient of Omega on a slot other than dx ^ theta."""
    return max((size for _, _, size in _forbidden_slots(spec, curvature_at(spec, p))), default=0.0)


def curvature_two_form_from(spec, R):
    n, dim = spec.n, spec.dim
    violations = [slot for slot in _forbidden_slots(spec, R) if slot[2] > SLOT_TOLERANCE]
    if violations:
        a, b, value = max(violations, key=lambda item: item[2])
        raise StructureViolation(
            f"curvature form has a {spec.chart.frame_label(a)}^{spec.chart.frame_label(b)} "
            f"coefficient of size {value:.3e}")
    slots = {}
    for a in range(n):
        for b in range(n, dim):
            # Omega^f_c(e_a, e_b) = 1/2 R(e_a, e_b)^f_c
            M = 0.5 * R[:, a, b, :]
            if np.any(M):
                slots[(a, b)] = M
    return MatrixOfForms(2, dim, slots)


def curvature_two_form_at(spec, p):
    """
    Omega with Omega^f_c(e_a, e_b) = 1/2 R(e_a, e_b)^f_c. Only dx ^ theta slots may
    be populated; anything else beyond 1e-10 raises StructureViolation.
    """
    return curvature_two_form_from(spec, curvature_at(spec, p))


def wedge_power(omega, h):
    result = omega
    for _ in range(h - 1):
        result = omega.wedge(result)
    return result


def _probe_residual(forms, probes, seed):
    if forms.degree > forms.dim or not forms.slots:
        return 0.0
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        vectors = rng.uniform(-1.0, 1.0, size=(forms.degree, forms.dim))
        worst = max(worst, float(np.max(np.abs(forms.evaluate(vectors)))))
    return worst


def wedge_power_residual(spec, p, h, probes=1, seed=0):
    """
    Residual of Omega^h; 0 when 2h exceeds the dimension (zero form, no DegreeOverflow).

    Otherwise the max |coefficient| of the matrix wedge power, also evaluated on
    `probes` seeded random multivectors. DegreeOverflow only for h < 1 or
    probes < 1.
    """
    if h < 1:
        raise DegreeOverflow(f"wedge power needs h >= 1 (got {h})")
    if probes < 1:
        raise DegreeOverflow(f"need at least one probe (got {probes})")
    power = wedge_power(curvature_two_form_at(spec, p), h)
    return max(power.max_abs(), _probe_residual(power, probes, seed))


def trace_power_form(spec, p, m):
    if m < 1:
        raise DegreeOverflow(f"trace power needs m >= 1 (got {m})")
    return wedge_power(curvature_two_form_at(spec, p), m).trace()


def invariant_polynomial_residual(spec, p, m):
    """
    max |coefficient| of tr(Omega^m). This is the vanishing residual when
    2m > 2n and an informational magnitude otherwise.
    """
    return trace_power_form(spec, p, m).max_abs()
