# KSymplectic project.
#
# Index conventions of the Darboux chart, manifold specs, the adapted frame and
# frame brackets.
#
# Coordinates are ordered (x1..xn, y1..y{kn}) with flat indices 0..n(k+1)-1;
# x_i has index i-1 and the pair y(alpha, i), i.e. y_{(alpha-1)n+i}, has index
# n + (alpha-1)n + i - 1. Frame indices use the same order: X_1..X_n first,
# then Y_{1,1}..Y_{k,n}, so frame index == flat index of the matching
# coordinate field.
#
# Frame fields:
#
#   X_i = d/dx_i - sum_{alpha,j} t_i^{alpha j} d/dy_{(alpha-1)n+j}
#   Y_{alpha i} = d/dy_{(alpha-1)n+i}
#
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from ksymplectic.common.errors import DimensionMismatch, IndexOutOfRange, SpecError
from ksymplectic.geometry.expr import (ScalarField, Var, coordinate_index, eval_jet1,
                                       eval_jet2, format_field, parse_scalar_field, zero_field)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChartSpec:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise IndexOutOfRange(f"chart dimensions must be positive (n={self.n}, k={self.k})")

    @property
    def dim(self):
        return self.n * (self.k + 1)

    def x(self, i):
        """Flat index of x_i (1-based i)."""
        if not 1 <= i <= self.n:
            raise IndexOutOfRange(f"x index {i} outside 1..{self.n}")
        return i - 1

    def y(self, alpha, i):
        """Flat index of y_{(alpha-1)n+i}."""
        if not 1 <= alpha <= self.k:
            raise IndexOutOfRange(f"alpha {alpha} outside 1..{self.k}")
        if not 1 <= i <= self.n:
            raise IndexOutOfRange(f"y index {i} outside 1..{self.n}")
        return self.n + (alpha - 1) * self.n + i - 1

    def x_block(self):
        return list(range(self.n))

    def y_block(self, alpha=None):
        if alpha is None:
            return list(range(self.n, self.dim))
        return [self.y(alpha, i) for i in range(1, self.n + 1)]

    def block_of(self, index):
        """0 for the X block, alpha for the L_alpha block."""
        if index < self.n:
            return 0
        return (index - self.n) // self.n + 1

    def coordinate_label(self, index):
        if index < self.n:
            return f"x{index + 1}"
        return f"y{index - self.n + 1}"

    def frame_label(self, index):
        if index < self.n:
            return f"X{index + 1}"
        alpha = (index - self.n) // self.n + 1
        i = (index - self.n) % self.n + 1
        return f"Y{alpha},{i}"


def flat_index(chart, label):
    """
    Flat index of a coordinate label. Accepts "x2" / "y3" strings, ("x", i) or
    ("y", alpha, i) tuples.
    """
    if isinstance(label, str):
        index = coordinate_index(label, chart.n, chart.k)
        if index is None:
            raise IndexOutOfRange(f"'{label}' is not a coordinate of the (n={chart.n}, k={chart.k}) chart")
        return index
    kind = label[0]
    if kind == "x" and len(label) == 2:
        return chart.x(label[1])
    if kind == "y" and len(label) == 3:
        return chart.y(label[1], label[2])
    raise IndexOutOfRange(f"bad coordinate label {label!r}")


#####################################################################
# Manifold specs
#
@dataclass
class ManifoldSpec:
    chart: ChartSpec
    # t[(i, alpha, j)], 1-based, complete
    t: Dict[Tuple[int, int, int], ScalarField]
    # None means the metric making the adapted frame orthonormal
    metric: Optional[List[List[ScalarField]]] = None
    base_point: np.ndarray = None
    region: Optional[Tuple[np.ndarray, np.ndarray]] = None
    # per alpha: {(l, m): field} with l < m, or None for the standard Darboux forms
    forms: Optional[List[Dict[Tuple[int, int], ScalarField]]] = None
    name: str = ""
    document: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.base_point is None:
            self.base_point = np.zeros(self.chart.dim)
        self.base_point = np.asarray(self.base_point, dtype=float)
        if self.base_point.shape != (self.chart.dim,):
            raise SpecError(f"base_point must have length {self.chart.dim}")
        missing = [key for key in self.t_keys() if key not in self.t]
        if missing:
            raise SpecError(f"t table incomplete, missing {missing[0]}")

    @property
    def n(self):
        return self.chart.n

    @property
    def k(self):
        return self.chart.k

    @property
    def dim(self):
        return self.chart.dim

    def t_keys(self):
        n, k = self.chart.n, self.chart.k
        return [(i, alpha, j) for i in range(1, n + 1)
                for alpha in range(1, k + 1) for j in range(1, n + 1)]

    def box(self):
        if self.region is not None:
            return self.region
        return -np.ones(self.dim), np.ones(self.dim)

    def has_identity_metric(self):
        return self.metric is None

    def has_constant_t(self):
        return all(not field_mentions_y(f) for f in self.t.values())

    @classmethod
    def build(cls, n, k, t=None, metric="identity", base_point=None, region=None,
              forms=None, name=""):
        """
        Convenience constructor from plain Python data: t maps (i, alpha, j) to
        expression strings (missing entries are zero), forms is a list of
        {(label, label): expr}. metric is a matrix of expression strings/numbers in
        the coordinate basis, or "identity": the metric for which the adapted frame
        X_i, Y_{alpha j} is orthonormal (not the coordinate identity unless t = 0).
        """
        doc = {"n": n, "k": k, "t": {}}
        for (i, alpha, j), src in (t or {}).items():
            doc["t"][f"t[{i}][{alpha}][{j}]"] = src
        if metric != "identity":
            doc["metric"] = metric
        if base_point is not None:
            doc["base_point"] = list(base_point)
        if region is not None:
            doc["region"] = {"min": list(region[0]), "max": list(region[1])}
        if forms is not None:
            doc["forms"] = [{f"c[{a}][{b}]": src for (a, b), src in form.items()} for form in forms]
        if name:
            doc["name"] = name
        return spec_from_document(doc)


def field_mentions_y(f):
    n = f.n

    def walk(node):
        if isinstance(node, Var):
            return node.index >= n
        return any(walk(child) for child in _children(node))
    return walk(f.ast)


def _children(node):
    for name in ("operand", "left", "right", "base", "arg"):
        child = getattr(node, name, None)
        if child is not None:
            yield child


_T_KEY_RE = re.compile(r"^t\[(\d+)\]\[(\d+)\]\[(\d+)\]$")
_C_KEY_RE = re.compile(r"^c\[([xy][0-9]+)\]\[([xy][0-9]+)\]$")
_SPEC_KEYS = {"n", "k", "t", "metric", "base_point", "region", "forms", "name"}


def _as_source(value, where):
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise SpecError(f"{where}: expected an expression string or a number")
    return value if isinstance(value, str) else repr(value)


def _positive_int(doc, key):
    if key not in doc:
        raise SpecError(f"{key} required")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise SpecError(f"{key} must be a positive integer")
    return value


def _real_vector(value, length, where):
    if not isinstance(value, list) or len(value) != length:
        raise SpecError(f"{where} must be a list of {length} numbers")
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise SpecError(f"{where} must contain only numbers")
    return np.array(value, dtype=float)


def spec_from_document(doc):
    """
    Build a ManifoldSpec from a decoded spec document. Raises SpecError on
    structural problems and the expression errors on bad field sources.

    "metric": "identity" (the default) makes the adapted frame orthonormal; a
    matrix is read in the coordinate basis.
    """
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a JSON object")
    unknown = sorted(set(doc) - _SPEC_KEYS)
    if unknown:
        raise SpecError(f"unknown key '{unknown[0]}'")

    n = _positive_int(doc, "n")
    k = _positive_int(doc, "k")
    chart = ChartSpec(n, k)
    dim = chart.dim

    t_doc = doc.get("t", {})
    if not isinstance(t_doc, dict):
        raise SpecError("t must be an object of \"t[i][alpha][j]\": expression entries")
    t = {}
    for key, value in t_doc.items():
        match = _T_KEY_RE.match(key)
        if not match:
            raise SpecError(f"bad t key '{key}'")
        i, alpha, j = (int(g) for g in match.groups())
        if not (1 <= i <= n and 1 <= alpha <= k and 1 <= j <= n):
            raise SpecError(f"index out of range: {key}")
        t[(i, alpha, j)] = parse_scalar_field(_as_source(value, key), n, k)
    for i in range(1, n + 1):
        for alpha in range(1, k + 1):
            for j in range(1, n + 1):
                t.setdefault((i, alpha, j), zero_field(n, k))

    metric = None
    metric_doc = doc.get("metric", "identity")
    if metric_doc != "identity":
        if not isinstance(metric_doc, list) or len(metric_doc) != dim or \
                any(not isinstance(row, list) or len(row) != dim for row in metric_doc):
            raise SpecError(f"metric must be \"identity\" or a {dim}x{dim} matrix")
        metric = [[parse_scalar_field(_as_source(v, f"metric[{a}][{b}]"), n, k)
                   for b, v in enumerate(row)] for a, row in enumerate(metric_doc)]
        for a in range(dim):
            for b in range(a + 1, dim):
                if metric[a][b] != metric[b][a]:
                    raise SpecError(f"metric is not symmetric at ({a + 1},{b + 1})")

    base_point = None
    if "base_point" in doc:
        base_point = _real_vector(doc["base_point"], dim, "base_point")

    region = None
    if "region" in doc:
        region_doc = doc["region"]
        if not isinstance(region_doc, dict) or set(region_doc) != {"min", "max"}:
            raise SpecError("region must be {\"min\": [...], \"max\": [...]}")
        lo = _real_vector(region_doc["min"], dim, "region.min")
        hi = _real_vector(region_doc["max"], dim, "region.max")
        if np.any(lo >= hi):
            raise SpecError("region.min must be below region.max in every coordinate")
        region = (lo, hi)

    forms = None
    if "forms" in doc:
        forms_doc = doc["forms"]
        if not isinstance(forms_doc, list) or len(forms_doc) != k:
            raise SpecError(f"forms must be a list of {k} coefficient tables")
        forms = []
        for alpha, table in enumerate(forms_doc, start=1):
            if not isinstance(table, dict):
                raise SpecError(f"forms[{alpha}] must be an object")
            coefficients = {}
            for key, value in table.items():
                match = _C_KEY_RE.match(key)
                if not match:
                    raise SpecError(f"bad form key '{key}'")
                l = coordinate_index(match.group(1), n, k)
                m = coordinate_index(match.group(2), n, k)
                if l is None or m is None:
                    raise SpecError(f"index out of range: {key}")
                if l >= m:
                    raise SpecError(f"form key '{key}' must name coordinates in increasing order")
                coefficients[(l, m)] = parse_scalar_field(_as_source(value, key), n, k)
            forms.append(coefficients)

    name = doc.get("name", "")
    if not isinstance(name, str):
        raise SpecError("name must be a string")

    spec = ManifoldSpec(chart, t, metric, base_point, region, forms, name, document=doc)
    logger.debug("loaded spec n=%d k=%d (%d non-zero t entries)", n, k,
                 sum(1 for f in t.values() if format_field(f) != "0"))
    return spec


#####################################################################
# Frame data at a point
#
@dataclass
class FrameData:
    """
    Everything the connection needs at one point: t jets, the adapted frame F
    (columns = frame vectors in the coordinate basis), its derivatives
    dF[m, a, l] = d_l F[m, a], and the frame brackets C[c, a, b] with
    [e_a, e_b] = sum_c C[c, a, b] e_c.
    """
    point: np.ndarray
    T: np.ndarray
    dT: np.ndarray
    d2T: Optional[np.ndarray]
    F: np.ndarray
    dF: np.ndarray
    C: np.ndarray


def t_jets(spec, p, second=True):
    """T[i,a,j], dT[i,a,j,l] and (optionally) d2T[i,a,j,l,m], all 0-based."""
    n, k, dim = spec.n, spec.k, spec.dim
    T = np.zeros((n, k, n))
    dT = np.zeros((n, k, n, dim))
    d2T = np.zeros((n, k, n, dim, dim)) if second else None
    for (i, alpha, j), f in spec.t.items():
        jet = eval_jet2(f, p) if second else eval_jet1(f, p)
        T[i - 1, alpha - 1, j - 1] = jet.value
        dT[i - 1, alpha - 1, j - 1] = jet.grad
        if second:
            d2T[i - 1, alpha - 1, j - 1] = jet.hess
    return T, dT, d2T


def _frame_from_t(n, k, T):
    dim = n * (k + 1)
    F = np.eye(dim)
    # F[y(alpha, j), i] = -t_i^{alpha j}
    F[n:, :n] = -T.transpose(1, 2, 0).reshape(k * n, n)
    return F


def _frame_derivatives(n, k, dT):
    dim = n * (k + 1)
    dF = np.zeros((dim, dim, dim))
    dF[n:, :n, :] = -dT.transpose(1, 2, 0, 3).reshape(k * n, n, dim)
    return dF


def _check_point(spec, p):
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.dim,):
        raise DimensionMismatch(f"point has shape {p.shape}, chart needs ({spec.dim},)")
    return p


def solve_in_frame(F, vectors):
    """Components in the adapted frame of coordinate vectors (F is unit lower triangular)."""
    return solve_triangular(F, vectors, lower=True, unit_diagonal=True)


def frame_data(spec, p, second=True):
    p = _check_point(spec, p)
    n, k, dim = spec.n, spec.k, spec.dim
    T, dT, d2T = t_jets(spec, p, second)
    F = _frame_from_t(n, k, T)
    dF = _frame_derivatives(n, k, dT)
    # [e_a, e_b]^m = e_a^l d_l e_b^m - e_b^l d_l e_a^m
    B = np.einsum("la,mbl->mab", F, dF) - np.einsum("lb,mal->mab", F, dF)
    C = solve_in_frame(F, B.reshape(dim, dim * dim)).reshape(dim, dim, dim)
    return FrameData(p, T, dT, d2T, F, dF, C)


def adapted_frame_at(spec, p):
    """Adapted frame at p: columns X_1..X_n, Y_{1,1}..Y_{k,n} in the coordinate basis."""
    p = _check_point(spec, p)
    T, _, _ = t_jets(spec, p, second=False)
    return _frame_from_t(spec.n, spec.k, T)


def frame_bracket_at(spec, p, a, b):
    """[e_a, e_b] at p, as components in the adapted frame."""
    dim = spec.dim
    if not (0 <= a < dim and 0 <= b < dim):
        raise IndexOutOfRange(f"frame indices ({a}, {b}) outside 0..{dim - 1}")
    return frame_data(spec, p, second=False).C[:, a, b].copy()
