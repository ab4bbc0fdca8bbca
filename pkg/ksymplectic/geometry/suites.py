# KSymplectic project.
#
# Sampled verification suites. Each suite turns the library operations into
# CheckRecords plus a dictionary of artifacts for the report. Geometric
# precondition errors become failed checks carrying the message; spec and
# expression errors propagate to the caller.
#
import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from ksymplectic.common.errors import ExpressionError, KsymError, NotFlat, SpecError
from ksymplectic.common.utils import map_ordered
from ksymplectic.geometry import charclass, connection, ehresmann, kaehler, normalform
from ksymplectic.geometry.chart import frame_data
from ksymplectic.geometry.expr import is_constant
from ksymplectic.geometry.structures import (FAIL, PASS, SKIPPED, CheckRecord, SamplingPlan,
                                             reduce_samples, validate_spec)

logger = logging.getLogger(__name__)

TORSION_TOLERANCE = 1e-10
KAEHLER_TOLERANCE = 1e-10
TRANSPORT_TOLERANCE = 1e-8
GEODESIC_TOLERANCE = 1e-8
RECTANGLE_TOLERANCE = 1e-6
TANGENCY_TOLERANCE = 1e-8
NORMAL_FORM_TOLERANCE = 1e-5
ORDER_TOLERANCE = 1e-6
CHARCLASS_TOLERANCE = 1e-12
SLOT_TOLERANCE = 1e-10
# integration-heavy suites use at most this many of the sample points
INTEGRATION_SAMPLES = 5


@dataclass
class SuiteResult:
    name: str
    checks: List[CheckRecord] = field(default_factory=list)
    artifacts: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)


def _failed(check_id, description, error):
    logger.debug("%s failed: %s", check_id, error)
    return CheckRecord(check_id, description, FAIL, float("inf"),
                       {"error": f"{type(error).__name__}: {error}"})


def _guarded(check_id, description, build):
    """Run build() -> CheckRecord, turning geometric errors into a failed check."""
    try:
        return build()
    except (SpecError, ExpressionError):
        raise
    except KsymError as e:
        return _failed(check_id, description, e)


def _sampled(check_id, description, spec, plan, per_point, tolerance, count=None):
    def build():
        points = plan.points(spec, count)
        results = map_ordered(per_point, points, plan.threads)
        return reduce_samples(check_id, description, results, points, tolerance)
    return _guarded(check_id, description, build)


def _block_max(tensor, *blocks):
    part = tensor[np.ix_(*blocks)]
    return float(np.max(np.abs(part))) if part.size else 0.0


def _labelled(spec, values, threshold=0.0):
    """Nonzero entries of a frame tensor keyed by frame labels."""
    label = spec.chart.frame_label
    return {",".join(label(i) for i in index): float(value)
            for index, value in np.ndenumerate(values) if abs(value) > threshold}


#####################################################################
# Suites
#
def validate_suite(spec, plan):
    report = validate_spec(spec, plan)
    return SuiteResult("validate", report.checks)


def connection_suite(spec, plan):
    n, dim = spec.n, spec.dim
    X, Y = list(range(n)), list(range(n, dim))
    result = SuiteResult("connection")

    def uniqueness(p):
        closed = connection.connection_coeffs_at(spec, p).gamma
        rebuilt = connection.coeffs_from_defining_relations(spec, p).gamma
        value = float(np.max(np.abs(closed - rebuilt)))
        return value, f"coefficients differ by {value:.3e}", None

    def nabla_omega(p):
        value = connection.nabla_omega_residual(spec, p)
        return value, f"nabla omega has size {value:.3e}", None

    def torsion_mixed(p):
        T = connection.torsion_at(spec, p)
        value = max(_block_max(T, range(dim), X, Y), _block_max(T, range(dim), Y, X))
        return value, f"T(X, Y) has size {value:.3e}", None

    def torsion_leafwise(p):
        T = connection.torsion_at(spec, p)
        value = max(_block_max(T, range(dim), Y, Y), _block_max(T, range(dim), X, X))
        return value, f"T on LxL or QxQ has size {value:.3e}", None

    tolerance = plan.tolerance
    result.checks = [
        _sampled("uniqueness", "defining relations reproduce the closed-form coefficients",
                 spec, plan, uniqueness, tolerance),
        _sampled("nabla-omega", "every omega_alpha is parallel", spec, plan, nabla_omega, tolerance),
        _sampled("torsion-mixed", "torsion vanishes on mixed X/Y pairs",
                 spec, plan, torsion_mixed, TORSION_TOLERANCE),
        _sampled("torsion-leafwise", "torsion vanishes along the leaves of F and Q",
                 spec, plan, torsion_leafwise, TORSION_TOLERANCE),
    ]
    try:
        gamma = connection.connection_coeffs_at(spec, spec.base_point).gamma
        result.artifacts["gamma_at_base"] = _labelled(spec, gamma)
    except KsymError as e:
        result.artifacts["gamma_at_base"] = {"error": str(e)}
    return result


def curvature_suite(spec, plan):
    n, dim = spec.n, spec.dim
    X, Y, every = list(range(n)), list(range(n, dim)), list(range(dim))
    result = SuiteResult("curvature")

    def oracle(p):
        value = float(np.max(np.abs(connection.curvature_at(spec, p)
                                    - connection.curvature_closed_form_at(spec, p))))
        return value, f"bracket and closed-form curvature differ by {value:.3e}", None

    def leafwise(p):
        R = connection.curvature_at(spec, p)
        value = max(_block_max(R, every, Y, Y, every), _block_max(R, every, X, X, every))
        return value, f"R on LxL or QxQ has size {value:.3e}", None

    def rigidity(p):
        value = float(np.max(np.abs(connection.curvature_at(spec, p))))
        return value, f"curvature has size {value:.3e}", None

    tolerance = plan.tolerance
    result.checks = [
        _sampled("curvature-oracle", "bracket curvature equals the closed form",
                 spec, plan, oracle, tolerance),
        _sampled("curvature-leafwise", "curvature vanishes along the leaves of F and Q",
                 spec, plan, leafwise, tolerance),
    ]
    if spec.k >= 2:
        result.checks.append(_sampled("rigidity", "k >= 2 forces a flat connection",
                                      spec, plan, rigidity, tolerance))
    else:
        result.checks.append(CheckRecord("rigidity", "k >= 2 forces a flat connection (k = 1)",
                                         SKIPPED, 0.0))
    try:
        R = connection.curvature_at(spec, spec.base_point)
        result.artifacts["curvature_at_base"] = _labelled(spec, R, 1e-14)
        result.artifacts["affine_transversal_at_base"] = \
            connection.affine_transversal_residual(spec, spec.base_point)
    except KsymError as e:
        result.artifacts["curvature_at_base"] = {"error": str(e)}
    return result


def _leaf_loop(spec, p, size):
    """Corners of a closed coordinate loop through p inside the leaf of F."""
    y = list(range(spec.n, spec.dim))
    a, b = (y[0], y[1]) if len(y) >= 2 else (y[0], None)
    corners = [np.array(p, dtype=float)]
    for index, sign in ((a, 1), (b, 1), (a, -1), (b, -1)):
        if index is None:
            continue
        corner = corners[-1].copy()
        corner[index] += sign * size
        corners.append(corner)
    return corners


def transport_suite(spec, plan, steps=64, size=0.5):
    result = SuiteResult("transport")
    count = min(plan.sample_count, INTEGRATION_SAMPLES)

    def loop(indexed):
        index, p = indexed
        v0 = plan.rng(index).uniform(-1.0, 1.0, spec.dim)
        v = v0
        corners = _leaf_loop(spec, p, size)
        for start, end in zip(corners[:-1], corners[1:]):
            v = connection.parallel_transport(spec, connection.Curve.line(start, end), v, steps)
        value = float(np.max(np.abs(v - v0)))
        return value, f"loop transport moved v0 by {value:.3e}", [v0]

    def build():
        points = plan.points(spec, count)
        results = map_ordered(loop, list(enumerate(points)), plan.threads)
        return reduce_samples("transport-leaf-loop", "transport around a loop in a leaf of F",
                              results, points, TRANSPORT_TOLERANCE)

    result.checks = [_guarded("transport-leaf-loop", "transport around a loop in a leaf of F", build)]
    try:
        curve = ehresmann.horizontal_integral_curve(spec, spec.base_point, np.eye(spec.n)[0],
                                                    1.0, steps)
        data = frame_data(spec, spec.base_point, second=False)
        v0 = data.F[:, spec.n]
        result.artifacts["transported_y_along_x"] = {
            "start": spec.base_point, "end": curve.end,
            "vector": connection.parallel_transport(spec, curve, v0, steps),
        }
    except KsymError as e:
        result.artifacts["transported_y_along_x"] = {"error": str(e)}
    return result


def geodesic_suite(spec, plan, duration=1.0, steps=100, refinement=10, speed=0.5):
    count = min(plan.sample_count, INTEGRATION_SAMPLES)

    def convergence(indexed):
        index, p = indexed
        v0 = speed * plan.rng(index).uniform(-1.0, 1.0, spec.dim)
        coarse = connection.geodesic(spec, p, v0, duration, steps).end
        fine = connection.geodesic(spec, p, v0, duration, steps * refinement).end
        value = float(np.max(np.abs(coarse - fine)))
        return value, f"endpoints differ by {value:.3e} under {refinement}x refinement", [v0]

    def build():
        points = plan.points(spec, count)
        results = map_ordered(convergence, list(enumerate(points)), plan.threads)
        return reduce_samples("geodesic-convergence", "geodesic endpoints converge under refinement",
                              results, points, GEODESIC_TOLERANCE)

    check = _guarded("geodesic-convergence", "geodesic endpoints converge under refinement", build)
    return SuiteResult("geodesic", [check])


def rectangle_suite(spec, plan, grid=10, length=1.0):
    result = SuiteResult("rectangle")
    description = "vertical geodesic and horizontal curve span a rectangle"

    def build():
        p0 = spec.base_point
        direction = np.zeros(spec.n * spec.k)
        direction[0] = 1.0
        alpha_curve = ehresmann.vertical_line(spec, p0, direction, length)
        beta_curve = ehresmann.horizontal_integral_curve(spec, p0, np.eye(spec.n)[0], length,
                                                         4 * grid)
        rect = ehresmann.build_rectangle(spec, alpha_curve, beta_curve, (grid, grid))
        parts = ehresmann.verify_rectangle(rect, spec, detail=True)
        parts["horizontal_flow"] = ehresmann.horizontal_flow_residual(rect, spec)
        # horizontal slices are only guaranteed for a flat connection with leafwise affine t
        curvature, transversal = normalform.flatness_residual(spec, plan.bounds(spec),
                                                              seed=plan.seed)
        hypotheses = (curvature <= normalform.FLATNESS_TOLERANCE
                      and transversal <= normalform.FLATNESS_TOLERANCE)
        gated = [parts["vertical"], parts["edges"]]
        if hypotheses:
            gated.append(parts["horizontal_flow"])
        residual = max(gated)
        result.artifacts["rectangle"] = rect.as_dict()
        result.artifacts["rectangle_residuals"] = dict(parts, horizontal_gated=hypotheses,
                                                       curvature=curvature,
                                                       leafwise_d2t=transversal)
        witness = dict(parts, tangency=rect.tangency_residual, grid=[grid, grid])
        failed = residual > RECTANGLE_TOLERANCE or rect.tangency_residual > TANGENCY_TOLERANCE
        return CheckRecord("rectangle", description, FAIL if failed else PASS, residual,
                           witness if failed else None)

    result.checks = [_guarded("rectangle", description, build)]
    return result


def normal_form_suite(spec, plan, grid=6, pairs=5):
    result = SuiteResult("normal-form")
    description = "flow coordinates of the parallel frame straighten every omega_alpha"

    def build():
        lo, hi = plan.bounds(spec)
        try:
            cmap = normalform.normal_form_chart(spec, spec.base_point, (lo, hi), seed=plan.seed)
        except NotFlat as e:
            return CheckRecord("normal-form", description, SKIPPED, 0.0, {"reason": str(e)})
        residuals = normalform.verify_normal_form(cmap, spec, grid, detail=True)
        probes = plan.points(spec, pairs)
        order = normalform.order_residual(cmap, probes)
        result.artifacts["normal_form_pairs"] = [
            {"p": p, "new": new} for p, new in cmap.pairs(probes)]
        worst = max(residuals["darboux"], residuals["blocks"])
        failed = worst > NORMAL_FORM_TOLERANCE or order > ORDER_TOLERANCE
        witness = dict(residuals, order=order) if failed else None
        return CheckRecord("normal-form", description, FAIL if failed else PASS,
                           max(worst, order), witness)

    result.checks = [_guarded("normal-form", description, build)]
    return result


def kaehler_suite(spec, plan, nijenhuis_samples=10):
    result = SuiteResult("kaehler")

    def properties(alpha):
        def per_point(p):
            ac = kaehler.almost_complex(spec, alpha, p)
            worst_identity, worst = max(
                ((name, value) for name, value in ac.residuals.items()
                 if name != "ghat min eigenvalue"), key=lambda item: item[1])
            kernel = kaehler.kernel_property_residual(spec, p)
            if kernel > worst:
                worst_identity, worst = "L_alpha = joint kernel of the other J", kernel
            return worst, f"{worst_identity}: {worst:.3e}", None
        return per_point

    for alpha in range(1, spec.k + 1):
        check_id = f"kaehler-{alpha}"
        result.checks.append(_sampled(check_id, f"J_{alpha} is a compatible almost complex structure",
                                      spec, plan, properties(alpha), KAEHLER_TOLERANCE))

    artifacts = result.artifacts
    try:
        for alpha in range(1, spec.k + 1):
            ac = kaehler.almost_complex(spec, alpha, spec.base_point)
            artifacts[f"J_{alpha}_at_base"] = ac.J
            artifacts[f"ghat_{alpha}_at_base"] = ac.ghat
        points = plan.points(spec, min(plan.sample_count, nijenhuis_samples))
        nijenhuis = []
        for p in points:
            for alpha in range(1, spec.k + 1):
                values = [float(np.max(np.abs(kaehler.nijenhuis_at(spec, alpha, p, u, v))))
                          for u in range(spec.dim) for v in range(u + 1, spec.dim)]
                nijenhuis.append({"point": p, "alpha": alpha, "max": max(values, default=0.0)})
        artifacts["nijenhuis"] = nijenhuis
        if spec.metric is None or all(is_constant(f) for row in spec.metric for f in row):
            artifacts["levi_civita_deviation_at_base"] = \
                kaehler.levi_civita_comparison(spec, spec.base_point)
    except KsymError as e:
        artifacts["error"] = str(e)
    return result


def charclass_suite(spec, plan, probes=3):
    result = SuiteResult("charclass")
    n = spec.n

    def slots(p):
        value = charclass.slot_residual(spec, p)
        return value, f"curvature form off the dx^theta slots: {value:.3e}", None

    def wedge(indexed):
        index, p = indexed
        value = charclass.wedge_power_residual(spec, p, n + 1, probes, seed=plan.seed + index)
        return value, f"Omega^{n + 1} has size {value:.3e}", None

    def invariant(p):
        value = charclass.invariant_polynomial_residual(spec, p, n + 1)
        return value, f"tr(Omega^{n + 1}) has size {value:.3e}", None

    def build_wedge():
        points = plan.points(spec)
        results = map_ordered(wedge, list(enumerate(points)), plan.threads)
        return reduce_samples("wedge-power", f"Omega^{n + 1} vanishes", results, points,
                              CHARCLASS_TOLERANCE)

    result.checks = [
        _sampled("omega-slots", "curvature form lives on dx ^ theta slots",
                 spec, plan, slots, SLOT_TOLERANCE),
        _guarded("wedge-power", f"Omega^{n + 1} vanishes", build_wedge),
        _sampled("invariant-polynomial", f"tr(Omega^{n + 1}) vanishes",
                 spec, plan, invariant, CHARCLASS_TOLERANCE),
    ]
    try:
        labels = [spec.chart.frame_label(i) for i in range(spec.dim)]
        omega = charclass.curvature_two_form_at(spec, spec.base_point)
        result.artifacts["omega_at_base"] = omega.as_dict(labels)
        result.artifacts["trace_powers_at_base"] = {
            str(m): charclass.invariant_polynomial_residual(spec, spec.base_point, m)
            for m in range(1, n + 1)}
    except KsymError as e:
        result.artifacts["omega_at_base"] = {"error": str(e)}
    return result


SUITES = {
    "validate": validate_suite,
    "connection": connection_suite,
    "curvature": curvature_suite,
    "transport": transport_suite,
    "geodesic": geodesic_suite,
    "rectangle": rectangle_suite,
    "normal-form": normal_form_suite,
    "kaehler": kaehler_suite,
    "charclass": charclass_suite,
}


def run_all(spec, plan=None, options=None):
    """
    Validation first; the remaining suites only run on a spec that validates.
    options maps a suite name to extra keyword arguments.
    """
    plan = plan or SamplingPlan()
    options = options or {}
    results = [validate_suite(spec, plan)]
    if not results[0].passed:
        logger.info("validation failed, remaining suites skipped")
        return results
    for name, suite in SUITES.items():
        if name == "validate":
            continue
        results.append(suite(spec, plan, **options.get(name, {})))
    return results
