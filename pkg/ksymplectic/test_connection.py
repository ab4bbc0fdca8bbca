# KSymplectic project.
#
# Canonical connection: coefficients, torsion, curvature, transport, geodesics.
#
import numpy as np
import pytest

from ksymplectic.common.errors import CompatibilityError, DimensionMismatch, SingularSystem
from ksymplectic.geometry.chart import ManifoldSpec
from ksymplectic.geometry.connection import (Curve, affine_transversal_residual,
                                             coeffs_from_defining_relations,
                                             connection_coeffs_at, curvature_at,
                                             curvature_closed_form_at, geodesic,
                                             nabla_omega_residual, parallel_transport, torsion_at)
from ksymplectic.geometry.ehresmann import horizontal_integral_curve


def test_coefficients_for_quadratic_t(curved):
    gamma = connection_coeffs_at(curved, [0.0, 2.0]).gamma
    # nabla_X Y = y Y, nabla_X X = -y X
    assert gamma[1, 0, 1] == pytest.approx(2.0)
    assert gamma[0, 0, 0] == pytest.approx(-2.0)
    # nabla_Y vanishes on Y; nabla_Y X = [Y, X]_Q = 0 here
    assert not np.any(gamma[:, 1, :])


def test_flat_connection_vanishes(flat):
    gamma = connection_coeffs_at(flat, [0.4, -0.3]).gamma
    assert not np.any(gamma)
    assert not np.any(torsion_at(flat, [0.4, -0.3]))


def test_uniqueness(curved, random_k2, n2_curved):
    rng = np.random.default_rng(5)
    for spec in (curved, random_k2, n2_curved):
        for p in rng.uniform(-1, 1, (10, spec.dim)):
            closed = connection_coeffs_at(spec, p).gamma
            rebuilt = coeffs_from_defining_relations(spec, p).gamma
            assert np.max(np.abs(closed - rebuilt)) < 1e-10


def test_torsion_and_parallel_forms(curved, random_k2, n2_curved):
    rng = np.random.default_rng(6)
    for spec in (curved, random_k2, n2_curved):
        n = spec.n
        for p in rng.uniform(-1, 1, (10, spec.dim)):
            T = torsion_at(spec, p)
            # mixed torsion and torsion along the leaves of F vanish
            assert np.max(np.abs(T[:, :n, n:])) < 1e-12
            assert np.max(np.abs(T[:, n:, n:])) < 1e-12
            assert nabla_omega_residual(spec, p) < 1e-10


def test_curvature_of_quadratic_t(curved):
    R = curvature_at(curved, [0.3, -0.2])
    # R(Y, X) Y = Y and R(Y, X) X = -X
    assert R[1, 1, 0, 1] == pytest.approx(1.0)
    assert R[0, 1, 0, 0] == pytest.approx(-1.0)
    assert R[1, 0, 1, 1] == pytest.approx(-1.0)
    assert affine_transversal_residual(curved, [0.3, -0.2]) == pytest.approx(1.0)


def test_curvature_closed_form_matches_bracket_form(curved, random_k2, n2_curved):
    rng = np.random.default_rng(7)
    for spec in (curved, random_k2, n2_curved):
        for p in rng.uniform(-1, 1, (10, spec.dim)):
            assert np.max(np.abs(curvature_at(spec, p) - curvature_closed_form_at(spec, p))) < 1e-10


def test_rigidity_for_two_forms(random_k2):
    rng = np.random.default_rng(8)
    for p in rng.uniform(-1, 1, (10, 3)):
        assert np.max(np.abs(curvature_at(random_k2, p))) < 1e-12


def test_incompatible_slopes_are_rejected():
    spec = ManifoldSpec.build(1, 2, {(1, 1, 1): "y1^2", (1, 2, 1): "y2"})
    with pytest.raises(CompatibilityError):
        connection_coeffs_at(spec, [0.0, 1.0, 0.0])


def test_degenerate_user_form():
    spec = ManifoldSpec.build(1, 1, forms=[{("x1", "y1"): "x1"}])
    with pytest.raises(SingularSystem):
        coeffs_from_defining_relations(spec, [0.0, 0.5])


def test_transport_along_horizontal_curve(curved):
    # along X from (0, 1): y = 2/(s + 2) and Y scales by exp(-int y) = 1/4 at s = 2
    curve = horizontal_integral_curve(curved, [0.0, 1.0], [1.0], 2.0, 2000)
    assert curve.end[1] == pytest.approx(0.5, abs=1e-9)
    v = parallel_transport(curved, curve, [0.0, 1.0], 2000)
    assert v[0] == pytest.approx(0.0, abs=1e-12)
    assert v[1] == pytest.approx(0.25, abs=1e-6)


def test_transport_along_vertical_line_is_trivial(curved):
    curve = Curve.line([0.1, -0.5], [0.1, 0.5])
    v = parallel_transport(curved, curve, [1.0, -0.125], 20)
    # X at the start transported vertically stays X
    assert np.allclose(v, [1.0, -0.125], atol=1e-12)


def test_transport_rejects_bad_vectors(curved):
    with pytest.raises(DimensionMismatch):
        parallel_transport(curved, Curve.line([0.0, 0.0], [0.0, 1.0]), [1.0], 4)


def test_geodesic_along_x(curved):
    # x + 2 = 4/(2 - s) and y = 2/(x + 2) for the geodesic starting at X
    v = np.array([1.0, -0.5])
    coarse = geodesic(curved, [0.0, 1.0], v, 0.5, 200).end
    fine = geodesic(curved, [0.0, 1.0], v, 0.5, 400).end
    assert np.max(np.abs(coarse - fine)) < 1e-8
    assert np.allclose(fine, [2.0 / 3.0, 0.75], atol=1e-8)


def test_vertical_geodesic_is_a_line(curved):
    c = geodesic(curved, [0.3, 0.2], [0.0, 1.0], 1.0, 50)
    assert np.all(c.points[:, 0] == 0.3)
    assert np.allclose(c.points[:, 1], 0.2 + c.times, atol=1e-14)


def test_geodesics_tangent_to_leaves_stay_in_them(random_k2, n2_curved):
    for spec, p0, v0 in ((random_k2, [0.4, -0.3, 0.2], [0.0, 0.6, -0.4]),
                         (n2_curved, [0.1, -0.2, 0.3, 0.5], [0.0, 0.0, 0.5, -0.7])):
        c = geodesic(spec, p0, v0, 1.0, 100)
        n = spec.n
        assert np.max(np.abs(c.points[:, :n] - np.asarray(p0)[:n])) < 1e-12
        assert np.max(np.abs(c.velocities[:, :n])) < 1e-12
        # the curve does move inside the leaf
        assert np.max(np.abs(c.end[n:] - np.asarray(p0)[n:])) > 0.1
