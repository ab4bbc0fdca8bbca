# KSymplectic project.
#
# Flat normal form: parallel frames, flow coordinates and their verification.
#
import numpy as np
import pytest

from ksymplectic.common.errors import NotFlat, PathDependence
from ksymplectic.geometry.normalform import (commutation_residual, default_order,
                                             flatness_residual, grid_points, normal_form_chart,
                                             order_residual, parallel_components, parallel_frame,
                                             require_flat, verify_normal_form)

PROBES = [(0.0, 0.0), (0.5, -0.25), (-0.8, 0.9), (0.3, 0.7), (-1.0, -1.0)]


def test_flatness(flat, x1_spec, curved):
    require_flat(flat)
    require_flat(x1_spec)
    curvature, transversal = flatness_residual(curved)
    assert curvature > 0.5 and transversal == pytest.approx(1.0)
    with pytest.raises(NotFlat):
        require_flat(curved)
    with pytest.raises(NotFlat):
        normal_form_chart(curved)


def test_parallel_frame(x1_spec):
    E = parallel_frame(x1_spec, [0.0, 0.0], [2.0, 0.3])
    assert np.allclose(E[:, 0], [1.0, -2.0], atol=1e-12)
    assert np.allclose(E[:, 1], [0.0, 1.0], atol=1e-12)


def test_transport_depends_on_path_when_curved(curved):
    with pytest.raises(PathDependence):
        parallel_components(curved, [0.0, 0.0], [0.5, 0.5])


def test_parallel_frame_commutes(x1_spec, random_k2):
    assert commutation_residual(x1_spec, [0.0, 0.0], [(0.4, 0.2), (-0.7, 0.1)]) < 1e-12
    rng = np.random.default_rng(17)
    assert commutation_residual(random_k2, [0.0, 0.0, 0.0], rng.uniform(-1, 1, (3, 3))) < 1e-7


def test_default_order(random_k2):
    assert default_order(random_k2) == (1, 2, 0)


def test_map_for_constant_t(t1_spec):
    cmap = normal_form_chart(t1_spec)
    for x, y in PROBES:
        assert np.allclose(cmap.parameters([x, y]), [x, y + x], atol=1e-8)
    assert np.allclose(cmap.point([0.5, 0.5]), [0.5, 0.0], atol=1e-12)
    assert np.allclose(cmap([0.2, 0.1]), [0.2, 0.3], atol=1e-8)


def test_map_for_linear_t(x1_spec):
    cmap = normal_form_chart(x1_spec)
    for x, y in PROBES:
        assert np.allclose(cmap.parameters([x, y]), [x, y + x * x / 2], atol=1e-8)
    q, J = cmap.jacobian([1.0, 0.0])
    assert np.allclose(q, [1.0, -0.5], atol=1e-12)
    assert np.allclose(J, [[1.0, 0.0], [-1.0, 1.0]], atol=1e-12)
    pairs = cmap.pairs(PROBES[:2])
    assert len(pairs) == 2 and np.allclose(pairs[1][1], [0.5, -0.25 + 0.125], atol=1e-8)


def test_verify_normal_form(flat, t1_spec, x1_spec):
    for spec in (flat, t1_spec, x1_spec):
        cmap = normal_form_chart(spec)
        assert verify_normal_form(cmap, spec, grid=4) < 1e-5
        detail = verify_normal_form(cmap, spec, grid=3, detail=True)
        assert set(detail) == {"darboux", "blocks"}


def test_order_independence(x1_spec, t1_spec):
    for spec in (x1_spec, t1_spec):
        cmap = normal_form_chart(spec)
        assert order_residual(cmap, PROBES) < 1e-9


def test_bad_order(t1_spec):
    with pytest.raises(ValueError):
        normal_form_chart(t1_spec, order=(0, 0))


def test_grid_points():
    region = (np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    points = grid_points(region, 3, 2)
    assert points.shape == (9, 2)
    assert points[0].tolist() == [-1.0, -1.0] and points[-1].tolist() == [1.0, 1.0]
    region3 = (-np.ones(3), np.ones(3))
    assert np.array_equal(grid_points(region3, 2, 3, seed=4), grid_points(region3, 2, 3, seed=4))
    assert grid_points(region3, 2, 3).shape == (4, 3)
