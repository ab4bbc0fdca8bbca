# KSymplectic project.
#
# Structure operators, almost complex structures and the Nijenhuis tensor.
#
import numpy as np
import pytest

from ksymplectic.common.errors import IndexOutOfRange, NotSPD, OrthogonalityError, SingularMetric
from ksymplectic.geometry.chart import ManifoldSpec, adapted_frame_at
from ksymplectic.geometry.kaehler import (almost_complex, frame_metric_at, kernel_property_residual,
                                          levi_civita_comparison, nijenhuis_at,
                                          nijenhuis_fd_at, sqrt_spd, structure_operator)

ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_structure_operator(flat, curved):
    for spec in (flat, curved):
        op = structure_operator(spec, 1, [0.2, 0.7])
        assert op.indices == [1, 0]
        assert np.allclose(op.A, [[0.0, -0.5], [0.5, 0.0]])

    scaled = ManifoldSpec.build(1, 1, metric=[[4, 0], [0, 4]])
    assert np.allclose(structure_operator(scaled, 1, [0.0, 0.0]).A, [[0.0, -0.125], [0.125, 0.0]])

    with pytest.raises(IndexOutOfRange):
        structure_operator(flat, 2, [0.0, 0.0])


def test_almost_complex_flat(flat):
    ac = almost_complex(flat, 1, [0.0, 0.0])
    assert np.allclose(ac.J, ROTATION)
    assert np.allclose(ac.ghat, 0.5 * np.eye(2))
    assert ac.residuals["ghat min eigenvalue"] == pytest.approx(0.5)


def test_almost_complex_ignores_metric_scale():
    scaled = ManifoldSpec.build(1, 1, metric=[[4, 0], [0, 4]])
    ac = almost_complex(scaled, 1, [0.3, 0.3])
    assert np.allclose(ac.J, ROTATION)
    assert np.allclose(ac.ghat, 0.5 * np.eye(2))


def test_almost_complex_identities(random_k2, n2_curved):
    rng = np.random.default_rng(9)
    for spec in (random_k2, n2_curved):
        for p in rng.uniform(-1, 1, (5, spec.dim)):
            for alpha in range(1, spec.k + 1):
                ac = almost_complex(spec, alpha, p)
                identity = np.eye(2 * spec.n)
                assert np.allclose(ac.J @ ac.J, -identity, atol=1e-12)
                for name, residual in ac.residuals.items():
                    if name != "ghat min eigenvalue":
                        assert residual < 1e-10, name


def test_metric_errors(flat):
    skew = ManifoldSpec.build(1, 1, metric=[[1, 0.5], [0.5, 1]])
    with pytest.raises(OrthogonalityError):
        structure_operator(skew, 1, [0.0, 0.0])

    indefinite = ManifoldSpec.build(1, 1, metric=[[1, 0], [0, -1]])
    with pytest.raises(SingularMetric):
        structure_operator(indefinite, 1, [0.0, 0.0])


def test_sqrt_spd():
    assert np.allclose(sqrt_spd([[4.0, 0.0], [0.0, 9.0]]), [[2.0, 0.0], [0.0, 3.0]])
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    S = sqrt_spd(M)
    assert np.allclose(S, S.T)
    assert np.allclose(S @ S, M)
    assert np.all(np.linalg.eigvalsh(S) > 0)

    with pytest.raises(NotSPD):
        sqrt_spd([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NotSPD):
        sqrt_spd([[1.0, 0.0], [0.0, -1.0]])


def test_kernel_property(random_k2, flat):
    rng = np.random.default_rng(10)
    for p in rng.uniform(-1, 1, (5, 3)):
        assert kernel_property_residual(random_k2, p) < 1e-8
    assert kernel_property_residual(flat, [0.0, 0.0]) == 0.0


def test_nijenhuis_flat(flat):
    assert not np.any(nijenhuis_at(flat, 1, [0.1, 0.2], 0, 1))


def test_nijenhuis_antisymmetric_and_matches_differences(curved, random_k2):
    rng = np.random.default_rng(11)
    for spec in (curved, random_k2):
        for p in rng.uniform(-1, 1, (5, spec.dim)):
            for alpha in range(1, spec.k + 1):
                for u in range(spec.dim):
                    for v in range(spec.dim):
                        N = nijenhuis_at(spec, alpha, p, u, v)
                        assert np.allclose(N, -nijenhuis_at(spec, alpha, p, v, u), atol=1e-12)
                        assert np.max(np.abs(N - nijenhuis_fd_at(spec, alpha, p, u, v))) < 1e-5


def test_nijenhuis_with_varying_metric():
    spec = ManifoldSpec.build(1, 1, metric=[["1 + x1^2", 0], [0, "2 + y1^2"]])
    rng = np.random.default_rng(12)
    for p in rng.uniform(-0.5, 0.5, (3, 2)):
        N = nijenhuis_at(spec, 1, p, 0, 1)
        assert np.max(np.abs(N - nijenhuis_fd_at(spec, 1, p, 0, 1))) < 1e-5


def test_levi_civita_comparison_flat(flat):
    assert levi_civita_comparison(flat, [0.3, -0.4]) < 1e-12


def test_identity_metric_is_orthonormal_on_the_adapted_frame(x1_spec):
    p = [2.0, 0.0]
    assert x1_spec.metric is None
    assert np.array_equal(frame_metric_at(x1_spec, p), np.eye(2))
    # in coordinates that metric is F^-T F^-1, not the identity, once t != 0
    F = adapted_frame_at(x1_spec, p)
    coordinate = np.linalg.inv(F).T @ np.linalg.inv(F)
    assert np.allclose(coordinate, [[5.0, 2.0], [2.0, 1.0]])
    assert F[:, 0] @ coordinate @ F[:, 0] == pytest.approx(1.0)
