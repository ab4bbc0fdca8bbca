# KSymplectic project.
#
# Chart conventions, spec documents, adapted frame and frame brackets.
#
import numpy as np
import pytest

from ksymplectic.common.errors import IndexOutOfRange, SpecError
from ksymplectic.geometry.chart import (ChartSpec, ManifoldSpec, adapted_frame_at, flat_index,
                                        frame_bracket_at, frame_data, spec_from_document)


def test_flat_index():
    chart = ChartSpec(2, 2)
    assert chart.dim == 6
    assert flat_index(chart, "x2") == 1
    assert flat_index(chart, ("y", 2, 1)) == 4
    assert flat_index(chart, "y3") == 4
    assert flat_index(ChartSpec(1, 1), ("y", 1, 1)) == 1
    with pytest.raises(IndexOutOfRange):
        flat_index(chart, "x3")
    with pytest.raises(IndexOutOfRange):
        flat_index(chart, ("y", 3, 1))


def test_labels():
    chart = ChartSpec(2, 2)
    assert [chart.frame_label(i) for i in range(6)] == ["X1", "X2", "Y1,1", "Y1,2", "Y2,1", "Y2,2"]
    assert chart.coordinate_label(5) == "y4"
    assert chart.y_block(2) == [4, 5]
    assert chart.block_of(3) == 1


def test_spec_document_errors():
    with pytest.raises(SpecError, match="k required"):
        spec_from_document({"n": 1, "t": {}})
    with pytest.raises(SpecError, match="index out of range"):
        spec_from_document({"n": 1, "k": 1, "t": {"t[2][1][1]": "x1"}})
    with pytest.raises(SpecError, match="base_point"):
        spec_from_document({"n": 1, "k": 1, "base_point": [0, 0, 0]})
    with pytest.raises(SpecError, match="unknown key"):
        spec_from_document({"n": 1, "k": 1, "colour": "red"})
    with pytest.raises(SpecError, match="bad t key"):
        spec_from_document({"n": 1, "k": 1, "t": {"t[1][1]": "x1"}})
    with pytest.raises(SpecError, match="symmetric"):
        spec_from_document({"n": 1, "k": 1, "metric": [[1, "x1"], [0, 1]]})


def test_spec_completes_t_table(curved):
    assert set(curved.t) == {(1, 1, 1)}
    spec = ManifoldSpec.build(2, 1, {(1, 1, 1): "y1"})
    assert len(spec.t) == 4
    assert np.array_equal(spec.base_point, np.zeros(4))
    lo, hi = spec.box()
    assert np.array_equal(lo, -np.ones(4)) and np.array_equal(hi, np.ones(4))


def test_adapted_frame(flat, curved):
    assert np.array_equal(adapted_frame_at(flat, [0.3, 0.1]), np.eye(2))
    F = adapted_frame_at(curved, [0.0, 2.0])
    assert np.allclose(F[:, 0], [1.0, -2.0])
    assert np.allclose(F[:, 1], [0.0, 1.0])
    rng = np.random.default_rng(0)
    spec = ManifoldSpec.build(1, 2, {(1, 1, 1): "sin(x1)*y1", (1, 2, 1): "sin(x1)*y2"})
    for p in rng.uniform(-1, 1, (10, 3)):
        assert np.linalg.det(adapted_frame_at(spec, p)) == pytest.approx(1.0)


def test_frame_bracket(flat, curved):
    assert not np.any(frame_bracket_at(flat, [0.2, 0.4], 0, 1))
    # [d/dy, d/dx - (y^2/2) d/dy] = -y d/dy
    assert np.allclose(frame_bracket_at(curved, [0.0, 2.0], 1, 0), [0.0, -2.0])


def test_frame_bracket_antisymmetry(random_k2):
    rng = np.random.default_rng(3)
    for p in rng.uniform(-1, 1, (50, 3)):
        C = frame_data(random_k2, p, second=False).C
        assert np.allclose(C, -C.transpose(0, 2, 1), atol=1e-14)
        # Y brackets vanish, [Y, X] has no X component
        assert not np.any(C[:, 1:, 1:])
        assert np.max(np.abs(C[0, 1:, 0])) < 1e-14


def test_bracket_of_x_fields_matches_finite_differences():
    spec = ManifoldSpec.build(2, 1, {(1, 1, 1): "x2*y1", (2, 1, 2): "x1*y2", (1, 1, 2): "x1*x2",
                                     (2, 1, 1): "x1*x2"})
    p = np.array([0.3, -0.2, 0.5, 0.7])
    h = 1e-5

    def X(q, i):
        return adapted_frame_at(spec, q)[:, i]

    def jacobian(i):
        J = np.zeros((4, 4))
        for l in range(4):
            step = np.zeros(4)
            step[l] = h
            J[:, l] = (X(p + step, i) - X(p - step, i)) / (2 * h)
        return J

    bracket = jacobian(1) @ X(p, 0) - jacobian(0) @ X(p, 1)
    components = np.linalg.solve(adapted_frame_at(spec, p), bracket)
    assert np.allclose(frame_bracket_at(spec, p, 0, 1), components, atol=1e-6)
