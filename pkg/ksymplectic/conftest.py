# KSymplectic project.
#
# Shared pytest fixtures: the fixture specs built in memory and the bundled demo
# spec files.
#
import os

import pytest

from ksymplectic.geometry.chart import ManifoldSpec

SPEC_DIR = os.path.join(os.path.dirname(__file__), "demo", "specs")


def spec_path(name):
    return os.path.join(SPEC_DIR, f"{name}.json")


@pytest.fixture
def flat():
    return ManifoldSpec.build(1, 1, name="flat")


@pytest.fixture
def curved():
    return ManifoldSpec.build(1, 1, {(1, 1, 1): "y1^2/2"}, name="curved")


@pytest.fixture
def x1_spec():
    return ManifoldSpec.build(1, 1, {(1, 1, 1): "x1"}, name="x1")


@pytest.fixture
def t1_spec():
    return ManifoldSpec.build(1, 1, {(1, 1, 1): "1"}, name="t1")


@pytest.fixture
def random_k2():
    return ManifoldSpec.build(1, 2, {(1, 1, 1): "sin(x1)*y1 + x1^2",
                                     (1, 2, 1): "sin(x1)*y2 + cos(x1)"}, name="random-k2")


@pytest.fixture
def n2_curved():
    return ManifoldSpec.build(2, 1, {(1, 1, 1): "y1^2/2", (2, 1, 2): "y2^2/2"}, name="n2-curved")


@pytest.fixture
def valid_specs(flat, x1_spec, curved, random_k2):
    return [flat, x1_spec, curved, random_k2]
