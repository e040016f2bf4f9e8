"""
Shared fixtures and the ``--slow`` switch for the long-running experiments.
"""
import numpy as np
import pytest

from airsubspace.models import FrameConfig, RoomSpec, SceneGeometry
from airsubspace.rir import generate_corpus


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False, help="run slow acceptance experiments")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running experiment, needs --slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip = pytest.mark.skip(reason="needs --slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_frame():
    return FrameConfig(filter_length=32, frame_shift=32, num_channels=2, fs=8000)


@pytest.fixture
def small_room():
    return RoomSpec(dimensions=(6.0, 5.0, 3.5), t60=0.2, fs=8000, air_length=64)


@pytest.fixture
def geometry():
    return SceneGeometry()


@pytest.fixture
def small_training(small_room, geometry, small_frame):
    return generate_corpus(small_room, geometry, small_frame, count=20, seed=7)
