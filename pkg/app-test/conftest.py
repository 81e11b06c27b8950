"""Shared fixtures; puts the repository root on sys.path."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.models import ModelSpec  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance experiments (reduced horizons by default)")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def linear_spec():
    return ModelSpec(kind="linear", context_dim=2, arm_count=2)


@pytest.fixture
def tiny_mlp():
    return ModelSpec(kind="mlp", context_dim=3, arm_count=2, layer_widths=(5, 6, 1), activation="tanh")


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "results"
    path.mkdir()
    return path
