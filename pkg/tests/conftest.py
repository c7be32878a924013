import logging

import numpy as np
import pytest

from core.catalog import lookup
from core.schemas import AnalysisConfig
from utils.timing import reset_stage_metrics

FAST_CONFIG = dict(
    seed=1234,
    gamma_grid_points=201,
    ratio_grid_points=201,
    lambda_grid_points=15,
    oracle_samples_f=60,
    oracle_samples_eta=4,
    oracle_ladder_points=6,
)


@pytest.fixture
def fast_cfg() -> AnalysisConfig:
    """Уменьшенные сетки и выборки оракула."""
    return AnalysisConfig(**FAST_CONFIG)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240521)


@pytest.fixture
def catalog_energy():
    def get(name: str):
        return lookup(name).energy
    return get


@pytest.fixture(autouse=True)
def clean_state():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    reset_stage_metrics()
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
