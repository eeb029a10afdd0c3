"""Shared fixtures: the calibrated toy process and random finite models."""
import logging

import numpy as np
import pytest

from models.distributions import CondDist, FiniteDist
from models.params import Model
from services import logger as logger_service
from services import toygen


@pytest.fixture(scope="session")
def calibrated():
    """(CalibrationReport, ToyProcess) for the default 0.5-nat process"""
    return toygen.calibrate_noise()


@pytest.fixture(scope="session")
def process(calibrated):
    return calibrated[1]


def random_rows(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n_out), size=n_in)


def random_model(rng: np.random.Generator, n: int, k: int) -> Model:
    """Encoder, decoder and marginal drawn uniformly from their simplices"""
    return Model(
        encoder=CondDist(random_rows(rng, n, k)),
        decoder=CondDist(random_rows(rng, k, n)),
        marginal=FiniteDist(rng.dirichlet(np.ones(k))),
    )


@pytest.fixture
def make_model():
    return random_model


@pytest.fixture(autouse=True)
def detach_log_handlers():
    """Handlers installed by setup_logger hold the per-test captured stderr"""
    yield
    root = logging.getLogger()
    for handler in logger_service._installed:
        root.removeHandler(handler)
    logger_service._installed.clear()
