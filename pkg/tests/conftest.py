"""Shared fixtures for the hamgp test suite."""

import numpy as np
import pytest

from hamgp.basis import DomainBox, SymmetryMode, build_expansion
from hamgp.hamiltonian import NoiseSpec
from hamgp.learn import GaussianHyperPrior, HyperPrior
from hamgp.simulate import OscillatorTruth


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical oracles and long chains")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def truth():
    return OscillatorTruth()


@pytest.fixture
def oscillator_structure(truth):
    return truth.structure()


@pytest.fixture
def small_expansion():
    return build_expansion(DomainBox((4.0, 4.0)), 6)


@pytest.fixture
def antisymmetric_expansion():
    return build_expansion(DomainBox((8.0, 8.0)), 15, symmetry=SymmetryMode.ANTISYMMETRIC)


@pytest.fixture
def state_noise():
    return NoiseSpec.isotropic(2, process_std=1e-2, measurement_std=1e-2, observed=(0, 1))


@pytest.fixture
def broad_hyper_prior():
    return HyperPrior({
        "signal_variance": GaussianHyperPrior(0.0, 3.0),
        "length_scale": GaussianHyperPrior(0.0, 3.0),
        "d": GaussianHyperPrior(-1.0, 3.0),
    })
