"""Pytest fixtures for fieldgen tests."""

import numpy as np
import pytest
from unittest.mock import MagicMock


@pytest.fixture
def arm():
    """Default two-link arm with the hand at the origin in the home posture."""
    from fieldgen.core.arm import ArmParams

    return ArmParams()


@pytest.fixture
def template():
    """Standard-controller trial template with a rigid channel."""
    from fieldgen.core.trial import TrialTemplate

    return TrialTemplate()


@pytest.fixture
def default_config():
    """Experiment config with every field at its default."""
    from fieldgen.config import ExperimentConfig

    return ExperimentConfig()


@pytest.fixture
def impedance_template(default_config):
    """Impedance-controller template around the default curved baselines."""
    from fieldgen.core.controllers import ModelKind

    return default_config.to_template(ModelKind.IMPEDANCE)


@pytest.fixture(scope="session")
def impedance_response():
    """Basis-simulation response for the default config (32 clamp trials)."""
    from fieldgen.config import ExperimentConfig
    from fieldgen.core.controllers import ModelKind
    from fieldgen.core.fitting import ImpedanceResponse

    return ImpedanceResponse.build(ExperimentConfig().to_template(ModelKind.IMPEDANCE))


@pytest.fixture
def mock_config_provider(default_config):
    """Mock config provider returning the default config."""
    from fieldgen.tools._core.base import ConfigProvider

    provider = MagicMock(spec=ConfigProvider)
    provider.get_config.return_value = default_config
    return provider


@pytest.fixture
def standard_indices():
    """Factory for noise-free standard-model indices.

    Test-phase indices follow A * exp(-(d - g - mu)^2 / 2 sigma^2); baseline
    indices are zero. One index per (group, direction, phase).
    """
    from fieldgen.core.analysis import AdaptationIndex
    from fieldgen.core.controllers import ModelKind, RepresentationParams
    from fieldgen.core.protocol import DIRECTIONS, Phase

    def _factory(groups=DIRECTIONS, amplitude=0.9, sigma=35.0, mu=10.0, baseline=0.0):
        indices = []
        trial = 0
        for group in groups:
            rep = RepresentationParams(ModelKind.STANDARD, amplitude, sigma, group, mu)
            for direction in DIRECTIONS:
                indices.append(AdaptationIndex(baseline, direction, Phase.BASELINE, group, trial))
                value = baseline + float(rep.fraction(direction))
                indices.append(AdaptationIndex(value, direction, Phase.TEST, group, trial + 1))
                trial += 2
        return indices

    return _factory


@pytest.fixture
def fake_record():
    """Factory for a cheap TrialRecord echoing a TrialSpec (no integration)."""
    from fieldgen.core.trial import TrialCondition, TrialRecord

    def _factory(spec, n=25):
        t = np.arange(n) / spec.log_rate
        zeros = np.zeros((n, 2))
        p = np.column_stack([np.linspace(0.0, 0.1, n), np.zeros(n)])
        return TrialRecord(
            t=t, p=p, v=zeros.copy(), f=zeros.copy(), q=zeros.copy(),
            condition=TrialCondition.from_spec(spec),
        )

    return _factory
