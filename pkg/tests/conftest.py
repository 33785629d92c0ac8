from pathlib import Path

import numpy as np
import pytest

from shaftwatch.core.data import Recording
from shaftwatch.core.data import Role
from shaftwatch.core.data import Synthetic
from shaftwatch.core.pipeline import SimulatedProvider
from shaftwatch.scheme.simulation import ProfileSpec
from shaftwatch.scheme.simulation import SimSpec


@pytest.fixture
def fixtures_folder() -> Path:
    """Get the fixtures folder path."""
    return Path(__file__).parent / "fixtures"


def make_recording(
    n: int,
    strength: int = 0,
    role: Role = Role.DEVELOPMENT,
    rpm: float = 1500.0,
    seed: int = 0,
) -> Recording:
    """Random vibration channels at a constant speed."""
    rng = np.random.default_rng(seed)
    return Recording(
        v_in=np.full(n, (rpm - 209.0) / 212.0),
        measured_rpm=np.full(n, rpm),
        vib1=rng.normal(size=n),
        vib2=rng.normal(size=n),
        vib3=rng.normal(size=n),
        unbalance_id=strength,
        role=role,
        source=Synthetic(seed),
    )


@pytest.fixture(scope="session")
def e2e_sim() -> SimSpec:
    """Full voltage grid with 2 s steps: 648 s of development, 168 s of evaluation data."""
    return SimSpec(
        seed=2020,
        development=ProfileSpec(step_seconds=2.0, repetitions=2),
        evaluation=ProfileSpec(step_seconds=2.0, repetitions=2),
    )


@pytest.fixture(scope="session")
def e2e_provider(e2e_sim: SimSpec) -> SimulatedProvider:
    return SimulatedProvider(e2e_sim)


@pytest.fixture(scope="session")
def small_sim() -> SimSpec:
    """Short recordings for fast pipeline tests, used with a 4096-sample warm-up."""
    return SimSpec(
        seed=7,
        development=ProfileSpec(step_seconds=0.2, repetitions=2),
        evaluation=ProfileSpec(step_seconds=0.5, repetitions=1),
    )


@pytest.fixture(scope="session")
def small_provider(small_sim: SimSpec) -> SimulatedProvider:
    return SimulatedProvider(small_sim, warmup_samples=4096)
