"""Shared fixtures: models are expensive to synthesize, so the baseline
statistics and a small fast scenario are built once per session."""
import math

import numpy as np
import pytest

from nfris.experiments import ScenarioSpec, NodeSpec, baseline_scenario


def toy_scenario() -> ScenarioSpec:
    """A 4x2 panel variant small enough for brute-force cross-checks."""
    return ScenarioSpec(
        wavelength=1e-3,
        n_h=4,
        n_v=2,
        spacing_wavelengths=10.0,
        tx=NodeSpec(5.0, math.radians(40), math.radians(-15), math.radians(2)),
        rx=NodeSpec(7.0, math.radians(-50), math.radians(-25), math.radians(2)),
        emi=NodeSpec(9.0, math.radians(-5), math.radians(15), math.radians(4)),
    )


@pytest.fixture(scope="session")
def baseline_model():
    return baseline_scenario().build("NF")


@pytest.fixture(scope="session")
def baseline_ff_model(baseline_model):
    return baseline_model.with_field("FF")


@pytest.fixture(scope="session")
def toy_model():
    return toy_scenario().build("NF")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
