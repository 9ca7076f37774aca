import pathlib

import numpy as np
import pytest

from tiltreg import ModelConfig, build_design, fit, ingest_csv

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"
LIME_CSV = DATA_DIR / "lime.csv"

LIME_CONFIG = ModelConfig(
    response="Foliage", mu_terms=("Age", "Origin"), sigma_terms=()
)


@pytest.fixture(scope="session")
def lime_path() -> pathlib.Path:
    if not LIME_CSV.exists():
        pytest.fail(f"lime fixture missing at {LIME_CSV}")
    return LIME_CSV


@pytest.fixture(scope="session")
def lime_table(lime_path):
    return ingest_csv(lime_path, LIME_CONFIG)


@pytest.fixture(scope="session")
def lime_spec(lime_table):
    return build_design(lime_table, LIME_CONFIG)


@pytest.fixture(scope="session")
def lime_fit(lime_spec):
    return fit(lime_spec)


def simulate_intercept_only(n: int, mu: float, sigma: float, seed: int):
    """Intercept-only ModelSpec with responses drawn from the true model."""
    from tiltreg import MedianTiltedExponential, ModelSpec

    y = MedianTiltedExponential(mu, sigma).sample(n, seed)
    ones = np.ones((n, 1))
    return ModelSpec(response=y, mu_design=ones, sigma_design=ones)
