from pathlib import Path

import pytest

from gibbscert.config import Settings, get_settings
from gibbscert.models import SyntheticKind, SyntheticPosteriorSpec
from gibbscert.repositories import build_synthetic

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Each test sees default settings regardless of the caller's environment."""
    for name in ("SOURCE_DATE_EPOCH", "GIBBSCERT_SOURCE_DATE_EPOCH", "GIBBSCERT_DEFAULT_SEED",
                 "GIBBSCERT_INVERSION_TOLERANCE", "GIBBSCERT_MAX_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def settings() -> Settings:
    return get_settings()


@pytest.fixture
def serial_settings() -> Settings:
    return Settings(max_workers=1)


@pytest.fixture
def loss_matrix_path() -> Path:
    return DATA_DIR / "loss_matrix_small.csv"


@pytest.fixture
def golden_certificate_path() -> Path:
    return DATA_DIR / "golden_certificate.json"


@pytest.fixture
def bernoulli_spec() -> SyntheticPosteriorSpec:
    return SyntheticPosteriorSpec(
        kind=SyntheticKind.BERNOULLI_PER_EXAMPLE,
        means=[0.1, 0.5, 0.3, 0.0, 1.0, 0.25, 0.6, 0.45],
    )


@pytest.fixture
def point_mass():
    """Factory: point-mass posterior with the given per-example losses."""

    def build(means, seed=0):
        spec = SyntheticPosteriorSpec(kind=SyntheticKind.POINT_MASS, means=list(means))
        return build_synthetic(spec, seed)

    return build
