import logging
from functools import lru_cache
from typing import Optional

from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings

logger = logging.getLogger(__name__)

_DEFAULT_TOLERANCE = 1e-12
# Above this width the inversion is still conservative but visibly loose.
_LOOSE_TOLERANCE = 1e-9


class Settings(BaseSettings):
    app_name: str = "gibbscert"
    app_version: str = "1.0.0"

    inversion_tolerance: float = Field(default=_DEFAULT_TOLERANCE, gt=0.0, lt=0.5)
    inversion_max_iterations: int = Field(default=200, ge=1)

    default_delta: float = Field(default=0.05, gt=0.0, lt=1.0)
    default_trials: int = Field(default=2000, ge=1)
    default_seed: Optional[int] = Field(default=None, ge=0, lt=2**64)

    max_workers: int = Field(default=4, ge=1)

    float_digits: int = Field(default=17, ge=1, le=17)
    certificate_schema_version: str = "1"
    source_date_epoch: int = Field(
        default=0,
        ge=0,
        validation_alias=AliasChoices(
            "GIBBSCERT_SOURCE_DATE_EPOCH", "SOURCE_DATE_EPOCH"
        ),
    )

    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    model_config = {
        "env_prefix": "GIBBSCERT_",
        "env_file": ".env",
        "extra": "ignore",
    }


@lru_cache
def get_settings() -> Settings:
    settings = Settings()
    if settings.inversion_tolerance > _LOOSE_TOLERANCE:
        logger.warning(
            "GIBBSCERT_INVERSION_TOLERANCE is above 1e-9 - certificates stay valid "
            "but every bound may be inflated by up to the configured tolerance.",
            extra={"inversion_tolerance": settings.inversion_tolerance},
        )
    return settings
