"""Process-wide runtime settings read from the environment."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class CgenSettings(BaseSettings):
    """Settings shared by the CLI and the parallel helpers (prefix ``CGEN_``)."""

    model_config = SettingsConfigDict(env_prefix="CGEN_", extra="ignore")

    log_level: str = Field(
        default="INFO",
        description="Level name passed to logging.basicConfig by the CLI.",
    )
    workers: int = Field(
        default=1,
        ge=1,
        description="Threads used for dataset generation and robustness grids.",
    )
    run_system_tests: bool = Field(
        default=False,
        description="Enable the slow acceptance tests under tests/system.",
    )
