"""
Settings for the HTTP surface.

Values come from the environment (prefix MGINF_) or from a .env file in the
working directory (read through python-dotenv). The command-line tool does
not read these.
"""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="MGINF_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    # /simulate refuses larger requests; the CLI has no such cap
    max_replications: int = Field(default=200_000, ge=1)
    max_workers: int = Field(default=4, ge=1)


@lru_cache
def get_settings() -> Settings:
    return Settings()
