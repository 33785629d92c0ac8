import typing
from pathlib import Path

from pydantic_settings import BaseSettings
from pydantic_settings import SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SHAFT_")

    PROJECT_NAME: str = "shaftwatch"

    # Fallback for --data when the flag is omitted
    DATA_DIR: Path | None = None
    OUT_DIR: Path = Path("out")

    # Default seed of every command
    SEED: int = 2020
    N_JOBS: int = 1
    LOG_LEVEL: str = "INFO"

    WARMUP_SAMPLES: int = 50_000


# Do not import and access this directly, use settings instead
_settings = Settings()


class SettingsProxy:
    def __init__(self, get_settings: typing.Callable[[], Settings]):
        self._get_settings = get_settings

    def __getattr__(self, item: str) -> typing.Any:
        global_settings = self._get_settings()
        return getattr(global_settings, item)


settings: Settings = SettingsProxy(lambda: _settings)


def reload_settings() -> Settings:
    """Re-read the environment, e.g. after a test patched SHAFT_* variables."""
    global _settings
    _settings = Settings()
    return _settings
