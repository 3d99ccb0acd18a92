import logging
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


# ── Configuration (override via QLE_* env vars or .env) ──────────────────────

class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="QLE_", extra="ignore")

    max_quantum_parties: int = Field(10, ge=2)
    prune_threshold: float = Field(1e-12, gt=0)
    norm_tolerance: float = Field(1e-9, gt=0)
    unitarity_tolerance: float = Field(1e-12, gt=0)
    round_cap_factor: int = Field(10, ge=1)
    oracle_max_parties: int = Field(6, ge=1)
    oracle_max_depth: int = Field(10, ge=0)
    jobs: int = 1
    log_level: str = "INFO"
    progress: bool = False


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    settings = Settings()
    logger.debug(f"Loaded settings: {settings.model_dump()}")
    return settings
