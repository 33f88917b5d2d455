from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="KRUSCO_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Settings
    app_name: str = Field(default="krusco")
    app_version: str = Field(default="0.1.0")
    debug: bool = Field(default=False)
    log_level: str = Field(default="INFO")
    log_file: Optional[str] = Field(default=None)

    # Parallelism - caps BLAS/OpenMP pools for every CLI command
    threads: Optional[int] = Field(default=None, ge=1)

    # Numerics
    fft_threshold: int = Field(default=64, ge=0)
    circulant_budget: int = Field(default=10**7, ge=1)


# Global settings instance
settings = Settings()
