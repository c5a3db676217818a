"""
Configuration management for madsopt.
"""

from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""
    
    # Logging
    log_level: str = Field(default="INFO", alias="MADSOPT_LOG_LEVEL")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        alias="MADSOPT_LOG_FORMAT",
    )
    
    # Hot restart is triggered by this POSIX signal
    hot_restart_signal: str = Field(default="SIGUSR1", alias="MADSOPT_HOT_RESTART_SIGNAL")
    
    # Cache file checkpoints (iterations between writes)
    checkpoint_every: int = Field(default=10, ge=1, alias="MADSOPT_CHECKPOINT_EVERY")
    
    # Blackbox processes
    blackbox_timeout: Optional[float] = Field(default=None, gt=0, alias="MADSOPT_BLACKBOX_TIMEOUT")
    
    # Evaluation workers used when a parameter file does not set NB_THREADS
    default_threads: int = Field(default=1, ge=1, alias="MADSOPT_DEFAULT_THREADS")
    
    model_config = {
        "env_file": ".env",
        "case_sensitive": False,
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }


# Global settings instance
settings = Settings()
