from pydantic_settings import BaseSettings
from pydantic import ConfigDict
from typing import Optional


class Settings(BaseSettings):
    # Environment configuration
    ENVIRONMENT: str = "development"

    # Logging configuration
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s [%(levelname)8s] %(name)s: %(message)s"

    # Worker threads for sweeps and tomography sampling
    NUM_THREADS: int = 1

    # Discretization defaults
    DEFAULT_NX: int = 256
    DEFAULT_NP: int = 256
    DEFAULT_NMAX: int = 16
    DEFAULT_MMAX: int = 16

    # Numerical tolerances
    TRUNCATION_TOLERANCE: float = 1e-8   # max mass allowed in Zak edge cells
    NULL_NORM_TOLERANCE: float = 1e-12   # below this a projected state is null
    SERIES_TOLERANCE: float = 1e-16      # Θ₃ series cut-off
    REALNESS_TOLERANCE: float = 1e-10    # imaginary residue audited on W

    # Quality factor
    FRINGE_THRESHOLD: float = 0.2

    # Output
    OUTPUT_DIR: str = "output"
    PLOT_COLORMAP: str = "RdBu_r"
    PLOT_DPI: int = 150
    DEFAULT_SEED: Optional[int] = None

    def worker_count(self) -> int:
        """
        Number of workers for thread pools, never below one.
        """
        return max(1, int(self.NUM_THREADS))

    model_config = ConfigDict(
        env_file=".env",
        extra="ignore"  # unrelated variables in .env are ignored
    )


settings = Settings()
