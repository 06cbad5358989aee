from pydantic_settings import BaseSettings
from typing import List, Optional


class Settings(BaseSettings):
    PROJECT_NAME: str = "Positivstellensatz Workbench"
    API_V1_STR: str = "/api"

    # Environment
    ENVIRONMENT: str = "development"  # Options: development, production, test
    LOG_LEVEL: str = "INFO"
    CORS_ORIGINS: List[str] = ["*"]

    # Sampling
    DEFAULT_SEED: int = 20240607
    DOMAIN_SAMPLES: int = 4000
    VARIETY_SAMPLES: int = 4000
    REGULARITY_SAMPLES: int = 10000
    MIN_ACCEPTANCE_RATE: float = 1e-4
    SAMPLING_WORKERS: int = 1

    # Tolerances
    ZERO_TOL: float = 1e-5
    SIGN_TOL: float = 1e-5
    NEIGHBORHOOD_RADIUS: float = 0.05  # delta for gap reports and closure checks
    RELATION_TOL: float = 1e-7
    POSITIVITY_TOL: float = 1e-7

    # Gauss-Newton projection
    GN_MAX_ITER: int = 50
    GN_TOL: float = 1e-10

    # Semidefinite solver
    SDP_TOL: float = 1e-7
    SDP_MAX_ITER: int = 100
    SDP_MAX_BLOCK: int = 200
    MONOMIAL_CAP: int = 2000

    # Certification
    D_MAX: int = 4
    DENOMINATOR_BOUND: int = 2 ** 32
    NUMERIC_ACCEPT: float = 1e-6
    REFUTE_THRESHOLD: float = 1e-3

    # Regularity checks returning Undecided halt the run unless this is set
    FORCE_UNDECIDED: bool = False

    # Optional env file passed with --config
    CONFIG_FILE: Optional[str] = None

    class Config:
        case_sensitive = True
        env_file = ".env"


settings = Settings()


def load_settings(config_file: Optional[str] = None, **overrides) -> Settings:
    """Build settings from an env file plus explicit overrides.

    Explicit overrides win over the env file, which wins over the process
    environment and the defaults.
    """
    base = Settings(_env_file=config_file) if config_file else Settings()
    clean = {key: value for key, value in overrides.items() if value is not None}
    if not clean:
        return base
    return base.model_copy(update=clean)
