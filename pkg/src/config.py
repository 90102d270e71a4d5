from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import List, Optional, Tuple

class Settings(BaseSettings):
    # Symbolic engine
    STEP_BUDGET: int = 1_000_000      # Rewrite/reduction step guard
    MAX_ORDER: int = 3                # Master-equation order budget
    DEGREE_BOUND_EXTRA: int = 2       # Ansatz bound = max constraint degree + this
    RANDOM_TRIALS: int = 1000         # Randomized property-suite size
    ALT2_TRIALS: int = 100            # Randomized Alternative-2 triples

    # Lattice defaults (a model file or CLI flag overrides these)
    LATTICE_DIM: int = 2
    LATTICE_SIZES: str = "8,16,32"    # Comma separated list of N
    SEED: int = 20240917
    FD_STEP: Optional[float] = None   # None = choose the step by sweep
    ODD_PARAMETERS: int = 2           # k, number of odd parameters
    ORDER_BAND_LOW: float = 1.7
    ORDER_BAND_HIGH: float = 2.3
    ORACLE_TOLERANCE: float = 1e-6    # analytic vs fd relative agreement
    ORACLE_STATES: int = 20
    ROUNDOFF_FLOOR: float = 1e-10     # Defects below this skip the order fit

    # Runner
    CHECK_WORKERS: int = 1            # 1 keeps reports bit-reproducible
    CHECK_TIMEOUT: int = 900          # Per-check timeout (seconds)
    OUTPUT_DIR: str = "reports"
    LOG_LEVEL: str = "INFO"
    REPORT_TIMINGS: bool = False      # runtime_ms in JSON breaks byte-identical reruns

    model_config = SettingsConfigDict(env_file='.env', env_file_encoding='utf-8')

    @property
    def lattice_sizes(self) -> List[int]:
        return [int(n) for n in self.LATTICE_SIZES.split(",") if n.strip()]

    @property
    def order_band(self) -> Tuple[float, float]:
        return (self.ORDER_BAND_LOW, self.ORDER_BAND_HIGH)

config = Settings()
