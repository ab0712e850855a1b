"""Configuration for the dependency translation toolkit."""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Configuration class for toolkit settings."""

    # Enumeration bounds
    ENUMERATION_BOUND = int(os.getenv("DEPTRANS_ENUMERATION_BOUND", "8"))
    ORACLE_BOUND = 5
    ORACLE_CHAIN_LIMIT = 10**6

    # Numerics
    TOLERANCE = 1e-9
    PROBABILITY_DIGITS = 12

    # Estimation
    DEFAULT_LAMBDA = 0.0

    # Decoding
    DEFAULT_K = 5
    DEFAULT_MODE = "sum"
    MODES = ("sum", "max")

    # Logging
    LOG_LEVEL = os.getenv("DEPTRANS_LOG_LEVEL", "WARNING")

    # Bundled toy data
    DATA_DIR = Path(os.getenv(
        "DEPTRANS_DATA_DIR",
        Path(__file__).resolve().parent.parent / "data",
    ))

    @classmethod
    def validate(cls):
        """Validate that the configured values are usable."""
        if cls.ENUMERATION_BOUND < 1:
            raise ValueError(
                f"ENUMERATION_BOUND must be positive, got {cls.ENUMERATION_BOUND}. "
                "Check DEPTRANS_ENUMERATION_BOUND in your .env file."
            )
        if cls.ORACLE_BOUND < 1 or cls.ORACLE_CHAIN_LIMIT < 1:
            raise ValueError("Oracle bounds must be positive.")
        if cls.DEFAULT_MODE not in cls.MODES:
            raise ValueError(f"DEFAULT_MODE must be one of {cls.MODES}, got {cls.DEFAULT_MODE!r}")
        if cls.DEFAULT_LAMBDA < 0:
            raise ValueError(f"DEFAULT_LAMBDA must be nonnegative, got {cls.DEFAULT_LAMBDA}")
        return True


config = Config()
