"""
==============================================================================
Shape-Adaptive Propeller Toolkit - Configuration Module
==============================================================================
Centralized process-level configuration for the solver and optimizer.
Loads settings from environment variables with sensible defaults.

Run-specific inputs (material, layup, mesh, schedule, GA settings) are not
configured here; they come from a validated RunConfig JSON document
(see models.run_config).
==============================================================================
"""

import logging
import os
from typing import Optional
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _available_parallelism() -> int:
    if hasattr(os, "sched_getaffinity"):
        return max(1, len(os.sched_getaffinity(0)))
    return max(1, os.cpu_count() or 1)


class Config:
    """
    Application configuration class.

    Attributes:
        LOG_LEVEL: Root log level for the package loggers
        DEBUG_MODE: Force DEBUG logging
        THREADS: Worker threads for element and fitness evaluation
        OUTPUT_DIR: Default directory for CSV/VTK artifacts
        MAX_DOFS: Largest free-dof count handed to the direct sparse solver
    """

    # -------------------------------------------------------------------------
    # Logging
    # -------------------------------------------------------------------------
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()
    DEBUG_MODE: bool = os.getenv("DEBUG_MODE", "false").lower() == "true"

    # -------------------------------------------------------------------------
    # Numerical Settings
    # -------------------------------------------------------------------------
    THREADS: int = int(os.getenv("PROPELLER_THREADS", str(_available_parallelism())))
    MAX_DOFS: int = int(os.getenv("PROPELLER_MAX_DOFS", "50000"))

    # -------------------------------------------------------------------------
    # Path Configuration
    # -------------------------------------------------------------------------
    PROJECT_ROOT: str = os.path.dirname(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    )
    DATA_DIR: str = os.path.join(PROJECT_ROOT, "data")
    OUTPUT_DIR: str = os.getenv("PROPELLER_OUTPUT_DIR", "results")

    @classmethod
    def validate(cls) -> bool:
        """
        Validate the environment-derived settings.

        Returns:
            bool: True if configuration is valid

        Raises:
            ValueError: If a numeric setting is out of range
        """
        if cls.THREADS < 1:
            raise ValueError(f"PROPELLER_THREADS must be >= 1, got {cls.THREADS}")
        if cls.MAX_DOFS < 1:
            raise ValueError(f"PROPELLER_MAX_DOFS must be >= 1, got {cls.MAX_DOFS}")
        return True

    @classmethod
    def log_level(cls) -> int:
        """Numeric log level, DEBUG_MODE taking precedence."""
        if cls.DEBUG_MODE:
            return logging.DEBUG
        return getattr(logging, cls.LOG_LEVEL, logging.INFO)

    @classmethod
    def data_path(cls, filename: str) -> str:
        """Absolute path of a bundled fixture in data/."""
        return os.path.join(cls.DATA_DIR, filename)


def configure_logging(level: Optional[int] = None) -> None:
    """
    Configure root logging once for command-line runs.

    Args:
        level: Explicit level; defaults to Config.log_level()
    """
    logging.basicConfig(
        level=level if level is not None else Config.log_level(),
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


# Create singleton config instance
config = Config()
