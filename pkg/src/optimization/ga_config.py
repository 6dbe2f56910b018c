"""
==============================================================================
Genetic Algorithm Settings
==============================================================================
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator


class GAConfig(BaseModel):
    """GA parameters; mutation_scale_deg applies to the continuous domain only."""

    model_config = ConfigDict(frozen=True)

    population_size: int = Field(default=60, ge=2)
    generations: int = Field(default=200, ge=1)
    crossover_rate: float = Field(default=0.9, ge=0, le=1)
    mutation_rate: float = Field(default=0.05, ge=0, le=1, description="Per-gene probability")
    mutation_scale_deg: float = Field(default=10.0, gt=0, description="Gaussian sigma (deg)")
    elitism_count: int = Field(default=2, ge=0)
    tournament_size: int = Field(default=3, ge=1)
    rng_seed: int = Field(default=0, ge=0)
    stall_generations: int = Field(default=40, ge=1, description="Stop after this many generations without improvement")
    log_every: int = Field(default=10, ge=1, description="INFO summary interval (generations)")

    @model_validator(mode="after")
    def _check_sizes(self) -> "GAConfig":
        if self.elitism_count >= self.population_size:
            raise ValueError("elitism_count must be smaller than population_size")
        if self.tournament_size > self.population_size:
            raise ValueError("tournament_size cannot exceed population_size")
        return self

    @property
    def mutation_scale(self) -> float:
        """Gaussian sigma (rad)."""
        return math.radians(self.mutation_scale_deg)
