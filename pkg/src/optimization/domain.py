"""
==============================================================================
Ply-Angle Domains
==============================================================================
Allowed fiber angles for a gene, always reduced to [0, pi):

    continuous  any angle
    integer     whole degrees 0..179
    multiples   k * step degrees, step dividing 180
    set         an explicit list of degrees

Genes are radians; the domain is configured in degrees.
==============================================================================
"""

import math
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

GRID_TOLERANCE_DEG = 1e-9


class DomainKind(str, Enum):
    """Kind of ply-angle domain."""
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    MULTIPLES = "multiples"
    SET = "set"


class AngleDomain(BaseModel):
    """Ply-angle domain of every gene."""

    model_config = ConfigDict(frozen=True)

    kind: DomainKind = Field(default=DomainKind.CONTINUOUS)
    step_deg: Optional[float] = Field(default=None, gt=0, description="Grid step for 'multiples'")
    values_deg: Optional[List[float]] = Field(default=None, description="Allowed angles for 'set'")

    @model_validator(mode="after")
    def _check_kind(self) -> "AngleDomain":
        if self.kind is DomainKind.MULTIPLES:
            if self.step_deg is None:
                raise ValueError("'multiples' domain needs step_deg")
            count = 180.0 / self.step_deg
            if abs(count - round(count)) > 1e-9:
                raise ValueError(f"step_deg {self.step_deg} does not divide 180 evenly")
        if self.kind is DomainKind.SET and not self.values_deg:
            raise ValueError("'set' domain needs a non-empty values_deg list")
        return self

    @classmethod
    def continuous(cls) -> "AngleDomain":
        return cls(kind=DomainKind.CONTINUOUS)

    @classmethod
    def integer(cls) -> "AngleDomain":
        return cls(kind=DomainKind.INTEGER)

    @classmethod
    def multiples(cls, step_deg: float) -> "AngleDomain":
        return cls(kind=DomainKind.MULTIPLES, step_deg=step_deg)

    @classmethod
    def finite_set(cls, values_deg: List[float]) -> "AngleDomain":
        return cls(kind=DomainKind.SET, values_deg=list(values_deg))

    @property
    def is_discrete(self) -> bool:
        return self.kind is not DomainKind.CONTINUOUS

    def grid(self) -> np.ndarray:
        """Allowed angles (rad), ascending; discrete kinds only."""
        if self.kind is DomainKind.INTEGER:
            deg = np.arange(180, dtype=float)
        elif self.kind is DomainKind.MULTIPLES:
            deg = np.arange(int(round(180.0 / self.step_deg)), dtype=float) * self.step_deg
        elif self.kind is DomainKind.SET:
            deg = np.unique(np.mod(np.asarray(self.values_deg, dtype=float), 180.0))
        else:
            raise ValueError("continuous domain has no grid")
        return np.radians(deg)

    # -------------------------------------------------------------------------
    # Gene operations
    # -------------------------------------------------------------------------

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Uniform random genes (rad)."""
        if self.is_discrete:
            return rng.choice(self.grid(), size=shape)
        return _reduce(rng.uniform(0.0, math.pi, size=shape))

    def mutate(self, rng: np.random.Generator, genes: np.ndarray, rate: float, scale: float) -> np.ndarray:
        """
        Per-gene mutation: Gaussian step (continuous) or resample (discrete).

        Args:
            genes: 1-D gene vector (rad)
            rate: Per-gene mutation probability
            scale: Gaussian sigma (rad), continuous domain only
        """
        out = np.array(genes, dtype=float)
        mask = rng.random(out.shape) < rate
        n = int(mask.sum())
        if n == 0:
            return out
        if self.is_discrete:
            out[mask] = rng.choice(self.grid(), size=n)
        else:
            out[mask] = _reduce(out[mask] + rng.normal(0.0, scale, size=n))
        return out

    def contains(self, theta: float) -> bool:
        """True when theta (rad) is an allowed angle after reduction to [0, pi)."""
        if not math.isfinite(theta):
            return False
        if not self.is_discrete:
            return True
        deg = math.degrees(float(_reduce(np.array([theta]))[0]))
        grid = np.degrees(self.grid())
        dist = np.abs(grid - deg)
        dist = np.minimum(dist, 180.0 - dist)
        return bool(dist.min() <= GRID_TOLERANCE_DEG)

    def snap(self, theta: float) -> float:
        """Nearest allowed angle (rad), distance measured modulo pi."""
        reduced = float(_reduce(np.array([theta]))[0])
        if not self.is_discrete:
            return reduced
        grid = self.grid()
        dist = np.abs(grid - reduced)
        dist = np.minimum(dist, math.pi - dist)
        return float(grid[int(np.argmin(dist))])


def _reduce(theta: np.ndarray) -> np.ndarray:
    reduced = np.mod(theta, math.pi)
    return np.where(reduced >= math.pi, 0.0, reduced) + 0.0
