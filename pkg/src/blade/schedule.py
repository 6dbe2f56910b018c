"""
==============================================================================
Pitch Schedule
==============================================================================
Operating points of a shape-adaptive blade: the pressure at each point, its
difference from cruise, and the tip pitch the blade should reach there.

Stored in SI units and radians; `from_rows` takes the kPa / degree values
used in run configurations.
==============================================================================
"""

import math
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.errors import InvalidInputError

CRUISE_TOLERANCE_PA = 1e-9


class PitchPoint(BaseModel):
    """One operating point."""

    model_config = ConfigDict(frozen=True)

    pressure: float = Field(..., description="Absolute pressure P (Pa)")
    delta_pressure: float = Field(..., description="P - P_cruise (Pa)")
    pd_ratio: Optional[float] = Field(default=None, description="Pitch/diameter ratio (metadata)")
    phi_required: float = Field(..., description="Required tip pitch (rad)")
    delta_phi_required: float = Field(..., description="Required tip pitch change from cruise (rad)")
    weight: float = Field(default=1.0, ge=0, description="Relative weight w_i")

    @property
    def is_cruise(self) -> bool:
        return abs(self.delta_pressure) <= CRUISE_TOLERANCE_PA


class PitchSchedule(BaseModel):
    """Operating points with exactly one cruise entry (delta P = 0, delta phi = 0)."""

    model_config = ConfigDict(frozen=True)

    entries: List[PitchPoint] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_cruise(self) -> "PitchSchedule":
        cruise = [i for i, e in enumerate(self.entries) if e.is_cruise]
        if len(cruise) != 1:
            raise ValueError(f"schedule needs exactly one cruise entry with delta P = 0, found {len(cruise)}")
        if abs(self.entries[cruise[0]].delta_phi_required) > 1e-12:
            raise ValueError("cruise entry must have zero required pitch change")
        if sum(e.weight for e in self.entries) <= 0.0:
            raise ValueError("schedule weights must not all be zero")
        return self

    # -------------------------------------------------------------------------
    # Construction
    # -------------------------------------------------------------------------

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Tuple[float, float, float, float]],
        pd_ratios: Optional[Sequence[Optional[float]]] = None,
    ) -> "PitchSchedule":
        """
        Build from (P kPa, delta P kPa, required phi deg, weight) rows.

        The required pitch change is derived as phi - phi_cruise.

        Raises:
            InvalidInputError: No row with delta P = 0
        """
        cruise = [r for r in rows if abs(r[1]) <= CRUISE_TOLERANCE_PA]
        if len(cruise) != 1:
            raise InvalidInputError(f"expected one cruise row with delta P = 0, found {len(cruise)}")
        phi_cruise = cruise[0][2]
        pd = list(pd_ratios) if pd_ratios is not None else [None] * len(rows)
        entries = [
            PitchPoint(
                pressure=p * 1e3,
                delta_pressure=dp * 1e3,
                pd_ratio=pd[i],
                phi_required=math.radians(phi),
                delta_phi_required=math.radians(phi - phi_cruise),
                weight=w,
            )
            for i, (p, dp, phi, w) in enumerate(rows)
        ]
        return cls(entries=entries)

    @classmethod
    def reference(cls) -> "PitchSchedule":
        """B-series off-design schedule: 180/205/250 (cruise)/270/300 kPa, equal weights."""
        return cls.from_rows(
            [
                (180.0, -70.0, 12.56, 1.0),
                (205.0, -45.0, 14.30, 1.0),
                (250.0, 0.0, 16.00, 1.0),
                (270.0, 20.0, 17.66, 1.0),
                (300.0, 50.0, 19.30, 1.0),
            ],
            pd_ratios=[0.7, 0.8, 0.9, 1.0, 1.1],
        )

    def with_weight(self, pressure: float, weight: float) -> "PitchSchedule":
        """Copy with the weight of the entry at `pressure` (Pa) replaced."""
        hits = [i for i, e in enumerate(self.entries) if math.isclose(e.pressure, pressure, abs_tol=1e-6)]
        if not hits:
            raise InvalidInputError(f"no schedule entry at {pressure:g} Pa")
        entries = [
            e.model_copy(update={"weight": weight}) if i in hits else e
            for i, e in enumerate(self.entries)
        ]
        return PitchSchedule(entries=entries)

    # -------------------------------------------------------------------------
    # Queries
    # -------------------------------------------------------------------------

    @property
    def cruise_index(self) -> int:
        return next(i for i, e in enumerate(self.entries) if e.is_cruise)

    @property
    def cruise(self) -> PitchPoint:
        return self.entries[self.cruise_index]

    def off_design(self) -> List[PitchPoint]:
        return [e for e in self.entries if not e.is_cruise]

    def max_abs_delta_pressure(self) -> float:
        return max(abs(e.delta_pressure) for e in self.entries)

    def sorted_by_delta_pressure(self) -> List[PitchPoint]:
        return sorted(self.entries, key=lambda e: e.delta_pressure)
