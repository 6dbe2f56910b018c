"""
==============================================================================
Blade Response - Tip Pitch and Rake Extraction
==============================================================================
Turns plate displacement fields into blade quantities measured on the tip
chord (the two tip marker nodes):

    tip pitch change   atan2(w_LE - w_TE, tip_chord)   (chord method)
                       -theta_y averaged at the markers (rotation method)
    rake deflection    (w_LE + w_TE) / 2

Positive pitch change means the leading edge moves further along +z than
the trailing edge.
==============================================================================
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from blade.schedule import PitchSchedule
from fem.assembly import LoadCase, PlateModel
from fem.solver import DisplacementField, SolverContext
from laminate.clt import LaminateStiffness, build_stiffness
from laminate.materials import Layup
from meshing.mesh import Mesh
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_REFERENCE_PRESSURE = 1.0e3  # Pa


class PitchExtraction(str, Enum):
    """How the tip pitch change is measured."""
    CHORD = "chord"
    ROTATION = "rotation"


# =============================================================================
# Point Measures
# =============================================================================

def _tip_markers(mesh: Mesh) -> Tuple[int, int]:
    if not mesh.has_tip_markers:
        raise ConfigurationError("mesh declares no tip_leading/tip_trailing markers")
    if mesh.tip_leading == mesh.tip_trailing:
        raise ConfigurationError("tip_leading and tip_trailing must differ")
    return mesh.tip_leading, mesh.tip_trailing


def tip_pitch_change(
    mesh: Mesh,
    disp: DisplacementField,
    method: PitchExtraction = PitchExtraction.CHORD,
) -> float:
    """
    Tip pitch change (rad).

    Raises:
        ConfigurationError: Mesh has no tip markers
    """
    le, te = _tip_markers(mesh)
    if PitchExtraction(method) is PitchExtraction.ROTATION:
        return float(-0.5 * (disp.theta_y[le] + disp.theta_y[te]))
    return math.atan2(float(disp.w[le] - disp.w[te]), mesh.tip_chord)


def rake_deflection(mesh: Mesh, disp: DisplacementField) -> float:
    """Mean transverse deflection of the tip markers (m)."""
    le, te = _tip_markers(mesh)
    return float(0.5 * (disp.w[le] + disp.w[te]))


def twist_rate(
    model: PlateModel,
    laminate: LaminateStiffness,
    reference_pressure: float = DEFAULT_REFERENCE_PRESSURE,
    context: Optional[SolverContext] = None,
) -> float:
    """
    Linearized tip twist per unit uniform pressure (rad/Pa).

    s = (w_LE - w_TE) / (tip_chord * P_ref); the achievable response of a
    linear blade is then exactly delta_phi = s * delta_P.
    """
    le, te = _tip_markers(model.mesh)
    ctx = context or model.context(laminate)
    disp = ctx.solve(model.load_vector(LoadCase(pressure=reference_pressure)))
    return float(disp.w[le] - disp.w[te]) / (model.mesh.tip_chord * reference_pressure)


# =============================================================================
# Response Curve
# =============================================================================

class ResponsePoint(BaseModel):
    """Response at one pressure difference."""

    model_config = ConfigDict(frozen=True)

    delta_pressure: float = Field(..., description="Pa")
    delta_phi: float = Field(..., description="rad")
    rake: float = Field(..., description="m")


class PitchResponse(BaseModel):
    """Tip pitch response over a schedule, sorted by delta P."""

    model_config = ConfigDict(frozen=True)

    points: List[ResponsePoint]
    slope: float = Field(..., description="Least-squares twist per unit pressure through the origin (rad/Pa)")

    @classmethod
    def from_points(cls, points: List[ResponsePoint]) -> "PitchResponse":
        points = sorted(points, key=lambda p: p.delta_pressure)
        dp = np.array([p.delta_pressure for p in points])
        dphi = np.array([p.delta_phi for p in points])
        denom = float(dp @ dp)
        slope = float(dp @ dphi) / denom if denom > 0.0 else 0.0
        return cls(points=points, slope=slope)

    def r_squared(self) -> float:
        """Uncentered R^2 of the line through the origin."""
        dp = np.array([p.delta_pressure for p in self.points])
        dphi = np.array([p.delta_phi for p in self.points])
        total = float(dphi @ dphi)
        if total == 0.0:
            return 1.0
        resid = dphi - self.slope * dp
        return 1.0 - float(resid @ resid) / total

    def achieved_pitch_deg(self, schedule: PitchSchedule) -> List[float]:
        """Cruise pitch plus the fitted response at every schedule entry (deg)."""
        phi_cruise = schedule.cruise.phi_required
        return [math.degrees(phi_cruise + self.slope * e.delta_pressure) for e in schedule.entries]


def response_curve(
    model: Union[Mesh, PlateModel],
    layup: Layup,
    schedule: PitchSchedule,
    method: PitchExtraction = PitchExtraction.CHORD,
    threads: int = 1,
) -> PitchResponse:
    """
    Solve every schedule entry on one factorization.

    Args:
        model: Mesh or prepared PlateModel
        layup: Blade layup
        schedule: Operating points (uniform pressure difference per entry)
        method: Pitch extraction method
        threads: Parallel right-hand sides

    Returns:
        PitchResponse sorted by delta P
    """
    plate = model if isinstance(model, PlateModel) else PlateModel(model)
    laminate = build_stiffness(layup)
    ctx = plate.context(laminate)

    def evaluate(entry) -> ResponsePoint:
        disp = ctx.solve(plate.load_vector(LoadCase(pressure=entry.delta_pressure)))
        return ResponsePoint(
            delta_pressure=entry.delta_pressure,
            delta_phi=tip_pitch_change(plate.mesh, disp, method),
            rake=rake_deflection(plate.mesh, disp),
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(evaluate, schedule.entries))
    else:
        points = [evaluate(e) for e in schedule.entries]

    response = PitchResponse.from_points(points)
    logger.info("response curve: slope %.4e rad/Pa (%.5f deg/kPa), R^2 %.8f",
                response.slope, math.degrees(response.slope) * 1e3, response.r_squared())
    return response


def write_response_csv(path: Union[str, Path], response: PitchResponse) -> None:
    """Columns deltaP_kPa, dphi_deg, rake_mm."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["deltaP_kPa", "dphi_deg", "rake_mm"])
        for p in response.points:
            writer.writerow([
                f"{p.delta_pressure / 1e3:.6f}",
                f"{math.degrees(p.delta_phi):.6f}",
                f"{p.rake * 1e3:.6f}",
            ])
