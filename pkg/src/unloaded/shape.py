"""
==============================================================================
Unloaded Shape Iteration
==============================================================================
Finds the as-manufactured tip pitch that deforms into the target pitch under
the cruise load. The root pitch stays at its design value; the pre-twist
relative to the design shape grows linearly from the clamped root to the
tip-marker station:

    psi(xi) = (unloaded_tip - target) * xi,   xi = (x - x_root) / (x_tip - x_root)

Iteration:

    1. initial = target - dphi_cruise            (reverse load / reverse strain)
    2. loaded  = initial + dphi(initial)
    3. adjust  = target - loaded
    4. stop when |adjust| < tol, else initial += adjust and go to 2

Response models:

    linear               dphi independent of the pre-twist
    pressure_projection  element pressure scaled by cos(psi(xi_centroid))
==============================================================================
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from blade.response import PitchExtraction, tip_pitch_change
from fem.assembly import LoadCase, PlateModel
from fem.solver import SolverContext
from laminate.clt import build_stiffness
from laminate.materials import Layup
from meshing.mesh import Mesh
from utils.errors import ConfigurationError, DivergenceError, InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE_DEG = 0.05
DEFAULT_MAX_ITERATIONS = 20
TRACE_COLUMNS = ["iter", "initial_tip_deg", "loaded_tip_deg", "pct_error", "adjustment_deg"]


class ResponseModel(str, Enum):
    """How the cruise response depends on the pre-twist."""
    LINEAR = "linear"
    PRESSURE_PROJECTION = "pressure_projection"


class Initialization(str, Enum):
    """First estimate of the unloaded tip pitch."""
    REVERSE_LOAD = "reverse_load"
    REVERSE_STRAIN = "reverse_strain"


# =============================================================================
# Trace
# =============================================================================

@dataclass(frozen=True)
class TraceRow:
    iteration: int
    initial_tip_deg: float
    loaded_tip_deg: float
    pct_error: float       # (target - loaded) / target * 100
    adjustment_deg: float  # target - loaded


@dataclass
class IterationTrace:
    """Iteration record in the order the rows were produced."""

    rows: List[TraceRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def last(self) -> Optional[TraceRow]:
        return self.rows[-1] if self.rows else None

    def error_magnitudes(self) -> List[float]:
        return [abs(r.pct_error) for r in self.rows]


@dataclass(frozen=True)
class UnloadedShapeResult:
    unloaded_tip_pitch_deg: float
    loaded_tip_pitch_deg: float
    target_tip_pitch_deg: float
    trace: IterationTrace

    @property
    def iterations(self) -> int:
        return len(self.trace)


# =============================================================================
# Spanwise Pre-Twist
# =============================================================================

def span_fraction(mesh: Mesh) -> np.ndarray:
    """
    xi of every element centroid: 0 at the clamped root, 1 at the tip markers.

    Raises:
        ConfigurationError: Missing tip markers or tip station on the root
    """
    if not mesh.has_tip_markers:
        raise ConfigurationError("unloaded-shape iteration needs tip_leading/tip_trailing markers")
    x_root = mesh.root_station()
    x_tip = 0.5 * (mesh.nodes[mesh.tip_leading, 0] + mesh.nodes[mesh.tip_trailing, 0])
    if x_tip - x_root <= 0.0:
        raise ConfigurationError("tip markers must lie outboard of the clamped root")
    xi = (mesh.centroids()[:, 0] - x_root) / (x_tip - x_root)
    return np.clip(xi, 0.0, None)


def _cruise_response(
    plate: PlateModel,
    ctx: SolverContext,
    base: np.ndarray,
    xi: np.ndarray,
    pretwist_tip: float,
    response_model: ResponseModel,
    extraction: PitchExtraction,
) -> float:
    """Tip pitch change (deg) under cruise load for a given tip pre-twist (rad)."""
    pressures = base
    if response_model is ResponseModel.PRESSURE_PROJECTION:
        pressures = base * np.cos(pretwist_tip * xi)
    case = LoadCase(element_pressures=tuple(float(p) for p in pressures))
    disp = ctx.solve(plate.load_vector(case))
    return math.degrees(tip_pitch_change(plate.mesh, disp, extraction))


# =============================================================================
# Iteration
# =============================================================================

def iterate_unloaded_shape(
    model: Union[Mesh, PlateModel],
    layup: Layup,
    cruise_load: LoadCase,
    target_tip_pitch_deg: float,
    response_model: ResponseModel = ResponseModel.PRESSURE_PROJECTION,
    tol_deg: float = DEFAULT_TOLERANCE_DEG,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
    initialization: Initialization = Initialization.REVERSE_LOAD,
    extraction: PitchExtraction = PitchExtraction.CHORD,
) -> UnloadedShapeResult:
    """
    Fixed-point search for the unloaded tip pitch.

    Args:
        model: Blade mesh (with tip markers) or prepared PlateModel
        layup: Blade layup
        cruise_load: Cruise pressure (uniform or per element)
        target_tip_pitch_deg: Design tip pitch under cruise load
        response_model: Dependence of the cruise response on the pre-twist
        tol_deg: Stop when |adjustment| < tol_deg
        max_iter: Iteration limit
        initialization: reverse_load or reverse_strain first estimate
        extraction: Tip pitch measure

    Raises:
        InvalidInputError: Non-positive tolerance or iteration limit
        DivergenceError: No convergence within max_iter (trace attached)
    """
    if tol_deg <= 0.0:
        raise InvalidInputError(f"tol_deg must be positive, got {tol_deg}")
    if max_iter < 1:
        raise InvalidInputError(f"max_iter must be at least 1, got {max_iter}")
    response_model = ResponseModel(response_model)
    initialization = Initialization(initialization)

    plate = model if isinstance(model, PlateModel) else PlateModel(model)
    xi = span_fraction(plate.mesh)
    ctx = plate.context(build_stiffness(layup))
    base = cruise_load.element_values(plate.mesh.element_count)
    target = float(target_tip_pitch_deg)

    if initialization is Initialization.REVERSE_LOAD:
        initial = target - _cruise_response(plate, ctx, base, xi, 0.0, ResponseModel.LINEAR, extraction)
    else:
        # small-rotation measure of the design-shape solution
        disp = ctx.solve(plate.load_vector(cruise_load))
        le, te = plate.mesh.tip_leading, plate.mesh.tip_trailing
        initial = target - math.degrees(float(disp.w[le] - disp.w[te]) / plate.mesh.tip_chord)
    logger.info("unloaded shape: target %.4f deg, %s model, %s start at %.4f deg",
                target, response_model.value, initialization.value, initial)

    trace = IterationTrace()
    for iteration in range(1, max_iter + 1):
        pretwist = math.radians(initial - target)
        loaded = initial + _cruise_response(plate, ctx, base, xi, pretwist, response_model, extraction)
        adjustment = target - loaded
        pct = adjustment / target * 100.0 if target != 0.0 else float("nan")
        trace.rows.append(TraceRow(iteration, initial, loaded, pct, adjustment))
        logger.info("iteration %d: initial %.4f deg, loaded %.4f deg, adjustment %+.4f deg",
                    iteration, initial, loaded, adjustment)
        if abs(adjustment) < tol_deg:
            return UnloadedShapeResult(
                unloaded_tip_pitch_deg=initial,
                loaded_tip_pitch_deg=loaded,
                target_tip_pitch_deg=target,
                trace=trace,
            )
        initial += adjustment

    raise DivergenceError(
        f"unloaded shape did not converge to {tol_deg} deg in {max_iter} iterations", trace=trace
    )


# =============================================================================
# Trace CSV
# =============================================================================

def write_trace_csv(path: Union[str, Path], trace: IterationTrace) -> None:
    """Columns iter, initial_tip_deg, loaded_tip_deg, pct_error, adjustment_deg."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in trace.rows:
            writer.writerow([
                r.iteration,
                f"{r.initial_tip_deg:.6f}",
                f"{r.loaded_tip_deg:.6f}",
                f"{r.pct_error:.6f}",
                f"{r.adjustment_deg:.6f}",
            ])


def read_trace_csv(path: Union[str, Path]) -> IterationTrace:
    """
    Parse a trace CSV.

    Raises:
        InvalidInputError: Wrong header or malformed row
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_COLUMNS:
            raise InvalidInputError(f"trace header must be {','.join(TRACE_COLUMNS)}, got {header}")
        rows = []
        for line_number, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(TRACE_COLUMNS):
                raise InvalidInputError(f"line {line_number}: expected {len(TRACE_COLUMNS)} fields")
            try:
                rows.append(TraceRow(int(record[0]), *(float(v) for v in record[1:])))
            except ValueError as exc:
                raise InvalidInputError(f"line {line_number}: {exc}") from exc
    return IterationTrace(rows=rows)
