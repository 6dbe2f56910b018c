"""
==============================================================================
Run Configuration Models
==============================================================================
Pydantic schema of a run configuration (JSON). One document describes one
experiment: material, layup or GA search space, mesh source, operating
schedule and the settings of every command.

Angles are degrees and ply thicknesses micrometres in the document; the
builders below convert to the SI / radian records used internally.

Usage:
    from models.run_config import load_run_config

    cfg = load_run_config("data/b5_45.json")
    mesh = cfg.mesh.build()
    schedule = cfg.schedule.build()
==============================================================================
"""

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from blade.response import DEFAULT_REFERENCE_PRESSURE, PitchExtraction
from blade.schedule import CRUISE_TOLERANCE_PA, PitchSchedule
from fem.assembly import LoadCase, SolverOptions
from laminate.materials import Layup, Material
from meshing.generators import gen_blade_mesh, gen_rect_mesh
from meshing.io import load_mesh, load_pressure_map
from meshing.mesh import Mesh, PlanformSpec
from optimization.domain import AngleDomain
from optimization.ga_config import GAConfig
from optimization.objective import MaxStrainPenalty, OptimizationProblem
from optimization.study import ThicknessRow
from unloaded.shape import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE_DEG,
    Initialization,
    ResponseModel,
)
from utils.errors import ConfigurationError

PathLike = Union[str, Path]


class _Block(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# =============================================================================
# Material and Layup
# =============================================================================

class MaterialBlock(_Block):
    """Either a named preset or the full set of lamina constants."""

    preset: Optional[Literal["as4"]] = None
    name: Optional[str] = None
    e1: Optional[float] = Field(default=None, gt=0, description="Pa")
    e2: Optional[float] = Field(default=None, gt=0, description="Pa")
    g12: Optional[float] = Field(default=None, gt=0, description="Pa")
    g23: Optional[float] = Field(default=None, gt=0, description="Pa")
    nu12: Optional[float] = Field(default=None, ge=0, lt=0.5)
    nu23: Optional[float] = Field(default=None, ge=0, lt=1.0)
    ply_thickness_um: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_complete(self) -> "MaterialBlock":
        if self.preset is None:
            missing = [k for k in ("e1", "e2", "g12", "nu12", "ply_thickness_um") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"material without preset needs {', '.join(missing)}")
        return self

    def build(self) -> Material:
        base = Material.as4() if self.preset == "as4" else None
        values = base.model_dump() if base is not None else {}
        overrides = {
            "name": self.name, "e1": self.e1, "e2": self.e2, "g12": self.g12, "g23": self.g23,
            "nu12": self.nu12, "nu23": self.nu23,
            "ply_thickness": None if self.ply_thickness_um is None else self.ply_thickness_um * 1e-6,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return Material(**values)


class LayupBlock(_Block):
    """
    Explicit stacking sequence (angles_deg) or GA search space (ply_count +
    domain). Both may be given: the explicit angles are then used by the
    analysis commands and the search space by optimize/thickness.
    """

    angles_deg: Optional[List[float]] = Field(default=None, min_length=1, description="Half stack when symmetric")
    symmetric: bool = True
    ply_thickness_um: Optional[float] = Field(default=None, gt=0)
    ply_count: Optional[int] = Field(default=None, ge=1, description="Total plies for the GA")
    domain: AngleDomain = Field(default_factory=AngleDomain.continuous)

    @model_validator(mode="after")
    def _check_source(self) -> "LayupBlock":
        if self.angles_deg is None and self.ply_count is None:
            raise ValueError("layup needs angles_deg or ply_count")
        if self.ply_count is not None and self.symmetric and self.ply_count % 2:
            raise ValueError(f"symmetric layup needs an even ply_count, got {self.ply_count}")
        return self

    @property
    def ply_thickness(self) -> Optional[float]:
        return None if self.ply_thickness_um is None else self.ply_thickness_um * 1e-6

    def build(self, material: Material) -> Layup:
        if self.angles_deg is None:
            raise ConfigurationError("this command needs an explicit layup.angles_deg")
        return Layup.from_degrees(
            self.angles_deg, material, thickness=self.ply_thickness, symmetric=self.symmetric
        )


# =============================================================================
# Mesh
# =============================================================================

class RectMeshBlock(_Block):
    length: float = Field(..., gt=0, description="m, clamped at x = 0")
    width: float = Field(..., gt=0, description="m")
    nx: int = Field(..., ge=2, description="Nodes along x")
    ny: int = Field(..., ge=2, description="Nodes along y")


class MeshSize(_Block):
    nx: int = Field(..., ge=2)
    ny: int = Field(..., ge=2)


class MeshBlock(_Block):
    """Exactly one of rect, blade or file."""

    rect: Optional[RectMeshBlock] = None
    blade: Optional[PlanformSpec] = None
    file: Optional[str] = None
    reorient: bool = Field(default=False, description="Fix clockwise elements of a mesh file")
    pressure_map: Optional[str] = Field(default=None, description="CSV element,pressure_pa")

    @model_validator(mode="after")
    def _check_single_source(self) -> "MeshBlock":
        sources = [k for k in ("rect", "blade", "file") if getattr(self, k) is not None]
        if len(sources) != 1:
            raise ValueError(f"mesh needs exactly one of rect, blade, file; got {sources or 'none'}")
        return self

    def build(self, base_dir: Optional[PathLike] = None) -> Mesh:
        if self.rect is not None:
            r = self.rect
            return gen_rect_mesh(r.length, r.width, r.nx, r.ny)
        if self.blade is not None:
            return gen_blade_mesh(self.blade)
        return load_mesh(_resolve(self.file, base_dir), reorient=self.reorient)

    def with_size(self, size: MeshSize) -> "MeshBlock":
        """Rect mesh block with another node array."""
        if self.rect is None:
            raise ConfigurationError("mesh convergence sweeps need a rect mesh")
        return self.model_copy(update={"rect": self.rect.model_copy(update={"nx": size.nx, "ny": size.ny})})

    def element_pressures(self, mesh: Mesh, base_dir: Optional[PathLike] = None) -> Optional[np.ndarray]:
        if self.pressure_map is None:
            return None
        return load_pressure_map(_resolve(self.pressure_map, base_dir), mesh)


def _resolve(path: Optional[str], base_dir: Optional[PathLike]) -> Path:
    p = Path(path)
    if not p.is_absolute() and base_dir is not None and not p.exists():
        p = Path(base_dir) / p
    return p


# =============================================================================
# Schedule, Loads and Commands
# =============================================================================

class ScheduleRow(_Block):
    pressure_kpa: float
    delta_pressure_kpa: float
    phi_deg: float
    weight: float = Field(default=1.0, ge=0)
    pd_ratio: Optional[float] = None


class ScheduleBlock(_Block):
    rows: List[ScheduleRow] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_cruise(self) -> "ScheduleBlock":
        cruise = [r for r in self.rows if abs(r.delta_pressure_kpa) * 1e3 <= CRUISE_TOLERANCE_PA]
        if len(cruise) != 1:
            raise ValueError(f"schedule needs exactly one cruise row with delta_pressure_kpa = 0, found {len(cruise)}")
        return self

    def build(self) -> PitchSchedule:
        return PitchSchedule.from_rows(
            [(r.pressure_kpa, r.delta_pressure_kpa, r.phi_deg, r.weight) for r in self.rows],
            pd_ratios=[r.pd_ratio for r in self.rows],
        )


class LoadBlock(_Block):
    """Uniform pressure for solve / converge (Pa)."""

    pressure_pa: float = 0.0


class UnloadedBlock(_Block):
    target_tip_pitch_deg: float = 16.0
    cruise_pressure_kpa: Optional[float] = Field(
        default=None, description="Defaults to the schedule's cruise pressure"
    )
    tol_deg: float = Field(default=DEFAULT_TOLERANCE_DEG, gt=0)
    max_iter: int = Field(default=DEFAULT_MAX_ITERATIONS, ge=1)
    model: ResponseModel = ResponseModel.PRESSURE_PROJECTION
    initialization: Initialization = Initialization.REVERSE_LOAD


# =============================================================================
# Run Configuration
# =============================================================================

class RunConfig(_Block):
    """Complete description of one experiment."""

    name: str = "run"
    material: MaterialBlock = Field(default_factory=lambda: MaterialBlock(preset="as4"))
    layup: LayupBlock
    mesh: MeshBlock
    schedule: Optional[ScheduleBlock] = None
    load: LoadBlock = Field(default_factory=LoadBlock)
    ga: GAConfig = Field(default_factory=GAConfig)
    penalty: Optional[MaxStrainPenalty] = None
    solver: SolverOptions = Field(default_factory=SolverOptions)
    extraction: PitchExtraction = PitchExtraction.CHORD
    reference_pressure_pa: float = Field(default=DEFAULT_REFERENCE_PRESSURE, gt=0)
    unloaded: Optional[UnloadedBlock] = None
    thickness_study: Optional[List[ThicknessRow]] = None
    convergence: Optional[List[MeshSize]] = None
    output_dir: Optional[str] = None

    # -------------------------------------------------------------------------
    # Builders
    # -------------------------------------------------------------------------

    def require_schedule(self) -> PitchSchedule:
        if self.schedule is None:
            raise ConfigurationError("this command needs a schedule block")
        return self.schedule.build()

    def problem(self, mesh: Mesh, seed: Optional[int] = None) -> OptimizationProblem:
        """GA problem of this configuration."""
        if self.layup.ply_count is None:
            raise ConfigurationError("optimization needs layup.ply_count")
        ga = self.ga if seed is None else self.ga.model_copy(update={"rng_seed": seed})
        return OptimizationProblem(
            mesh=mesh,
            material=self.material.build(),
            schedule=self.require_schedule(),
            ply_count=self.layup.ply_count,
            domain=self.layup.domain,
            ply_thickness=self.layup.ply_thickness,
            symmetric=self.layup.symmetric,
            ga=ga,
            penalty=self.penalty,
            solver=self.solver,
            reference_pressure=self.reference_pressure_pa,
        )

    def cruise_load(self, mesh: Mesh, base_dir: Optional[PathLike] = None) -> LoadCase:
        """Cruise load for the unloaded-shape iteration."""
        block = self.unloaded or UnloadedBlock()
        pressure_map = self.mesh.element_pressures(mesh, base_dir)
        if pressure_map is not None:
            return LoadCase(element_pressures=tuple(float(p) for p in pressure_map), label="cruise")
        if block.cruise_pressure_kpa is not None:
            return LoadCase(pressure=block.cruise_pressure_kpa * 1e3, label="cruise")
        return LoadCase(pressure=self.require_schedule().cruise.pressure, label="cruise")

    def surface_load(self, mesh: Mesh, base_dir: Optional[PathLike] = None) -> LoadCase:
        """Load of the solve / converge commands."""
        pressure_map = self.mesh.element_pressures(mesh, base_dir)
        if pressure_map is not None:
            return LoadCase(element_pressures=tuple(float(p) for p in pressure_map))
        return LoadCase(pressure=self.load.pressure_pa)


def load_run_config(path: PathLike) -> RunConfig:
    """
    Read and validate a JSON run configuration.

    Raises:
        ConfigurationError: File missing or not valid JSON
        pydantic.ValidationError: Schema violations (with field paths)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return RunConfig.model_validate(data)
