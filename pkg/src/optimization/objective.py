"""
==============================================================================
Pitch-Tracking Objective and Analytic Oracle
==============================================================================
Objective of a stacking sequence theta over the off-design points i:

    f(theta) = sum_i w_i |dphi_req_i - dphi_i(theta)| / sum_i w_i

A linear blade can only realise dphi_i = s(theta) * dP_i, so f depends on
theta only through the twist rate s. The oracle minimises the same sum over
s directly: the function is convex and piecewise linear with kinks at the
candidate slopes dphi_req_i / dP_i, so its minimum sits on one of them.
==============================================================================
"""

import logging
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from blade.response import DEFAULT_REFERENCE_PRESSURE, twist_rate
from blade.schedule import PitchSchedule
from fem.assembly import LoadCase, PlateModel, SolverOptions, element_strains
from laminate.clt import build_stiffness, ply_strains
from laminate.materials import Layup, Material
from meshing.mesh import Mesh
from optimization.domain import AngleDomain
from optimization.ga_config import GAConfig
from utils.errors import InfeasibleChromosomeError, InvalidInputError

logger = logging.getLogger(__name__)


# =============================================================================
# Problem Definition
# =============================================================================

class MaxStrainPenalty(BaseModel):
    """
    Optional max-strain constraint, added to f as factor * max(0, r - 1)
    where r is the largest ply strain ratio over the blade.
    """

    model_config = ConfigDict(frozen=True)

    eps1_limit: float = Field(..., gt=0, description="Fiber-direction strain allowable")
    eps2_limit: float = Field(..., gt=0, description="Transverse strain allowable")
    gamma12_limit: float = Field(..., gt=0, description="In-plane shear strain allowable")
    factor: float = Field(default=1.0, ge=0, description="Penalty per unit exceedance (rad)")

    def strain_ratio(self, layup: Layup, eps: np.ndarray, kappa: np.ndarray) -> float:
        """Largest |strain| / allowable over all elements, plies and ply surfaces."""
        limits = np.array([self.eps1_limit, self.eps2_limit, self.gamma12_limit])
        return max(float(np.max(np.abs(local) / limits)) for local in ply_strains(layup, eps, kappa))

    def penalty(self, layup: Layup, eps: np.ndarray, kappa: np.ndarray) -> float:
        return self.factor * max(0.0, self.strain_ratio(layup, eps, kappa) - 1.0)


@dataclass(frozen=True)
class OptimizationProblem:
    """Everything a GA run needs apart from the random seed."""

    mesh: Mesh
    material: Material
    schedule: PitchSchedule
    ply_count: int                                  # total plies in the laminate
    domain: AngleDomain = field(default_factory=AngleDomain.continuous)
    ply_thickness: Optional[float] = None           # m; material nominal when omitted
    symmetric: bool = True                          # genes are the half stack
    ga: GAConfig = field(default_factory=GAConfig)
    penalty: Optional[MaxStrainPenalty] = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    reference_pressure: float = DEFAULT_REFERENCE_PRESSURE

    def __post_init__(self):
        if self.ply_count < 1:
            raise InvalidInputError(f"ply_count must be positive, got {self.ply_count}")
        if self.symmetric and self.ply_count % 2:
            raise InvalidInputError(f"symmetric layup needs an even ply count, got {self.ply_count}")
        if self.ply_thickness is not None and self.ply_thickness <= 0.0:
            raise InvalidInputError(f"ply_thickness must be positive, got {self.ply_thickness}")
        if self.reference_pressure <= 0.0:
            raise InvalidInputError("reference_pressure must be positive")
        if not self.schedule.off_design():
            raise InvalidInputError("schedule has no off-design entry to optimize against")

    def with_plies(self, ply_count: int, ply_thickness: Optional[float]) -> "OptimizationProblem":
        """Same problem with another ply count / thickness."""
        return replace(self, ply_count=ply_count, ply_thickness=ply_thickness)

    @property
    def gene_count(self) -> int:
        return self.ply_count // 2 if self.symmetric else self.ply_count

    @property
    def layer_thickness(self) -> float:
        return self.material.ply_thickness if self.ply_thickness is None else self.ply_thickness

    def layup(self, genes: np.ndarray) -> Layup:
        """Layup of a chromosome (rad)."""
        return Layup.from_radians(
            [float(g) for g in genes], self.material, thickness=self.layer_thickness, symmetric=self.symmetric
        )


# =============================================================================
# Objective
# =============================================================================

def objective_from_slope(schedule: PitchSchedule, slope: float) -> float:
    """Weighted mean absolute pitch deviation (rad) for dphi = slope * dP."""
    points = schedule.off_design()
    if not points:
        raise InvalidInputError("schedule has no off-design entries")
    total_w = sum(p.weight for p in points)
    if total_w <= 0.0:
        raise InvalidInputError("off-design weights sum to zero")
    dev = sum(p.weight * abs(p.delta_phi_required - slope * p.delta_pressure) for p in points)
    return dev / total_w


def check_chromosome(genes: np.ndarray, domain: AngleDomain) -> np.ndarray:
    """
    Validate genes against the domain.

    Raises:
        InfeasibleChromosomeError: Any gene outside the domain or non-finite
    """
    genes = np.asarray(genes, dtype=float).ravel()
    for i, g in enumerate(genes):
        if not domain.contains(float(g)):
            raise InfeasibleChromosomeError(
                f"gene {i} = {math.degrees(g):.6g} deg is outside the {domain.kind.value} domain"
            )
    return genes


def objective(
    chromosome: np.ndarray,
    mesh: Mesh,
    material: Material,
    schedule: PitchSchedule,
    domain: Optional[AngleDomain] = None,
    ply_thickness: Optional[float] = None,
    symmetric: bool = True,
    model: Optional[PlateModel] = None,
) -> float:
    """
    Objective of one chromosome (rad).

    Args:
        chromosome: Genes (rad); the half stack when symmetric
        mesh: Blade mesh with tip markers
        material: Ply material
        schedule: Operating points
        domain: Gene domain checked before evaluation
        ply_thickness: m; material nominal when omitted
        symmetric: Mirror genes about the mid-plane
        model: Prepared PlateModel for mesh (reused when given)
    """
    genes = check_chromosome(chromosome, domain or AngleDomain.continuous())
    layup = Layup.from_radians(list(genes), material, thickness=ply_thickness, symmetric=symmetric)
    plate = model or PlateModel(mesh)
    slope = twist_rate(plate, build_stiffness(layup))
    return objective_from_slope(schedule, slope)


class FitnessEvaluator:
    """
    Thread-safe cached fitness of chromosomes for one problem.

    The cache is keyed by the chromosome bytes; `evaluations` counts the
    structural solves actually performed.
    """

    def __init__(self, problem: OptimizationProblem, model: Optional[PlateModel] = None):
        self.problem = problem
        self.model = model or PlateModel(problem.mesh, problem.solver)
        self._cache: Dict[bytes, float] = {}
        self._lock = threading.Lock()
        self.evaluations = 0

    def __call__(self, genes: np.ndarray) -> float:
        genes = np.ascontiguousarray(genes, dtype=float)
        key = genes.tobytes()
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = self._evaluate(genes)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = value
                self.evaluations += 1
        return value

    def _evaluate(self, genes: np.ndarray) -> float:
        problem = self.problem
        check_chromosome(genes, problem.domain)
        layup = problem.layup(genes)
        laminate = build_stiffness(layup)
        ctx = self.model.context(laminate)
        slope = twist_rate(self.model, laminate, problem.reference_pressure, context=ctx)
        value = objective_from_slope(problem.schedule, slope)
        if problem.penalty is not None:
            peak = max(problem.schedule.entries, key=lambda e: abs(e.delta_pressure))
            disp = ctx.solve(self.model.load_vector(LoadCase(pressure=peak.delta_pressure)))
            strains = element_strains(self.model, disp)
            value += problem.penalty.penalty(layup, strains.eps, strains.kappa)
        logger.debug("f = %.6e rad (slope %.4e rad/Pa)", value, slope)
        return value

    def slope(self, genes: np.ndarray) -> float:
        """Twist rate (rad/Pa) of a chromosome, uncached."""
        laminate = build_stiffness(self.problem.layup(genes))
        return twist_rate(self.model, laminate, self.problem.reference_pressure)


# =============================================================================
# Oracle
# =============================================================================

@dataclass(frozen=True)
class OracleResult:
    """Best achievable linear response for a schedule."""

    slope: float                    # rad/Pa
    objective: float                # rad
    achieved_pitch_deg: List[float]  # per schedule entry
    deviations_deg: List[float]      # required - achieved, per schedule entry


def oracle_optimum(schedule: PitchSchedule) -> OracleResult:
    """
    Exact minimum of the objective over all twist rates s.

    Raises:
        InvalidInputError: No off-design entry (slope undefined)
    """
    points = schedule.off_design()
    if not points:
        raise InvalidInputError("every entry has delta P = 0; the optimal slope is undefined")

    candidates = sorted({p.delta_phi_required / p.delta_pressure for p in points})
    best_slope, best_f = candidates[0], objective_from_slope(schedule, candidates[0])
    for s in candidates[1:]:
        f = objective_from_slope(schedule, s)
        if f < best_f - 1e-15:
            best_slope, best_f = s, f

    phi_cruise = schedule.cruise.phi_required
    achieved = [math.degrees(phi_cruise + best_slope * e.delta_pressure) for e in schedule.entries]
    deviations = [math.degrees(e.phi_required) - a for e, a in zip(schedule.entries, achieved)]
    logger.info("oracle: s* = %.6e rad/Pa (%.5f deg/kPa), f* = %.6e rad (%.4f deg)",
                best_slope, math.degrees(best_slope) * 1e3, best_f, math.degrees(best_f))
    return OracleResult(
        slope=best_slope,
        objective=best_f,
        achieved_pitch_deg=achieved,
        deviations_deg=deviations,
    )
