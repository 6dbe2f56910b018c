"""
==============================================================================
Layer Thickness Study
==============================================================================
One GA run per (ply count, ply thickness) row on a shared plate model.
==============================================================================
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field

from fem.assembly import PlateModel
from laminate.materials import Layup
from optimization.ga import run_ga
from optimization.objective import OptimizationProblem

logger = logging.getLogger(__name__)


class ThicknessRow(BaseModel):
    """One layup family: total plies and thickness per ply."""

    model_config = ConfigDict(frozen=True)

    layers: int = Field(..., ge=1)
    layer_thickness_um: float = Field(..., gt=0)

    @property
    def layer_thickness(self) -> float:
        return self.layer_thickness_um * 1e-6

    @property
    def total_thickness(self) -> float:
        return self.layers * self.layer_thickness


@dataclass(frozen=True)
class ThicknessResult:
    row: ThicknessRow
    best_objective: float  # rad
    best_layup: Layup


def thickness_study(
    rows: Sequence[ThicknessRow],
    problem: OptimizationProblem,
    threads: int = 1,
    model: Optional[PlateModel] = None,
) -> List[ThicknessResult]:
    """
    Run the GA for every row; all rows reuse problem's GA settings and seed.

    Args:
        rows: Layup families to compare
        problem: Template problem (ply count and thickness are replaced per row)
        threads: Worker threads for fitness evaluation
        model: PlateModel of problem.mesh to share across rows
    """
    plate = model or PlateModel(problem.mesh, problem.solver)
    results = []
    for row in rows:
        variant = problem.with_plies(row.layers, row.layer_thickness)
        logger.info("thickness study: %d x %.1f um (%.3f mm total)",
                    row.layers, row.layer_thickness_um, row.total_thickness * 1e3)
        best = run_ga(variant, threads=threads, model=plate)
        results.append(ThicknessResult(row=row, best_objective=best.best_objective, best_layup=best.best_layup))
    return results


def write_thickness_csv(path: Union[str, Path], results: Sequence[ThicknessResult]) -> None:
    """Columns layers, layer_thk_um, total_thk_mm, best_f_rad."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["layers", "layer_thk_um", "total_thk_mm", "best_f_rad"])
        for r in results:
            writer.writerow([
                r.row.layers,
                f"{r.row.layer_thickness_um:.3f}",
                f"{r.row.total_thickness * 1e3:.6f}",
                f"{r.best_objective:.10e}",
            ])
