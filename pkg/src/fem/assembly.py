"""
==============================================================================
Plate Model - Assembly, Loads and Solution Driver
==============================================================================
PlateModel caches everything that depends on the mesh only (smoothed
strain-displacement matrices, dof map, sparse pattern) so that a new layup
costs one vectorized element evaluation, one scatter and one factorization.

Assembly scatters element matrices into a fixed CSR pattern with
np.bincount, so the summation order never depends on threading.

When the laminate has no membrane-bending coupling and the load is normal
pressure, only (w, theta_x, theta_y) are solved for; u and v are exactly
zero in that case.
==============================================================================
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse import csr_matrix

from fem.element import (
    DEFAULT_STABILIZATION_ALPHA,
    DOFS_PER_NODE,
    ELEMENT_DOFS,
    W,
    element_stiffness_batch,
    shear_stabilization_factor,
    smoothed_b_matrices,
)
from fem.solver import ALL_COMPONENTS, BENDING_COMPONENTS, DisplacementField, SolverContext
from laminate.clt import LaminateStiffness
from meshing.mesh import Mesh
from utils.errors import InvalidInputError

logger = logging.getLogger(__name__)


# =============================================================================
# Options and Load Cases
# =============================================================================

class SolverOptions(BaseModel):
    """Element and solver switches."""

    model_config = ConfigDict(frozen=True)

    stabilization: bool = Field(default=False, description="Scale shear by t^2/(t^2 + alpha h^2)")
    stabilization_alpha: float = Field(default=DEFAULT_STABILIZATION_ALPHA, gt=0)
    reduce_uncoupled: bool = Field(
        default=True, description="Solve bending dofs only when B = 0 and the load is transverse"
    )
    max_dofs: Optional[int] = Field(default=None, ge=1, description="Override Config.MAX_DOFS")


class LoadCase(BaseModel):
    """Normal pressure load (positive along +z)."""

    model_config = ConfigDict(frozen=True)

    pressure: float = Field(default=0.0, description="Uniform pressure (Pa)")
    weight: float = Field(default=1.0, ge=0, description="Relative weight in the objective")
    label: str = Field(default="", description="Free-form label")
    element_pressures: Optional[Tuple[float, ...]] = Field(
        default=None, description="Per-element pressure (Pa); overrides `pressure`"
    )

    def element_values(self, element_count: int) -> np.ndarray:
        """Pressure acting on every element (Pa)."""
        if self.element_pressures is None:
            return np.full(element_count, float(self.pressure))
        values = np.asarray(self.element_pressures, dtype=float)
        if values.shape != (element_count,):
            raise InvalidInputError(
                f"load case has {values.size} element pressures, mesh has {element_count} elements"
            )
        return values


# =============================================================================
# Plate Model
# =============================================================================

class PlateModel:
    """
    Mesh-bound CS-DSG3 plate model.

    Args:
        mesh: Valid counter-clockwise mesh
        options: Element and solver switches
    """

    def __init__(self, mesh: Mesh, options: Optional[SolverOptions] = None):
        mesh.validate()
        self.mesh = mesh
        self.options = options or SolverOptions()
        self.dof_count = DOFS_PER_NODE * mesh.node_count

        coords = mesh.nodes[mesh.elements]
        self.bp, self.bb, self.bs, self.areas = smoothed_b_matrices(coords)
        edges = np.stack([
            np.linalg.norm(coords[:, 1] - coords[:, 0], axis=1),
            np.linalg.norm(coords[:, 2] - coords[:, 1], axis=1),
            np.linalg.norm(coords[:, 0] - coords[:, 2], axis=1),
        ], axis=1)
        self.longest_edges = edges.max(axis=1)

        self.dof_map = (
            DOFS_PER_NODE * mesh.elements[:, :, None] + np.arange(DOFS_PER_NODE)[None, None, :]
        ).reshape(-1, ELEMENT_DOFS)
        self._build_pattern()
        logger.debug("plate model: %d nodes, %d elements, %d nonzeros",
                     mesh.node_count, mesh.element_count, self._indices.size)

    def _build_pattern(self) -> None:
        rows = np.repeat(self.dof_map, ELEMENT_DOFS, axis=1).ravel()
        cols = np.tile(self.dof_map, (1, ELEMENT_DOFS)).ravel()
        keys = rows.astype(np.int64) * self.dof_count + cols
        unique, inverse = np.unique(keys, return_inverse=True)
        self._scatter = inverse.ravel()
        pattern_rows = unique // self.dof_count
        self._indices = (unique % self.dof_count).astype(np.int64)
        counts = np.bincount(pattern_rows, minlength=self.dof_count)
        self._indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    # -------------------------------------------------------------------------
    # Stiffness
    # -------------------------------------------------------------------------

    def uses_bending_reduction(self, laminate: LaminateStiffness) -> bool:
        return self.options.reduce_uncoupled and laminate.is_symmetric_coupling_free()

    def element_matrices(self, laminate: LaminateStiffness, bending_only: bool = False) -> np.ndarray:
        """(M, 15, 15) smoothed element stiffness matrices."""
        scale = None
        if self.options.stabilization:
            scale = shear_stabilization_factor(
                laminate.thickness, self.longest_edges, self.options.stabilization_alpha
            )
        if bending_only:
            zeros = np.zeros_like(self.bp)
            membrane_free = LaminateStiffness(
                a_mat=np.zeros((3, 3)), b_mat=np.zeros((3, 3)),
                d_mat=np.array(laminate.d_mat), e_mat=np.array(laminate.e_mat),
                thickness=laminate.thickness,
            )
            return element_stiffness_batch(zeros, self.bb, self.bs, self.areas, membrane_free, scale)
        return element_stiffness_batch(self.bp, self.bb, self.bs, self.areas, laminate, scale)

    def assemble(self, laminate: LaminateStiffness, bending_only: bool = False) -> csr_matrix:
        """Global sparse stiffness (5N x 5N)."""
        ke = self.element_matrices(laminate, bending_only=bending_only)
        data = np.bincount(self._scatter, weights=ke.ravel(), minlength=self._indices.size)
        return csr_matrix(
            (data, self._indices.copy(), self._indptr.copy()),
            shape=(self.dof_count, self.dof_count),
        )

    # -------------------------------------------------------------------------
    # Loads and solution
    # -------------------------------------------------------------------------

    def load_vector(self, case: LoadCase) -> np.ndarray:
        """Consistent nodal forces: P_e A_e / 3 on the w dof of each element node."""
        share = case.element_values(self.mesh.element_count) * self.areas / 3.0
        nodal = np.bincount(
            self.mesh.elements.ravel(), weights=np.repeat(share, 3), minlength=self.mesh.node_count
        )
        force = np.zeros(self.dof_count)
        force[W::DOFS_PER_NODE] = nodal
        return force

    def context(self, laminate: LaminateStiffness) -> SolverContext:
        """Factorized solver for transverse loads on this laminate."""
        reduced = self.uses_bending_reduction(laminate)
        stiffness = self.assemble(laminate, bending_only=reduced)
        return SolverContext(
            stiffness,
            self.mesh.clamped_nodes,
            nodes=self.mesh.nodes,
            components=BENDING_COMPONENTS if reduced else ALL_COMPONENTS,
            max_dofs=self.options.max_dofs,
        )

    def solve_case(self, laminate: LaminateStiffness, case: LoadCase) -> DisplacementField:
        """One factorization, one solve."""
        return self.context(laminate).solve(self.load_vector(case))


# =============================================================================
# Functional API
# =============================================================================

def assemble(mesh: Mesh, laminate: LaminateStiffness, options: Optional[SolverOptions] = None) -> csr_matrix:
    """Global stiffness of mesh + laminate (all five dofs per node)."""
    return PlateModel(mesh, options).assemble(laminate)


def pressure_load(mesh: Mesh, case: LoadCase) -> np.ndarray:
    """Consistent pressure load vector; sum of the w entries is P * area."""
    return PlateModel(mesh).load_vector(case)


@dataclass(frozen=True)
class ElementStrains:
    """Smoothed per-element generalized strains."""

    eps: np.ndarray    # (M, 3) membrane
    kappa: np.ndarray  # (M, 3) curvature, 1/m
    gamma: np.ndarray  # (M, 2) transverse shear


def element_strains(model: PlateModel, disp: DisplacementField) -> ElementStrains:
    """Evaluate eps-bar, kappa-bar and gamma-bar on every element."""
    local = disp.as_vector()[model.dof_map]
    return ElementStrains(
        eps=np.einsum("eij,ej->ei", model.bp, local),
        kappa=np.einsum("eij,ej->ei", model.bb, local),
        gamma=np.einsum("eij,ej->ei", model.bs, local),
    )
