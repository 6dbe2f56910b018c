"""
==============================================================================
Triangle Mesh Container
==============================================================================
Immutable 3-node triangle mesh of a flat plate / expanded blade, with the
clamped (root) node set and the two tip-chord marker nodes used for pitch
extraction.

Element connectivity is counter-clockwise; for an element (1, 2, 3) with
a = x2-x1, b = y2-y1, c = y3-y1, d = x3-x1 the signed area is (a*c - b*d)/2.
==============================================================================
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial import cKDTree

from utils.errors import MeshValidationError

DUPLICATE_TOLERANCE = 1e-12


def signed_areas(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Signed area of every element (positive for counter-clockwise)."""
    p1 = nodes[elements[:, 0]]
    p2 = nodes[elements[:, 1]]
    p3 = nodes[elements[:, 2]]
    a = p2[:, 0] - p1[:, 0]
    b = p2[:, 1] - p1[:, 1]
    c = p3[:, 1] - p1[:, 1]
    d = p3[:, 0] - p1[:, 0]
    return 0.5 * (a * c - b * d)


@dataclass(frozen=True)
class Mesh:
    """Nodes (m), CCW triangles, clamped node set and tip-chord markers."""

    nodes: np.ndarray                  # (N, 2)
    elements: np.ndarray               # (M, 3) int
    clamped_nodes: FrozenSet[int] = field(default_factory=frozenset)
    tip_leading: Optional[int] = None
    tip_trailing: Optional[int] = None

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float).reshape(-1, 2)
        elements = np.ascontiguousarray(self.elements, dtype=np.int64).reshape(-1, 3)
        nodes.setflags(write=False)
        elements.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "clamped_nodes", frozenset(int(i) for i in self.clamped_nodes))

    # -------------------------------------------------------------------------
    # Sizes and geometry
    # -------------------------------------------------------------------------

    @property
    def node_count(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def element_count(self) -> int:
        return int(self.elements.shape[0])

    @property
    def has_tip_markers(self) -> bool:
        return self.tip_leading is not None and self.tip_trailing is not None

    @property
    def tip_chord(self) -> float:
        """Distance between the tip markers (m)."""
        if not self.has_tip_markers:
            raise MeshValidationError("mesh declares no tip_leading/tip_trailing markers")
        return float(np.linalg.norm(self.nodes[self.tip_leading] - self.nodes[self.tip_trailing]))

    def element_areas(self) -> np.ndarray:
        return signed_areas(self.nodes, self.elements)

    def total_area(self) -> float:
        return float(self.element_areas().sum())

    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    def edge_counts(self) -> Counter:
        """Number of elements sharing each undirected edge."""
        e = self.elements
        pairs = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
        pairs.sort(axis=1)
        return Counter(map(tuple, pairs.tolist()))

    def boundary_edges(self) -> List[Tuple[int, int]]:
        return sorted(edge for edge, n in self.edge_counts().items() if n == 1)

    def root_station(self) -> float:
        """x coordinate of the clamped edge (mean over clamped nodes)."""
        if not self.clamped_nodes:
            raise MeshValidationError("mesh has no clamped nodes")
        idx = np.fromiter(sorted(self.clamped_nodes), dtype=np.int64)
        return float(self.nodes[idx, 0].mean())

    # -------------------------------------------------------------------------
    # Validation
    # -------------------------------------------------------------------------

    def validate(self, require_clamped: bool = False, require_tip: bool = False) -> "Mesh":
        """
        Check indices, orientation, duplicates and edge manifoldness.

        Raises:
            MeshValidationError: On the first violated rule
        """
        n = self.node_count
        if n == 0 or self.element_count == 0:
            raise MeshValidationError("mesh has no nodes or no elements")
        if not np.all(np.isfinite(self.nodes)):
            raise MeshValidationError("node coordinates must be finite")

        bad = np.argwhere((self.elements < 0) | (self.elements >= n))
        if bad.size:
            e, k = bad[0]
            raise MeshValidationError(
                f"element {e} references node {self.elements[e, k]} but mesh has {n} nodes"
            )

        for i in list(self.clamped_nodes) + [self.tip_leading, self.tip_trailing]:
            if i is not None and not 0 <= i < n:
                raise MeshValidationError(f"marker node {i} out of range (mesh has {n} nodes)")

        areas = self.element_areas()
        if np.any(areas <= 0.0):
            e = int(np.argmin(areas))
            raise MeshValidationError(
                f"element {e} has non-positive signed area {areas[e]:.3e} (clockwise or degenerate)"
            )

        pairs = cKDTree(self.nodes).query_pairs(DUPLICATE_TOLERANCE, p=np.inf, output_type="ndarray")
        if len(pairs):
            i, j = sorted(map(tuple, pairs.tolist()))[0]
            raise MeshValidationError(f"duplicate nodes {i} and {j}")

        overshared = [edge for edge, count in self.edge_counts().items() if count > 2]
        if overshared:
            raise MeshValidationError(f"edge {overshared[0]} shared by more than two elements")

        if require_clamped and not self.clamped_nodes:
            raise MeshValidationError("clamped node set is empty")
        if require_tip:
            if not self.has_tip_markers:
                raise MeshValidationError("tip_leading/tip_trailing markers are required")
            if self.tip_leading == self.tip_trailing:
                raise MeshValidationError("tip_leading and tip_trailing must differ")
        return self

    def reoriented(self) -> "Mesh":
        """Copy with clockwise elements flipped to counter-clockwise."""
        elements = self.elements.copy()
        cw = signed_areas(self.nodes, elements) < 0.0
        elements[cw] = elements[cw][:, [0, 2, 1]]
        return Mesh(
            nodes=self.nodes,
            elements=elements,
            clamped_nodes=self.clamped_nodes,
            tip_leading=self.tip_leading,
            tip_trailing=self.tip_trailing,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.elements, other.elements)
            and self.clamped_nodes == other.clamped_nodes
            and self.tip_leading == other.tip_leading
            and self.tip_trailing == other.tip_trailing
        )

    __hash__ = None


# =============================================================================
# Planform Description
# =============================================================================

class PlanformSpec(BaseModel):
    """Expanded-blade planform parameters."""

    model_config = ConfigDict(frozen=True)

    diameter: float = Field(..., gt=0, description="Propeller diameter D (m)")
    hub_diameter: float = Field(..., gt=0, description="Hub (boss) diameter (m)")
    expanded_area_ratio: float = Field(..., gt=0, lt=2, description="EAR")
    blade_count: int = Field(..., ge=2, description="Number of blades Z")
    target_element_count: int = Field(default=2000, ge=8, description="Approximate triangle count")

    @model_validator(mode="after")
    def _check_hub(self) -> "PlanformSpec":
        if self.hub_diameter >= self.diameter:
            raise ValueError("hub_diameter must be smaller than diameter")
        return self

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter

    @property
    def hub_radius(self) -> float:
        return 0.5 * self.hub_diameter

    def blade_area(self) -> float:
        """Per-blade expanded area EAR * (pi D^2 / 4) / Z (m^2)."""
        return self.expanded_area_ratio * np.pi * self.diameter ** 2 / 4.0 / self.blade_count
