"""
==============================================================================
CS-DSG3 Element Formulation
==============================================================================
Cell-based smoothed discrete-shear-gap triangle for first-order shear
deformation laminated plates.

Degrees of freedom per node: {u, v, w, theta_x, theta_y}, with
u(z) = u + z*theta_x and v(z) = v + z*theta_y, so that

    eps   = [u,x,  v,y,  u,y + v,x]
    kappa = [theta_x,x,  theta_y,y,  theta_x,y + theta_y,x]
    gamma = [w,x + theta_x,  w,y + theta_y]

Each element (1, 2, 3) is split at its centroid O into the sub-triangles
(O,1,2), (O,2,3), (O,3,1). A DSG3 triangle is formed on every sub-triangle
with O as its reference node, the centroid dofs are eliminated with
delta_O = (delta_1 + delta_2 + delta_3) / 3, and the three sub-triangle
strain matrices are area-averaged over the element.

Geometry symbols for a triangle (1, 2, 3):
    a = x2 - x1,  b = y2 - y1,  c = y3 - y1,  d = x3 - x1,  2A = a*c - b*d
==============================================================================
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from laminate.clt import LaminateStiffness
from utils.errors import MeshValidationError

DOFS_PER_NODE = 5
ELEMENT_DOFS = 3 * DOFS_PER_NODE

U, V, W, THETA_X, THETA_Y = range(DOFS_PER_NODE)

# local node order of the three sub-triangles, -1 is the centroid
SUB_TRIANGLES = ((-1, 0, 1), (-1, 1, 2), (-1, 2, 0))

DEFAULT_STABILIZATION_ALPHA = 0.1


# =============================================================================
# Geometry
# =============================================================================

@dataclass(frozen=True)
class ElementGeometry:
    """Three field nodes of a triangle, counter-clockwise."""

    coords: np.ndarray  # (3, 2)

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(3, 2)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def a(self) -> float:
        return float(self.coords[1, 0] - self.coords[0, 0])

    @property
    def b(self) -> float:
        return float(self.coords[1, 1] - self.coords[0, 1])

    @property
    def c(self) -> float:
        return float(self.coords[2, 1] - self.coords[0, 1])

    @property
    def d(self) -> float:
        return float(self.coords[2, 0] - self.coords[0, 0])

    @property
    def area(self) -> float:
        return 0.5 * (self.a * self.c - self.b * self.d)

    @property
    def centroid(self) -> np.ndarray:
        return self.coords.mean(axis=0)

    @property
    def longest_edge(self) -> float:
        p = self.coords
        return float(max(np.linalg.norm(p[1] - p[0]),
                         np.linalg.norm(p[2] - p[1]),
                         np.linalg.norm(p[0] - p[2])))


def subdivide(elem: ElementGeometry) -> List[ElementGeometry]:
    """Split at the centroid into (O,1,2), (O,2,3), (O,3,1)."""
    o = elem.centroid
    p = elem.coords
    return [ElementGeometry(np.array([o, p[i], p[j]])) for _, i, j in SUB_TRIANGLES]


# =============================================================================
# DSG3 Strain-Displacement Matrices (vectorized over triangles)
# =============================================================================

def _dsg3_batch(coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    DSG3 matrices for a batch of triangles.

    Args:
        coords: (n, 3, 2) triangle nodes, node 0 being the shear-gap reference

    Returns:
        bp (n, 3, 15), bb (n, 3, 15), bs (n, 2, 15), area (n,)
    """
    x = coords[..., 0]
    y = coords[..., 1]
    a = x[:, 1] - x[:, 0]
    b = y[:, 1] - y[:, 0]
    c = y[:, 2] - y[:, 0]
    d = x[:, 2] - x[:, 0]
    area = 0.5 * (a * c - b * d)
    if np.any(area <= 0.0):
        raise MeshValidationError(
            f"triangle with non-positive area {float(area.min()):.3e} in DSG3 evaluation"
        )
    inv = 1.0 / (2.0 * area)

    # shape-function derivatives
    dndx = np.stack([b - c, c, -b], axis=1) * inv[:, None]
    dndy = np.stack([d - a, -d, a], axis=1) * inv[:, None]

    n = coords.shape[0]
    bp = np.zeros((n, 3, ELEMENT_DOFS))
    bb = np.zeros((n, 3, ELEMENT_DOFS))
    bs = np.zeros((n, 2, ELEMENT_DOFS))

    for k in range(3):
        col = DOFS_PER_NODE * k
        bp[:, 0, col + U] = dndx[:, k]
        bp[:, 1, col + V] = dndy[:, k]
        bp[:, 2, col + U] = dndy[:, k]
        bp[:, 2, col + V] = dndx[:, k]

        bb[:, 0, col + THETA_X] = dndx[:, k]
        bb[:, 1, col + THETA_Y] = dndy[:, k]
        bb[:, 2, col + THETA_X] = dndy[:, k]
        bb[:, 2, col + THETA_Y] = dndx[:, k]

    # shear gaps of nodes 2 and 3 relative to node 1, rotations integrated
    # along the edges with the trapezoidal rule
    dx = np.stack([a, d], axis=1)
    dy = np.stack([b, c], axis=1)
    for k, m in ((1, 0), (2, 1)):
        col_k = DOFS_PER_NODE * k
        for row, deriv in ((0, dndx[:, k]), (1, dndy[:, k])):
            bs[:, row, W] -= deriv
            bs[:, row, col_k + W] += deriv
            for col in (THETA_X, col_k + THETA_X):
                bs[:, row, col] += 0.5 * deriv * dx[:, m]
            for col in (THETA_Y, col_k + THETA_Y):
                bs[:, row, col] += 0.5 * deriv * dy[:, m]

    return bp, bb, bs, area


def dsg3_matrices(sub: ElementGeometry) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    DSG3 matrices of one triangle over the dofs of its nodes (1, 2, 3).

    Returns:
        (Bp 3x15, Bb 3x15, Bs 2x15)

    Raises:
        MeshValidationError: Zero or negative triangle area
    """
    bp, bb, bs, _ = _dsg3_batch(sub.coords[None, :, :])
    return bp[0], bb[0], bs[0]


# =============================================================================
# Cell-Based Smoothing
# =============================================================================

def _centroid_elimination() -> np.ndarray:
    """
    (3, 15, 15) maps from element dofs to each sub-triangle's (O, i, j) dofs.
    """
    eye = np.eye(DOFS_PER_NODE)
    maps = np.zeros((3, ELEMENT_DOFS, ELEMENT_DOFS))
    for s, nodes in enumerate(SUB_TRIANGLES):
        for slot, node in enumerate(nodes):
            rows = slice(DOFS_PER_NODE * slot, DOFS_PER_NODE * (slot + 1))
            if node < 0:
                for k in range(3):
                    maps[s, rows, DOFS_PER_NODE * k:DOFS_PER_NODE * (k + 1)] += eye / 3.0
            else:
                maps[s, rows, DOFS_PER_NODE * node:DOFS_PER_NODE * (node + 1)] += eye
    return maps


_ELIMINATION = _centroid_elimination()


def smoothed_b_matrices(coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Smoothed strain-displacement matrices for a batch of elements.

    Args:
        coords: (m, 3, 2) element node coordinates

    Returns:
        bp (m, 3, 15), bb (m, 3, 15), bs (m, 2, 15), element areas (m,)
    """
    coords = np.asarray(coords, dtype=float)
    m = coords.shape[0]
    centroid = coords.mean(axis=1)

    bp_bar = np.zeros((m, 3, ELEMENT_DOFS))
    bb_bar = np.zeros((m, 3, ELEMENT_DOFS))
    bs_bar = np.zeros((m, 2, ELEMENT_DOFS))
    sub_areas = []
    for s, (_, i, j) in enumerate(SUB_TRIANGLES):
        sub = np.stack([centroid, coords[:, i], coords[:, j]], axis=1)
        bp, bb, bs, area = _dsg3_batch(sub)
        weight = area[:, None, None]
        t = _ELIMINATION[s]
        bp_bar += weight * (bp @ t)
        bb_bar += weight * (bb @ t)
        bs_bar += weight * (bs @ t)
        sub_areas.append(area)

    elem_area = np.sum(sub_areas, axis=0)
    scale = 1.0 / elem_area[:, None, None]
    return bp_bar * scale, bb_bar * scale, bs_bar * scale, elem_area


def shear_stabilization_factor(thickness: float, edge_length, alpha: float = DEFAULT_STABILIZATION_ALPHA):
    """Scale t^2 / (t^2 + alpha h^2) applied to the transverse shear block."""
    t2 = thickness * thickness
    return t2 / (t2 + alpha * np.asarray(edge_length, dtype=float) ** 2)


def element_stiffness_batch(
    bp: np.ndarray,
    bb: np.ndarray,
    bs: np.ndarray,
    area: np.ndarray,
    laminate: LaminateStiffness,
    shear_scale: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    K_e = A_e (Bp'A Bp + Bp'B Bb + Bb'B Bp + Bb'D Bb + s_e Bs'E Bs) for every element.

    Returns:
        (m, 15, 15) symmetric element matrices
    """
    k = np.einsum("eip,ij,ejq->epq", bp, laminate.a_mat, bp)
    if np.any(laminate.b_mat):
        coupling = np.einsum("eip,ij,ejq->epq", bp, laminate.b_mat, bb)
        k += coupling + coupling.transpose(0, 2, 1)
    k += np.einsum("eip,ij,ejq->epq", bb, laminate.d_mat, bb)
    shear = np.einsum("eip,ij,ejq->epq", bs, laminate.e_mat, bs)
    if shear_scale is not None:
        shear *= np.asarray(shear_scale, dtype=float)[:, None, None]
    k += shear
    k *= area[:, None, None]
    return 0.5 * (k + k.transpose(0, 2, 1))


# =============================================================================
# Single-Element API
# =============================================================================

@dataclass(frozen=True)
class SmoothedElementMatrices:
    """Smoothed strain-displacement matrices and stiffness of one element."""

    bp: np.ndarray  # 3x15 membrane
    bb: np.ndarray  # 3x15 bending
    bs: np.ndarray  # 2x15 transverse shear
    k: np.ndarray   # 15x15
    area: float


def smooth_element(
    elem: ElementGeometry,
    laminate: LaminateStiffness,
    stabilization_alpha: Optional[float] = None,
) -> SmoothedElementMatrices:
    """
    Cell-based smoothed element matrices.

    Args:
        elem: Counter-clockwise triangle
        laminate: Constitutive blocks
        stabilization_alpha: Enables shear stabilization with this alpha

    Returns:
        SmoothedElementMatrices
    """
    bp, bb, bs, area = smoothed_b_matrices(elem.coords[None, :, :])
    scale = None
    if stabilization_alpha is not None:
        scale = shear_stabilization_factor(laminate.thickness, [elem.longest_edge], stabilization_alpha)
    k = element_stiffness_batch(bp, bb, bs, area, laminate, scale)
    return SmoothedElementMatrices(bp=bp[0], bb=bb[0], bs=bs[0], k=k[0], area=float(area[0]))
