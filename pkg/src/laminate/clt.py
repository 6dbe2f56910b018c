"""
==============================================================================
Classical Laminate Theory Engine
==============================================================================
Builds the constitutive matrices consumed by the plate solver:

    [N]   [A  B] [eps  ]
    [M] = [B  D] [kappa]        Q = E * gamma  (FSDT transverse shear)

A, B, D are the first, second and third moments of the rotated ply
stiffnesses through the thickness; E is the shear-corrected transverse
shear block ordered (xz, yz).

All functions are pure; LaminateStiffness is immutable.
==============================================================================
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from laminate.materials import Layup, Material

# First-order shear deformation shear correction factor
SHEAR_CORRECTION = 5.0 / 6.0


# =============================================================================
# Data Containers
# =============================================================================

@dataclass(frozen=True)
class LaminateStiffness:
    """Membrane (A), coupling (B), bending (D) and transverse shear (E) blocks."""

    a_mat: np.ndarray  # 3x3, N/m
    b_mat: np.ndarray  # 3x3, N
    d_mat: np.ndarray  # 3x3, N*m
    e_mat: np.ndarray  # 2x2, N/m
    thickness: float   # m

    def __post_init__(self):
        for name in ("a_mat", "b_mat", "d_mat", "e_mat"):
            getattr(self, name).setflags(write=False)

    def abd_matrix(self) -> np.ndarray:
        """Assembled 6x6 [[A, B], [B, D]]."""
        return np.block([[self.a_mat, self.b_mat], [self.b_mat, self.d_mat]])

    def is_symmetric_coupling_free(self, rtol: float = 1e-9) -> bool:
        """True when ||B||_inf is negligible against ||A||_inf."""
        a_norm = np.abs(self.a_mat).sum(axis=1).max()
        b_norm = np.abs(self.b_mat).sum(axis=1).max()
        return bool(b_norm <= rtol * a_norm)


@dataclass(frozen=True)
class StressResultantState:
    """Force/moment resultants with the strains and curvatures producing them."""

    n_vec: np.ndarray      # [Nx, Ny, Nxy], N/m
    m_vec: np.ndarray      # [Mx, My, Mxy], N
    eps_vec: np.ndarray    # mid-plane strains
    kappa_vec: np.ndarray  # curvatures, 1/m


# =============================================================================
# Ply-Level Stiffness
# =============================================================================

def reduced_stiffness(material: Material) -> np.ndarray:
    """
    Plane-stress reduced stiffness Q in material axes (Pa).

    Raises:
        ValueError: If 1 - nu12*nu21 <= 0
    """
    denom = 1.0 - material.nu12 * material.nu21
    if denom <= 0.0:
        raise ValueError(f"non-physical lamina constants (1 - nu12*nu21 = {denom:.3e})")
    q11 = material.e1 / denom
    q22 = material.e2 / denom
    q12 = material.nu12 * material.e2 / denom
    return np.array([
        [q11, q12, 0.0],
        [q12, q22, 0.0],
        [0.0, 0.0, material.g12],
    ])


def _transformation(theta: float) -> np.ndarray:
    c = np.cos(theta)
    s = np.sin(theta)
    return np.array([
        [c * c, s * s, -2.0 * c * s],
        [s * s, c * c, 2.0 * c * s],
        [c * s, -c * s, c * c - s * s],
    ])


def rotate_stiffness(q: np.ndarray, theta: float) -> np.ndarray:
    """
    Rotate a plane-stress stiffness from material axes to laminate axes.

    Args:
        q: 3x3 symmetric stiffness in material axes
        theta: Fiber angle (rad), counter-clockwise from x towards y

    Returns:
        Q-bar(theta), symmetric
    """
    t = _transformation(theta)
    q_bar = t @ q @ t.T
    return 0.5 * (q_bar + q_bar.T)


def transverse_shear_stiffness(material: Material, theta: float) -> np.ndarray:
    """Rotated transverse shear moduli [[G_xz, G_xzyz], [., G_yz]] (Pa)."""
    c = np.cos(theta)
    s = np.sin(theta)
    r = np.array([[c, s], [-s, c]])
    g = np.diag([material.g13, material.g23_effective])
    return r.T @ g @ r


# =============================================================================
# Laminate Stiffness
# =============================================================================

def build_stiffness(layup: Layup, shear_correction: float = SHEAR_CORRECTION) -> LaminateStiffness:
    """
    Integrate ply stiffnesses through the thickness.

    A_ij = sum Qbar_ij (z_k - z_k-1)
    B_ij = 1/2 sum Qbar_ij (z_k^2 - z_k-1^2)
    D_ij = 1/3 sum Qbar_ij (z_k^3 - z_k-1^3)
    E    = k_s sum G_rot (z_k - z_k-1)
    """
    plies = layup.expanded_plies()
    z = layup.z_coordinates()

    a_mat = np.zeros((3, 3))
    b_mat = np.zeros((3, 3))
    d_mat = np.zeros((3, 3))
    e_mat = np.zeros((2, 2))

    q_cache = {}
    for k, ply in enumerate(plies):
        key = id(ply.material)
        if key not in q_cache:
            q_cache[key] = reduced_stiffness(ply.material)
        q_bar = rotate_stiffness(q_cache[key], ply.angle)
        z0, z1 = z[k], z[k + 1]
        a_mat += q_bar * (z1 - z0)
        b_mat += q_bar * (z1 ** 2 - z0 ** 2) / 2.0
        d_mat += q_bar * (z1 ** 3 - z0 ** 3) / 3.0
        e_mat += transverse_shear_stiffness(ply.material, ply.angle) * (z1 - z0)

    return LaminateStiffness(
        a_mat=0.5 * (a_mat + a_mat.T),
        b_mat=0.5 * (b_mat + b_mat.T),
        d_mat=0.5 * (d_mat + d_mat.T),
        e_mat=shear_correction * 0.5 * (e_mat + e_mat.T),
        thickness=layup.total_thickness,
    )


def laminate_response(
    stiff: LaminateStiffness,
    eps: np.ndarray,
    kappa: np.ndarray,
) -> StressResultantState:
    """Evaluate [N; M] = [[A, B], [B, D]] [eps; kappa]."""
    eps = np.asarray(eps, dtype=float).reshape(3)
    kappa = np.asarray(kappa, dtype=float).reshape(3)
    n_vec = stiff.a_mat @ eps + stiff.b_mat @ kappa
    m_vec = stiff.b_mat @ eps + stiff.d_mat @ kappa
    return StressResultantState(n_vec=n_vec, m_vec=m_vec, eps_vec=eps, kappa_vec=kappa)


def strain_transformation(theta: float) -> np.ndarray:
    """Engineering-strain rotation, laminate axes -> material axes."""
    c = np.cos(theta)
    s = np.sin(theta)
    return np.array([
        [c * c, s * s, c * s],
        [s * s, c * c, -c * s],
        [-2.0 * c * s, 2.0 * c * s, c * c - s * s],
    ])


def ply_strains(layup: Layup, eps: np.ndarray, kappa: np.ndarray) -> List[np.ndarray]:
    """
    Material-axis strains at the bottom and top surface of every ply.

    Args:
        layup: Ply stack
        eps: Mid-plane strains, shape (3,) or (n, 3)
        kappa: Curvatures, same shape as eps

    Returns:
        One array per expanded ply with shape (2, 3) for a single state or
        (n, 2, 3) for n states: surfaces (bottom, top) by (eps_1, eps_2, gamma_12)
    """
    eps = np.asarray(eps, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    single = eps.ndim == 1
    eps = eps.reshape(-1, 3)
    kappa = kappa.reshape(-1, 3)
    z = layup.z_coordinates()
    out = []
    for k, ply in enumerate(layup.expanded_plies()):
        t_eps = strain_transformation(ply.angle)
        surfaces = np.stack([eps + z[k] * kappa, eps + z[k + 1] * kappa], axis=1)
        local = surfaces @ t_eps.T
        out.append(local[0] if single else local)
    return out
