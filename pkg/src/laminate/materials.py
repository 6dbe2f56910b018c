"""
==============================================================================
Lamina and Layup Records
==============================================================================
Pydantic models for orthotropic lamina constants and ply stacking sequences.

Angles are radians internally, measured counter-clockwise from the x axis
towards the y axis, and reduced to the half-turn [0, pi). Degrees are only
used at user-facing boundaries (Layup.from_degrees / Layup.angles_deg).

Usage:
    from laminate.materials import Material, Layup

    as4 = Material.as4()
    layup = Layup.from_degrees([40.0] * 24, as4, thickness=0.125e-3, symmetric=False)
==============================================================================
"""

import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def normalize_angle(theta: float) -> float:
    """Reduce a fiber angle (radians) to [0, pi)."""
    reduced = math.fmod(theta, math.pi)
    if reduced < 0.0:
        reduced += math.pi
    # fmod can return pi itself for inputs a hair below a multiple of pi
    if reduced >= math.pi:
        reduced -= math.pi
    return reduced + 0.0


# =============================================================================
# Material
# =============================================================================

class Material(BaseModel):
    """Orthotropic lamina elastic constants (SI units)."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(default="lamina", description="Material label")
    e1: float = Field(..., gt=0, description="Longitudinal modulus (Pa)")
    e2: float = Field(..., gt=0, description="Transverse modulus (Pa)")
    g12: float = Field(..., gt=0, description="In-plane shear modulus (Pa)")
    g23: Optional[float] = Field(
        default=None, gt=0,
        description="Transverse shear modulus (Pa); derived from e2 and nu23 when omitted",
    )
    nu12: float = Field(..., ge=0, lt=0.5, description="Major Poisson ratio")
    nu23: float = Field(default=0.4, ge=0, lt=1.0, description="Transverse Poisson ratio")
    ply_thickness: float = Field(..., gt=0, description="Nominal ply thickness (m)")

    @model_validator(mode="after")
    def _check_physical(self) -> "Material":
        if 1.0 - self.nu12 * self.nu21 <= 0.0:
            raise ValueError(
                f"non-physical constants: 1 - nu12*nu21 = {1.0 - self.nu12 * self.nu21:.3e} <= 0"
            )
        return self

    @property
    def nu21(self) -> float:
        """Minor Poisson ratio nu12*E2/E1."""
        return self.nu12 * self.e2 / self.e1

    @property
    def g13(self) -> float:
        """Transverse shear modulus in the fiber plane, taken equal to G12."""
        return self.g12

    @property
    def g23_effective(self) -> float:
        """G23 as given, or E2 / (2 (1 + nu23))."""
        if self.g23 is not None:
            return self.g23
        return self.e2 / (2.0 * (1.0 + self.nu23))

    @classmethod
    def as4(cls) -> "Material":
        """AS4 carbon / 3501-6 epoxy prepreg."""
        return cls(
            name="AS4-3501-6",
            e1=126e9,
            e2=11e9,
            g12=6.6e9,
            nu12=0.28,
            nu23=0.4,
            ply_thickness=125e-6,
        )

    @classmethod
    def isotropic(cls, e: float, nu: float, thickness: float, name: str = "isotropic") -> "Material":
        """Isotropic material expressed with orthotropic constants."""
        g = e / (2.0 * (1.0 + nu))
        return cls(name=name, e1=e, e2=e, g12=g, g23=g, nu12=nu, nu23=nu, ply_thickness=thickness)


# =============================================================================
# Ply and Layup
# =============================================================================

class Ply(BaseModel):
    """Single ply: fiber angle, thickness and material."""

    model_config = ConfigDict(frozen=True)

    angle: float = Field(..., description="Fiber angle (rad), reduced to [0, pi)")
    thickness: float = Field(..., gt=0, description="Ply thickness (m)")
    material: Material

    @field_validator("angle")
    @classmethod
    def _reduce_angle(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("ply angle must be finite")
        return normalize_angle(v)


class Layup(BaseModel):
    """
    Ordered ply stack from the outer surface towards the mid-plane.

    With symmetric=True the listed plies are the half stack and the full
    laminate is the list followed by its mirror image.
    """

    model_config = ConfigDict(frozen=True)

    plies: List[Ply] = Field(..., min_length=1, description="Ply list (half stack when symmetric)")
    symmetric: bool = Field(default=False, description="Mirror the list about the mid-plane")

    @classmethod
    def from_degrees(
        cls,
        angles_deg: Sequence[float],
        material: Material,
        thickness: Optional[float] = None,
        symmetric: bool = False,
    ) -> "Layup":
        """
        Build a layup from angles in degrees.

        Args:
            angles_deg: Ply angles (deg); the half stack when symmetric
            material: Lamina material of every ply
            thickness: Ply thickness (m); material nominal thickness when omitted
            symmetric: Mirror the list about the mid-plane
        """
        t = material.ply_thickness if thickness is None else thickness
        plies = [Ply(angle=math.radians(a), thickness=t, material=material) for a in angles_deg]
        return cls(plies=plies, symmetric=symmetric)

    @classmethod
    def from_radians(
        cls,
        angles: Sequence[float],
        material: Material,
        thickness: Optional[float] = None,
        symmetric: bool = False,
    ) -> "Layup":
        """Same as from_degrees with radian inputs."""
        t = material.ply_thickness if thickness is None else thickness
        plies = [Ply(angle=float(a), thickness=t, material=material) for a in angles]
        return cls(plies=plies, symmetric=symmetric)

    def expanded_plies(self) -> List[Ply]:
        """Full ply sequence, bottom (z_0) to top (z_n)."""
        if self.symmetric:
            return list(self.plies) + list(reversed(self.plies))
        return list(self.plies)

    @property
    def ply_count(self) -> int:
        return len(self.expanded_plies())

    @property
    def total_thickness(self) -> float:
        return float(sum(p.thickness for p in self.expanded_plies()))

    def z_coordinates(self) -> np.ndarray:
        """Interface coordinates z_0 < ... < z_n about the mid-plane (m)."""
        t = np.array([p.thickness for p in self.expanded_plies()], dtype=float)
        z = np.concatenate(([0.0], np.cumsum(t)))
        return z - 0.5 * z[-1]

    def angles_deg(self) -> List[float]:
        """Listed (not expanded) ply angles in degrees."""
        return [math.degrees(p.angle) for p in self.plies]

    def mirrored(self) -> "Layup":
        """Layup with every angle theta replaced by -theta."""
        return Layup(
            plies=[p.model_copy(update={"angle": normalize_angle(-p.angle)}) for p in self.plies],
            symmetric=self.symmetric,
        )

    def scaled(self, factor: float) -> "Layup":
        """Layup with every ply thickness multiplied by factor."""
        return Layup(
            plies=[p.model_copy(update={"thickness": p.thickness * factor}) for p in self.plies],
            symmetric=self.symmetric,
        )
