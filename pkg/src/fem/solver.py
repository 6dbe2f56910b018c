"""
==============================================================================
Constrained Linear Solve
==============================================================================
Clamps all five dofs of the root nodes, factorizes the free block once with
SuperLU and serves any number of right-hand sides.

Before factorizing, the six rigid-body modes of the 5-dof plate are checked
against the clamped set so a rank-deficient system is reported by name
instead of surfacing as a SuperLU failure.
==============================================================================
"""

import logging
import threading
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.sparse import csc_matrix, csr_matrix
from scipy.sparse.linalg import norm as sparse_norm
from scipy.sparse.linalg import splu

from fem.element import DOFS_PER_NODE, U, V, W, THETA_X, THETA_Y
from utils.config import config
from utils.errors import ConfigurationError, InvalidInputError, NumericalError, SingularSystemError

logger = logging.getLogger(__name__)

ALL_COMPONENTS = (U, V, W, THETA_X, THETA_Y)
BENDING_COMPONENTS = (W, THETA_X, THETA_Y)

# Residual targets after refinement: RESIDUAL_TOLERANCE is the relative residual
# reported as clean, BACKWARD_TOLERANCE bounds the normwise backward error
# ||r|| / (||K|| ||x|| + ||f||) and BREAKDOWN_TOLERANCE is a hard limit.
RESIDUAL_TOLERANCE = 1e-8
BACKWARD_TOLERANCE = 1e-10
BREAKDOWN_TOLERANCE = 1e-4
REFINEMENT_STEPS = 2

RIGID_MODE_NAMES = (
    "u-translation",
    "v-translation",
    "w-translation",
    "rotation about y (w = x, theta_x = -1)",
    "rotation about x (w = y, theta_y = -1)",
    "in-plane rotation",
)
_MODE_COMPONENTS = (
    (U,), (V,), (W,), (W, THETA_X), (W, THETA_Y), (U, V),
)


# =============================================================================
# Displacement Field
# =============================================================================

@dataclass(frozen=True)
class DisplacementField:
    """Nodal {u, v, w, theta_x, theta_y}, one row per node."""

    values: np.ndarray  # (N, 5)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1, DOFS_PER_NODE)
        if not np.all(np.isfinite(values)):
            raise NumericalError("displacement field contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "DisplacementField":
        return cls(np.asarray(vector, dtype=float).reshape(-1, DOFS_PER_NODE))

    @classmethod
    def zeros(cls, node_count: int) -> "DisplacementField":
        return cls(np.zeros((node_count, DOFS_PER_NODE)))

    @property
    def node_count(self) -> int:
        return int(self.values.shape[0])

    @property
    def u(self) -> np.ndarray:
        return self.values[:, U]

    @property
    def v(self) -> np.ndarray:
        return self.values[:, V]

    @property
    def w(self) -> np.ndarray:
        return self.values[:, W]

    @property
    def theta_x(self) -> np.ndarray:
        return self.values[:, THETA_X]

    @property
    def theta_y(self) -> np.ndarray:
        return self.values[:, THETA_Y]

    def as_vector(self) -> np.ndarray:
        return self.values.ravel().copy()

    def max_deflection(self) -> float:
        """Largest |w| (m)."""
        return float(np.abs(self.w).max()) if self.node_count else 0.0

    def scaled(self, factor: float) -> "DisplacementField":
        return DisplacementField(self.values * factor)

    def __add__(self, other: "DisplacementField") -> "DisplacementField":
        return DisplacementField(self.values + other.values)


# =============================================================================
# Rigid-Body Mode Check
# =============================================================================

def rigid_body_modes(nodes: np.ndarray, center: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Six zero-strain modes of the 5-dof plate as columns of a (5N, 6) matrix.

    Rotations are taken about `center` (default: node centroid).
    """
    nodes = np.asarray(nodes, dtype=float)
    center = nodes.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    dx = nodes[:, 0] - center[0]
    dy = nodes[:, 1] - center[1]
    modes = np.zeros((nodes.shape[0], DOFS_PER_NODE, 6))
    modes[:, U, 0] = 1.0
    modes[:, V, 1] = 1.0
    modes[:, W, 2] = 1.0
    modes[:, W, 3] = dx
    modes[:, THETA_X, 3] = -1.0
    modes[:, W, 4] = dy
    modes[:, THETA_Y, 4] = -1.0
    modes[:, U, 5] = -dy
    modes[:, V, 5] = dx
    return modes.reshape(-1, 6)


def unrestrained_modes(
    nodes: Optional[np.ndarray],
    clamped: Iterable[int],
    components: Sequence[int] = ALL_COMPONENTS,
) -> List[str]:
    """
    Names of the rigid-body modes the clamped set leaves free.

    Args:
        nodes: Node coordinates; without them only the empty-clamp case is detected
        clamped: Clamped node indices
        components: Dof components kept in the solve
    """
    active = [m for m, comps in enumerate(_MODE_COMPONENTS) if set(comps) <= set(components)]
    clamped = sorted(int(i) for i in clamped)
    if not clamped:
        return [RIGID_MODE_NAMES[m] for m in active]
    if nodes is None:
        return []

    idx = np.asarray(clamped)
    modes = rigid_body_modes(nodes, center=np.asarray(nodes)[idx].mean(axis=0))[:, active]
    modes /= np.linalg.norm(modes, axis=0)
    rows = (DOFS_PER_NODE * idx[:, None] + np.asarray(components)[None, :]).ravel()
    kernel = null_space(modes[rows], rcond=1e-10)
    names = []
    for vec in kernel.T:
        name = RIGID_MODE_NAMES[active[int(np.argmax(np.abs(vec)))]]
        if name not in names:
            names.append(name)
    return names


# =============================================================================
# Solver Context
# =============================================================================

class SolverContext:
    """
    One factorization of the clamped stiffness, reused for many loads.

    Args:
        stiffness: Global (5N x 5N) sparse stiffness
        clamped: Nodes with all five dofs fixed
        nodes: Node coordinates (enables named rigid-mode diagnostics)
        components: Dof components solved for; the rest are returned as zero
        max_dofs: Direct-solver guard (default Config.MAX_DOFS)

    Raises:
        SingularSystemError: The clamped set leaves rigid modes free or SuperLU fails
        ConfigurationError: Too many free dofs for the direct solver
    """

    def __init__(
        self,
        stiffness: csr_matrix,
        clamped: Iterable[int],
        nodes: Optional[np.ndarray] = None,
        components: Sequence[int] = ALL_COMPONENTS,
        max_dofs: Optional[int] = None,
    ):
        n_dofs = stiffness.shape[0]
        if n_dofs % DOFS_PER_NODE:
            raise InvalidInputError(f"stiffness size {n_dofs} is not a multiple of {DOFS_PER_NODE}")
        self.node_count = n_dofs // DOFS_PER_NODE
        self.components = tuple(components)
        self.clamped = frozenset(int(i) for i in clamped)

        free_modes = unrestrained_modes(nodes, self.clamped, self.components)
        if free_modes:
            raise SingularSystemError("constrained stiffness is singular", free_modes)

        mask = np.zeros((self.node_count, DOFS_PER_NODE), dtype=bool)
        mask[:, list(self.components)] = True
        if self.clamped:
            mask[sorted(self.clamped), :] = False
        self.free_dofs = np.flatnonzero(mask.ravel())

        limit = config.MAX_DOFS if max_dofs is None else max_dofs
        if self.free_dofs.size > limit:
            raise ConfigurationError(
                f"{self.free_dofs.size} free dofs exceeds the direct-solver limit of {limit} "
                "(set PROPELLER_MAX_DOFS to raise it)"
            )

        k_ff = stiffness.tocsr()[self.free_dofs][:, self.free_dofs]
        self._k_ff = csc_matrix(k_ff)
        try:
            self._lu = splu(self._k_ff, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SingularSystemError(f"factorization failed: {exc}") from exc
        self._k_norm = float(sparse_norm(self._k_ff, 1))
        self._lock = threading.Lock()
        logger.debug("factorized %d free dofs (%d nonzeros)", self.free_dofs.size, self._k_ff.nnz)

    @property
    def free_dof_count(self) -> int:
        return int(self.free_dofs.size)

    def solve(self, force: np.ndarray) -> DisplacementField:
        """
        Solve K delta = F on the free dofs.

        Raises:
            InvalidInputError: Load on dofs outside the solved components
            NumericalError: Non-finite solution or relative residual above 1e-4
            after iterative refinement
        """
        force = np.asarray(force, dtype=float).ravel()
        if force.size != self.node_count * DOFS_PER_NODE:
            raise InvalidInputError(
                f"force vector has {force.size} entries, expected {self.node_count * DOFS_PER_NODE}"
            )
        outside = np.ones(force.size, dtype=bool)
        outside[self.free_dofs] = False
        node_of = np.arange(force.size) // DOFS_PER_NODE
        outside &= ~np.isin(node_of, list(self.clamped))
        if np.any(force[outside] != 0.0):
            raise InvalidInputError("load acts on dofs excluded from this solve")

        full = np.zeros(force.size)
        f_free = force[self.free_dofs]
        norm_f = np.linalg.norm(f_free)
        if norm_f == 0.0:
            return DisplacementField.from_vector(full)

        with self._lock:
            x = self._lu.solve(f_free)
            r = f_free - self._k_ff @ x
            for _ in range(REFINEMENT_STEPS):
                if not np.all(np.isfinite(x)) or np.linalg.norm(r) <= RESIDUAL_TOLERANCE * norm_f:
                    break
                x = x + self._lu.solve(r)
                r = f_free - self._k_ff @ x

        residual = np.linalg.norm(r) / norm_f
        if not np.isfinite(residual) or residual > BREAKDOWN_TOLERANCE:
            raise NumericalError(f"relative residual {residual:.3e} exceeds {BREAKDOWN_TOLERANCE:g}")
        if residual > RESIDUAL_TOLERANCE:
            backward = np.linalg.norm(r) / (self._k_norm * np.linalg.norm(x) + norm_f)
            log = logger.warning if backward > BACKWARD_TOLERANCE else logger.debug
            log("relative residual %.3e (backward error %.3e) on %d dofs", residual, backward, x.size)
        full[self.free_dofs] = x
        return DisplacementField.from_vector(full)


def solve(
    stiffness: csr_matrix,
    force: np.ndarray,
    clamped: Iterable[int],
    nodes: Optional[np.ndarray] = None,
) -> DisplacementField:
    """
    Single-shot constrained solve (all five dofs per node).

    Args:
        stiffness: Global sparse stiffness
        force: Global load vector
        clamped: Clamped node indices
        nodes: Optional coordinates for named rigid-mode diagnostics

    Returns:
        DisplacementField with zeros at clamped nodes
    """
    return SolverContext(stiffness, clamped, nodes=nodes).solve(force)
