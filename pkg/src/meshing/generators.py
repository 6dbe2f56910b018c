"""
==============================================================================
Structured Triangle Mesh Generators
==============================================================================
    - gen_rect_mesh: cantilever validation plates (clamped at x = 0)
    - gen_blade_mesh: flat expanded-blade planforms (clamped at the hub)

Both generators lay nodes out in spanwise stations (x) with a fixed number
of chordwise nodes (y). Quads are split along the diagonal that points away
from the chord mid-line, so the triangulation is mirror symmetric about it
whenever the chordwise cell count is even.

Blade outline: Wageningen-B style radial chord distribution with a straight
mid-chord line (no skew, no rake), closing to a single tip node. The chord
is rescaled so the mesh area equals the expanded-area-ratio identity.
==============================================================================
"""

import logging
from typing import List, Tuple

import numpy as np

from meshing.mesh import Mesh, PlanformSpec
from utils.errors import InvalidInputError

logger = logging.getLogger(__name__)

# c(r) * Z / (D * EAR) at r/R = 0.2 ... 1.0
_B_SERIES_R = np.array([0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
_B_SERIES_CHORD = np.array([1.662, 1.882, 2.050, 2.152, 2.187, 2.144, 1.970, 1.582, 0.0])

# tip-chord marker station, fraction of the radius
TIP_MARKER_FRACTION = 0.95


def _split_quads(
    index: np.ndarray,
    y_mid: np.ndarray,
    mid_line: float,
) -> List[Tuple[int, int, int]]:
    """
    Triangulate a (stations x chordwise) grid of node indices.

    Args:
        index: (ns, nc) node index grid
        y_mid: (ns - 1, nc - 1) cell-centre y
        mid_line: chord mid-line y
    """
    triangles = []
    ns, nc = index.shape
    for j in range(ns - 1):
        for i in range(nc - 1):
            n00 = index[j, i]
            n10 = index[j + 1, i]
            n11 = index[j + 1, i + 1]
            n01 = index[j, i + 1]
            if y_mid[j, i] < mid_line:
                triangles.append((n00, n10, n11))
                triangles.append((n00, n11, n01))
            else:
                triangles.append((n00, n10, n01))
                triangles.append((n10, n11, n01))
    return triangles


# =============================================================================
# Rectangular Plate
# =============================================================================

def gen_rect_mesh(length: float, width: float, nx: int, ny: int) -> Mesh:
    """
    Structured nx x ny node grid on [0, length] x [0, width].

    The x = 0 edge is clamped; tip markers are the far corners,
    leading (length, width) and trailing (length, 0).

    Raises:
        InvalidInputError: For non-positive dimensions or fewer than 2 nodes per side
    """
    if length <= 0.0 or width <= 0.0:
        raise InvalidInputError(f"plate dimensions must be positive, got {length} x {width}")
    if nx < 2 or ny < 2:
        raise InvalidInputError(f"need at least 2 nodes per side, got {nx} x {ny}")

    x = np.linspace(0.0, length, nx)
    y = np.linspace(0.0, width, ny)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    index = np.arange(nx * ny).reshape(nx, ny)

    y_cells = 0.5 * (yy[:-1, :-1] + yy[:-1, 1:])
    elements = np.array(_split_quads(index, y_cells, 0.5 * width), dtype=np.int64)

    mesh = Mesh(
        nodes=nodes,
        elements=elements,
        clamped_nodes=frozenset(index[0, :].tolist()),
        tip_leading=int(index[-1, -1]),
        tip_trailing=int(index[-1, 0]),
    )
    logger.debug("rect mesh %gx%g m, %dx%d nodes, %d elements",
                 length, width, nx, ny, mesh.element_count)
    return mesh


# =============================================================================
# Expanded Blade Planform
# =============================================================================

def chord_distribution(spec: PlanformSpec, r: np.ndarray) -> np.ndarray:
    """Unscaled chord (m) at radii r, B-series shape."""
    x = np.asarray(r, dtype=float) / spec.radius
    shape = np.interp(x, _B_SERIES_R, _B_SERIES_CHORD)
    return shape * spec.diameter * spec.expanded_area_ratio / spec.blade_count


def _station_layout(spec: PlanformSpec) -> Tuple[np.ndarray, int, int]:
    """Radial stations (hub .. tip marker .. tip) and chordwise node count."""
    r_hub, r_tip = spec.hub_radius, spec.radius
    r_mark = TIP_MARKER_FRACTION * r_tip
    if r_mark <= r_hub:
        raise InvalidInputError("hub radius leaves no room for the tip-chord station")

    span = r_tip - r_hub
    mean_chord = spec.blade_area() / span
    cells = max(4, spec.target_element_count // 2)
    nc_cells = max(2, int(round(np.sqrt(cells * mean_chord / span))))
    nc_cells += nc_cells % 2  # even -> mirror-symmetric split
    ns_cells = max(2, int(round(cells / nc_cells)))

    dr = span / ns_cells
    n_main = max(1, int(round((r_mark - r_hub) / dr)))
    main = np.linspace(r_hub, r_mark, n_main + 1)
    n_cap = max(1, int(round((r_tip - r_mark) / dr)))
    cap = np.linspace(r_mark, r_tip, n_cap + 1)[1:]
    return np.concatenate([main, cap]), nc_cells + 1, n_main


def gen_blade_mesh(spec: PlanformSpec) -> Mesh:
    """
    Flat expanded-blade mesh: x radial (hub -> tip), y chordwise (TE -> LE).

    The hub station x = r_hub is clamped; tip markers are the leading and
    trailing edge nodes of the r = 0.95 R station.

    Raises:
        InvalidInputError: If the scaled outline degenerates
    """
    stations, nc, mark_index = _station_layout(spec)
    full = stations[:-1]  # last station is the tip point

    # scale the chord so that the meshed outline hits the EAR area exactly
    raw = chord_distribution(spec, stations)
    raw_area = float(np.sum(0.5 * (raw[1:] + raw[:-1]) * np.diff(stations)))
    scale = spec.blade_area() / raw_area
    chords = raw * scale

    span = spec.radius - spec.hub_radius
    if chords.max() > span:
        raise InvalidInputError(
            f"EAR {spec.expanded_area_ratio} too large for the chord model: "
            f"max chord {chords.max():.4f} m exceeds span {span:.4f} m"
        )
    if np.any(chords[:-1] <= 0.0):
        raise InvalidInputError("blade outline has a zero chord before the tip")

    eta = np.linspace(-0.5, 0.5, nc)
    xs = np.repeat(full, nc)
    ys = (chords[:-1, None] * eta[None, :]).ravel()
    nodes = np.column_stack([xs, ys])
    index = np.arange(len(full) * nc).reshape(len(full), nc)

    y_cells = 0.25 * (
        chords[:-2, None] * (eta[None, :-1] + eta[None, 1:])
        + chords[1:-1, None] * (eta[None, :-1] + eta[None, 1:])
    )
    triangles = _split_quads(index, y_cells, 0.0)

    tip = len(nodes)
    nodes = np.vstack([nodes, [[stations[-1], 0.0]]])
    last = index[-1]
    triangles.extend((last[i], tip, last[i + 1]) for i in range(nc - 1))

    mesh = Mesh(
        nodes=nodes,
        elements=np.array(triangles, dtype=np.int64),
        clamped_nodes=frozenset(index[0].tolist()),
        tip_leading=int(index[mark_index, -1]),
        tip_trailing=int(index[mark_index, 0]),
    )
    logger.info(
        "blade mesh D=%.3f EAR=%.2f Z=%d: %d nodes, %d elements, area %.6f m2 (target %.6f)",
        spec.diameter, spec.expanded_area_ratio, spec.blade_count,
        mesh.node_count, mesh.element_count, mesh.total_area(), spec.blade_area(),
    )
    return mesh
