"""
==============================================================================
Mesh and Pressure-Map File I/O
==============================================================================
Plain-text, line-oriented mesh format (whitespace delimited, '#' comments):

    meshfmt 1
    nodes N
    x y                 (N lines)
    elements M
    i j k               (M lines, 0-based, counter-clockwise)
    clamped K
    i ...               (K indices over one or more lines)
    tip i_le i_te       (optional)

Coordinates are written with repr() so save/load reproduces them exactly.

Pressure maps are CSV files with a header row `element,pressure_pa` and one
row per element.
==============================================================================
"""

import csv
import logging
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from meshing.mesh import Mesh
from utils.errors import MeshFormatError, MeshValidationError

logger = logging.getLogger(__name__)

FORMAT_HEADER = ("meshfmt", "1")

PathLike = Union[str, Path]


# =============================================================================
# Writer
# =============================================================================

def save_mesh(mesh: Mesh, path: PathLike) -> None:
    """Write a mesh in the meshfmt 1 format."""
    lines = ["meshfmt 1", f"nodes {mesh.node_count}"]
    lines.extend(f"{x!r} {y!r}" for x, y in mesh.nodes.tolist())
    lines.append(f"elements {mesh.element_count}")
    lines.extend(f"{i} {j} {k}" for i, j, k in mesh.elements.tolist())
    clamped = sorted(mesh.clamped_nodes)
    lines.append(f"clamped {len(clamped)}")
    for start in range(0, len(clamped), 16):
        lines.append(" ".join(str(i) for i in clamped[start:start + 16]))
    if mesh.has_tip_markers:
        lines.append(f"tip {mesh.tip_leading} {mesh.tip_trailing}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("saved mesh (%d nodes, %d elements) to %s", mesh.node_count, mesh.element_count, path)


# =============================================================================
# Reader
# =============================================================================

def _records(text: str) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line number, tokens) for non-blank, comment-stripped lines."""
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if tokens:
            yield number, tokens


def _count(tokens: List[str], keyword: str, line: int) -> int:
    if len(tokens) != 2 or tokens[0] != keyword:
        raise MeshFormatError(f"expected '{keyword} <count>', got '{' '.join(tokens)}'", line)
    try:
        value = int(tokens[1])
    except ValueError:
        raise MeshFormatError(f"{keyword} count must be an integer, got '{tokens[1]}'", line)
    if value < 0:
        raise MeshFormatError(f"{keyword} count must be non-negative", line)
    return value


def _next(records: Iterator[Tuple[int, List[str]]], expecting: str, last_line: int) -> Tuple[int, List[str]]:
    try:
        return next(records)
    except StopIteration:
        raise MeshFormatError(f"unexpected end of file, expecting {expecting}", last_line + 1)


def _parse(text: str) -> Mesh:
    records = _records(text)
    line = 0

    line, tokens = _next(records, "header", line)
    if tuple(tokens) != FORMAT_HEADER:
        raise MeshFormatError(f"expected header 'meshfmt 1', got '{' '.join(tokens)}'", line)

    line, tokens = _next(records, "'nodes' section", line)
    n_nodes = _count(tokens, "nodes", line)
    nodes = np.empty((n_nodes, 2))
    for i in range(n_nodes):
        line, tokens = _next(records, f"node {i}", line)
        if len(tokens) != 2:
            raise MeshFormatError(f"node line needs 2 coordinates, got {len(tokens)}", line)
        try:
            nodes[i] = [float(tokens[0]), float(tokens[1])]
        except ValueError:
            raise MeshFormatError(f"bad coordinate in '{' '.join(tokens)}'", line)

    line, tokens = _next(records, "'elements' section", line)
    n_elements = _count(tokens, "elements", line)
    elements = np.empty((n_elements, 3), dtype=np.int64)
    for e in range(n_elements):
        line, tokens = _next(records, f"element {e}", line)
        if len(tokens) != 3:
            raise MeshFormatError(f"element line needs 3 node indices, got {len(tokens)}", line)
        try:
            elements[e] = [int(t) for t in tokens]
        except ValueError:
            raise MeshFormatError(f"bad node index in '{' '.join(tokens)}'", line)

    clamped: List[int] = []
    tip: Optional[Tuple[int, int]] = None
    for line, tokens in records:
        keyword = tokens[0]
        if keyword == "clamped":
            wanted = _count(tokens, "clamped", line)
            while len(clamped) < wanted:
                line, tokens = _next(records, "clamped node indices", line)
                try:
                    clamped.extend(int(t) for t in tokens)
                except ValueError:
                    raise MeshFormatError(f"bad clamped index in '{' '.join(tokens)}'", line)
            if len(clamped) != wanted:
                raise MeshFormatError(f"expected {wanted} clamped indices, got {len(clamped)}", line)
        elif keyword == "tip":
            if len(tokens) != 3:
                raise MeshFormatError("expected 'tip <leading> <trailing>'", line)
            try:
                tip = (int(tokens[1]), int(tokens[2]))
            except ValueError:
                raise MeshFormatError(f"bad tip index in '{' '.join(tokens)}'", line)
        else:
            raise MeshFormatError(f"unknown section '{keyword}'", line)

    return Mesh(
        nodes=nodes,
        elements=elements,
        clamped_nodes=frozenset(clamped),
        tip_leading=tip[0] if tip else None,
        tip_trailing=tip[1] if tip else None,
    )


def load_mesh(path: PathLike, reorient: bool = False) -> Mesh:
    """
    Read and validate a meshfmt 1 file.

    Args:
        path: Mesh file
        reorient: Flip clockwise elements instead of rejecting them

    Returns:
        Validated Mesh

    Raises:
        MeshFormatError: Malformed file (message names the line)
        MeshValidationError: Dangling indices, clockwise elements, duplicates
    """
    mesh = _parse(Path(path).read_text(encoding="utf-8"))
    if reorient:
        n = mesh.node_count
        if np.any((mesh.elements < 0) | (mesh.elements >= n)):
            mesh.validate()  # raises with the offending element
        mesh = mesh.reoriented()
    mesh.validate()
    logger.info("loaded mesh %s: %d nodes, %d elements", path, mesh.node_count, mesh.element_count)
    return mesh


# =============================================================================
# Pressure Maps
# =============================================================================

def load_pressure_map(path: PathLike, mesh: Mesh) -> np.ndarray:
    """
    Read a per-element pressure table.

    Returns:
        (M,) pressures in Pa ordered by element index

    Raises:
        MeshFormatError: Bad header or row
        MeshValidationError: Unknown, duplicate or missing element indices
    """
    pressures = np.full(mesh.element_count, np.nan)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["element", "pressure_pa"]:
            raise MeshFormatError("pressure map header must be 'element,pressure_pa'", 1)
        for number, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise MeshFormatError(f"expected 2 columns, got {len(row)}", number)
            try:
                element, value = int(row[0]), float(row[1])
            except ValueError:
                raise MeshFormatError(f"bad pressure row '{','.join(row)}'", number)
            if not 0 <= element < mesh.element_count:
                raise MeshValidationError(
                    f"pressure map references element {element} but mesh has {mesh.element_count}"
                )
            if not np.isnan(pressures[element]):
                raise MeshValidationError(f"element {element} listed twice in pressure map")
            pressures[element] = value

    missing = np.flatnonzero(np.isnan(pressures))
    if missing.size:
        raise MeshValidationError(
            f"pressure map misses {missing.size} elements (first: {int(missing[0])})"
        )
    return pressures
