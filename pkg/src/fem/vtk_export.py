"""
==============================================================================
VTK Export
==============================================================================
Writes the mesh and a displacement field as a legacy-ASCII unstructured
grid (triangles, z = 0) with point arrays u, v, w, thetax, thetay.
==============================================================================
"""

import logging
from pathlib import Path
from typing import Union

from fem.solver import DisplacementField
from meshing.mesh import Mesh
from utils.errors import InvalidInputError

logger = logging.getLogger(__name__)

POINT_ARRAYS = ("u", "v", "w", "thetax", "thetay")


def write_vtk(path: Union[str, Path], mesh: Mesh, disp: DisplacementField, title: str = "plate") -> None:
    """
    Write a legacy ASCII .vtk file.

    Raises:
        InvalidInputError: Field and mesh node counts differ
    """
    import vtk

    if disp.node_count != mesh.node_count:
        raise InvalidInputError(
            f"displacement field has {disp.node_count} nodes, mesh has {mesh.node_count}"
        )

    points = vtk.vtkPoints()
    for i, (x, y) in enumerate(mesh.nodes.tolist()):
        points.InsertPoint(i, x, y, 0.0)

    grid = vtk.vtkUnstructuredGrid()
    grid.Allocate(mesh.element_count)
    grid.SetPoints(points)
    for tri in mesh.elements.tolist():
        ids = vtk.vtkIdList()
        for node in tri:
            ids.InsertNextId(node)
        grid.InsertNextCell(vtk.VTK_TRIANGLE, ids)

    for column, name in enumerate(POINT_ARRAYS):
        array = vtk.vtkDoubleArray()
        array.SetName(name)
        array.SetNumberOfComponents(1)
        for value in disp.values[:, column].tolist():
            array.InsertNextValue(value)
        grid.GetPointData().AddArray(array)

    writer = vtk.vtkUnstructuredGridWriter()
    writer.SetFileName(str(path))
    writer.SetHeader(title)
    writer.SetFileTypeToASCII()
    writer.SetInputData(grid)
    if not writer.Write():
        raise OSError(f"VTK writer failed for {path}")
    logger.info("wrote %s (%d points, %d cells)", path, mesh.node_count, mesh.element_count)
