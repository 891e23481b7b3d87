"""Minimal reader for legacy ASCII VTK unstructured grids with vector fields."""

from dataclasses import dataclass, field

import numpy as np


class VtkFormatError(ValueError):
    pass


@dataclass
class VtkSnapshot:
    points: np.ndarray                        # (n, 3)
    cells: np.ndarray                         # (m, 4) tetrahedra
    point_vectors: dict = field(default_factory=dict)
    cell_vectors: dict = field(default_factory=dict)


def read_vtk(path):
    """Parse a legacy ASCII VTK unstructured grid file."""
    lines = [l.strip() for l in open(path) if l.strip()]
    if not lines or not lines[0].startswith("# vtk DataFile"):
        raise VtkFormatError(f"{path}: not a legacy VTK file")
    i = 0
    points = None
    cells = None
    point_vectors = {}
    cell_vectors = {}
    section = None          # 'point' or 'cell'
    n_points = n_cells = 0
    while i < len(lines):
        line = lines[i]
        tok = line.split()
        if tok[0] == "POINTS":
            n_points = int(tok[1])
            vals = _read_floats(lines, i + 1, 3 * n_points)
            points = np.array(vals).reshape(n_points, 3)
            i += 1 + _span(lines, i + 1, 3 * n_points)
        elif tok[0] == "CELLS":
            n_cells = int(tok[1])
            rows = []
            for j in range(n_cells):
                row = [int(x) for x in lines[i + 1 + j].split()]
                if row[0] != 4:
                    raise VtkFormatError(f"{path}: only tetrahedral cells supported")
                rows.append(row[1:])
            cells = np.array(rows, dtype=np.int64)
            i += 1 + n_cells
        elif tok[0] == "CELL_TYPES":
            i += 1 + int(tok[1])
        elif tok[0] == "POINT_DATA":
            section = "point"
            i += 1
        elif tok[0] == "CELL_DATA":
            section = "cell"
            i += 1
        elif tok[0] == "VECTORS":
            name = tok[1]
            count = n_points if section == "point" else n_cells
            vals = _read_floats(lines, i + 1, 3 * count)
            arr = np.array(vals).reshape(count, 3)
            (point_vectors if section == "point" else cell_vectors)[name] = arr
            i += 1 + _span(lines, i + 1, 3 * count)
        else:
            i += 1
    if points is None:
        raise VtkFormatError(f"{path}: no POINTS section")
    return VtkSnapshot(points=points, cells=cells,
                       point_vectors=point_vectors, cell_vectors=cell_vectors)


def _read_floats(lines, start, count):
    vals = []
    i = start
    while len(vals) < count:
        vals.extend(float(x) for x in lines[i].split())
        i += 1
    if len(vals) != count:
        raise VtkFormatError("ragged data block")
    return vals


def _span(lines, start, count):
    got = 0
    i = start
    while got < count:
        got += len(lines[i].split())
        i += 1
    return i - start
