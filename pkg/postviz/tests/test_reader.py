import numpy as np
import pytest

from postviz.vtk_reader import VtkFormatError, read_vtk

SAMPLE = """\
# vtk DataFile Version 3.0
fixture
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 4 double
0 0 0
1 0 0
0 1 0
0 0 1
CELLS 1 5
4 0 1 2 3
CELL_TYPES 1
10
POINT_DATA 4
VECTORS m double
0 0 1
0 0 -1
1 0 0
0 1 0
VECTORS H double
0 0 2
0 0 2
0 0 2
0 0 2
CELL_DATA 1
VECTORS E double
0.5 0 0
"""


def test_reads_sample(tmp_path):
    p = tmp_path / "s.vtk"
    p.write_text(SAMPLE)
    snap = read_vtk(p)
    assert snap.points.shape == (4, 3)
    assert snap.cells.shape == (1, 4)
    assert set(snap.point_vectors) == {"m", "H"}
    assert np.allclose(snap.point_vectors["H"], [0, 0, 2])
    assert np.allclose(snap.cell_vectors["E"][0], [0.5, 0, 0])


def test_rejects_non_vtk(tmp_path):
    p = tmp_path / "x.vtk"
    p.write_text("hello\nworld\n")
    with pytest.raises(VtkFormatError):
        read_vtk(p)


def test_rejects_non_tet_cells(tmp_path):
    bad = SAMPLE.replace("CELLS 1 5\n4 0 1 2 3", "CELLS 1 4\n3 0 1 2")
    p = tmp_path / "bad.vtk"
    p.write_text(bad)
    with pytest.raises(VtkFormatError):
        read_vtk(p)
