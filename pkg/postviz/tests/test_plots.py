import numpy as np
import pytest

from postviz import plots
from postviz.cli import cli
from postviz.vtk_reader import read_vtk

CSV_2ROW = """\
t,exchange,hcurl,lambda_h12,kv2,norm_identity_residual,llg_iters,eddy_iters
0,4,2,1,0,0,0,0
0.01,3.9,1.9,1,0.001,1e-16,20,10
"""


def _vortex_vtk(n=6):
    """Hand-built snapshot on an (n+1)^3 lattice with a vortex-like field."""
    s = n + 1
    pts = []
    vec = []
    for k in range(s):
        for j in range(s):
            for i in range(s):
                x, y, z = i / n, j / n, k / n
                pts.append((x, y, z))
                dx, dy = x - 0.5, y - 0.5
                r = np.hypot(dx, dy)
                if r >= 0.4:
                    vec.append((0.0, 0.0, -1.0))
                else:
                    vec.append((-dy / max(r, 1e-3), dx / max(r, 1e-3), 0.2))
    lines = ["# vtk DataFile Version 3.0", "fixture", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {len(pts)} double"]
    lines += [f"{x} {y} {z}" for x, y, z in pts]
    lines += ["CELLS 1 5", "4 0 1 2 3", "CELL_TYPES 1", "10",
              f"POINT_DATA {len(pts)}", "VECTORS m double"]
    lines += [f"{a} {b} {c}" for a, b, c in vec]
    return "\n".join(lines) + "\n"


def test_energy_plot(tmp_path):
    csv = tmp_path / "energy.csv"
    csv.write_text(CSV_2ROW)
    out = plots.plot_energies(csv, tmp_path / "energy.png")
    assert out.exists() and out.stat().st_size > 0


def test_energy_missing_column(tmp_path):
    csv = tmp_path / "energy.csv"
    csv.write_text("t,exchange\n0,1\n")
    with pytest.raises(plots.SchemaError, match="hcurl"):
        plots.read_energy_csv(csv)


def test_slice_sampling(tmp_path):
    p = tmp_path / "s.vtk"
    p.write_text(_vortex_vtk())
    snap = read_vtk(p)
    xy, vecs = plots.sample_slice(snap, field="m", plane=0.5)
    assert len(xy) == 49       # one 7x7 lattice layer
    # vortex: strong in-plane field near the center, none near the boundary
    r = np.linalg.norm(xy - 0.5, axis=1)
    inplane = np.linalg.norm(vecs[:, :2], axis=1)
    assert inplane[r < 0.3].mean() > inplane[r > 0.45].mean()


def test_slice_plot(tmp_path):
    p = tmp_path / "s.vtk"
    p.write_text(_vortex_vtk())
    out = plots.plot_slice(p, tmp_path / "slice.png")
    assert out.exists() and out.stat().st_size > 0


def test_slice_missing_field(tmp_path):
    p = tmp_path / "s.vtk"
    p.write_text(_vortex_vtk())
    with pytest.raises(KeyError, match="H"):
        plots.plot_slice(p, tmp_path / "x.png", field="H")


def test_cli_empty_glob(tmp_path, capsys):
    assert cli(["--vtk-glob", str(tmp_path / "none_*.vtk")]) == 0


def test_cli_full(tmp_path):
    (tmp_path / "energy.csv").write_text(CSV_2ROW)
    (tmp_path / "snapshot_0000.vtk").write_text(_vortex_vtk())
    rc = cli(["--csv", str(tmp_path / "energy.csv"),
              "--vtk-glob", str(tmp_path / "snapshot_*.vtk"),
              "--out", str(tmp_path / "plots")])
    assert rc == 0
    assert (tmp_path / "plots" / "energy.png").exists()
    assert (tmp_path / "plots" / "slice_000.png").exists()


def test_plots_do_not_modify_inputs(tmp_path):
    csv = tmp_path / "energy.csv"
    csv.write_text(CSV_2ROW)
    before = csv.read_bytes()
    plots.plot_energies(csv, tmp_path / "e.png")
    assert csv.read_bytes() == before


def test_same_inputs_same_series(tmp_path):
    p = tmp_path / "s.vtk"
    p.write_text(_vortex_vtk())
    snap = read_vtk(p)
    a = plots.sample_slice(snap, plane=0.5)
    b = plots.sample_slice(snap, plane=0.5)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
