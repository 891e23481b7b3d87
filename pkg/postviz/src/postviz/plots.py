"""Energy-curve and vector-slice figures from simulation outputs."""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .vtk_reader import read_vtk

ENERGY_COLUMNS = ("t", "exchange", "hcurl")


class SchemaError(ValueError):
    pass


def read_energy_csv(path):
    """Energy trace columns; raises SchemaError naming any missing column."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        cols = {name: [] for name in reader.fieldnames or ()}
        for row in reader:
            for k, v in row.items():
                cols[k].append(float(v))
    for needed in ENERGY_COLUMNS:
        if needed not in cols:
            raise SchemaError(f"energy CSV is missing column {needed!r}")
    return {k: np.asarray(v) for k, v in cols.items()}


def plot_energies(csv_path, out_path):
    """Exchange norm, field norm, and their sum over time."""
    data = read_energy_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(data["t"], data["exchange"], label="magnetization energy")
    ax.plot(data["t"], data["hcurl"], label="magnetic energy")
    ax.plot(data["t"], data["exchange"] + data["hcurl"], label="total energy",
            linestyle="--")
    ax.set_xlabel("time t")
    ax.set_ylabel("energy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return Path(out_path)


def sample_slice(snapshot, field="m", plane=0.5):
    """Vertices of the layer nearest the plane x3 = plane, with field values.

    Returns (xy, vecs): in-plane coordinates (k, 2) and field vectors (k, 3).
    """
    if field not in snapshot.point_vectors:
        raise KeyError(f"field {field!r} not present in snapshot "
                       f"(has {sorted(snapshot.point_vectors)})")
    z = snapshot.points[:, 2]
    levels = np.unique(z)
    z_star = levels[np.argmin(np.abs(levels - plane))]
    sel = np.abs(z - z_star) < 1e-12
    return snapshot.points[sel][:, :2], snapshot.point_vectors[field][sel]


def plot_slice(vtk_path, out_path, field="m", plane=0.5):
    """Quiver of the in-plane projection, colored by the full magnitude."""
    snap = read_vtk(vtk_path)
    xy, vecs = sample_slice(snap, field=field, plane=plane)
    mag = np.linalg.norm(vecs, axis=1)
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    q = ax.quiver(xy[:, 0], xy[:, 1], vecs[:, 0], vecs[:, 1], mag,
                  cmap="viridis", pivot="middle")
    fig.colorbar(q, ax=ax, label=f"|{field}|")
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return Path(out_path)


@dataclass
class PlotSpec:
    """Batch description: energy CSV and/or snapshot files to render."""

    csv_path: str = None
    vtk_paths: list = field(default_factory=list)
    plane: float = 0.5
    field: str = "m"
    out_dir: str = "."

    def validate(self):
        if self.csv_path is not None and not Path(self.csv_path).exists():
            raise FileNotFoundError(self.csv_path)
        for p in self.vtk_paths:
            if not Path(p).exists():
                raise FileNotFoundError(p)
        return self


def run_plots(spec):
    """Render everything in the spec; returns the list of written images."""
    spec.validate()
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if spec.csv_path is not None:
        written.append(plot_energies(spec.csv_path, out / "energy.png"))
    for i, p in enumerate(sorted(spec.vtk_paths)):
        written.append(plot_slice(p, out / f"slice_{i:03d}.png",
                                  field=spec.field, plane=spec.plane))
    return written
