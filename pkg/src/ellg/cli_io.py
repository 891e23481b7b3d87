"""Configuration parsing, CSV/VTK writers, run manifest, and the command line."""

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, bem, fespace, mesh as meshmod, stepper

_REQUIRED_KEYS = {"theta", "T", "n", "alpha", "sigma", "mu0", "Ce", "coupling"}
_OPTIONAL_KEYS = {"k", "steps", "tol_llg", "tol_eddy", "gmres_restart",
                  "bem_order", "snapshot_every", "outdir"}
_INT_KEYS = {"n", "steps", "gmres_restart", "bem_order", "snapshot_every"}


class ConfigError(ValueError):
    pass


def parse_config(text):
    """Parse a key=value configuration document into a validated SimConfig."""
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _REQUIRED_KEYS | _OPTIONAL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in kv:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        kv[key] = val

    missing = _REQUIRED_KEYS - kv.keys()
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(sorted(missing))}")
    if "k" not in kv and "steps" not in kv:
        raise ConfigError("one of 'k' or 'steps' is required")

    def num(key, cast=float):
        try:
            return cast(kv[key])
        except ValueError:
            raise ConfigError(f"key {key!r}: cannot parse {kv[key]!r}")

    t_final = num("T")
    if t_final <= 0:
        raise ConfigError("T must be positive")
    if "steps" in kv:
        steps = num("steps", int)
        if "k" in kv:
            k = num("k")
            if abs(steps * k - t_final) > 1e-9 * abs(t_final):
                raise ConfigError("inconsistent k and steps: steps*k != T")
    else:
        k = num("k")
        if k <= 0:
            raise ConfigError("k must be positive")
        steps = round(t_final / k)
        if steps < 1 or abs(steps * k - t_final) > 1e-9 * abs(t_final):
            raise ConfigError("k must divide T into a whole number of steps")

    coupling_txt = kv["coupling"].lower()
    try:
        coupling = bem.DtnKind(coupling_txt)
    except ValueError:
        raise ConfigError(f"coupling must be 'costabel' or 'johnson-nedelec', "
                          f"got {kv['coupling']!r}")

    cfg = stepper.SimConfig(
        alpha=num("alpha"), ce=num("Ce"), mu0=num("mu0"), sigma=num("sigma"),
        theta=num("theta"), n=num("n", int), t_final=t_final, steps=steps,
        coupling=coupling,
        tol_llg=num("tol_llg") if "tol_llg" in kv else 1e-12,
        tol_eddy=num("tol_eddy") if "tol_eddy" in kv else 1e-10,
        gmres_restart=num("gmres_restart", int) if "gmres_restart" in kv else 50,
        bem_order=num("bem_order", int) if "bem_order" in kv else 4,
        snapshot_every=num("snapshot_every", int) if "snapshot_every" in kv else None,
        outdir=kv.get("outdir", "out"),
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))
    return cfg


def config_echo(cfg):
    """Normalized key=value text that reparses to an identical SimConfig."""
    lines = [
        f"theta={cfg.theta!r}",
        f"T={cfg.t_final!r}",
        f"steps={cfg.steps}",
        f"n={cfg.n}",
        f"alpha={cfg.alpha!r}",
        f"sigma={cfg.sigma!r}",
        f"mu0={cfg.mu0!r}",
        f"Ce={cfg.ce!r}",
        f"coupling={cfg.coupling.value}",
        f"tol_llg={cfg.tol_llg!r}",
        f"tol_eddy={cfg.tol_eddy!r}",
        f"gmres_restart={cfg.gmres_restart}",
        f"bem_order={cfg.bem_order}",
        f"outdir={cfg.outdir}",
    ]
    if cfg.snapshot_every is not None:
        lines.append(f"snapshot_every={cfg.snapshot_every}")
    return "\n".join(lines) + "\n"


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_energy_csv(trace, path):
    """CSV with one row per recorded step, 17 significant digits."""
    rows = trace.rows()
    if not rows:
        raise ValueError("empty energy trace")
    with open(path, "w", newline="") as f:
        f.write(",".join(trace.COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) for x in row) + "\n")


def read_energy_csv(path):
    """Parse an energy CSV back into column arrays (tests the roundtrip)."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        cols = {h: [] for h in header}
        for line in f:
            for h, v in zip(header, line.strip().split(",")):
                cols[h].append(float(v) if h not in ("llg_iters", "eddy_iters")
                               else int(v))
    return {h: np.array(v) for h, v in cols.items()}


def write_vtk_snapshot(msh, point_fields, path, cell_fields=None, title="snapshot"):
    """Legacy ASCII VTK unstructured grid with named vector fields.

    point_fields / cell_fields: ordered mappings name -> (n, 3) array.
    """
    nv, nt = msh.num_vertices, msh.num_tets
    for name, arr in (point_fields or {}).items():
        if arr.shape != (nv, 3):
            raise ValueError(f"point field {name!r}: shape {arr.shape} != ({nv}, 3)")
    for name, arr in (cell_fields or {}).items():
        if arr.shape != (nt, 3):
            raise ValueError(f"cell field {name!r}: shape {arr.shape} != ({nt}, 3)")
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    for p in msh.vertices:
        lines.append(" ".join(_fmt(x) for x in p))
    lines.append(f"CELLS {nt} {5 * nt}")
    for t in msh.tets:
        lines.append("4 " + " ".join(str(int(i)) for i in t))
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["10"] * nt)
    if point_fields:
        lines.append(f"POINT_DATA {nv}")
        for name, arr in point_fields.items():
            lines.append(f"VECTORS {name} double")
            for v in arr:
                lines.append(" ".join(_fmt(x) for x in v))
    if cell_fields:
        lines.append(f"CELL_DATA {nt}")
        for name, arr in cell_fields.items():
            lines.append(f"VECTORS {name} double")
            for v in arr:
                lines.append(" ".join(_fmt(x) for x in v))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class RunManifest:
    config_echo: str
    version: str
    mesh_stats: dict
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, path):
        Path(path).write_text(json.dumps(
            {"config": self.config_echo, "version": self.version,
             "mesh": self.mesh_stats, "timings": self.timings,
             "outputs": self.outputs}, indent=2) + "\n")


def _snapshot_fields(sim):
    h_coeffs, _ = sim.dofmap.expand(sim.state.a)
    m = sim.state.m
    mnorm = np.linalg.norm(m, axis=1)
    m_unit = m / np.where(mnorm > 0, mnorm, 1.0)[:, None]
    h_vert = fespace.edge_field_vertex_average(sim.mesh, h_coeffs)
    e_cell = fespace.curl_per_tet(sim.mesh, h_coeffs) / sim.config.sigma
    return {"m": m, "m_unit": m_unit, "H": h_vert}, {"E": e_cell}


def execute_run(cfg, outdir=None):
    """Full simulation with all file outputs; returns (sim, trace, manifest)."""
    out = Path(outdir if outdir is not None else cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    timings = {}

    def snapshot_cb(sim, step):
        path = out / f"snapshot_{step:04d}.vtk"
        pf, cf = _snapshot_fields(sim)
        write_vtk_snapshot(sim.mesh, pf, path, cell_fields=cf,
                           title=f"state at step {step}")
        outputs.append(path.name)

    t0 = time.perf_counter()
    try:
        sim, trace = stepper.run(cfg, snapshot_cb=snapshot_cb)
    except stepper.StepperError as exc:
        if exc.trace is not None and exc.trace.rows():
            write_energy_csv(exc.trace, out / "energy.csv")
        raise
    timings["run_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    csv_path = out / "energy.csv"
    write_energy_csv(trace, csv_path)
    outputs.append(csv_path.name)
    timings["io_s"] = time.perf_counter() - t0

    manifest = RunManifest(
        config_echo=config_echo(cfg), version=__version__,
        mesh_stats={"vertices": sim.mesh.num_vertices,
                    "edges": sim.mesh.num_edges,
                    "tets": sim.mesh.num_tets,
                    "boundary_triangles": len(sim.mesh.boundary_faces),
                    "boundary_vertices": len(sim.mesh.boundary_vertices),
                    "unknowns_field": sim.dofmap.num_unknowns,
                    "unknowns_velocity": 2 * sim.mesh.num_vertices},
        timings=timings, outputs=outputs)
    manifest.write(out / "manifest.json")
    return sim, trace, manifest


# ---------------------------------------------------------------------------
# validation suite and oracles
# ---------------------------------------------------------------------------

def run_validation_suite(out=sys.stdout):
    """Quick structural and analytic checks; returns True when all pass."""
    ok = True

    def check(name, passed, detail=""):
        nonlocal ok
        ok &= bool(passed)
        out.write(f"{'PASS' if passed else 'FAIL'}  {name}{'  ' + detail if detail else ''}\n")

    for n in (1, 2, 3):
        msh = meshmod.build_cube_mesh(n)
        euler = (msh.num_vertices - msh.num_edges + msh.count_all_faces()
                 - msh.num_tets)
        check(f"cube n={n} Euler relation", euler == 1, f"V-E+F-T={euler}")
        vol = msh.volumes.sum()
        check(f"cube n={n} volume", abs(vol - 1.0) < 1e-12, f"sum={vol:.15f}")

    sph = meshmod.build_icosphere(1, 1.0)
    ops = bem.assemble_dtn(sph, kind=bem.DtnKind.COSTABEL)
    ones_p = np.ones(len(sph.triangles))
    # the 80-panel sphere carries ~10% faceting error; the tight 3%/5% gates
    # run on the 320-panel sphere in the acceptance suite
    v11 = float(ones_p @ (ops.V @ ones_p))
    check("sphere single-layer oracle", abs(v11 - 4 * np.pi) < 0.12 * 4 * np.pi,
          f"<V1,1>={v11:.4f} vs {4 * np.pi:.4f}")
    ones_v = np.ones(len(sph.vertices))
    d11 = -float(ones_v @ (ops.B @ ones_v))
    check("sphere field-map oracle", abs(d11 + 4 * np.pi) < 0.08 * 4 * np.pi,
          f"<DtN1,1>={d11:.4f} vs {-4 * np.pi:.4f}")

    rng = np.random.default_rng(7)
    cube = meshmod.build_cube_mesh(2)
    copsur = meshmod.extract_boundary(cube)
    cops = bem.assemble_dtn(copsur, kind=bem.DtnKind.COSTABEL)
    zs = rng.standard_normal((25, cops.B.shape[0]))
    pos = all(z @ (cops.B @ z) > 0 for z in zs)
    check("field-map ellipticity (cube n=2)", pos)

    cfg = stepper.SimConfig(alpha=0.5, ce=1.0, mu0=1.0, sigma=1.0, theta=1.0,
                            n=2, t_final=0.1, steps=10)
    dof = fespace.build_xh_dofmap(cube)
    h_uniform = fespace.interpolate_edge(lambda x: np.array([1.0, 0.0, 0.0]), cube)
    lam = cube.vertices[cube.boundary_vertices, 0]   # trace of the potential x1
    init = (np.tile([0.0, 0.0, 1.0], (cube.num_vertices, 1)),
            np.concatenate([h_uniform.coeffs[dof.interior_edges], lam]))
    sim = stepper.Simulation(cfg, initial=init)
    v, _ = sim.llg_step()
    err = np.abs(v - np.array([0.4, -0.8, 0.0])).max()
    check("uniform-field velocity oracle", err < 1e-9, f"max err {err:.2e}")
    return ok


def cli(argv=None):
    parser = argparse.ArgumentParser(
        prog="ellg",
        description="FEM-BEM tangent-plane integrator for the eddy-current "
                    "LLG system on the unit cube")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run a full simulation from a config file")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.add_argument("--out", default=None, help="output directory override")

    sub.add_parser("validate", help="run the built-in invariant suite")

    p_bem = sub.add_parser("bem-oracle", help="sphere oracles for the boundary operators")
    p_bem.add_argument("--refine", type=int, default=2)
    p_bem.add_argument("--radius", type=float, default=1.0)

    p_mesh = sub.add_parser("mesh-info", help="print mesh statistics")
    p_mesh.add_argument("--n", type=int, required=True)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0

    if args.command is None:
        parser.print_usage()
        return 2

    try:
        if args.command == "run":
            cfg = parse_config(Path(args.config).read_text())
            sim, trace, manifest = execute_run(cfg, outdir=args.out)
            mean = sim.mean_m()
            print(f"completed {cfg.steps} steps to T={cfg.t_final:g}; "
                  f"mean m = ({mean[0]:.4f}, {mean[1]:.4f}, {mean[2]:.4f})")
            return 0
        if args.command == "validate":
            return 0 if run_validation_suite() else 1
        if args.command == "bem-oracle":
            sph = meshmod.build_icosphere(args.refine, args.radius)
            ops = bem.assemble_dtn(sph, kind=bem.DtnKind.COSTABEL)
            ones_p = np.ones(len(sph.triangles))
            ones_v = np.ones(len(sph.vertices))
            v11 = float(ones_p @ (ops.V @ ones_p))
            d11 = -float(ones_v @ (ops.B @ ones_v))
            r = args.radius
            print(f"<V1,1>   = {v11:.8f}   analytic {4 * np.pi * r ** 3:.8f}   "
                  f"rel.err {abs(v11 - 4 * np.pi * r ** 3) / (4 * np.pi * r ** 3):.3e}")
            print(f"<DtN1,1> = {d11:.8f}   analytic {-4 * np.pi * r:.8f}   "
                  f"rel.err {abs(d11 + 4 * np.pi * r) / (4 * np.pi * r):.3e}")
            return 0
        if args.command == "mesh-info":
            msh = meshmod.build_cube_mesh(args.n)
            q = meshmod.mesh_quality(msh)
            print(f"vertices            {msh.num_vertices}")
            print(f"tets                {msh.num_tets}")
            print(f"edges               {msh.num_edges}")
            print(f"boundary triangles  {len(msh.boundary_faces)}")
            print(f"boundary vertices   {len(msh.boundary_vertices)}")
            print(f"max diameter        {q.max_diameter:.6f}")
            print(f"shape ratio         {q.max_shape_ratio:.6f}")
            print(f"dihedral range      [{q.min_dihedral_deg:.2f}, "
                  f"{q.max_dihedral_deg:.2f}] deg")
            return 0
    except (ConfigError, ValueError, OSError, stepper.StepperError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


def main():
    sys.exit(cli())
