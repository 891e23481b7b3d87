"""Tangent-plane time integrator coupling the magnetization update with the
FEM-BEM field step.

Each step solves two linear systems: (1) the velocity v in the discrete
tangent space of m (v(z).m(z) = 0 at every vertex, enforced by unknown
reduction through per-vertex frames), (2) the coupled field pair (H, lambda)
in the constrained edge-element/boundary space.  The magnetization update
m <- m + k v is nodewise, so |m(z)|^2 grows exactly by k^2 |v(z)|^2.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import assembly, bem, fespace, mesh as meshmod, solver


@dataclass
class SimConfig:
    alpha: float
    ce: float
    mu0: float
    sigma: float
    theta: float
    n: int
    t_final: float
    steps: int
    coupling: bem.DtnKind = bem.DtnKind.COSTABEL
    tol_llg: float = 1e-12            # velocity enters nodewise identities
    tol_eddy: float = 1e-10
    gmres_restart: int = 50
    bem_order: int = 4
    snapshot_every: int = None
    outdir: str = "out"

    @property
    def k(self):
        return self.t_final / self.steps

    def validate(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.ce <= 0 or self.mu0 <= 0 or self.sigma <= 0:
            raise ValueError("Ce, mu0 and sigma must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta = {self.theta} outside [0, 1]")
        if self.n < 1:
            raise ValueError("mesh subdivisions n must be >= 1")
        if self.t_final <= 0 or self.steps < 1:
            raise ValueError("need T > 0 and steps >= 1")
        if self.k >= 2.0 * self.alpha:
            raise ValueError(
                f"time step k = {self.k:g} too large: stability requires "
                f"k < 2*alpha = {2.0 * self.alpha:g}")
        return self

    def effective_snapshot_every(self):
        if self.snapshot_every is not None:
            return max(1, self.snapshot_every)
        return max(1, self.steps // 10)


@dataclass
class SimState:
    step: int
    m: np.ndarray            # (nv, 3)
    a: np.ndarray            # coupled unknowns [interior edges; boundary values]
    v: np.ndarray            # (nv, 3) last velocity
    vacc_sq: np.ndarray      # per-vertex running sum of |v|^2
    kv2: float = 0.0         # k * sum_i ||v_i||_L2^2
    tangency_max: float = 0.0  # max over steps/vertices of |v(z).m(z)|


@dataclass
class EnergyTrace:
    t: list = field(default_factory=list)
    exchange: list = field(default_factory=list)          # ||grad m||_L2
    hcurl: list = field(default_factory=list)             # ||H||_{H(curl)}
    lambda_h12: list = field(default_factory=list)        # surrogate boundary norm
    kv2: list = field(default_factory=list)               # k sum ||v||^2
    norm_identity_residual: list = field(default_factory=list)
    llg_iters: list = field(default_factory=list)
    eddy_iters: list = field(default_factory=list)

    COLUMNS = ("t", "exchange", "hcurl", "lambda_h12", "kv2",
               "norm_identity_residual", "llg_iters", "eddy_iters")

    def append(self, **kw):
        for c in self.COLUMNS:
            getattr(self, c).append(kw[c])

    def rows(self):
        return list(zip(*(getattr(self, c) for c in self.COLUMNS)))

    def monitor_energy(self):
        """exchange^2 + hcurl^2 + lambda^2 + kv2 per recorded step."""
        e = np.asarray(self.exchange)
        h = np.asarray(self.hcurl)
        l = np.asarray(self.lambda_h12)
        return e * e + h * h + l * l + np.asarray(self.kv2)


class StepperError(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


def initial_magnetization(x):
    """Vortex initial state: out-of-plane core at the cube axis, down outside.

    Read in centered coordinates so the field has unit length everywhere:
    4 A^2 d + (A^2 - d)^2 = (A^2 + d)^2.
    """
    x1, x2 = x[0] - 0.5, x[1] - 0.5
    d = x1 * x1 + x2 * x2
    if d >= 0.25:
        return np.array([0.0, 0.0, -1.0])
    a = (1.0 - 2.0 * np.sqrt(d)) ** 4 / 4.0
    return np.array([2.0 * a * x1, 2.0 * a * x2, a * a - d]) / (a * a + d)


H0_VALUE = np.array([0.0, 0.0, 2.0])


def initial_data(config, msh, dofmap):
    """Benchmark initial data: vortex m, uniform H = (0,0,2), boundary trace
    of the potential 2*x3.  The coupled pair satisfies the boundary-edge
    constraint exactly because 2*dz equals the nodal difference of 2*x3."""
    m0 = fespace.interpolate_nodal(initial_magnetization, msh)
    h0 = fespace.interpolate_edge(lambda x: H0_VALUE, msh)
    lam0 = 2.0 * msh.vertices[msh.boundary_vertices, 2]
    a0 = np.concatenate([h0.coeffs[dofmap.interior_edges], lam0])
    return m0.values, a0


class Simulation:
    """Owns the mesh, the assembled operators and the evolving state."""

    def __init__(self, config, initial=None, warn=True):
        config.validate()
        self.config = config
        if warn and config.theta <= 0.5:
            h = 1.0 / config.n
            if config.theta < 0.5:
                warnings.warn(f"theta = {config.theta} < 1/2 needs k = o(h^2); "
                              f"k/h^2 = {config.k / h ** 2:.3g}")
            else:
                warnings.warn(f"theta = 1/2 needs k = o(h); k/h = {config.k / h:.3g}")
        self.mesh = meshmod.build_cube_mesh(config.n)
        self.surface = meshmod.extract_boundary(self.mesh)
        self.ops = bem.assemble_dtn(self.surface, kind=config.coupling,
                                    order=config.bem_order)
        self.fem = assembly.assemble_fem(self.mesh, config.sigma, config.mu0)
        self.dofmap = fespace.build_xh_dofmap(self.mesh)
        self.gram = assembly.assemble_xh_system(self.dofmap, self.fem, self.ops.B, 0.0)
        self.L = assembly.assemble_xh_system(self.dofmap, self.fem, self.ops.B, config.k)
        ni = self.dofmap.num_interior_edges
        nu = self.dofmap.num_unknowns
        self.eddy_precond = solver.BlockDiagPreconditioner(
            self.L, [np.arange(ni), np.arange(ni, nu)])
        self._mass_vec = self.fem.mass_vec()
        self._stiff_vec = self.fem.stiff_vec()

        if initial is None:
            m0, a0 = initial_data(config, self.mesh, self.dofmap)
        else:
            m0, a0 = initial
        nv = self.mesh.num_vertices
        self.state = SimState(step=0, m=np.asarray(m0, dtype=float).copy(),
                              a=np.asarray(a0, dtype=float).copy(),
                              v=np.zeros((nv, 3)), vacc_sq=np.zeros(nv))
        self._m0_sq = np.einsum('ij,ij->i', self.state.m, self.state.m)

    # -- energies ---------------------------------------------------------
    # quadratic forms of PSD matrices can round to -1e-17; clamp before sqrt
    def exchange_norm(self, m=None):
        m = self.state.m if m is None else m
        q = sum(m[:, c] @ (self.fem.S_s @ m[:, c]) for c in range(3))
        return float(np.sqrt(max(q, 0.0)))

    def hcurl_norm(self, h_coeffs):
        q = (h_coeffs @ (self.fem.M_nd @ h_coeffs)
             + h_coeffs @ (self.fem.C_nd @ h_coeffs))
        return float(np.sqrt(max(q, 0.0)))

    def lambda_norm(self, lam):
        return float(np.sqrt(max(self.ops.h12_norm_sq(lam), 0.0)))

    def l2_norm_sq_vec(self, v):
        return float(sum(v[:, c] @ (self.fem.M_s @ v[:, c]) for c in range(3)))

    def norm_identity_residual(self):
        msq = np.einsum('ij,ij->i', self.state.m, self.state.m)
        k = self.config.k
        return float(np.max(np.abs(msq - self._m0_sq - k * k * self.state.vacc_sq)))

    def mean_m(self):
        w = np.asarray(self.fem.M_s.sum(axis=1)).ravel()
        return (w @ self.state.m) / w.sum()

    # -- the two solves ---------------------------------------------------
    def llg_step(self):
        """Velocity solve in the reduced tangent unknowns."""
        cfg = self.config
        st = self.state
        frame = fespace.tangent_frames(fespace.P1VecField(st.m))
        R = fespace.frame_prolongation(frame)
        skew = assembly.assemble_skew(self.mesh, st.m)
        a_full = (cfg.alpha * self._mass_vec + skew
                  + cfg.ce * cfg.theta * cfg.k * self._stiff_vec)
        a_red = (R.T @ (a_full @ R)).tocsr()
        h_coeffs, _ = self.dofmap.expand(st.a)
        rhs_full = -cfg.ce * (self._stiff_vec @ st.m.ravel()) + self.fem.G.T @ h_coeffs
        rhs_red = R.T @ rhs_full

        precond = _TwoByTwoJacobi(a_red, self.mesh.num_vertices)
        try:
            u, report = solver.solve_general(a_red, rhs_red, tol=cfg.tol_llg,
                                             precond=precond,
                                             restart=cfg.gmres_restart)
        except solver.SolverError as exc:
            raise StepperError(f"velocity solve failed at step {st.step}: {exc}")
        v = (R @ u).reshape(-1, 3)
        return v, report

    def eddy_step(self, v):
        """Coupled field solve for the next (H, lambda)."""
        cfg = self.config
        st = self.state
        rhs_top = self.fem.G @ v.ravel()
        rhs = self.gram @ st.a - cfg.k * (self.dofmap.prolong.T @ np.concatenate(
            [rhs_top, np.zeros(self.dofmap.num_boundary_vertices)]))
        try:
            if cfg.coupling == bem.DtnKind.COSTABEL:
                a_next, report = solver.solve_spd(self.L, rhs, tol=cfg.tol_eddy,
                                                  precond=self.eddy_precond)
            else:
                a_next, report = solver.solve_general(self.L, rhs, tol=cfg.tol_eddy,
                                                      precond=self.eddy_precond,
                                                      restart=cfg.gmres_restart)
        except solver.SolverError as exc:
            raise StepperError(f"field solve failed at step {st.step}: {exc}")
        return a_next, report

    def step(self):
        """One pass of the integrator: velocity, nodewise update, field."""
        st = self.state
        v, rep1 = self.llg_step()
        st.tangency_max = max(st.tangency_max,
                              float(np.abs(np.einsum('ij,ij->i', v, st.m)).max()))
        m_next = update_m(st.m, v, self.config.k)
        a_next, rep2 = self.eddy_step(v)
        st.v = v
        st.vacc_sq += np.einsum('ij,ij->i', v, v)
        st.kv2 += self.config.k * self.l2_norm_sq_vec(v)
        st.m = m_next
        st.a = a_next
        st.step += 1
        return rep1, rep2

    def record(self, trace, llg_iters=0, eddy_iters=0):
        h_coeffs, lam = self.dofmap.expand(self.state.a)
        trace.append(t=self.state.step * self.config.k,
                     exchange=self.exchange_norm(),
                     hcurl=self.hcurl_norm(h_coeffs),
                     lambda_h12=self.lambda_norm(lam),
                     kv2=self.state.kv2,
                     norm_identity_residual=self.norm_identity_residual(),
                     llg_iters=llg_iters, eddy_iters=eddy_iters)


class _TwoByTwoJacobi:
    """Per-vertex 2x2 block Jacobi for the reduced tangent system."""

    def __init__(self, a, nv):
        a = a.tocsr()
        blocks = np.empty((nv, 2, 2))
        d0 = a.diagonal()
        up = np.array([a[2 * z, 2 * z + 1] for z in range(nv)])
        lo = np.array([a[2 * z + 1, 2 * z] for z in range(nv)])
        blocks[:, 0, 0] = d0[0::2]
        blocks[:, 1, 1] = d0[1::2]
        blocks[:, 0, 1] = up
        blocks[:, 1, 0] = lo
        self.inv = np.linalg.inv(blocks)
        self.n = 2 * nv

    def as_linear_operator(self):
        from scipy.sparse.linalg import LinearOperator
        inv = self.inv

        def mv(r):
            return np.einsum('zab,zb->za', inv, r.reshape(-1, 2)).ravel()

        return LinearOperator((self.n, self.n), matvec=mv)


def update_m(m, v, k):
    """Nodewise magnetization update m + k v (no renormalization)."""
    return m + k * v


def run(config, initial=None, snapshot_cb=None, warn=True):
    """Run the full time loop; returns (Simulation, EnergyTrace).

    snapshot_cb(sim, step_index) is invoked at the configured cadence and at
    the final step.  On a solver failure the partial trace is attached to the
    raised StepperError.
    """
    sim = Simulation(config, initial=initial, warn=warn)
    trace = EnergyTrace()
    sim.record(trace)
    every = config.effective_snapshot_every()
    if snapshot_cb is not None:
        snapshot_cb(sim, 0)
    for i in range(config.steps):
        try:
            rep1, rep2 = sim.step()
        except StepperError as exc:
            exc.trace = trace
            raise
        sim.record(trace, llg_iters=rep1.iterations, eddy_iters=rep2.iterations)
        if snapshot_cb is not None and (sim.state.step % every == 0
                                        or sim.state.step == config.steps):
            snapshot_cb(sim, sim.state.step)
    return sim, trace
