"""Galerkin boundary-element operators for the Laplace kernel on closed surfaces.

Inner (source-panel) integrals use exact closed forms for constant and linear
densities on flat triangles; outer integrals use collapsed Gauss rules whose
order is raised for touching or nearby panel pairs.  The hypersingular
operator is assembled through its regularized form, which only needs the
single-layer panel integrals and per-triangle constant surface curls.
"""

import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .quadrature import map_triangle_rule
from . import solver

FOUR_PI = 4.0 * np.pi


class DtnKind(Enum):
    COSTABEL = "costabel"
    JOHNSON_NEDELEC = "johnson-nedelec"


class BemError(ValueError):
    pass


def panel_potentials(x, tri, normal):
    """Closed-form flat-triangle potentials at observation points x.

    All arrays broadcast on leading dimensions; tri has trailing shape (3, 3)
    and normal (3,).  Returns (I0, I1, DB, D1, rho, w0):

      I0 = int 1/R dS,            I1 = int (y - rho)/R dS,
      DB = int n.(x-y)/R^3 dS,    D1 = int n.(x-y) (y - rho)/R^3 dS,

    with R = |x - y|, rho the in-plane projection of x, and w0 the signed
    height of x over the panel plane.  The 1/(4 pi) kernel factor is not
    included.
    """
    v0 = tri[..., 0, :]
    w0 = np.einsum('...i,...i->...', x - v0, normal)

    a = tri                                    # edge starts (cyclic)
    b = np.roll(tri, -1, axis=-2)              # edge ends
    e = b - a
    ell = np.linalg.norm(e, axis=-1)

    # snap w0 to zero for in-plane observation points: rounding noise in the
    # projection would otherwise turn the principal value (0) of the
    # double-layer self term into a spurious +-2*pi solid angle
    w0 = np.where(np.abs(w0) < 1e-12 * ell.max(axis=-1), 0.0, w0)
    rho = x - w0[..., None] * normal
    shat = e / ell[..., None]
    mhat = np.cross(shat, normal[..., None, :])

    ar = a - rho[..., None, :]
    br = b - rho[..., None, :]
    s_m = np.einsum('...ij,...ij->...i', ar, shat)
    s_p = np.einsum('...ij,...ij->...i', br, shat)
    t = np.einsum('...ij,...ij->...i', ar, mhat)
    w0e = w0[..., None]
    r_m = np.sqrt(np.einsum('...ij,...ij->...i', ar, ar) + w0e ** 2)
    r_p = np.sqrt(np.einsum('...ij,...ij->...i', br, br) + w0e ** 2)
    r0sq = t * t + w0e ** 2

    # log term, evaluated on the numerically safe branch; when the point lies
    # on an edge line (r0 ~ 0) every use of L carries a vanishing prefactor,
    # so zeroing it is the correct limit
    pos = (s_m + s_p) >= 0
    num = np.where(pos, r_p + s_p, r_m - s_m)
    den = np.where(pos, r_m + s_m, r_p - s_p)
    scale = ell
    tiny = 1e-14 * scale
    bad = (num < tiny) | (den < tiny)
    L = np.where(bad, 0.0, np.log(np.where(bad, 1.0, num / den)))

    absw = np.abs(w0e)
    beta = (np.arctan2(t * s_p, r0sq + absw * r_p)
            - np.arctan2(t * s_m, r0sq + absw * r_m)).sum(axis=-1)

    I0 = (t * L).sum(axis=-1) - np.abs(w0) * beta
    I1 = 0.5 * (mhat * (r0sq * L + s_p * r_p - s_m * r_m)[..., None]).sum(axis=-2)
    DB = np.sign(w0) * beta
    D1 = -w0[..., None] * (mhat * L[..., None]).sum(axis=-2)
    return I0, I1, DB, D1, rho, w0


def surface_gradients(tri, normal, area):
    """In-plane gradients of the three P1 hat functions on each triangle."""
    g = np.empty_like(tri)
    for j in range(3):
        opp = tri[..., (j + 2) % 3, :] - tri[..., (j + 1) % 3, :]
        g[..., j, :] = np.cross(normal, opp) / (2.0 * area[..., None])
    return g


@dataclass
class BemOperators:
    """Dense Galerkin matrices over a closed surface.

    V: single layer (P0 x P0).  K_pv: principal-value double layer
    (P0 test x P1 trial).  M_gamma: boundary mass (P0 x P1).
    W: hypersingular (P1 x P1).  B: matrix of the negative discrete
    Dirichlet-to-Neumann pairing, <DtN l, z> = -z^T B l.
    """

    V: np.ndarray
    K_pv: np.ndarray
    M_gamma: np.ndarray
    W: np.ndarray
    area_total: float
    vertex_weights: np.ndarray      # integral of each P1 hat over the surface
    B: np.ndarray = None
    kind: DtnKind = None
    _vfac: object = field(default=None, repr=False)

    def h12_norm_sq(self, zeta):
        """Discrete H^{1/2} surrogate: hypersingular energy plus squared mean."""
        mean = float(self.vertex_weights @ zeta)
        return float(zeta @ (self.W @ zeta)) + mean * mean / self.area_total


def _classify_pairs(surface):
    """Split ordered panel pairs into far/near/vertex/edge/identical classes."""
    nt = len(surface.triangles)
    inc = np.zeros((nt, len(surface.vertices)), dtype=np.int8)
    for j in range(3):
        inc[np.arange(nt), surface.triangles[:, j]] = 1
    shared = inc @ inc.T

    tri = surface.vertices[surface.triangles]
    cen = tri.mean(axis=1)
    diam = np.linalg.norm(tri - np.roll(tri, 1, axis=1), axis=2).max(axis=1)
    dist = np.linalg.norm(cen[:, None, :] - cen[None, :, :], axis=2)
    close = dist < 1.5 * (diam[:, None] + diam[None, :])

    classes = {}
    classes['identical'] = np.where(shared == 3)
    classes['edge'] = np.where(shared == 2)
    classes['vertex'] = np.where(shared == 1)
    classes['near'] = np.where((shared == 0) & close)
    classes['far'] = np.where((shared == 0) & ~close)
    return classes


def _rotate_outer(tri_p, tris_p_idx, tris, cls, surface):
    """Cyclically rotate outer triangles so Gauss clustering matches the
    singular set: shared vertex first for vertex pairs, non-shared vertex
    first for edge pairs."""
    if cls not in ('vertex', 'edge'):
        return tri_p
    out = tri_p.copy()
    ids_p = surface.triangles[tris_p_idx]
    ids_q = surface.triangles[tris]
    for k in range(len(tri_p)):
        setq = set(ids_q[k].tolist())
        if cls == 'vertex':
            pos = next(j for j in range(3) if ids_p[k, j] in setq)
        else:
            pos = next(j for j in range(3) if ids_p[k, j] not in setq)
        if pos:
            out[k] = np.roll(out[k], -pos, axis=0)
    return out


def assemble_single_layer(surface, order=4):
    """Dense symmetric Galerkin single-layer matrix over P0 panels."""
    ops = assemble_operators(surface, order=order)
    return ops.V


def assemble_double_layer(surface, order=4):
    """Principal-value double-layer matrix (P0 x P1) and the boundary mass."""
    ops = assemble_operators(surface, order=order)
    return ops.K_pv, ops.M_gamma


def assemble_hypersingular(surface, order=4):
    ops = assemble_operators(surface, order=order)
    return ops.W


_CLASS_ORDER_BUMP = {'far': 0, 'near': 2, 'vertex': 4, 'edge': 6, 'identical': 8}
# outer-rule grading per class: cluster toward the set where the inner
# potential loses smoothness (shared vertex at v0, shared edge at v1-v2)
_CLASS_GRADE = {'far': None, 'near': None, 'vertex': 'v0', 'edge': 'edge12',
                'identical': None}


def assemble_operators(surface, order=4):
    """Assemble V, K_pv, M_gamma and W over a closed surface."""
    if np.any(surface.areas <= 0):
        raise BemError("degenerate (zero-area) panel")
    nt = len(surface.triangles)
    nv = len(surface.vertices)
    tri = surface.vertices[surface.triangles]
    normals = surface.normals
    areas = surface.areas
    sgrad = surface_gradients(tri, normals, areas)   # (nt, 3, 3)

    V = np.zeros((nt, nt))
    K = np.zeros((nt, nv))

    nthreads = max(1, int(os.environ.get("ELLG_THREADS", "1")))
    classes = _classify_pairs(surface)
    for cls, (pp, qq) in classes.items():
        if len(pp) == 0:
            continue
        p_order = order + _CLASS_ORDER_BUMP[cls]
        chunks = _chunk(len(pp), 8192)
        args = [(pp[s], qq[s]) for s in chunks]

        def work(pq):
            cp, cq = pq
            outer = _rotate_outer(tri[cp], cp, cq, cls, surface)
            pts, wts = map_triangle_rule(outer, p_order, grade=_CLASS_GRADE[cls])
            I0, _, DB, D1, rho, _ = panel_potentials(
                pts, tri[cq][:, None], normals[cq][:, None])
            vloc = (wts * I0).sum(axis=1) / FOUR_PI
            kloc = np.empty((len(cp), 3))
            v0q = tri[cq][:, None, 0, :]
            for j in range(3):
                gj = sgrad[cq, j][:, None, :]
                lam = (j == 0) + np.einsum('mqi,mqi->mq', rho - v0q, gj)
                val = lam * DB + np.einsum('mqi,mqi->mq', D1, gj)
                kloc[:, j] = (wts * val).sum(axis=1) / FOUR_PI
            return cp, cq, vloc, kloc

        if nthreads > 1 and len(args) > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=nthreads) as ex:
                results = list(ex.map(work, args))
        else:
            results = [work(a) for a in args]
        for cp, cq, vloc, kloc in results:
            V[cp, cq] += vloc
            for j in range(3):
                np.add.at(K, (cp, surface.triangles[cq, j]), kloc[:, j])

    V = 0.5 * (V + V.T)

    M = np.zeros((nt, nv))
    for j in range(3):
        np.add.at(M, (np.arange(nt), surface.triangles[:, j]), areas / 3.0)

    # regularized hypersingular form: per-triangle constant surface curls
    # n x grad(phi) paired through the single-layer panel integrals
    curls = np.cross(normals[:, None, :], sgrad)     # (nt, 3verts, 3comp)
    C = [np.zeros((nt, nv)) for _ in range(3)]
    for j in range(3):
        for c in range(3):
            np.add.at(C[c], (np.arange(nt), surface.triangles[:, j]), curls[:, j, c])
    W = np.zeros((nv, nv))
    for c in range(3):
        W += C[c].T @ (V @ C[c])
    W = 0.5 * (W + W.T)

    return BemOperators(V=V, K_pv=K, M_gamma=M, W=W,
                        area_total=float(areas.sum()),
                        vertex_weights=M.sum(axis=0))


def _chunk(n, size):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def assemble_dtn(surface, kind=DtnKind.COSTABEL, order=4, ops=None):
    """Discrete Dirichlet-to-Neumann matrix B with <DtN l, z> = -z^T B l.

    Costabel: B = (M/2 - K_pv)^T V^{-1} (M/2 - K_pv) + W, symmetric positive
    definite.  Johnson-Nedelec: B = M^T V^{-1} (M/2 - K_pv), nonsymmetric.
    """
    if ops is None:
        ops = assemble_operators(surface, order=order)
    try:
        vfac = solver.factorize_dense_spd(ops.V)
    except solver.SolverError as exc:
        raise BemError(f"single-layer matrix is not SPD (assembly bug): {exc}")
    T = 0.5 * ops.M_gamma - ops.K_pv
    Y = vfac.solve(T)
    if kind == DtnKind.COSTABEL:
        B = T.T @ Y + ops.W
        B = 0.5 * (B + B.T)
    elif kind == DtnKind.JOHNSON_NEDELEC:
        B = ops.M_gamma.T @ Y
    else:
        raise BemError(f"unknown coupling kind: {kind}")
    ops.B = B
    ops.kind = kind
    ops._vfac = vfac
    return ops


def dump_triplets(matrix, path):
    """Debug dump in plain-text 'row col value' triplet format."""
    m = np.asarray(matrix)
    with open(path, "w") as f:
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                if m[i, j] != 0.0:
                    f.write(f"{i} {j} {m[i, j]:.17g}\n")
