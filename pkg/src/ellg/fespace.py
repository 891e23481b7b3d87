"""P1 nodal fields, lowest-order edge elements, tangent frames, coupled DOF map.

The coupled unknown is a pair (xi, zeta): an edge-element field in the volume
and a P1 function on the boundary whose surface gradient matches the
tangential trace of xi.  On every boundary edge (z0, z1) with z0 < z1 this
pins the edge circulation to zeta(z1) - zeta(z0), so the free unknowns are
the interior-edge circulations plus the boundary nodal values.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import gauss01

_LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass
class P1VecField:
    """One 3-vector per mesh vertex."""

    values: np.ndarray  # (nv, 3)

    def copy(self):
        return P1VecField(self.values.copy())


@dataclass
class EdgeField:
    """One circulation coefficient per mesh edge (global low->high orientation)."""

    coeffs: np.ndarray  # (ne,)


@dataclass
class TangentFrame:
    """Per-vertex orthonormal pair (t1, t2), both orthogonal to the carrier field."""

    t1: np.ndarray  # (nv, 3)
    t2: np.ndarray  # (nv, 3)


@dataclass
class XhDofMap:
    """Unknown ordering [interior edge circulations; boundary nodal values].

    `prolong` maps unknowns to the full vector [all edge circulations;
    boundary nodal values]; boundary-edge rows carry -1 at the low vertex and
    +1 at the high vertex so that the circulation equals the nodal difference
    of the boundary function along the global edge orientation.
    """

    num_interior_edges: int
    num_boundary_vertices: int
    interior_edges: np.ndarray      # edge indices, ascending
    prolong: sp.csr_matrix          # (ne + nb) x (num_unknowns)

    @property
    def num_unknowns(self):
        return self.num_interior_edges + self.num_boundary_vertices

    def expand(self, a):
        """Unknown vector -> (edge coefficients, boundary values)."""
        full = self.prolong @ a
        ne = self.prolong.shape[0] - self.num_boundary_vertices
        return full[:ne], full[ne:]


def interpolate_nodal(f, mesh):
    """Vertex interpolant of a vector-valued function f(x) -> (3,)."""
    vals = np.array([f(x) for x in mesh.vertices], dtype=float)
    return P1VecField(vals)


def interpolate_edge(f, mesh, npts=3):
    """Edge interpolant: coefficients are circulations along global edge
    orientation, integrated with an npts-point Gauss rule."""
    s, w = gauss01(npts)
    x0 = mesh.vertices[mesh.edges[:, 0]]
    x1 = mesh.vertices[mesh.edges[:, 1]]
    d = x1 - x0
    coeffs = np.zeros(len(mesh.edges))
    for si, wi in zip(s, w):
        pts = x0 + si * d
        vals = np.array([f(p) for p in pts], dtype=float)
        coeffs += wi * np.einsum('ij,ij->i', vals, d)
    return EdgeField(coeffs)


def build_xh_dofmap(mesh):
    """DOF map for the coupled space on a mesh with boundary connectivity."""
    if mesh.boundary_edge_mask is None:
        raise ValueError("mesh is missing boundary connectivity")
    ne = mesh.num_edges
    nb = len(mesh.boundary_vertices)
    interior = np.flatnonzero(~mesh.boundary_edge_mask)
    ni = len(interior)

    rows, cols, vals = [], [], []
    for col, e in enumerate(interior):
        rows.append(e)
        cols.append(col)
        vals.append(1.0)
    bmap = mesh.vertex_to_boundary
    for e in np.flatnonzero(mesh.boundary_edge_mask):
        z0, z1 = mesh.edges[e]
        rows += [e, e]
        cols += [ni + bmap[z1], ni + bmap[z0]]
        vals += [1.0, -1.0]
    for i in range(nb):
        rows.append(ne + i)
        cols.append(ni + i)
        vals.append(1.0)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(ne + nb, ni + nb))
    return XhDofMap(num_interior_edges=ni, num_boundary_vertices=nb,
                    interior_edges=interior, prolong=P)


_AXES = np.eye(3)


def tangent_frames(m, min_norm=0.1):
    """Deterministic orthonormal frames orthogonal to m at every vertex.

    Picks the canonical axis a minimizing |a . m| (largest axis index on
    ties), then t1 = normalize(a x m), t2 = normalize(m x t1).
    """
    vals = np.asarray(m.values if isinstance(m, P1VecField) else m, dtype=float)
    norms = np.linalg.norm(vals, axis=1)
    bad = np.flatnonzero(norms <= min_norm)
    if len(bad):
        raise ValueError(f"magnetization nearly zero at vertex {int(bad[0])} "
                         f"(|m| = {norms[bad[0]]:.3e})")
    comp = np.abs(vals)
    axis = 2 - np.argmin(comp[:, ::-1], axis=1)
    a = _AXES[axis]
    t1 = np.cross(a, vals)
    t1 = t1 / np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(vals, t1)
    t2 = t2 / np.linalg.norm(t2, axis=1)[:, None]
    return TangentFrame(t1=t1, t2=t2)


def frame_prolongation(frame):
    """Sparse (3*nv) x (2*nv) map from tangent coefficients to nodal vectors."""
    nv = len(frame.t1)
    rows = np.repeat(3 * np.arange(nv), 3) + np.tile(np.arange(3), nv)
    cols1 = np.repeat(2 * np.arange(nv), 3)
    data1 = frame.t1.ravel()
    data2 = frame.t2.ravel()
    R = sp.csr_matrix(
        (np.concatenate([data1, data2]),
         (np.concatenate([rows, rows]), np.concatenate([cols1, cols1 + 1]))),
        shape=(3 * nv, 2 * nv))
    return R


def edge_field_in_tets(mesh, coeffs, points, tet_ids):
    """Evaluate an edge-element field at given points inside given tets."""
    pts = np.atleast_2d(points)
    tid = np.atleast_1d(tet_ids)
    out = np.zeros((len(pts), 3))
    for k, (x, t) in enumerate(zip(pts, tid)):
        verts = mesh.tets[t]
        g = mesh.grads[t]                          # (4, 3)
        lam = _barycentric(mesh, t, x)
        for le, (a, b) in enumerate(_LOCAL_EDGES):
            c = coeffs[mesh.tet_edges[t, le]] * mesh.tet_edge_signs[t, le]
            out[k] += c * (lam[a] * g[b] - lam[b] * g[a])
    return out


def _barycentric(mesh, t, x):
    v = mesh.vertices[mesh.tets[t]]
    A = np.vstack([np.ones(4), v.T])
    return np.linalg.solve(A, np.concatenate([[1.0], x]))


def edge_field_at_barycenters(mesh, coeffs):
    """Evaluate an edge-element field at all tet barycenters (vectorized)."""
    g = mesh.grads                                  # (nt, 4, 3)
    c = coeffs[mesh.tet_edges] * mesh.tet_edge_signs  # (nt, 6)
    out = np.zeros((mesh.num_tets, 3))
    for le, (a, b) in enumerate(_LOCAL_EDGES):
        out += c[:, le, None] * 0.25 * (g[:, b] - g[:, a])
    return out


def edge_field_vertex_average(mesh, coeffs):
    """Average the per-tet evaluation at each vertex (for visualization)."""
    g = mesh.grads
    c = coeffs[mesh.tet_edges] * mesh.tet_edge_signs
    acc = np.zeros((mesh.num_vertices, 3))
    cnt = np.zeros(mesh.num_vertices)
    for lv in range(4):
        val = np.zeros((mesh.num_tets, 3))
        for le, (a, b) in enumerate(_LOCAL_EDGES):
            # barycentric coords at vertex lv: delta_{lv,a}
            lam_a = 1.0 if a == lv else 0.0
            lam_b = 1.0 if b == lv else 0.0
            if lam_a or lam_b:
                val += c[:, le, None] * (lam_a * g[:, b] - lam_b * g[:, a])
        np.add.at(acc, mesh.tets[:, lv], val)
        np.add.at(cnt, mesh.tets[:, lv], 1.0)
    return acc / cnt[:, None]


def curl_per_tet(mesh, coeffs):
    """Constant curl of an edge-element field on each tet."""
    g = mesh.grads
    c = coeffs[mesh.tet_edges] * mesh.tet_edge_signs
    out = np.zeros((mesh.num_tets, 3))
    for le, (a, b) in enumerate(_LOCAL_EDGES):
        out += c[:, le, None] * 2.0 * np.cross(g[:, a], g[:, b])
    return out
