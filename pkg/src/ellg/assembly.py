"""Volume FEM matrices on tetrahedra: P1 mass/stiffness, edge-element mass and
curl-curl, the P1-vector/edge-element coupling, and the frozen-field skew term.

All integrands are polynomials in the barycentric coordinates, so every entry
is integrated exactly via int lam^p lam^q ... = 6V p!q!r!s!/(p+q+r+s+3)!.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

_LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


class AssemblyError(ValueError):
    pass


@dataclass
class FemMatrices:
    """Sparse volume matrices plus the material constants of the curl form."""

    M_s: sp.csr_matrix      # scalar P1 mass
    S_s: sp.csr_matrix      # scalar P1 stiffness
    M_nd: sp.csr_matrix     # edge-element mass
    C_nd: sp.csr_matrix     # edge-element curl-curl
    G: sp.csr_matrix        # (ne x 3nv): <w_e, e_c phi_z>
    sigma: float
    mu0: float

    @property
    def curl_coeff(self):
        return 1.0 / (self.sigma * self.mu0)

    def mass_vec(self):
        return sp.kron(self.M_s, sp.eye(3), format='csr')

    def stiff_vec(self):
        return sp.kron(self.S_s, sp.eye(3), format='csr')


def _delta(i, j):
    return 1.0 if i == j else 0.0


def assemble_fem(mesh, sigma, mu0):
    """Assemble all field matrices on a TetMesh."""
    if sigma <= 0 or mu0 <= 0:
        raise AssemblyError("sigma and mu0 must be positive")
    nt, nv, ne = mesh.num_tets, mesh.num_vertices, mesh.num_edges
    vol = mesh.volumes
    g = mesh.grads                                      # (nt, 4, 3)
    gg = np.einsum('tad,tbd->tab', g, g)                # grad dot grad

    # scalar P1 mass and stiffness
    mloc = np.empty((nt, 4, 4))
    for a in range(4):
        for b in range(4):
            mloc[:, a, b] = vol / 20.0 * (1.0 + _delta(a, b))
    sloc = vol[:, None, None] * gg

    rows = mesh.tets[:, :, None].repeat(4, axis=2).ravel()
    cols = mesh.tets[:, None, :].repeat(4, axis=1).ravel()
    M_s = sp.csr_matrix((mloc.ravel(), (rows, cols)), shape=(nv, nv))
    S_s = sp.csr_matrix((sloc.ravel(), (rows, cols)), shape=(nv, nv))

    # edge-element mass:
    # w_ij . w_kl = lam_i lam_k (gj.gl) - lam_i lam_l (gj.gk)
    #             - lam_j lam_k (gi.gl) + lam_j lam_l (gi.gk)
    sgn = mesh.tet_edge_signs
    mnd = np.empty((nt, 6, 6))
    cnd = np.empty((nt, 6, 6))
    cross = np.empty((nt, 6, 3))
    for e, (i, j) in enumerate(_LOCAL_EDGES):
        cross[:, e] = np.cross(g[:, i], g[:, j])
    for e1, (i, j) in enumerate(_LOCAL_EDGES):
        for e2, (k, l) in enumerate(_LOCAL_EDGES):
            val = ( (1.0 + _delta(i, k)) * gg[:, j, l]
                  - (1.0 + _delta(i, l)) * gg[:, j, k]
                  - (1.0 + _delta(j, k)) * gg[:, i, l]
                  + (1.0 + _delta(j, l)) * gg[:, i, k]) * vol / 20.0
            mnd[:, e1, e2] = val * sgn[:, e1] * sgn[:, e2]
            cnd[:, e1, e2] = (4.0 * vol * np.einsum('td,td->t', cross[:, e1], cross[:, e2])
                              * sgn[:, e1] * sgn[:, e2])
    erows = mesh.tet_edges[:, :, None].repeat(6, axis=2).ravel()
    ecols = mesh.tet_edges[:, None, :].repeat(6, axis=1).ravel()
    M_nd = sp.csr_matrix((mnd.ravel(), (erows, ecols)), shape=(ne, ne))
    C_nd = sp.csr_matrix((cnd.ravel(), (erows, ecols)), shape=(ne, ne))

    # coupling <w_e, e_c phi_z> = V/20 [(1+delta_{z,i}) gj_c - (1+delta_{z,j}) gi_c]
    gloc = np.empty((nt, 6, 4, 3))
    for e, (i, j) in enumerate(_LOCAL_EDGES):
        for a in range(4):
            gloc[:, e, a, :] = (vol / 20.0)[:, None] * (
                (1.0 + _delta(a, i)) * g[:, j] - (1.0 + _delta(a, j)) * g[:, i])
        gloc[:, e] *= sgn[:, e, None, None]
    grows = mesh.tet_edges[:, :, None, None].repeat(4, axis=2).repeat(3, axis=3).ravel()
    gcols = (3 * mesh.tets[:, None, :, None].repeat(6, axis=1).repeat(3, axis=3)
             + np.arange(3)[None, None, None, :]).ravel()
    G = sp.csr_matrix((gloc.ravel(), (grows, gcols)), shape=(ne, 3 * nv))

    return FemMatrices(M_s=M_s, S_s=S_s, M_nd=M_nd, C_nd=C_nd, G=G,
                       sigma=float(sigma), mu0=float(mu0))


def assemble_skew(mesh, m_values):
    """Sparse matrix of <m x u, w> on vector P1, m frozen.

    Entry ((z,c),(w,d)) = int phi_z phi_w (m x e_d).e_c; with P1 data the
    integrand is cubic in the barycentric coordinates and integrated exactly.
    """
    m_values = np.asarray(m_values, dtype=float)
    if not np.all(np.isfinite(m_values)):
        raise AssemblyError("magnetization field contains non-finite values")
    nt, nv = mesh.num_tets, mesh.num_vertices
    vol = mesh.volumes
    mloc = m_values[mesh.tets]                           # (nt, 4, 3)

    # T3[a,b,u] = int lam_a lam_b lam_u = V/120 * (#permutation multiplicities)
    fac = np.ones((4, 4, 4))
    for a in range(4):
        for b in range(4):
            for u in range(4):
                if a == b == u:
                    fac[a, b, u] = 6.0
                elif a == b or a == u or b == u:
                    fac[a, b, u] = 2.0
    t3 = vol[:, None, None, None] / 120.0 * fac[None]

    # cross_mat(w)[c,d] = (w x e_d)_c
    X = np.zeros((nt, 4, 3, 3))
    X[:, :, 0, 1] = -mloc[:, :, 2]
    X[:, :, 0, 2] = mloc[:, :, 1]
    X[:, :, 1, 0] = mloc[:, :, 2]
    X[:, :, 1, 2] = -mloc[:, :, 0]
    X[:, :, 2, 0] = -mloc[:, :, 1]
    X[:, :, 2, 1] = mloc[:, :, 0]

    blocks = np.einsum('tabu,tucd->tabcd', t3, X)        # (nt,4,4,3,3)
    rows = (3 * mesh.tets[:, :, None, None, None] + np.arange(3)[None, None, None, :, None])
    rows = np.broadcast_to(rows, blocks.shape).ravel()
    cols = (3 * mesh.tets[:, None, :, None, None] + np.arange(3)[None, None, None, None, :])
    cols = np.broadcast_to(cols, blocks.shape).ravel()
    return sp.csr_matrix((blocks.ravel(), (rows, cols)), shape=(3 * nv, 3 * nv))


def assemble_xh_system(dofmap, fem, B, k):
    """System matrix of the coupled field step in the reduced unknowns:

        L = P^T blockdiag(M_nd, B) P + k/(sigma mu0) P^T blockdiag(C_nd, 0) P.

    With k = 0 this is the Gram matrix of the coupled bilinear form.
    """
    ne = fem.M_nd.shape[0]
    nb = B.shape[0]
    if dofmap.prolong.shape[0] != ne + nb:
        raise AssemblyError("dimension mismatch between DOF map, FEM and boundary operators")
    P = dofmap.prolong
    Q = sp.bmat([[fem.M_nd, None], [None, sp.csr_matrix(B)]], format='csr')
    L = (P.T @ (Q @ P)).tocsr()
    if k != 0.0:
        Ck = sp.bmat([[fem.C_nd, None], [None, sp.csr_matrix((nb, nb))]], format='csr')
        L = (L + k * fem.curl_coeff * (P.T @ (Ck @ P))).tocsr()
    return L
