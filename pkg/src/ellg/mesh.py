"""Tetrahedral meshes of the unit cube and triangulated closed surfaces."""

from dataclasses import dataclass, field

import numpy as np

# The six tetrahedra of the Kuhn split of a cube, as paths from corner 000 to
# corner 111.  Local corner code: bx + 2*by + 4*bz.  Using the same split in
# every subcube makes shared face diagonals match automatically.
_KUHN_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))

# Faces of a positively oriented tet (v0,v1,v2,v3), ordered so the face
# normal points out of the tet.
_OUT_FACES = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))

_LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


class MeshError(ValueError):
    pass


@dataclass
class TriMesh:
    """Closed, outward-oriented triangulated surface."""

    vertices: np.ndarray          # (nv, 3)
    triangles: np.ndarray         # (nt, 3), outward orientation
    areas: np.ndarray = field(init=False)
    normals: np.ndarray = field(init=False)

    def __post_init__(self):
        tri = self.vertices[self.triangles]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        nrm = np.linalg.norm(n, axis=1)
        if np.any(nrm <= 0.0):
            raise MeshError("degenerate (zero-area) triangle in surface mesh")
        self.areas = 0.5 * nrm
        self.normals = n / nrm[:, None]
        self._check_closed()

    def _check_closed(self):
        nv = len(self.vertices)
        fwd = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = int(a) * nv + int(b)
                if key in fwd:
                    raise MeshError("surface edge traversed twice in the same direction")
                fwd[key] = True
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                if int(b) * nv + int(a) not in fwd:
                    raise MeshError("surface is not closed/orientable")

    @property
    def total_area(self):
        return float(self.areas.sum())


@dataclass
class TetMesh:
    """Tetrahedral mesh with boundary trace and edge connectivity."""

    vertices: np.ndarray            # (nv, 3)
    tets: np.ndarray                # (nt, 4), positive orientation
    edges: np.ndarray = None        # (ne, 2), each row sorted ascending
    tet_edges: np.ndarray = None    # (nt, 6) indices into edges
    tet_edge_signs: np.ndarray = None   # (nt, 6) +1 if local pair is low->high
    boundary_faces: np.ndarray = None   # (nf, 3) mesh vertex ids, outward
    boundary_vertices: np.ndarray = None  # sorted mesh vertex ids on the boundary
    vertex_to_boundary: np.ndarray = None  # (nv,) boundary index or -1
    boundary_edge_mask: np.ndarray = None  # (ne,) True for edges on the boundary
    volumes: np.ndarray = None      # (nt,)
    grads: np.ndarray = None        # (nt, 4, 3) gradients of barycentric coords

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.tets = np.asarray(self.tets, dtype=np.int64)
        self._orient_tets()
        self._geometry()
        self._connectivity()

    def _orient_tets(self):
        v = self.vertices[self.tets]
        vol6 = np.einsum('ti,ti->t', np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]),
                         v[:, 3] - v[:, 0])
        neg = vol6 < 0
        self.tets[neg] = self.tets[neg][:, [0, 1, 3, 2]]
        if np.any(vol6 == 0.0):
            raise MeshError("degenerate tetrahedron (zero volume)")

    def _geometry(self):
        nt = len(self.tets)
        a = np.ones((nt, 4, 4))
        a[:, :, 1:] = self.vertices[self.tets]
        det = np.linalg.det(a)
        self.volumes = np.abs(det) / 6.0
        coef = np.linalg.inv(a)            # phi_a(x) = coef[0,a] + coef[1:,a].x
        self.grads = np.transpose(coef[:, 1:4, :], (0, 2, 1))

    def _connectivity(self):
        nv = len(self.vertices)
        pairs = self.tets[:, _LOCAL_EDGES]             # (nt, 6, 2)
        lo = pairs.min(axis=2)
        hi = pairs.max(axis=2)
        keys = (lo.astype(np.int64) * nv + hi).ravel()
        uniq, inv = np.unique(keys, return_inverse=True)
        self.edges = np.column_stack([uniq // nv, uniq % nv])
        self.tet_edges = inv.reshape(len(self.tets), 6)
        self.tet_edge_signs = np.where(pairs[:, :, 0] < pairs[:, :, 1], 1.0, -1.0)

        faces = self.tets[:, _OUT_FACES]               # (nt, 4, 3) oriented
        flat = faces.reshape(-1, 3)
        fkeys = np.sort(flat, axis=1)
        fkeys = (fkeys[:, 0].astype(np.int64) * nv + fkeys[:, 1]) * nv + fkeys[:, 2]
        uniq_f, counts = np.unique(fkeys, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("non-manifold mesh: a face is shared by more than 2 tets")
        boundary_keys = set(uniq_f[counts == 1].tolist())
        keep = np.array([k in boundary_keys for k in fkeys.tolist()])
        self.boundary_faces = flat[keep]

        self.boundary_vertices = np.unique(self.boundary_faces)
        self.vertex_to_boundary = np.full(nv, -1, dtype=np.int64)
        self.vertex_to_boundary[self.boundary_vertices] = np.arange(len(self.boundary_vertices))

        bf = self.boundary_faces
        bpairs = np.concatenate([bf[:, [0, 1]], bf[:, [1, 2]], bf[:, [2, 0]]])
        bkeys = np.unique(bpairs.min(axis=1).astype(np.int64) * nv + bpairs.max(axis=1))
        edge_keys = self.edges[:, 0].astype(np.int64) * nv + self.edges[:, 1]
        self.boundary_edge_mask = np.isin(edge_keys, bkeys)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_tets(self):
        return len(self.tets)

    def count_all_faces(self):
        """Number of distinct triangular faces (for the Euler relation)."""
        nv = len(self.vertices)
        flat = np.sort(self.tets[:, _OUT_FACES].reshape(-1, 3), axis=1)
        keys = (flat[:, 0].astype(np.int64) * nv + flat[:, 1]) * nv + flat[:, 2]
        return len(np.unique(keys))


def build_cube_mesh(n):
    """Structured Kuhn mesh of the unit cube, n subdivisions per axis."""
    if n < 1:
        raise MeshError("cube subdivisions must satisfy n >= 1")
    n = int(n)
    s = n + 1
    # vertex index = i + s*j + s^2*k with (i,j,k) the integer lattice coords
    I, J, K = np.meshgrid(np.arange(s), np.arange(s), np.arange(s), indexing='ij')
    verts = np.empty((s ** 3, 3))
    verts[(I + s * J + s * s * K).ravel()] = \
        np.column_stack([I.ravel(), J.ravel(), K.ravel()]) / n

    paths = []
    for perm in _KUHN_PERMS:
        b = [0, 0, 0]
        path = [0]
        for ax in perm:
            b[ax] = 1
            path.append(b[0] + 2 * b[1] + 4 * b[2])
        paths.append(path)
    paths = np.array(paths)                      # (6, 4) local corner codes

    c = np.arange(n)
    CI, CJ, CK = np.meshgrid(c, c, c, indexing='ij')
    base = (CI + s * CJ + s * s * CK).ravel()     # (n^3,)
    offs = np.array([bx + s * by + s * s * bz
                     for bz in (0, 1) for by in (0, 1) for bx in (0, 1)])
    # offs is ordered by code bx + 2*by + 4*bz
    corners = base[:, None] + offs[None, :]       # (n^3, 8)
    tets = corners[:, paths].reshape(-1, 4)
    return TetMesh(vertices=verts, tets=tets)


def extract_boundary(mesh):
    """Boundary trace of a TetMesh as a compact, outward-oriented TriMesh."""
    if mesh.boundary_faces is None:
        raise MeshError("mesh has no boundary connectivity")
    tri = mesh.vertex_to_boundary[mesh.boundary_faces]
    return TriMesh(vertices=mesh.vertices[mesh.boundary_vertices], triangles=tri)


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=float)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def build_icosphere(refinements, radius=1.0):
    """Icosahedron subdivided `refinements` times, projected to a sphere."""
    if radius <= 0:
        raise MeshError("sphere radius must be positive")
    if not 0 <= refinements <= 6:
        raise MeshError("refinements must be in [0, 6]")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1)[:, None]
    faces = _ICO_FACES.copy()
    for _ in range(refinements):
        vlist = verts.tolist()
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = 0.5 * (verts[a] + verts[b])
                m = m / np.linalg.norm(m)
                vlist.append(m.tolist())
                cache[key] = len(vlist) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(vlist)
        faces = np.array(new_faces, dtype=np.int64)
    verts = verts * radius
    # enforce outward orientation
    tri = verts[faces]
    nrm = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    cen = tri.mean(axis=1)
    flip = np.einsum('ij,ij->i', nrm, cen) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return TriMesh(vertices=verts, triangles=faces)


@dataclass
class QualityReport:
    min_dihedral_deg: float
    max_dihedral_deg: float
    max_diameter: float
    max_shape_ratio: float     # max over tets of diameter / inradius

    def flagged(self, threshold=50.0):
        return self.max_shape_ratio > threshold


def mesh_quality(mesh):
    """Shape-quality summary: dihedral angles, diameters, diameter/inradius."""
    v = mesh.vertices[mesh.tets]                       # (nt, 4, 3)
    d = np.linalg.norm(v[:, :, None, :] - v[:, None, :, :], axis=3)
    diam = d.max(axis=(1, 2))

    # face areas opposite each vertex
    areas = np.empty((len(mesh.tets), 4))
    for a, (i, j, k) in enumerate(((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))):
        areas[:, a] = 0.5 * np.linalg.norm(
            np.cross(v[:, j] - v[:, i], v[:, k] - v[:, i]), axis=1)
    inradius = 3.0 * mesh.volumes / areas.sum(axis=1)

    angles = []
    for a, b in _LOCAL_EDGES:
        rest = [x for x in range(4) if x not in (a, b)]
        c, dd = rest
        u = v[:, b] - v[:, a]
        u = u / np.linalg.norm(u, axis=1)[:, None]
        w1 = v[:, c] - v[:, a]
        w2 = v[:, dd] - v[:, a]
        w1 = w1 - np.einsum('ij,ij->i', w1, u)[:, None] * u
        w2 = w2 - np.einsum('ij,ij->i', w2, u)[:, None] * u
        cosang = np.einsum('ij,ij->i', w1, w2) / (
            np.linalg.norm(w1, axis=1) * np.linalg.norm(w2, axis=1))
        angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
    angles = np.concatenate(angles)
    return QualityReport(
        min_dihedral_deg=float(angles.min()),
        max_dihedral_deg=float(angles.max()),
        max_diameter=float(diam.max()),
        max_shape_ratio=float((diam / inradius).max()),
    )
