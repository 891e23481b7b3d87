import numpy as np
import pytest

from ellg import assembly, fespace, mesh, stepper


def test_interpolate_nodal_constant(cube2):
    f = fespace.interpolate_nodal(lambda x: np.array([1.0, 2.0, 3.0]), cube2)
    assert np.allclose(f.values, [1.0, 2.0, 3.0], atol=0)


def test_vortex_interpolant_unit_length():
    m = mesh.build_cube_mesh(4)
    f = fespace.interpolate_nodal(stepper.initial_magnetization, m)
    assert np.abs(np.linalg.norm(f.values, axis=1) - 1.0).max() < 1e-12


def test_vortex_face_point(cube2):
    # axis point on the top face: zero in-plane distance
    idx = np.flatnonzero(np.all(np.isclose(cube2.vertices, [0.5, 0.5, 1.0]), axis=1))[0]
    f = fespace.interpolate_nodal(stepper.initial_magnetization, cube2)
    assert np.allclose(f.values[idx], [0.0, 0.0, 1.0], atol=1e-14)


def test_interpolate_edge_constant(cube1):
    f = fespace.interpolate_edge(lambda x: np.array([0.0, 0.0, 2.0]), cube1)
    dz = cube1.vertices[cube1.edges[:, 1], 2] - cube1.vertices[cube1.edges[:, 0], 2]
    assert np.abs(f.coeffs - 2.0 * dz).max() < 1e-14


def test_interpolate_edge_gradient_curl_free(cube2, rng):
    p = rng.standard_normal(cube2.num_vertices)
    f = fespace.interpolate_edge(
        lambda x, p=p: _p1_gradient_at(cube2, p, x), cube2, npts=3)
    fem = assembly.assemble_fem(cube2, 1.0, 1.0)
    assert f.coeffs @ (fem.C_nd @ f.coeffs) < 1e-12


def _p1_gradient_at(msh, p, x):
    # gradient of the P1 interpolant of nodal data p at point x (any tet
    # containing x gives the same value along edges)
    for t in range(msh.num_tets):
        v = msh.vertices[msh.tets[t]]
        A = np.vstack([np.ones(4), v.T])
        lam = np.linalg.solve(A, np.concatenate([[1.0], x]))
        if lam.min() > -1e-12:
            return p[msh.tets[t]] @ msh.grads[t]
    raise AssertionError("point outside mesh")


def test_interpolate_edge_zero(cube1):
    f = fespace.interpolate_edge(lambda x: np.zeros(3), cube1)
    assert np.all(f.coeffs == 0.0)


def test_edge_field_constant_reproduction(cube2):
    f = fespace.interpolate_edge(lambda x: np.array([0.3, -1.2, 2.0]), cube2)
    vals = fespace.edge_field_at_barycenters(cube2, f.coeffs)
    assert np.abs(vals - [0.3, -1.2, 2.0]).max() < 1e-12


def test_edge_field_tangential_continuity(cube2, rng):
    coeffs = rng.standard_normal(cube2.num_edges)
    # interior faces: shared by exactly two tets
    faces = {}
    for t in range(cube2.num_tets):
        for f in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
            key = tuple(sorted(cube2.tets[t, list(f)]))
            faces.setdefault(key, []).append(t)
    checked = 0
    for key, tets in faces.items():
        if len(tets) != 2:
            continue
        tri = cube2.vertices[list(key)]
        x = tri.mean(axis=0)
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        n /= np.linalg.norm(n)
        v1 = fespace.edge_field_in_tets(cube2, coeffs, x, tets[0])[0]
        v2 = fespace.edge_field_in_tets(cube2, coeffs, x, tets[1])[0]
        jump = (v1 - v2) - ((v1 - v2) @ n) * n
        assert np.linalg.norm(jump) < 1e-12
        checked += 1
        if checked >= 20:
            break
    assert checked > 0


def test_dofmap_counts_n1(cube1):
    dof = fespace.build_xh_dofmap(cube1)
    assert dof.num_interior_edges == 1
    assert dof.num_boundary_vertices == 8
    assert dof.num_unknowns == 9


def test_dofmap_counts_brute_force(cube2):
    dof = fespace.build_xh_dofmap(cube2)
    # brute-force edge classification: an edge is on the boundary iff it is
    # an edge of some face that belongs to exactly one tet
    face_count = {}
    for t in range(cube2.num_tets):
        for f in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
            key = tuple(sorted(cube2.tets[t, list(f)]))
            face_count[key] = face_count.get(key, 0) + 1
    bedges = set()
    for key, c in face_count.items():
        if c == 1:
            a, b, cc = key
            bedges |= {(a, b), (a, cc), (b, cc)}
    n_interior = sum(1 for e in cube2.edges if (e[0], e[1]) not in bedges)
    assert dof.num_interior_edges == n_interior
    assert dof.num_unknowns == n_interior + len(cube2.boundary_vertices)


def test_dofmap_constant_boundary_function(cube2):
    dof = fespace.build_xh_dofmap(cube2)
    a = np.concatenate([np.zeros(dof.num_interior_edges),
                        np.ones(dof.num_boundary_vertices)])
    h, lam = dof.expand(a)
    assert np.all(h[cube2.boundary_edge_mask] == 0.0)


def test_dofmap_constraint_exact(cube2, rng):
    dof = fespace.build_xh_dofmap(cube2)
    a = rng.standard_normal(dof.num_unknowns)
    h, lam = dof.expand(a)
    bmap = cube2.vertex_to_boundary
    for e in np.flatnonzero(cube2.boundary_edge_mask):
        z0, z1 = cube2.edges[e]
        assert h[e] == lam[bmap[z1]] - lam[bmap[z0]]


def test_dofmap_requires_boundary():
    class Bare:
        boundary_edge_mask = None
    with pytest.raises(ValueError):
        fespace.build_xh_dofmap(Bare())


def test_tangent_frame_axis_cases():
    f = fespace.tangent_frames(np.array([[0.0, 0.0, 1.0]]))
    assert np.allclose(f.t1[0], [1.0, 0.0, 0.0], atol=0)
    assert np.allclose(f.t2[0], [0.0, 1.0, 0.0], atol=0)
    g = fespace.tangent_frames(np.array([[0.0, 0.0, -1.0]]))
    gram = np.array([g.t1[0], g.t2[0], [0.0, 0.0, -1.0]])
    assert np.abs(gram @ gram.T - np.eye(3)).max() < 1e-12


def test_tangent_frame_random_gram(rng):
    m = rng.standard_normal((1000, 3))
    m /= np.linalg.norm(m, axis=1)[:, None]
    f = fespace.tangent_frames(m)
    for t1, t2, mm in zip(f.t1, f.t2, m):
        gram = np.array([t1, t2, mm])
        assert np.abs(gram @ gram.T - np.eye(3)).max() < 1e-12


def test_tangent_frame_reports_vertex():
    m = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.05]])
    with pytest.raises(ValueError, match="vertex 1"):
        fespace.tangent_frames(m)


def test_nodal_l2_equivalence():
    # nodal sums scaled by h^3 are equivalent to the L2 norm with
    # mesh-independent constants
    rng = np.random.default_rng(42)
    lo, hi = np.inf, 0.0
    for n in (1, 2, 3, 4):
        msh = mesh.build_cube_mesh(n)
        fem = assembly.assemble_fem(msh, 1.0, 1.0)
        h = 1.0 / n
        for _ in range(50):
            phi = rng.standard_normal((msh.num_vertices, 3))
            l2 = sum(phi[:, c] @ (fem.M_s @ phi[:, c]) for c in range(3))
            nodal = h ** 3 * np.einsum('ij,ij->', phi, phi)
            r = nodal / l2
            lo, hi = min(lo, r), max(hi, r)
    assert 2.0 < lo and hi < 60.0
