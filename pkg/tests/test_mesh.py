import numpy as np
import pytest

from ellg import mesh


def euler_lhs(m):
    return m.num_vertices - m.num_edges + m.count_all_faces() - m.num_tets


def test_cube_n1_counts(cube1):
    assert cube1.num_vertices == 8
    assert cube1.num_tets == 6
    assert len(cube1.boundary_faces) == 12
    assert cube1.num_edges == 19
    assert cube1.boundary_edge_mask.sum() == 18
    assert euler_lhs(cube1) == 1


def test_cube_n2_counts(cube2):
    assert cube2.num_vertices == 27
    assert cube2.num_tets == 48
    assert len(cube2.boundary_faces) == 48


def test_cube_counts_formula():
    for n in (1, 2, 3, 4):
        m = mesh.build_cube_mesh(n)
        assert m.num_vertices == (n + 1) ** 3
        assert m.num_tets == 6 * n ** 3
        assert len(m.boundary_faces) == 12 * n ** 2
        assert euler_lhs(m) == 1
        assert abs(m.volumes.sum() - 1.0) < 1e-12


def test_cube_n10_resolution():
    m = mesh.build_cube_mesh(10)
    # benchmark resolution h = 0.1 per axis
    axis_lengths = np.abs(np.diff(np.unique(m.vertices[:, 0])))
    assert np.allclose(axis_lengths, 0.1)


def test_rejects_n0():
    with pytest.raises(mesh.MeshError):
        mesh.build_cube_mesh(0)


def test_positive_volumes(cube3):
    v = cube3.vertices[cube3.tets]
    vol6 = np.einsum('ti,ti->t',
                     np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]),
                     v[:, 3] - v[:, 0])
    assert np.all(vol6 > 0)


def test_boundary_area_and_closedness():
    for n in (1, 2):
        m = mesh.build_cube_mesh(n)
        b = mesh.extract_boundary(m)
        assert abs(b.total_area - 6.0) < 1e-12
        # every boundary edge in exactly 2 triangles
        pairs = np.concatenate([b.triangles[:, [0, 1]], b.triangles[:, [1, 2]],
                                b.triangles[:, [2, 0]]])
        key = pairs.min(axis=1) * len(b.vertices) + pairs.max(axis=1)
        _, counts = np.unique(key, return_counts=True)
        assert np.all(counts == 2)


def test_boundary_outward_orientation(cube2):
    b = mesh.extract_boundary(cube2)
    cen = b.vertices[b.triangles].mean(axis=1)
    outward = np.einsum('ij,ij->i', b.normals, cen - 0.5)
    assert np.all(outward > 0)


def test_extract_boundary_nonmanifold():
    # three tets sharing the same face
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0],
                      [0, 0, 1], [0, 0, -1], [0.3, 0.3, 2.0]], dtype=float)
    tets = np.array([[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]])
    with pytest.raises(mesh.MeshError):
        mesh.TetMesh(vertices=verts, tets=tets)


def test_icosphere_counts_and_area():
    s0 = mesh.build_icosphere(0, 1.0)
    assert len(s0.triangles) == 20 and len(s0.vertices) == 12
    s2 = mesh.build_icosphere(2, 1.0)
    assert len(s2.triangles) == 320 and len(s2.vertices) == 162
    assert abs(s2.total_area - 4 * np.pi) < 0.02 * 4 * np.pi
    s3 = mesh.build_icosphere(3, 2.0)
    assert abs(s3.total_area - 16 * np.pi) < 0.01 * 16 * np.pi


def test_icosphere_rejects_bad_args():
    with pytest.raises(mesh.MeshError):
        mesh.build_icosphere(1, 0.0)
    with pytest.raises(mesh.MeshError):
        mesh.build_icosphere(7, 1.0)


def test_quality_cube(cube1):
    q = mesh.mesh_quality(cube1)
    assert abs(q.max_diameter - np.sqrt(3.0)) < 1e-12
    assert q.max_shape_ratio > 0 and np.isfinite(q.max_shape_ratio)
    assert not q.flagged()


def test_quality_scale_invariance():
    q1 = mesh.mesh_quality(mesh.build_cube_mesh(1))
    q2 = mesh.mesh_quality(mesh.build_cube_mesh(2))
    assert abs(q1.max_shape_ratio - q2.max_shape_ratio) < 1e-12


def test_quality_flags_degenerate():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.3, 0.3, 1e-3]])
    sliver = mesh.TetMesh(vertices=verts, tets=np.array([[0, 1, 2, 3]]))
    assert mesh.mesh_quality(sliver).flagged()
