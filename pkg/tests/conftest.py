import numpy as np
import pytest

from ellg import mesh


@pytest.fixture(scope="session")
def cube1():
    return mesh.build_cube_mesh(1)


@pytest.fixture(scope="session")
def cube2():
    return mesh.build_cube_mesh(2)


@pytest.fixture(scope="session")
def cube3():
    return mesh.build_cube_mesh(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def duffy_tet_rule(p):
    """Collapsed tensor Gauss rule on the reference tet, exact to degree p-2.

    Independent of the analytic barycentric-moment formulas used by the
    assembly code.  Returns reference points (q, 3) and weights summing 1/6.
    """
    x, w = np.polynomial.legendre.leggauss(p)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    u, v, t = np.meshgrid(x, x, x, indexing="ij")
    wu, wv, wt = np.meshgrid(w, w, w, indexing="ij")
    X = u
    Y = v * (1.0 - u)
    Z = t * (1.0 - u) * (1.0 - v)
    W = wu * wv * wt * (1.0 - u) ** 2 * (1.0 - v)
    return (np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]),
            W.ravel())


def map_tet_rule(msh, t, p):
    """Physical quadrature points and weights on tet t of a TetMesh."""
    ref, w = duffy_tet_rule(p)
    verts = msh.vertices[msh.tets[t]]
    pts = verts[0] + ref @ (verts[1:] - verts[0])
    return pts, w * 6.0 * msh.volumes[t]
