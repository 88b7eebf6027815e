import numpy as np
import pytest

from ovaloid import intrinsic_metric as im
from ovaloid import shapes


@pytest.fixture
def cube_net():
    return im.net_from_polytope(shapes.cube())


@pytest.fixture
def cube():
    return shapes.cube()


def corner_point(net, vertex_id):
    """SurfacePoint at the corner labelled with the given mesh vertex id."""
    for (f, c), lab in net.corner_labels.items():
        if lab == vertex_id:
            xy = net.polygons[f][c]
            return im.SurfacePoint(f, (float(xy[0]), float(xy[1])))
    raise KeyError(vertex_id)


def random_face_point(net, rng, margin=0.15):
    """Random point strictly inside a random polygon of the net."""
    f = int(rng.integers(0, len(net.polygons)))
    poly = net.polygons[f]
    c = poly.mean(axis=0)
    # convex combination biased toward the centroid keeps a safe margin
    w = rng.dirichlet(np.ones(len(poly)))
    p = (1.0 - margin) * (w @ poly) + margin * c
    return im.SurfacePoint(f, (float(p[0]), float(p[1])))


def grid_problem(n_side, extent, mass_fn=None, boundary_fn=None, **kw):
    """Uniform grid MAProblem on [0, extent]^2 with n_side+1 nodes per axis."""
    from ovaloid import ma_solver as ma

    coords = np.linspace(0.0, extent, n_side + 1)
    xx, yy = np.meshgrid(coords, coords)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    on_b = (
        (pts[:, 0] == 0) | (pts[:, 0] == extent)
        | (pts[:, 1] == 0) | (pts[:, 1] == extent)
    )
    interior, boundary = pts[~on_b], pts[on_b]
    domain = np.array([[0, 0], [extent, 0], [extent, extent], [0, extent]], float)
    masses = (
        np.full(len(interior), 1.0) if mass_fn is None else mass_fn(interior)
    )
    bvals = (
        np.zeros(len(boundary)) if boundary_fn is None else boundary_fn(boundary)
    )
    return ma.MAProblem(
        domain=domain, interior_nodes=interior, masses=masses,
        boundary_nodes=boundary, boundary_values=bvals, **kw,
    )
