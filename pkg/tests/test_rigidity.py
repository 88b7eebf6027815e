import numpy as np
import pytest

from ovaloid import rigidity_lab as rl
from ovaloid import shapes
from ovaloid.errors import DegenerateGeometry, NotStrictlyConvex, PrecisionWarning


def surface_of(poly):
    return rl.TriangulatedSurface(
        vertices=poly.vertices, triangles=shapes.oriented_triangles(poly)
    )


def test_single_edge_constraint_row():
    surf = rl.TriangulatedSurface(
        vertices=np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0]], float),
        triangles=np.array([[0, 1, 2]]),
        with_boundary=True,
    )
    mat = rl.isometry_constraints(surf).toarray()
    assert mat.shape == (3, 9)
    # row for edge (0, 1): unit direction +- (1, 0, 0)
    row = mat[0]
    np.testing.assert_allclose(row[0:3], [-1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(row[3:6], [1, 0, 0], atol=1e-15)


def test_translation_and_rotation_fields_flat():
    surf = surface_of(shapes.icosahedron())
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.normal(size=3), rng.normal(size=3)
        tau = np.cross(a, surf.vertices) + b
        assert rl.constraint_residual(surf, tau) <= 1e-12


def _rank_oracle(mat):
    """Independent rank estimate: QR with column pivoting."""
    import scipy.linalg as sla

    _, r, _ = sla.qr(mat, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > 1e-10 * diag.max()))


@pytest.mark.parametrize(
    "builder, expected_nontrivial",
    [
        (lambda: surface_of(shapes.octahedron()), 0),
        (lambda: surface_of(shapes.icosahedron()), 0),
    ],
)
def test_regular_bodies_rigid(builder, expected_nontrivial):
    surf = builder()
    rep = rl.bending_space(surf)
    assert rep.kernel_dim == 6
    assert rep.nontrivial_dim == expected_nontrivial
    mat = rl.isometry_constraints(surf).toarray()
    assert mat.shape[1] - _rank_oracle(mat) == rep.kernel_dim


def test_cube_with_face_centers_has_six_flexes():
    v, t = shapes.cube_with_face_centers()
    surf = rl.TriangulatedSurface(vertices=v, triangles=t)
    rep = rl.bending_space(surf)
    assert rep.kernel_dim == 12
    assert rep.nontrivial_dim == 6
    mat = rl.isometry_constraints(surf).toarray()
    assert mat.shape[1] - _rank_oracle(mat) == 12
    # one explicit normal flex per flat face-centre vertex: each is a
    # first-order isometry and independent of the rigid motions
    cube = shapes.cube()
    fields = []
    for k, cyc in enumerate(cube.faces):
        tau = np.zeros_like(v)
        tau[8 + k] = cube.normals[k]
        assert rl.constraint_residual(surf, tau) <= 1e-12
        fields.append(tau.ravel())
    stack = np.column_stack(
        [rl.trivial_motion_basis(v)] + [f[:, None] for f in fields]
    )
    assert np.linalg.matrix_rank(stack, tol=1e-10) == 12


def test_random_convex_surfaces_rigid():
    for seed in (0, 1, 2, 3):
        surf = surface_of(shapes.random_hull(20, seed=seed))
        rep = rl.bending_space(surf)
        assert rep.nontrivial_dim == 0, seed


def test_degenerate_geometry_rejected():
    line = rl.TriangulatedSurface(
        vertices=np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], float),
        triangles=np.array([[0, 1, 2]]),
        with_boundary=True,
    )
    with pytest.raises(DegenerateGeometry):
        rl.bending_space(line)


def test_open_surface_rejected():
    surf = rl.TriangulatedSurface(
        vertices=np.eye(3), triangles=np.array([[0, 1, 2]])
    )
    with pytest.raises(ValueError):
        surf.validate()


def grid(n, lo=0.0, hi=1.0):
    xs = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(xs, xs)
    return X, Y, xs[1] - xs[0]


def test_defo_residual_examples():
    X, Y, h = grid(9)
    z = 0.5 * (X**2 + Y**2)
    assert rl.defo_residual(rl.GridPatch(h=h, z=z, zeta=X**2 - Y**2)) < 1e-12
    assert rl.defo_residual(rl.GridPatch(h=h, z=z, zeta=X * Y)) < 1e-12
    r = rl.defo_residual(rl.GridPatch(h=h, z=z, zeta=X**2))
    assert abs(r - 2.0) < 1e-12


def test_solve_defo_zero_boundary_gives_zero():
    X, Y, h = grid(11)
    z = 0.5 * (X**2 + Y**2) + 0.1 * X * Y
    sol = rl.solve_defo(z, h, np.zeros_like(z))
    assert np.abs(sol.zeta).max() < 1e-12


def test_solve_defo_recovers_harmonic_quadratic():
    X, Y, h = grid(13)
    z = 0.5 * (X**2 + Y**2)
    sol = rl.solve_defo(z, h, X**2 - Y**2)
    assert np.abs(sol.zeta - (X**2 - Y**2)).max() < 1e-11


def test_solve_defo_convergence_order_two():
    gamma = 0.2
    mu = np.sqrt(1 - gamma**2)
    exact = lambda X, Y: np.exp(X + gamma * Y) * np.cos(mu * Y)
    errs = []
    for n in (9, 17, 33):
        X, Y, h = grid(n)
        z = 0.5 * (X**2 + Y**2) + gamma * X * Y
        sol = rl.solve_defo(z, h, exact(X, Y))
        errs.append(np.abs(sol.zeta - exact(X, Y)).max())
    orders = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
    for o in orders:
        assert abs(o - 2.0) <= 0.3


def test_not_strictly_convex_names_nodes():
    X, Y, h = grid(9)
    z = 0.5 * (X**2 - Y**2)  # saddle
    with pytest.raises(NotStrictlyConvex) as err:
        rl.solve_defo(z, h, np.zeros_like(z))
    assert err.value.nodes


def test_main_lemma_trivial_examples():
    X, Y, h = grid(9)
    z = 0.5 * (X**2 + Y**2)
    rep = rl.main_lemma_check(rl.GridPatch(h=h, z=z, zeta=X**2 - Y**2))
    assert rep.ok and abs(rep.max_det + 4.0) < 1e-9
    rep2 = rl.main_lemma_check(rl.GridPatch(h=h, z=z, zeta=X * Y))
    assert rep2.ok and abs(rep2.max_det + 1.0) < 1e-9


def test_main_lemma_on_solver_outputs():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = 15
        X, Y, h = grid(n)
        ax, ay = rng.uniform(0.5, 2.0, 2)
        gxy = rng.uniform(-0.4, 0.4) * np.sqrt(ax * ay)
        z = 0.5 * (ax * X**2 + ay * Y**2) + gxy * X * Y
        zb = rng.normal(0, 1, (n, n))
        sol = rl.solve_defo(z, h, zb)
        rep = rl.main_lemma_check(sol, tol=1e-8)
        assert rep.ok, rep.violations


def test_precision_warning_on_sloppy_patch():
    X, Y, h = grid(9)
    z = 0.5 * (X**2 + Y**2)
    zeta = X**3 + Y**2  # does not satisfy the flex equation
    with pytest.warns(PrecisionWarning):
        rl.main_lemma_check(rl.GridPatch(h=h, z=z, zeta=zeta))


def test_grid_patch_validation():
    with pytest.raises(ValueError):
        rl.GridPatch(h=0.1, z=np.zeros((2, 5)), zeta=np.zeros((2, 5)))
    with pytest.raises(ValueError):
        rl.GridPatch(h=0.1, z=np.zeros((5, 5)), zeta=np.zeros((4, 5)))
