import numpy as np
import pytest

from ovaloid import core, shapes
from ovaloid import minkowski_solver as mk
from ovaloid.errors import MaxIterExceeded


def test_check_closing_cube(cube):
    prob = mk.MinkowskiProblem(normals=cube.normals, target_areas=cube.areas)
    np.testing.assert_allclose(mk.check_closing(prob), 0.0, atol=1e-15)


def test_check_closing_imbalance(cube):
    areas = cube.areas.copy()
    areas[0] *= 2.0
    prob = mk.MinkowskiProblem(normals=cube.normals, target_areas=areas)
    defect = mk.check_closing(prob)
    assert abs(np.linalg.norm(defect) - 1.0) < 1e-12
    np.testing.assert_allclose(np.abs(defect / np.linalg.norm(defect)),
                               np.abs(cube.normals[0]), atol=1e-12)
    with pytest.raises(ValueError):
        prob.validate()


def test_closing_from_random_polytope():
    poly = shapes.random_hull(40, seed=3)
    prob = mk.MinkowskiProblem(normals=poly.normals, target_areas=poly.areas)
    assert np.linalg.norm(mk.check_closing(prob)) <= 1e-9


def test_cube_solution_forced_by_symmetry():
    normals = np.vstack([np.eye(3), -np.eye(3)])
    prob = mk.MinkowskiProblem(normals=normals, target_areas=np.ones(6))
    body = mk.solve_minkowski(prob, tol=1e-10)
    np.testing.assert_allclose(body.support_numbers, 0.5, atol=1e-10)
    assert abs(body.volume() - 1.0) < 1e-9


def test_octahedron_normals_equal_areas():
    n = core.unit_vectors(
        np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1)
                  for sz in (-1, 1)], float) / np.sqrt(3)
    )
    prob = mk.MinkowskiProblem(normals=n, target_areas=np.ones(8))
    body = mk.solve_minkowski(prob, tol=1e-9)
    assert np.ptp(body.support_numbers) < 1e-8
    # round trip through the support representation
    back = core.polytope_from_support(body.normals, body.support_numbers)
    np.testing.assert_allclose(np.sort(back.areas), 1.0, atol=1e-7)


def test_roundtrip_random_polytopes():
    for seed in (0, 1, 2):
        src = shapes.random_hull(20, seed=seed).centered()
        prob = mk.MinkowskiProblem(normals=src.normals, target_areas=src.areas)
        rec, rep = mk.solve_minkowski(prob, tol=1e-9, full_output=True)
        err = np.max(np.abs(rec.support_numbers - src.support_numbers)
                     / np.abs(src.support_numbers))
        assert err < 1e-6
        assert np.linalg.norm(rec.centroid()) < 1e-9
        v = rec.volume()
        assert abs(v - (rec.areas @ rec.support_numbers) / 3.0) <= 1e-9 * v


def test_area_map_cube_and_homogeneity(cube):
    a1 = mk.area_map(cube.normals, cube.support_numbers)
    np.testing.assert_allclose(a1, 1.0, atol=1e-12)
    a2 = mk.area_map(cube.normals, 2 * cube.support_numbers)
    np.testing.assert_allclose(a2, 4.0 * a1, rtol=1e-12)
    lam = 1.73
    a3 = mk.area_map(cube.normals, lam * cube.support_numbers)
    np.testing.assert_allclose(a3, lam**2 * a1, rtol=1e-12)


def test_volume_gradient_is_area():
    rng = np.random.default_rng(1)
    src = shapes.random_hull(12, seed=5)
    n = src.normals
    h = src.support_numbers + rng.uniform(-0.02, 0.02, len(n))
    base = core.polytope_from_support(n, h)
    eps = 1e-6
    for i in range(len(n)):
        hp, hm = h.copy(), h.copy()
        hp[i] += eps
        hm[i] -= eps
        fd = (core.polytope_from_support(n, hp).volume()
              - core.polytope_from_support(n, hm).volume()) / (2 * eps)
        assert abs(fd - base.areas[i]) < 1e-6


def test_area_jacobian_matches_finite_differences():
    src = shapes.random_hull(14, seed=8).centered()
    poly = core.polytope_from_support(src.normals, src.support_numbers)
    jac = mk.area_jacobian(poly)
    assert np.abs(jac - jac.T).max() < 1e-12
    eps = 1e-7
    for j in range(0, len(src.normals), 5):
        hp = src.support_numbers.copy()
        hm = src.support_numbers.copy()
        hp[j] += eps
        hm[j] -= eps
        fd = (mk.area_map(src.normals, hp) - mk.area_map(src.normals, hm)) / (2 * eps)
        assert np.abs(jac[:, j] - fd).max() < 5e-5


def test_discretize_curvature_unit_and_scaled():
    centers, areas = mk.sphere_partition(200, seed=1)
    assert abs(areas.sum() - 4 * np.pi) < 1e-9
    samp = mk.CurvatureSample(centers=centers, cell_areas=areas,
                              curvature=np.ones(200))
    prob = mk.discretize_curvature(samp)
    # the closing repair shifts the total by at most the partition defect
    assert abs(prob.target_areas.sum() - 4 * np.pi) < 1e-6
    R = 3.0
    samp2 = mk.CurvatureSample(centers=centers, cell_areas=areas,
                               curvature=np.full(200, 1 / R**2))
    prob2 = mk.discretize_curvature(samp2)
    assert abs(prob2.target_areas.sum() - 4 * np.pi * R**2) < 1e-6


def test_discretize_smooth_profile_records_defect():
    centers, areas = mk.sphere_partition(162, seed=0)
    K = 1.0 / (1.0 + 0.3 * centers[:, 2] ** 2)
    samp = mk.CurvatureSample(centers=centers, cell_areas=areas, curvature=K)
    prob = mk.discretize_curvature(samp)
    before = np.linalg.norm(prob.metadata["closing_defect_before"])
    assert before < 0.05  # partition quadrature error only
    assert np.linalg.norm(mk.check_closing(prob)) < 1e-12
    assert prob.metadata["area_correction_norm"] >= 0


def test_negative_curvature_rejected():
    centers, areas = mk.sphere_partition(80, seed=2)
    K = np.ones(80)
    K[3] = -0.1
    with pytest.raises(mk.NegativeCurvature):
        mk.CurvatureSample(centers=centers, cell_areas=areas,
                           curvature=K).validate()


def test_uniqueness_across_initializations():
    src = shapes.random_hull(18, seed=4).centered()
    prob = mk.MinkowskiProblem(normals=src.normals, target_areas=src.areas)
    a = mk.solve_minkowski(prob, tol=1e-9)
    rng = np.random.default_rng(3)
    h0 = np.ones(len(src.normals)) * rng.uniform(0.5, 2.0, len(src.normals))
    b = mk.solve_minkowski(prob, tol=1e-9, init_support=h0)
    rel = np.max(np.abs(a.support_numbers - b.support_numbers)
                 / np.abs(a.support_numbers))
    assert rel < 1e-6


def test_solver_reports_budget_exhaustion():
    src = shapes.random_hull(20, seed=9).centered()
    prob = mk.MinkowskiProblem(normals=src.normals, target_areas=src.areas)
    with pytest.raises(MaxIterExceeded) as err:
        mk.solve_minkowski(prob, tol=1e-9, max_iter=2)
    assert err.value.best is not None
    assert err.value.residual > 0
