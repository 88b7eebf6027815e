"""Discrete Minkowski problem.

Recover a convex polytope from prescribed outer unit normals and face areas
(or from Gauss-curvature samples on the sphere, converted to per-cell areas).
The solve runs a damped Newton iteration on the support vector: the area map
is the gradient of the volume functional, its Jacobian follows from the edge
geometry, and the translation kernel is handled by a least-squares step plus
recentering.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.spatial import SphericalVoronoi

from .core import (
    ConvexPolytope,
    closing_defect,
    polytope_from_support,
    unit_vectors,
)
from .errors import DegenerateFace, EmptyBody, MaxIterExceeded
from . import shapes


class NegativeCurvature(ValueError):
    """Curvature samples must be strictly positive."""


@dataclasses.dataclass
class MinkowskiProblem:
    normals: np.ndarray        # (m, 3) distinct unit vectors, positively spanning
    target_areas: np.ndarray   # (m,) positive
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.normals = unit_vectors(self.normals)
        self.target_areas = np.asarray(self.target_areas, dtype=float)

    def validate(self, closing_tol=1e-8):
        if len(self.normals) < 4:
            raise ValueError("need at least 4 normals")
        if len(self.normals) != len(self.target_areas):
            raise ValueError("one target area per normal required")
        if (self.target_areas <= 0).any():
            raise ValueError("target areas must be positive")
        gram = self.normals @ self.normals.T
        np.fill_diagonal(gram, 0.0)
        if gram.max() > 1.0 - 1e-12:
            raise ValueError("normals must be pairwise distinct")
        defect = np.linalg.norm(check_closing(self))
        if defect > closing_tol * self.target_areas.sum():
            raise ValueError(f"closing defect {defect} exceeds tolerance")
        return self


@dataclasses.dataclass
class CurvatureSample:
    """Sphere partition with cell centers, spherical areas, and curvatures."""

    centers: np.ndarray       # (m, 3) unit vectors
    cell_areas: np.ndarray    # (m,) spherical areas, summing to 4*pi
    curvature: np.ndarray     # (m,) positive K at each center

    def __post_init__(self):
        self.centers = unit_vectors(self.centers)
        self.cell_areas = np.asarray(self.cell_areas, dtype=float)
        self.curvature = np.asarray(self.curvature, dtype=float)

    def validate(self, tol=1e-6):
        if abs(self.cell_areas.sum() - 4 * np.pi) > tol * 4 * np.pi:
            raise ValueError("cell areas must sum to the full sphere")
        if (self.curvature <= 0).any():
            raise NegativeCurvature("curvature values must be positive")
        return self


def check_closing(problem: MinkowskiProblem):
    """Defect vector sum(A_i n_i); zero for consistent closed data."""
    return closing_defect(problem.normals, problem.target_areas)


def sphere_partition(n_cells, seed=None):
    """Roughly uniform sphere partition: Fibonacci centers, Voronoi areas."""
    centers = shapes.fibonacci_sphere(n_cells, seed=seed)
    sv = SphericalVoronoi(centers)
    return centers, sv.calculate_areas()


def discretize_curvature(sample: CurvatureSample):
    """Face areas A_i = cell_area_i / K(n_i), with the closing defect repaired.

    Partition quadrature never satisfies the closing condition exactly, so
    the minimal-norm area correction is applied and recorded in the returned
    problem's metadata.
    """
    sample.validate()
    areas = sample.cell_areas / sample.curvature
    defect = closing_defect(sample.centers, areas)
    gram = sample.centers.T @ sample.centers  # sum of n n^T
    lam = np.linalg.solve(gram, defect)
    corrected = areas - sample.centers @ lam
    if (corrected <= 0).any():
        raise ValueError("closing repair produced non-positive areas")
    return MinkowskiProblem(
        normals=sample.centers,
        target_areas=corrected,
        metadata={
            "closing_defect_before": [float(v) for v in defect],
            "area_correction_norm": float(np.linalg.norm(corrected - areas)),
        },
    )


def area_map(normals, support_numbers):
    """Face areas of the halfspace intersection, in the input normal order."""
    return polytope_from_support(normals, support_numbers).areas.copy()


def _edge_lengths_by_face_pair(poly: ConvexPolytope):
    """Map (i, j) of adjacent faces to their shared edge length."""
    out = {}
    m = len(poly.faces)
    vert_sets = [frozenset(c) for c in poly.faces]
    for i in range(m):
        if len(poly.faces[i]) < 3:
            continue
        for j in range(i + 1, m):
            shared = vert_sets[i] & vert_sets[j]
            if len(shared) == 2:
                a, b = (poly.vertices[v] for v in shared)
                out[(i, j)] = float(np.linalg.norm(a - b))
    return out


def area_jacobian(poly: ConvexPolytope):
    """d(area_i)/d(h_j): edge/sin for neighbours, -sum edge*cot on the diagonal."""
    m = len(poly.faces)
    jac = np.zeros((m, m))
    for (i, j), ell in _edge_lengths_by_face_pair(poly).items():
        ni, nj = poly.normals[i], poly.normals[j]
        sin = float(np.linalg.norm(np.cross(ni, nj)))
        if sin < 1e-14:
            continue
        cos = float(ni @ nj)
        jac[i, j] += ell / sin
        jac[j, i] += ell / sin
        jac[i, i] -= ell * cos / sin
        jac[j, j] -= ell * cos / sin
    return jac


def _activate_all_faces(n, h):
    """Blend a requested start toward the round one until all faces are live.

    A plane cut off from the body contributes a zero Jacobian row that the
    Newton iteration can never repair, so starts must have every face
    active; the round configuration h = const always is.
    """
    ones = np.full(len(h), float(np.abs(h).mean()) or 1.0)

    def alive(hh):
        try:
            poly = polytope_from_support(n, hh)
        except (EmptyBody, ValueError):
            return None
        if poly.areas.min() <= 1e-12 * poly.areas.max():
            return None
        return poly

    poly = alive(h)
    if poly is not None:
        return h, poly
    lo, hi = 0.0, 1.0  # beta = 1 is the requested start, beta = 0 is round
    best = (ones, alive(ones))
    for _ in range(25):
        beta = 0.5 * (lo + hi)
        hh = (1 - beta) * ones + beta * h
        poly = alive(hh)
        if poly is None:
            hi = beta
        else:
            lo = beta
            best = (hh, poly)
    return best


def solve_minkowski(problem: MinkowskiProblem, tol=1e-9, max_iter=100,
                    init_support=None, full_output=False):
    """Polytope with the prescribed face normals and areas, centred at origin.

    Newton steps h <- h + J^+ (A0 - A(h)) with the symmetric area Jacobian;
    the pseudo-inverse step stays orthogonal to the translation kernel and
    the body is recentred after convergence.  Raises DegenerateFace if some
    prescribed face vanishes at the optimum and MaxIterExceeded with the
    residual history when the budget runs out.

    Residuals below ~1e-10 relative are not reachable: the halfspace
    intersection quantises vertices at that scale.
    """
    problem.validate()
    n = problem.normals
    target = problem.target_areas

    if init_support is None:
        # every plane of the round start h = const is active (it touches the
        # body at its own normal), so all faces begin with positive area
        h = np.ones(len(n))
        poly = polytope_from_support(n, h)
    else:
        h = np.asarray(init_support, dtype=float).copy()
        h, poly = _activate_all_faces(n, h)
    scale = np.sqrt(target.sum() / poly.areas.sum())
    h = h * scale
    poly = poly.scaled(scale)

    floor = 1e-14 * float(target.max())
    trust = 0.25 * float(np.abs(h).mean())
    history = []
    for it in range(max_iter):
        areas = poly.areas
        resid = float(np.max(np.abs(areas - target) / target))
        history.append(resid)
        if resid <= tol:
            break
        jac = area_jacobian(poly)
        full_step, *_ = np.linalg.lstsq(jac, target - areas, rcond=1e-12)
        accepted = False
        for _ in range(60):
            step = full_step
            norm = float(np.abs(step).max())
            if norm > trust:
                step = step * (trust / norm)
            try:
                trial = polytope_from_support(n, h + step)
            except (EmptyBody, ValueError):
                trust *= 0.25
                continue
            trial_resid = float(np.max(np.abs(trial.areas - target) / target))
            # keep every face alive: a dead face has a zero Jacobian row
            # and the iteration can never revive it
            if trial_resid < resid and trial.areas.min() > floor:
                h = h + step
                poly = trial
                trust = min(trust * 2.0, 10.0 * float(np.abs(h).mean()))
                accepted = True
                break
            trust *= 0.25
        if not accepted:
            raise MaxIterExceeded(
                f"trust region collapsed at residual {resid}",
                best=poly, residual=resid,
            )
    else:
        raise MaxIterExceeded(
            f"residual {history[-1]} after {max_iter} iterations",
            best=poly, residual=history[-1],
        )

    dead = [
        i for i in range(len(n))
        if target[i] > 0 and poly.areas[i] < 1e-12 * target.max()
    ]
    if dead:
        raise DegenerateFace(f"faces {dead} vanished at the optimum")

    centred = poly.centered()
    if full_output:
        report = {
            "iterations": len(history),
            "residual_history": history,
            "final_residual": history[-1] if history else 0.0,
            "volume": centred.volume(),
            "support_numbers": centred.support_numbers.tolist(),
        }
        return centred, report
    return centred
