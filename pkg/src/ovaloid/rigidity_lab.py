"""Infinitesimal rigidity of triangulated surfaces and the flex equation.

First-order isometric deformations must preserve every edge length, giving
one linear constraint (v_i - v_j) . (tau_i - tau_j) = 0 per edge.  The kernel
of that system always contains the six rigid motions a x r + b; a surface is
rigid when it contains nothing else.  For graph surfaces z(x, y) the vertical
component zeta of a bending field satisfies
z_xx zeta_yy - 2 z_xy zeta_xy + z_yy zeta_xx = 0, discretised here on a
rectangular grid with central differences.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import DegenerateGeometry, NotStrictlyConvex, PrecisionWarning


@dataclasses.dataclass(frozen=True)
class TriangulatedSurface:
    vertices: np.ndarray   # (V, 3)
    triangles: np.ndarray  # (T, 3) int
    with_boundary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=int))

    def edges(self):
        seen = set()
        for a, b, c in self.triangles:
            for u, w in ((a, b), (b, c), (c, a)):
                seen.add((min(u, w), max(u, w)))
        return sorted(seen)

    def validate(self):
        counts = {}
        for a, b, c in self.triangles:
            for u, w in ((a, b), (b, c), (c, a)):
                key = (min(u, w), max(u, w))
                counts[key] = counts.get(key, 0) + 1
        bad = [e for e, k in counts.items() if k != 2]
        if bad and not self.with_boundary:
            raise ValueError(
                f"{len(bad)} edges are not shared by exactly 2 triangles"
            )
        return self


def isometry_constraints(surface: TriangulatedSurface):
    """Sparse E x 3V system of first-order edge-length constraints.

    Row for edge (i, j) applies the unit edge direction with opposite signs
    to the two endpoint displacement blocks (row scaling by edge length).
    """
    edges = surface.edges()
    v = surface.vertices
    rows, cols, vals = [], [], []
    for r, (i, j) in enumerate(edges):
        d = v[i] - v[j]
        d = d / np.linalg.norm(d)
        for k in range(3):
            rows += [r, r]
            cols += [3 * i + k, 3 * j + k]
            vals += [d[k], -d[k]]
    mat = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(edges), 3 * len(v))
    )
    return mat


def trivial_motion_basis(vertices):
    """3 translations and 3 rotations as columns of a (3V, 6) matrix."""
    v = np.asarray(vertices, dtype=float)
    nv = len(v)
    basis = np.zeros((3 * nv, 6))
    for k in range(3):
        basis[k::3, k] = 1.0
    for k, axis in enumerate(np.eye(3)):
        basis[:, 3 + k] = np.cross(axis, v).ravel()
    return basis


def constraint_residual(surface, field):
    """Max edge-length-rate magnitude of a displacement field (V, 3)."""
    tau = np.asarray(field, dtype=float).reshape(len(surface.vertices), 3)
    v = surface.vertices
    worst = 0.0
    for i, j in surface.edges():
        d = v[i] - v[j]
        worst = max(worst, abs(d @ (tau[i] - tau[j])) / np.linalg.norm(d))
    return worst


@dataclasses.dataclass
class BendingReport:
    kernel_dim: int
    nontrivial_dim: int
    basis: np.ndarray          # (3V, nontrivial_dim) orthonormal columns
    singular_values: np.ndarray
    spectrum_tail: np.ndarray  # smallest 12 singular values
    trivial_residual: float    # constraint residual of the projected basis

    def as_dict(self):
        return {
            "kernel_dim": int(self.kernel_dim),
            "nontrivial_dim": int(self.nontrivial_dim),
            "spectrum_tail": [float(s) for s in self.spectrum_tail],
            "trivial_residual": float(self.trivial_residual),
        }


def bending_space(surface: TriangulatedSurface, tol=1e-10):
    """Kernel of the constraint system split into trivial and extra flexes.

    Singular values below tol * sigma_max count as zero; the span of the six
    rigid motions is projected out of the kernel and whatever remains is the
    nontrivial flex space (empty exactly when the surface is rigid).
    """
    surface.validate()
    mat = isometry_constraints(surface).toarray()
    _, svals, vt = np.linalg.svd(mat)
    smax = svals[0] if len(svals) else 1.0
    rank = int(np.sum(svals > tol * smax))
    kernel_dim = mat.shape[1] - rank
    kernel = vt[rank:].T  # (3V, kernel_dim), orthonormal
    # pad with the structural zeros svd omits when E < 3V
    svals = np.concatenate([svals, np.zeros(mat.shape[1] - len(svals))])

    triv = trivial_motion_basis(surface.vertices)
    qt, rt = np.linalg.qr(triv)
    if np.abs(np.diag(rt)).min() < 1e-12 * np.abs(np.diag(rt)).max():
        raise DegenerateGeometry("vertex set spans fewer than 6 rigid motions")
    # residual of the trivial motions themselves (should be exactly flat)
    triv_resid = max(
        constraint_residual(surface, qt[:, k]) for k in range(6)
    )

    proj = kernel - qt @ (qt.T @ kernel)
    if proj.size:
        u2, s2, _ = np.linalg.svd(proj, full_matrices=False)
        extra = int(np.sum(s2 > 1e-8))
        basis = u2[:, :extra]
    else:
        extra = 0
        basis = np.zeros((mat.shape[1], 0))
    nontrivial = kernel_dim - 6
    if nontrivial != extra:
        warnings.warn(
            f"kernel minus trivial gives {nontrivial}, projection gives {extra}",
            stacklevel=2,
        )
    tail = svals[-12:] if len(svals) >= 12 else svals
    return BendingReport(
        kernel_dim=kernel_dim,
        nontrivial_dim=nontrivial,
        basis=basis,
        singular_values=svals,
        spectrum_tail=tail,
        trivial_residual=triv_resid,
    )


# ---------------------------------------------------------------------------
# the flex equation on grid patches


@dataclasses.dataclass
class GridPatch:
    """Rectangular grid carrying a base graph z and a flex component zeta."""

    h: float
    z: np.ndarray      # (ny, nx); axis 0 is y, axis 1 is x
    zeta: np.ndarray   # same shape

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.zeta = np.asarray(self.zeta, dtype=float)
        if self.z.shape != self.zeta.shape:
            raise ValueError("z and zeta must share a shape")
        if min(self.z.shape) < 3:
            raise ValueError("need at least 3 nodes per axis")


def _second_diffs(a, h):
    """Central (f_xx, f_yy, f_xy) at interior nodes of a grid array."""
    fxx = (a[1:-1, 2:] - 2 * a[1:-1, 1:-1] + a[1:-1, :-2]) / h**2
    fyy = (a[2:, 1:-1] - 2 * a[1:-1, 1:-1] + a[:-2, 1:-1]) / h**2
    fxy = (a[2:, 2:] - a[2:, :-2] - a[:-2, 2:] + a[:-2, :-2]) / (4 * h**2)
    return fxx, fyy, fxy


def defo_residual(patch: GridPatch):
    """Max-norm residual of z_xx zeta_yy - 2 z_xy zeta_xy + z_yy zeta_xx."""
    zxx, zyy, zxy = _second_diffs(patch.z, patch.h)
    wxx, wyy, wxy = _second_diffs(patch.zeta, patch.h)
    return float(np.abs(zxx * wyy - 2 * zxy * wxy + zyy * wxx).max())


def _check_convex(zxx, zyy, zxy, tol=1e-12):
    det = zxx * zyy - zxy**2
    bad = np.nonzero((zxx <= tol) | (det <= tol))
    return list(zip(*[b.tolist() for b in bad]))


def solve_defo(z, h, zeta_boundary):
    """Dirichlet solve of the flex equation over a strictly convex base grid.

    ``zeta_boundary`` supplies the full grid array; only its outer ring is
    read.  The discrete coefficient matrix at each interior node is the
    adjugate of the Hessian of z, positive definite where z is strictly
    convex, so the linear system is elliptic.  Raises NotStrictlyConvex with
    the failing (row, col) nodes otherwise.
    """
    z = np.asarray(z, dtype=float)
    zb = np.asarray(zeta_boundary, dtype=float)
    ny, nx = z.shape
    zxx, zyy, zxy = _second_diffs(z, h)
    bad = _check_convex(zxx, zyy, zxy)
    if bad:
        raise NotStrictlyConvex(
            f"discrete Hessian fails positivity at {len(bad)} nodes",
            nodes=[(r + 1, c + 1) for r, c in bad],
        )

    def idx(r, c):
        return (r - 1) * (nx - 2) + (c - 1)

    nun = (ny - 2) * (nx - 2)
    mat = sp.lil_matrix((nun, nun))
    rhs = np.zeros(nun)
    zeta = zb.copy()

    # stencil multiplied by h^2: zeta_xx ~ E - 2C + W, zeta_yy ~ N - 2C + S,
    # zeta_xy ~ (NE - NW - SE + SW) / 4
    for r in range(1, ny - 1):
        for c in range(1, nx - 1):
            a = zyy[r - 1, c - 1]   # multiplies zeta_xx
            b = zxx[r - 1, c - 1]   # multiplies zeta_yy
            g = zxy[r - 1, c - 1]
            row = idx(r, c)
            entries = {
                (r, c): -2.0 * a - 2.0 * b,
                (r, c + 1): a, (r, c - 1): a,
                (r + 1, c): b, (r - 1, c): b,
                (r + 1, c + 1): -0.5 * g, (r - 1, c - 1): -0.5 * g,
                (r + 1, c - 1): 0.5 * g, (r - 1, c + 1): 0.5 * g,
            }
            for (rr, cc), coef in entries.items():
                if 1 <= rr < ny - 1 and 1 <= cc < nx - 1:
                    mat[row, idx(rr, cc)] += coef
                else:
                    rhs[row] -= coef * zb[rr, cc]
    sol = spsolve(mat.tocsr(), rhs)
    zeta[1:-1, 1:-1] = sol.reshape(ny - 2, nx - 2)
    return GridPatch(h=h, z=z, zeta=zeta)


@dataclasses.dataclass
class LemmaReport:
    ok: bool
    max_det: float
    violations: list       # (row, col, det) beyond tolerance
    defo_residual: float

    def as_dict(self):
        return {
            "ok": self.ok,
            "max_det": float(self.max_det),
            "violations": [(int(r), int(c), float(d)) for r, c, d in self.violations],
            "defo_residual": float(self.defo_residual),
        }


def main_lemma_check(patch: GridPatch, tol=1e-8, residual_gate=1e-6):
    """Audit: det Hess zeta <= tol wherever Hess z is positive definite.

    Algebraically, Hess z > 0 together with a vanishing flex pairing forces
    det Hess zeta <= 0; the discrete check inherits the solver residual, so a
    PrecisionWarning is issued when that residual is too large for ``tol`` to
    be meaningful.
    """
    resid = defo_residual(patch)
    scale = max(float(np.abs(patch.z).max()), 1.0)
    if resid > residual_gate * scale:
        warnings.warn(
            f"flex residual {resid} too large for a {tol} determinant check",
            PrecisionWarning,
            stacklevel=2,
        )
    zxx, zyy, zxy = _second_diffs(patch.z, patch.h)
    wxx, wyy, wxy = _second_diffs(patch.zeta, patch.h)
    det = wxx * wyy - wxy**2
    convex = (zxx > 0) & (zxx * zyy - zxy**2 > 0)
    det_on = np.where(convex, det, -np.inf)
    viol = np.nonzero(det_on > tol)
    violations = [
        (int(r) + 1, int(c) + 1, float(det_on[r, c]))
        for r, c in zip(*viol)
    ]
    max_det = float(det_on.max()) if convex.any() else float("-inf")
    return LemmaReport(
        ok=not violations,
        max_det=max_det,
        violations=violations,
        defo_residual=resid,
    )
