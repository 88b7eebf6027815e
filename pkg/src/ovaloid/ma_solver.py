"""Generalized Monge-Ampere machinery on piecewise-linear convex functions.

A PL convex function is the lower convex envelope of lifted nodes (B_i, v_i)
over a convex domain.  The measure it carries at a node is the area of the
subgradient cell {p : p . (B_k - B_i) <= v_k - v_i for all k}, optionally
weighted by a positive density theta(p, z, x); matching prescribed node
masses is the inverse problem solved here by monotone value-lowering sweeps
(Oliker-Prussner style) with a damped Newton phase when the weight does not
depend on z.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, QhullError

from . import planar
from .errors import (
    Infeasible,
    IncomparableProblems,
    MaxIterExceeded,
    MinStepReached,
    NotEnvelopeVertex,
    QuadratureFailure,
)

# 4-point Gauss-Legendre on [0, 1]
_GL_T = 0.5 * (1.0 + np.array([-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526]))
_GL_W = 0.5 * np.array([0.3478548451374538, 0.6521451548625461,
                        0.6521451548625461, 0.3478548451374538])


# ---------------------------------------------------------------------------
# types


@dataclasses.dataclass
class PLConvexFunction:
    """Lower convex envelope of lifted nodes over a convex domain polygon."""

    nodes: np.ndarray      # (N, 2) every node, interior and boundary
    values: np.ndarray     # (N,)
    domain: np.ndarray     # (M, 2) CCW convex polygon
    solve_info: dict | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.domain = np.asarray(self.domain, dtype=float)
        if len(self.nodes) != len(self.values):
            raise ValueError("one value per node required")

    @property
    def boundary_mask(self):
        return _on_polygon_boundary(self.domain, self.nodes)

    @property
    def interior_indices(self):
        return np.nonzero(~self.boundary_mask)[0]

    @property
    def boundary_indices(self):
        return np.nonzero(self.boundary_mask)[0]

    def envelope_values(self):
        """Envelope height at every node; equals values[i] iff i lies on it."""
        ev = lower_envelope_evaluator(self.nodes, self.values)
        return ev(self.nodes)

    def envelope_flags(self, tol=1e-9):
        """True where the node is on the lower envelope."""
        scale = max(np.ptp(self.values), 1.0)
        return self.values <= self.envelope_values() + tol * scale


@dataclasses.dataclass
class SubgradientCell:
    """Slopes of all supporting planes at one node, as a convex polygon."""

    node: int
    polygon: np.ndarray    # (k, 2) CCW in p-space
    area: float
    mass: float | None = None           # theta-weighted measure, if computed
    edge_constraints: list | None = None  # node index carving each edge


@dataclasses.dataclass
class MAProblem:
    """Prescribed node masses, Dirichlet boundary data and a weight."""

    domain: np.ndarray
    interior_nodes: np.ndarray
    masses: np.ndarray
    boundary_nodes: np.ndarray
    boundary_values: np.ndarray
    theta: object = None               # callable theta(p1, p2, z, x1, x2) or None
    theta_z_dependent: bool = False
    mass_bound: float | None = None    # known integral of theta over p-space

    def __post_init__(self):
        self.domain = np.asarray(self.domain, dtype=float)
        self.interior_nodes = np.asarray(self.interior_nodes, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        self.boundary_nodes = np.asarray(self.boundary_nodes, dtype=float)
        self.boundary_values = np.asarray(self.boundary_values, dtype=float)

    def validate(self):
        if (self.masses <= 0).any():
            raise ValueError("all masses must be positive")
        if not np.isfinite(self.masses).all():
            raise ValueError("masses must be finite")
        if len(self.interior_nodes) != len(self.masses):
            raise ValueError("one mass per interior node required")
        if len(self.boundary_nodes) != len(self.boundary_values):
            raise ValueError("one value per boundary node required")
        if not _on_polygon_boundary(self.domain, self.boundary_nodes).all():
            raise ValueError("boundary nodes must lie on the domain boundary")
        if _on_polygon_boundary(self.domain, self.interior_nodes).any():
            raise ValueError("interior nodes must be strictly inside the domain")
        if self.theta is not None:
            probe = self.theta(
                np.array([0.0, 1.0, -0.5]), np.array([0.0, -1.0, 0.5]),
                0.0, 0.0, 0.0,
            )
            if not (np.asarray(probe) > 0).all():
                raise ValueError("theta must be positive")
        return self

    def all_nodes(self):
        return np.vstack([self.interior_nodes, self.boundary_nodes])


@dataclasses.dataclass
class HomotopySchedule:
    """Parameter grid and problem family for continuation solves."""

    ts: np.ndarray
    problem_at: object      # callable t -> MAProblem

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        if len(self.ts) < 2 or (np.diff(self.ts) <= 0).any():
            raise ValueError("ts must be strictly increasing with >= 2 points")


@dataclasses.dataclass
class ComparisonReport:
    ok: bool
    violations: list      # (node index, gap)
    max_gap: float


# ---------------------------------------------------------------------------
# envelope and cells


def _on_polygon_boundary(polygon, points, tol=1e-9):
    poly = np.asarray(polygon, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scale = max(np.abs(poly).max(), 1.0)
    out = np.zeros(len(pts), dtype=bool)
    for k in range(len(poly)):
        a = poly[k]
        b = poly[(k + 1) % len(poly)]
        ab = b - a
        denom = float(ab @ ab)
        t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
        proj = a[None, :] + t[:, None] * ab[None, :]
        out |= np.linalg.norm(pts - proj, axis=1) <= tol * scale
    return out


def lower_envelope_evaluator(nodes, values):
    """Callable evaluating the lower convex envelope of the lifted nodes.

    The envelope is the pointwise maximum of the planes of the lifted hull's
    lower facets; if the lifted points are coplanar it is that single plane.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    lifted = np.column_stack([nodes, values])
    planes = None
    try:
        hull = ConvexHull(lifted)
        eq = hull.equations
        lower = eq[eq[:, 2] < -1e-12]
        # facet a x + b y + c z + d = 0, c < 0  ->  z = -(a x + b y + d) / c
        planes = np.column_stack(
            [-lower[:, 0] / lower[:, 2], -lower[:, 1] / lower[:, 2],
             -lower[:, 3] / lower[:, 2]]
        )
    except QhullError:
        coef, *_ = np.linalg.lstsq(
            np.column_stack([nodes, np.ones(len(nodes))]), values, rcond=None
        )
        planes = coef[None, :]

    def evaluate(query):
        q = np.atleast_2d(np.asarray(query, dtype=float))
        vals = q @ planes[:, :2].T + planes[:, 2][None, :]
        return vals.max(axis=1)

    return evaluate


def subgradient_cell_polygon(nodes, values, i, clip=None, prescreen=24):
    """Cell {p : p . (B_k - B_i) <= v_k - v_i for all k} as a polygon.

    Interior cells are bounded and computed exactly (a provably sufficient
    bounding box is clipped by nearest constraints first, then every
    remaining constraint is verified).  For boundary nodes the cell is
    unbounded and ``clip`` (a convex CCW window polygon) is required.
    Returns (vertices, edge_labels); empty vertices mean the node is not a
    vertex of the envelope.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = np.ones(len(nodes), dtype=bool)
    mask[i] = False
    d = nodes[mask] - nodes[i]
    c = values[mask] - values[i]
    labels_all = np.nonzero(mask)[0]
    dn = np.linalg.norm(d, axis=1)
    if (dn == 0).any():
        raise ValueError("duplicate nodes")

    if clip is not None:
        start = np.asarray(clip, dtype=float)
    else:
        # bounded iff the constraint directions leave no angular gap >= pi
        ang = np.sort(np.arctan2(d[:, 1], d[:, 0]))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        max_gap = float(gaps.max())
        if max_gap >= np.pi - 1e-12:
            raise ValueError(
                "cell is unbounded (boundary node); pass a clip window"
            )
        ratios = c / dn
        top = ratios.max()
        if top < 0:
            return np.zeros((0, 2)), []
        gamma = math.cos(max_gap / 2.0)
        half = 2.0 * top / gamma + 1.0
        start = planar.box_polygon(0.0, 0.0, half)

    order = np.argsort(dn)
    halfplanes = np.column_stack([d, c])
    slack = 1e-12 * max(1.0, float(np.abs(c).max()))
    active = list(order[: min(prescreen, len(order))])
    in_active = np.zeros(len(d), dtype=bool)
    in_active[active] = True
    # clip with the nearest constraints, then verify the rest and re-clip
    # from scratch with any violators until the active set is sufficient
    for _ in range(40):
        verts, elabels = planar.convex_clip(
            start, halfplanes[active],
            labels=[int(labels_all[k]) for k in active],
        )
        if len(verts) == 0:
            return np.zeros((0, 2)), []
        rest = np.nonzero(~in_active)[0]
        if len(rest) == 0:
            return verts, elabels
        viol = np.nonzero((verts @ d[rest].T - c[rest][None, :] > slack).any(axis=0))[0]
        if len(viol) == 0:
            return verts, elabels
        for k in rest[viol]:
            active.append(int(k))
            in_active[k] = True
    raise RuntimeError("cell clipping failed to stabilise")


def ma_measure(u: PLConvexFunction, node, clip=None):
    """Subgradient cell of one node with its unweighted area.

    Raises NotEnvelopeVertex when the node lies strictly above the envelope
    (its cell is empty).
    """
    verts, labels = subgradient_cell_polygon(u.nodes, u.values, node, clip=clip)
    area = abs(planar.polygon_area(verts)) if len(verts) >= 3 else 0.0
    if len(verts) < 3 or area == 0.0:
        raise NotEnvelopeVertex(f"node {node} carries no measure")
    return SubgradientCell(
        node=int(node), polygon=verts, area=area, edge_constraints=labels
    )


def conditional_curvature(u: PLConvexFunction, node, theta=None, clip=None,
                          rel_tol=1e-3):
    """theta-weighted measure of the node's cell (cell area when theta is None).

    theta is evaluated at the cell's generating node, z = u(B_i), x = B_i, so
    only its p-dependence is integrated (adaptive degree-5 quadrature).
    """
    cell = ma_measure(u, node, clip=clip)
    if theta is None:
        return cell.area
    z = float(u.values[node])
    x1, x2 = float(u.nodes[node][0]), float(u.nodes[node][1])

    def f(pts):
        vals = np.asarray(theta(pts[:, 0], pts[:, 1], z, x1, x2), dtype=float)
        if not np.isfinite(vals).all():
            raise QuadratureFailure("theta produced a non-finite value")
        return vals

    return planar.polygon_quad(f, cell.polygon, rel_tol=rel_tol)


def masses_from_density(domain, interior_nodes, boundary_nodes, phi,
                        rel_tol=1e-6):
    """Node masses as integrals of a density over a reference cell partition.

    The partition is the Voronoi diagram of all nodes clipped to the domain
    (obtained as the subgradient cells of the lifted paraboloid values
    |B|^2 / 2); phi maps (n, 2) points to densities.
    """
    nodes = np.vstack([interior_nodes, boundary_nodes])
    values = 0.5 * np.einsum("ij,ij->i", nodes, nodes)
    masses = np.zeros(len(interior_nodes))
    for i in range(len(interior_nodes)):
        verts, _ = subgradient_cell_polygon(nodes, values, i, clip=domain)
        if len(verts) < 3:
            continue
        masses[i] = planar.polygon_quad(
            lambda pts: np.asarray(phi(pts), dtype=float), verts,
            rel_tol=rel_tol,
        )
    return masses


def monte_carlo_cell_areas(u: PLConvexFunction, samples=1_000_000, seed=0,
                           box=None):
    """Monte-Carlo estimate of every node's cell area.

    Random slopes drawn uniformly in the axis-aligned rectangle ``box``
    (given as (lo, hi) corner pair or a polygon whose bounding box is used)
    are assigned to the node attaining the Legendre maximum p . B_k - v_k;
    hit fractions estimate |cell ∩ box|.  Independent of the
    halfplane-intersection route.
    """
    if box is None:
        raise ValueError("a sampling rectangle is required")
    box = np.asarray(box, dtype=float)
    lo, hi = box.min(axis=0), box.max(axis=0)
    rng = np.random.default_rng(seed)
    counts = np.zeros(len(u.nodes))
    total = 0
    chunk = 200_000
    rect_area = float(np.prod(hi - lo))
    while total < samples:
        m = min(chunk, samples - total)
        pts = lo + rng.random((m, 2)) * (hi - lo)
        scores = pts @ u.nodes.T - u.values[None, :]
        win = scores.argmax(axis=1)
        counts += np.bincount(win, minlength=len(u.nodes)).astype(float)
        total += m
    return counts / total * rect_area


# ---------------------------------------------------------------------------
# forward masses and Jacobian


def _masses(nodes, values, interior_idx, theta, rel_tol=1e-6, clip=None):
    return np.array(
        [_single_mass(nodes, values, i, theta, rel_tol, clip) for i in interior_idx]
    )


def _single_mass(nodes, values, i, theta, rel_tol=1e-6, clip=None):
    verts, _ = subgradient_cell_polygon(nodes, values, i, clip=clip)
    if len(verts) < 3:
        return 0.0
    if theta is None:
        return abs(planar.polygon_area(verts))
    z = float(values[i])
    x1, x2 = nodes[i]

    def f(pts):
        vals = np.asarray(theta(pts[:, 0], pts[:, 1], z, x1, x2), float)
        if not np.isfinite(vals).all():
            raise QuadratureFailure("theta produced a non-finite value")
        return vals

    return planar.polygon_quad(f, verts, rel_tol=rel_tol)


def _mass_jacobian(nodes, values, interior_idx, theta, clip=None):
    """d(mass_i)/d(value_j) from the cell edge geometry.

    An edge of cell i carved by node k has dA_i/dv_k = (edge theta-integral)
    / |B_k - B_i|; the diagonal collects the negated total.  Only valid when
    theta does not depend on z.
    """
    n = len(interior_idx)
    pos = {int(i): k for k, i in enumerate(interior_idx)}
    jac = np.zeros((n, n))
    for k, i in enumerate(interior_idx):
        verts, labels = subgradient_cell_polygon(nodes, values, i, clip=clip)
        if len(verts) < 3:
            continue
        for e in range(len(verts)):
            lab = labels[e]
            if not isinstance(lab, (int, np.integer)):
                continue
            a, b = verts[e], verts[(e + 1) % len(verts)]
            seg = np.linalg.norm(b - a)
            if seg == 0:
                continue
            if theta is None:
                flux = seg
            else:
                pts = a[None, :] + _GL_T[:, None] * (b - a)[None, :]
                vals = np.asarray(
                    theta(pts[:, 0], pts[:, 1], float(values[i]),
                          nodes[i][0], nodes[i][1]),
                    float,
                )
                flux = seg * float(_GL_W @ vals)
            w = flux / np.linalg.norm(nodes[int(lab)] - nodes[i])
            jac[k, k] -= w
            if int(lab) in pos:
                jac[k, pos[int(lab)]] += w
    return jac


def mass_balance_bound(theta, mass_bound=None, tol=1e-9):
    """Total attainable weighted mass: the integral of theta over p-space.

    Infinite for theta == None (unweighted measure).  Computed by quadrature
    over growing squares until the increment is negligible; returns inf when
    the integral keeps growing.
    """
    if theta is None:
        return math.inf
    if mass_bound is not None:
        return float(mass_bound)
    total = 0.0
    prev = None
    half = 1.0
    for _ in range(24):
        total = _integrate_square(theta, half)
        if prev is not None and abs(total - prev) <= tol * max(abs(total), 1.0):
            return total
        prev = total
        half *= 2.0
    return math.inf


def _integrate_square(theta, half, n=96):
    x, w = np.polynomial.legendre.leggauss(n)
    x = x * half
    w = w * half
    xx, yy = np.meshgrid(x, x)
    vals = theta(xx.ravel(), yy.ravel(), 0.0, 0.0, 0.0)
    vals = np.asarray(vals, dtype=float).reshape(n, n)
    return float(w @ vals @ w)


def _theta_window(theta, rel=1e-12):
    """Half-width of a square outside which theta's mass is negligible.

    None when the integral keeps growing (no useful window exists).
    """
    if theta is None:
        return None
    prev = None
    half = 1.0
    for _ in range(24):
        total = _integrate_square(theta, half)
        if prev is not None and abs(total - prev) <= rel * max(abs(total), 1.0):
            # the doubling that changed nothing already contained the mass
            return 0.75 * half
        prev = total
        half *= 2.0
    return None


# ---------------------------------------------------------------------------
# solver


def _boundary_start_values(problem):
    ev = lower_envelope_evaluator(problem.boundary_nodes, problem.boundary_values)
    return ev(problem.interior_nodes)


def solve_ma(problem: MAProblem, tol=1e-10, max_iter=400, init_values=None,
             newton=True, on_sweep=None):
    """Solve for a PL convex function with prescribed node masses.

    Monotone Oliker-Prussner sweeps lower one node value at a time until its
    weighted cell mass reaches the target; when theta is z-independent a
    damped Newton phase on the value vector finishes the solve.  Returns a
    PLConvexFunction whose solve_info records the per-sweep residuals.

    Raises Infeasible when the targets exceed the attainable mass and
    MaxIterExceeded (carrying the best iterate) when the budget runs out.
    """
    problem.validate()
    mu = problem.masses
    bound = mass_balance_bound(problem.theta, problem.mass_bound) \
        if not problem.theta_z_dependent else math.inf
    if mu.sum() >= bound * (1.0 - 1e-12):
        raise Infeasible(
            f"total mass {mu.sum()} reaches the attainable bound {bound}"
        )

    nodes = problem.all_nodes()
    n_int = len(problem.interior_nodes)
    interior_idx = np.arange(n_int)
    values = np.empty(len(nodes))
    values[n_int:] = problem.boundary_values
    if init_values is not None:
        values[:n_int] = np.asarray(init_values, dtype=float)
    else:
        values[:n_int] = _boundary_start_values(problem)

    theta = problem.theta

    # quadrature window: cells are intersected with a square outside which
    # theta carries negligible mass, keeping weighted quadratures bounded;
    # for z-dependent weights the window is refreshed at the lowest current
    # value (theta_z <= 0 makes lower z the widest profile)
    def current_window(vals):
        if theta is None:
            return None
        if problem.theta_z_dependent:
            z_ref = float(vals.min())
            half = _theta_window(
                lambda p1, p2, z, x1, x2: theta(p1, p2, z_ref, x1, x2)
            )
        else:
            half = _theta_window(theta)
        return None if half is None else planar.box_polygon(0.0, 0.0, half)
    quad_tol = max(1e-11, 0.01 * tol)

    def quad_now(res):
        # inexact sweeps: quadrature only needs to outpace the residual
        return float(np.clip(0.02 * res, quad_tol, 1e-6))

    vscale = max(np.ptp(values), 1.0)
    history = []
    sweeps = 0
    newton_iters = 0
    window = current_window(values)
    m = _masses(nodes, values, interior_idx, theta, quad_now(1.0), window)
    residual = float(np.max(np.abs(m - mu) / mu))

    def record():
        history.append(residual)
        if on_sweep is not None:
            on_sweep(sweeps, residual)

    record()
    for it in range(max_iter):
        if residual <= tol:
            break
        if problem.theta_z_dependent:
            window = current_window(values)
        qt = quad_now(residual)
        # sweeps only ever lower values, so they cannot recover from an
        # iterate that sits below the solution; Newton can, and is safe as
        # soon as every cell is nonempty
        use_newton = newton and not problem.theta_z_dependent and (m > 0).all()
        if use_newton:
            jac = _mass_jacobian(nodes, values, interior_idx, theta, window)
            try:
                delta = np.linalg.solve(jac, mu - m)
            except np.linalg.LinAlgError:
                use_newton = False
            if use_newton:
                alpha = 1.0
                improved = False
                for _ in range(30):
                    trial = values.copy()
                    trial[:n_int] += alpha * delta
                    m_trial = _masses(nodes, trial, interior_idx, theta,
                                      qt, window)
                    r_trial = float(np.max(np.abs(m_trial - mu) / mu))
                    if np.isfinite(r_trial) and r_trial < residual * (1 - 0.1 * alpha):
                        values = trial
                        m = m_trial
                        residual = r_trial
                        improved = True
                        break
                    alpha *= 0.5
                newton_iters += 1
                if improved:
                    sweeps += 1
                    record()
                    continue
        # Oliker-Prussner sweep: lower deficient nodes to their targets
        for i in range(n_int):
            mi = _single_mass(nodes, values, i, theta, qt, window)
            if mi >= mu[i] * (1.0 - 0.05 * tol) and mi <= mu[i] / (1.0 - 0.05 * tol):
                continue
            if mi > mu[i]:
                continue  # excess resolves as neighbours come down
            lo = _bracket_below(nodes, values, i, theta, mu[i], vscale,
                                quad_tol=qt, clip=window)
            if lo is None:
                raise Infeasible(
                    f"node {i} cannot reach its target mass {mu[i]}"
                )

            def g(t):
                vals = values.copy()
                vals[i] = t
                return _single_mass(nodes, vals, i, theta, qt, window) - mu[i]

            hi_t = values[i]
            values[i] = brentq(g, lo, hi_t, xtol=1e-13 * vscale, maxiter=200)
        qt = quad_now(max(residual * 0.1, tol))
        m = _masses(nodes, values, interior_idx, theta, qt, window)
        new_residual = float(np.max(np.abs(m - mu) / mu))
        if new_residual > residual + 1e-9:
            warnings.warn(
                f"sweep residual rose from {residual} to {new_residual}",
                stacklevel=2,
            )
        residual = new_residual
        sweeps += 1
        record()
    else:
        u = PLConvexFunction(
            nodes=nodes, values=values, domain=problem.domain,
            solve_info={
                "residual_history": history, "sweeps": sweeps,
                "newton_iters": newton_iters, "final_residual": residual,
                "converged": False,
            },
        )
        raise MaxIterExceeded(
            f"residual {residual} after {max_iter} iterations",
            best=u, residual=residual,
        )

    return PLConvexFunction(
        nodes=nodes, values=values, domain=problem.domain,
        solve_info={
            "residual_history": history, "sweeps": sweeps,
            "newton_iters": newton_iters, "final_residual": residual,
            "converged": True,
        },
    )


def _bracket_below(nodes, values, i, theta, target, vscale, quad_tol=1e-8,
                   clip=None, max_doublings=60):
    """Find a value for node i whose mass meets or exceeds the target.

    None when the mass saturates below the target (the cell has swallowed the
    whole weight window), which signals an unattainable mass.
    """
    step = 0.25 * vscale
    t = values[i]
    prev_mass = None
    for _ in range(max_doublings):
        t = t - step
        vals = values.copy()
        vals[i] = t
        mass = _single_mass(nodes, vals, i, theta, quad_tol, clip)
        if mass >= target:
            return t
        if prev_mass is not None and 0 < mass <= prev_mass * (1 + 1e-12):
            return None  # saturated below the target
        prev_mass = mass
        step *= 2.0
    return None


# ---------------------------------------------------------------------------
# comparison, continuation, probes


def maximum_principle_check(u1, u2, problem1, problem2, tol=1e-9):
    """Verify u1 <= u2 nodewise for ordered data (masses down, boundary up)."""
    if len(u1.nodes) != len(u2.nodes) or not np.allclose(
        u1.nodes, u2.nodes, atol=1e-12
    ):
        raise IncomparableProblems("node sets differ")
    if (problem1.masses < problem2.masses - 1e-12).any():
        raise IncomparableProblems("masses of problem1 must dominate problem2")
    if (problem1.boundary_values > problem2.boundary_values + 1e-12).any():
        raise IncomparableProblems("boundary of problem1 must lie below problem2")
    scale = max(np.ptp(u2.values), 1.0)
    gaps = u1.values - u2.values
    violations = [
        (int(k), float(gaps[k])) for k in np.nonzero(gaps > tol * scale)[0]
    ]
    return ComparisonReport(
        ok=not violations,
        violations=violations,
        max_gap=float(gaps.max()),
    )


def homotopy_solve(schedule: HomotopySchedule, tol=1e-10, min_step=1e-3,
                   max_iter=400, max_mass_step=0.5):
    """Warm-started continuation along the problem family.

    Failed steps are bisected; when the step between successful parameters
    falls below ``min_step`` a MinStepReached carrying the progress so far is
    raised.  Returns the solutions at the grid parameters.
    """
    ts = schedule.ts
    problem0 = schedule.problem_at(float(ts[0]))
    u = solve_ma(problem0, tol=tol, max_iter=max_iter)
    solutions = [u]
    step_log = [(float(ts[0]), u.solve_info["sweeps"])]
    t_good = float(ts[0])
    mu_good = problem0.masses

    for t_target in ts[1:]:
        t_target = float(t_target)
        while t_good < t_target:
            t_next = t_target
            while True:
                problem = schedule.problem_at(t_next)
                rel = float(
                    np.max(np.abs(problem.masses - mu_good) / mu_good)
                )
                feasible_step = rel <= max_mass_step
                if feasible_step:
                    try:
                        u_try = solve_ma(
                            problem, tol=tol, max_iter=max_iter,
                            init_values=u.values[: len(problem.interior_nodes)],
                        )
                        break
                    except (Infeasible, MaxIterExceeded):
                        pass
                t_next = 0.5 * (t_good + t_next)
                if t_next - t_good < min_step:
                    raise MinStepReached(
                        f"continuation stalled at t={t_good}",
                        last_t=t_good, solutions=solutions,
                    )
            u = u_try
            t_good = t_next
            mu_good = problem.masses
            step_log.append((t_good, u.solve_info["sweeps"]))
        solutions.append(u)
    solutions[-1].solve_info["step_log"] = step_log
    return solutions


def liouville_probe(radii, f=1.0, spacing=0.25, bump_height=0.0,
                    window_halfwidth=0.5, tol=1e-10, max_iter=400):
    """Deviation-from-quadratic of solves on growing squares [-R, R]^2.

    Node masses are f times the uniform-partition cell area, boundary data is
    the exact quadratic sqrt(f) |x|^2 / 2 (optionally bumped at the boundary
    node nearest (R, 0)); the report rows carry the max-norm deviation of the
    recovered values from their best-fit quadratic inside the fixed window.
    """
    if f <= 0:
        raise ValueError("f must be a positive constant")
    rows = []
    for R in radii:
        R = float(R)
        n_seg = max(2, round(2 * R / spacing))
        coords = np.linspace(-R, R, n_seg + 1)
        xx, yy = np.meshgrid(coords, coords)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        on_b = (np.abs(np.abs(pts[:, 0]) - R) < 1e-12) | (
            np.abs(np.abs(pts[:, 1]) - R) < 1e-12
        )
        interior = pts[~on_b]
        boundary = pts[on_b]
        h = coords[1] - coords[0]
        quad = lambda p: 0.5 * math.sqrt(f) * (p[:, 0] ** 2 + p[:, 1] ** 2)
        g = quad(boundary)
        if bump_height:
            k = int(np.argmin(np.linalg.norm(boundary - np.array([R, 0.0]), axis=1)))
            g = g.copy()
            g[k] += bump_height
        domain = np.array([[-R, -R], [R, -R], [R, R], [-R, R]])
        problem = MAProblem(
            domain=domain, interior_nodes=interior,
            masses=np.full(len(interior), f * h * h),
            boundary_nodes=boundary, boundary_values=g,
        )
        u = solve_ma(problem, tol=tol, max_iter=max_iter,
                     init_values=quad(interior))
        w = window_halfwidth + 1e-12
        sel = (np.abs(interior[:, 0]) <= w) & (np.abs(interior[:, 1]) <= w)
        win_pts = interior[sel]
        win_vals = u.values[: len(interior)][sel]
        design = np.column_stack([
            np.ones(len(win_pts)), win_pts[:, 0], win_pts[:, 1],
            win_pts[:, 0] ** 2, win_pts[:, 0] * win_pts[:, 1],
            win_pts[:, 1] ** 2,
        ])
        coef, *_ = np.linalg.lstsq(design, win_vals, rcond=None)
        deviation = float(np.abs(design @ coef - win_vals).max())
        rows.append({
            "R": R, "deviation": deviation, "spacing": h,
            "interior_nodes": int(len(interior)),
            "window_nodes": int(sel.sum()),
            "residual": u.solve_info["final_residual"],
        })
    return rows
