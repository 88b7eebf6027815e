"""Small 2-D helpers: polygon measures, convex clipping, triangle quadrature."""

import numpy as np

# 7-point degree-5 rule on the reference triangle (barycentric coords, weights sum to 1)
_SQ15 = np.sqrt(15.0)
_A1 = (6.0 - _SQ15) / 21.0
_A2 = (6.0 + _SQ15) / 21.0
_TRI_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _A1, 1 - 2 * _A1],
        [_A1, 1 - 2 * _A1, _A1],
        [1 - 2 * _A1, _A1, _A1],
        [_A2, _A2, 1 - 2 * _A2],
        [_A2, 1 - 2 * _A2, _A2],
        [1 - 2 * _A2, _A2, _A2],
    ]
)
_TRI_W = np.array(
    [9 / 40]
    + [(155.0 - _SQ15) / 1200.0] * 3
    + [(155.0 + _SQ15) / 1200.0] * 3
)


def polygon_area(poly):
    """Signed shoelace area of a closed 2-D polygon (positive if CCW)."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(poly):
    p = np.asarray(poly, dtype=float)
    a = polygon_area(p)
    if abs(a) < 1e-300:
        return p.mean(axis=0)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return np.array([cx, cy])


def interior_angles(poly):
    """Interior angle at every corner of a simple CCW polygon, in (0, 2*pi)."""
    p = np.asarray(poly, dtype=float)
    prev = np.roll(p, 1, axis=0)
    nxt = np.roll(p, -1, axis=0)
    d_in = p - prev
    d_out = nxt - p
    turn = np.arctan2(
        d_in[:, 0] * d_out[:, 1] - d_in[:, 1] * d_out[:, 0],
        d_in[:, 0] * d_out[:, 0] + d_in[:, 1] * d_out[:, 1],
    )
    return np.pi - turn


def edge_lengths(poly):
    p = np.asarray(poly, dtype=float)
    return np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)


def point_in_polygon(poly, point, tol=1e-12):
    """Winding-number test with a boundary tolerance; closed polygon assumed."""
    p = np.asarray(poly, dtype=float)
    q = np.asarray(point, dtype=float)
    scale = max(np.abs(p).max(), 1.0)
    # on-boundary check first
    for k in range(len(p)):
        a, b = p[k], p[(k + 1) % len(p)]
        ab = b - a
        t = np.dot(q - a, ab) / max(np.dot(ab, ab), 1e-300)
        t = min(1.0, max(0.0, t))
        if np.linalg.norm(a + t * ab - q) <= tol * scale:
            return True
    wind = 0
    for k in range(len(p)):
        a, b = p[k], p[(k + 1) % len(p)]
        if a[1] <= q[1] < b[1] or b[1] <= q[1] < a[1]:
            xint = a[0] + (q[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if xint > q[0]:
                wind += 1 if b[1] > a[1] else -1
    return wind != 0


def clip_halfplane(poly, normal, offset, tol=0.0):
    """Clip a convex polygon against {x : normal . x <= offset} (Sutherland-Hodgman).

    Returns (vertices, edge_labels) where edge_labels[k] tags the edge from
    vertex k to k+1 with the label of the clipping line that created it
    (None for inherited edges).  ``poly`` may be (verts, labels) or bare verts.
    """
    if isinstance(poly, tuple):
        verts, labels = poly
    else:
        verts, labels = np.asarray(poly, dtype=float), [None] * len(poly)
    n = len(verts)
    if n == 0:
        return verts, []
    d = verts @ np.asarray(normal, dtype=float) - offset
    inside = d <= tol
    if inside.all():
        return verts, labels
    if not inside.any():
        return verts[:0], []
    out_v, out_l = [], []
    for k in range(n):
        k2 = (k + 1) % n
        a_in, b_in = inside[k], inside[k2]
        if a_in:
            out_v.append(verts[k])
            if b_in:
                out_l.append(labels[k])
            else:
                t = d[k] / (d[k] - d[k2])
                out_v.append(verts[k] + t * (verts[k2] - verts[k]))
                out_l.append(labels[k])
                out_l.append("CUT")  # placeholder, replaced below
        elif b_in:
            t = d[k] / (d[k] - d[k2])
            out_v.append(verts[k] + t * (verts[k2] - verts[k]))
            out_l.append(labels[k])
    out_l = ["__new__" if l == "CUT" else l for l in out_l]
    return np.array(out_v), out_l


def convex_clip(poly, halfplanes, labels=None, tol=0.0):
    """Intersect a convex polygon with halfplanes {n_k . x <= c_k}.

    ``halfplanes`` is an (m, 3) array of rows (nx, ny, c).  Returns
    (vertices, edge_labels); edge label k marks edges carved by halfplane k.
    """
    verts = np.asarray(poly, dtype=float)
    elabels = [None] * len(verts)
    hp = np.asarray(halfplanes, dtype=float)
    for k in range(len(hp)):
        verts, elabels = clip_halfplane((verts, elabels), hp[k, :2], hp[k, 2], tol=tol)
        lab = k if labels is None else labels[k]
        elabels = [lab if l == "__new__" else l for l in elabels]
        if len(verts) == 0:
            break
    return verts, elabels


def box_polygon(cx, cy, half):
    return np.array(
        [
            [cx - half, cy - half],
            [cx + half, cy - half],
            [cx + half, cy + half],
            [cx - half, cy + half],
        ]
    )


def triangulate_fan(poly):
    """Fan triangulation of a convex polygon from its centroid."""
    p = np.asarray(poly, dtype=float)
    c = polygon_centroid(p)
    return [np.array([c, p[k], p[(k + 1) % len(p)]]) for k in range(len(p))]


def triangle_quad(f, tri):
    """Degree-5 quadrature of f(points) over one triangle; f maps (n,2)->(n,)."""
    tri = np.asarray(tri, dtype=float)
    pts = _TRI_BARY @ tri
    area = abs(polygon_area(tri))
    vals = np.asarray(f(pts), dtype=float)
    return area * float(_TRI_W @ vals)


def polygon_quad(f, poly, rel_tol=1e-3, max_depth=30):
    """Adaptive degree-5 quadrature of f over a convex polygon.

    Fan triangles are compared against their 4-way subdivision; a triangle is
    refined while its disagreement exceeds its share of the global error
    budget rel_tol * |coarse total| (split 4 ways at each level), so
    near-zero regions of a peaked integrand settle immediately.
    """
    tris = triangulate_fan(poly)
    ests = [triangle_quad(f, t) for t in tris]
    budget = rel_tol * max(abs(sum(ests)), 1e-300) / len(tris)
    total = 0.0
    stack = [(t, e, budget, 0) for t, e in zip(tris, ests)]
    while stack:
        tri, coarse, tau, depth = stack.pop()
        a, b, c = tri
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        kids = [
            np.array([a, ab, ca]),
            np.array([ab, b, bc]),
            np.array([ca, bc, c]),
            np.array([ab, bc, ca]),
        ]
        fine_parts = [triangle_quad(f, k) for k in kids]
        fine = sum(fine_parts)
        if not np.isfinite(fine):
            from .errors import QuadratureFailure

            raise QuadratureFailure("non-finite weight value inside cell")
        if depth >= max_depth or abs(fine - coarse) <= tau:
            total += fine
        else:
            stack.extend(
                (k, fk, tau / 4.0, depth + 1) for k, fk in zip(kids, fine_parts)
            )
    return total
