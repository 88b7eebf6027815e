"""Canonical bodies and random generators used by demos and tests."""

import numpy as np

from .core import ConvexPolytope, convex_hull

PHI = (1.0 + np.sqrt(5.0)) / 2.0


def cube(edge=1.0):
    half = edge / 2.0
    corners = np.array(
        [[sx * half, sy * half, sz * half]
         for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )
    return convex_hull(corners)


def cube_corners(edge=1.0):
    half = edge / 2.0
    return np.array(
        [[sx * half, sy * half, sz * half]
         for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )


def regular_tetrahedron(edge=1.0):
    pts = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    pts *= edge / np.sqrt(8.0)  # raw edge is 2*sqrt(2)
    return convex_hull(pts)


def octahedron(circumradius=1.0):
    pts = circumradius * np.vstack([np.eye(3), -np.eye(3)])
    return convex_hull(pts)


def icosahedron_vertices(circumradius=1.0):
    raw = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            raw.append([0.0, s1 * 1.0, s2 * PHI])
            raw.append([s1 * 1.0, s2 * PHI, 0.0])
            raw.append([s2 * PHI, 0.0, s1 * 1.0])
    pts = np.array(raw)
    return circumradius * pts / np.linalg.norm(pts[0])


def icosahedron(circumradius=1.0):
    return convex_hull(icosahedron_vertices(circumradius))


def random_sphere_points(n, seed=None, radius=1.0):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return radius * pts


def random_hull(n, seed=None, radius=1.0):
    """Convex hull of n random points on a sphere (generic simplicial body)."""
    return convex_hull(random_sphere_points(n, seed=seed, radius=radius))


def oriented_triangles(poly: ConvexPolytope):
    """Fan-triangulate every face, preserving the outward orientation."""
    tris = []
    for cyc in poly.faces:
        for k in range(1, len(cyc) - 1):
            tris.append((cyc[0], cyc[k], cyc[k + 1]))
    return np.array(tris, dtype=int)


def cube_with_face_centers(edge=1.0):
    """Cube boundary with each square face triangulated through its centre.

    The six added centre vertices are flat (their incident triangles are
    coplanar), so the triangulated surface carries one normal flex per centre.
    Returns (vertices, triangles).
    """
    p = cube(edge)
    verts = [v for v in p.vertices]
    tris = []
    for f, cyc in enumerate(p.faces):
        c = p.vertices[list(cyc)].mean(axis=0)
        ci = len(verts)
        verts.append(c)
        for k in range(len(cyc)):
            tris.append((ci, cyc[k], cyc[(k + 1) % len(cyc)]))
    return np.array(verts), np.array(tris, dtype=int)


def doubled_polygon(poly):
    """Net of the flat body obtained by gluing two copies of a polygon.

    The second copy is reflected and re-oriented so both are CCW; edge k of
    the first copy is identified with edge n-2-k (mod n) of the second.
    Returns (polygons, identifications) ready for a MetricNet.
    """
    p = np.asarray(poly, dtype=float)
    n = len(p)
    q = (p * np.array([1.0, -1.0]))[::-1].copy()
    idents = tuple(((0, k), (1, (n - 2 - k) % n)) for k in range(n))
    return (p, q), idents


def fibonacci_sphere(n, seed=None):
    """Roughly even sphere covering; optional random rotation for variety."""
    k = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * k / n)
    theta = np.pi * (1.0 + np.sqrt(5.0)) * k
    pts = np.stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)],
        axis=1,
    )
    if seed is not None:
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        pts = pts @ q.T
    return pts


def subdivided_icosahedron_vertices(level=2):
    """Vertices of an icosahedron subdivided ``level`` times, on the unit sphere."""
    verts = [tuple(v) for v in icosahedron_vertices()]
    hull = convex_hull(np.array(verts))
    tris = [tuple(t) for t in oriented_triangles(hull)]
    for _ in range(level):
        index = {v: i for i, v in enumerate(verts)}
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = (np.array(verts[a]) + np.array(verts[b])) / 2.0
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_tris = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        tris = new_tris
    return np.array(verts)
