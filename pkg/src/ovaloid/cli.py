"""Command-line entry point: validation, solves, and curated demos.

Every run writes a JSON report whose numeric content is deterministic for a
fixed seed; the wall-clock timestamp is isolated under its own key.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import core, intrinsic_metric as im, io, ma_solver as ma
from . import minkowski_solver as mk, rigidity_lab as rl, shapes
from .errors import OvaloidError, ParseError, SchemaError, UnknownDemo


def _common_flags(parser):
    parser.add_argument("--tol", type=float, default=None, help="tolerance override")
    parser.add_argument("--max-iter", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="report output path")
    parser.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ovaloid",
        description="Convex-geometry toolkit: nets, Monge-Ampere solves, "
                    "Minkowski recovery, rigidity analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    net = sub.add_parser("net", help="intrinsic metric operations")
    netsub = net.add_subparsers(dest="action", required=True)
    for name, extra in (
        ("validate", ()),
        ("curvature", ()),
        ("geodesic", ("--src", "--dst")),
    ):
        np_ = netsub.add_parser(name)
        np_.add_argument("path", help="net JSON or mesh OFF file")
        for flag in extra:
            np_.add_argument(flag, required=True,
                             help="point as POLY:X:Y, or vN for mesh vertex N")
        _common_flags(np_)

    map_ = sub.add_parser("ma", help="generalized Monge-Ampere solver")
    masub = map_.add_subparsers(dest="action", required=True)
    solve = masub.add_parser("solve")
    solve.add_argument("path")
    solve.add_argument("--homotopy", type=int, default=0, metavar="K",
                       help="continuation from uniform masses over K steps")
    _common_flags(solve)

    mink = sub.add_parser("minkowski", help="discrete Minkowski problem")
    mksub = mink.add_subparsers(dest="action", required=True)
    for name in ("solve", "check"):
        sp = mksub.add_parser(name)
        sp.add_argument("path")
        _common_flags(sp)
    rt = mksub.add_parser("roundtrip")
    rt.add_argument("--faces", type=int, default=20)
    _common_flags(rt)

    rig = sub.add_parser("rigidity", help="infinitesimal rigidity lab")
    rigsub = rig.add_subparsers(dest="action", required=True)
    an = rigsub.add_parser("analyze")
    an.add_argument("path", help="closed triangulated surface (OFF)")
    _common_flags(an)
    defo = rigsub.add_parser("defo")
    defosub = defo.add_subparsers(dest="defo_action", required=True)
    for name in ("solve", "check"):
        dp = defosub.add_parser(name)
        dp.add_argument("path", help="grid JSON (rigidity-problem kind)")
        _common_flags(dp)

    demo = sub.add_parser("demo", help="curated end-to-end scenarios")
    demo.add_argument("name")
    _common_flags(demo)

    return parser


# ---------------------------------------------------------------------------
# command implementations; each returns (exit_code, metrics)


def _load_net(path):
    if str(path).endswith(".off"):
        pf = io.parse_problem(path, kind="mesh")
        poly = core.polytope_from_mesh(pf.payload["vertices"], pf.payload["faces"])
        return im.net_from_polytope(poly)
    return io.read_net(path)


def _parse_surface_point(net, text):
    if text.startswith("v"):
        if not net.corner_labels:
            raise SchemaError("point.vertex", "vertex points need a mesh input")
        vid = int(text[1:])
        for (f, c), lab in net.corner_labels.items():
            if lab == vid:
                xy = net.polygons[f][c]
                return im.SurfacePoint(f, (float(xy[0]), float(xy[1])))
        raise SchemaError("point.vertex", f"no corner labelled {vid}")
    parts = text.split(":")
    if len(parts) != 3:
        raise SchemaError("point.format", "expected POLY:X:Y or vN")
    return im.surface_point(net, int(parts[0]), float(parts[1]), float(parts[2]))


def _cmd_net(args):
    net = _load_net(args.path)
    tol = args.tol if args.tol is not None else 1e-9
    if args.action == "validate":
        rep = im.validate_net(net, tol=tol)
        return (0 if rep.ok else 1), rep.as_dict()
    if args.action == "curvature":
        rep = im.vertex_curvatures(net, tol=tol)
        return 0, rep.as_dict()
    src = _parse_surface_point(net, args.src)
    dst = _parse_surface_point(net, args.dst)
    path = im.shortest_path(net, src, dst)
    return 0, {
        "length": path.length,
        "face_sequence": list(path.face_sequence),
        "points": [[sp.polygon, *sp.xy] for sp in path.points],
    }


def _cmd_ma(args):
    problem = io.parse_problem(args.path, kind="ma-problem").payload
    tol = args.tol if args.tol is not None else 1e-10
    max_iter = args.max_iter if args.max_iter is not None else 400
    if args.homotopy:
        uniform = float(problem.masses.mean())

        def family(t):
            return ma.MAProblem(
                domain=problem.domain,
                interior_nodes=problem.interior_nodes,
                masses=(1 - t) * uniform + t * problem.masses,
                boundary_nodes=problem.boundary_nodes,
                boundary_values=problem.boundary_values,
                theta=problem.theta,
                theta_z_dependent=problem.theta_z_dependent,
                mass_bound=problem.mass_bound,
            )

        schedule = ma.HomotopySchedule(
            ts=np.linspace(0.0, 1.0, args.homotopy + 1), problem_at=family
        )
        sols = ma.homotopy_solve(schedule, tol=tol, max_iter=max_iter)
        u = sols[-1]
    else:
        u = ma.solve_ma(problem, tol=tol, max_iter=max_iter)
    return 0, {
        "values": u.values.tolist(),
        "nodes": u.nodes.tolist(),
        "final_residual": u.solve_info["final_residual"],
        "sweeps": u.solve_info["sweeps"],
        "newton_iters": u.solve_info["newton_iters"],
    }


def _cmd_minkowski(args, rng):
    tol = args.tol if args.tol is not None else 1e-9
    if args.action == "roundtrip":
        npts = max(4, (args.faces + 4) // 2)
        src = shapes.random_hull(npts, seed=args.seed).centered()
        problem = mk.MinkowskiProblem(normals=src.normals, target_areas=src.areas)
        rec, rep = mk.solve_minkowski(problem, tol=tol, full_output=True)
        err = float(np.max(np.abs(rec.support_numbers - src.support_numbers)
                           / np.abs(src.support_numbers)))
        metrics = {
            "faces": len(src.faces),
            "support_rel_error": err,
            "iterations": rep["iterations"],
            "final_residual": rep["final_residual"],
            "volume": rep["volume"],
        }
        return (0 if err <= 1e-6 else 1), metrics
    payload = io.parse_problem(args.path, kind="minkowski-problem").payload
    if isinstance(payload, mk.CurvatureSample):
        problem = mk.discretize_curvature(payload)
    else:
        problem = payload
    if args.action == "check":
        defect = mk.check_closing(problem)
        norm = float(np.linalg.norm(defect))
        ok = norm <= 1e-8 * problem.target_areas.sum()
        return (0 if ok else 1), {
            "closing_defect": [float(v) for v in defect],
            "norm": norm,
            "metadata": problem.metadata,
        }
    max_iter = args.max_iter if args.max_iter is not None else 100
    body, rep = mk.solve_minkowski(problem, tol=tol, max_iter=max_iter,
                                   full_output=True)
    out = str(args.path) + ".solution.off"
    io.write_off(out, body.vertices, body.faces)
    return 0, {
        "support_numbers": body.support_numbers.tolist(),
        "volume": rep["volume"],
        "final_residual": rep["final_residual"],
        "iterations": rep["iterations"],
        "mesh": out,
    }


def _cmd_rigidity(args):
    tol = args.tol if args.tol is not None else 1e-10
    if args.action == "analyze":
        pf = io.parse_problem(args.path, kind="mesh")
        surf = rl.TriangulatedSurface(
            vertices=pf.payload["vertices"],
            triangles=np.array([list(f) for f in pf.payload["faces"]]),
        )
        rep = rl.bending_space(surf, tol=tol)
        return (0 if rep.nontrivial_dim == 0 else 1), rep.as_dict()
    patch = io.parse_problem(args.path, kind="rigidity-problem").payload
    if not isinstance(patch, rl.GridPatch):
        raise SchemaError("rigidity.grid", "defo commands need a grid payload")
    if args.defo_action == "solve":
        sol = rl.solve_defo(patch.z, patch.h, patch.zeta)
        return 0, {
            "zeta": sol.zeta.tolist(),
            "residual": rl.defo_residual(sol),
        }
    rep = rl.main_lemma_check(patch, tol=args.tol if args.tol is not None else 1e-8)
    return (0 if rep.ok else 1), rep.as_dict()


# ---------------------------------------------------------------------------
# demos


def _demo_egregium(seed, tol):
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_total = 0.0
    for _ in range(100):
        n = int(rng.integers(6, 51))
        poly = shapes.random_hull(n, seed=int(rng.integers(0, 2**31)))
        net = im.net_from_polytope(poly)
        rep = im.vertex_curvatures(net)
        for lab, w in zip(rep.labels, rep.curvatures):
            worst = max(worst, abs(w - core.normal_cone_area(poly, lab)))
        worst_total = max(worst_total, abs(rep.total - 4 * np.pi))
    ok = worst <= tol and worst_total <= tol
    return ok, {"hulls": 100, "max_pointwise_gap": worst, "max_total_gap": worst_total}


def _demo_cube_geodesic(seed, tol):
    net = im.net_from_polytope(shapes.cube())
    inv = {}
    for (f, c), vid in net.corner_labels.items():
        inv.setdefault(vid, (f, c))
    def corner(vid):
        f, c = inv[vid]
        xy = net.polygons[f][c]
        return im.SurfacePoint(f, (float(xy[0]), float(xy[1])))
    d = im.shortest_path(net, corner(0), corner(7)).length
    gap = abs(d - np.sqrt(5.0))
    return gap <= tol, {"corner_distance": d, "expected": float(np.sqrt(5.0)),
                        "gap": gap}


def _demo_liouville(seed, tol):
    rows = ma.liouville_probe([1.0, 4.0], f=1.0, spacing=0.5, bump_height=1.0)
    ok = rows[1]["deviation"] < rows[0]["deviation"]
    return ok, {"rows": rows}


def _demo_minkowski_roundtrip(seed, tol):
    worst = 0.0
    for k in range(5):
        src = shapes.random_hull(16, seed=seed * 100 + k).centered()
        problem = mk.MinkowskiProblem(normals=src.normals, target_areas=src.areas)
        rec = mk.solve_minkowski(problem, tol=1e-9)
        worst = max(worst, float(np.max(
            np.abs(rec.support_numbers - src.support_numbers)
            / np.abs(src.support_numbers))))
    return worst <= 1e-6, {"bodies": 5, "max_support_rel_error": worst}


DEMOS = {
    "egregium": _demo_egregium,
    "cube-geodesic": _demo_cube_geodesic,
    "liouville": _demo_liouville,
    "minkowski-roundtrip": _demo_minkowski_roundtrip,
}


def _cmd_demo(args):
    if args.name not in DEMOS:
        raise UnknownDemo(
            f"unknown demo {args.name!r}; known: {', '.join(sorted(DEMOS))}"
        )
    tol = args.tol if args.tol is not None else 1e-9
    ok, metrics = DEMOS[args.name](args.seed, tol)
    return (0 if ok else 1), metrics


# ---------------------------------------------------------------------------
# driver


def _emit(report, args):
    if args.format == "csv":
        lines = ["key,value"]
        def flat(prefix, obj):
            if isinstance(obj, dict):
                for k, v in sorted(obj.items()):
                    flat(f"{prefix}{k}/", v)
            elif isinstance(obj, (list, tuple)):
                for k, v in enumerate(obj):
                    flat(f"{prefix}{k}/", v)
            else:
                lines.append(f"{prefix.rstrip('/')},{obj}")
        flat("", report["metrics"])
        text = "\n".join(lines) + "\n"
    else:
        text = io.canonical_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    rng = np.random.default_rng(args.seed)
    try:
        if args.command == "net":
            code, metrics = _cmd_net(args)
        elif args.command == "ma":
            code, metrics = _cmd_ma(args)
        elif args.command == "minkowski":
            code, metrics = _cmd_minkowski(args, rng)
        elif args.command == "rigidity":
            code, metrics = _cmd_rigidity(args)
        else:
            code, metrics = _cmd_demo(args)
    except FileNotFoundError as exc:
        print(f"ovaloid: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (ParseError, SchemaError, UnknownDemo) as exc:
        print(f"ovaloid: {exc}", file=sys.stderr)
        return 2
    except OvaloidError as exc:
        print(f"ovaloid: {exc}", file=sys.stderr)
        return 1

    report = {
        "command": " ".join(argv),
        "config": {
            "seed": args.seed,
            "tol": args.tol,
            "max_iter": getattr(args, "max_iter", None),
        },
        "metrics": metrics,
        "exit_code": code,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    _emit(report, args)
    return code


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
