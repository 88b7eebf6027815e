"""File formats: OFF meshes, JSON problem files, JSON reports.

Problem files are UTF-8 JSON with a top-level "kind" discriminator; all
reals are serialized with repr precision (17 significant digits).  The OFF
writer emits exactly "OFF\\n<nv> <nf> 0\\n" as its header.
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

from .errors import ParseError, SchemaError
from .ma_solver import MAProblem
from .minkowski_solver import CurvatureSample, MinkowskiProblem
from .rigidity_lab import GridPatch, TriangulatedSurface

PROBLEM_KINDS = ("mesh", "ma-problem", "minkowski-problem", "rigidity-problem")


@dataclasses.dataclass
class ProblemFile:
    kind: str
    payload: object
    path: str | None = None


# ---------------------------------------------------------------------------
# OFF meshes


def read_off(path):
    """Vertices and face index cycles from an ASCII OFF file."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    tokens = []
    for ln, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            tokens.append((ln, body))
    if not tokens:
        raise ParseError("empty OFF file", path=path)
    ln0, header = tokens[0]
    if header != "OFF":
        raise ParseError("missing OFF header", path=path, line=ln0)
    if len(tokens) < 2:
        raise ParseError("missing element counts", path=path, line=ln0)
    ln1, counts = tokens[1]
    parts = counts.split()
    if len(parts) != 3:
        raise ParseError("element count line needs 3 integers", path=path, line=ln1)
    try:
        nv, nf, _ = (int(p) for p in parts)
    except ValueError as exc:
        raise ParseError(f"bad element counts: {exc}", path=path, line=ln1) from exc
    body = tokens[2:]
    if len(body) < nv + nf:
        raise ParseError(
            f"expected {nv} vertex and {nf} face lines, found {len(body)}",
            path=path, line=ln1,
        )
    verts = np.empty((nv, 3))
    for k in range(nv):
        ln, text = body[k]
        parts = text.split()
        if len(parts) != 3:
            raise ParseError("vertex line needs 3 coordinates", path=path, line=ln)
        try:
            verts[k] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"bad coordinate: {exc}", path=path, line=ln) from exc
    faces = []
    for k in range(nf):
        ln, text = body[nv + k]
        parts = text.split()
        try:
            cnt = int(parts[0])
            idx = [int(p) for p in parts[1 : 1 + cnt]]
        except (ValueError, IndexError) as exc:
            raise ParseError(f"bad face line: {exc}", path=path, line=ln) from exc
        if len(idx) != cnt:
            raise ParseError(
                f"face announces {cnt} indices but carries {len(idx)}",
                path=path, line=ln,
            )
        if any(i < 0 or i >= nv for i in idx):
            raise ParseError("face index out of range", path=path, line=ln)
        faces.append(tuple(idx))
    return verts, faces


def write_off(path, vertices, faces):
    vertices = np.asarray(vertices, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"OFF\n{len(vertices)} {len(faces)} 0\n")
        for v in vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for cyc in faces:
            fh.write(" ".join([str(len(cyc))] + [str(int(i)) for i in cyc]) + "\n")


# ---------------------------------------------------------------------------
# theta expressions

_THETA_NAMES = {
    "exp": np.exp, "sqrt": np.sqrt, "log": np.log,
    "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "abs": np.abs, "minimum": np.minimum, "maximum": np.maximum,
    "hypot": np.hypot, "pi": math.pi, "e": math.e,
}


def compile_theta(expression):
    """Compile a weight expression in variables p1, p2, z, x1, x2."""
    code = compile(expression, "<theta>", "eval")
    for name in code.co_names:
        if name not in _THETA_NAMES and name not in ("p1", "p2", "z", "x1", "x2"):
            raise SchemaError("theta.names", f"unknown name {name!r} in theta")

    def theta(p1, p2, z, x1, x2):
        env = dict(_THETA_NAMES)
        env.update({"p1": p1, "p2": p2, "z": z, "x1": x1, "x2": x2})
        return eval(code, {"__builtins__": {}}, env)

    return theta


# ---------------------------------------------------------------------------
# problem files


def _need(data, field, constraint):
    if field not in data:
        raise SchemaError(constraint, f"missing field {field!r}")
    return data[field]


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc


def parse_problem(path, kind=None):
    """Parse a problem file; ``kind`` checks/selects the expected schema."""
    if str(path).endswith(".off") or kind == "mesh":
        verts, faces = read_off(path)
        return ProblemFile(kind="mesh", payload={"vertices": verts, "faces": faces},
                           path=str(path))
    data = _load_json(path)
    file_kind = data.get("kind")
    if file_kind is None:
        raise SchemaError("kind.present", "problem JSON needs a 'kind' field")
    if kind is not None and file_kind != kind:
        raise SchemaError("kind.match", f"expected {kind!r}, file says {file_kind!r}")
    if file_kind == "ma-problem":
        payload = _parse_ma(data)
    elif file_kind == "minkowski-problem":
        payload = _parse_minkowski(data)
    elif file_kind == "rigidity-problem":
        payload = _parse_rigidity(data)
    else:
        raise SchemaError("kind.known", f"unknown kind {file_kind!r}")
    return ProblemFile(kind=file_kind, payload=payload, path=str(path))


def _parse_ma(data):
    domain = np.asarray(_need(data, "domain", "ma.domain"), dtype=float)
    nodes = np.asarray(_need(data, "nodes", "ma.nodes"), dtype=float)
    masses = np.asarray(_need(data, "masses", "ma.masses"), dtype=float)
    boundary = np.asarray(_need(data, "boundary", "ma.boundary"), dtype=float)
    if boundary.ndim != 2 or boundary.shape[1] != 3:
        raise SchemaError("ma.boundary.shape", "boundary rows must be [x, y, value]")
    theta_src = data.get("theta")
    theta = compile_theta(theta_src) if theta_src else None
    problem = MAProblem(
        domain=domain,
        interior_nodes=nodes,
        masses=masses,
        boundary_nodes=boundary[:, :2],
        boundary_values=boundary[:, 2],
        theta=theta,
        theta_z_dependent=bool(data.get("theta_z_dependent", False)),
        mass_bound=data.get("mass_bound"),
    )
    try:
        problem.validate()
    except ValueError as exc:
        raise SchemaError("ma.valid", str(exc)) from exc
    return problem


def _parse_minkowski(data):
    if "curvature" in data:
        cur = data["curvature"]
        sample = CurvatureSample(
            centers=np.asarray(_need(cur, "centers", "minkowski.centers"), float),
            cell_areas=np.asarray(_need(cur, "cell_areas", "minkowski.cell_areas"), float),
            curvature=np.asarray(_need(cur, "K", "minkowski.K"), float),
        )
        try:
            sample.validate()
        except ValueError as exc:
            raise SchemaError("minkowski.curvature.valid", str(exc)) from exc
        return sample
    problem = MinkowskiProblem(
        normals=np.asarray(_need(data, "normals", "minkowski.normals"), float),
        target_areas=np.asarray(_need(data, "areas", "minkowski.areas"), float),
    )
    try:
        problem.validate()
    except ValueError as exc:
        raise SchemaError("minkowski.valid", str(exc)) from exc
    return problem


def _parse_rigidity(data):
    if "grid" in data:
        grid = data["grid"]
        z = np.asarray(_need(grid, "z", "rigidity.grid.z"), dtype=float)
        zeta = grid.get("zeta")
        zeta = np.zeros_like(z) if zeta is None else np.asarray(zeta, dtype=float)
        try:
            return GridPatch(h=float(_need(grid, "h", "rigidity.grid.h")),
                             z=z, zeta=zeta)
        except ValueError as exc:
            raise SchemaError("rigidity.grid.valid", str(exc)) from exc
    surf = _need(data, "surface", "rigidity.surface")
    surface = TriangulatedSurface(
        vertices=np.asarray(_need(surf, "vertices", "rigidity.vertices"), float),
        triangles=np.asarray(_need(surf, "triangles", "rigidity.triangles"), int),
        with_boundary=bool(surf.get("with_boundary", False)),
    )
    try:
        surface.validate()
    except ValueError as exc:
        raise SchemaError("rigidity.surface.valid", str(exc)) from exc
    return surface


# ---------------------------------------------------------------------------
# nets


def read_net(path):
    """MetricNet from JSON {"polygons": [...], "identifications": [...]}."""
    from .intrinsic_metric import MetricNet

    data = _load_json(path)
    polys = _need(data, "polygons", "net.polygons")
    idents = _need(data, "identifications", "net.identifications")
    try:
        return MetricNet(
            polygons=tuple(np.asarray(p, dtype=float) for p in polys),
            identifications=tuple(
                ((int(a), int(ea)), (int(b), int(eb)))
                for (a, ea), (b, eb) in idents
            ),
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError("net.valid", str(exc)) from exc


def write_net(path, net):
    data = {
        "polygons": [p.tolist() for p in net.polygons],
        "identifications": [
            [[a, ea], [b, eb]] for (a, ea), (b, eb) in net.identifications
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# reports


def canonical_json(obj):
    """Canonical serialized form used for round-trip comparisons."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_report(path, report):
    """Write a report dict as canonical JSON (sorted keys, repr floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(report))


def read_report(path):
    return _load_json(path)
