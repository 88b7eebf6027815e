import json

import numpy as np

from ovaloid import cli, io, shapes


def run_cli(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr().out
    return code, out


def test_net_curvature_cube(tmp_path, capsys, cube):
    path = tmp_path / "cube.off"
    io.write_off(path, cube.vertices, cube.faces)
    code, out = run_cli(["net", "curvature", str(path)], capsys)
    assert code == 0
    report = json.loads(out)
    curv = report["metrics"]["curvatures"]
    np.testing.assert_allclose(curv, np.pi / 2, atol=1e-12)
    assert abs(report["metrics"]["total"] - 4 * np.pi) < 1e-12


def test_net_validate_failure_exit_code(tmp_path, capsys, cube_net):
    polys = list(cube_net.polygons)
    polys[0] = polys[0] * 1.01
    from ovaloid import intrinsic_metric as im

    bad = im.MetricNet(polygons=tuple(polys),
                       identifications=cube_net.identifications)
    path = tmp_path / "net.json"
    io.write_net(path, bad)
    code, out = run_cli(["net", "validate", str(path)], capsys)
    assert code == 1
    assert json.loads(out)["metrics"]["edge_mismatches"]


def test_net_geodesic_vertices(tmp_path, capsys, cube):
    path = tmp_path / "cube.off"
    io.write_off(path, cube.vertices, cube.faces)
    i, j = 0, int(np.argmax(np.linalg.norm(cube.vertices - cube.vertices[0],
                                           axis=1)))
    code, out = run_cli(
        ["net", "geodesic", str(path), "--src", f"v{i}", "--dst", f"v{j}"],
        capsys,
    )
    assert code == 0
    assert abs(json.loads(out)["metrics"]["length"] - np.sqrt(5)) < 1e-9


def test_missing_file_is_usage_error(capsys):
    code = cli.run(["ma", "solve", "missing.json"])
    err = capsys.readouterr().err
    assert code == 2
    assert "not found" in err


def test_unknown_demo_is_usage_error(capsys):
    assert cli.run(["demo", "nope"]) == 2


def test_bad_subcommand_exits_2(capsys):
    assert cli.run(["frobnicate"]) == 2


def test_ma_solve_cli(tmp_path, capsys):
    data = {
        "kind": "ma-problem",
        "domain": [[0, 0], [2, 0], [2, 2], [0, 2]],
        "nodes": [[1.0, 1.0], [0.8, 1.2]],
        "masses": [0.7, 0.5],
        "boundary": [[0, 0, 0.0], [2, 0, 0.0], [2, 2, 0.0], [0, 2, 0.0],
                      [1, 0, 0.0], [2, 1, 0.0], [1, 2, 0.0], [0, 1, 0.0]],
        "theta": None,
    }
    path = tmp_path / "prob.json"
    path.write_text(json.dumps(data))
    code, out = run_cli(["ma", "solve", str(path)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["metrics"]["final_residual"] <= 1e-9
    # homotopy route reaches the same values
    code2, out2 = run_cli(["ma", "solve", str(path), "--homotopy", "4"], capsys)
    v1 = np.array(json.loads(out2)["metrics"]["values"])
    v0 = np.array(rep["metrics"]["values"])
    assert np.abs(v1 - v0).max() < 1e-7


def test_minkowski_roundtrip_cli(capsys):
    code, out = run_cli(
        ["minkowski", "roundtrip", "--faces", "20", "--seed", "7"], capsys
    )
    assert code == 0
    assert json.loads(out)["metrics"]["support_rel_error"] <= 1e-6


def test_minkowski_solve_and_check_cli(tmp_path, capsys, cube):
    path = tmp_path / "mk.json"
    path.write_text(json.dumps({
        "kind": "minkowski-problem",
        "normals": cube.normals.tolist(),
        "areas": cube.areas.tolist(),
    }))
    code, out = run_cli(["minkowski", "check", str(path)], capsys)
    assert code == 0
    code, out = run_cli(["minkowski", "solve", str(path)], capsys)
    assert code == 0
    rep = json.loads(out)
    np.testing.assert_allclose(rep["metrics"]["support_numbers"], 0.5,
                               atol=1e-9)
    # the solution mesh attachment exists and parses back to the cube
    verts, faces = io.read_off(rep["metrics"]["mesh"])
    assert len(verts) == 8 and len(faces) == 6


def test_rigidity_cli(tmp_path, capsys):
    ico = shapes.icosahedron()
    path = tmp_path / "ico.off"
    io.write_off(path, ico.vertices, shapes.oriented_triangles(ico))
    code, out = run_cli(["rigidity", "analyze", str(path)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["metrics"]["kernel_dim"] == 6
    assert rep["metrics"]["nontrivial_dim"] == 0

    n = 9
    xs = np.linspace(0, 1, n)
    X, Y = np.meshgrid(xs, xs)
    gpath = tmp_path / "grid.json"
    gpath.write_text(json.dumps({
        "kind": "rigidity-problem",
        "grid": {"h": float(xs[1] - xs[0]),
                 "z": (0.5 * (X**2 + Y**2)).tolist(),
                 "zeta": (X**2 - Y**2).tolist()},
    }))
    code, out = run_cli(["rigidity", "defo", "solve", str(gpath)], capsys)
    assert code == 0
    assert json.loads(out)["metrics"]["residual"] < 1e-10
    code, out = run_cli(["rigidity", "defo", "check", str(gpath)], capsys)
    assert code == 0
    assert json.loads(out)["metrics"]["ok"]


def test_determinism_modulo_timestamp(tmp_path, capsys):
    argv = ["minkowski", "roundtrip", "--faces", "16", "--seed", "3"]
    _, out1 = run_cli(argv, capsys)
    _, out2 = run_cli(argv, capsys)
    r1, r2 = json.loads(out1), json.loads(out2)
    r1.pop("timestamp")
    r2.pop("timestamp")
    assert io.canonical_json(r1) == io.canonical_json(r2)


def test_csv_format(tmp_path, capsys):
    code, out = run_cli(
        ["minkowski", "roundtrip", "--faces", "16", "--seed", "3",
         "--format", "csv"],
        capsys,
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "key,value"
    assert any(line.startswith("support_rel_error,") for line in lines)


def test_report_written_to_file(tmp_path, capsys):
    out_path = tmp_path / "rep.json"
    code = cli.run(["demo", "cube-geodesic", "--out", str(out_path)])
    assert code == 0
    rep = json.loads(out_path.read_text())
    assert rep["metrics"]["gap"] < 1e-9


def test_demo_registry(capsys):
    code, out = run_cli(["demo", "minkowski-roundtrip", "--seed", "2"], capsys)
    assert code == 0
    assert json.loads(out)["metrics"]["max_support_rel_error"] <= 1e-6
