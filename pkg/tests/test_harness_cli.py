import contextlib
import io
import json
import os

import numpy as np
import pytest

from mediancert.coarse_median import CoarseMedianInstance, coarsened_grid, from_median_graph
from mediancert.harness_cli import (
    GRAPH_KINDS,
    generate,
    is_median_graph,
    load_input,
    main,
    parse_graph_text,
    parse_instance_text,
    write_graph_text,
    write_instance_text,
)
from mediancert.median_core import MedianGraph
from mediancert.propa_engine import CSV_HEADER


def run_cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


@pytest.fixture()
def grid3_file(tmp_path, grid3):
    p = tmp_path / "grid3.txt"
    p.write_text(write_graph_text(grid3))
    return str(p)


# -- generators ----------------------------------------------------------


def test_generator_counts():
    t = generate("tree", [2, 3])
    assert (t.n, len(t.edges)) == (15, 14)
    s = generate("staircase", [4])
    assert (s.n, len(s.edges)) == (13, 16)
    q = generate("hypercube", [4])
    assert (q.n, len(q.edges)) == (16, 32)
    g = generate("grid", [3, 3])
    assert (g.n, len(g.edges)) == (16, 24)


def test_grid_vertex_layout():
    g = generate("grid", [2, 2])
    # ids run row-major: i*rows + j
    assert g.distance(0, 1) == 1
    assert g.distance(0, 3) == 1
    assert g.distance(0, 8) == 4


def test_generator_param_validation():
    with pytest.raises(ValueError):
        generate("grid", [2])
    with pytest.raises(ValueError):
        generate("hypercube", [2, 3])
    with pytest.raises(ValueError):
        generate("widget", [1])
    with pytest.raises(ValueError):
        generate("tree", [0, 3])


def test_closure_generator_is_median():
    for seed in (0, 1, 2):
        g = generate("median-closure", [4, 5], seed=seed)
        ok, witness = is_median_graph(g)
        assert ok and witness is None
    a = generate("median-closure", [4, 5], seed=1)
    b = generate("median-closure", [4, 5], seed=1)
    assert a.n == b.n and a.edges == b.edges


def test_is_median_graph_witnesses(c6, k23):
    ok, report = is_median_graph(c6)
    assert not ok
    assert report["error"] == "unique-median"
    assert report["triple"] == (0, 2, 4) and report["candidates"] == []
    ok, report = is_median_graph(k23)
    assert not ok
    assert report["triple"] == (2, 3, 4) and report["candidates"] == [0, 1]


# -- text formats --------------------------------------------------------


def test_graph_text_roundtrip(grid4):
    text = write_graph_text(grid4)
    back = parse_graph_text(text)
    assert back.n == grid4.n and back.edges == grid4.edges
    assert write_graph_text(back) == text


def test_graph_text_parsing_details():
    g = parse_graph_text("# a square\nvertices 4\n\ne 0 1\ne 1 3  # top\ne 0 2\ne 2 3\n")
    assert g.n == 4 and len(g.edges) == 4
    with pytest.raises(ValueError, match="duplicate"):
        parse_graph_text("vertices 2\ne 0 1\ne 1 0\n")
    with pytest.raises(ValueError, match="header"):
        parse_graph_text("e 0 1\n")
    with pytest.raises(ValueError, match="cannot parse"):
        parse_graph_text("vertices 2\nedge 0 1\n")


def test_instance_text_roundtrip():
    inst = coarsened_grid(1, 1)
    text = write_instance_text(inst)
    back = parse_instance_text(text)
    assert back.n == inst.n and back.d == inst.d
    assert np.array_equal(back.mu, inst.mu)
    for i in range(inst.n):
        for j in range(inst.n):
            assert back.rho(i, j) == inst.rho(i, j)
    assert write_instance_text(back) == text


def test_instance_from_graph_sections(grid3):
    inst = parse_instance_text("points 9\n", graph=grid3)
    want = from_median_graph(grid3)
    assert np.array_equal(inst.mu, want.mu)
    assert inst.d == want.d
    with pytest.raises(ValueError, match="point counts"):
        parse_instance_text("points 8\n", graph=grid3)
    with pytest.raises(ValueError, match="no metric"):
        parse_instance_text("points 3\n")
    with pytest.raises(ValueError, match="every triple"):
        parse_instance_text(
            "points 2\nmetric explicit\nd 0 1 1\nmu explicit\nm 0 0 0 0\n"
        )
    with pytest.raises(ValueError, match="missing distance"):
        parse_instance_text(
            "points 3\nmetric explicit\nd 0 1 1\nd 0 2 1\n", graph=None
        )


def test_load_input_dispatch(tmp_path, grid3):
    gp = tmp_path / "g.txt"
    gp.write_text(write_graph_text(grid3))
    assert isinstance(load_input(str(gp)), MedianGraph)
    ip = tmp_path / "i.txt"
    ip.write_text(write_instance_text(coarsened_grid(1, 1)))
    assert isinstance(load_input(str(ip)), CoarseMedianInstance)
    bad = tmp_path / "bad.txt"
    bad.write_text("widgets 3\n")
    with pytest.raises(ValueError):
        load_input(str(bad))
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(ValueError):
        load_input(str(empty))


# -- CLI end to end ------------------------------------------------------


def test_cli_gen_matches_library(tmp_path):
    out = tmp_path / "g.txt"
    code, _ = run_cli(["gen", "grid", "2", "2", "--output", str(out)])
    assert code == 0
    assert out.read_text() == write_graph_text(generate("grid", [2, 2]))
    code, _ = run_cli(["gen", "coarse-grid", "1", "1", "--output", str(out)])
    assert code == 0
    assert isinstance(load_input(str(out)), CoarseMedianInstance)


def test_cli_gen_bad_params():
    code, out = run_cli(["gen", "grid", "2"])
    assert code == 1
    assert json.loads(out)["error"] == "invalid-input"


def test_cli_validate(tmp_path, grid3_file, c6):
    code, out = run_cli(["validate", "--input", grid3_file])
    assert code == 0
    payload = json.loads(out)
    assert payload["median"] is True
    assert payload["vertices"] == 9 and payload["edges"] == 12

    bad = tmp_path / "c6.txt"
    bad.write_text(write_graph_text(c6))
    code, out = run_cli(["validate", "--input", str(bad)])
    assert code == 1
    payload = json.loads(out)
    assert payload["median"] is False
    assert payload["witness"]["triple"] == [0, 2, 4]

    inst = tmp_path / "inst.txt"
    inst.write_text(write_instance_text(coarsened_grid(1, 1)))
    code, out = run_cli(["validate", "--input", str(inst)])
    assert code == 0
    payload = json.loads(out)
    assert payload["kind"] == "instance"
    assert payload["m1_defect"] == "0/1" and payload["m2_defect"] == "0/1"


def test_cli_hyperplanes_and_rank(grid3_file, tmp_path, capsys):
    code, out = run_cli(["hyperplanes", "--input", grid3_file])
    assert code == 0
    payload = json.loads(out)
    assert payload["count"] == 4
    assert all(w["minus"] + w["plus"] == 9 for w in payload["walls"])

    rank_out = tmp_path / "rank.json"
    code = main(["rank", "--input", grid3_file, "--output", str(rank_out)])
    assert code == 0
    assert capsys.readouterr().out == "2\n"
    assert json.loads(rank_out.read_text()) == {"rank": 2}


def test_cli_ncp(grid3_file):
    code, out = run_cli(
        ["ncp", "--input", grid3_file, "--from", "0", "--to", "8"]
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["vertices"] == [0, 4, 8]
    assert payload["steps"] == [[0, 1], [2, 3]]
    assert payload["length"] == 2 and payload["distance"] == 4


def test_cli_propa_files(tmp_path, grid6):
    gpath = tmp_path / "g.txt"
    gpath.write_text(write_graph_text(grid6))
    base = tmp_path / "cert"
    argv = [
        "propa", "--input", str(gpath), "--n", "2", "--m", "1,2",
        "--output", str(base),
    ]
    assert run_cli(argv)[0] == 0
    blob = json.loads((tmp_path / "cert.json").read_text())
    assert blob["provider"] == "cat0" and blob["sample_size"] == 10
    (cert,) = blob["certificates"]
    assert cert["n"] == 2 and cert["p_n"] == 1
    assert [r["m"] for r in cert["rows"]] == [1, 2]
    assert all(r["sup_variation"] == "0/1" for r in cert["rows"])

    lines = (tmp_path / "cert.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3

    # no stray temp files from the atomic writes
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "cert.csv", "cert.json", "g.txt",
    ]


def test_cli_propa_deterministic(tmp_path, grid6, monkeypatch):
    gpath = tmp_path / "g.txt"
    gpath.write_text(write_graph_text(grid6))

    def run_bytes(tag, threads, provider, n_spec):
        monkeypatch.setenv("MEDIANCERT_THREADS", threads)
        argv = [
            "propa", "--input", str(gpath), "--n", n_spec, "--m", "1",
            "--provider", provider, "--output", str(tmp_path / tag),
        ]
        assert run_cli(argv)[0] == 0
        return (
            (tmp_path / (tag + ".json")).read_bytes()
            + (tmp_path / (tag + ".csv")).read_bytes()
        )

    a = run_bytes("a", "1", "cat0", "2,4")
    b = run_bytes("b", "1", "cat0", "2,4")
    c = run_bytes("c", "3", "cat0", "2,4")
    assert a == b == c
    x = run_bytes("x", "1", "coarse", "2")
    y = run_bytes("y", "3", "coarse", "2")
    assert x == y


def test_cli_coarse_check(tmp_path):
    ipath = tmp_path / "inst.txt"
    ipath.write_text(write_instance_text(coarsened_grid(2, 2)))
    code, out = run_cli(
        ["coarse-check", "--input", str(ipath), "--sample", "60"]
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["ok"] is True
    assert payload["K"] == "1/1" and payload["gamma"] == "2/1"
    assert payload["sweeps"]["interval_absorption"]["violations"] == 0
    assert payload["sweeps"]["projection_bound"]["violations"] == 0


def test_cli_deep_point(grid3_file):
    code, out = run_cli(
        ["deep-point", "--input", grid3_file, "--from", "0", "--to", "8"]
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["deep_point"] == 0 and payload["r"] == 1
    assert payload["l3"] == "10/1"

    code, out = run_cli(
        ["deep-point", "--input", grid3_file, "--from", "0", "--to", "8", "--r", "0"]
    )
    assert code == 1
    assert json.loads(out)["deep_point"] is None


def test_cli_invalid_inputs(tmp_path):
    code, out = run_cli(["validate", "--input", str(tmp_path / "missing.txt")])
    assert code == 1
    assert json.loads(out)["error"] == "invalid-input"

    garbled = tmp_path / "garbled.txt"
    garbled.write_text("vertices 3\ne 0 1\ne 0 9\n")
    code, out = run_cli(["ncp", "--input", str(garbled), "--from", "0", "--to", "1"])
    assert code == 1
    assert json.loads(out)["error"] == "invalid-input"

    inst = tmp_path / "inst.txt"
    inst.write_text(write_instance_text(coarsened_grid(1, 1)))
    code, out = run_cli(["rank", "--input", str(inst)])
    assert code == 1
    assert json.loads(out)["error"] == "invalid-input"


def test_cli_error_report_names_rule(tmp_path, k23):
    bad = tmp_path / "k23.txt"
    bad.write_text(write_graph_text(k23))
    code, out = run_cli(["hyperplanes", "--input", str(bad)])
    assert code == 1
    payload = json.loads(out)
    assert payload["error"] == "wall-structure"


def test_graph_kinds_constant():
    assert set(GRAPH_KINDS) == {
        "hypercube", "grid", "tree", "staircase", "median-closure",
    }
