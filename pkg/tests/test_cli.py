import json
import subprocess
import sys

import pytest

from pdbinopt.cli import main
from pdbinopt.io import format_dimacs_cnf, format_gset, gnp_graph, random_kcnf, read_gset
from pdbinopt.problems import WeightedGraph


@pytest.fixture
def edge_file(tmp_path):
    path = tmp_path / "single_edge.txt"
    path.write_text("2 1\n1 2 1\n")
    return path


def last_line(capsys):
    return capsys.readouterr().out.strip().splitlines()[-1]


def test_solve_single_edge(edge_file, capsys):
    assert main(["solve", "--problem", "maxcut", "--input", str(edge_file), "--batch", "4"]) == 0
    assert last_line(capsys).startswith("obj=1 time=")


def test_solve_empty_mis(tmp_path, capsys):
    path = tmp_path / "empty.txt"
    path.write_text("3 0\n")
    assert main(["solve", "--problem", "mis", "--input", str(path)]) == 0
    line = last_line(capsys)
    assert line.startswith("obj=3 ") and line.endswith("feasible=true")


def test_solve_maxksat_and_outputs(tmp_path, capsys):
    cnf = tmp_path / "f.cnf"
    cnf.write_text("p cnf 3 2\n1 2 -3 0\n-1 3 0\n")
    out, csv, trace, assign = (tmp_path / n for n in ("r.jsonl", "r.csv", "t.jsonl", "a.txt"))
    rc = main(["solve", "--problem", "maxksat", "--input", str(cnf), "--out", str(out),
               "--csv", str(csv), "--trace", str(trace), "--assignment", str(assign)])
    assert rc == 0
    assert last_line(capsys).startswith("obj=0 ")
    rec = json.loads(out.read_text())
    assert rec["instance"] == "f" and rec["objective"] == 0.0 and rec["problem"] == "maxksat"
    assert csv.read_text().startswith("instance,obj,time\nf,0.0,")
    rows = [json.loads(line) for line in trace.read_text().splitlines()]
    assert set(rows[0]) == {"t", "wall_s", "best", "gap", "min_dual"}
    assert len(assign.read_text().splitlines()) == 4


def test_solve_maxkcut(tmp_path, capsys):
    path = tmp_path / "k3.txt"
    path.write_text("3 3\n1 2 1\n2 3 1\n1 3 1\n")
    assert main(["solve", "--problem", "maxkcut", "--k", "3", "--input", str(path),
                 "--batch", "8"]) == 0
    assert last_line(capsys).startswith("obj=3 ")


@pytest.mark.parametrize("argv", [
    ["solve", "--problem", "maxcut", "--input", "/nonexistent/file"],
    ["solve", "--problem", "maxcut", "--input", "{edge}", "--alpha", "-1"],
    ["solve", "--problem", "maxcut", "--input", "{edge}", "--g", "cubic"],
    ["solve", "--problem", "maxcut", "--input", "{edge}", "--time-limit", "0"],
    ["solve", "--problem", "maxkcut", "--input", "{edge}", "--k", "1"],
    ["solve", "--problem", "maxksat", "--input", "{edge}"],
    ["gen-rrg", "--n", "5", "--d", "3"],
])
def test_usage_errors_exit_2(argv, edge_file, capsys):
    argv = [a.replace("{edge}", str(edge_file)) for a in argv]
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_numeric_failure_exit_1(tmp_path, capsys):
    path = tmp_path / "huge.txt"
    path.write_text("2 1\n1 2 1e13\n")
    assert main(["solve", "--problem", "maxcut", "--input", str(path), "--batch", "2"]) == 1


def test_gen_rrg(tmp_path, capsys):
    assert main(["gen-rrg", "--n", "4", "--d", "3"]) == 0
    text = capsys.readouterr().out
    K4 = WeightedGraph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert text == format_gset(K4)
    out = tmp_path / "g.txt"
    assert main(["gen-rrg", "--n", "20", "--d", "3", "--seed", "5", "--out", str(out)]) == 0
    G = read_gset(out)
    assert G.n == 20 and all(G.degrees() == 3)
    assert out.read_text() == format_gset(G)


@pytest.mark.parametrize("edges, opt", [("2 1\n1 2 1\n", "opt=1"),
                                        ("3 3\n1 2 1\n2 3 1\n1 3 1\n", "opt=2")])
def test_oracle_maxcut(tmp_path, capsys, edges, opt):
    path = tmp_path / "g.txt"
    path.write_text(edges)
    assert main(["oracle", "--problem", "maxcut", "--input", str(path)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == opt


def test_oracle_constant_and_capacity(tmp_path, capsys):
    cnf = tmp_path / "c.cnf"
    cnf.write_text("p cnf 2 2\n1 0\n-1 0\n")
    assert main(["oracle", "--problem", "maxksat", "--input", str(cnf)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "opt=1"
    big = tmp_path / "big.txt"
    big.write_text(format_gset(gnp_graph(30, 0.1, seed=0)))
    assert main(["oracle", "--problem", "maxcut", "--input", str(big)]) == 2


def test_results_byte_identical_across_threads(tmp_path, capsys):
    cnf = tmp_path / "r.cnf"
    cnf.write_text(format_dimacs_cnf(random_kcnf(15, 45, 3, seed=1)))
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"r{threads}.jsonl"
        main(["solve", "--problem", "maxksat", "--input", str(cnf), "--seed", "9",
              "--threads", threads, "--out", str(out)])
        rec = json.loads(out.read_text())
        rec.pop("time_to_best")
        outs.append(rec)
    assert outs[0] == outs[1]


def test_entry_point(edge_file):
    res = subprocess.run([sys.executable, "-m", "pdbinopt", "oracle", "--problem", "maxcut",
                          "--input", str(edge_file)], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("opt=1\n")
