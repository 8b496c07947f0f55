import csv
import io

import networkx as nx
import pytest

from opinionmax import cli
from opinionmax.graph import load_graph, write_edge_list


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse(text):
    return list(csv.reader(io.StringIO(text)))


def drop_timing(rows):
    header = rows[0]
    timed = [i for i, h in enumerate(header) if h in ("elapsed_ms", "runtime_exact", "runtime_approx")]
    return [[c for i, c in enumerate(r) if i not in timed] for r in rows]


@pytest.fixture
def p4_file(tmp_path):
    path = tmp_path / "p4.txt"
    path.write_text("0 1\n1 2\n2 3\n")
    return str(path)


@pytest.fixture
def karate_file(tmp_path):
    path = tmp_path / "karate.txt"
    write_edge_list(load_graph(list(nx.karate_club_graph().edges())), path)
    return str(path)


def test_select_exact_p4(capsys, p4_file):
    code, out, _ = run(capsys, "select", "--graph", p4_file, "--s0", "0", "--s1", "3", "--alg", "exact", "--k", "1")
    assert code == 0
    rows = parse(out)
    assert rows[0] == ["round", "leader_id", "follower_id", "gain_estimate", "h_exact", "elapsed_ms"]
    assert rows[1][0] == "0" and float(rows[1][4]) == pytest.approx(1.0)
    assert rows[2][:3] == ["1", "3", "1"]
    assert float(rows[2][3]) == pytest.approx(0.4)
    assert float(rows[2][4]) == pytest.approx(1.4)
    assert rows[3][0] == "total" and float(rows[3][4]) == pytest.approx(1.4)
    assert len(rows) == 4


def test_select_external_ids_round_trip(capsys, tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("100 7\n7 42\n42 9\n")
    code, out, _ = run(capsys, "select", "--graph", str(path), "--s0", "100", "--s1", "9", "--k", "1")
    assert code == 0
    assert parse(out)[2][1:3] == ["9", "7"]


def test_select_to_file(tmp_path, capsys, p4_file):
    out = tmp_path / "res.csv"
    code, stdout, _ = run(capsys, "select", "--graph", p4_file, "--s0", "0", "--s1", "3", "--k", "1", "--out", str(out))
    assert code == 0 and stdout == ""
    raw = out.read_bytes()
    assert raw.startswith(b"round,leader_id") and b"\r\n" in raw


def test_leader_file(tmp_path, capsys, p4_file):
    lf = tmp_path / "leaders.txt"
    lf.write_text("s0: 0\ns1: 3\n")
    code, out, _ = run(capsys, "select", "--graph", p4_file, "--leaders", str(lf), "--k", "1")
    assert code == 0 and float(parse(out)[2][4]) == pytest.approx(1.4)


def test_minimize_reports_complement(capsys, p4_file):
    code, out, _ = run(capsys, "select", "--graph", p4_file, "--s0", "0", "--s1", "3", "--k", "1", "--minimize")
    assert code == 0
    rows = parse(out)
    # mirror image of the maximisation run: 0-leader 0 links to follower 2
    assert rows[2][1:3] == ["0", "2"]
    assert float(rows[1][4]) == pytest.approx(1.0)
    assert float(rows[2][4]) == pytest.approx(0.6)
    assert float(rows[2][3]) == pytest.approx(-0.4)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["select", "--s0", "0", "--s1", "3", "--alg", "approx", "--k", "1"], 2),
        (["select", "--s0", "0", "--s1", "3", "--alg", "approx", "--k", "1", "--eps", "0.7"], 2),
        (["select", "--s0", "0", "--s1", "3", "--k", "0"], 2),
        (["select", "--s0", "0", "--s1", "3", "--k", "1", "--eta", "1.5"], 2),
        (["select", "--s0", "0", "--s1", "0", "--k", "1"], 2),
        (["select", "--s0", "0", "--s1", "9", "--k", "1"], 2),
        (["select", "--k", "1"], 2),
        (["select", "--s0", "0", "--s1", "3", "--random-leaders", "1,1", "--k", "1"], 2),
        (["select", "--s0", "0", "--s1", "3", "--alg", "nope", "--k", "1"], 2),
        (["compare", "--s0", "0", "--s1", "3", "--k", "1", "--strategies", ""], 2),
        (["select", "--random-leaders", "2,2", "--k", "1"], 2),
    ],
)
def test_config_errors(capsys, p4_file, argv, code):
    argv = argv[:1] + ["--graph", p4_file] + argv[1:]
    try:
        got = cli.main(argv)
    except SystemExit as exc:  # argparse usage errors
        got = exc.code
    assert got == code


def test_data_errors(capsys, tmp_path):
    missing = str(tmp_path / "missing.txt")
    assert run(capsys, "select", "--graph", missing, "--s0", "0", "--s1", "1", "--k", "1")[0] == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n2 3\n")
    assert run(capsys, "select", "--graph", str(bad), "--s0", "0", "--s1", "1", "--k", "1")[0] == 3
    loop = tmp_path / "loop.txt"
    loop.write_text("0 1\n1 1\n")
    assert run(capsys, "equilibrium", "--graph", str(loop), "--s0", "0", "--s1", "1")[0] == 3
    assert run(capsys, "error-table", "--graph", missing, "--eps", "0.3")[0] == 3


def test_oracle_cap_exit_code(capsys, karate_file):
    code, _, err = run(capsys, "select", "--graph", karate_file, "--s0", "0", "--s1", "33",
                       "--alg", "oracle", "--k", "4", "--oracle-cap", "5")
    assert code == 2 and "cap" in err


def test_numerical_failure_exit_code(capsys, p4_file, monkeypatch):
    from opinionmax import harness
    from opinionmax.errors import NoConvergence

    def boom(*a, **k):
        raise NoConvergence("forced")

    monkeypatch.setattr(harness, "select_exact", boom)
    assert run(capsys, "select", "--graph", p4_file, "--s0", "0", "--s1", "3", "--k", "1")[0] == 4


def test_compare_karate(capsys, karate_file):
    code, out, _ = run(capsys, "compare", "--graph", karate_file, "--s0", "0", "--s1", "33", "--k", "5",
                       "--eps", "0.3", "--strategies", "exact,approx,random,oracle")
    assert code == 0
    rows = parse(out)
    assert rows[0] == ["strategy", "round", "h_exact"]
    trace = {}
    for name, r, h in rows[1:]:
        trace.setdefault(name, []).append((int(r), float(h)))
    assert sorted(trace) == ["approx", "exact", "oracle", "random"]
    for name, t in trace.items():
        assert [r for r, _ in t] == list(range(6))
        hs = [h for _, h in t]
        assert all(b >= a - 1e-9 for a, b in zip(hs, hs[1:])), name
    for r in range(6):
        o, e, rnd = trace["oracle"][r][1], trace["exact"][r][1], trace["random"][r][1]
        assert o >= e - 1e-9 and e >= rnd - 1e-9


def test_error_table(capsys, tmp_path):
    paths = []
    for i, G in enumerate([nx.barabasi_albert_graph(60, 2, seed=1), nx.connected_watts_strogatz_graph(60, 4, 0.2, seed=2)]):
        path = tmp_path / f"net{i}.txt"
        write_edge_list(load_graph(list(G.edges())), path)
        paths += ["--graph", str(path)]
    code, out, _ = run(capsys, "error-table", *paths, "--eps", "0.3,0.1", "--k", "5", "--random-leaders", "3,3")
    assert code == 0
    rows = parse(out)
    assert rows[0] == ["graph", "nodes", "edges", "eps", "runtime_exact", "runtime_approx",
                       "relative_error", "gamma_exact", "gamma_approx"]
    assert len(rows) == 5
    assert [r[0] for r in rows[1:]] == ["net0.txt", "net0.txt", "net1.txt", "net1.txt"]
    err = {(r[0], float(r[3])): float(r[6]) for r in rows[1:]}
    assert all(v <= 0.3 for v in err.values())
    assert sum(v for (g, e), v in err.items() if e == 0.1) <= sum(v for (g, e), v in err.items() if e == 0.3) + 1e-9


def test_equilibrium_command(capsys, p4_file):
    code, out, _ = run(capsys, "equilibrium", "--graph", p4_file, "--s0", "0", "--s1", "3")
    assert code == 0
    rows = parse(out)
    assert rows[0] == ["node_id", "role", "opinion"]
    got = {r[0]: (r[1], float(r[2])) for r in rows[1:]}
    assert got["0"] == ("s0", 0.0) and got["3"] == ("s1", 1.0)
    assert got["1"][1] == pytest.approx(1 / 3) and got["2"][1] == pytest.approx(2 / 3)
    assert got["total"][1] == pytest.approx(1.0)


@pytest.mark.parametrize("alg", ["exact", "approx", "random", "top-pagerank", "top-betweenness"])
def test_select_deterministic(capsys, karate_file, alg):
    argv = ["select", "--graph", karate_file, "--random-leaders", "2,2", "--seed", "3",
            "--alg", alg, "--k", "4", "--eps", "0.3"]
    first = drop_timing(parse(run(capsys, *argv, "--threads", "1")[1]))
    second = drop_timing(parse(run(capsys, *argv, "--threads", "4")[1]))
    assert first == second
