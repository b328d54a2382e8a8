import json
import os

import pytest

from matchinglab import app
from matchinglab.GraphIO import export_graph


@pytest.fixture
def run(tmp_path, capsys):
    settings = str(tmp_path / "MatchingLab.ini")

    def call(*argv):
        code = app.main([*argv, "--settings", settings])
        out, err = capsys.readouterr()
        return code, out, err

    return call


@pytest.fixture
def graph_file(write_file):
    def write(name, G):
        return write_file(name, export_graph(G, "json"))

    return write


def test_diam_on_four_cycle(run, graph_file, c4):
    code, out, _ = run("diam", graph_file("c4.json", c4))
    assert code == 0
    assert out.startswith("matchinglab diam: PASS")
    assert "diameter: 1" in out


def test_diam_threshold_decision(run, graph_file, two_c4):
    code, out, _ = run("diam", graph_file("two_c4.json", two_c4), "--threshold", "1", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["data"]["diameter"] == 2
    assert doc["data"]["decision"] == "no"
    assert doc["config"]["fmt"] == "json"


def test_diam_without_perfect_matching(run, graph_file, star3):
    code, _, err = run("diam", graph_file("star.json", star3))
    assert code == app.EXIT_NO_MATCHING
    assert "NoPerfectMatching" in err


def test_diam_cap(run, graph_file, k33):
    code, _, err = run("diam", graph_file("k33.json", k33), "--cap", "1")
    assert code == app.EXIT_LIMIT
    assert "CapExceeded" in err


def test_diam_dot_output(run, graph_file, c4):
    code, out, _ = run("diam", graph_file("c4.json", c4), "--format", "dot")
    assert code == 0
    assert out.lstrip().startswith("graph ")
    assert out.count("penwidth=3") == 4


def test_missing_file(run, tmp_path):
    code, _, _ = run("diam", str(tmp_path / "absent.json"))
    assert code == app.EXIT_PARSE


def test_verify_ladder_states(run):
    code, out, _ = run("verify", "ladder-states", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["data"]["lemma"] == "ladder-states"
    assert doc["data"]["measurements"]["states"] == 8


def test_verify_budget(run):
    code, _, _ = run("verify", "tower", "--h", "6", "--budget", "10")
    assert code == app.EXIT_LIMIT


def test_reduce_gh(run, write_file, yes_instance):
    path = write_file("yes.json", yes_instance.to_json())
    code, out, _ = run("reduce", "gh", path, "--format", "json")
    assert code == 0
    data = json.loads(out)["data"]
    assert data["census"]["cities"] == 20
    assert data["census"]["vertices"] == 172
    assert data["bipartite"]


def test_reduce_gh_paper_census(run, write_file, yes_instance):
    path = write_file("yes.json", yes_instance.to_json())
    code, out, _ = run("reduce", "gh", path, "--paper", "--format", "json")
    assert code == 0
    data = json.loads(out)["data"]
    assert data["built"] is False
    assert data["profile"]["kind"] == "paper"


def test_reduce_bad_instance(run, write_file):
    code, _, err = run("reduce", "gh", write_file("bad.json", '{"arcs": [[0, 1]'))
    assert code == app.EXIT_PARSE
    assert "ParseError" in err


def test_reduce_folklore_check(run, write_file):
    path = write_file("unit.cnf", "p cnf 1 1\n1 0\n")
    code, out, _ = run("reduce", "folklore", path, "--check", "--format", "json")
    assert code == 0
    data = json.loads(out)["data"]
    assert data["agree"] and data["hamiltonian"]
    assert data["census"]["vertices"] == 30


def test_reduce_inapprox(run, graph_file, c4):
    code, out, _ = run("reduce", "inapprox", graph_file("c4.json", c4), "--format", "json")
    assert code == 0
    data = json.loads(out)["data"]
    assert data["census"]["cities"] == 4
    assert data["constants"]["eps2"] == "1/16226"


def test_roundtrip_yes(run):
    code, out, _ = run("roundtrip", "--generate", "yes", "4", "1", "--format", "json")
    assert code == 0
    data = json.loads(out)["data"]
    assert data["forall_exists"] is True
    assert data["patterns_run"] == 2
    for run_ in data["runs"]:
        assert all(run_["stages"].values())
        assert run_["synthesis"]["length"] == 4


def test_roundtrip_no(run):
    code, _, err = run("roundtrip", "--generate", "no", "4", "1")
    assert code == app.EXIT_OTHER
    assert "HamProviderFailed" in err


def test_roundtrip_bad_generate(run):
    code, _, _ = run("roundtrip", "--generate", "yes", "four", "1")
    assert code == app.EXIT_PARSE


def test_bad_config_exit(run):
    code, _, _ = run("verify", "ladder-states", "--workers", "0")
    assert code == app.EXIT_OTHER


def test_out_writes_session(run, write_file, yes_instance, tmp_path):
    path = write_file("yes.json", yes_instance.to_json())
    out_dir = tmp_path / "runs"
    code, _, _ = run("reduce", "gh", path, "--out", str(out_dir))
    assert code == 0
    (session,) = os.listdir(out_dir)
    assert session.startswith("reduce_")
    files = set(os.listdir(out_dir / session))
    assert {"report.json", "report.txt", "run.log", "G_H.json", "G_H.dot"} <= files
    with open(out_dir / session / "report.json", encoding="utf-8") as fp:
        assert json.load(fp)["data"]["census"]["cities"] == 20


def test_catalog(run):
    code, out, _ = run("catalog", "--format", "json")
    assert code == 0
    data = json.loads(out)["data"]
    assert {"tower_default", "tower_locked", "ladder_top_open", "forall_ebar"} <= set(data)


def test_unknown_command():
    with pytest.raises(SystemExit):
        app.main(["explode"])
