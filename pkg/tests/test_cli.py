import json

import pytest

from iglin import cli
from iglin.cli import main
from iglin.matspace import Mat, format_mat
from iglin.presentation import parse_presentation

from conftest import field


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def as_json(out):
    obj = json.loads(out)
    assert obj["schema"] == 1
    return obj


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", "--n", "4", "--r", "2", "--q", "2")
    obj = as_json(out)
    assert code == 0 and obj["count"] == 35
    assert sum(r["count"] for r in obj["regions"]) == 35
    # leading columns {1, 2} leave a free 2x2 block
    assert obj["regions"][0] == {"subset": [1, 2], "count": 16}
    code, out, _ = run(capsys, "enumerate", "--n", "3", "--r", "1", "--q", "2", "--dump")
    assert code == 0 and len(out.splitlines()) == 7


def test_rees(capsys):
    code, out, _ = run(capsys, "rees", "--n", "4", "--r", "1", "--q", "3")
    obj = as_json(out)
    assert code == 0 and obj["kind"]
    assert sum(v["cells"] for v in obj["values"]) == 40 * 40
    code, out, _ = run(capsys, "rees", "--n", "4", "--r", "1", "--q", "3", "--full", "--stats")
    assert code == 0 and "values" not in as_json(out)


def test_delta(capsys):
    code, out, _ = run(capsys, "delta", "--n", "4", "--r", "1", "--q", "2")
    obj = as_json(out)
    assert code == 0 and obj["tree_edges"] == 29 and obj["x_nodes"] == obj["y_nodes"] == 15
    code, out, _ = run(capsys, "delta", "--n", "3", "--r", "1", "--q", "2", "--dot", "--tree-only")
    assert code == 0 and out.startswith("graph") and out.count("--") == 13


def test_closure(capsys, tmp_path):
    trace = tmp_path / "trace.txt"
    code, out, _ = run(capsys, "closure", "--n", "4", "--r", "2", "--q", "2", "--trace", str(trace))
    obj = as_json(out)
    assert code == 0 and obj["all_blue"]
    assert obj["blued"] == obj["steps"] == obj["edges"] - obj["tree_edges"]
    lines = trace.read_text().splitlines()
    assert len(lines) == obj["steps"] and all(l.startswith("new ") and " via " in l for l in lines)
    code, out, _ = run(capsys, "closure", "--n", "4", "--r", "1", "--q", "2", "--engine", "worklist")
    assert code == 0 and as_json(out)["all_blue"]


def test_lambda(capsys):
    code, out, _ = run(capsys, "lambda", "--m", "3", "--k", "2", "--q", "2")
    obj = as_json(out)
    assert code == 0 and obj["ok"] and len(obj["values"]) == 16
    code, out, _ = run(capsys, "lambda", "--m", "1", "--k", "1", "--q", "3")
    obj = as_json(out)
    assert code == 0 and [v["components"] for v in obj["values"] if v["rank"] == 1] == [2, 2]


def test_strong(capsys):
    code, out, _ = run(capsys, "strong", "--n", "4", "--r", "1", "--q", "3", "--paths", "3")
    obj = as_json(out)
    assert code == 0 and obj["ok"] and len(obj["values"]) == 3 and obj["absent"] == []
    assert all(p["verified"] for v in obj["values"] for p in v["paths"])
    code, out, _ = run(capsys, "strong", "--n", "4", "--r", "1", "--q", "3", "--value", "2")
    (entry,) = as_json(out)["values"]
    assert code == 0 and entry["value"] == format_mat(Mat.from_rows(field(3), [[2]])) and entry["components"] == 1


def test_presentation(capsys):
    code, out, _ = run(capsys, "presentation", "--n", "4", "--r", "1", "--q", "2")
    pt = parse_presentation(out)
    assert code == 0 and len(pt.gens) == 120 and len(pt.units) == 29
    code, out, _ = run(capsys, "presentation", "--n", "4", "--r", "1", "--q", "3", "--mode", "certificate-squares")
    assert code == 0 and parse_presentation(out).squares


def test_counts(capsys):
    code, out, _ = run(capsys, "counts", "--n", "7", "--r", "5", "--q", "2")
    obj = as_json(out)
    assert code == 0 and obj["idempotents"] == 2_731_008 and obj["gl_order"] == 9_999_360
    assert obj["inequality_holds"] and obj["generators_vs_group"] == "less"


def test_verify_theorem(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-theorem", "--n", "4", "--r", "1", "--q", "3", "--out", str(tmp_path))
    assert code == 0 and "PASS" in out
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] and summary["classes"] == 2 and summary["replay"]["ok"]
    assert (tmp_path / "summary.txt").read_text() == out
    code, out, _ = run(capsys, "verify-theorem", "--n", "5", "--r", "2", "--q", "2", "--exploratory")
    assert code == 0 and "EXPLORATORY" in out


def test_usage_errors(capsys):
    assert run(capsys, "verify-theorem", "--n", "5", "--r", "2", "--q", "2")[0] == 2
    assert run(capsys, "enumerate", "--n", "3", "--r", "4", "--q", "2")[0] == 2
    assert run(capsys, "enumerate", "--n", "3", "--r", "1", "--q", "6")[0] == 2
    assert run(capsys, "strong", "--n", "3", "--r", "1", "--q", "2", "--value", "7")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


def test_budget_exit(capsys):
    code, _, err = run(capsys, "rees", "--n", "4", "--r", "1", "--q", "2", "--budget", "10")
    assert code == 3 and "budget" in err


def test_failure_exit(capsys, monkeypatch):
    from iglin import pipeline

    real = pipeline.verify_theorem

    def broken(*a, **kw):
        res = real(*a, **kw)
        res.passed, res.failed_stage, res.message = False, "stage2", "forced"
        return res

    monkeypatch.setattr(pipeline, "verify_theorem", broken)
    code, out, _ = run(capsys, "verify-theorem", "--n", "4", "--r", "1", "--q", "2")
    assert code == 1 and "FAIL" in out
    assert cli.EXIT_FAIL == 1


def test_dot_styles(capsys):
    code, out, _ = run(capsys, "delta", "--n", "6", "--r", "2", "--q", "2", "--dot", "--tree-only")
    assert code == 0
    edges = [l for l in out.splitlines() if "--" in l]
    assert len(edges) == 2 * 651 - 1
    assert any("style=bold" in l for l in edges) and any("style=dashed" in l for l in edges)
    assert all("T3" in l for l in edges if "style=bold" in l)


def test_lambda_square_report(capsys):
    code, out, _ = run(capsys, "lambda", "--m", "2", "--k", "2", "--q", "2")
    vals = as_json(out)["values"]
    sing = [v for v in vals if v["rank"] < 2]
    inv = [v for v in vals if v["rank"] == 2]
    assert code == 0 and len(sing) == 10 and len(inv) == 6
    assert all(v["components"] == 1 and v["required"] for v in sing)
    assert not any(v["required"] for v in inv)


def test_json_is_deterministic(capsys, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"s{i}.json"
        assert main(["strong", "--n", "4", "--r", "1", "--q", "3", "--paths", "2", "--seed", "5", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
