import csv
import io
import json

import pytest
from conftest import DAY, EPOCH, c_function

from expertmine.cli import main
from expertmine.config import load_config, parse_time
from expertmine.errors import ConfigError


@pytest.fixture
def small_repo(git_repo):
    git_repo.commit({"a/x.c": c_function("x", 3), "b/y.c": c_function("y", 3)}, author=("W", "w@x"), when=EPOCH)
    git_repo.commit({"a/x.c": c_function("x", 1)}, author=("X", "x@x"), when=EPOCH + DAY)
    git_repo.commit({"a/x.c": c_function("x", 0)}, author=("X", "x@x"), when=EPOCH + 2 * DAY)
    git_repo.commit({"a/x.c": c_function("x", 2)}, author=("Y", "y@x"), when=EPOCH + 3 * DAY)
    git_repo.commit({"docs/readme.md": "x"}, author=("Y", "y@x"), when=EPOCH + 4 * DAY)
    return git_repo


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def analyzed(small_repo, tmp_path, capsys):
    store = str(tmp_path / "store")
    code, out, _ = run(capsys, "analyze", "--repo", str(small_repo.path), "--store", store)
    assert code == 0
    return ["--repo", str(small_repo.path), "--store", store]


def test_analyze_summary(small_repo, tmp_path, capsys):
    store = str(tmp_path / "store")
    code, out, _ = run(capsys, "analyze", "--repo", str(small_repo.path), "--store", store)
    summary = json.loads(out)["summary"]
    assert (code, summary["revisions"], summary["files_analyzed"]) == (0, 5, 5)
    code, out, _ = run(capsys, "analyze", "--repo", str(small_repo.path), "--store", store)
    summary = json.loads(out)["summary"]
    assert (summary["files_analyzed"], summary["cache_hits"]) == (0, summary["files_total"])


def test_experts_json_and_csv(analyzed, capsys):
    code, out, _ = run(capsys, "experts", *analyzed)
    report = json.loads(out)
    by_comp = {c["component"]: c["experts"] for c in report["components"]}
    assert code == 0
    assert by_comp["a"][0]["author"] == "X"
    assert report["run"]["window_days"] == 62
    assert report["run"]["reference_time"] == EPOCH + 4 * DAY

    code, out, err = run(capsys, "experts", *analyzed, "--format", "csv", "--top-k", "1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["component", "rank", "author", "score", "qi", "increases", "decreases", "total_commits"]
    assert [(r["component"], r["author"]) for r in rows] == [("a", "X"), ("b", "W")]
    assert json.loads(err)["run"]["top_k"] == 1


def test_experts_lists_components_without_commits_in_window(analyzed, capsys):
    ref_time = "2024-01-03T12:00:00Z"  # covers only X's second commit
    code, out, _ = run(capsys, "experts", *analyzed, "--reference-time", ref_time, "--window-days", "1")
    comps = {c["component"]: c["experts"] for c in json.loads(out)["components"]}
    assert comps["b"] == []
    assert [e["author"] for e in comps["a"]] == ["X"]


def test_component_filter(analyzed, capsys):
    _, out, _ = run(capsys, "experts", *analyzed, "--component", "b*")
    assert [c["component"] for c in json.loads(out)["components"]] == ["b"]


def test_timeseries_single_week_csv_and_svg(analyzed, capsys, tmp_path):
    code, out, _ = run(capsys, "timeseries", *analyzed, "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["week", "commit_count", "delta_cc", "delta_hv", "delta_hd"]
    assert [r[:2] for r in rows[1:]] == [["2024-W01", "5"]]
    svg = tmp_path / "ts.svg"
    code, _, _ = run(capsys, "timeseries", *analyzed, "--format", "svg", "--metrics", "cc", "-o", str(svg))
    assert code == 0 and 'data-metric="cc"' in svg.read_text() and 'data-metric="hv"' not in svg.read_text()


def test_commit_report(analyzed, small_repo, capsys):
    rev = small_repo.git("rev-parse", "HEAD~2").strip()
    code, out, _ = run(capsys, "commit", *analyzed, rev[:10])
    report = json.loads(out)
    assert report["revision"]["author"] == "X"
    (f,) = report["files"]
    assert (f["path"], f["before"]["cc"], f["after"]["cc"]) == ("a/x.c", 2, 1)
    (comp,) = report["components"]
    assert comp["after"] > comp["before"]
    code, _, err = run(capsys, "commit", *analyzed, "deadbeef")
    assert code == 2 and "not in the analyzed history" in err


def test_reports_are_byte_deterministic(analyzed, capsys):
    outputs = {run(capsys, "experts", *analyzed)[1] for _ in range(3)}
    assert len(outputs) == 1
    outputs = {run(capsys, "timeseries", *analyzed, "--format", "svg")[1] for _ in range(3)}
    assert len(outputs) == 1


def test_exit_codes(tmp_path, capsys, analyzed):
    code, _, err = run(capsys, "analyze", "--repo", str(tmp_path / "missing"), "--store", str(tmp_path / "s"))
    assert code == 3 and "missing" in err
    code, _, err = run(capsys, "experts", "--store", str(tmp_path / "nothing"))
    assert code == 5 and "expertmine analyze" in err
    code, _, _ = run(capsys, "experts", *analyzed, "--lambda", "0.5")
    assert code == 2
    code, _, _ = run(capsys, "experts", *analyzed, "--format", "svg")
    assert code == 2
    store = analyzed[-1]
    (tmp_path / "store" / "manifest.json").write_text("{oops")
    code, _, _ = run(capsys, "experts", "--store", store)
    assert code == 4


def test_config_file(tmp_path, small_repo, capsys):
    cfg = {
        "repository": {"path": str(small_repo.path), "branch": "master"},
        "store": "st",
        "components": [{"pattern": "a/**", "component": "alpha"}],
        "lambda": 3,
        "thresholds": [{"metric": "cc", "lower": 1, "upper": 40}],
        "window": {"reference_time": "2024-01-05T00:00:00", "duration_days": 30},
        "top_k": 2,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    loaded = load_config(str(path))
    assert loaded.store == str(tmp_path / "st")
    assert loaded.reference_time == EPOCH + 4 * DAY
    assert run(capsys, "analyze", "--config", str(path))[0] == 0
    code, out, _ = run(capsys, "experts", "--config", str(path))
    report = json.loads(out)
    assert "alpha" in {c["component"] for c in report["components"]}
    assert report["run"]["lambda"] == 3
    assert {"metric": "cc", "formula": "cc", "lower": 1, "upper": 40} in report["run"]["thresholds"]


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"repo": "."}))
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_parse_time():
    assert parse_time("1704067200") == EPOCH
    assert parse_time("2024-01-01T01:00:00+01:00") == EPOCH
    with pytest.raises(ConfigError):
        parse_time("yesterday")


def test_timeseries_component_scope(analyzed, capsys):
    _, out, _ = run(capsys, "timeseries", *analyzed, "--format", "csv", "--component", "b")
    (row,) = list(csv.DictReader(io.StringIO(out)))
    # b only ever gets its initial file, which has no earlier marks to compare with
    assert (row["delta_cc"], row["delta_hv"], row["delta_hd"]) == ("0.0", "0.0", "0.0")
    _, out, _ = run(capsys, "timeseries", *analyzed, "--format", "csv", "--component", "a")
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert float(row["delta_cc"]) != 0.0
