import json

import pytest

from bimem.cli import main
from bimem.fixtures import planted_evidence_suite, sample_path
from bimem.evaluation import dataset_to_json


@pytest.fixture
def built(tmp_path):
    out = tmp_path / "bank.json"
    assert main(["build", sample_path(), "-o", str(out)]) == 0
    return out


def test_build_writes_bank(built, capsys):
    assert json.loads(built.read_text())["format_version"] == 1


def test_query_prints_answer(built, capsys):
    assert main(["query", str(built), "What does Maria do for work?", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["answer"] and out["retrieved"]


def test_query_k_zero_is_usage_error(built, capsys):
    assert main(["query", str(built), "hello", "--k", "0"]) == 1
    assert "k must be" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["build"]) == 1
    assert main([]) == 1


def test_missing_file_is_data_error(tmp_path, capsys):
    assert main(["build", str(tmp_path / "none.json"), "-o", str(tmp_path / "b.json")]) == 2
    assert main(["inspect", str(tmp_path / "none.json")]) == 2


def test_remote_without_env_is_usage_error(tmp_path, monkeypatch):
    monkeypatch.delenv("BIMEM_CHAT_URL", raising=False)
    assert main(["build", sample_path(), "-o", str(tmp_path / "b.json"), "--backend", "remote"]) == 1


@pytest.mark.parametrize("flag", [[], ["--scenes"], ["--persona"], ["--graph"]])
def test_inspect(built, capsys, flag):
    assert main(["inspect", str(built), *flag]) == 0
    assert capsys.readouterr().out.strip()


def test_eval_on_bank_and_conversation(built, tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["eval", str(built), sample_path(), "-o", str(report)]) == 0
    summary = json.loads(report.read_text())["summary"]
    assert summary["count"] == 6 and summary["skipped"] == 1
    assert main(["eval", sample_path(), sample_path(), "-o", str(report)]) == 0
    assert json.loads(report.read_text())["summary"]["count"] == 6


def test_eval_strategies_on_planted_fixture(tmp_path, capsys):
    convs, items = planted_evidence_suite(n=6)
    data = tmp_path / "planted.json"
    data.write_text(json.dumps(dataset_to_json(convs, items)))
    recall = {}
    for strategy in ("bimem", "hierarchical"):
        out = tmp_path / f"{strategy}.json"
        assert main(["eval", str(data), str(data), "-o", str(out), "--strategy", strategy, "--k", "2"]) == 0
        recall[strategy] = json.loads(out.read_text())["summary"]["evidence_recall"]
    assert recall["bimem"] >= recall["hierarchical"]
