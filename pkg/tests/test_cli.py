import json
from pathlib import Path

import pytest

from dialogscreen.cli import EXIT_BACKEND, EXIT_DATA, EXIT_OK, EXIT_USAGE, main


@pytest.fixture(scope="module")
def cli_data(tmp_path_factory):
    data = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--users", "6", "--sessions", "22", "--seed", "5", "--out", str(data)]) == EXIT_OK
    grids = Path(__file__).parent / "grids"
    config = data / "run.yaml"
    config.write_text(
        "corpus: corpus.jsonl\nlabels: labels.jsonl\noutput: run\nfolds: 3\nseed: 1\n"
        f"grids:\n  nb: {grids / 'nb.yaml'}\n  dt: {grids / 'dt.yaml'}\n  rf: {grids / 'rf.yaml'}\n")
    return data, config


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as err:
        main(["run", "--scenario", "7"])
    assert err.value.code == EXIT_USAGE
    assert main(["window"]) == EXIT_USAGE
    assert "--config or --out" in capsys.readouterr().err


def test_missing_corpus_exits_two(tmp_path):
    assert main(["run", "--out", str(tmp_path / "o"), "--corpus", str(tmp_path / "none.jsonl"),
                 "--labels", str(tmp_path / "none.jsonl")]) == EXIT_DATA


def test_stage_commands_then_predict_and_explain(cli_data, capsys, tmp_path):
    data, config = cli_data
    for stage in ("ingest", "extract", "window", "select", "train", "evaluate"):
        assert main([stage, "--config", str(config)]) == EXIT_OK, stage
    out = data / "run"
    assert (out / "reports" / "table.csv").exists()

    session_id = json.loads((data / "corpus.jsonl").read_text().splitlines()[-1])["session_id"]
    capsys.readouterr()
    assert main(["predict", "--config", str(config), "--model", str(out / "models" / "rf.json"),
                 "--corpus", str(data / "corpus.jsonl"), "--session-id", session_id]) == EXIT_OK
    sid, category, confidence = capsys.readouterr().out.split()
    assert sid == session_id and 0 <= float(confidence) <= 1
    assert main(["predict", "--config", str(config), "--model", str(out / "models" / "rf.json"),
                 "--corpus", str(data / "corpus.jsonl"), "--session-id", "missing"]) == EXIT_DATA

    assert main(["explain", "--run", str(out), "--user", "u00", "--out", str(tmp_path / "dash")]) == EXIT_OK
    assert list((tmp_path / "dash" / "u00").glob("*/dashboard.html"))
    assert main(["explain", "--run", str(out), "--user", "nobody"]) == EXIT_DATA


def test_http_backend_failure_exits_three(cli_data, tmp_path, monkeypatch):
    data, _ = cli_data
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    config = tmp_path / "http.yaml"
    config.write_text(f"corpus: {data / 'corpus.jsonl'}\nlabels: {data / 'labels.jsonl'}\noutput: out\n"
                      "backend: http\nendpoint: http://127.0.0.1:9/v1/chat/completions\nparallelism: 1\n")
    assert main(["ingest", "--config", str(config)]) == EXIT_OK
    assert main(["extract", "--config", str(config)]) == EXIT_BACKEND


def test_full_run_prints_table(cli_data, capsys, tmp_path):
    data, config = cli_data
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "full"), "--scenario", "2"]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "run complete" in printed and "2,RF," in printed
    assert not (tmp_path / "full" / ".partial").exists()
