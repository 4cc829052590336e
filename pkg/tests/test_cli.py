import json
import math
import subprocess
import sys

import numpy as np
import pytest

from conftest import run_doc
from groklab import checkpoint
from groklab.analytic import default_frequency_plan
from groklab.cli import build_parser, main
from groklab.network import ArchSpec, ModelState, init_model
from groklab.pca import inject_clusters


def call(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(run_doc(epochs=20, checkpoint_every=10)))
    return path


@pytest.fixture
def trained(tmp_path, config_file, capsys):
    out = tmp_path / "run"
    assert call(capsys, "train", "--config", config_file, "--out", out)[0] == 0
    return out


def save_model(path, weights, p):
    arch = ArchSpec(p, (weights[-1].shape[1],))
    model = init_model(arch, 0)
    model.weights[-1] = np.ascontiguousarray(weights[-1])
    checkpoint.save(path, model, seed=0, epoch=0)
    return path


# --- train -------------------------------------------------------------------------------

def test_train(trained, capsys):
    assert (trained / "trace.csv").exists()
    assert (trained / "checkpoints" / "epoch_000020.json").exists()
    summary = json.loads((trained / "summary.json").read_text())
    assert summary["format_version"] == 1 and summary["seed_source"] == "config"


def test_train_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code, _, err = call(capsys, "train", "--config", bad, "--out", tmp_path / "o")
    assert code == 2 and "malformed JSON" in err


def test_train_schema_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(run_doc(colour="red")))
    code, _, err = call(capsys, "train", "--config", bad, "--out", tmp_path / "o")
    assert code == 2 and "colour" in err


def test_train_missing_out_is_usage_error(config_file, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--config", str(config_file)])
    assert exc.value.code == 2


def test_train_missing_config(tmp_path, capsys):
    assert call(capsys, "train", "--config", tmp_path / "nope.json", "--out", tmp_path)[0] == 2


def test_train_run_failure_exit_1(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(run_doc(model={"hidden_dims": [8], "activation": {"kind": "cubic"}},
                                       optimizer={"lr": 1e100, "weight_decay": 0})))
    code, doc, _ = call(capsys, "train", "--config", path, "--out", tmp_path / "o")
    assert code == 1 and doc["summary"]["status"] == "failed"


def test_seed_env_override(tmp_path, config_file, capsys, monkeypatch):
    monkeypatch.setenv("GROKLAB_SEED", "77")
    code, doc, _ = call(capsys, "train", "--config", config_file, "--out", tmp_path / "o")
    assert code == 0
    assert doc["summary"]["seed"] == 77 and doc["summary"]["seed_source"] == "env:GROKLAB_SEED"
    monkeypatch.setenv("GROKLAB_SEED", "seven")
    assert call(capsys, "train", "--config", config_file, "--out", tmp_path / "p")[0] == 2


def test_unknown_flag_rejected(config_file, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--config", str(config_file), "--out", str(tmp_path), "--fast"])
    assert exc.value.code == 2


def test_every_flag_documented():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.choices and "train" in a.choices)
    assert set(sub.choices) == {"train", "sweep", "analyze", "factor", "verify-analytic", "plot"}
    for name, cmd in sub.choices.items():
        text = cmd.format_help()
        for action in cmd._actions:
            for flag in action.option_strings:
                assert flag in text, (name, flag)
            assert action.help, (name, action.dest)


# --- sweep ---------------------------------------------------------------------------------

def test_sweep(tmp_path, capsys):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps({"format_version": 1, "root_seed": 3,
                                "base": run_doc(epochs=5), "grid": {"dataset.train_frac": [0.5, 0.7]},
                                "repeats": 2}))
    code, doc, _ = call(capsys, "sweep", "--config", path, "--out", tmp_path / "s", "--workers", 2)
    assert code == 0 and doc["runs"] == 4 and doc["failed"] == 0
    full = json.loads((tmp_path / "s" / "sweep_summary.json").read_text())
    assert full["format_version"] == 1 and len(full["runs"]) == 4
    assert all((tmp_path / "s" / f"run_{k:04d}" / "trace.csv").exists() for k in range(4))


def test_sweep_failure_exit(tmp_path, capsys):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps({"format_version": 1, "base": run_doc(epochs=5),
                                "grid": {"dataset.train_frac": [1.0, 0.5]}}))
    code, doc, _ = call(capsys, "sweep", "--config", path, "--out", tmp_path / "s")
    assert code == 1 and doc["failed"] == 1


# --- analyze ---------------------------------------------------------------------------------

def test_analyze_entropy_bounds(trained, capsys):
    code, doc, _ = call(capsys, "analyze", "--checkpoint", trained / "checkpoints/epoch_000020.json",
                        "--metrics", "entropy")
    assert code == 0 and doc["format_version"] == 1
    for layer in doc["metrics"]["entropy"]:
        assert 0 <= layer["entropy"] <= layer["max_entropy"]


def test_analyze_deadweight_on_fresh_init(tmp_path, capsys):
    path = tmp_path / "init.json"
    checkpoint.save(path, init_model(ArchSpec(7, (16,)), 1))
    code, doc, _ = call(capsys, "analyze", "--checkpoint", path, "--metrics", "deadweight",
                        "--threshold", 1e-41)
    assert code == 0 and all(l["fraction"] == 0.0 for l in doc["metrics"]["deadweight"])


def test_analyze_analytic_spectrum(tmp_path, capsys):
    ck = tmp_path / "analytic.json"
    code, doc, _ = call(capsys, "verify-analytic", "--p", 11, "--n", 15, "--seed", 4,
                        "--checkpoint-out", ck)
    assert code == 0 and doc["format_version"] == 1 and doc["inputs_checked"] == 121
    code, doc, _ = call(capsys, "analyze", "--checkpoint", ck, "--metrics", "dft,autocorr",
                        "--csv-dir", tmp_path / "csv")
    freqs = default_frequency_plan(11, 15)
    for col in doc["metrics"]["dft"]["columns"]:
        k = freqs[col["column"]]
        assert col["peak_bin"] == min(k, 11 - k)
        assert col["ratio"] >= 1e5
    rows = (tmp_path / "csv" / "dft.csv").read_text().splitlines()
    assert rows[0] == "column,index,value" and len(rows) == 1 + 15 * 11
    assert (tmp_path / "csv" / "autocorr.csv").exists()


def test_analyze_unknown_metric(trained, capsys):
    code, _, err = call(capsys, "analyze", "--checkpoint", trained / "checkpoints/epoch_000020.json",
                        "--metrics", "entropy,curvature")
    assert code == 2 and "curvature" in err


def test_analyze_missing_checkpoint(tmp_path, capsys):
    assert call(capsys, "analyze", "--checkpoint", tmp_path / "x.json", "--metrics", "entropy")[0] == 2


# --- factor ------------------------------------------------------------------------------------

def test_factor_synthetic(tmp_path, capsys):
    rows = inject_clusters(20, 5, width=16, pair=0, seed=1)
    ck = save_model(tmp_path / "syn.json", [rows], 20)
    code, doc, _ = call(capsys, "factor", "--checkpoint", ck, "--pairs", 3, "--svg-dir", tmp_path / "svg")
    assert code == 0
    assert (doc["result"]["k"], doc["result"]["m"]) == (5, 4)
    svgs = sorted(p.name for p in (tmp_path / "svg").iterdir())
    assert svgs == ["pca_pair_0.svg", "pca_pair_1.svg", "pca_pair_2.svg"]
    text = (tmp_path / "svg" / "pca_pair_0.svg").read_text()
    assert all(f">{q}</text>" in text for q in range(20))


def test_factor_prime_absent(tmp_path, capsys):
    rows = np.random.default_rng(0).standard_normal((23, 16))
    ck = save_model(tmp_path / "p.json", [rows], 23)
    code, doc, _ = call(capsys, "factor", "--checkpoint", ck, "--pairs", 2, "--svg-dir", tmp_path)
    assert code == 0 and doc["result"] == "absent"


def test_factor_errors(tmp_path, capsys):
    assert call(capsys, "factor", "--checkpoint", tmp_path / "none.json")[0] == 2
    ck = save_model(tmp_path / "small.json", [np.ones((5, 3)) * np.arange(3)], 5)
    assert call(capsys, "factor", "--checkpoint", ck, "--pairs", 3, "--svg-dir", tmp_path)[0] == 2


# --- verify-analytic ---------------------------------------------------------------------------

def test_verify_analytic_reports(capsys):
    code, doc, _ = call(capsys, "verify-analytic", "--p", 5, "--n", 80, "--seed", 0)
    assert code == 0 and doc["all_correct"] is True and doc["margin"] > 0
    code, doc, _ = call(capsys, "verify-analytic", "--p", 5, "--n", 4)
    assert code == 0 and doc["seed"] is None and doc["misclassified"] == 20
    assert call(capsys, "verify-analytic", "--p", 5, "--n", 0)[0] == 2


# --- plot --------------------------------------------------------------------------------------

def test_plot_accuracy_and_determinism(trained, tmp_path, capsys):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for out in (a, b):
        assert call(capsys, "plot", "--kind", "accuracy_curves", "--trace", trained / "trace.csv",
                    "--out", out)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.count("<polyline") == 2
    assert "train accuracy" in text and "test accuracy" in text


def test_plot_entropy_layout(trained, tmp_path, capsys):
    out = tmp_path / "e.svg"
    assert call(capsys, "plot", "--kind", "entropy_curves", "--trace", trained / "trace.csv",
                "--out", out)[0] == 0
    text = out.read_text()
    polylines = [l for l in text.splitlines() if l.startswith("<polyline")]
    assert len(polylines) == 4   # train, test, two layer entropies
    assert 'stroke-dasharray="1.5,4"' in polylines[0]          # training accuracy dotted
    assert "stroke-dasharray" not in polylines[1]              # test accuracy solid
    assert "entropy layer 2" in text


@pytest.mark.parametrize("kind", ["pca_scatter", "spectrum", "autocorrelation"])
def test_plot_checkpoint_kinds(trained, tmp_path, capsys, kind):
    out = tmp_path / f"{kind}.svg"
    code, doc, _ = call(capsys, "plot", "--kind", kind, "--checkpoint",
                        trained / "checkpoints/epoch_000020.json", "--out", out, "--column", 2)
    assert code == 0 and doc["output"] == str(out)
    text = out.read_text()
    assert text.startswith("<svg")
    if kind == "pca_scatter":
        assert all(f">{q}</text>" in text for q in range(7))


def test_plot_errors(tmp_path, trained, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,trace\n")
    assert call(capsys, "plot", "--kind", "accuracy_curves", "--trace", bad, "--out", tmp_path / "x.svg")[0] == 2
    assert call(capsys, "plot", "--kind", "accuracy_curves", "--trace", tmp_path / "missing.csv",
                "--out", tmp_path / "x.svg")[0] == 2
    assert call(capsys, "plot", "--kind", "spectrum", "--out", tmp_path / "x.svg")[0] == 2
    assert call(capsys, "plot", "--kind", "spectrum", "--checkpoint",
                trained / "checkpoints/epoch_000020.json", "--column", 99, "--out", tmp_path / "x.svg")[0] == 2
    with pytest.raises(SystemExit):
        main(["plot", "--kind", "heatmap", "--out", str(tmp_path / "x.svg")])


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "groklab.cli", "verify-analytic", "--p", "7",
                          "--n", "6", "--seed", "1"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["p"] == 7
