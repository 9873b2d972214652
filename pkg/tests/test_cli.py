import json

import pytest

from slce.cli import main

FAST_FIT = ["--max-iter", "200", "--penalty-iters", "100"]
FAST = FAST_FIT + ["--lambda", "0.3"]


def run(tmp_path, *args, out="out"):
    return main([*map(str, args), "--out", str(tmp_path / out)])


def read(tmp_path, name, out="out"):
    return json.loads((tmp_path / out / name).read_text())


def test_fit_writes_all_outputs(tmp_path, small_csv):
    assert run(tmp_path, "fit", "--data", small_csv, *FAST) == 0
    for name in ("model.json", "features.json", "sparsity_curve.csv", "ratio_curve.csv", "config.json"):
        assert (tmp_path / "out" / name).is_file()
    feats = read(tmp_path, "features.json")
    assert feats["n_features"] == 20
    assert len(feats["selected_names"]) == feats["cutoff_index"]
    cfg = read(tmp_path, "config.json")
    assert cfg["command"] == "fit" and cfg["lambda"] == 0.3 and cfg["seed"] == 0


def test_fit_reruns_are_byte_identical(tmp_path, small_csv):
    for out in ("a", "b"):
        assert run(tmp_path, "fit", "--data", small_csv, *FAST, "--seed", 5, out=out) == 0
    for name in ("model.json", "features.json", "sparsity_curve.csv", "ratio_curve.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_file_exit_code(tmp_path, capsys):
    assert run(tmp_path, "fit", "--data", tmp_path / "nope.csv") == 1
    assert "nope.csv" in capsys.readouterr().err


def test_negative_lambda_exit_code(tmp_path, small_csv, capsys):
    assert run(tmp_path, "fit", "--data", small_csv, "--lambda", "-1") == 1
    assert "lambda must be non-negative" in capsys.readouterr().err


def test_unknown_flag_exit_code(tmp_path, small_csv):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "fit", "--data", small_csv, "--bogus")
    assert exc.value.code == 1


def test_missing_data_flag(tmp_path):
    assert run(tmp_path, "fit") == 1


def test_numerical_failure_exit_code(tmp_path, small_csv, capsys):
    # a huge step size makes the first pass blow up
    assert run(tmp_path, "fit", "--data", small_csv, "--lr", "1e300", "--max-iter", "50") == 2
    assert "numerical failure" in capsys.readouterr().err


def test_config_file_and_precedence(tmp_path, small_csv):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("lambda: 0.25\nmax-iter: 150\npenalty_iters: 50\nseed: 7\n")
    assert run(tmp_path, "fit", "--data", small_csv, "--config", cfg, "--lambda", "0.4") == 0
    resolved = read(tmp_path, "config.json")
    assert resolved["lambda"] == 0.4
    assert resolved["max_iter"] == 150
    assert resolved["seed"] == 7


def test_json_config_file(tmp_path, small_csv):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"data": str(small_csv), "max_iter": 100, "penalty_iters": 20}))
    assert run(tmp_path, "fit", "--config", cfg) == 0
    assert read(tmp_path, "config.json")["max_iter"] == 100


def test_missing_config_file(tmp_path, small_csv):
    assert run(tmp_path, "fit", "--data", small_csv, "--config", tmp_path / "none.yaml") == 1


def test_seed_from_environment(tmp_path, small_csv, monkeypatch):
    monkeypatch.setenv("SLCE_SEED", "11")
    assert run(tmp_path, "fit", "--data", small_csv, *FAST) == 0
    assert read(tmp_path, "config.json")["seed"] == 11
    assert run(tmp_path, "fit", "--data", small_csv, *FAST, "--seed", 3, out="o2") == 0
    assert read(tmp_path, "config.json", out="o2")["seed"] == 3


def test_bad_seed_environment(tmp_path, small_csv, monkeypatch):
    monkeypatch.setenv("SLCE_SEED", "abc")
    assert run(tmp_path, "fit", "--data", small_csv, *FAST) == 1


def test_stability_fixed_seed_is_perfect(tmp_path, small_csv):
    assert run(tmp_path, "stability", "--data", small_csv, *FAST, "--runs", 3, "--fixed-seed") == 0
    rep = read(tmp_path, "stability.json")
    assert rep["jaccard"] == 1.0 and rep["seeds"] == [0, 0, 0]


def test_stability_seeds_advance(tmp_path, small_csv):
    assert run(tmp_path, "stability", "--data", small_csv, *FAST, "--runs", 2, "--seed", 4) == 0
    rep = read(tmp_path, "stability.json")
    assert rep["seeds"] == [4, 5] and 0.0 <= rep["jaccard"] <= 1.0


def test_stability_needs_two_runs(tmp_path, small_csv, capsys):
    assert run(tmp_path, "stability", "--data", small_csv, *FAST, "--runs", 1) == 1
    assert "≥ 2 runs" in capsys.readouterr().err


def test_tune_writes_table(tmp_path, small_csv):
    assert run(tmp_path, "tune", "--data", small_csv, *FAST_FIT, "--grid", "0.1,0.4", "--repeats", 1) == 0
    res = read(tmp_path, "tune.json")
    assert res["chosen_lambda"] in (0.1, 0.4)
    lines = (tmp_path / "out" / "cv_table.csv").read_text().splitlines()
    assert lines[0] == "lambda,mean_accuracy,std_accuracy,mean_selected" and len(lines) == 3
    assert read(tmp_path, "config.json")["cell_init_seeds"] == [0, 1]


def test_evaluate_writes_rows(tmp_path, small_csv):
    args = ["--top-k", "3,20", "--repeats", 2, "--mlp-epochs", 10, "--mlp-hidden", 16]
    assert run(tmp_path, "evaluate", "--data", small_csv, *FAST, *args) == 0
    rows = read(tmp_path, "accuracy.json")["rows"]
    assert [r["k"] for r in rows] == [3, 20, "all"]
    assert rows[1]["accuracies"] == rows[2]["accuracies"]


def test_evaluate_rejects_large_k(tmp_path, small_csv):
    assert run(tmp_path, "evaluate", "--data", small_csv, *FAST, "--top-k", "21", "--repeats", 1) == 1


def test_embed_from_model_and_lists(tmp_path, small_csv):
    assert run(tmp_path, "fit", "--data", small_csv, *FAST, out="fit") == 0
    model = tmp_path / "fit" / "model.json"
    assert run(tmp_path, "embed", "--data", small_csv, "--model", model, "--components", 2) == 0
    header = (tmp_path / "out" / "pca.csv").read_text().splitlines()[0]
    selected = read(tmp_path, "features.json", out="fit")["selected"]
    n_axes = min(2, len(selected))
    assert header == "sample_id,split,label," + ",".join(f"c{i + 1}" for i in range(n_axes))
    info = read(tmp_path, "embed.json")
    assert info["features"] == sorted(selected)
    assert info["degenerate"] == (n_axes < 2)
    assert run(tmp_path, "embed", "--data", small_csv, "--features", "0,3,5", out="e2") == 0
    assert run(tmp_path, "embed", "--data", small_csv, "--all-features", out="e3") == 0
    assert len((tmp_path / "e3" / "pca.csv").read_text().splitlines()) == 41


def test_embed_bad_indices(tmp_path, small_csv):
    assert run(tmp_path, "embed", "--data", small_csv, "--features", "0,99") == 1
