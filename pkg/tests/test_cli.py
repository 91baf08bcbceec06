import json

import pytest

from hdsurvey.cli import main

FAST_HP = {"RandomForest": {"n_trees": 15}, "GradBoost": {"rounds": 20}}


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "dataset", "--n-neg", "700", "--n-pos", "400", "--n-features", "8",
                 "--signal", "0,1,2", "--strength", "0.8", "--seed", "3", "--out", str(d)]) == 0
    cfg = {"dataset": str(d / "synthetic.csv"), "schema": str(d / "synthetic_schema.json"),
           "seed": 5, "n_per_class": 300, "hyperparams": FAST_HP,
           "stability": {"iterations": 4, "k_select": 3}}
    (d / "config.json").write_text(json.dumps(cfg))
    return d


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_inspect_summary(synth_dir, capsys):
    code, out, _ = _run(["inspect", "--config", synth_dir / "config.json"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "1100 rows, 700 negative, 400 positive, 8 features"


def test_inspect_empty_and_malformed(tmp_path, synth_dir, capsys):
    header = (synth_dir / "synthetic.csv").read_text().splitlines()[0]
    empty = tmp_path / "empty.csv"
    empty.write_text(header + "\n")
    code, out, _ = _run(["inspect", "--data", empty, "--schema", synth_dir / "synthetic_schema.json"], capsys)
    assert code == 0 and out.startswith("0 rows")
    bad = tmp_path / "bad.csv"
    bad.write_text(header + "\n" + ",".join(["1", "oops"] + ["0"] * 7) + "\n")
    code, _, err = _run(["inspect", "--data", bad, "--schema", synth_dir / "synthetic_schema.json"], capsys)
    assert code == 2 and "column 'x00'" in err


def test_missing_dataset_and_bad_config(tmp_path, capsys):
    code, _, err = _run(["inspect"], capsys)
    assert code == 2 and "no dataset" in err
    cfg = tmp_path / "c.json"
    cfg.write_text('{"seeed": 1}')
    code, _, err = _run(["inspect", "--config", cfg], capsys)
    assert code == 2 and "seeed" in err


def test_infeasible_population_exits_1(synth_dir, tmp_path, capsys):
    code, _, err = _run(["stability", "--config", synth_dir / "config.json", "--n-per-class", "500",
                         "--out", tmp_path], capsys)
    assert code == 1 and "positive class has only 400" in err


def test_stability_outputs_and_manifest_rerun(synth_dir, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    code, stdout, _ = _run(["stability", "--config", synth_dir / "config.json", "--out", out1], capsys)
    assert code == 0 and "consensus top:" in stdout
    freq = (out1 / "stability_frequencies.csv").read_text().splitlines()
    assert len(freq) == 6 and len(freq[0].split(",")) == 9  # 5 models x 8 features
    manifest = json.loads((out1 / "manifest_stability.json").read_text())
    assert manifest["counting_identity"] == "ok"
    assert set(manifest["outputs"]) == {"stability_frequencies.csv", "stability_consensus.csv", "stability_seeds.csv"}
    code, _, _ = _run(["stability", "--config", out1 / "manifest_stability.json", "--out", out2], capsys)
    assert code == 0
    for name in manifest["outputs"]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_baseline_identity_selection_and_single_model(synth_dir, tmp_path, capsys):
    all_feats = ",".join(f"x{j:02d}" for j in range(8))
    code, _, _ = _run(["baseline", "--config", synth_dir / "config.json", "--features", all_feats,
                       "--out", tmp_path], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "table1.json").read_text())
    assert len(doc["rows"]) == 7
    for row in doc["rows"]:
        assert row["before"] == row["after"]
    code, _, _ = _run(["baseline", "--config", synth_dir / "config.json", "--models", "LogReg",
                       "--out", tmp_path / "one"], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "one" / "table1.json").read_text())
    assert [r["model"] for r in doc["rows"]] == ["LogReg"]


def test_balanced_is_deterministic_and_planted_retains_accuracy(synth_dir, tmp_path, capsys):
    args = ["balanced", "--config", synth_dir / "config.json", "--features", "x00,x01,x02"]
    assert _run(args + ["--out", tmp_path / "a"], capsys)[0] == 0
    assert _run(args + ["--out", tmp_path / "b"], capsys)[0] == 0
    for name in ("table2.txt", "table2.csv", "table2.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    doc = json.loads((tmp_path / "a" / "table2.json").read_text())
    assert doc["train_rows"] + doc["test_rows"] == 600
    for row in doc["rows"]:
        if row["model"] in ("LogReg", "LinearSVM", "GaussianNB"):
            assert abs(row["before"]["accuracy"] - row["after"]["accuracy"]) <= 0.02, row


def test_balanced_runs_stability_when_no_features_given(synth_dir, tmp_path, capsys):
    code, stdout, _ = _run(["balanced", "--config", synth_dir / "config.json", "--models", "LogReg",
                            "--out", tmp_path], capsys)
    assert code == 0
    assert (tmp_path / "stability_consensus.csv").is_file()
    selected = stdout.strip().splitlines()[-1]
    assert sorted(selected.removeprefix("selected: ").split(", ")) == ["x00", "x01", "x02"]


def test_reduce_time(tmp_path, capsys):
    assert _run(["synth", "times", "--family", "triangular", "--params", "3.5,6.4,6.4", "--n", "2000",
                 "--seed", "1", "--out", tmp_path], capsys)[0] == 0
    assert _run(["synth", "times", "--family", "logistic", "--params", "1.19,0.019", "--n", "2000",
                 "--seed", "2", "--out", tmp_path], capsys)[0] == 0
    before, after = tmp_path / "times_triangular.csv", tmp_path / "times_logistic.csv"
    code, stdout, _ = _run(["reduce-time", before, after, "--out", tmp_path / "r"], capsys)
    assert code == 0 and "Survey time reduction" in stdout
    doc = json.loads((tmp_path / "r" / "table3.json").read_text())
    assert doc["before"]["winner"] == "triangular" and doc["after"]["winner"] == "logistic"
    assert abs(doc["reduction_percent"] - 78.0) <= 0.5
    code, _, _ = _run(["reduce-time", before, before, "--out", tmp_path / "same"], capsys)
    assert code == 0
    assert json.loads((tmp_path / "same" / "table3.json").read_text())["reduction_percent"] == 0.0
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code, _, err = _run(["reduce-time", empty, after, "--out", tmp_path / "e"], capsys)
    assert code == 2 and "empty.csv" in err


def test_unknown_model_is_input_error(synth_dir, tmp_path, capsys):
    code, _, err = _run(["baseline", "--config", synth_dir / "config.json", "--models", "Perceptron",
                         "--out", tmp_path], capsys)
    assert code == 2 and "Perceptron" in err
