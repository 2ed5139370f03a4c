import csv
import json
import math

import numpy as np
import pytest
import yaml

from antijam.cli import compare_reports, main, sc1_model_path
from antijam.config import PRESETS, ConfigError, ExperimentConfig, dump_config, from_dict, load_config
from antijam.neural import GruModel
from antijam.report import RunLog, read_csv, write_csv

SC1_TINY = {
    "scenario": "sc1", "name": "tiny1", "seed": 3,
    "network": {"num_channels": 6},
    "jammers": {"classes": [["sweeping", 2], ["reactive", 1], ["random", 1]]},
    "train": {"window": 5, "hidden": 8, "epochs": 2, "slots": 20, "episodes": 1, "noisy_episodes": 1,
              "batch_size": 16},
    "eval": {"slots": 15, "repetitions": 2, "methods": ["proposed", "dql"], "bucket": 5},
}
SC2_TINY = {
    "scenario": "sc2", "name": "tiny2", "seed": 4,
    "network": {"num_channels": 10, "num_users": 2},
    "jammers": {"presets": ["jr30"]},
    "train": {"window": 5, "hidden": 8, "epochs": 2, "slots": 20, "episodes": 2, "batch_size": 16},
    "eval": {"slots": 12, "repetitions": 2, "methods": ["proposed", "dql"], "bucket": 4},
    "analytic": {"jammed": [6], "mc_trials": 0},
}


def write_cfg(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def run(*argv):
    return main([str(a) for a in argv])


# -- configuration ------------------------------------------------------------------------------

@pytest.mark.parametrize("preset", PRESETS)
def test_presets_load(preset):
    cfg = load_config(preset=preset)
    assert cfg.train.window == 20 and cfg.fading.shape == 1.0
    assert cfg.network.num_channels == {"sc1": 12, "sc2": 20}[cfg.scenario]


def test_config_rejects_unknown_and_invalid():
    with pytest.raises(ConfigError, match="unknown keys"):
        from_dict({"scenario": "sc1", "network": {"channels": 3}})
    with pytest.raises(ConfigError):
        from_dict({"scenario": "sc3"})
    with pytest.raises(ConfigError):
        from_dict({"scenario": "sc2", "jammers": {"presets": ["jr90"]}})
    with pytest.raises(ConfigError):
        from_dict({"scenario": "sc2", "network": {"num_channels": 10}, "jammers": {"presets": ["jr70"]}})
    with pytest.raises(ConfigError):
        load_config(preset="fig99")


def test_file_overlays_preset_and_seed_override(tmp_path):
    path = write_cfg(tmp_path, {"eval": {"slots": 7}})
    cfg = load_config(path, "fig7", {"seed": 11})
    assert cfg.eval.slots == 7 and cfg.eval.repetitions == 20 and cfg.seed == 11
    assert cfg.jammers.presets == ["jr30", "jr40", "jr50", "jr60", "jr70"]


def test_config_dump_round_trip():
    cfg = load_config(preset="fig8")
    again = from_dict(yaml.safe_load(dump_config(cfg)))
    assert again == cfg


def test_config_converters():
    cfg = from_dict(SC1_TINY)
    assert cfg.sc1_config().num_channels == 6 and cfg.sc1_training().noisy_episodes_per_class == 1
    assert cfg.eval_classes() == [("sweeping", 2), ("reactive", 1), ("random", 1)]
    assert isinstance(cfg, ExperimentConfig)


# -- report helpers ------------------------------------------------------------------------------

def test_csv_keeps_full_precision(tmp_path):
    x = 0.1 + 0.2
    write_csv(tmp_path / "t.csv", [{"a": x, "b": np.int64(3)}], ("a", "b"))
    row = read_csv(tmp_path / "t.csv")[0]
    assert float(row["a"]) == x and row["b"] == "3"


def test_runlog_lines_are_json(tmp_path):
    with RunLog(tmp_path / "log.jsonl") as log:
        log.event("a", value=np.float64(1.5))
        log.event("b", n=np.int64(2))
    recs = [json.loads(line) for line in (tmp_path / "log.jsonl").read_text().splitlines()]
    assert [r["event"] for r in recs] == ["a", "b"] and recs[0]["value"] == 1.5


# -- subcommands -----------------------------------------------------------------------------------

def test_missing_config_and_dataset_are_config_errors(tmp_path, capsys):
    assert run("gen-data", "--out", tmp_path) == 2
    path = write_cfg(tmp_path, SC1_TINY)
    assert run("train", "--config", path, "--out", tmp_path / "r") == 2
    assert "sc1.csv" in capsys.readouterr().err
    assert run("eval", "--config", path, "--out", tmp_path / "r") == 2


def test_bad_scenario_exit_code(tmp_path):
    assert run("gen-data", "--config", write_cfg(tmp_path, {"scenario": "sc9"}), "--out", tmp_path) == 2


def test_gen_data_is_byte_identical(tmp_path):
    path = write_cfg(tmp_path, SC1_TINY)
    for d in ("a", "b"):
        assert run("gen-data", "--config", path, "--out", tmp_path / d) == 0
    a, b = (tmp_path / d / "data" / "sc1.csv" for d in ("a", "b"))
    assert a.read_bytes() == b.read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    counts = manifest["result"]["files"]["data/sc1.csv"]["episodes_per_class"]
    assert len(counts) == 13 and len(set(counts)) == 1
    assert "numpy" in manifest["versions"]


def test_sc2_gen_data_files(tmp_path):
    path = write_cfg(tmp_path, SC2_TINY)
    assert run("gen-data", "--config", path, "--out", tmp_path) == 0
    for k in range(2):
        with open(tmp_path / "data" / f"sc2_jr30_nif_u{k}.csv") as fh:
            head = next(csv.reader(fh))
        assert len(head) == 1 + 3 * 10


@pytest.fixture(scope="module")
def sc1_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("sc1run")
    path = write_cfg(root, SC1_TINY)
    assert run("run", "--config", path, "--out", root / "r", "--no-plots") == 0
    return root, path


def test_train_writes_finite_loss_and_reproducible_checkpoint(sc1_run, tmp_path):
    root, path = sc1_run
    with open(root / "r" / "models" / "loss_sc1.csv") as fh:
        losses = [float(r["loss"]) for r in csv.DictReader(fh)]
    assert losses and all(math.isfinite(v) for v in losses)
    assert run("gen-data", "--config", path, "--out", tmp_path) == 0
    assert run("train", "--config", path, "--out", tmp_path) == 0
    a, _ = GruModel.load(sc1_model_path(root / "r"))
    b, _ = GruModel.load(sc1_model_path(tmp_path))
    assert all(np.array_equal(v, b.params()[k]) for k, v in a.params().items())


def test_eval_is_deterministic_and_complete(sc1_run):
    root, path = sc1_run
    first = (root / "r" / "traces.csv").read_bytes()
    assert run("eval", "--config", root / "r" / "config.yaml", "--out", root / "r", "--no-plots") == 0
    assert (root / "r" / "traces.csv").read_bytes() == first
    rows = read_csv(root / "r" / "traces.csv")
    assert len(rows) == 2 * 3 * 2 * 15  # methods x cases x repetitions x slots
    summary = read_csv(root / "r" / "summary.csv")
    assert {r["metric"] for r in summary} >= {"str", "accuracy", "er"}


def test_eval_rejects_mismatched_checkpoint(sc1_run, tmp_path, capsys):
    root, _ = sc1_run
    wider = dict(SC1_TINY, network={"num_channels": 7})
    (tmp_path / "models").mkdir()
    (tmp_path / "models" / "sc1.npz").write_bytes(sc1_model_path(root / "r").read_bytes())
    assert run("eval", "--config", write_cfg(tmp_path, wider), "--out", tmp_path) == 2
    assert "does not match" in capsys.readouterr().err


def test_sc2_run_with_plots(tmp_path):
    path = write_cfg(tmp_path, SC2_TINY)
    assert run("run", "--config", path, "--out", tmp_path / "r") == 0
    assert (tmp_path / "r" / "jammers.csv").exists() and (tmp_path / "r" / "str.png").exists()
    metrics = {r["metric"] for r in read_csv(tmp_path / "r" / "summary.csv")}
    assert {"er_ratio", "jammer_reactive"} <= metrics


def test_compare(sc1_run, tmp_path):
    root, _ = sc1_run
    merged, fields = compare_reports([root / "r"])
    assert set(fields) == {"case", "metric", "slot", "proposed", "dql", "analytic"}
    assert len(merged) == len({(r["case"], r["metric"], r["slot"]) for r in read_csv(root / "r" / "summary.csv")})
    merged, fields = compare_reports([root / "r", root / "r" / "summary.csv"])
    assert "r:proposed" in fields
    other = tmp_path / "other"
    other.mkdir()
    (other / "summary.csv").write_bytes((root / "r" / "summary.csv").read_bytes())
    (other / "config.yaml").write_text(dump_config(from_dict(dict(SC1_TINY, network={"num_channels": 8}))))
    assert run("compare", root / "r", other, "--out", tmp_path / "cmp") == 2
    assert run("compare", root / "r", "--out", tmp_path / "cmp") == 0
    assert (tmp_path / "cmp" / "comparison.csv").exists()


def test_analytic_subcommand(tmp_path):
    cfg = {"scenario": "analytic", "network": {"num_channels": 8},
           "analytic": {"shapes": [1.0, 2.0], "snrs": [10.0], "jammed": [0, 4, 8], "mc_trials": 2000}}
    assert run("analytic", "--config", write_cfg(tmp_path, cfg), "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "analytic.csv")
    assert len(rows) == 6 and (tmp_path / "analytic.png").exists()
    full = [r for r in rows if r["jammed"] == "8"]
    assert all(float(r["er_max"]) == 0.0 and r["mc_max"] == "" for r in full)


def test_selftest(capsys):
    assert run("selftest") == 0
    assert "PASS" in capsys.readouterr().out
