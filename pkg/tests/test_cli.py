import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from samkl.cli import build_parser, main
from samkl.core import load_dataset
from samkl.trainer import TrainConfig, load_model

GEN_CFG = {
    "n_samples": 240,
    "s": 4,
    "num_groups": 3,
    "dims": [5, 5, 5, 5],
    "concat_feature_dim": 64,
    "seed": 9,
}


def _write_cfg(tmp_path, **overrides) -> Path:
    cfg = dict(GEN_CFG, **overrides)
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(cfg))
    return path


def _gen(tmp_path, capsys, name="data", **overrides) -> Path:
    cfg = _write_cfg(tmp_path, **overrides)
    out = tmp_path / name
    assert main(["gen", "--config", str(cfg), "--out", str(out)]) == 0
    return Path(capsys.readouterr().out.strip().splitlines()[-1])


def _tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def test_gen_missing_config_is_usage_error(tmp_path, capsys):
    rc = main(["gen", "--config", str(tmp_path / "nope.json"),
               "--out", str(tmp_path / "d")])
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


def test_gen_bad_json_is_data_error(tmp_path, capsys):
    cfg = tmp_path / "gen.json"
    cfg.write_text("{not json")
    rc = main(["gen", "--config", str(cfg), "--out", str(tmp_path / "d")])
    assert rc == 3
    assert "error:" in capsys.readouterr().err


def test_gen_writes_loadable_dataset_and_truth(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys)
    ds = load_dataset(manifest_path)
    assert len(ds) == 240 and len(ds.manifest.channels) == 4
    truth = json.loads((manifest_path.parent / "truth.json").read_text())
    assert truth["format"] == "samkl-truth"
    assert truth["config"]["seed"] == 9


def test_gen_seed_flag_overrides_config(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys, seed=9)
    out2 = tmp_path / "data2"
    cfg = tmp_path / "gen.json"
    assert main(["gen", "--config", str(cfg), "--out", str(out2),
                 "--seed", "77"]) == 0
    capsys.readouterr()
    truth = json.loads((out2 / "truth.json").read_text())
    assert truth["config"]["seed"] == 77
    a = load_dataset(manifest_path)
    b = load_dataset(out2 / "manifest.json")
    assert [s.label for s in a.samples] != [s.label for s in b.samples]


def test_gen_same_seed_is_byte_identical(tmp_path, capsys):
    a = _gen(tmp_path, capsys, name="a").parent
    b = _gen(tmp_path, capsys, name="b").parent
    ta, tb = _tree_bytes(a), _tree_bytes(b)
    assert sorted(ta) == sorted(tb)
    for rel in ta:
        assert ta[rel] == tb[rel], rel


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def test_train_parser_defaults_mirror_train_config():
    args = build_parser().parse_args(
        ["train", "--data", "d", "--mode", "samkl", "--out", "m"]
    )
    tc = TrainConfig()
    assert args.epochs == tc.epochs == 50
    assert args.batch_size == tc.batch_size == 256
    assert args.lr == tc.lr == 1e-4
    assert (args.c1, args.c2, args.c3) == (tc.c1, tc.c2, tc.c3)
    assert args.p == tc.p_norm and args.outer_rounds == tc.outer_rounds


def test_train_fill_rejected_for_adaptive_modes(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys)
    rc = main(["train", "--data", str(manifest_path), "--mode", "samkl",
               "--out", str(tmp_path / "m.json"), "--fill", "zero"])
    assert rc == 2
    assert "--fill" in capsys.readouterr().err


def test_train_missing_data_is_data_error(tmp_path, capsys):
    rc = main(["train", "--data", str(tmp_path / "nope.json"),
               "--mode", "samkl", "--out", str(tmp_path / "m.json")])
    assert rc == 3
    assert "error:" in capsys.readouterr().err


def test_train_zero_epochs_saves_init_model(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys)
    model_path = tmp_path / "m.json"
    rc = main(["train", "--data", str(manifest_path), "--mode", "samkl",
               "--out", str(model_path), "--epochs", "0",
               "--batch-size", "48"])
    assert rc == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == str(model_path)
    model = load_model(model_path)
    assert model.mode == "samkl"
    assert all(not w.any() for w in model.omegas) and model.b == 0.0
    assert np.array_equal(model.A, np.ones_like(model.A))
    assert model.train_config["epochs"] == 0
    assert model.train_config["split"] == {"ratios": [0.6, 0.2, 0.2], "seed": 0}


def test_train_logs_progress_lines(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys)
    log = tmp_path / "log.txt"
    rc = main(["train", "--data", str(manifest_path), "--mode", "mamkl",
               "--out", str(tmp_path / "m.json"), "--epochs", "2",
               "--batch-size", "48", "--lr", "0.01", "--log", str(log)])
    assert rc == 0
    lines = log.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("epoch=0 objective=")
    assert "val_auroc=" in lines[1]


def test_train_same_seed_same_model_file(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys)
    for name in ("m1.json", "m2.json"):
        assert main(["train", "--data", str(manifest_path), "--mode", "samkl",
                     "--out", str(tmp_path / name), "--epochs", "3",
                     "--batch-size", "48", "--lr", "0.01", "--seed", "5"]) == 0
    capsys.readouterr()
    assert filecmp.cmp(tmp_path / "m1.json", tmp_path / "m2.json", shallow=False)


def test_train_lp_baseline_mode(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys)
    model_path = tmp_path / "lp.json"
    rc = main(["train", "--data", str(manifest_path), "--mode", "lp-mf",
               "--out", str(model_path), "--epochs", "4", "--lr", "0.01",
               "--batch-size", "48", "--p", "2.0"])
    assert rc == 0
    model = load_model(model_path)
    assert model.mode == "fixed"
    assert model.train_config["mode"] == "lp-mf"
    assert abs(np.linalg.norm(model.eta_fixed, ord=2.0) - 1.0) <= 1e-9


# ---------------------------------------------------------------------------
# eval / predict
# ---------------------------------------------------------------------------


@pytest.fixture
def trained(tmp_path, capsys):
    manifest_path = _gen(tmp_path, capsys)
    model_path = tmp_path / "m.json"
    assert main(["train", "--data", str(manifest_path), "--mode", "samkl",
                 "--out", str(model_path), "--epochs", "8",
                 "--batch-size", "48", "--lr", "0.01"]) == 0
    capsys.readouterr()
    return manifest_path, model_path


def test_eval_reports_metrics(trained, tmp_path, capsys):
    manifest_path, model_path = trained
    out = tmp_path / "metrics.json"
    rc = main(["eval", "--model", str(model_path), "--data", str(manifest_path),
               "--part", "train", "--out", str(out)])
    assert rc == 0
    metrics = json.loads(out.read_text())
    assert 0.5 < metrics["auroc"] <= 1.0
    assert 0.0 < metrics["auprc"] <= 1.0
    assert set(metrics["eta_stats"]) == {"ch0", "ch1", "ch2", "ch3", "concat"}


def test_eval_stdout_when_no_out(trained, capsys):
    manifest_path, model_path = trained
    rc = main(["eval", "--model", str(model_path), "--data", str(manifest_path)])
    assert rc == 0
    metrics = json.loads(capsys.readouterr().out)
    assert "auroc" in metrics


def test_eval_missing_data_is_data_error(trained, tmp_path, capsys):
    _, model_path = trained
    rc = main(["eval", "--model", str(model_path),
               "--data", str(tmp_path / "nope" / "manifest.json")])
    assert rc == 3


def test_predict_covers_requested_part(trained, tmp_path, capsys):
    manifest_path, model_path = trained
    out = tmp_path / "scores.csv"
    rc = main(["predict", "--model", str(model_path),
               "--data", str(manifest_path), "--part", "all",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "sample_id,score"
    assert len(lines) == 1 + 240
    sid, score = lines[1].split(",")
    assert sid.startswith("s") and np.isfinite(float(score))


def test_predict_part_sizes_follow_recorded_split(trained, tmp_path, capsys):
    manifest_path, model_path = trained
    sizes = {}
    for part in ("train", "val", "test"):
        rc = main(["predict", "--model", str(model_path),
                   "--data", str(manifest_path), "--part", part])
        assert rc == 0
        sizes[part] = len(capsys.readouterr().out.strip().splitlines()) - 1
    assert sizes == {"train": 144, "val": 48, "test": 48}


# ---------------------------------------------------------------------------
# featurize / gradcheck
# ---------------------------------------------------------------------------


def test_featurize_subcommand(fixture_sources, tmp_path, capsys):
    out = tmp_path / "weekly"
    rc = main(["featurize", "--sources", str(fixture_sources),
               "--start", "1970-01-05", "--end", "1970-01-26",
               "--out", str(out)])
    assert rc == 0
    manifest_path = Path(capsys.readouterr().out.strip())
    ds = load_dataset(manifest_path)
    assert len(ds.manifest.channels) == 16 and len(ds) == 4


def test_featurize_kinds_override(fixture_sources, tmp_path, capsys):
    out = tmp_path / "weekly"
    rc = main(["featurize", "--sources", str(fixture_sources),
               "--start", "1970-01-05", "--end", "1970-01-26",
               "--out", str(out), "--kinds", "move"])
    assert rc == 0
    capsys.readouterr()
    ds = load_dataset(out / "manifest.json")
    assert ds.manifest.channels[2].dim == 6  # one kind, six stats


def test_gradcheck_passes(capsys):
    rc = main(["gradcheck", "--instances", "2", "--psd-instances", "5",
               "--n", "24", "--s", "3", "--k", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "psd: 5/5" in out
