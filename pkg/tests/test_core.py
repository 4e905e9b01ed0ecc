import json

import numpy as np
import pytest

from samkl.core import (
    ChannelSpec,
    DataError,
    Dataset,
    DatasetManifest,
    MultiChannelSample,
    compute_channel_means,
    load_dataset,
    load_manifest,
    split_dataset,
    validate_dataset,
    write_dataset,
)
from conftest import make_dataset, make_manifest


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


def _manifest_dict(num_channels=3, dim=2, concat=None):
    return {
        "name": "m",
        "num_groups": 2,
        "channels": [
            {"name": f"c{i}", "dim": dim, "kernel": "linear"}
            for i in range(num_channels)
        ],
        "concat": concat,
        "files": {
            "channels": {f"c{i}": f"channels/c{i}.csv" for i in range(num_channels)},
            "labels": "labels.csv",
            "groups": "groups.csv",
        },
    }


def test_auto_concat_totals_17_channels(tmp_path):
    d = _manifest_dict(num_channels=16, dim=3, concat="auto")
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(d))
    m = load_manifest(path)
    assert len(m.all_channels) == 17
    assert m.concat.dim == 16 * 3
    assert m.concat.kernel == "rbf"


def test_single_channel_no_concat(tmp_path):
    d = _manifest_dict(num_channels=1)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(d))
    m = load_manifest(path)
    assert len(m.all_channels) == 1 and m.concat is None


def test_duplicate_channel_names_rejected(tmp_path):
    d = _manifest_dict(num_channels=2)
    d["channels"][1]["name"] = "c0"
    d["files"]["channels"] = {"c0": "channels/c0.csv"}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(d))
    with pytest.raises(DataError, match="duplicate"):
        load_manifest(path)


def test_weather_weather_collision():
    specs = [
        ChannelSpec(name="weather", dim=2, kernel="linear"),
        ChannelSpec(name="weather", dim=3, kernel="linear"),
    ]
    with pytest.raises(DataError):
        DatasetManifest(
            name="x", num_groups=1, channels=specs, concat=None,
            channel_files={"weather": "w.csv"},
            labels_file="l.csv", groups_file="g.csv",
        )


def test_nonpositive_dim_rejected():
    with pytest.raises(Exception):
        ChannelSpec(name="c", dim=0, kernel="linear")


def test_bad_json_and_missing_file(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{not json")
    with pytest.raises(DataError, match="JSON"):
        load_manifest(path)
    with pytest.raises(DataError, match="not found"):
        load_manifest(tmp_path / "nope.json")


def test_concat_dim_mismatch_rejected(tmp_path):
    d = _manifest_dict(num_channels=2, dim=3)
    d["concat"] = {"name": "concat", "dim": 5, "kernel": "rbf",
                   "bandwidth": 1.0, "feature_dim": 8}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(d))
    with pytest.raises(DataError, match="concat dim"):
        load_manifest(path)


# ---------------------------------------------------------------------------
# loading CSVs
# ---------------------------------------------------------------------------


def _write_toy_files(tmp_path, channel_rows, labels, groups, num_channels=2,
                     dim=2, num_groups=3):
    (tmp_path / "channels").mkdir(exist_ok=True)
    d = _manifest_dict(num_channels=num_channels, dim=dim)
    d["num_groups"] = num_groups
    for i in range(num_channels):
        header = "sample_id," + ",".join(f"v{j}" for j in range(dim))
        rows = channel_rows.get(f"c{i}", [])
        (tmp_path / "channels" / f"c{i}.csv").write_text(
            "\n".join([header] + rows) + "\n"
        )
    (tmp_path / "labels.csv").write_text(
        "\n".join(["sample_id,label"] + labels) + "\n"
    )
    (tmp_path / "groups.csv").write_text(
        "\n".join(["sample_id,group_id"] + groups) + "\n"
    )
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(d))
    return path


def test_load_join_semantics(tmp_path):
    """A sample absent from a channel file misses that channel; a row
    with some empty cells is present with a NaN mask."""
    path = _write_toy_files(
        tmp_path,
        channel_rows={
            "c0": ["a,1,2", "b,3,4"],
            "c1": ["a,5,", "c,9,9"],  # b missing entirely, a partially masked
        },
        labels=["a,1", "b,-1", "c,1"],
        groups=["a,0", "b,1", "c,2"],
    )
    ds = load_dataset(path)
    by_id = {s.sample_id: s for s in ds.samples}
    assert by_id["b"].present == [True, False]
    a1 = by_id["a"].channels[1]
    assert a1[0] == 5.0 and np.isnan(a1[1])
    assert by_id["a"].present == [True, True]


def test_all_empty_row_means_absent(tmp_path):
    path = _write_toy_files(
        tmp_path,
        channel_rows={"c0": ["a,1,2", "b,,"], "c1": ["a,1,1", "b,2,2"]},
        labels=["a,1", "b,-1"],
        groups=["a,0", "b,0"],
    )
    ds = load_dataset(path)
    by_id = {s.sample_id: s for s in ds.samples}
    assert by_id["b"].present == [False, True]


def test_bad_label_rejected(tmp_path):
    path = _write_toy_files(
        tmp_path,
        channel_rows={"c0": ["a,1,2"], "c1": ["a,1,1"]},
        labels=["a,2"],
        groups=["a,0"],
    )
    with pytest.raises(DataError, match="label"):
        load_dataset(path)


def test_group_out_of_range_rejected(tmp_path):
    path = _write_toy_files(
        tmp_path,
        channel_rows={"c0": ["a,1,2"], "c1": ["a,1,1"]},
        labels=["a,1"],
        groups=["a,7"],
        num_groups=3,
    )
    with pytest.raises(DataError, match="group_id"):
        load_dataset(path)


def test_wrong_column_count_rejected(tmp_path):
    path = _write_toy_files(
        tmp_path,
        channel_rows={"c0": ["a,1,2"], "c1": ["a,1,1"]},
        labels=["a,1"],
        groups=["a,0"],
    )
    bad = tmp_path / "channels" / "c0.csv"
    bad.write_text("sample_id,v0,v1,v2\na,1,2,3\n")
    with pytest.raises(DataError, match="columns"):
        load_dataset(path)


def test_sample_with_every_channel_missing_rejected(tmp_path):
    path = _write_toy_files(
        tmp_path,
        channel_rows={"c0": ["a,1,2"], "c1": ["a,1,1"]},
        labels=["a,1", "b,-1"],
        groups=["a,0", "b,0"],
    )
    with pytest.raises(DataError, match="every channel missing"):
        load_dataset(path)


# ---------------------------------------------------------------------------
# write / reload round trip
# ---------------------------------------------------------------------------


def test_write_reload_roundtrip(tmp_path):
    ds = make_dataset(n=25, missing=0.4, seed=9)
    # sprinkle a partial mask into one present channel
    smp = next(s for s in ds.samples if s.present[0])
    smp.channels[0][1] = np.nan
    manifest_path = write_dataset(ds, tmp_path / "out")
    back = load_dataset(manifest_path)
    assert len(back) == len(ds)
    for a, b in zip(ds.samples, back.samples):
        assert a.sample_id == b.sample_id
        assert a.label == b.label and a.group_id == b.group_id
        assert a.present == b.present
        for ca, cb, pres in zip(a.channels, b.channels, a.present):
            if pres:
                assert np.array_equal(ca, cb, equal_nan=True)


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------


def test_split_sizes_and_determinism():
    ds = make_dataset(n=100, seed=1)
    tr, va, te = split_dataset(ds, (0.6, 0.2, 0.2), seed=7)
    assert (len(tr), len(va), len(te)) == (60, 20, 20)
    tr2, va2, te2 = split_dataset(ds, (0.6, 0.2, 0.2), seed=7)
    assert [s.sample_id for s in tr.samples] == [s.sample_id for s in tr2.samples]
    assert [s.sample_id for s in te.samples] == [s.sample_id for s in te2.samples]


def test_split_partitions_input():
    ds = make_dataset(n=53, seed=2)
    tr, va, te = split_dataset(ds, (0.6, 0.2, 0.2), seed=3)
    ids = [s.sample_id for part in (tr, va, te) for s in part.samples]
    assert sorted(ids) == sorted(s.sample_id for s in ds.samples)
    assert len(set(ids)) == len(ids)


def test_split_means_come_from_train_only():
    ds = make_dataset(n=80, missing=0.2, seed=4)
    tr, va, te = split_dataset(ds, (0.6, 0.2, 0.2), seed=5)
    expected = compute_channel_means(ds.manifest, tr.samples)
    for part in (tr, va, te):
        for a, b in zip(part.channel_means, expected):
            assert np.array_equal(a, b)


def test_split_empty_part_rejected():
    ds = make_dataset(n=30, seed=6)
    with pytest.raises(DataError):
        split_dataset(ds, (0.8, 0.0, 0.2), seed=0)
    with pytest.raises(DataError):
        split_dataset(ds, (0.5, 0.2, 0.2), seed=0)


# ---------------------------------------------------------------------------
# validation report
# ---------------------------------------------------------------------------


def test_validate_no_missing():
    ds = make_dataset(n=20, missing=0.0, seed=8)
    rep = validate_dataset(ds)
    assert all(v == 0.0 for v in rep.channel_missing_rates.values())
    assert rep.frac_any_missing == 0.0


def test_validate_reports_dropout_rate():
    rng = np.random.default_rng(0)
    manifest = make_manifest(dims=(2, 2, 2), num_groups=2)
    samples = []
    for i in range(400):
        drop = rng.random() < 0.25
        chans = [rng.standard_normal(2),
                 None if drop else rng.standard_normal(2),
                 rng.standard_normal(2)]
        samples.append(MultiChannelSample.build(
            f"s{i}", 1 if i % 2 else -1, i % 2, chans))
    rep = validate_dataset(Dataset(manifest=manifest, samples=samples))
    assert abs(rep.channel_missing_rates["ch1"] - 0.25) < 0.06
    assert rep.channel_missing_rates["ch0"] == 0.0


def test_validate_single_class_warning():
    manifest = make_manifest(dims=(2,), num_groups=1)
    samples = [
        MultiChannelSample.build(f"s{i}", 1, 0, [np.ones(2)]) for i in range(5)
    ]
    rep = validate_dataset(Dataset(manifest=manifest, samples=samples))
    assert any("single class" in w for w in rep.warnings)
    assert rep.n_pos == 5 and rep.n_neg == 0
