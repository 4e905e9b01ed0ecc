"""Dataset model and file formats.

A dataset on disk is a manifest JSON plus one CSV per channel, a labels
CSV and a groups CSV:

* manifest: ``{"name", "num_groups", "channels": [...], "concat",
  "files": {"channels": {name: path}, "labels": path, "groups": path}}``.
  Channel entries carry ``{name, dim, kernel, bandwidth, feature_dim,
  approx, map_seed}``.  ``concat`` is ``"auto"``, an explicit channel
  object, or ``null``.  File paths are resolved relative to the manifest.
* channel CSV: header ``sample_id,v0,...,v{dim-1}``.  An empty cell is a
  missing value inside a present channel; a row with every value empty --
  or a sample id absent from the file -- means the channel is missing for
  that sample.
* labels CSV: ``sample_id,label`` with labels in {1, -1}.
* groups CSV: ``sample_id,group_id`` with ``0 <= group_id < num_groups``.

The labels file defines the sample universe and its order.  Samples with
every channel absent are rejected at load time.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

KERNEL_KINDS = ("linear", "rbf")
APPROX_KINDS = ("rff", "fastfood")


class DataError(Exception):
    """Malformed manifest, CSV contents, or config/data mismatch."""


@dataclass
class ChannelSpec:
    """Declaration of one kernel channel."""

    name: str
    dim: int
    kernel: str = "linear"
    bandwidth: float | None = None
    feature_dim: int | None = None
    approx: str | None = None
    map_seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise DataError(f"channel {self.name!r}: dim must be positive, got {self.dim}")
        if self.kernel not in KERNEL_KINDS:
            raise DataError(
                f"channel {self.name!r}: unknown kernel {self.kernel!r} "
                f"(expected one of {KERNEL_KINDS})"
            )
        if self.kernel == "linear":
            if self.feature_dim is None:
                self.feature_dim = self.dim
            if self.feature_dim != self.dim:
                raise DataError(
                    f"channel {self.name!r}: linear kernel requires feature_dim == dim"
                )
        else:
            if self.bandwidth is None or not self.bandwidth > 0:
                raise DataError(
                    f"channel {self.name!r}: rbf kernel requires a positive bandwidth"
                )
            if self.approx is None:
                self.approx = "rff"
            if self.approx not in APPROX_KINDS:
                raise DataError(
                    f"channel {self.name!r}: unknown approx {self.approx!r} "
                    f"(expected one of {APPROX_KINDS})"
                )
            if self.feature_dim is None or self.feature_dim < 2 or self.feature_dim % 2:
                raise DataError(
                    f"channel {self.name!r}: rbf feature_dim must be a positive even "
                    f"integer, got {self.feature_dim}"
                )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "kernel": self.kernel,
            "bandwidth": self.bandwidth,
            "feature_dim": self.feature_dim,
            "approx": self.approx,
            "map_seed": self.map_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSpec":
        known = {"name", "dim", "kernel", "bandwidth", "feature_dim", "approx", "map_seed"}
        extra = set(d) - known
        if extra:
            raise DataError(f"channel spec has unknown keys: {sorted(extra)}")
        if "name" not in d or "dim" not in d:
            raise DataError("channel spec requires at least 'name' and 'dim'")
        return cls(**d)


# Defaults used when a manifest declares ``"concat": "auto"``.
AUTO_CONCAT_FEATURE_DIM = 2048
AUTO_CONCAT_MAP_SEED = 0


def _auto_concat_spec(channels: list[ChannelSpec]) -> ChannelSpec:
    total = sum(c.dim for c in channels)
    return ChannelSpec(
        name="concat",
        dim=total,
        kernel="rbf",
        bandwidth=math.sqrt(total),
        feature_dim=AUTO_CONCAT_FEATURE_DIM,
        approx="rff",
        map_seed=AUTO_CONCAT_MAP_SEED,
    )


@dataclass
class DatasetManifest:
    name: str
    num_groups: int
    channels: list[ChannelSpec]
    concat: ChannelSpec | None
    channel_files: dict[str, str]
    labels_file: str
    groups_file: str
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        if self.num_groups < 1:
            raise DataError(f"num_groups must be positive, got {self.num_groups}")
        if not self.channels:
            raise DataError("manifest declares no channels")
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate channel names in manifest: {names}")
        if self.concat is not None and self.concat.name in names:
            raise DataError("concat channel name collides with a base channel")
        for c in self.channels:
            if c.name not in self.channel_files:
                raise DataError(f"manifest missing file entry for channel {c.name!r}")
        if self.concat is not None:
            total = sum(c.dim for c in self.channels)
            if self.concat.dim != total:
                raise DataError(
                    f"concat dim {self.concat.dim} != sum of channel dims {total}"
                )

    @property
    def all_channels(self) -> list[ChannelSpec]:
        """Base channels plus the concatenated channel when enabled."""
        if self.concat is None:
            return list(self.channels)
        return list(self.channels) + [self.concat]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_groups": self.num_groups,
            "channels": [c.to_dict() for c in self.channels],
            "concat": None if self.concat is None else self.concat.to_dict(),
            "files": {
                "channels": dict(self.channel_files),
                "labels": self.labels_file,
                "groups": self.groups_file,
            },
        }


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a manifest JSON file."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"manifest {path} is not valid JSON: {e}") from e
    for key in ("name", "num_groups", "channels", "files"):
        if key not in raw:
            raise DataError(f"manifest {path} missing required key {key!r}")
    files = raw["files"]
    for key in ("channels", "labels", "groups"):
        if key not in files:
            raise DataError(f"manifest {path} files section missing {key!r}")
    channels = [ChannelSpec.from_dict(c) for c in raw["channels"]]
    concat_raw = raw.get("concat")
    if concat_raw == "auto":
        concat = _auto_concat_spec(channels)
    elif concat_raw is None:
        concat = None
    elif isinstance(concat_raw, dict):
        concat = ChannelSpec.from_dict(concat_raw)
    else:
        raise DataError(f"manifest concat must be 'auto', an object or null")
    return DatasetManifest(
        name=raw["name"],
        num_groups=int(raw["num_groups"]),
        channels=channels,
        concat=concat,
        channel_files=dict(files["channels"]),
        labels_file=files["labels"],
        groups_file=files["groups"],
        root=path.parent,
    )


@dataclass
class MultiChannelSample:
    """One sample: optional raw vector per channel plus presence flags.

    ``present`` is the source of truth for channel availability; the
    contents of an absent channel's slot are never read.  NaN entries
    inside a present channel mark partially missing values.
    """

    sample_id: str
    label: int
    group_id: int
    channels: list
    present: list

    @classmethod
    def build(cls, sample_id, label, group_id, channels):
        present = [c is not None for c in channels]
        return cls(sample_id, label, group_id, channels, present)


@dataclass
class Dataset:
    manifest: DatasetManifest
    samples: list
    channel_means: list = None

    def __post_init__(self):
        if self.channel_means is None:
            self.channel_means = compute_channel_means(
                self.manifest, self.samples
            )

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.float64)

    @property
    def groups(self) -> np.ndarray:
        return np.array([s.group_id for s in self.samples], dtype=np.int64)


def compute_channel_means(manifest, samples) -> list:
    """Per-channel, per-coordinate means over present, unmasked entries.

    Coordinates with no observation at all fall back to 0.0 so imputation
    is always defined.
    """
    means = []
    for m, spec in enumerate(manifest.channels):
        total = np.zeros(spec.dim)
        count = np.zeros(spec.dim)
        for s in samples:
            if not s.present[m]:
                continue
            x = s.channels[m]
            ok = ~np.isnan(x)
            total[ok] += x[ok]
            count[ok] += 1
        mean = np.zeros(spec.dim)
        nz = count > 0
        mean[nz] = total[nz] / count[nz]
        means.append(mean)
    return means


def _read_csv(path: Path, what: str) -> pd.DataFrame:
    if not path.is_file():
        raise DataError(f"{what} file not found: {path}")
    try:
        return pd.read_csv(path, dtype={"sample_id": str},
                           float_precision="round_trip")
    except Exception as e:
        raise DataError(f"failed to parse {what} file {path}: {e}") from e


def load_dataset(manifest) -> Dataset:
    """Load the CSVs referenced by a manifest and join them on sample_id."""
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest)
    root = manifest.root

    labels_df = _read_csv(root / manifest.labels_file, "labels")
    if list(labels_df.columns) != ["sample_id", "label"]:
        raise DataError(
            f"labels file must have columns sample_id,label, got {list(labels_df.columns)}"
        )
    dup = labels_df["sample_id"].duplicated()
    if dup.any():
        raise DataError(
            f"duplicate sample_id in labels file: {labels_df['sample_id'][dup].iloc[0]!r}"
        )
    bad = ~labels_df["label"].isin([1, -1])
    if bad.any():
        row = labels_df[bad].iloc[0]
        raise DataError(
            f"label must be 1 or -1, got {row['label']!r} for sample {row['sample_id']!r}"
        )

    groups_df = _read_csv(root / manifest.groups_file, "groups")
    if list(groups_df.columns) != ["sample_id", "group_id"]:
        raise DataError(
            f"groups file must have columns sample_id,group_id, got {list(groups_df.columns)}"
        )
    if groups_df["sample_id"].duplicated().any():
        raise DataError("duplicate sample_id in groups file")
    group_of = dict(zip(groups_df["sample_id"], groups_df["group_id"]))

    channel_rows = []
    for spec in manifest.channels:
        path = root / manifest.channel_files[spec.name]
        df = _read_csv(path, f"channel {spec.name!r}")
        expected = ["sample_id"] + [f"v{i}" for i in range(spec.dim)]
        if list(df.columns) != expected:
            raise DataError(
                f"channel {spec.name!r} file {path} has columns {list(df.columns)}, "
                f"expected {expected}"
            )
        if df["sample_id"].duplicated().any():
            raise DataError(f"duplicate sample_id in channel {spec.name!r} file")
        values = df[expected[1:]].to_numpy(dtype=np.float64)
        channel_rows.append(dict(zip(df["sample_id"], values)))

    samples = []
    for sid, label in zip(labels_df["sample_id"], labels_df["label"]):
        if sid not in group_of:
            raise DataError(f"sample {sid!r} has no group assignment")
        gid = int(group_of[sid])
        if not 0 <= gid < manifest.num_groups:
            raise DataError(
                f"sample {sid!r}: group_id {gid} outside [0, {manifest.num_groups})"
            )
        channels = []
        for rows in channel_rows:
            x = rows.get(sid)
            if x is None or np.all(np.isnan(x)):
                channels.append(None)
            else:
                channels.append(x.copy())
        if not any(c is not None for c in channels):
            raise DataError(f"sample {sid!r} has every channel missing")
        samples.append(MultiChannelSample.build(sid, int(label), gid, channels))

    if not samples:
        raise DataError("dataset is empty")
    return Dataset(manifest=manifest, samples=samples)


def write_dataset(dataset: Dataset, out_dir) -> Path:
    """Write a dataset to ``out_dir`` in the manifest+CSV layout.

    Returns the manifest path.  Loading the result back yields identical
    samples, masks, labels and groups (floats round-trip via repr).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "channels").mkdir(exist_ok=True)
    manifest = dataset.manifest

    for m, spec in enumerate(manifest.channels):
        rows = []
        for s in dataset.samples:
            if s.present[m]:
                # repr gives the shortest round-tripping decimal; NaN cells
                # become empty strings (the partial-missing file encoding)
                cells = ["" if np.isnan(v) else repr(float(v)) for v in s.channels[m]]
                rows.append([s.sample_id] + cells)
        cols = ["sample_id"] + [f"v{i}" for i in range(spec.dim)]
        df = pd.DataFrame(rows, columns=cols, dtype=str)
        df.to_csv(out_dir / manifest.channel_files[spec.name], index=False)

    labels = pd.DataFrame(
        {"sample_id": [s.sample_id for s in dataset.samples],
         "label": [s.label for s in dataset.samples]}
    )
    labels.to_csv(out_dir / manifest.labels_file, index=False)
    groups = pd.DataFrame(
        {"sample_id": [s.sample_id for s in dataset.samples],
         "group_id": [s.group_id for s in dataset.samples]}
    )
    groups.to_csv(out_dir / manifest.groups_file, index=False)

    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
    return manifest_path


def split_dataset(dataset: Dataset, ratios, seed: int):
    """Deterministic shuffle-then-slice split into (train, val, test).

    Channel means are recomputed on the training portion and shared by all
    three splits, so downstream imputation never sees validation or test
    statistics.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise DataError(f"need 3 split ratios, got {len(ratios)}")
    if any(r <= 0 for r in ratios):
        raise DataError(f"split ratios must be positive, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {ratios}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(ratios[0] * n))
    n_val = int(math.floor(ratios[1] * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise DataError(
            f"split of {n} samples with ratios {ratios} leaves an empty part"
        )
    parts = (
        order[:n_train],
        order[n_train : n_train + n_val],
        order[n_train + n_val :],
    )
    train_samples = [dataset.samples[i] for i in parts[0]]
    means = compute_channel_means(dataset.manifest, train_samples)
    out = []
    for idx in parts:
        out.append(
            Dataset(
                manifest=dataset.manifest,
                samples=[dataset.samples[i] for i in idx],
                channel_means=[m.copy() for m in means],
            )
        )
    return tuple(out)


@dataclass
class ValidationReport:
    n: int
    n_pos: int
    n_neg: int
    channel_missing_rates: dict
    channel_partial_rates: dict
    group_counts: dict
    frac_any_missing: float
    warnings: list

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "channel_missing_rates": self.channel_missing_rates,
            "channel_partial_rates": self.channel_partial_rates,
            "group_counts": {str(k): v for k, v in self.group_counts.items()},
            "frac_any_missing": self.frac_any_missing,
            "warnings": self.warnings,
        }


def validate_dataset(dataset: Dataset) -> ValidationReport:
    """Summarize missingness, label balance and group coverage."""
    n = len(dataset)
    labels = dataset.labels
    n_pos = int(np.sum(labels == 1))
    n_neg = n - n_pos
    warnings = []
    if n_pos == 0 or n_neg == 0:
        warnings.append("labels contain a single class; AUROC/AUPRC are undefined")

    missing_rates = {}
    partial_rates = {}
    for m, spec in enumerate(dataset.manifest.channels):
        absent = 0
        masked = 0
        observed_cells = 0
        for s in dataset.samples:
            if not s.present[m]:
                absent += 1
            else:
                nan = int(np.sum(np.isnan(s.channels[m])))
                masked += nan
                observed_cells += spec.dim
        missing_rates[spec.name] = absent / n
        partial_rates[spec.name] = masked / observed_cells if observed_cells else 0.0
        if absent == n:
            warnings.append(f"channel {spec.name!r} is missing for every sample")

    any_missing = sum(1 for s in dataset.samples if not all(s.present)) / n
    group_counts = {}
    for s in dataset.samples:
        group_counts[s.group_id] = group_counts.get(s.group_id, 0) + 1
    return ValidationReport(
        n=n,
        n_pos=n_pos,
        n_neg=n_neg,
        channel_missing_rates=missing_rates,
        channel_partial_rates=partial_rates,
        group_counts=dict(sorted(group_counts.items())),
        frac_any_missing=any_missing,
        warnings=warnings,
    )
