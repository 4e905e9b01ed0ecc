"""Event-log featurization and synthetic benchmark generation.

Weekly aggregation builds one sample per (asset, calendar week i):

* movement statistics from week i, split into 7 weekday channels;
* weather readings per weekday of week i (7 channels);
* maintenance one-hot counts over the 35 days ending at week i+1's start;
* a time-independent equipment channel;
* label +1 iff the asset has a non-test failure during week i+1.

Weeks are ISO calendar weeks: Monday 00:00 in a fixed UTC offset
supplied by the config (1970-01-05 00:00 was a Monday).  Channel order
is equipment, maintenance, movement Mon..Sun, weather Mon..Sun.

Input CSVs (column names are mandatory):

* events:       asset_id,timestamp,kind[,value]   (timestamp = epoch seconds)
* weather:      asset_id,date,v0,...              (date = local YYYY-MM-DD)
* maintenance:  asset_id,timestamp,category[,...]
* equipment:    asset_id,attr...                  (one row per asset)
* failures:     asset_id,timestamp,is_test_activity

The synthetic generator at the bottom draws multi-channel Gaussian data
whose Bayes-optimal channel weighting varies with the missing pattern
(coupling knob) and with the sample's group (heterogeneity knob), so
adaptive kernel weights have a genuine edge over any fixed weighting.
It writes a ``truth.json`` next to the dataset so tests can score
against the exact generating discriminant.
"""

import json
import math
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from .core import (
    ChannelSpec,
    DataError,
    Dataset,
    DatasetManifest,
    MultiChannelSample,
    write_dataset,
)

DAY_SECONDS = 86400
WEEK_SECONDS = 7 * DAY_SECONDS
# 1970-01-05 00:00 UTC, the first Monday after the epoch; week indices
# count Monday-to-Monday weeks from this anchor.
MONDAY_EPOCH = 4 * DAY_SECONDS
MAINT_LOOKBACK_DAYS = 35
WEEKDAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")
STATS_PER_KIND = 6


@dataclass
class EventRecord:
    asset_id: str
    timestamp: float
    kind: str
    value: float = None

    def __post_init__(self):
        if not self.kind:
            raise DataError("event kind must be nonempty")
        self.timestamp = float(self.timestamp)


# ---------------------------------------------------------------------------
# Calendar arithmetic
# ---------------------------------------------------------------------------


def week_index(ts: float, tz_offset_hours: float = 0.0) -> int:
    """Index of the local Monday-to-Monday week containing epoch-seconds ts."""
    local = ts + tz_offset_hours * 3600.0
    return int(math.floor((local - MONDAY_EPOCH) / WEEK_SECONDS))


def week_bounds(index: int, tz_offset_hours: float = 0.0):
    """[start, end) of week ``index`` as UTC epoch seconds."""
    start_local = MONDAY_EPOCH + index * WEEK_SECONDS
    start = start_local - tz_offset_hours * 3600.0
    return start, start + WEEK_SECONDS


def week_start_date(index: int, tz_offset_hours: float = 0.0) -> str:
    """Local calendar date (YYYY-MM-DD) of week ``index``'s Monday."""
    start_local = MONDAY_EPOCH + index * WEEK_SECONDS
    dt = datetime.fromtimestamp(start_local, tz=timezone.utc)
    return dt.date().isoformat()


def local_day(ts: float, tz_offset_hours: float = 0.0) -> int:
    """Local day index (days since 1970-01-01 local midnight)."""
    local = ts + tz_offset_hours * 3600.0
    return int(math.floor(local / DAY_SECONDS))


def _weekday_of_day(day: int) -> int:
    """Monday=0 .. Sunday=6 for a local day index (1970-01-01 = Thursday)."""
    return (day - 4) % 7


def _date_to_ts(date_str: str, tz_offset_hours: float) -> float:
    try:
        dt = datetime.strptime(date_str, "%Y-%m-%d")
    except ValueError as e:
        raise DataError(f"bad date {date_str!r} (expected YYYY-MM-DD): {e}") from e
    local = dt.replace(tzinfo=timezone.utc).timestamp()
    return local - tz_offset_hours * 3600.0


@dataclass
class WeekWindow:
    """One featurized week: the sample week plus its label/lookback windows."""

    index: int
    start: float
    end: float
    lookback_start: float
    lookback_end: float

    @classmethod
    def build(cls, index: int, tz_offset_hours: float = 0.0) -> "WeekWindow":
        start, end = week_bounds(index, tz_offset_hours)
        next_start, _ = week_bounds(index + 1, tz_offset_hours)
        return cls(
            index=index,
            start=start,
            end=end,
            lookback_start=next_start - MAINT_LOOKBACK_DAYS * DAY_SECONDS,
            lookback_end=next_start,
        )


# ---------------------------------------------------------------------------
# Per-day movement statistics and categorical encoding
# ---------------------------------------------------------------------------


def daily_stats(events, kinds) -> np.ndarray:
    """Fixed-length statistics of one asset-day of movement events.

    Per configured kind (in order): event count, mean inter-event gap in
    seconds, gap variance, min gap, max gap, and the fraction of the day
    spanned between first and last event.  Days with fewer than two
    events of a kind report zero for the gap statistics.
    """
    out = np.zeros(STATS_PER_KIND * len(kinds))
    by_kind = {k: [] for k in kinds}
    for ev in events:
        if ev.kind in by_kind:
            by_kind[ev.kind].append(ev.timestamp)
    for j, kind in enumerate(kinds):
        ts = np.sort(np.asarray(by_kind[kind], dtype=np.float64))
        base = STATS_PER_KIND * j
        out[base] = ts.size
        if ts.size >= 2:
            gaps = np.diff(ts)
            out[base + 1] = float(np.mean(gaps))
            out[base + 2] = float(np.var(gaps))
            out[base + 3] = float(np.min(gaps))
            out[base + 4] = float(np.max(gaps))
            out[base + 5] = float(ts[-1] - ts[0]) / DAY_SECONDS
    return out


def one_hot_sum(values, vocab) -> np.ndarray:
    """Sum of one-hot encodings; the extra last slot buckets unseen values."""
    index = {v: i for i, v in enumerate(vocab)}
    out = np.zeros(len(vocab) + 1)
    for v in values:
        out[index.get(v, len(vocab))] += 1.0
    return out


# ---------------------------------------------------------------------------
# Weekly aggregation
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    start: str                      # first local date considered (YYYY-MM-DD)
    end: str                        # exclusive end date
    tz_offset_hours: float = 0.0
    event_kinds: tuple = None       # default: sorted distinct kinds in events
    movement_feature_dim: int = 1024
    weather_feature_dim: int = 512
    concat_feature_dim: int = 2048
    bandwidth: float = None         # override per-source std heuristic
    map_seed: int = 0
    name: str = "weekly"


def _require_columns(df: pd.DataFrame, what: str, cols):
    missing = [c for c in cols if c not in df.columns]
    if missing:
        raise DataError(f"{what} file missing columns {missing}; has {list(df.columns)}")


def _numeric_column(df: pd.DataFrame, what: str, col: str) -> np.ndarray:
    vals = pd.to_numeric(df[col], errors="coerce")
    bad = vals.isna() & df[col].notna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(
            f"{what} row {row + 2}: bad {col} value {df[col].iloc[row]!r}"
        )
    if vals.isna().any():
        row = int(np.flatnonzero(vals.isna().to_numpy())[0])
        raise DataError(f"{what} row {row + 2}: empty {col}")
    return vals.to_numpy(dtype=np.float64)


def load_sources(src_dir):
    """Read the five source CSVs from a directory into DataFrames."""
    src_dir = Path(src_dir)
    out = {}
    for name in ("events", "weather", "maintenance", "equipment", "failures"):
        path = src_dir / f"{name}.csv"
        if not path.is_file():
            raise DataError(f"source file not found: {path}")
        out[name] = pd.read_csv(path, dtype={"asset_id": str},
                                float_precision="round_trip")
    return out


def aggregate_weekly(events, weather, maintenance, equipment, failures,
                     config: PipelineConfig) -> Dataset:
    """Build the weekly multi-channel dataset from raw source tables.

    A sample (asset, week i) is emitted for every week whose successor
    week still lies inside [config.start, config.end).  Movement
    channels are absent when the asset logged no events at all during
    week i; a weather channel is absent when no reading exists for that
    local date; the maintenance channel is absent when the 35-day
    lookback holds no records.  Assets without an equipment record are
    skipped with a warning.
    """
    tz = config.tz_offset_hours
    _require_columns(events, "events", ["asset_id", "timestamp", "kind"])
    _require_columns(weather, "weather", ["asset_id", "date"])
    _require_columns(maintenance, "maintenance", ["asset_id", "timestamp", "category"])
    _require_columns(equipment, "equipment", ["asset_id"])
    _require_columns(failures, "failures", ["asset_id", "timestamp", "is_test_activity"])

    weather_cols = [c for c in weather.columns if c not in ("asset_id", "date")]
    if not weather_cols:
        raise DataError("weather file needs at least one value column")
    equip_cols = [c for c in equipment.columns if c != "asset_id"]
    if not equip_cols:
        raise DataError("equipment file needs at least one attribute column")

    ev_ts = _numeric_column(events, "events", "timestamp")
    ma_ts = _numeric_column(maintenance, "maintenance", "timestamp")
    fa_ts = _numeric_column(failures, "failures", "timestamp")
    fa_test = _numeric_column(failures, "failures", "is_test_activity")
    for col in weather_cols:
        _numeric_column(weather, "weather", col)

    start_ts = _date_to_ts(config.start, tz)
    end_ts = _date_to_ts(config.end, tz)
    if not end_ts > start_ts:
        raise DataError(f"empty calendar range {config.start}..{config.end}")
    first = int(math.ceil((start_ts + tz * 3600.0 - MONDAY_EPOCH) / WEEK_SECONDS))
    last = int(math.floor((end_ts + tz * 3600.0 - MONDAY_EPOCH) / WEEK_SECONDS)) - 2
    if last < first:
        raise DataError(
            f"range {config.start}..{config.end} holds no featurizable week "
            "(need a full week plus its label week)"
        )
    windows = [WeekWindow.build(i, tz) for i in range(first, last + 1)]

    if config.event_kinds is not None:
        kinds = tuple(config.event_kinds)
    else:
        kinds = tuple(sorted(set(events["kind"].astype(str))))
    if not kinds:
        raise DataError("no event kinds configured and events file is empty")

    # --- assets and equipment -------------------------------------------
    equipment = equipment.astype({"asset_id": str})
    if equipment["asset_id"].duplicated().any():
        dup = equipment["asset_id"][equipment["asset_id"].duplicated()].iloc[0]
        raise DataError(f"duplicate equipment row for asset {dup!r}")
    assets = sorted(equipment["asset_id"])
    known = set(assets)
    seen = set()
    for df in (events, weather, maintenance, failures):
        seen.update(df["asset_id"].astype(str))
    for a in sorted(seen - known):
        warnings.warn(f"skipping asset {a!r}: no equipment record")

    equip_vocab = {c: sorted(set(equipment[c].astype(str))) for c in equip_cols}
    equip_vec = {}
    for _, row in equipment.iterrows():
        parts = [one_hot_sum([str(row[c])], equip_vocab[c]) for c in equip_cols]
        equip_vec[str(row["asset_id"])] = np.concatenate(parts)
    equip_dim = len(next(iter(equip_vec.values())))

    maint_vocab = sorted(set(maintenance["category"].astype(str)))
    maint_dim = len(maint_vocab) + 1

    # --- per-asset indices ------------------------------------------------
    ev_by_asset = {}
    for i in range(len(events)):
        a = str(events["asset_id"].iloc[i])
        rec = EventRecord(a, ev_ts[i], str(events["kind"].iloc[i]))
        ev_by_asset.setdefault(a, []).append(rec)
    for recs in ev_by_asset.values():
        recs.sort(key=lambda r: r.timestamp)

    maint_by_asset = {}
    for i in range(len(maintenance)):
        a = str(maintenance["asset_id"].iloc[i])
        maint_by_asset.setdefault(a, []).append(
            (ma_ts[i], str(maintenance["category"].iloc[i]))
        )

    weather_by_key = {}
    for i in range(len(weather)):
        a = str(weather["asset_id"].iloc[i])
        day = local_day(_date_to_ts(str(weather["date"].iloc[i]), tz), tz)
        key = (a, day)
        if key in weather_by_key:
            raise DataError(
                f"weather row {i + 2}: duplicate reading for asset {a!r} "
                f"on {weather['date'].iloc[i]}"
            )
        weather_by_key[key] = np.array(
            [float(weather[c].iloc[i]) for c in weather_cols]
        )

    fail_weeks = set()
    for i in range(len(failures)):
        if fa_test[i] == 0:
            a = str(failures["asset_id"].iloc[i])
            fail_weeks.add((a, week_index(fa_ts[i], tz)))

    # --- assemble samples --------------------------------------------------
    samples = []
    for gid, asset in enumerate(assets):
        recs = ev_by_asset.get(asset, [])
        maints = maint_by_asset.get(asset, [])
        for win in windows:
            week_events = [r for r in recs if win.start <= r.timestamp < win.end]
            movement = [None] * 7
            if week_events:
                by_day = {}
                for r in week_events:
                    by_day.setdefault(_weekday_of_day(local_day(r.timestamp, tz)),
                                      []).append(r)
                movement = [daily_stats(by_day.get(wd, []), kinds) for wd in range(7)]

            start_day = local_day(win.start, tz)
            weather_week = [weather_by_key.get((asset, start_day + wd))
                            for wd in range(7)]

            cats = [c for t, c in maints
                    if win.lookback_start <= t < win.lookback_end]
            maint_chan = one_hot_sum(cats, maint_vocab) if cats else None

            label = 1 if (asset, win.index + 1) in fail_weeks else -1
            channels = ([equip_vec[asset], maint_chan]
                        + movement + weather_week)
            samples.append(MultiChannelSample.build(
                sample_id=f"{asset}:{week_start_date(win.index, tz)}",
                label=label,
                group_id=gid,
                channels=channels,
            ))

    # --- manifest -----------------------------------------------------------
    def source_std(idx_range):
        vals = [smp.channels[m] for smp in samples for m in idx_range
                if smp.present[m]]
        if not vals:
            return 1.0
        sd = float(np.std(np.concatenate(vals)))
        return sd if sd > 0 else 1.0

    movement_dim = STATS_PER_KIND * len(kinds)
    bw_mov = config.bandwidth or source_std(range(2, 9))
    bw_wea = config.bandwidth or source_std(range(9, 16))
    bw_all = config.bandwidth or source_std(range(0, 16))
    specs = [
        ChannelSpec(name="equipment", dim=equip_dim, kernel="linear"),
        ChannelSpec(name="maintenance", dim=maint_dim, kernel="linear"),
    ]
    for wd, day in enumerate(WEEKDAYS):
        specs.append(ChannelSpec(
            name=f"movement_{day}", dim=movement_dim, kernel="rbf",
            bandwidth=bw_mov, feature_dim=config.movement_feature_dim,
            approx="rff", map_seed=config.map_seed + 2 + wd,
        ))
    for wd, day in enumerate(WEEKDAYS):
        specs.append(ChannelSpec(
            name=f"weather_{day}", dim=len(weather_cols), kernel="rbf",
            bandwidth=bw_wea, feature_dim=config.weather_feature_dim,
            approx="rff", map_seed=config.map_seed + 9 + wd,
        ))
    concat = ChannelSpec(
        name="concat", dim=sum(c.dim for c in specs), kernel="rbf",
        bandwidth=bw_all, feature_dim=config.concat_feature_dim,
        approx="rff", map_seed=config.map_seed + 16,
    )
    manifest = DatasetManifest(
        name=config.name,
        num_groups=len(assets),
        channels=specs,
        concat=concat,
        channel_files={c.name: f"channels/{c.name}.csv" for c in specs},
        labels_file="labels.csv",
        groups_file="groups.csv",
    )
    return Dataset(manifest=manifest, samples=samples)


def featurize(src_dir, config: PipelineConfig, out_dir) -> Path:
    """load_sources + aggregate_weekly + write_dataset; returns manifest path."""
    src = load_sources(src_dir)
    dataset = aggregate_weekly(src["events"], src["weather"], src["maintenance"],
                               src["equipment"], src["failures"], config)
    return write_dataset(dataset, out_dir)


# ---------------------------------------------------------------------------
# Synthetic benchmark generator
# ---------------------------------------------------------------------------


@dataclass
class SyntheticConfig:
    """Knobs of the synthetic multi-channel generator.

    ``coupling`` makes the Bayes-optimal channel weights (and an additive
    score offset) depend on the missing pattern; ``heterogeneity`` makes
    them depend on the sample's group.  At zero for both, one fixed
    weighting is Bayes-optimal and adaptive models have nothing to gain.
    """

    n_samples: int = 4000
    s: int = 5
    num_groups: int = 10
    dims: list = None                  # default: 6 features per channel
    missing_rate: object = 0.2         # scalar or per-channel list
    coupling: float = 0.5
    heterogeneity: float = 0.5
    noise: float = 1.0
    pos_rate: float = 0.5
    seed: int = 1
    concat_feature_dim: int = 256
    concat_bandwidth: float = None     # default sqrt(total dim)

    def __post_init__(self):
        if self.n_samples < 4:
            raise DataError(f"n_samples must be >= 4, got {self.n_samples}")
        if self.s < 1:
            raise DataError(f"s must be >= 1, got {self.s}")
        if self.num_groups < 1:
            raise DataError(f"num_groups must be >= 1, got {self.num_groups}")
        if self.dims is None:
            self.dims = [6] * self.s
        self.dims = [int(d) for d in self.dims]
        if len(self.dims) != self.s or any(d < 1 for d in self.dims):
            raise DataError(f"dims must be {self.s} positive ints, got {self.dims}")
        if np.isscalar(self.missing_rate):
            self.missing_rate = [float(self.missing_rate)] * self.s
        self.missing_rate = [float(r) for r in self.missing_rate]
        if len(self.missing_rate) != self.s or any(
            not 0 <= r < 1 for r in self.missing_rate
        ):
            raise DataError(f"missing_rate entries must be in [0,1): {self.missing_rate}")
        if self.noise < 0:
            raise DataError(f"noise must be >= 0, got {self.noise}")
        if not 0 < self.pos_rate < 1:
            raise DataError(f"pos_rate must be in (0,1), got {self.pos_rate}")
        if self.concat_feature_dim < 2 or self.concat_feature_dim % 2:
            raise DataError("concat_feature_dim must be a positive even integer")

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "s": self.s,
            "num_groups": self.num_groups,
            "dims": list(self.dims),
            "missing_rate": list(self.missing_rate),
            "coupling": self.coupling,
            "heterogeneity": self.heterogeneity,
            "noise": self.noise,
            "pos_rate": self.pos_rate,
            "seed": self.seed,
            "concat_feature_dim": self.concat_feature_dim,
            "concat_bandwidth": self.concat_bandwidth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        import dataclasses

        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise DataError(f"generator config has unknown keys: {sorted(extra)}")
        return cls(**d)


# Amplitudes of the generator's weight modulation.  The pattern and group
# effects are deliberately large next to the constant base weight, so the
# effective per-channel weights routinely change sign from one missingness
# pattern (or group) to the next and no single fixed weighting fits all
# samples.
BASE_WEIGHT = 0.6
PATTERN_GAIN = 4.0
GROUP_GAIN = 1.5


def generate_synthetic(config: SyntheticConfig):
    """Draw a dataset plus the ground truth that generated it.

    Latent signal per channel: t_m = <w_m, x_m> with x_m standard normal
    and unit w_m.  The deterministic score of a sample with pattern
    encoding p and group g is

        z = sum_{m present} (base + heterogeneity*h[g,m] + coupling*<Q_m, p>) t_m
            + coupling * <u, p>

    where h and Q are pre-scaled by GROUP_GAIN and PATTERN_GAIN (the
    stored truth already contains the scaled arrays).  Labels threshold
    z + noise*eps at the (1 - pos_rate) quantile.  The draw order
    (w, h, Q, u, X, presence, groups, eps) is fixed; identical configs
    give bit-identical datasets.

    Returns ``(dataset, truth)`` where ``truth`` is the JSON-ready
    ground-truth description consumed by :func:`bayes_scores`.
    """
    n, s, T = config.n_samples, config.s, config.num_groups
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))

    w = []
    for d in config.dims:
        v = rng.standard_normal(d)
        w.append(v / np.linalg.norm(v))
    h = rng.uniform(-1.0, 1.0, (T, s)) * GROUP_GAIN
    Q = rng.standard_normal((s, 2 * s)) * (PATTERN_GAIN / math.sqrt(s))
    u = rng.standard_normal(2 * s) / math.sqrt(s)
    X = [rng.standard_normal((n, d)) for d in config.dims]
    rates = np.asarray(config.missing_rate)
    present = rng.random((n, s)) >= rates
    bad = ~present.any(axis=1)
    while bad.any():
        present[bad] = rng.random((int(bad.sum()), s)) >= rates
        bad = ~present.any(axis=1)
    groups = rng.integers(0, T, n)
    eps = rng.standard_normal(n)

    t = np.stack([X[m] @ w[m] for m in range(s)], axis=1)       # (n, s)
    p_enc = np.concatenate([present, 1.0 - present], axis=1)    # (n, 2s)
    gamma = (BASE_WEIGHT
             + config.heterogeneity * h[groups]
             + config.coupling * (p_enc @ Q.T))
    z_det = np.sum(np.where(present, gamma * t, 0.0), axis=1)
    z_det = z_det + config.coupling * (p_enc @ u)
    z_full = z_det + config.noise * eps
    b0 = float(np.quantile(z_full, 1.0 - config.pos_rate))
    y = np.where(z_full > b0, 1, -1)
    if np.all(y == y[0]):
        raise DataError(
            "generator produced a single class; relax coupling/pos_rate/noise"
        )

    pad = len(str(n - 1))
    samples = []
    for i in range(n):
        channels = [X[m][i].copy() if present[i, m] else None for m in range(s)]
        samples.append(MultiChannelSample.build(
            sample_id=f"s{i:0{pad}d}",
            label=int(y[i]),
            group_id=int(groups[i]),
            channels=channels,
        ))

    total_dim = sum(config.dims)
    bw = config.concat_bandwidth or math.sqrt(total_dim)
    specs = [
        ChannelSpec(name=f"ch{m}", dim=config.dims[m], kernel="linear")
        for m in range(s)
    ]
    concat = ChannelSpec(
        name="concat", dim=total_dim, kernel="rbf", bandwidth=bw,
        feature_dim=config.concat_feature_dim, approx="rff",
        map_seed=config.seed,
    )
    manifest = DatasetManifest(
        name=f"synthetic-{config.seed}",
        num_groups=T,
        channels=specs,
        concat=concat,
        channel_files={c.name: f"channels/{c.name}.csv" for c in specs},
        labels_file="labels.csv",
        groups_file="groups.csv",
    )
    dataset = Dataset(manifest=manifest, samples=samples)
    truth = {
        "format": "samkl-truth",
        "version": 1,
        "config": config.to_dict(),
        "base_weight": BASE_WEIGHT,
        "w": [v.tolist() for v in w],
        "h": h.tolist(),
        "Q": Q.tolist(),
        "u": u.tolist(),
        "b0": b0,
    }
    return dataset, truth


def bayes_scores(truth: dict, dataset: Dataset) -> np.ndarray:
    """Exact generator discriminant z - b0 for each sample.

    The label posterior P(y=1 | observed) is monotone in this value, so
    its AUROC upper-bounds every model that sees only the stored data.
    """
    cfg = truth["config"]
    s = int(cfg["s"])
    w = [np.asarray(v, dtype=np.float64) for v in truth["w"]]
    h = np.asarray(truth["h"], dtype=np.float64)
    Q = np.asarray(truth["Q"], dtype=np.float64)
    u = np.asarray(truth["u"], dtype=np.float64)
    het, coup = float(cfg["heterogeneity"]), float(cfg["coupling"])
    base = float(truth.get("base_weight", BASE_WEIGHT))
    scores = np.empty(len(dataset))
    for i, smp in enumerate(dataset.samples):
        pres = np.array([1.0 if p else 0.0 for p in smp.present], dtype=np.float64)
        p = np.concatenate([pres, 1.0 - pres])
        z = coup * float(u @ p)
        for m in range(s):
            if smp.present[m]:
                gamma = base + het * h[smp.group_id, m] + coup * float(Q[m] @ p)
                z += gamma * float(w[m] @ smp.channels[m])
        scores[i] = z - float(truth["b0"])
    return scores


def write_synthetic(dataset: Dataset, truth: dict, out_dir) -> Path:
    """write_dataset plus truth.json; returns the manifest path."""
    manifest_path = write_dataset(dataset, out_dir)
    truth_path = Path(out_dir) / "truth.json"
    truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True))
    return manifest_path


def load_truth(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"truth file not found: {path}")
    d = json.loads(path.read_text())
    if d.get("format") != "samkl-truth":
        raise DataError(f"not a truth file: {path}")
    return d
