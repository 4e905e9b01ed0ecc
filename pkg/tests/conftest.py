"""Shared builders for in-memory datasets and the toy event fixture."""

import numpy as np
import pytest

from samkl.core import ChannelSpec, Dataset, DatasetManifest, MultiChannelSample


def make_manifest(dims=(4, 3, 5), num_groups=4, concat=False, name="toy"):
    specs = [
        ChannelSpec(name=f"ch{m}", dim=d, kernel="linear")
        for m, d in enumerate(dims)
    ]
    concat_spec = None
    if concat:
        concat_spec = ChannelSpec(
            name="concat", dim=sum(dims), kernel="rbf",
            bandwidth=float(np.sqrt(sum(dims))), feature_dim=64, approx="rff",
        )
    return DatasetManifest(
        name=name,
        num_groups=num_groups,
        channels=specs,
        concat=concat_spec,
        channel_files={s.name: f"channels/{s.name}.csv" for s in specs},
        labels_file="labels.csv",
        groups_file="groups.csv",
    )


def make_dataset(n=40, dims=(4, 3, 5), num_groups=4, seed=0, missing=0.3,
                 concat=False):
    """Random linear-channel dataset with iid channel dropout.

    Labels correlate with the sum of present channel means so that
    training has something to latch onto.
    """
    rng = np.random.default_rng(seed)
    manifest = make_manifest(dims, num_groups, concat)
    samples = []
    for i in range(n):
        present = rng.random(len(dims)) >= missing
        if not present.any():
            present[rng.integers(len(dims))] = True
        channels = [
            rng.standard_normal(d) + 0.3 if present[m] else None
            for m, d in enumerate(dims)
        ]
        signal = sum(float(np.sum(c)) for c in channels if c is not None)
        label = 1 if signal + rng.standard_normal() > 0.3 * sum(dims) else -1
        samples.append(MultiChannelSample.build(
            sample_id=f"t{i:03d}", label=label,
            group_id=int(rng.integers(num_groups)), channels=channels,
        ))
    labels = {s.label for s in samples}
    if len(labels) == 1:  # pragma: no cover - seed-dependent guard
        flip = samples[0]
        samples[0] = MultiChannelSample.build(
            flip.sample_id, -flip.label, flip.group_id,
            [c if p else None for c, p in zip(flip.channels, flip.present)],
        )
    return Dataset(manifest=manifest, samples=samples)


FIXTURE_EVENTS = """asset_id,timestamp,kind,value
A1,349200,move,1.0
A1,349260,move,1.0
A2,1040400,test,
"""

FIXTURE_WEATHER = """asset_id,date,v0,v1,v2,v3
A1,1970-01-05,10,1,0.5,2
A1,1970-01-06,11,2,0.4,1
A2,1970-01-12,9,0,0.1,3
"""

FIXTURE_MAINTENANCE = """asset_id,timestamp,category
A1,777600,adjust
"""

FIXTURE_EQUIPMENT = """asset_id,model
A1,M1
A2,M2
"""

FIXTURE_FAILURES = """asset_id,timestamp,is_test_activity
A1,1123200,0
A2,1060000,1
"""


@pytest.fixture
def fixture_sources(tmp_path):
    """Write the 2-asset/3-week toy CSV sources; returns the directory."""
    src = tmp_path / "src"
    src.mkdir()
    (src / "events.csv").write_text(FIXTURE_EVENTS)
    (src / "weather.csv").write_text(FIXTURE_WEATHER)
    (src / "maintenance.csv").write_text(FIXTURE_MAINTENANCE)
    (src / "equipment.csv").write_text(FIXTURE_EQUIPMENT)
    (src / "failures.csv").write_text(FIXTURE_FAILURES)
    return src
