"""Feature maps: random Fourier features, fastfood, and imputation.

Both random maps approximate the RBF kernel
``k(x, y) = exp(-||x - y||^2 / (2 sigma^2))`` and share the output
contract of the interleaved layout

    phi(x) = sqrt(1/D) * [sin(g_1^T x), cos(g_1^T x), ..., sin(g_D^T x), cos(g_D^T x)]

so ``||phi(x)||^2 == 1`` exactly for every input.  Linear channels map to
themselves.

A :class:`FeatureMapper` bundles the per-channel maps with the training
means used for imputation; it is rebuilt bit-identically from its seeds,
which is what the model file stores.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import accel
from .core import ChannelSpec, Dataset, MultiChannelSample


@dataclass
class RffParams:
    """Frequencies for a plain random Fourier feature map."""

    dim: int
    num_features: int
    sigma: float
    seed: int
    G: np.ndarray  # (dim, num_features)


def sample_rff_params(dim: int, num_features: int, sigma: float, seed: int) -> RffParams:
    """Draw ``num_features`` Gaussian frequencies with variance ``sigma**-2``."""
    if dim < 1 or num_features < 1:
        raise ValueError(f"dim and num_features must be positive, got {(dim, num_features)}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    G = rng.normal(0.0, 1.0 / sigma, size=(dim, num_features))
    return RffParams(dim=dim, num_features=num_features, sigma=sigma, seed=seed, G=G)


def map_rff_batch(X: np.ndarray, params: RffParams) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.dim:
        raise ValueError(f"input dim {X.shape[1]} != map dim {params.dim}")
    Z = X @ params.G
    return accel.interleave_sincos(Z, math.sqrt(1.0 / params.num_features))


def map_rff(x: np.ndarray, params: RffParams) -> np.ndarray:
    """Map a single vector; output has length ``2 * num_features``."""
    return map_rff_batch(x[None, :], params)[0]


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass
class FastfoodParams:
    """Per-block diagonals for the fastfood construction.

    Each block realizes the implicit frequency matrix
    ``S H G Pi H B / (sigma * sqrt(d_pad))`` where H is the unnormalized
    Walsh-Hadamard matrix of size ``d_pad`` (next power of two >= dim).
    Blocks are stacked and truncated to exactly ``num_features``
    frequencies.
    """

    dim: int
    num_features: int
    sigma: float
    seed: int
    d_pad: int
    n_blocks: int
    B: np.ndarray      # (n_blocks, d_pad) signs
    perms: np.ndarray  # (n_blocks, d_pad) permutations
    G: np.ndarray      # (n_blocks, d_pad) gaussian diagonal
    S: np.ndarray      # (n_blocks, d_pad) scaling diagonal


def build_fastfood(dim: int, num_features: int, sigma: float, seed: int) -> FastfoodParams:
    if dim < 1 or num_features < 1:
        raise ValueError(f"dim and num_features must be positive, got {(dim, num_features)}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d_pad = _next_pow2(dim)
    n_blocks = (num_features + d_pad - 1) // d_pad
    rng = np.random.default_rng(seed)
    B = np.empty((n_blocks, d_pad))
    perms = np.empty((n_blocks, d_pad), dtype=np.int64)
    G = np.empty((n_blocks, d_pad))
    S = np.empty((n_blocks, d_pad))
    for b in range(n_blocks):
        B[b] = rng.integers(0, 2, size=d_pad) * 2.0 - 1.0
        perms[b] = rng.permutation(d_pad)
        g = rng.normal(0.0, 1.0, size=d_pad)
        G[b] = g
        # Row norms of S H G Pi H B are all sqrt(d_pad)*||g||; resampling
        # them from the chi distribution with d_pad degrees of freedom
        # restores the norm profile of a true Gaussian frequency matrix.
        chi = np.linalg.norm(rng.normal(0.0, 1.0, size=(d_pad, d_pad)), axis=1)
        S[b] = chi / np.linalg.norm(g)
    return FastfoodParams(
        dim=dim, num_features=num_features, sigma=sigma, seed=seed,
        d_pad=d_pad, n_blocks=n_blocks, B=B, perms=perms, G=G, S=S,
    )


def map_fastfood_batch(X: np.ndarray, params: FastfoodParams) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    if X.shape[1] != params.dim:
        raise ValueError(f"input dim {X.shape[1]} != map dim {params.dim}")
    d = params.d_pad
    pad = np.zeros((n, d))
    pad[:, : params.dim] = X
    scale = 1.0 / (params.sigma * math.sqrt(d))
    Z = np.empty((n, params.n_blocks * d))
    for b in range(params.n_blocks):
        t = pad * params.B[b]
        accel.fwht_rows(t)
        t = np.ascontiguousarray(t[:, params.perms[b]])
        t *= params.G[b]
        accel.fwht_rows(t)
        t *= params.S[b]
        Z[:, b * d : (b + 1) * d] = t * scale
    Z = Z[:, : params.num_features]
    return accel.interleave_sincos(Z, math.sqrt(1.0 / params.num_features))


def map_fastfood(x: np.ndarray, params: FastfoodParams) -> np.ndarray:
    return map_fastfood_batch(x[None, :], params)[0]


def impute_partial(x: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Fill NaN entries of a present channel with the training means."""
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    mask = np.isnan(out)
    if mask.any():
        out[mask] = np.asarray(means, dtype=np.float64)[mask]
    return out


# ---------------------------------------------------------------------------
# Per-dataset mapper
# ---------------------------------------------------------------------------


class FeatureMapper:
    """Per-channel feature maps plus training means.

    ``specs`` covers the base channels followed by the concatenated
    channel when the manifest enables one.  ``means`` holds one mean
    vector per base channel (the concat channel's means are their
    concatenation).
    """

    def __init__(self, base_specs, concat_spec, means):
        self.base_specs = list(base_specs)
        self.concat_spec = concat_spec
        self.means = [np.asarray(m, dtype=np.float64) for m in means]
        if len(self.means) != len(self.base_specs):
            raise ValueError(
                f"{len(self.means)} mean vectors for {len(self.base_specs)} channels"
            )
        for spec, m in zip(self.base_specs, self.means):
            if m.shape != (spec.dim,):
                raise ValueError(f"means for channel {spec.name!r} have shape {m.shape}")
        self._maps = [self._build_map(spec) for spec in self.specs]

    @staticmethod
    def _build_map(spec: ChannelSpec):
        if spec.kernel == "linear":
            return None
        d = spec.feature_dim // 2
        if spec.approx == "fastfood":
            return build_fastfood(spec.dim, d, spec.bandwidth, spec.map_seed)
        return sample_rff_params(spec.dim, d, spec.bandwidth, spec.map_seed)

    @property
    def specs(self):
        """All channel specs, concat channel last when enabled."""
        if self.concat_spec is None:
            return self.base_specs
        return self.base_specs + [self.concat_spec]

    @property
    def num_channels(self) -> int:
        return len(self.specs)

    @property
    def mapped_dims(self):
        return [spec.feature_dim for spec in self.specs]

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "FeatureMapper":
        man = dataset.manifest
        return cls(man.channels, man.concat, dataset.channel_means)

    def _map_matrix(self, idx: int, R: np.ndarray) -> np.ndarray:
        params = self._maps[idx]
        if params is None:
            return np.asarray(R, dtype=np.float64)
        if isinstance(params, FastfoodParams):
            return map_fastfood_batch(R, params)
        return map_rff_batch(R, params)

    def _raw_matrices(self, samples, fill):
        """Imputed raw matrix and presence mask per base channel.

        ``fill`` controls absent channels: ``None`` leaves a zero
        placeholder row (callers zero the mapped row afterwards),
        ``"zero"``/``"mean"`` substitute a complete raw vector so every
        kernel sees a full column.
        """
        n = len(samples)
        mats, present = [], []
        for m, spec in enumerate(self.base_specs):
            R = np.zeros((n, spec.dim))
            pres = np.zeros(n, dtype=bool)
            for i, s in enumerate(samples):
                if s.present[m]:
                    pres[i] = True
                    R[i] = impute_partial(s.channels[m], self.means[m])
                elif fill == "mean":
                    R[i] = self.means[m]
                # fill == "zero" or None: row stays zero
            mats.append(R)
            present.append(pres)
        return mats, present

    def transform(self, samples, fill=None):
        """Map samples into per-channel feature matrices and patterns.

        Returns ``(phis, pattern)`` where ``phis[m]`` is ``(n, d_m)`` and
        ``pattern`` is ``(n, 2s)``.  With ``fill=None`` absent channels
        produce exact zero rows and the pattern reflects true presence;
        with ``fill="zero"`` or ``"mean"`` every channel is completed
        before mapping and the pattern is all-present.
        """
        if isinstance(samples, Dataset):
            samples = samples.samples
        if fill not in (None, "zero", "mean"):
            raise ValueError(f"unknown fill mode {fill!r}")
        n = len(samples)
        mats, present = self._raw_matrices(samples, fill)

        phis = []
        for m in range(len(self.base_specs)):
            mapped = self._map_matrix(m, mats[m])
            if fill is None:
                mapped[~present[m]] = 0.0
            phis.append(mapped)

        if self.concat_spec is not None:
            # The concatenated channel is assembled from imputed raw
            # channels; absent constituents contribute their means (or
            # zeros under zero-fill).  It is absent only when every base
            # channel is, which load-time validation rules out.
            parts = []
            for m in range(len(self.base_specs)):
                R = mats[m]
                if fill in (None, "mean"):
                    R = R.copy()
                    R[~present[m]] = self.means[m]
                parts.append(R)
            phis.append(self._map_matrix(len(self.base_specs), np.hstack(parts)))

        if fill is None:
            pres_cols = [p.astype(np.float64) for p in present]
            if self.concat_spec is not None:
                any_present = np.any(np.stack(present, axis=1), axis=1)
                pres_cols.append(any_present.astype(np.float64))
            pres = np.stack(pres_cols, axis=1)
        else:
            pres = np.ones((n, self.num_channels))
        pattern = np.hstack([pres, 1.0 - pres])
        return phis, pattern

    def map_sample(self, sample: MultiChannelSample, fill=None):
        """Map one sample; returns (list of mapped vectors, pattern)."""
        phis, pattern = self.transform([sample], fill=fill)
        return [phi[0] for phi in phis], pattern[0]

    def to_dict(self) -> dict:
        return {
            "channels": [spec.to_dict() for spec in self.base_specs],
            "concat": None if self.concat_spec is None else self.concat_spec.to_dict(),
            "means": [m.tolist() for m in self.means],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMapper":
        base = [ChannelSpec.from_dict(c) for c in d["channels"]]
        concat = None if d.get("concat") is None else ChannelSpec.from_dict(d["concat"])
        return cls(base, concat, [np.asarray(m) for m in d["means"]])


def save_mapper(mapper: FeatureMapper, path) -> None:
    Path(path).write_text(json.dumps(mapper.to_dict(), sort_keys=True))


def load_mapper(path) -> FeatureMapper:
    return FeatureMapper.from_dict(json.loads(Path(path).read_text()))
