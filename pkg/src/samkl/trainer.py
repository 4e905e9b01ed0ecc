"""Training, prediction, baselines and ranking metrics.

The decision function for every mode is

    f(x) = sum_m eta_m(x) <omega_m, phi_m(x)> + b

where ``eta`` comes from the pattern embedding (mamkl), the pattern
embedding modulated by per-group factors (samkl), or a fixed weight
vector (the lp-norm baselines).  Absent channels contribute exactly zero
because their mapped vectors are zero.

Training follows a mini-batch subgradient scheme: each epoch shuffles
the samples, splits them into ``floor(n / h)`` batches (remainder
dropped) and updates all parameter blocks per batch.  The hinge part of
each block's gradient is applied as a plain explicit step; the quadratic
regularizers (``1/2 ||omega||^2``, ``C2 ||V||_F^2``,
``C3 ||A - 1||_F^2``) are applied as exact proximal (implicit) steps.
The two coincide to first order in ``lr * coefficient``, but the
proximal form stays stable for arbitrarily large coefficients -- in
particular ``C3 -> inf`` smoothly pins ``A`` at all-ones instead of
oscillating, so the sample-adaptive model degrades gracefully into the
pattern-adaptive one.  :func:`gradients` itself returns the plain
textbook subgradients and is verified against finite differences.
"""

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import DataError, Dataset
from .featmap import FeatureMapper
from .weights import encode_pattern, eta_mamkl, eta_samkl, init_params

ADAPTIVE_MODES = ("samkl", "mamkl")
BASELINE_MODES = ("lp-zf", "lp-mf")


class NumericError(Exception):
    """Training produced non-finite parameters (diverged)."""


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 256
    lr: float = 1e-4
    c1: float = 0.1
    c2: float = 0.01
    c3: float = 0.1
    latent_k: int = 8
    seed: int = 0
    p_norm: float = 1.0
    outer_rounds: int = 5
    scale_reg_by_batches: bool = False
    sequential_updates: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise DataError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise DataError(f"batch_size must be positive, got {self.batch_size}")
        if not self.lr > 0:
            raise DataError(f"lr must be positive, got {self.lr}")
        for name in ("c1", "c2", "c3"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.latent_k < 1:
            raise DataError(f"latent_k must be positive, got {self.latent_k}")
        if not self.p_norm >= 1:
            raise DataError(f"p_norm must be >= 1, got {self.p_norm}")
        if self.outer_rounds < 1:
            raise DataError(f"outer_rounds must be positive, got {self.outer_rounds}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "latent_k": self.latent_k,
            "seed": self.seed,
            "p_norm": self.p_norm,
            "outer_rounds": self.outer_rounds,
            "scale_reg_by_batches": self.scale_reg_by_batches,
            "sequential_updates": self.sequential_updates,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class Design:
    """Mapped dataset ready for the training loop.

    ``phis[m]`` is the (n, d_m) feature matrix of channel m with exact
    zero rows where the channel is absent; ``pattern`` is (n, 2s).
    """

    phis: list
    pattern: np.ndarray
    groups: np.ndarray
    y: np.ndarray
    ids: list = None

    @property
    def n(self) -> int:
        return self.pattern.shape[0]

    @property
    def s(self) -> int:
        return self.pattern.shape[1] // 2

    def subset(self, idx) -> "Design":
        return Design(
            phis=[phi[idx] for phi in self.phis],
            pattern=self.pattern[idx],
            groups=self.groups[idx],
            y=self.y[idx],
            ids=None if self.ids is None else [self.ids[i] for i in idx],
        )


def build_design(dataset: Dataset, mapper: FeatureMapper, fill=None) -> Design:
    phis, pattern = mapper.transform(dataset, fill=fill)
    return Design(
        phis=phis,
        pattern=pattern,
        groups=dataset.groups,
        y=dataset.labels,
        ids=[s.sample_id for s in dataset.samples],
    )


# ---------------------------------------------------------------------------
# Decision values and etas on designs
# ---------------------------------------------------------------------------


def _group_cols(A: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """A-columns per sample as an (n, 2s) matrix; out-of-range ids get ones."""
    n = groups.shape[0]
    out = np.ones((n, A.shape[0]))
    ok = (groups >= 0) & (groups < A.shape[1])
    if ok.any():
        out[ok] = A[:, groups[ok]].T
    return out


def _design_etas(design: Design, V: np.ndarray, A, mode: str) -> np.ndarray:
    """Per-sample channel weights (n, s), without the leading p_m factor."""
    if mode == "samkl":
        c = design.pattern * _group_cols(A, design.groups)
    else:
        c = design.pattern
    reduced = c @ V.T            # (n, k)
    return reduced @ V[:, : design.s]


def _design_z(design: Design, omegas) -> np.ndarray:
    """Z[i, m] = <omega_m, phi_m(x_i)>."""
    cols = [design.phis[m] @ omegas[m] for m in range(design.s)]
    return np.stack(cols, axis=1)


def _design_scores(design, omegas, b, etas) -> np.ndarray:
    return np.sum(etas * _design_z(design, omegas), axis=1) + b


def score_design(design: Design, params: dict, mode: str) -> np.ndarray:
    """Decision scores for every design row from a raw parameter dict.

    ``params`` needs ``omegas`` and ``b`` plus ``V``/``A`` (adaptive) or
    ``eta_fixed`` (fixed-weight).
    """
    if mode in ADAPTIVE_MODES:
        etas = _design_etas(design, params["V"], params.get("A"), mode)
    else:
        etas = np.broadcast_to(params["eta_fixed"], (design.n, design.s))
    return _design_scores(design, params["omegas"], params["b"], etas)


# ---------------------------------------------------------------------------
# Public single-sample decision
# ---------------------------------------------------------------------------


def decision(model, mapped_channels, pattern, group_id: int = 0) -> float:
    """Decision value for one mapped sample.

    ``mapped_channels`` are the per-channel feature vectors (zero vectors
    for absent channels) and ``pattern`` the length-2s encoding.  In
    samkl mode ``group_id`` must be a training group; :func:`predict`
    applies the all-ones fallback for unseen groups instead.
    """
    pattern = np.asarray(pattern, dtype=np.float64)
    s = pattern.shape[0] // 2
    if len(mapped_channels) != s:
        raise ValueError(f"{len(mapped_channels)} mapped channels for s={s}")
    if model.mode == "samkl":
        if not 0 <= group_id < model.num_groups:
            raise DataError(
                f"group_id {group_id} outside training groups [0, {model.num_groups})"
            )
        etas = eta_samkl(pattern, model.V, model.A[:, group_id])
    elif model.mode == "mamkl":
        etas = eta_mamkl(pattern, model.V)
    elif model.mode == "fixed":
        etas = model.eta_fixed
    else:
        raise ValueError(f"unknown model mode {model.mode!r}")
    total = model.b
    for m in range(s):
        total += etas[m] * float(np.dot(model.omegas[m], mapped_channels[m]))
    return float(total)


# ---------------------------------------------------------------------------
# Objective and subgradients
# ---------------------------------------------------------------------------


def objective(params: dict, design: Design, config: TrainConfig, mode: str) -> float:
    """Exact primal value on ``design``.

    ``params`` holds ``omegas`` and ``b``, plus ``V``/``A`` for the
    adaptive modes or ``eta_fixed`` for fixed-weight models.  The C3 term
    is omitted for mamkl (A is pinned at ones), and both embedding terms
    for fixed-weight models.
    """
    value = 0.5 * sum(float(np.dot(w, w)) for w in params["omegas"])
    if mode in ADAPTIVE_MODES:
        value += config.c2 * float(np.sum(params["V"] ** 2))
        if mode == "samkl":
            value += config.c3 * float(np.sum((params["A"] - 1.0) ** 2))
    scores = score_design(design, params, mode)
    hinge = np.maximum(0.0, 1.0 - design.y * scores)
    return value + config.c1 * float(np.sum(hinge))


def _support_set(design, omegas, b, etas) -> np.ndarray:
    scores = _design_scores(design, omegas, b, etas)
    return (1.0 - design.y * scores) > 0.0


def _hinge_grads(design, omegas, b, V, A, mode, config, blocks, support=None,
                 eta_fixed=None):
    """Hinge-loss parts of the subgradients over one batch.

    The support set is ``{i : 1 - y_i f(x_i) > 0}``, computed from the
    current parameters unless a precomputed ``support`` mask is supplied
    (the sequential update path freezes it at the batch-start scores).
    Regularizer terms are not included.
    """
    s = design.s
    if eta_fixed is not None:
        etas = np.broadcast_to(eta_fixed, (design.n, s))
    else:
        etas = _design_etas(design, V, A, mode)
    if support is None:
        support = _support_set(design, omegas, b, etas)
    out = {"support": support}
    y_s = design.y[support]

    if "omegas" in blocks:
        gw = []
        for m in range(s):
            phi = design.phis[m][support]
            gw.append(-config.c1 * (phi.T @ (y_s * etas[support, m])))
        out["omegas"] = gw
    if "b" in blocks:
        out["b"] = -config.c1 * float(np.sum(y_s))
    if "V" in blocks or "A" in blocks:
        Z = _design_z(design, omegas)
        R = y_s[:, None] * Z[support]                     # (n_I, s)
        if mode == "samkl":
            C = design.pattern[support] * _group_cols(A, design.groups[support])
        else:
            C = design.pattern[support]
        if "V" in blocks:
            top = np.zeros((2 * s, 2 * s))
            top[:s] = R.T @ C
            out["V"] = -config.c1 * (V @ (top + top.T))
        if "A" in blocks:
            VtV_s = V.T @ V[:, :s]                        # (2s, s)
            contribs = (R @ VtV_s.T) * design.pattern[support]
            gA = np.zeros_like(A)
            np.add.at(gA.T, design.groups[support], -config.c1 * contribs)
            out["A"] = gA
    return out


def gradients(params: dict, design: Design, config: TrainConfig, mode: str) -> dict:
    """Full subgradients (hinge part plus regularizers) over a batch.

    Matches central finite differences of :func:`objective` restricted to
    the batch whenever no margin sits exactly at the hinge kink.  In
    mamkl mode ``A`` is frozen at ones and its gradient is identically
    zero.
    """
    if mode not in ADAPTIVE_MODES:
        raise ValueError(f"gradients is defined for adaptive modes, got {mode!r}")
    omegas = params["omegas"]
    V, A = params["V"], params.get("A")
    blocks = ("omegas", "b", "V", "A") if mode == "samkl" else ("omegas", "b", "V")
    data = _hinge_grads(design, omegas, params["b"], V, A, mode, config, blocks)
    grad_omegas = [g + w for g, w in zip(data["omegas"], omegas)]
    grad_V = data["V"] + 2.0 * config.c2 * V
    if mode == "samkl":
        grad_A = data["A"] + 2.0 * config.c3 * (A - 1.0)
    else:
        grad_A = None if A is None else np.zeros_like(A)
    return {
        "omegas": grad_omegas,
        "b": data["b"],
        "V": grad_V,
        "A": grad_A,
        "support": data["support"],
    }


# ---------------------------------------------------------------------------
# Models and serialization
# ---------------------------------------------------------------------------


@dataclass
class MklModel:
    mode: str                      # "samkl" | "mamkl" | "fixed"
    mapper: FeatureMapper
    omegas: list
    b: float
    num_groups: int
    V: np.ndarray = None
    A: np.ndarray = None
    eta_fixed: np.ndarray = None
    fill: str = None               # raw-channel fill used by fixed-weight models
    train_config: dict = field(default_factory=dict)

    @property
    def num_channels(self) -> int:
        return self.mapper.num_channels


MODEL_FORMAT = "samkl-model"
MODEL_VERSION = 1


def model_to_dict(model: MklModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": model.mode,
        "mapper": model.mapper.to_dict(),
        "omegas": [w.tolist() for w in model.omegas],
        "b": model.b,
        "num_groups": model.num_groups,
        "V": None if model.V is None else model.V.tolist(),
        "A": None if model.A is None else model.A.tolist(),
        "eta_fixed": None if model.eta_fixed is None else model.eta_fixed.tolist(),
        "fill": model.fill,
        "train_config": model.train_config,
    }


def model_from_dict(d: dict) -> MklModel:
    if d.get("format") != MODEL_FORMAT:
        raise DataError(f"not a model file (format={d.get('format')!r})")
    if d.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {d.get('version')!r}")

    def arr(x):
        return None if x is None else np.asarray(x, dtype=np.float64)

    return MklModel(
        mode=d["mode"],
        mapper=FeatureMapper.from_dict(d["mapper"]),
        omegas=[np.asarray(w, dtype=np.float64) for w in d["omegas"]],
        b=float(d["b"]),
        num_groups=int(d["num_groups"]),
        V=arr(d["V"]),
        A=arr(d["A"]),
        eta_fixed=arr(d["eta_fixed"]),
        fill=d.get("fill"),
        train_config=d.get("train_config", {}),
    )


def save_model(model: MklModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True))


def load_model(path) -> MklModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    try:
        return model_from_dict(json.loads(path.read_text()))
    except json.JSONDecodeError as e:
        raise DataError(f"model file {path} is not valid JSON: {e}") from e


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _check_finite(omegas, b, V, A, where: str):
    ok = np.isfinite(b)
    ok = ok and all(np.all(np.isfinite(w)) for w in omegas)
    if V is not None:
        ok = ok and bool(np.all(np.isfinite(V)))
    if A is not None:
        ok = ok and bool(np.all(np.isfinite(A)))
    if not ok:
        raise NumericError(f"non-finite parameters after {where}; "
                           "lower the learning rate or regularization")


def _epoch_batches(rng, n, h):
    perm = rng.permutation(n)
    return [perm[j * h : (j + 1) * h] for j in range(n // h)]


def _prox(value, center, coef):
    """Implicit step for a quadratic ``(coef/2) * ||x - center||^2 / beta``.

    ``coef`` is the product of the step size and twice the regularization
    coefficient; ``coef == 0`` is the identity.
    """
    if coef == 0.0:
        return value
    return center + (value - center) / (1.0 + coef)


def train(dataset: Dataset, config: TrainConfig, mode: str, on_epoch=None) -> MklModel:
    """Fit an adaptive model (``mode`` in {"samkl", "mamkl"}).

    ``on_epoch(epoch, objective_value, params)`` is invoked after every
    epoch with the exact full-dataset primal value and the current
    parameter dict.  Raises :class:`NumericError` when parameters stop
    being finite.
    """
    if mode not in ADAPTIVE_MODES:
        raise ValueError(f"unknown adaptive mode {mode!r}")
    mapper = FeatureMapper.from_dataset(dataset)
    design = build_design(dataset, mapper, fill=None)
    omegas, b, V, A = fit_adaptive(design, config, mode,
                                   dataset.manifest.num_groups, on_epoch)
    return MklModel(
        mode=mode,
        mapper=mapper,
        omegas=omegas,
        b=b,
        num_groups=dataset.manifest.num_groups,
        V=V,
        A=A,
        train_config={"mode": mode, **config.to_dict()},
    )


def fit_adaptive(design: Design, config: TrainConfig, mode: str, num_groups: int,
                 on_epoch=None):
    """Mini-batch subgradient loop on an already-mapped design."""
    n, s = design.n, design.s
    h = config.batch_size
    if n // h < 1:
        raise DataError(
            f"batch_size {h} exceeds the {n} training samples (no full batch)"
        )
    seq_init, seq_shuffle = np.random.SeedSequence(config.seed).spawn(2)
    V, A = init_params(s, config.latent_k, num_groups, seq_init)
    omegas = [np.zeros(phi.shape[1]) for phi in design.phis]
    b = 0.0
    rng = np.random.default_rng(seq_shuffle)
    beta = config.lr
    reg_scale = 1.0 / (n // h) if config.scale_reg_by_batches else 1.0
    w_coef = beta * reg_scale
    v_coef = 2.0 * beta * config.c2 * reg_scale
    a_coef = 2.0 * beta * config.c3 * reg_scale

    for epoch in range(config.epochs):
        for idx in _epoch_batches(rng, n, h):
            batch = design.subset(idx)
            if config.sequential_updates:
                # Per-block order V -> A -> b -> omega with each hinge
                # gradient taken at the partially updated iterate; the
                # support set stays fixed at the batch-start scores.
                gV = _hinge_grads(batch, omegas, b, V, A, mode, config, ("V",))
                sub = batch.subset(np.flatnonzero(gV["support"]))
                all_on = np.ones(sub.n, dtype=bool)
                V = _prox(V - beta * gV["V"], 0.0, v_coef)
                if mode == "samkl":
                    gA = _hinge_grads(sub, omegas, b, V, A, mode, config,
                                      ("A",), support=all_on)["A"]
                    A = _prox(A - beta * gA, 1.0, a_coef)
                gb = _hinge_grads(sub, omegas, b, V, A, mode, config,
                                  ("b",), support=all_on)["b"]
                gw = _hinge_grads(sub, omegas, b, V, A, mode, config,
                                  ("omegas",), support=all_on)["omegas"]
                b = b - beta * gb
                omegas = [_prox(w - beta * g, 0.0, w_coef)
                          for w, g in zip(omegas, gw)]
            else:
                blocks = ("omegas", "b", "V", "A") if mode == "samkl" else ("omegas", "b", "V")
                g = _hinge_grads(batch, omegas, b, V, A, mode, config, blocks)
                omegas = [_prox(w - beta * gw, 0.0, w_coef)
                          for w, gw in zip(omegas, g["omegas"])]
                b = b - beta * g["b"]
                V = _prox(V - beta * g["V"], 0.0, v_coef)
                if mode == "samkl":
                    A = _prox(A - beta * g["A"], 1.0, a_coef)
        _check_finite(omegas, b, V, A, f"epoch {epoch}")
        if on_epoch is not None:
            params = {"omegas": omegas, "b": b, "V": V, "A": A}
            on_epoch(epoch, objective(params, design, config, mode), params)
    return omegas, b, V, A


# ---------------------------------------------------------------------------
# lp-norm fixed-weight baselines
# ---------------------------------------------------------------------------


def lp_weight_update(norms, p: float) -> np.ndarray:
    """Closed-form lp-ball kernel weights from per-channel ||omega_m||.

    ``eta_m = ||w_m||^(2/(p+1)) / (sum_j ||w_j||^(2p/(p+1)))^(1/p)``, the
    minimizer of ``sum_m ||w_m||^2 / eta_m`` over the lp sphere.  When
    every norm is zero the weights reset to the uniform lp-feasible
    vector ``s**(-1/p)``.
    """
    norms = np.asarray(norms, dtype=np.float64)
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if np.any(norms < 0):
        raise ValueError("norms must be non-negative")
    s = norms.size
    if np.all(norms == 0.0):
        return np.full(s, s ** (-1.0 / p))
    num = norms ** (2.0 / (p + 1.0))
    den = np.sum(norms ** (2.0 * p / (p + 1.0))) ** (1.0 / p)
    return num / den


def _fit_fixed_sgd(design, eta, omegas, b, config, rng, epochs):
    n = design.n
    h = config.batch_size
    if n // h < 1:
        raise DataError(
            f"batch_size {h} exceeds the {n} training samples (no full batch)"
        )
    beta = config.lr
    reg_scale = 1.0 / (n // h) if config.scale_reg_by_batches else 1.0
    w_coef = beta * reg_scale
    for epoch in range(epochs):
        for idx in _epoch_batches(rng, n, h):
            batch = design.subset(idx)
            g = _hinge_grads(batch, omegas, b, None, None, "fixed", config,
                             ("omegas", "b"), eta_fixed=eta)
            omegas = [_prox(w - beta * gw, 0.0, w_coef)
                      for w, gw in zip(omegas, g["omegas"])]
            b = b - beta * g["b"]
        _check_finite(omegas, b, None, None, f"baseline epoch {epoch}")
    return omegas, b


def train_lp_baseline(dataset: Dataset, config: TrainConfig, fill: str,
                      on_round=None) -> MklModel:
    """Alternating lp-norm MKL baseline on completed kernels.

    ``fill`` is ``"zero"`` or ``"mean"``: absent channels are pre-filled
    in raw space before mapping so every kernel is complete.  Each outer
    round runs the mini-batch hinge SGD over ``(omega, b)`` with the
    weights fixed, then applies the closed-form lp weight update; the
    epoch budget is split evenly across rounds.
    """
    if fill not in ("zero", "mean"):
        raise DataError(f"fill must be 'zero' or 'mean', got {fill!r}")
    mapper = FeatureMapper.from_dataset(dataset)
    design = build_design(dataset, mapper, fill=fill)
    s = design.s
    p = config.p_norm
    eta = np.full(s, s ** (-1.0 / p))
    omegas = [np.zeros(phi.shape[1]) for phi in design.phis]
    b = 0.0
    _, seq_shuffle = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(seq_shuffle)
    epochs_per_round = max(1, config.epochs // config.outer_rounds)
    for r in range(config.outer_rounds):
        omegas, b = _fit_fixed_sgd(design, eta, omegas, b, config, rng,
                                   epochs_per_round)
        eta = lp_weight_update([float(np.linalg.norm(w)) for w in omegas], p)
        if on_round is not None:
            params = {"omegas": omegas, "b": b, "eta_fixed": eta}
            on_round(r, objective(params, design, config, "fixed"), params)
    return MklModel(
        mode="fixed",
        mapper=mapper,
        omegas=omegas,
        b=b,
        num_groups=dataset.manifest.num_groups,
        eta_fixed=eta,
        fill=fill,
        train_config={"mode": f"lp-{fill[0]}f", **config.to_dict()},
    )


# ---------------------------------------------------------------------------
# Prediction and evaluation
# ---------------------------------------------------------------------------


def predict(model: MklModel, dataset: Dataset):
    """Scores and channel weights for every sample of ``dataset``.

    Pure: the dataset is not modified.  Samples whose group id falls
    outside the training range fall back to the all-ones modulation
    (i.e. the pattern-adaptive scores).  Returns ``(ids, scores, etas)``.
    """
    fill = model.fill if model.mode == "fixed" else None
    design = build_design(dataset, model.mapper, fill=fill)
    s = design.s
    if model.mode == "fixed":
        etas = np.tile(model.eta_fixed, (design.n, 1))
    elif model.mode == "samkl":
        etas = _design_etas(design, model.V, model.A, "samkl")
    elif model.mode == "mamkl":
        etas = design.pattern[:, :s] * _design_etas(design, model.V, None, "mamkl")
    else:
        raise ValueError(f"unknown model mode {model.mode!r}")
    scores = _design_scores(design, model.omegas, model.b, etas)
    if not np.all(np.isfinite(scores)):
        raise NumericError("prediction produced non-finite scores")
    return design.ids, scores, etas


@dataclass
class Metrics:
    auroc: float
    auprc: float
    n: int
    n_pos: int
    eta_stats: dict

    def to_dict(self) -> dict:
        return {
            "auroc": self.auroc,
            "auprc": self.auprc,
            "n": self.n,
            "n_pos": self.n_pos,
            "eta_stats": self.eta_stats,
        }


def evaluate(model: MklModel, dataset: Dataset) -> Metrics:
    """Ranking metrics plus per-channel weight statistics on a dataset."""
    _, scores, etas = predict(model, dataset)
    labels = dataset.labels
    stats = {}
    for m, spec in enumerate(model.mapper.specs):
        col = etas[:, m]
        stats[spec.name] = {
            "mean": float(np.mean(col)),
            "min": float(np.min(col)),
            "max": float(np.max(col)),
        }
    return Metrics(
        auroc=auroc(scores, labels),
        auprc=auprc(scores, labels),
        n=len(dataset),
        n_pos=int(np.sum(labels == 1)),
        eta_stats=stats,
    )


# ---------------------------------------------------------------------------
# Ranking metrics (sort-based; brute-force twins live in oracle.py)
# ---------------------------------------------------------------------------


def _metric_inputs(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"shape mismatch: {scores.shape} vs {labels.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    pos = labels == 1
    neg = labels == -1
    if not np.all(pos | neg):
        raise ValueError("labels must be +1/-1")
    if not pos.any() or not neg.any():
        raise ValueError("metrics need both classes present")
    return scores, pos


def auroc(scores, labels) -> float:
    """Rank-statistic AUROC; cross-class ties earn half credit."""
    scores, pos = _metric_inputs(scores, labels)
    n = scores.size
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    rank_sum = float(np.sum(ranks[pos]))
    return (rank_sum - 0.5 * n_pos * (n_pos + 1)) / (n_pos * n_neg)


def auprc(scores, labels) -> float:
    """Area under the precision-recall step curve, ties grouped."""
    scores, pos = _metric_inputs(scores, labels)
    n_pos = int(pos.sum())
    order = np.argsort(-scores, kind="mergesort")
    area = 0.0
    prev_recall = 0.0
    tp = 0
    seen = 0
    i = 0
    n = scores.size
    while i < n:
        j = i
        while j + 1 < n and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        tp += int(np.sum(pos[order[i : j + 1]]))
        seen += j - i + 1
        recall = tp / n_pos
        precision = tp / seen
        area += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return area


# ---------------------------------------------------------------------------
# Bandwidth selection helper
# ---------------------------------------------------------------------------


def select_bandwidth(train_ds: Dataset, val_ds: Dataset, channel_names,
                     config: TrainConfig, exponents=(-2, -1, 0, 1, 2)):
    """Pick one bandwidth for a set of rbf channels by validation AUROC.

    Candidates are ``sigma**e`` for ``e`` in ``exponents`` where ``sigma``
    is the standard deviation of the named channels' observed training
    entries.  Each candidate is scored by a quick uniform fixed-weight
    model (mean-filled).  Returns ``(best_bandwidth, {bandwidth: auroc})``.
    """
    channel_names = list(channel_names)
    man = train_ds.manifest
    known = {c.name for c in man.all_channels}
    unknown = set(channel_names) - known
    if unknown:
        raise DataError(f"unknown channels for bandwidth selection: {sorted(unknown)}")

    # the concat channel's raw entries are just the base channels' entries
    want_all = man.concat is not None and man.concat.name in channel_names
    vals = []
    for m, spec in enumerate(man.channels):
        if spec.name not in channel_names and not want_all:
            continue
        for smp in train_ds.samples:
            if smp.present[m]:
                x = smp.channels[m]
                vals.append(x[~np.isnan(x)])
    sigma = float(np.std(np.concatenate(vals))) if vals else 1.0
    if not sigma > 0:
        sigma = 1.0

    def with_bandwidth(bw):
        chans = [replace(c, bandwidth=bw) if c.name in channel_names else replace(c)
                 for c in man.channels]
        concat = None
        if man.concat is not None:
            concat = (replace(man.concat, bandwidth=bw)
                      if man.concat.name in channel_names else replace(man.concat))
        return replace(man, channels=chans, concat=concat)

    results = {}
    best_bw, best_score = None, -math.inf
    for e in exponents:
        bw = sigma ** e
        man2 = with_bandwidth(bw)
        tr = Dataset(man2, train_ds.samples, [m.copy() for m in train_ds.channel_means])
        va = Dataset(man2, val_ds.samples, [m.copy() for m in train_ds.channel_means])
        mapper = FeatureMapper.from_dataset(tr)
        design = build_design(tr, mapper, fill="mean")
        s = design.s
        eta = np.full(s, 1.0 / s)
        omegas = [np.zeros(phi.shape[1]) for phi in design.phis]
        rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
        omegas, b = _fit_fixed_sgd(design, eta, omegas, 0.0, config, rng, config.epochs)
        model = MklModel(mode="fixed", mapper=mapper, omegas=omegas, b=b,
                         num_groups=man2.num_groups, eta_fixed=eta, fill="mean")
        _, scores, _ = predict(model, va)
        score = auroc(scores, va.labels)
        results[bw] = score
        if score > best_score:
            best_bw, best_score = bw, score
    return best_bw, results
