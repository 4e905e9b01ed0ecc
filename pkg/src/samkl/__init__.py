"""Adaptive multiple kernel learning for multi-channel data with missing channels."""

from .accel import backend
from .core import (
    ChannelSpec,
    DataError,
    Dataset,
    DatasetManifest,
    MultiChannelSample,
    load_dataset,
    load_manifest,
    split_dataset,
    validate_dataset,
    write_dataset,
)
from .featmap import FeatureMapper, load_mapper, save_mapper
from .pipeline import (
    PipelineConfig,
    SyntheticConfig,
    aggregate_weekly,
    bayes_scores,
    generate_synthetic,
    write_synthetic,
)
from .trainer import (
    Metrics,
    MklModel,
    NumericError,
    TrainConfig,
    auprc,
    auroc,
    evaluate,
    load_model,
    predict,
    save_model,
    train,
    train_lp_baseline,
)
from .weights import encode_pattern, eta_mamkl, eta_samkl, init_params

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "DataError",
    "Dataset",
    "DatasetManifest",
    "FeatureMapper",
    "Metrics",
    "MklModel",
    "MultiChannelSample",
    "NumericError",
    "PipelineConfig",
    "SyntheticConfig",
    "TrainConfig",
    "aggregate_weekly",
    "auprc",
    "auroc",
    "backend",
    "bayes_scores",
    "encode_pattern",
    "eta_mamkl",
    "eta_samkl",
    "evaluate",
    "generate_synthetic",
    "init_params",
    "load_dataset",
    "load_manifest",
    "load_mapper",
    "load_model",
    "predict",
    "save_mapper",
    "save_model",
    "split_dataset",
    "train",
    "train_lp_baseline",
    "validate_dataset",
    "write_dataset",
    "write_synthetic",
    "__version__",
]
