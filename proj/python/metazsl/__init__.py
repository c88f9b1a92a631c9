"""Meta-learned generative feature synthesis for zero-shot evaluation.

Thin Python surface over the C++ core: synthetic benchmark generation,
dataset bundles, episodic training, class-conditional feature synthesis and
ZSL/GZSL evaluation.
"""

from ._core import (
    Checkpoint,
    ClassPool,
    ConfigError,
    DataError,
    DatasetBundle,
    DeTermZ,
    DiscMode,
    DivergenceError,
    EpisodeConfig,
    EvalOptions,
    GzslMetrics,
    Matrix,
    MetaConfig,
    ModelConfig,
    ModelParams,
    OptKind,
    Rng,
    ShapeError,
    SyntheticBench,
    SyntheticBenchSpec,
    TraceRow,
    TrainState,
    build_pool,
    evaluate_gzsl,
    evaluate_zsl,
    harmonic_mean,
    init_params,
    load_bundle,
    load_checkpoint,
    make_synthetic,
    save_bundle,
    save_checkpoint,
    subsample_fewshot,
    synthesize,
    synthesize_dataset,
    train,
)

__all__ = [
    "Checkpoint",
    "ClassPool",
    "ConfigError",
    "DataError",
    "DatasetBundle",
    "DeTermZ",
    "DiscMode",
    "DivergenceError",
    "EpisodeConfig",
    "EvalOptions",
    "GzslMetrics",
    "Matrix",
    "MetaConfig",
    "ModelConfig",
    "ModelParams",
    "OptKind",
    "Rng",
    "ShapeError",
    "SyntheticBench",
    "SyntheticBenchSpec",
    "TraceRow",
    "TrainState",
    "build_pool",
    "evaluate_gzsl",
    "evaluate_zsl",
    "harmonic_mean",
    "init_params",
    "load_bundle",
    "load_checkpoint",
    "make_synthetic",
    "save_bundle",
    "save_checkpoint",
    "subsample_fewshot",
    "synthesize",
    "synthesize_dataset",
    "train",
]
