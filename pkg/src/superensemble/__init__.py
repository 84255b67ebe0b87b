"""Superensemble classifier for imbalanced binary data.

A Hellinger-distance decision tree ranks features and predicts a class;
the selected features plus that prediction feed a Gaussian RBF network
which makes the final decision.
"""

from ._accel import backend
from .data import (DataError, Dataset, Feature, Schema, SplitIndices, fit_encoder, encode, decode,
                   imbalance_cv, imbalance_cv_counts, load_bundled, load_csv, load_schema, parse_schema,
                   stratified_split)
from .ensemble import (ModelChecksumError, ModelFormatError, ModelTruncatedError, ModelVersionError,
                       PipelineConfig, SuperensembleModel, fit_superensemble, load_model, predict_superensemble,
                       save_model)
from .evaluation import ConfusionMatrix, EvalReport, auc, confusion, emit_report, run_benchmark
from .rbfn import RbfNetwork, RbfTrainConfig, predict_rbfn, train_rbfn
from .tree import Criterion, TreeModel, best_split, fit_tree, grow_tree, predict_tree, rank_features

__version__ = "0.1.0"

__all__ = [
    "backend", "DataError", "Dataset", "Feature", "Schema", "SplitIndices", "fit_encoder", "encode", "decode",
    "imbalance_cv", "imbalance_cv_counts", "load_bundled", "load_csv", "load_schema", "parse_schema",
    "stratified_split", "ModelChecksumError", "ModelFormatError", "ModelTruncatedError", "ModelVersionError",
    "PipelineConfig", "SuperensembleModel", "fit_superensemble", "load_model", "predict_superensemble",
    "save_model", "ConfusionMatrix", "EvalReport", "auc", "confusion", "emit_report", "run_benchmark",
    "RbfNetwork", "RbfTrainConfig", "predict_rbfn", "train_rbfn", "Criterion", "TreeModel", "best_split",
    "fit_tree", "grow_tree", "predict_tree", "rank_features", "__version__",
]
