"""spnmix: density analysis for heterogeneous tabular data.

Sum-product networks over mixtures of parametric likelihoods, learned with a
Gibbs sampler; supports density estimation, missing-value imputation,
anomaly scoring, statistical-type discovery, and dependency-pattern mining.
"""

__version__ = "0.1.0"

from .data import Dataset, load_csv, save_csv
from .errors import SpnmixError
from .gibbs import GibbsConfig, PosteriorSampleSet, Trace
from .kernels import backend_name
from .likelihoods import MetaType, StatType, default_dictionary, stat_type_of
from .model_io import load_model, load_truth, save_model, save_truth
from .patterns import (CompositePattern, IntervalPattern, confidence,
                       extract_atoms, format_pattern, mine, pattern_support)
from .spn import InducedTree, ParamSet, Spn, SpnBuilder
from .structure import StructureConfig, learn_structure, rdc
from .synth import (GroundTruth, SynthConfig, generate, holdout_split,
                    inject_missing, recovery_report)
from .tasks import (FittedModel, TypePosterior, anomaly_scores, auc_roc,
                    cosine_similarity, fit, impute, impute_batch,
                    missing_entry_loglik, nrmse, type_posterior)

__all__ = [
    "__version__",
    "SpnmixError",
    "backend_name",
    "MetaType",
    "StatType",
    "default_dictionary",
    "stat_type_of",
    "InducedTree",
    "ParamSet",
    "Spn",
    "SpnBuilder",
    "Dataset",
    "load_csv",
    "save_csv",
    "GibbsConfig",
    "PosteriorSampleSet",
    "Trace",
    "StructureConfig",
    "learn_structure",
    "rdc",
    "FittedModel",
    "TypePosterior",
    "fit",
    "impute",
    "impute_batch",
    "missing_entry_loglik",
    "anomaly_scores",
    "type_posterior",
    "auc_roc",
    "cosine_similarity",
    "nrmse",
    "IntervalPattern",
    "CompositePattern",
    "extract_atoms",
    "mine",
    "pattern_support",
    "confidence",
    "format_pattern",
    "SynthConfig",
    "GroundTruth",
    "generate",
    "holdout_split",
    "inject_missing",
    "recovery_report",
    "save_model",
    "load_model",
    "save_truth",
    "load_truth",
]
