"""Statevector simulation of quantum deep clustering.

Quantum LS-SVM training and swap-test classification, all-pair multiclass
voting, layered SVM stacks, swap-test/adiabatic K-Means, a reference feature
network trained through a squared-hinge head, and a run-time cost model.
"""

from ._kernels import BACKEND
from .allpair import MulticlassSVMModel, classify_all_pairs, grover_frequency_search, train_multiclass
from .cost_model import CostParams, CostReport, cnn_counts, cost_report
from .datasets import make_blobs, read_dataset, write_dataset
from .deep_svm import DeepSVMConfig, DeepSVMStack, train_stack
from .errors import (
    AllFiltered,
    BadLabels,
    BadSeeds,
    BadSizes,
    ConfigError,
    DimensionMismatch,
    EmptyClass,
    InputError,
    NonFinite,
    NonHermitian,
    NumericalError,
    QDCError,
    ShapeMismatch,
    SingularSystem,
    ZeroVector,
)
from .feature_extractor import FeatureNet, HingeHead, forward, hinge_loss, reference_net, train_step
from .lssvm import KernelSpec, train_classical
from .pipeline import PipelineConfig, run_pipeline
from .qkmeans import ClusterResult, lloyd_classical, qkmeans_run
from .qsvm import InversionMode, classify_binary, train_quantum_binary
from .statevector import EXACT, ShotPlan, StateVec, audit_norms

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EXACT",
    "AllFiltered",
    "BadLabels",
    "BadSeeds",
    "BadSizes",
    "ClusterResult",
    "ConfigError",
    "CostParams",
    "CostReport",
    "DeepSVMConfig",
    "DeepSVMStack",
    "DimensionMismatch",
    "EmptyClass",
    "FeatureNet",
    "HingeHead",
    "InputError",
    "InversionMode",
    "KernelSpec",
    "MulticlassSVMModel",
    "NonFinite",
    "NonHermitian",
    "NumericalError",
    "PipelineConfig",
    "QDCError",
    "ShapeMismatch",
    "ShotPlan",
    "SingularSystem",
    "StateVec",
    "ZeroVector",
    "audit_norms",
    "classify_all_pairs",
    "classify_binary",
    "cnn_counts",
    "cost_report",
    "forward",
    "grover_frequency_search",
    "hinge_loss",
    "lloyd_classical",
    "make_blobs",
    "qkmeans_run",
    "read_dataset",
    "reference_net",
    "run_pipeline",
    "train_classical",
    "train_multiclass",
    "train_quantum_binary",
    "train_stack",
    "train_step",
    "write_dataset",
]
