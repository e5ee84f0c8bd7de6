"""Toolkit for interacting reinforced Bernoulli processes.

Simulation of coupled success counters, spectral analysis of their
interaction matrix, log-log growth estimation, interaction-intensity
inference, and the patent forward-citation pipeline that produces binary
success matrices from citation dumps.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import IrbpError
from .estimate import (
    FitResult,
    LogLogSample,
    SplitFitResult,
    centrality_ratios,
    fit_heaps,
    fit_split,
    subsample,
)
from .inference import (
    MleResult,
    TestResult,
    chisq_sf,
    mean_field_test,
    mle_iota,
    zeta,
)
from .model import (
    GrowthPrediction,
    InteractionMatrix,
    SCCDecomposition,
    SpectralData,
    growth_exponents,
    mean_field_matrix,
    perron,
    strongly_connected_components,
    validate,
)
from .patents import (
    IndexTable,
    PatentTables,
    SuccessMatrix,
    forward_citation_counts,
    ingest,
    success_matrix,
    threshold_sweep,
)
from .simulate import (
    ExactLaw,
    ModelParams,
    MomentEstimates,
    ShockSpec,
    Trajectory,
    default_checkpoints,
    empirical_moments,
    enumerate_exact,
    exact_expected_counts,
    run_ensemble,
    run_replica,
    success_probabilities,
)

__all__ = [
    "ExactLaw",
    "FitResult",
    "GrowthPrediction",
    "IndexTable",
    "InteractionMatrix",
    "IrbpError",
    "KERNEL_BACKEND",
    "LogLogSample",
    "MleResult",
    "ModelParams",
    "MomentEstimates",
    "PatentTables",
    "SCCDecomposition",
    "ShockSpec",
    "SpectralData",
    "SplitFitResult",
    "SuccessMatrix",
    "TestResult",
    "Trajectory",
    "centrality_ratios",
    "chisq_sf",
    "default_checkpoints",
    "empirical_moments",
    "enumerate_exact",
    "exact_expected_counts",
    "fit_heaps",
    "fit_split",
    "forward_citation_counts",
    "growth_exponents",
    "ingest",
    "mean_field_matrix",
    "mean_field_test",
    "mle_iota",
    "perron",
    "run_ensemble",
    "run_replica",
    "strongly_connected_components",
    "subsample",
    "success_matrix",
    "success_probabilities",
    "threshold_sweep",
    "validate",
    "zeta",
]
