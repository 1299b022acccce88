"""Gated-Lagrangian modern Hopfield networks for OOD detection.

The memory Lagrangian's rectification installs a point attractor at the
feature-space origin for any interaction matrix; inputs whose gate value
is negative collapse into it in one step, which turns the dynamics into
a density-aware rejection mechanism. The package covers the Lagrangian
kernels, the discrete dynamics, energies, the probabilistic-interaction
trainer, detection metrics, binary feature I/O, and a scikit-learn style
detector wrapper.
"""

from .dynamics import (
    AttractorLabel,
    DivergenceError,
    HopfieldConfig,
    OriginBallReport,
    Trajectory,
    capture_radius,
    classify_attractor,
    integrate_two_body,
    reclag_update,
    run_to_fixed_point,
    theorem1_ball_check,
    theorem2_gamma,
    vanilla_update,
)
from .energy import (
    ClassPatternBank,
    dense_energy,
    general_energy,
    mhe_score,
    modern_energy,
    she_score,
)
from .estimator import RecLagDetector
from .io_data import (
    FeatureFileError,
    LandscapeGrid,
    demo_model,
    export_landscape,
    gen_gaussian_mixture,
    gen_uniform_ring,
    read_density_model,
    read_features,
    write_density_model,
    write_features,
)
from .kernels import log_mean_exp, stable_log_sum_exp, stable_softmax
from .lagrangians import (
    AbsSum,
    AdditiveSigma,
    HalfSquare,
    LogSumExp,
    RecLag,
    chi,
    gate_value,
)
from .ood import (
    DetectionMetrics,
    ScoreSet,
    energy_score,
    evaluate_detector,
    fpr_at_tpr,
    msp_score,
    react_score,
    roc_and_auc,
)
from .probability import (
    DensityModel,
    LogPartition,
    calibrate_gamma,
    calibrate_gamma_for_dynamics,
    estimate_log_partition,
    in_basin,
    log_density,
    log_joint_unnormalized,
    memory_posterior,
    ood_score,
)
from .trainer import (
    Dataset,
    GaussianEmission,
    TrainerConfig,
    TrainingDivergedError,
    TrainResult,
    exact_log_objective,
    exact_log_objective_gradients,
    exact_objective,
    gaussian_log_emission,
    mc_objective,
    normalize_features,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AbsSum",
    "AdditiveSigma",
    "AttractorLabel",
    "ClassPatternBank",
    "Dataset",
    "DensityModel",
    "DetectionMetrics",
    "DivergenceError",
    "FeatureFileError",
    "GaussianEmission",
    "HalfSquare",
    "HopfieldConfig",
    "LandscapeGrid",
    "LogPartition",
    "LogSumExp",
    "OriginBallReport",
    "RecLag",
    "RecLagDetector",
    "ScoreSet",
    "TrainResult",
    "TrainerConfig",
    "TrainingDivergedError",
    "Trajectory",
    "calibrate_gamma",
    "calibrate_gamma_for_dynamics",
    "capture_radius",
    "chi",
    "classify_attractor",
    "demo_model",
    "dense_energy",
    "energy_score",
    "estimate_log_partition",
    "evaluate_detector",
    "exact_log_objective",
    "exact_log_objective_gradients",
    "exact_objective",
    "export_landscape",
    "fpr_at_tpr",
    "gate_value",
    "gaussian_log_emission",
    "gen_gaussian_mixture",
    "gen_uniform_ring",
    "general_energy",
    "in_basin",
    "integrate_two_body",
    "log_density",
    "log_joint_unnormalized",
    "log_mean_exp",
    "mc_objective",
    "memory_posterior",
    "mhe_score",
    "modern_energy",
    "msp_score",
    "normalize_features",
    "ood_score",
    "react_score",
    "read_density_model",
    "read_features",
    "reclag_update",
    "roc_and_auc",
    "run_to_fixed_point",
    "she_score",
    "stable_log_sum_exp",
    "stable_softmax",
    "theorem1_ball_check",
    "theorem2_gamma",
    "train",
    "vanilla_update",
    "write_density_model",
    "write_features",
]
