"""Ranking of postural-control protocols and plug-in classification.

The pipeline has four stages: extract low-dimensional summary measures from
centre-of-pressure trajectories (``features``), or simulate such summaries
directly (``simgen``); estimate per-protocol class contrasts with a targeted
one-step update of cross-validated ensemble fits and rank the protocols
(``tmle``); classify subjects with probability fits over the top-ranked
protocols and evaluate by leave-one-out (``classify``).
"""

from .classify import (
    EvalConfig,
    PerfReport,
    PluginClassifier,
    StudyResult,
    classify,
    fit_plugin,
    loo_evaluate,
    simulation_study,
    study_report,
)
from .features import (
    BasicSummary,
    ExtendedSummary,
    PhaseSchedule,
    TimeWindow,
    Trajectory,
    barycenter_path,
    basic_summary,
    extended_summary,
    interval_mean,
    read_trajectory,
    reference_point,
    slope_fit,
    summary_dict,
    sway_series,
    write_trajectory,
)
from .simgen import (
    Covariates,
    Dataset,
    SimConfig,
    SubjectRecord,
    SwayRegimes,
    class_probability,
    draw_covariates,
    draw_dataset,
    draw_subject,
    outcome_mean,
    read_dataset,
    synth_trajectory,
    write_dataset,
)
from .slearn import (
    Ensemble,
    FoldPlan,
    LearnerSpec,
    cv_predictions,
    default_library,
    fit_base,
    make_folds,
    super_learn,
)
from .tmle import (
    AteEstimate,
    ProtocolRanking,
    TmleConfig,
    estimate_g,
    estimate_q,
    protocol_score,
    rank_protocols,
    ranking_report,
)

__version__ = "0.1.0"

__all__ = [
    "AteEstimate",
    "BasicSummary",
    "Covariates",
    "Dataset",
    "Ensemble",
    "EvalConfig",
    "ExtendedSummary",
    "FoldPlan",
    "LearnerSpec",
    "PerfReport",
    "PhaseSchedule",
    "PluginClassifier",
    "ProtocolRanking",
    "SimConfig",
    "StudyResult",
    "SubjectRecord",
    "SwayRegimes",
    "TimeWindow",
    "TmleConfig",
    "Trajectory",
    "barycenter_path",
    "basic_summary",
    "class_probability",
    "classify",
    "cv_predictions",
    "default_library",
    "draw_covariates",
    "draw_dataset",
    "draw_subject",
    "estimate_g",
    "estimate_q",
    "extended_summary",
    "fit_base",
    "fit_plugin",
    "interval_mean",
    "loo_evaluate",
    "make_folds",
    "outcome_mean",
    "protocol_score",
    "rank_protocols",
    "ranking_report",
    "read_dataset",
    "read_trajectory",
    "reference_point",
    "simulation_study",
    "slope_fit",
    "study_report",
    "summary_dict",
    "super_learn",
    "sway_series",
    "synth_trajectory",
    "write_dataset",
    "write_trajectory",
]
