"""Plug-in classification over the top-ranked protocols and its evaluation.

A classifier for J protocols regresses the class label on the baseline
covariates plus the summary vectors of the J most informative protocols
(ensemble probability fit), then thresholds at 1/2; a tie classifies into
class 1.  Evaluation is leave-one-out: for every held-out subject the
protocol ranking and all four classifiers are refitted from scratch on the
remaining subjects, so nothing about the held-out subject leaks into the
pipeline that classifies it.  The replicated study driver repeats the whole
evaluation over independently drawn datasets.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import slearn
from .errors import ArityMismatch
from .parallel import pmap
from .rng import subseed, substream
from .simgen import Covariates, Dataset, SimConfig, draw_dataset
from .tmle import ProtocolRanking, TmleConfig, rank_protocols


@dataclass
class PluginClassifier:
    """Thresholded probability fit over (W, Y^j for the used protocols)."""

    protocols: tuple[int, ...]
    dim: int
    ensemble: slearn.Ensemble
    threshold: float = 0.5

    def features(self, w, y: np.ndarray) -> np.ndarray:
        w = w.as_array() if isinstance(w, Covariates) else np.asarray(w, dtype=float)
        y = np.asarray(y, dtype=float)
        if y.shape != (4, self.dim):
            raise ArityMismatch(f"expected a (4, {self.dim}) summary matrix, got {y.shape}")
        return np.concatenate([w] + [y[j - 1] for j in self.protocols])

    def prob(self, w, y: np.ndarray) -> float:
        return self.ensemble.predict_one(self.features(w, y))

    def to_dict(self) -> dict:
        return {
            "protocols": list(self.protocols),
            "dim": self.dim,
            "threshold": self.threshold,
            "ensemble": self.ensemble.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PluginClassifier":
        return cls(
            protocols=tuple(int(j) for j in d["protocols"]),
            dim=int(d["dim"]),
            ensemble=slearn.Ensemble.from_dict(d["ensemble"]),
            threshold=float(d["threshold"]),
        )


@dataclass(frozen=True)
class PerfReport:
    """Leave-one-out accuracies and per-subject detail."""

    perf: np.ndarray  # (4,) fraction correct for J = 1..4
    predictions: np.ndarray  # (n, 4)
    rankings: tuple  # per-subject protocol order used for its classifiers
    degenerate: tuple  # subject indices whose split lost a class


@dataclass(frozen=True, eq=False)
class EvalConfig:
    """Settings of one leave-one-out evaluation."""

    library: str = "full"
    v: Optional[int] = None
    seed: int = 0
    threads: int = 1


def _feature_matrix(data: Dataset, protocols) -> np.ndarray:
    return np.hstack([data.w] + [data.y[:, j - 1, :] for j in protocols])


def fit_plugin(
    data: Dataset,
    ranking: ProtocolRanking,
    J: int,
    library="full",
    v: int | None = None,
    seed: int = 0,
) -> PluginClassifier:
    """Fit the classifier using the top-J protocols of ``ranking``."""
    if J not in (1, 2, 3, 4):
        raise ValueError("J must be in 1..4")
    if not data.labeled:
        raise ValueError("training data must be fully labeled")
    protocols = tuple(ranking.order[:J])
    x = _feature_matrix(data, protocols)
    ensemble = slearn.super_learn(
        x,
        data.a.astype(float),
        library,
        v=v,
        rng=substream(seed, "h-folds", J),
        task=slearn.PROBABILITY,
    )
    return PluginClassifier(protocols=protocols, dim=data.dim, ensemble=ensemble)


def classify(clf: PluginClassifier, w, y: np.ndarray) -> int:
    """1 if the fitted probability reaches the threshold (ties go to 1)."""
    return int(clf.prob(w, y) >= clf.threshold)


def _evaluate_subject(data: Dataset, ell: int, config: EvalConfig):
    """Rank, fit and classify with subject ``ell`` held out."""
    rest = data.drop(ell)
    truth = int(data.a[ell])
    if rest.a.min() == rest.a.max():
        warnings.warn(f"split {ell}: a class vanished; counting the subject as misclassified")
        return (1 - truth, 1 - truth, 1 - truth, 1 - truth), None, True
    ranking = rank_protocols(
        rest,
        config=TmleConfig(
            library=config.library, v=config.v, seed=subseed(config.seed, "rank", ell)
        ),
    )
    preds = []
    for J in (1, 2, 3, 4):
        clf = fit_plugin(
            rest, ranking, J, config.library, config.v, seed=subseed(config.seed, "fit", ell)
        )
        preds.append(classify(clf, data.w[ell], data.y[ell]))
    return tuple(preds), ranking.order, False


def loo_evaluate(data: Dataset, config: EvalConfig | None = None) -> PerfReport:
    """Leave-one-out accuracy of the four classifiers, re-ranking per split."""
    config = config or EvalConfig()
    if data.n < 2:
        raise ValueError("leave-one-out needs at least two subjects")
    if not data.labeled:
        raise ValueError("evaluation data must be fully labeled")
    rows = pmap(
        lambda ell: _evaluate_subject(data, ell, config), range(data.n), config.threads
    )
    predictions = np.array([row[0] for row in rows], dtype=np.int64)
    rankings = tuple(row[1] for row in rows)
    degenerate = tuple(ell for ell, row in enumerate(rows) if row[2])
    perf = (predictions == data.a[:, None]).mean(axis=0)
    return PerfReport(perf=perf, predictions=predictions, rankings=rankings, degenerate=degenerate)


@dataclass(frozen=True)
class StudyResult:
    """Aggregates of a replicated simulation-and-evaluation study."""

    scenario: int
    sigma: float
    n: int
    B: int
    perf_mean: np.ndarray  # (4,)
    perf_sd: np.ndarray  # (4,)
    ranking_counts: dict  # "3,2,1,4" -> count, full-data ranking per replication
    perf: np.ndarray  # (B, 4)


def simulation_study(
    sim_config: SimConfig,
    eval_config: EvalConfig | None = None,
    B: int = 100,
    summary_dim: int = 3,
) -> StudyResult:
    """B independent replications of draw -> rank -> leave-one-out evaluate.

    Replication b derives its seeds from (sim_config.seed, b), so increasing
    B extends the study without altering earlier replications.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    eval_config = eval_config or EvalConfig()

    def run_one(b: int):
        data = draw_dataset(
            replace(sim_config, seed=subseed(sim_config.seed, "data", b)), summary_dim
        )
        report = loo_evaluate(
            data, replace(eval_config, seed=subseed(sim_config.seed, "eval", b), threads=1)
        )
        full_ranking = rank_protocols(
            data,
            config=TmleConfig(
                library=eval_config.library,
                v=eval_config.v,
                seed=subseed(sim_config.seed, "rank", b),
            ),
        )
        return report.perf, ",".join(str(j) for j in full_ranking.order)

    results = pmap(run_one, range(1, B + 1), eval_config.threads)
    perf = np.array([r[0] for r in results])
    counts = Counter(r[1] for r in results)
    if B == 1:
        warnings.warn("B = 1: the dispersion of Perf is undefined and reported as 0")
        sd = np.zeros(4)
    else:
        sd = perf.std(axis=0, ddof=1)
    return StudyResult(
        scenario=sim_config.scenario,
        sigma=sim_config.sigma,
        n=sim_config.n,
        B=B,
        perf_mean=perf.mean(axis=0),
        perf_sd=sd,
        ranking_counts=dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))),
        perf=perf,
    )


def study_report(result: StudyResult) -> dict:
    """JSON-ready study report."""
    return {
        "B": result.B,
        "n": result.n,
        "sigma": result.sigma,
        "scenario": result.scenario,
        "perf_mean": [float(v) for v in result.perf_mean],
        "perf_sd": [float(v) for v in result.perf_sd],
        "ranking_histogram": {k: int(v) for k, v in result.ranking_counts.items()},
    }


def write_loo_detail(path, data: Dataset, report: PerfReport) -> None:
    """Per-subject CSV: id, truth, the four predictions and the split ranking."""
    with open(path, "w", newline="") as fh:
        fh.write("id,true_class,pred_J1,pred_J2,pred_J3,pred_J4,ranking\n")
        for ell in range(data.n):
            ranking = report.rankings[ell]
            tag = " ".join(str(j) for j in ranking) if ranking is not None else "degenerate"
            preds = ",".join(str(int(p)) for p in report.predictions[ell])
            fh.write(f"{int(data.ids[ell])},{int(data.a[ell])},{preds},{tag}\n")
