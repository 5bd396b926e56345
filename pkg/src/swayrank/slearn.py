"""Base learners and their cross-validated convex aggregation.

``super_learn`` fits every learner in a library, computes out-of-fold
predictions, and finds the simplex-constrained weight vector minimizing the
cross-validated risk of the blended prediction.  The optimizer solution is
compared against every vertex of the simplex and the better one is kept, so
the ensemble's cross-validated risk never exceeds the best single learner's.

Learners are deliberately small and self-contained: a constant, linear and
logistic models fitted by (iteratively reweighted) least squares, a
k-nearest-neighbour rule on standardized features, and a rank-based
top-scoring-pair classifier.  The same machinery serves three roles
downstream: the class-membership probability given covariates, the
summary-component regressions, and the classification regression itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist
from scipy.special import expit

from .errors import ArityMismatch, DegenerateData, EmptyLibrary

PROB_CLIP = 1e-6
RIDGE_JITTER = 1e-8
IRLS_MAX_ITER = 100
IRLS_TOL = 1e-8
WEIGHT_MAX_ITER = 10_000
WEIGHT_GAP_TOL = 1e-8

REGRESSION = "regression"
PROBABILITY = "probability"


@dataclass(frozen=True)
class LearnerSpec:
    """A library member: learner kind plus the prediction task."""

    kind: str  # constant | glm-main-terms | glm-interactions | knn | tsp
    task: str  # regression | probability
    k: int = 5  # neighbour count, knn only

    def __post_init__(self):
        if self.kind not in ("constant", "glm-main-terms", "glm-interactions", "knn", "tsp"):
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.task not in (REGRESSION, PROBABILITY):
            raise ValueError(f"unknown task {self.task!r}")
        if self.kind == "tsp" and self.task != PROBABILITY:
            raise ValueError("tsp is a probability learner")
        if self.kind == "knn" and self.k < 1:
            raise ValueError("knn needs k >= 1")

    @property
    def name(self) -> str:
        return f"knn({self.k})" if self.kind == "knn" else self.kind


def default_library(task: str, preset: str = "full") -> list[LearnerSpec]:
    """Stock libraries: a bias-variance spread ("full"), two members ("reduced"),
    or a single linear model ("glm")."""
    if preset == "full":
        if task == PROBABILITY:
            kinds = ["constant", "glm-main-terms", "knn", "tsp"]
        else:
            kinds = ["constant", "glm-main-terms", "glm-interactions", "knn"]
    elif preset == "reduced":
        kinds = ["glm-main-terms", "tsp"] if task == PROBABILITY else ["glm-main-terms", "knn"]
    elif preset == "glm":
        kinds = ["glm-main-terms"]
    else:
        raise ValueError(f"unknown library preset {preset!r}")
    return [LearnerSpec(kind=k, task=task) for k in kinds]


def resolve_library(library, task: str) -> list[LearnerSpec]:
    if isinstance(library, str):
        return default_library(task, library)
    specs = list(library)
    if not specs:
        raise EmptyLibrary("learner library is empty")
    if any(s.task != task for s in specs):
        raise ValueError(f"library members must all have task {task!r}")
    return specs


# ---------------------------------------------------------------------------
# base learners


def _design(x: np.ndarray, interactions: bool) -> np.ndarray:
    cols = [np.ones(x.shape[0]), x]
    if interactions:
        m = x.shape[1]
        pairs = [x[:, p] * x[:, q] for p in range(m) for q in range(p + 1, m)]
        if pairs:
            cols.append(np.stack(pairs, axis=1))
    return np.column_stack(cols)


def _solve_normal(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve s.p.d. normal equations, ridge-jittering singular systems."""
    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
        return cho_solve(factor, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    jittered = gram + RIDGE_JITTER * np.eye(gram.shape[0])
    try:
        factor = cho_factor(jittered, lower=True, check_finite=False)
        return cho_solve(factor, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(jittered, rhs, rcond=None)[0]


class ConstantLearner:
    """Predicts the training mean (regression) or class frequency (probability)."""

    def __init__(self, value: float):
        self.value = float(value)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape[0], self.value)

    def to_dict(self) -> dict:
        return {"kind": "constant", "value": self.value}


class GlmLearner:
    """Linear model: least squares (regression) or IRLS logistic (probability)."""

    def __init__(self, coef: np.ndarray, task: str, interactions: bool):
        self.coef = np.asarray(coef, dtype=float)
        self.task = task
        self.interactions = interactions

    def predict(self, x: np.ndarray) -> np.ndarray:
        eta = _design(x, self.interactions) @ self.coef
        return expit(eta) if self.task == PROBABILITY else eta

    def to_dict(self) -> dict:
        kind = "glm-interactions" if self.interactions else "glm-main-terms"
        return {"kind": kind, "task": self.task, "coef": self.coef.tolist()}


@njit(cache=True)
def _chol_solve(gram, rhs, jitter):
    """Cholesky solve of an s.p.d. system; singular systems get the ridge jitter."""
    m = gram.shape[0]
    chol = np.empty((m, m))
    shift = 0.0
    for _ in range(6):
        ok = True
        for a in range(m):
            for b in range(a + 1):
                acc = gram[a, b]
                if a == b:
                    acc += shift
                for c in range(b):
                    acc -= chol[a, c] * chol[b, c]
                if a == b:
                    if acc <= 0.0:
                        ok = False
                        break
                    chol[a, a] = math.sqrt(acc)
                else:
                    chol[a, b] = acc / chol[b, b]
            if not ok:
                break
        if ok:
            out = np.empty(m)
            for a in range(m):
                acc = rhs[a]
                for c in range(a):
                    acc -= chol[a, c] * out[c]
                out[a] = acc / chol[a, a]
            for a in range(m - 1, -1, -1):
                acc = out[a]
                for c in range(a + 1, m):
                    acc -= chol[c, a] * out[c]
                out[a] = acc / chol[a, a]
            return out
        shift = jitter if shift == 0.0 else shift * 1e3
    return np.zeros(m)


@njit(cache=True)
def _sigmoid_fill(design, coef, p):
    n, m = design.shape
    for k in range(n):
        eta = 0.0
        for c in range(m):
            eta += design[k, c] * coef[c]
        if eta >= 0.0:
            ez = math.exp(-eta)
            p[k] = 1.0 / (1.0 + ez)
        else:
            ez = math.exp(eta)
            p[k] = ez / (1.0 + ez)


@njit(cache=True)
def _nll(y, p):
    total = 0.0
    for k in range(y.shape[0]):
        pk = p[k]
        if pk < 1e-12:
            pk = 1e-12
        elif pk > 1.0 - 1e-12:
            pk = 1.0 - 1e-12
        total -= y[k] * math.log(pk) + (1.0 - y[k]) * math.log(1.0 - pk)
    return total


@njit(cache=True)
def _irls(design, y, max_iter, tol, jitter):
    """IRLS with step halving whenever a Newton step worsens the deviance."""
    n, m = design.shape
    coef = np.zeros(m)
    p = np.empty(n)
    p_cand = np.empty(n)
    cand = np.empty(m)
    gram = np.empty((m, m))
    rhs = np.empty(m)
    _sigmoid_fill(design, coef, p)
    nll = _nll(y, p)
    for _ in range(max_iter):
        gram[:] = 0.0
        rhs[:] = 0.0
        for k in range(n):
            wk = p[k] * (1.0 - p[k])
            res = y[k] - p[k]
            for a in range(m):
                xa = design[k, a]
                rhs[a] += xa * res
                wxa = wk * xa
                for b in range(a + 1):
                    gram[a, b] += wxa * design[k, b]
        for a in range(m):
            for b in range(a + 1, m):
                gram[a, b] = gram[b, a]
        step = _chol_solve(gram, rhs, jitter)
        scale = 1.0
        accepted = False
        for _ in range(31):
            finite = True
            for c in range(m):
                cand[c] = coef[c] + scale * step[c]
                if not math.isfinite(cand[c]):
                    finite = False
            if finite:
                _sigmoid_fill(design, cand, p_cand)
                cand_nll = _nll(y, p_cand)
                if math.isfinite(cand_nll) and cand_nll <= nll + 1e-12:
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            break
        delta = 0.0
        for c in range(m):
            mag = abs(cand[c] - coef[c])
            if mag > delta:
                delta = mag
            coef[c] = cand[c]
        for k in range(n):
            p[k] = p_cand[k]
        nll = cand_nll
        if delta < tol:
            break
    return coef


def _fit_glm(x: np.ndarray, y: np.ndarray, task: str, interactions: bool) -> GlmLearner:
    design = _design(x, interactions)
    if task == REGRESSION:
        coef = _solve_normal(design.T @ design, design.T @ y)
        return GlmLearner(coef, task, interactions)
    coef = _irls(design, y, IRLS_MAX_ITER, IRLS_TOL, RIDGE_JITTER)
    return GlmLearner(coef, task, interactions)


class KnnLearner:
    """Mean/frequency of the k nearest training points on z-scored features.

    Distance ties are broken in favour of the lower training index.  Features
    with zero training variance contribute a z-score of 0.
    """

    def __init__(self, k: int, task: str, x, y):
        self.k = int(k)
        self.task = task
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.mean = self.x.mean(axis=0)
        self.scale = self.x.std(axis=0)
        self.xz = self._standardize(self.x)

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        live = self.scale > 0
        z = np.zeros_like(x, dtype=float)
        z[:, live] = (x[:, live] - self.mean[live]) / self.scale[live]
        return z

    def predict(self, x: np.ndarray) -> np.ndarray:
        dists = cdist(self._standardize(x), self.xz)
        order = np.argsort(dists, axis=1, kind="stable")[:, : self.k]
        return self.y[order].mean(axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": "knn",
            "task": self.task,
            "k": self.k,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
        }


def _fit_knn(x: np.ndarray, y: np.ndarray, task: str, k: int) -> KnnLearner:
    n = x.shape[0]
    if not 1 <= k <= n - 1:
        raise DegenerateData(f"knn needs 1 <= k <= n-1, got k={k}, n={n}")
    return KnnLearner(k, task, x, y)


class TspLearner:
    """Top-scoring-pair rule.

    The fitted pair (p, q) maximizes the between-class gap in the frequency
    of the event {feature p < feature q}; prediction is the add-one-smoothed
    class-1 frequency among training points sharing the indicator value.
    """

    def __init__(self, pair, p_true: float, p_false: float, x, y):
        self.pair = (int(pair[0]), int(pair[1]))
        self.p_true = float(p_true)
        self.p_false = float(p_false)
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)

    def predict(self, x: np.ndarray) -> np.ndarray:
        p, q = self.pair
        ind = x[:, p] < x[:, q]
        return np.where(ind, self.p_true, self.p_false)

    def to_dict(self) -> dict:
        return {
            "kind": "tsp",
            "pair": list(self.pair),
            "p_true": self.p_true,
            "p_false": self.p_false,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
        }


def _fit_tsp(x: np.ndarray, y: np.ndarray) -> TspLearner:
    m = x.shape[1]
    if m < 2:
        raise DegenerateData("tsp needs at least two features")
    ones = y == 1
    if not ones.any() or ones.all():
        raise DegenerateData("tsp needs both classes in the training data")
    less = x[:, :, None] < x[:, None, :]  # [sample, p, q]
    score = np.abs(less[ones].mean(axis=0) - less[~ones].mean(axis=0))
    np.fill_diagonal(score, -1.0)
    flat = int(np.argmax(score))  # first occurrence = lexicographically smallest pair
    pair = (flat // m, flat % m)
    ind = less[:, pair[0], pair[1]]
    probs = []
    for value in (True, False):
        match = ind == value
        probs.append((float(np.sum(ones & match)) + 1.0) / (float(np.sum(match)) + 2.0))
    return TspLearner(pair, probs[0], probs[1], x, y)


def fit_base(spec: LearnerSpec, x: np.ndarray, y: np.ndarray):
    """Fit a single library member; raises DegenerateData when unsupported."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.task == PROBABILITY and spec.kind != "constant" and y.min() == y.max():
        raise DegenerateData(f"{spec.name} needs both classes present")
    if spec.kind == "constant":
        return ConstantLearner(y.mean())
    if spec.kind in ("glm-main-terms", "glm-interactions"):
        return _fit_glm(x, y, spec.task, spec.kind == "glm-interactions")
    if spec.kind == "knn":
        return _fit_knn(x, y, spec.task, spec.k)
    return _fit_tsp(x, y)


def learner_from_dict(d: dict):
    kind = d["kind"]
    if kind == "constant":
        return ConstantLearner(d["value"])
    if kind in ("glm-main-terms", "glm-interactions"):
        return GlmLearner(np.array(d["coef"]), d["task"], kind == "glm-interactions")
    if kind == "knn":
        return KnnLearner(d["k"], d["task"], d["x"], d["y"])
    if kind == "tsp":
        return TspLearner(d["pair"], d["p_true"], d["p_false"], d["x"], d["y"])
    raise ValueError(f"unknown learner kind {kind!r}")


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class FoldPlan:
    """Partition of 0..n-1 into v non-empty folds."""

    v: int
    assignment: np.ndarray

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.int64)
        counts = np.bincount(assignment, minlength=self.v)
        if assignment.min(initial=0) < 0 or assignment.max(initial=0) >= self.v:
            raise ValueError("fold indices out of range")
        if np.any(counts == 0):
            raise ValueError("every fold must be non-empty")
        object.__setattr__(self, "assignment", assignment)


def make_folds(n: int, v: int, rng: np.random.Generator, labels=None) -> FoldPlan:
    """Random fold assignment; stratified by label when labels are given."""
    if not 1 <= v <= n:
        raise ValueError(f"need 1 <= v <= n, got v={v}, n={n}")
    assignment = np.empty(n, dtype=np.int64)
    if labels is None:
        perm = rng.permutation(n)
        assignment[perm] = np.arange(n) % v
    else:
        labels = np.asarray(labels)
        start = 0
        for value in np.unique(labels):
            idx = np.flatnonzero(labels == value)
            perm = rng.permutation(idx)
            assignment[perm] = (start + np.arange(idx.size)) % v
            start += idx.size
    return FoldPlan(v=v, assignment=assignment)


def default_folds(n: int, v: int | None = None) -> int:
    """Stock fold count: 10, or n when n is small."""
    if v is not None:
        return min(v, n)
    return n if n < 20 else 10


def cv_predictions(spec: LearnerSpec, x: np.ndarray, y: np.ndarray, folds: FoldPlan) -> np.ndarray:
    """Out-of-fold predictions; a degenerate fold falls back to the constant fit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    preds = np.empty(x.shape[0])
    for f in range(folds.v):
        test = folds.assignment == f
        train = ~test
        try:
            learner = fit_base(spec, x[train], y[train])
        except DegenerateData as exc:
            warnings.warn(f"fold {f}: {spec.name} degenerate ({exc}); using constant fit")
            learner = ConstantLearner(y[train].mean())
        preds[test] = learner.predict(x[test])
    return preds


# ---------------------------------------------------------------------------
# risk minimization over the simplex


def _risk(task: str, y: np.ndarray, pred: np.ndarray) -> float:
    if task == REGRESSION:
        diff = y - pred
        return float(np.mean(diff * diff))
    p = np.clip(pred, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, v.size + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _fit_weights(task: str, y: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, float]:
    """Projected gradient over the simplex plus a vertex sweep.

    Barzilai-Borwein step sizes with an Armijo backtracking safeguard; stops
    when the first-order optimality gap over the simplex drops below
    WEIGHT_GAP_TOL.  The vertex sweep guarantees the returned risk is never
    above the best single learner's.
    """
    n, m = z.shape
    vertex_risks = [_risk(task, y, z[:, k]) for k in range(m)]
    if m == 1:
        return np.ones(1), vertex_risks[0]

    if task == REGRESSION:
        gram = (2.0 / n) * (z.T @ z)
        lin = (2.0 / n) * (z.T @ y)
        const = float(y @ y) / n

        def risk_grad(w):
            gw = gram @ w
            return 0.5 * float(w @ gw) - float(lin @ w) + const, gw - lin

    else:

        def risk_grad(w):
            pred = z @ w
            p = np.clip(pred, PROB_CLIP, 1.0 - PROB_CLIP)
            risk = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
            inside = (pred > PROB_CLIP) & (pred < 1.0 - PROB_CLIP)
            dldp = np.where(inside, (p - y) / (p * (1.0 - p)), 0.0) / n
            return risk, z.T @ dldp

    w = np.full(m, 1.0 / m)
    risk, grad = risk_grad(w)
    step = 1.0
    for _ in range(WEIGHT_MAX_ITER):
        gap = float(grad @ w - grad.min())  # first-order optimality over the simplex
        if gap <= WEIGHT_GAP_TOL:
            break
        moved = False
        trial = step
        while trial >= 1e-16:
            cand = _project_simplex(w - trial * grad)
            cand_risk, cand_grad = risk_grad(cand)
            if cand_risk <= risk - 1e-4 * float(grad @ (w - cand)):
                dw = cand - w
                dg = cand_grad - grad
                curv = float(dw @ dg)
                step = float(dw @ dw) / curv if curv > 0 else trial * 2.0
                w, risk, grad = cand, cand_risk, cand_grad
                moved = True
                break
            trial *= 0.5
        if not moved:
            break

    best_vertex = int(np.argmin(vertex_risks))
    ensemble_risk = _risk(task, y, z @ w)  # same code path as the vertex risks
    if vertex_risks[best_vertex] < ensemble_risk:
        w = np.zeros(m)
        w[best_vertex] = 1.0
        ensemble_risk = vertex_risks[best_vertex]
    return w, ensemble_risk


@dataclass
class Ensemble:
    """Convex blend of fitted learners with its cross-validated risk table."""

    task: str
    specs: list[LearnerSpec]
    learners: list
    weights: np.ndarray
    cv_risks: dict[str, float]
    n_features: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ArityMismatch(
                f"expected {self.n_features} features, got {x.shape[1] if x.ndim == 2 else x.shape}"
            )
        blend = np.zeros(x.shape[0])
        for weight, learner in zip(self.weights, self.learners):
            if weight != 0.0:
                blend += weight * learner.predict(x)
        if self.task == PROBABILITY:
            blend = np.clip(blend, 0.0, 1.0)
        return blend

    def predict_one(self, x_row) -> float:
        return float(self.predict(np.asarray(x_row, dtype=float)[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "n_features": self.n_features,
            "kinds": [s.name for s in self.specs],
            "learners": [lrn.to_dict() for lrn in self.learners],
            "weights": self.weights.tolist(),
            "cv_risks": self.cv_risks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Ensemble":
        specs = []
        for name in d["kinds"]:
            if name.startswith("knn("):
                specs.append(LearnerSpec(kind="knn", task=d["task"], k=int(name[4:-1])))
            else:
                specs.append(LearnerSpec(kind=name, task=d["task"]))
        return cls(
            task=d["task"],
            specs=specs,
            learners=[learner_from_dict(ld) for ld in d["learners"]],
            weights=np.array(d["weights"], dtype=float),
            cv_risks=dict(d["cv_risks"]),
            n_features=int(d["n_features"]),
        )


def super_learn(
    x: np.ndarray,
    y: np.ndarray,
    library,
    v: int | None = None,
    rng: np.random.Generator | None = None,
    task: str = REGRESSION,
) -> Ensemble:
    """Cross-validated convex aggregation of a learner library.

    Loss is squared error for regression and the negative Bernoulli
    log-likelihood (predictions clipped away from 0 and 1) for probability.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    specs = resolve_library(library, task)
    rng = rng if rng is not None else np.random.default_rng(0)
    n = x.shape[0]
    folds = make_folds(
        n, default_folds(n, v), rng, labels=y if task == PROBABILITY else None
    )
    z = np.column_stack([cv_predictions(spec, x, y, folds) for spec in specs])
    weights, ensemble_risk = _fit_weights(task, y, z)
    cv_risks = {spec.name: _risk(task, y, z[:, k]) for k, spec in enumerate(specs)}
    cv_risks["ensemble"] = ensemble_risk
    learners = [fit_base(spec, x, y) for spec in specs]
    return Ensemble(
        task=task,
        specs=specs,
        learners=learners,
        weights=weights,
        cv_risks=cv_risks,
        n_features=x.shape[1],
    )
