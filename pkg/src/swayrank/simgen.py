"""Synthetic data generation.

Two layers:

* ``draw_dataset`` draws subject records directly at the summary-measure
  level: baseline covariates, a class label whose conditional probability
  follows one of three scenario formulas, and Gaussian summary values around
  twelve fixed conditional-mean formulas (one per summary component and
  protocol) with a common noise level.
* ``synth_trajectory`` (optional) simulates a full centre-of-pressure
  recording as a pair of mean-reverting planar diffusions whose parameters
  switch during the perturbed phase, so the feature-extraction layer can be
  exercised end to end.

Covariates are drawn from a fixed parametric generator (truncated normals
for age/height/weight, Bernoulli for gender/laterality).  The scenario
formulas optionally standardize the continuous covariates against the
generator's location/scale (``logit_standardize``, on by default) to keep
class probabilities away from 0 and 1; the conditional-mean formulas always
use raw covariate units.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DataFormatError, DomainError
from .features import PhaseSchedule, Trajectory
from .rng import substream

# (mean, sd, lower, upper) of the truncated-normal covariate generators.
AGE_PARAMS = (55.0, 15.0, 20.0, 90.0)
HEIGHT_PARAMS = (170.0, 10.0, 140.0, 200.0)
WEIGHT_PARAMS = (72.0, 12.0, 40.0, 120.0)
P_GENDER = 0.5
P_LATERALITY = 0.9


@dataclass(frozen=True)
class Covariates:
    """Baseline covariates: (age, gender, laterality, height, weight)."""

    age: float
    gender: int
    laterality: int
    height: float
    weight: float

    def __post_init__(self):
        if not (self.age > 0 and self.height > 0 and self.weight > 0):
            raise ValueError("age, height and weight must be positive")
        if self.gender not in (0, 1) or self.laterality not in (0, 1):
            raise ValueError("gender and laterality must be 0 or 1")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.age, float(self.gender), float(self.laterality), self.height, self.weight]
        )


@dataclass(frozen=True)
class SimConfig:
    """Scenario, noise level, sample size and master seed of one simulation."""

    scenario: int
    sigma: float
    n: int
    seed: int
    logit_standardize: bool = True

    def __post_init__(self):
        if self.scenario not in (1, 2, 3):
            raise ValueError("scenario must be 1, 2 or 3")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.n < 1:
            raise ValueError("n must be at least 1")


@dataclass(frozen=True)
class SubjectRecord:
    """One observation: covariates, class label and 4 x d summary matrix."""

    w: Covariates
    a: int | None
    y: np.ndarray  # (4, d)


@dataclass(frozen=True)
class Dataset:
    """Column-wise view of a set of subject records.

    w: (n, 5) covariates in (age, gender, laterality, height, weight) order;
    a: (n,) class labels, -1 where unlabeled; y: (n, 4, d) summaries.
    """

    w: np.ndarray
    a: np.ndarray
    y: np.ndarray
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        a = np.asarray(self.a, dtype=np.int64)
        y = np.asarray(self.y, dtype=float)
        if w.ndim != 2 or w.shape[1] != 5:
            raise ValueError("w must have shape (n, 5)")
        n = w.shape[0]
        if a.shape != (n,) or y.shape[:2] != (n, 4) or y.ndim != 3:
            raise ValueError("inconsistent dataset shapes")
        ids = self.ids
        ids = np.arange(1, n + 1) if ids is None else np.asarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValueError("ids must have shape (n,)")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def dim(self) -> int:
        return self.y.shape[2]

    @property
    def labeled(self) -> bool:
        return bool(np.all(self.a >= 0))

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(w=self.w[idx], a=self.a[idx], y=self.y[idx], ids=self.ids[idx])

    def drop(self, index: int) -> "Dataset":
        keep = np.arange(self.n) != index
        return self.subset(np.flatnonzero(keep))

    def records(self) -> list[SubjectRecord]:
        out = []
        for ell in range(self.n):
            w = Covariates(
                age=float(self.w[ell, 0]),
                gender=int(self.w[ell, 1]),
                laterality=int(self.w[ell, 2]),
                height=float(self.w[ell, 3]),
                weight=float(self.w[ell, 4]),
            )
            a = int(self.a[ell]) if self.a[ell] >= 0 else None
            out.append(SubjectRecord(w=w, a=a, y=self.y[ell].copy()))
        return out

    @classmethod
    def from_records(cls, records: Sequence[SubjectRecord], ids=None) -> "Dataset":
        if not records:
            raise ValueError("cannot build a dataset from zero records")
        d = records[0].y.shape[1]
        if any(r.y.shape != (4, d) for r in records):
            raise ValueError("summary dimension must be consistent across subjects")
        w = np.stack([r.w.as_array() for r in records])
        a = np.array([r.a if r.a is not None else -1 for r in records], dtype=np.int64)
        y = np.stack([r.y for r in records])
        return cls(w=w, a=a, y=y, ids=ids)


def _truncated_normal(rng: np.random.Generator, params) -> float:
    mean, sd, lo, hi = params
    u_lo = ndtr((lo - mean) / sd)
    u_hi = ndtr((hi - mean) / sd)
    return mean + sd * float(ndtri(u_lo + rng.random() * (u_hi - u_lo)))


def draw_covariates(rng: np.random.Generator) -> Covariates:
    """One covariate draw; consumes exactly five uniforms from ``rng``."""
    age = _truncated_normal(rng, AGE_PARAMS)
    gender = int(rng.random() < P_GENDER)
    laterality = int(rng.random() < P_LATERALITY)
    height = _truncated_normal(rng, HEIGHT_PARAMS)
    weight = _truncated_normal(rng, WEIGHT_PARAMS)
    return Covariates(age=age, gender=gender, laterality=laterality, height=height, weight=weight)


def _scenario_logit(scenario: int, w1, w2, w3, w4, w5):
    if scenario == 1:
        return w1 / 50 + w2 / 50 - w3 / 10 - w4 / 2000 + w5
    if scenario == 2:
        return math.cos(w1 + w5) + math.sin(w1 + w5)
    x10 = 10 * math.cos(w1 + w3)
    x5 = 5 * math.cos(w1 + w3)
    return math.floor(x10) + math.sqrt(x5 - math.floor(x5)) * (math.pi / 50) * math.sin(x10)


def class_probability(scenario: int, w: Covariates, logit_standardize: bool = True) -> float:
    """Conditional probability of class 1 given covariates under a scenario."""
    if logit_standardize:
        w1 = (w.age - AGE_PARAMS[0]) / AGE_PARAMS[1]
        w4 = (w.height - HEIGHT_PARAMS[0]) / HEIGHT_PARAMS[1]
        w5 = (w.weight - WEIGHT_PARAMS[0]) / WEIGHT_PARAMS[1]
    else:
        w1, w4, w5 = w.age, w.height, w.weight
    logit = _scenario_logit(scenario, w1, float(w.gender), float(w.laterality), w4, w5)
    return 1.0 / (1.0 + math.exp(-logit))


def outcome_mean(i: int, j: int, a: int, w: Covariates) -> float:
    """Conditional mean of summary component i under protocol j given (a, w)."""
    if i not in (1, 2, 3) or j not in (1, 2, 3, 4) or a not in (0, 1):
        raise ValueError("outcome_mean expects i in 1..3, j in 1..4, a in {0,1}")
    w1, w2, w3, w4, w5 = w.age, float(w.gender), float(w.laterality), w.height, w.weight
    if j == 1:
        if i == 1:
            return 2 * (a * math.sin(w1 + w4) + (1 - a) * math.cos(w1 + w5))
        if i == 2:
            x = (1 - 2 * a) * w5 / 160 + a / 4
            return 3 * (
                (1 - 6 * a) * x**5 - a * x**4 + x**3 - (1 - a / 2) * x**2 + a * x
            )
        return a * math.tan(w4) + (1 - a) * math.tan(w5 + w1 * w2)
    if j == 2:
        if i == 1:
            return (a + w1 + w2 + w3 + w5 + w1 * w2 + (1 - a) * w5 + w2 * w3 * w4) / 120
        if i == 2:
            return 5 * (a * math.sin(w1 + w4) + (1 - a) * math.cos(w1 + w4))
        return (a * (2 * w1 + 1.5 * w3) + (1 - a) * w5) / 20
    if j == 3:
        if i == 1:
            arg1 = 2 * w1 + 1.5 * w3
            if (a == 1 and arg1 <= 0) or (a == 0 and w5 <= 0):
                raise DomainError("log argument must be positive")
            return a * math.log(arg1) + (1 - a) * math.log(w5)
        if i == 2:
            x = (w4 + w5) / (145 + a * w1)
            return (x + 7) * (x + 2) * (x - 7) * (x - 3) / 45
        x = math.cos(w3 + w4 + w5)
        stair = math.floor(2 * x) + math.sqrt(2 * x - math.floor(2 * x))
        return math.pi * (a * math.sin(x) * stair + (1 - a) * math.cos(x) * stair)
    if i == 1:
        x = (a * w2 + w4 + w5) / 30
        return (2 * x**3 + x**2 - x - 1) / 100
    if i == 2:
        return (a + w1 + w2 + w3 + w5) / 60
    return (w1 * w3 * w4 / 3 + (1 - a) * (w1 + w3 * w4) + a * w2 * w5) / 1000


def draw_subject(rng: np.random.Generator, config: SimConfig, summary_dim: int = 3) -> SubjectRecord:
    """One subject draw from a single random stream.

    Draw order is fixed (covariates, class, then the summary matrix row by
    row) so records are bit-identical for a given stream.  For the 8-dim
    summary the five slope components carry no class signal and are drawn as
    pure noise around zero.
    """
    if summary_dim not in (3, 8):
        raise ValueError("summary_dim must be 3 or 8")
    w = draw_covariates(rng)
    p = class_probability(config.scenario, w, config.logit_standardize)
    a = int(rng.random() < p)
    loc = np.zeros((4, summary_dim))
    for j in range(1, 5):
        for i in range(1, 4):
            loc[j - 1, i - 1] = outcome_mean(i, j, a, w)
    y = rng.normal(loc, config.sigma)
    return SubjectRecord(w=w, a=a, y=y)


def draw_dataset(config: SimConfig, summary_dim: int = 3) -> Dataset:
    """n independent subjects; subject ``ell`` uses stream (seed, "subject", ell)."""
    records = [
        draw_subject(substream(config.seed, "subject", ell), config, summary_dim)
        for ell in range(config.n)
    ]
    return Dataset.from_records(records)


@dataclass(frozen=True)
class SwayRegimes:
    """Parameters of the piecewise mean-reverting trajectory generator.

    Each foot follows a planar Ornstein-Uhlenbeck-type diffusion around its
    own centre.  During the perturbed phase the centres shift by
    ``perturbed_offset`` and the (rate, vol) pair switches to the perturbed
    values.  ``break_jitter`` draws the two regime-change times uniformly in
    a symmetric window around the scheduled phase boundaries.
    """

    center: tuple[float, float] = (0.0, 0.0)
    stance_width: float = 20.0
    rate: float = 2.0
    vol: float = 1.0
    perturbed_offset: tuple[float, float] = (2.0, 1.0)
    perturbed_rate: float = 1.0
    perturbed_vol: float = 2.0
    break_jitter: float = 0.0


def synth_trajectory(
    rng: np.random.Generator,
    schedule: PhaseSchedule | None = None,
    regimes: SwayRegimes | None = None,
    dt: float = 0.025,
) -> Trajectory:
    """Euler-Maruyama simulation of a two-foot recording on t_k = k*dt."""
    schedule = schedule or PhaseSchedule()
    regimes = regimes or SwayRegimes()
    n = int(round(schedule.total / dt))
    t = np.arange(1, n + 1) * dt

    jitter = regimes.break_jitter
    t_on = schedule.phase2_start + (rng.uniform(-jitter, jitter) if jitter > 0 else 0.0)
    t_off = schedule.phase2_end + (rng.uniform(-jitter, jitter) if jitter > 0 else 0.0)

    half = np.array([regimes.stance_width / 2.0, 0.0])
    center = np.asarray(regimes.center, dtype=float)
    quiet_centers = np.stack([center - half, center + half])  # (foot, 2)
    offset = np.asarray(regimes.perturbed_offset, dtype=float)
    shocks = rng.standard_normal((n, 2, 2))  # (step, foot, coord)

    pos = quiet_centers.copy()
    sqrt_dt = math.sqrt(dt)
    path = np.empty((n, 2, 2))
    for k in range(n):
        perturbed = t_on <= t[k] < t_off
        target = quiet_centers + offset if perturbed else quiet_centers
        rate = regimes.perturbed_rate if perturbed else regimes.rate
        vol = regimes.perturbed_vol if perturbed else regimes.vol
        pos = pos + rate * (target - pos) * dt + vol * sqrt_dt * shocks[k]
        path[k] = pos
    return Trajectory(t=t, left=path[:, 0], right=path[:, 1], dt=dt)


def dataset_header(dim: int) -> list[str]:
    cols = ["id", "age", "gender", "laterality", "height", "weight", "class"]
    for j in range(1, 5):
        cols.extend(f"y{j}_{i}" for i in range(1, dim + 1))
    return cols


def write_dataset(path, data: Dataset) -> None:
    """Write the dataset CSV (one row per subject, ``class`` empty if unlabeled)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset_header(data.dim))
        for ell in range(data.n):
            row = [
                str(int(data.ids[ell])),
                repr(float(data.w[ell, 0])),
                str(int(data.w[ell, 1])),
                str(int(data.w[ell, 2])),
                repr(float(data.w[ell, 3])),
                repr(float(data.w[ell, 4])),
                str(int(data.a[ell])) if data.a[ell] >= 0 else "",
            ]
            row.extend(repr(float(v)) for v in data.y[ell].reshape(-1))
            writer.writerow(row)


def read_dataset(path) -> Dataset:
    """Read a dataset CSV written by :func:`write_dataset` (dim inferred)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty file")
        n_y = len(header) - 7
        if n_y % 4 != 0 or n_y <= 0 or header != dataset_header(n_y // 4):
            raise DataFormatError(f"{path}: unexpected dataset header")
        dim = n_y // 4
        ids, ws, labels, ys = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                ids.append(int(row[0]))
                ws.append([float(v) for v in row[1:6]])
                labels.append(int(row[6]) if row[6] != "" else -1)
                ys.append([float(v) for v in row[7:]])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if not ids:
        raise DataFormatError(f"{path}: no subjects")
    y = np.array(ys).reshape(len(ids), 4, dim)
    return Dataset(w=np.array(ws), a=np.array(labels), y=y, ids=np.array(ids))
