"""Summary measures of two-foot centre-of-pressure trajectories.

A recording session lasts 70 s and is split into three phases: a quiet first
phase, a perturbed middle phase (15 s to 50 s by default) and a quiet last
phase.  The raw signal is the position of each foot's centre of pressure on
the platform over time.  From it we derive

* the barycenter path ``B_t = (L_t + R_t) / 2``,
* a reference position ``b`` (componentwise median of ``B_t`` over the first
  phase),
* the sway series ``C_t = ||B_t - b||`` describing body sway,
* a 3-vector of mean-level jumps of ``C_t`` around the onset and offset of
  the perturbation, and
* optionally five least-squares slopes of the barycenter path (ordinate on
  abscissa) over a fixed set of windows, capturing average orientation,
  giving an 8-vector.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DataFormatError, EmptyWindow, SlopeDegenerate

SLOPE_VAR_TOL = 1e-12


class TimeWindow(NamedTuple):
    """Interval of time with explicit endpoint inclusion."""

    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = False

    def mask(self, t: np.ndarray) -> np.ndarray:
        lo_ok = t >= self.lo if self.closed_lo else t > self.lo
        hi_ok = t <= self.hi if self.closed_hi else t < self.hi
        return lo_ok & hi_ok

    def __str__(self) -> str:
        left = "[" if self.closed_lo else "]"
        right = "]" if self.closed_hi else "["
        return f"{left}{self.lo:g},{self.hi:g}{right}"


@dataclass(frozen=True)
class Trajectory:
    """Two-foot centre-of-pressure recording.

    Attributes
    ----------
    t : (n,) strictly increasing sample times in seconds.
    left, right : (n, 2) per-foot positions in platform units.
    dt : nominal sampling step in seconds (irregular sampling is accepted;
        dt is used only when constructing regular grids).
    """

    t: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dt: float = 0.025

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        left = np.asarray(self.left, dtype=float)
        right = np.asarray(self.right, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("trajectory must contain at least one sample")
        if left.shape != (t.size, 2) or right.shape != (t.size, 2):
            raise ValueError("left/right must have shape (n, 2)")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
            raise ValueError("trajectory contains non-finite values")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("sample times must be strictly increasing")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def regular(cls, left, right, dt: float = 0.025) -> "Trajectory":
        """Trajectory on the regular grid t_k = k*dt, k = 1..n."""
        left = np.asarray(left, dtype=float)
        t = np.arange(1, left.shape[0] + 1) * dt
        return cls(t=t, left=left, right=right, dt=dt)

    @property
    def n(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class PhaseSchedule:
    """Phase timing of a recording and the averaging-window length."""

    phase2_start: float = 15.0
    phase2_end: float = 50.0
    total: float = 70.0
    mean_window: float = 5.0

    def __post_init__(self):
        if not 0 < self.phase2_start < self.phase2_end < self.total:
            raise ValueError("phase boundaries must satisfy 0 < start < end < total")
        if not self.mean_window > 0:
            raise ValueError("mean_window must be positive")

    def mean_windows(self) -> tuple[TimeWindow, TimeWindow, TimeWindow, TimeWindow]:
        """The four averaging windows around perturbation onset and offset.

        With the defaults these are [10,15[, ]15,20], [45,50[ and ]50,55].
        """
        s, e, w = self.phase2_start, self.phase2_end, self.mean_window
        return (
            TimeWindow(s - w, s, closed_lo=True, closed_hi=False),
            TimeWindow(s, s + w, closed_lo=False, closed_hi=True),
            TimeWindow(e - w, e, closed_lo=True, closed_hi=False),
            TimeWindow(e, e + w, closed_lo=False, closed_hi=True),
        )

    def slope_windows(self) -> tuple[TimeWindow, ...]:
        """The five slope-fit windows (all half-open on the right).

        With the defaults: [10,15[, [15,20[, [20,45[, [45,50[, [50,55[.
        """
        s, e, w = self.phase2_start, self.phase2_end, self.mean_window
        return (
            TimeWindow(s - w, s),
            TimeWindow(s, s + w),
            TimeWindow(s + w, e - w),
            TimeWindow(e - w, e),
            TimeWindow(e, e + w),
        )

    def reference_window(self) -> TimeWindow:
        """First phase, both endpoints included."""
        return TimeWindow(0.0, self.phase2_start, closed_lo=True, closed_hi=True)


@dataclass(frozen=True)
class BasicSummary:
    """3-vector of mean sway jumps plus the four window means behind it.

    ``y = (c1p - c1m, c2m - c1p, c2p - c2m)`` where ``means`` holds
    ``(c1m, c1p, c2m, c2p)``, the sway averages just before/after the
    perturbation onset and just before/after its offset.
    """

    y: np.ndarray
    means: np.ndarray


@dataclass(frozen=True)
class ExtendedSummary:
    """8-vector summary: the three mean jumps followed by five window slopes."""

    y: np.ndarray
    means: np.ndarray


def barycenter_path(traj: Trajectory) -> np.ndarray:
    """Midpoint of the two feet at each sample, shape (n, 2)."""
    return 0.5 * (traj.left + traj.right)


def reference_point(bpath: np.ndarray, t: np.ndarray, schedule: PhaseSchedule) -> np.ndarray:
    """Componentwise median of the barycenter over the first phase.

    An even sample count yields the midpoint of the two central order
    statistics in each coordinate.
    """
    mask = schedule.reference_window().mask(t)
    if not mask.any():
        raise EmptyWindow(f"no samples in reference window {schedule.reference_window()}")
    return np.median(bpath[mask], axis=0)


def sway_series(bpath: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance of the barycenter from the reference, shape (n,)."""
    return np.hypot(bpath[:, 0] - b[0], bpath[:, 1] - b[1])


def interval_mean(t: np.ndarray, values: np.ndarray, window: TimeWindow) -> float:
    """Arithmetic mean of ``values`` over the samples falling in ``window``."""
    mask = window.mask(t)
    if not mask.any():
        raise EmptyWindow(f"no samples in window {window}")
    return float(np.mean(values[mask]))


def slope_fit(bpath: np.ndarray, t: np.ndarray, window: TimeWindow) -> float:
    """Least-squares slope of the barycenter ordinate on its abscissa.

    Fits y = v*x + u over the window's samples and returns v.  Raises
    SlopeDegenerate when the abscissa variance is below ``SLOPE_VAR_TOL``
    relative to its mean square (vertical or single-point configurations).
    """
    mask = window.mask(t)
    if not mask.any():
        raise EmptyWindow(f"no samples in window {window}")
    x = bpath[mask, 0]
    y = bpath[mask, 1]
    xc = x - x.mean()
    var = float(np.mean(xc * xc))
    ms = float(np.mean(x * x))
    if ms == 0.0 or var < SLOPE_VAR_TOL * ms:
        raise SlopeDegenerate(f"abscissa variance too small over {window}")
    return float(np.mean(xc * (y - y.mean())) / var)


def basic_summary(traj: Trajectory, schedule: PhaseSchedule | None = None) -> BasicSummary:
    """Mean-jump summary of the sway series around perturbation onset/offset."""
    schedule = schedule or PhaseSchedule()
    bpath = barycenter_path(traj)
    b = reference_point(bpath, traj.t, schedule)
    c = sway_series(bpath, b)
    c1m, c1p, c2m, c2p = (interval_mean(traj.t, c, w) for w in schedule.mean_windows())
    y = np.array([c1p - c1m, c2m - c1p, c2p - c2m])
    return BasicSummary(y=y, means=np.array([c1m, c1p, c2m, c2p]))


def extended_summary(traj: Trajectory, schedule: PhaseSchedule | None = None) -> ExtendedSummary:
    """Mean-jump summary extended with five barycenter-orientation slopes."""
    schedule = schedule or PhaseSchedule()
    basic = basic_summary(traj, schedule)
    bpath = barycenter_path(traj)
    slopes = [slope_fit(bpath, traj.t, w) for w in schedule.slope_windows()]
    return ExtendedSummary(y=np.concatenate([basic.y, slopes]), means=basic.means)


def summary_dict(traj: Trajectory, schedule: PhaseSchedule | None = None) -> dict:
    """JSON-ready summary: {"basic": [...], "extended": [...], "means": [...]}."""
    ext = extended_summary(traj, schedule)
    return {
        "basic": [float(v) for v in ext.y[:3]],
        "extended": [float(v) for v in ext.y],
        "means": [float(v) for v in ext.means],
    }


TRAJECTORY_HEADER = ["t", "lx", "ly", "rx", "ry"]


def read_trajectory(path, trim_start: float = 0.0, dt: float = 0.025) -> Trajectory:
    """Read a trajectory CSV (header ``t,lx,ly,rx,ry``, rows sorted by t).

    Samples with ``t < trim_start`` are dropped (warm-up removal).
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRAJECTORY_HEADER:
            raise DataFormatError(
                f"{path}: expected header {','.join(TRAJECTORY_HEADER)!r}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFormatError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataFormatError(f"{path}: no samples")
    arr = np.array(rows)
    if trim_start > 0:
        arr = arr[arr[:, 0] >= trim_start]
        if arr.size == 0:
            raise DataFormatError(f"{path}: no samples left after trimming {trim_start} s")
    t = arr[:, 0]
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise DataFormatError(f"{path}: rows must be sorted by strictly increasing t")
    return Trajectory(t=t, left=arr[:, 1:3], right=arr[:, 3:5], dt=dt)


def write_trajectory(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for k in range(traj.n):
            writer.writerow(
                [
                    repr(float(traj.t[k])),
                    repr(float(traj.left[k, 0])),
                    repr(float(traj.left[k, 1])),
                    repr(float(traj.right[k, 0])),
                    repr(float(traj.right[k, 1])),
                ]
            )


