"""Trajectory records, multi-seed aggregation, and numeric probes.

The probes check finite prefixes of limit statements, so their verdicts
are worded as consistency checks ("consistent", "inconclusive",
"hypothesis-violated:<name>"), never as proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .schedules import ScheduleSpec, step_size


class StepRecord(NamedTuple):
    t: int
    eta: float
    loss: float          # mini-batch loss (exact loss on synthetic problems)
    full_loss: float     # NaN where not evaluated
    grad_norm: float     # full-gradient norm, NaN where not evaluated
    region_flag: int     # 1 when the iterate was outside the operating region


@dataclass
class TrajectoryRecord:
    """Per-step metrics of one seeded run, stored columnwise."""

    seed: int
    formulation: str
    config: object                 # MomentumConfig
    schedule: ScheduleSpec
    t: np.ndarray
    eta: np.ndarray
    loss: np.ndarray
    full_loss: np.ndarray
    grad_norm: np.ndarray
    region_flag: np.ndarray
    wall_ms: np.ndarray
    iterates: np.ndarray | None = None       # (T, d) when recorded
    grad_mom_inner: np.ndarray | None = None  # grad(x_t)^T m_t trace, NaN off-checkpoint

    def __len__(self) -> int:
        return len(self.t)

    def steps(self) -> Iterator[StepRecord]:
        for i in range(len(self.t)):
            yield StepRecord(int(self.t[i]), float(self.eta[i]), float(self.loss[i]),
                             float(self.full_loss[i]), float(self.grad_norm[i]),
                             int(self.region_flag[i]))

    def checkpoint_mask(self) -> np.ndarray:
        return np.isfinite(self.grad_norm)

    def validate(self):
        if len(self.t) == 0:
            raise ValueError("empty trajectory")
        if not np.all(np.diff(self.t) > 0):
            raise ValueError("step counter must be strictly increasing")
        expected = np.array([step_size(self.schedule, int(ti)) for ti in self.t])
        if not np.array_equal(expected, self.eta):
            raise ValueError("recorded eta disagrees with the schedule")


@dataclass(frozen=True)
class AggregateCurve:
    metric: str
    t: np.ndarray
    mean: np.ndarray
    std: np.ndarray   # population std over seeds
    n_seeds: int


@dataclass(frozen=True)
class ConvergenceReport:
    """Squared-gradient-norm summaries over a seed group.

    At each shared checkpoint the squared norms are averaged over seeds;
    min/avg/last are then taken over checkpoints. f_star_proxy is the
    mean full loss over the final five checkpoints.
    """

    n_seeds: int
    n_checkpoints: int
    last_sq: float
    min_sq: float
    avg_sq: float
    f_star_proxy: float
    min_le_avg: bool
    min_le_last: bool


def _shared_checkpoints(trajectories: Sequence[TrajectoryRecord], column: str) -> tuple[np.ndarray, np.ndarray]:
    """Checkpoint grid and stacked values (seeds x checkpoints) for one column."""
    if not trajectories:
        raise ValueError("need at least one trajectory")
    grids = []
    values = []
    for traj in trajectories:
        col = getattr(traj, column)
        mask = np.isfinite(col)
        grids.append(traj.t[mask])
        values.append(col[mask])
    base = grids[0]
    if base.size == 0:
        raise ValueError(f"no recorded values for {column}")
    for g in grids[1:]:
        if not np.array_equal(g, base):
            raise ValueError(f"trajectories do not share a checkpoint grid for {column}")
    return base, np.stack(values)


def convergence_report(trajectories: Sequence[TrajectoryRecord]) -> ConvergenceReport:
    ts, norms = _shared_checkpoints(trajectories, "grad_norm")
    sq = (norms ** 2).mean(axis=0)
    min_sq = float(sq.min())
    avg_sq = float(sq.mean())
    last_sq = float(sq[-1])
    try:
        _, losses = _shared_checkpoints(trajectories, "full_loss")
        tail = losses.mean(axis=0)[-5:]
        f_star_proxy = float(tail.mean())
    except ValueError:
        f_star_proxy = math.nan
    return ConvergenceReport(
        n_seeds=len(trajectories),
        n_checkpoints=int(ts.size),
        last_sq=last_sq,
        min_sq=min_sq,
        avg_sq=avg_sq,
        f_star_proxy=f_star_proxy,
        min_le_avg=min_sq <= avg_sq,
        min_le_last=min_sq <= last_sq,
    )


def aggregate_seeds(trajectories: Sequence[TrajectoryRecord], metric: str) -> AggregateCurve:
    """Pointwise mean and population standard deviation across seeds."""
    if metric not in ("loss", "full_loss", "grad_norm", "eta"):
        raise ValueError(f"unknown metric {metric!r}")
    ts, values = _shared_checkpoints(trajectories, metric)
    return AggregateCurve(
        metric=metric,
        t=ts,
        mean=values.mean(axis=0),
        std=values.std(axis=0, ddof=0),
        n_seeds=len(trajectories),
    )


# --- sequence probe -------------------------------------------------------

@dataclass(frozen=True)
class SequenceProbeInput:
    a: np.ndarray
    b: np.ndarray
    a_tilde: np.ndarray
    C: float
    p: float
    eps: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        at = np.asarray(self.a_tilde, dtype=np.float64)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a_tilde", at)
        if not (a.ndim == b.ndim == at.ndim == 1 and a.size == b.size == at.size):
            raise ValueError("a, b, a_tilde must be 1-d sequences of equal length")
        if a.size < 100:
            raise ValueError(f"need at least 100 terms, got {a.size}")
        if (a < 0).any() or (b < 0).any() or (at < 0).any():
            raise ValueError("sequences must be non-negative")
        if not (self.C > 0):
            raise ValueError(f"C must be positive, got {self.C!r}")
        if not (self.p > 0):
            raise ValueError(f"p must be positive, got {self.p!r}")
        if not (0.0 <= self.eps <= self.p):
            raise ValueError(f"eps must lie in [0, p], got {self.eps!r}")


# Tail-mass thresholds separating "looks divergent" from "looks summable"
# on a 1e5-term prefix: the harmonic series puts ~6% of its partial sum in
# the last half, clearly convergent series orders of magnitude less.
_DIVERGENT_TAIL_FRAC = 0.005
_CONVERGENT_TAIL_FRAC = 0.02
_RATIO_TOL = 0.05
_B_TAIL_TOL = 0.05


@dataclass(frozen=True)
class SequenceProbeReport:
    verdict: str                   # "consistent" | "inconclusive" | "hypothesis-violated:<names>"
    hypotheses: dict
    b_tail: float
    details: dict


def sequence_probe(inp: SequenceProbeInput) -> SequenceProbeReport:
    """Check the convergence hypotheses numerically on a finite prefix.

    Hypotheses: the weight sum diverges, the weighted power sum converges,
    the weight ratio tends to one, and the increment bound holds at every
    index. If all hold, the verdict reports whether the b tail has dropped
    below a small tolerance ("consistent") or not yet ("inconclusive").
    """
    a, b, at = inp.a, inp.b, inp.a_tilde
    n = a.size
    half = n // 2
    details: dict = {}

    total_a = float(a.sum())
    tail_a = float(a[half:].sum())
    frac_a = tail_a / total_a if total_a > 0 else 0.0
    details["weight_sum_tail_frac"] = frac_a
    divergent_weight_sum = frac_a >= _DIVERGENT_TAIL_FRAC

    w = a * b ** inp.p
    total_w = float(w.sum())
    tail_w = float(w[half:].sum())
    frac_w = tail_w / total_w if total_w > 0 else 0.0
    details["power_sum_tail_frac"] = frac_w
    weighted_power_sum_converges = frac_w <= _CONVERGENT_TAIL_FRAC

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(at > 0, a / np.where(at > 0, at, 1.0), np.where(a > 0, np.inf, 1.0))
    tail_ratio_dev = float(np.abs(ratio[-(n // 4):] - 1.0).max())
    details["ratio_tail_deviation"] = tail_ratio_dev
    weight_ratio_tends_to_one = tail_ratio_dev <= _RATIO_TOL

    increments = np.abs(np.diff(b))
    bound = inp.C * at[:-1] * b[:-1] ** (inp.p - inp.eps)
    slack = np.maximum(increments - bound, 0.0)
    worst = float(slack.max()) if slack.size else 0.0
    details["increment_worst_excess"] = worst
    increment_bound = worst <= 1e-12 * max(1.0, float(np.abs(b).max()))

    hypotheses = {
        "divergent_weight_sum": divergent_weight_sum,
        "weighted_power_sum_converges": weighted_power_sum_converges,
        "weight_ratio_tends_to_one": weight_ratio_tends_to_one,
        "increment_bound": increment_bound,
    }
    b_tail = float(b[-max(1, n // 10):].min())

    violated = [name for name, ok in hypotheses.items() if not ok]
    if violated:
        verdict = "hypothesis-violated:" + ",".join(violated)
    elif b_tail <= _B_TAIL_TOL:
        verdict = "consistent"
    else:
        verdict = "inconclusive"
    return SequenceProbeReport(verdict=verdict, hypotheses=hypotheses, b_tail=b_tail, details=details)


# --- descent probe --------------------------------------------------------

@dataclass(frozen=True)
class DescentProbeReport:
    """Qualitative shape of the mean-loss sequence; never an assertion."""

    mean_curve: np.ndarray
    upward_count: int
    upward_total: float
    bounded_upward: bool
    stabilized: bool
    note: str = "qualitative diagnostic, not an assertion"


def descent_probe(trajectories: Sequence[TrajectoryRecord], metadata=None) -> DescentProbeReport:
    _, losses = _shared_checkpoints(trajectories, "full_loss")
    curve = losses.mean(axis=0)
    diffs = np.diff(curve)
    up = diffs[diffs > 0]
    upward_total = float(up.sum())
    drop = max(float(curve[0] - curve.min()), 0.0)
    tail = curve[-max(2, curve.size // 10):]
    spread = float(tail.max() - tail.min())
    scale = max(drop, abs(float(curve[-1])), 1e-12)
    return DescentProbeReport(
        mean_curve=curve,
        upward_count=int(up.size),
        upward_total=upward_total,
        bounded_upward=upward_total <= max(0.05 * drop, 1e-9),
        stabilized=spread <= 0.01 * scale,
    )
