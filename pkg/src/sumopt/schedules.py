"""Step-size schedules: a constant phase followed by polynomial decay.

The family is eta_t = alpha for t <= K and alpha/(t-K)^p afterwards.
A spec is called compliant when p lies in (1/2, 1]: the step sum then
diverges while the squared-step sum stays finite, and consecutive steps
have ratio tending to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ScheduleSpec:
    alpha: float
    K: int
    p: float

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a finite positive number, got {self.alpha!r}")
        if not (isinstance(self.K, int) and self.K >= 0):
            raise ValueError(f"K must be a non-negative integer, got {self.K!r}")
        # p < 0 would make the tail increase, which the family excludes
        if not (isinstance(self.p, (int, float)) and math.isfinite(self.p) and self.p >= 0):
            raise ValueError(f"p must be a finite non-negative number, got {self.p!r}")

    @property
    def compliant(self) -> bool:
        return 0.5 < self.p <= 1.0


@dataclass(frozen=True)
class ScheduleReport:
    """Numeric evidence for one spec; the `compliant` verdict is analytic."""

    compliant: bool
    horizon: int
    ts: np.ndarray = field(repr=False)          # sample points, increasing
    sum_eta: np.ndarray = field(repr=False)     # partial sums of eta_t at ts
    sum_eta_sq: np.ndarray = field(repr=False)  # partial sums of eta_t^2 at ts
    ratio_ts: np.ndarray = field(repr=False)    # tail sample points
    ratio_tail: np.ndarray = field(repr=False)  # eta_{t-1}/eta_t at ratio_ts


def make_schedule(alpha: float, p: float = 1.0, K: int | None = None,
                  K_frac: float | None = None, T: int | None = None) -> ScheduleSpec:
    """Build a spec from either an absolute K or a fraction of the horizon.

    K_frac is truncated toward zero: K = int(K_frac * T).
    """
    if (K is None) == (K_frac is None):
        raise ValueError("exactly one of K and K_frac must be given")
    if K_frac is not None:
        if T is None:
            raise ValueError("K_frac requires the horizon T")
        if not (0.0 <= K_frac <= 1.0):
            raise ValueError(f"K_frac must lie in [0, 1], got {K_frac!r}")
        K = int(K_frac * T)
    return ScheduleSpec(alpha=float(alpha), K=int(K), p=float(p))


def step_size(spec: ScheduleSpec, t: int) -> float:
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if t <= spec.K:
        return spec.alpha
    return spec.alpha / (t - spec.K) ** spec.p


def step_sizes(spec: ScheduleSpec, T: int) -> np.ndarray:
    """Vector of eta_t for t = 1..T."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    t = np.arange(1, T + 1, dtype=np.float64)
    tail = np.maximum(t - spec.K, 1.0)
    return np.where(t <= spec.K, spec.alpha, spec.alpha / tail ** spec.p)


def smoothed_step(spec: ScheduleSpec, mu: float, t: int) -> float:
    """Geometric average (1-mu) * sum_{k<=t} mu^(t-k) eta_k.

    Satisfies the recursion s_t = mu*s_{t-1} + (1-mu)*eta_t with s_0 = 0,
    which is how it is computed here.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not (0.0 <= mu < 1.0):
        raise ValueError(f"mu must lie in [0, 1), got {mu!r}")
    s = 0.0
    for k in range(1, t + 1):
        s = mu * s + (1.0 - mu) * step_size(spec, k)
    return s


def iterations_for(n_samples: int, batch: int, epochs: int) -> int:
    """Total step count: ceil(n_samples/batch) batches per epoch."""
    for name, v in (("n_samples", n_samples), ("batch", batch), ("epochs", epochs)):
        if not (isinstance(v, int) and v >= 1):
            raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
    return -(-n_samples // batch) * epochs


def validate_schedule(spec: ScheduleSpec, horizon: int = 100_000) -> ScheduleReport:
    """Analytic compliance verdict plus numeric evidence up to `horizon`.

    The verdict depends on p alone; finite partial sums cannot prove
    divergence, so the sampled sums and step ratios are illustrative.
    """
    if horizon < 10:
        raise ValueError(f"horizon must be >= 10, got {horizon}")
    eta = step_sizes(spec, horizon)
    csum = np.cumsum(eta)
    csum_sq = np.cumsum(eta * eta)
    ts = np.unique(np.geomspace(1, horizon, num=24).astype(np.int64))
    ratio_lo = min(max(spec.K + 2, horizon // 10), horizon - 8)
    ratio_ts = np.unique(np.linspace(ratio_lo, horizon, num=8).astype(np.int64))
    ratio_tail = eta[ratio_ts - 2] / eta[ratio_ts - 1]
    return ScheduleReport(
        compliant=spec.compliant,
        horizon=horizon,
        ts=ts,
        sum_eta=csum[ts - 1],
        sum_eta_sq=csum_sq[ts - 1],
        ratio_ts=ratio_ts,
        ratio_tail=ratio_tail,
    )
