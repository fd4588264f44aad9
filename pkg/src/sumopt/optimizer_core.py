"""Unified momentum update, its three equivalent formulations, and the run driver.

One step with momentum constant mu and interpolation factor lam:

    m_t = mu*m_{t-1} - eta_t*g_t
    x_{t+1} = x_t - lam*eta_t*g_t + (1 - lam_tilde)*m_t,   lam_tilde = (1-mu)*lam

lam = 0 is the heavy-ball recursion, lam = 1 the Nesterov one, and
lam = 1/(1-mu) reduces the x update to a plain scaled gradient step.
The "zou" and "yan" formulations carry different auxiliary buffers but
produce the same iterates up to floating-point roundoff.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .diagnostics import TrajectoryRecord
from .schedules import ScheduleSpec, step_sizes

FORMULATIONS = ("sum", "zou", "yan")


class DivergenceError(RuntimeError):
    """A run hit a non-finite loss, gradient, or iterate at `step`."""

    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"run diverged at step {step}")
        self.step = step


@dataclass(frozen=True)
class MomentumConfig:
    mu: float
    lam: float
    lam_tilde: float


def make_config(mu: float, lam: float) -> MomentumConfig:
    """Validate (mu, lam) and derive lam_tilde = (1-mu)*lam."""
    if not (isinstance(mu, (int, float)) and math.isfinite(mu)):
        raise ValueError(f"mu must be a finite number, got {mu!r}")
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"mu must lie in [0, 1), got {mu!r}")
    if not (isinstance(lam, (int, float)) and math.isfinite(lam)):
        raise ValueError(f"lambda must be a finite number, got {lam!r}")
    if lam < 0.0 or lam > 1.0 / (1.0 - mu):
        raise ValueError(
            f"lambda must lie in [0, 1/(1-mu)] = [0, {1.0 / (1.0 - mu):g}], got {lam!r}")
    return MomentumConfig(mu=float(mu), lam=float(lam), lam_tilde=(1.0 - mu) * lam)


def _as_vector(x, name: str = "x") -> np.ndarray:
    v = np.array(x, dtype=np.float64, copy=True, order="C")
    if v.ndim != 1:
        v = v.reshape(-1)
    if v.size == 0:
        raise ValueError(f"{name} must have at least one component")
    return v


@dataclass
class OptimState:
    x: np.ndarray
    m: np.ndarray
    t: int = 1


@dataclass
class ZouState:
    x: np.ndarray
    m_curr: np.ndarray
    m_prev: np.ndarray
    t: int = 1


@dataclass
class YanState:
    x: np.ndarray
    y: np.ndarray
    y_tilde: np.ndarray
    t: int = 1


def init_state(x1) -> OptimState:
    x = _as_vector(x1)
    return OptimState(x=x, m=np.zeros_like(x), t=1)


def init_zou_state(x1) -> ZouState:
    x = _as_vector(x1)
    return ZouState(x=x, m_curr=np.zeros_like(x), m_prev=np.zeros_like(x), t=1)


def init_yan_state(x1) -> YanState:
    x = _as_vector(x1)
    return YanState(x=x, y=x.copy(), y_tilde=x.copy(), t=1)


def _check_step_args(x: np.ndarray, eta: float, g) -> np.ndarray:
    if not (isinstance(eta, (int, float)) and math.isfinite(eta) and eta > 0):
        raise ValueError(f"eta must be a finite positive number, got {eta!r}")
    g = np.ascontiguousarray(g, dtype=np.float64)
    if g.shape != x.shape:
        raise ValueError(f"gradient shape {g.shape} does not match state shape {x.shape}")
    if not np.isfinite(g).all():
        raise ValueError("gradient has non-finite components")
    return g


def sum_step(state: OptimState, cfg: MomentumConfig, eta: float, g) -> OptimState:
    """Advance the single-buffer form in place: momentum first, then x."""
    g = _check_step_args(state.x, eta, g)
    _backend.sum_step(state.x, state.m, g, cfg.mu, cfg.lam, cfg.lam_tilde, float(eta))
    state.t += 1
    return state


def zou_step(state: ZouState, cfg: MomentumConfig, eta: float, g) -> ZouState:
    g = _check_step_args(state.x, eta, g)
    _backend.zou_step(state.x, state.m_curr, state.m_prev, g, cfg.mu, cfg.lam, float(eta))
    state.t += 1
    return state


def yan_step(state: YanState, cfg: MomentumConfig, eta: float, g) -> YanState:
    g = _check_step_args(state.x, eta, g)
    _backend.yan_step(state.x, state.y, state.y_tilde, g, cfg.mu, cfg.lam, float(eta))
    state.t += 1
    return state


@dataclass(frozen=True)
class OutputMode:
    kind: str
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("last", "random", "minimum"):
            raise ValueError(f"output mode must be last, random, or minimum, got {self.kind!r}")
        if self.seed is not None and self.kind != "random":
            raise ValueError("only the random mode takes a seed")

    @classmethod
    def last(cls) -> "OutputMode":
        return cls("last")

    @classmethod
    def random(cls, seed: Optional[int] = None) -> "OutputMode":
        return cls("random", seed)

    @classmethod
    def minimum(cls) -> "OutputMode":
        return cls("minimum")


@dataclass
class RunResult:
    output_x: np.ndarray
    output_index: int
    trajectory: TrajectoryRecord


def _random_position(seed: int, T: int) -> int:
    return int(np.random.default_rng(seed).integers(0, T))


def select_output(trajectory: TrajectoryRecord, mode) -> tuple[int, np.ndarray]:
    """Pick (index, iterate) from a trajectory that stores its iterates."""
    if isinstance(mode, str):
        mode = OutputMode(mode)
    T = len(trajectory)
    if T == 0:
        raise ValueError("empty trajectory")
    if trajectory.iterates is None:
        raise ValueError("trajectory does not store iterates; rerun with record_iterates=True")
    if mode.kind == "last":
        pos = T - 1
    elif mode.kind == "random":
        if mode.seed is None:
            raise ValueError("random mode requires a seed")
        pos = _random_position(mode.seed, T)
    else:
        norms = trajectory.grad_norm
        if not np.isfinite(norms).all():
            raise ValueError("minimum mode requires a gradient norm at every recorded step")
        pos = int(np.argmin(norms))  # first index attaining the minimum
    return int(trajectory.t[pos]), trajectory.iterates[pos].copy()


def run_experiment(oracle, cfg: MomentumConfig, schedule: ScheduleSpec, T: int,
                   mode, seed: int, formulation: str = "sum", *,
                   record_iterates: bool = False) -> RunResult:
    """Execute T steps from a seeded start and select the output iterate.

    The candidates are the recorded iterates x_1..x_T; metrics are taken at
    x_t before the step that produces x_{t+1}. The seed is split into
    independent streams for the initial point, the gradient noise, and the
    random output draw, so the gradient stream depends only on (seed,
    visited iterates) and never on the formulation.

    In random mode the output index is drawn before the loop (it is
    independent of the trajectory, and matches select_output's draw), so
    iterates need not be stored unless record_iterates is set.
    """
    if not (isinstance(T, int) and T >= 1):
        raise ValueError(f"T must be an integer >= 1, got {T!r}")
    if formulation not in FORMULATIONS:
        raise ValueError(f"formulation must be one of {FORMULATIONS}, got {formulation!r}")
    if isinstance(mode, str):
        mode = OutputMode(mode)
    if mode.kind == "minimum" and not hasattr(oracle, "evaluate"):
        raise ValueError("minimum mode requires an oracle with a full-gradient evaluator")

    init_ss, noise_ss, mode_ss = np.random.SeedSequence(seed).spawn(3)
    rng_noise = np.random.default_rng(noise_ss)
    x = _as_vector(oracle.initial_point(np.random.default_rng(init_ss)))
    if not np.isfinite(x).all():
        raise ValueError("initial point has non-finite components")
    d = x.size

    random_index = -1
    if mode.kind == "random":
        mode_seed = mode.seed if mode.seed is not None else int(mode_ss.generate_state(1)[0])
        random_index = _random_position(mode_seed, T) + 1

    mu, lam, lam_tilde = cfg.mu, cfg.lam, cfg.lam_tilde
    if formulation == "sum":
        m_buf = np.zeros_like(x)
        def advance(eta, g):
            _backend.sum_step(x, m_buf, g, mu, lam, lam_tilde, eta)
    elif formulation == "zou":
        m_buf = np.zeros_like(x)
        m_prev = np.zeros_like(x)
        def advance(eta, g):
            _backend.zou_step(x, m_buf, m_prev, g, mu, lam, eta)
    else:
        m_buf = None
        y = x.copy()
        y_tilde = x.copy()
        def advance(eta, g):
            _backend.yan_step(x, y, y_tilde, g, mu, lam, eta)

    eval_every = int(getattr(oracle, "eval_every", 1))
    eta_arr = step_sizes(schedule, T)
    loss_arr = np.empty(T)
    full_loss_arr = np.full(T, np.nan)
    grad_norm_arr = np.full(T, np.nan)
    inner_arr = np.full(T, np.nan)
    region_arr = np.zeros(T, dtype=np.uint8)
    wall_arr = np.empty(T)
    iterates = np.empty((T, d)) if record_iterates else None

    best_norm = math.inf
    best_index = -1
    best_x = None
    last_x = None
    random_x = None

    perf = time.perf_counter
    # overflow on a blowing-up run is reported via DivergenceError, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(T):
            t = i + 1
            t0 = perf()
            eta_t = eta_arr[i].item()
            loss_t, g = oracle.sample(x, rng_noise)
            g = np.ascontiguousarray(g, dtype=np.float64)
            if not math.isfinite(loss_t):
                raise DivergenceError(t, f"non-finite loss at step {t}")
            if not np.isfinite(g).all():
                raise DivergenceError(t, f"non-finite gradient at step {t}")

            loss_arr[i] = loss_t
            if not oracle.in_region(x):
                region_arr[i] = 1
            if record_iterates:
                iterates[i] = x

            checkpoint = t == 1 or t == T or t % eval_every == 0
            full_grad = None
            if checkpoint:
                full_loss_t, full_grad = oracle.evaluate(x)
                norm_t = float(np.linalg.norm(full_grad))
                full_loss_arr[i] = full_loss_t
                grad_norm_arr[i] = norm_t
                if mode.kind == "minimum" and norm_t < best_norm:
                    best_norm = norm_t
                    best_index = t
                    best_x = x.copy()
            if t == random_index:
                random_x = x.copy()
            if t == T:
                last_x = x.copy()

            advance(eta_t, g)
            if checkpoint and m_buf is not None:
                # momentum/full-gradient alignment trace: grad f(x_t) . m_t
                inner_arr[i] = float(full_grad @ m_buf)
            wall_arr[i] = (perf() - t0) * 1e3

    trajectory = TrajectoryRecord(
        seed=seed, formulation=formulation, config=cfg, schedule=schedule,
        t=np.arange(1, T + 1, dtype=np.int64), eta=eta_arr, loss=loss_arr,
        full_loss=full_loss_arr, grad_norm=grad_norm_arr, region_flag=region_arr,
        wall_ms=wall_arr, iterates=iterates, grad_mom_inner=inner_arr,
    )
    if mode.kind == "last":
        output_index, output_x = T, last_x
    elif mode.kind == "random":
        output_index, output_x = random_index, random_x
    else:
        output_index, output_x = best_index, best_x
    return RunResult(output_x=output_x, output_index=output_index, trajectory=trajectory)
