"""Stochastic momentum optimization with a tunable interpolation factor.

One update family covers heavy-ball (factor 0), Nesterov-style lookahead
(factor 1), and the over-extrapolated region beyond 1, implemented in three
algebraically equivalent formulations. The package adds piecewise step-size
schedules, synthetic stochastic problems, a small from-scratch MLP, IDX data
loading, run diagnostics, and a CLI (`sumopt run|sweep|verify`).
"""

from ._backend import BACKEND, backend_name
from .dataio import (CSV_HEADER, Dataset, MetricsRow, RunConfig, load_config,
                     load_dataset, load_idx, minibatch_stream, read_metrics,
                     rows_from_trajectory, write_metrics)
from .diagnostics import (AggregateCurve, ConvergenceReport, DescentProbeReport,
                          SequenceProbeInput, SequenceProbeReport, StepRecord,
                          TrajectoryRecord, aggregate_seeds, convergence_report,
                          descent_probe, sequence_probe)
from .neural import MlpModel, NeuralOracle, accuracy, as_oracle, backward_grad, elu, elu_prime, forward_loss
from .optimizer_core import (FORMULATIONS, DivergenceError, MomentumConfig, OptimState,
                             OutputMode, RunResult, YanState, ZouState, init_state,
                             init_yan_state, init_zou_state, make_config, run_experiment,
                             select_output, sum_step, yan_step, zou_step)
from .problems import (KINDS, LogisticSynthetic, NoisyQuadratic, NoisyRosenbrock,
                       ProblemMetadata, StochasticProblem, make_problem)
from .schedules import (ScheduleReport, ScheduleSpec, iterations_for, make_schedule,
                        smoothed_step, step_size, step_sizes, validate_schedule)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "backend_name",
    "CSV_HEADER", "Dataset", "MetricsRow", "RunConfig", "load_config",
    "load_dataset", "load_idx", "minibatch_stream", "read_metrics",
    "rows_from_trajectory", "write_metrics",
    "AggregateCurve", "ConvergenceReport", "DescentProbeReport",
    "SequenceProbeInput", "SequenceProbeReport", "StepRecord",
    "TrajectoryRecord", "aggregate_seeds", "convergence_report",
    "descent_probe", "sequence_probe",
    "MlpModel", "NeuralOracle", "accuracy", "as_oracle", "backward_grad",
    "elu", "elu_prime", "forward_loss",
    "FORMULATIONS", "DivergenceError", "MomentumConfig", "OptimState",
    "OutputMode", "RunResult", "YanState", "ZouState", "init_state",
    "init_yan_state", "init_zou_state", "make_config", "run_experiment",
    "select_output", "sum_step", "yan_step", "zou_step",
    "KINDS", "LogisticSynthetic", "NoisyQuadratic", "NoisyRosenbrock",
    "ProblemMetadata", "StochasticProblem", "make_problem",
    "ScheduleReport", "ScheduleSpec", "iterations_for", "make_schedule",
    "smoothed_step", "step_size", "step_sizes", "validate_schedule",
    "__version__",
]
