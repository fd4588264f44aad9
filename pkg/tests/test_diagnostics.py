import math

import numpy as np
import pytest

from sumopt import (MomentumConfig, ScheduleSpec, SequenceProbeInput,
                    TrajectoryRecord, aggregate_seeds, convergence_report,
                    descent_probe, make_config, make_problem, run_experiment,
                    sequence_probe)
from sumopt.schedules import step_size


def _traj(grad_norms, full_losses=None, seed=0):
    """Hand-built record with every step a checkpoint."""
    n = len(grad_norms)
    spec = ScheduleSpec(alpha=0.1, K=n + 1, p=1.0)
    gn = np.asarray(grad_norms, dtype=np.float64)
    if full_losses is None:
        full_losses = gn ** 2
    return TrajectoryRecord(
        seed=seed,
        formulation="sum",
        config=make_config(0.9, 1.0),
        schedule=spec,
        t=np.arange(1, n + 1),
        eta=np.array([step_size(spec, t) for t in range(1, n + 1)]),
        loss=np.asarray(full_losses, dtype=np.float64),
        full_loss=np.asarray(full_losses, dtype=np.float64),
        grad_norm=gn,
        region_flag=np.zeros(n, dtype=np.int64),
        wall_ms=np.zeros(n),
    )


# ------------------------------------------------------- convergence report

def test_report_quantities_by_hand():
    rep = convergence_report([_traj([3.0, 1.0, 2.0], full_losses=[9.0, 1.0, 4.0])])
    assert rep.min_sq == 1.0
    assert rep.last_sq == 4.0
    assert rep.avg_sq == pytest.approx(14.0 / 3.0, rel=1e-15)
    # only three checkpoints, so the five-point tail is the whole curve
    assert rep.f_star_proxy == pytest.approx(14.0 / 3.0, rel=1e-15)
    assert rep.min_le_avg and rep.min_le_last


def test_report_on_constant_norms():
    rep = convergence_report([_traj([0.5] * 8)])
    assert rep.min_sq == rep.avg_sq == rep.last_sq == 0.25
    assert rep.n_checkpoints == 8


def test_report_averages_over_seeds():
    a = _traj([2.0, 2.0], seed=0)
    b = _traj([0.0, 0.0], seed=1)
    rep = convergence_report([a, b])
    assert rep.n_seeds == 2
    assert rep.last_sq == 2.0   # mean of 4 and 0


def test_report_requires_recorded_norms():
    t = _traj([1.0, 1.0])
    t.grad_norm = np.full(2, np.nan)
    with pytest.raises(ValueError, match="grad_norm"):
        convergence_report([t])


def test_trajectory_validate_catches_eta_drift():
    t = _traj([1.0, 1.0, 1.0])
    t.validate()
    t.eta = t.eta * 1.0000001
    with pytest.raises(ValueError, match="eta"):
        t.validate()


# ------------------------------------------------------- seed aggregation

def test_aggregate_mean_and_population_std():
    curve = aggregate_seeds([_traj([1.0, 1.0], seed=0), _traj([3.0, 3.0], seed=1)],
                            "grad_norm")
    assert (curve.mean == 2.0).all()
    assert (curve.std == 1.0).all()   # population, not sample
    assert curve.n_seeds == 2


def test_aggregate_identical_runs_zero_std():
    runs = [_traj([1.0, 2.0, 3.0], seed=s) for s in range(3)]
    curve = aggregate_seeds(runs, "full_loss")
    assert (curve.std == 0.0).all()


def test_aggregate_single_run():
    curve = aggregate_seeds([_traj([1.0, 4.0])], "grad_norm")
    assert (curve.mean == [1.0, 4.0]).all()
    assert (curve.std == 0.0).all()


def test_aggregate_rejects_unknown_metric_and_mismatched_grids():
    with pytest.raises(ValueError, match="metric"):
        aggregate_seeds([_traj([1.0, 2.0])], "speed")
    short = _traj([1.0, 2.0])
    long = _traj([1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="grid"):
        aggregate_seeds([short, long], "grad_norm")


# ------------------------------------------------------- sequence probe

N = 100_000


def _probe_input(a, b, a_tilde=None, C=10.0, p=2.0, eps=0.5):
    if a_tilde is None:
        a_tilde = a
    return SequenceProbeInput(a=a, b=b, a_tilde=a_tilde, C=C, p=p, eps=eps)


def test_probe_worked_example_is_consistent():
    n = np.arange(1, N + 1, dtype=np.float64)
    report = sequence_probe(_probe_input(1.0 / n, n ** -0.3))
    assert report.verdict == "consistent"
    assert all(report.hypotheses.values())
    assert report.b_tail <= 0.05


def test_probe_constant_b_violates_power_sum():
    n = np.arange(1, N + 1, dtype=np.float64)
    report = sequence_probe(_probe_input(1.0 / n, np.ones(N)))
    assert report.verdict.startswith("hypothesis-violated:")
    assert "weighted_power_sum_converges" in report.verdict
    assert not report.hypotheses["weighted_power_sum_converges"]


def test_probe_zero_b_is_trivially_consistent():
    n = np.arange(1, N + 1, dtype=np.float64)
    report = sequence_probe(_probe_input(1.0 / n, np.zeros(N)))
    assert report.verdict == "consistent"
    assert report.b_tail == 0.0


def test_probe_summable_weights_flag_divergent_weight_sum():
    n = np.arange(1, N + 1, dtype=np.float64)
    report = sequence_probe(_probe_input(n ** -2.0, np.full(N, 0.01)))
    assert "divergent_weight_sum" in report.verdict


def test_probe_sudden_jump_breaks_increment_bound():
    n = np.arange(1, N + 1, dtype=np.float64)
    b = n ** -0.3
    b[500] += 1.0
    report = sequence_probe(_probe_input(1.0 / n, b))
    assert "increment_bound" in report.verdict


def test_probe_ratio_drift_is_named():
    n = np.arange(1, N + 1, dtype=np.float64)
    report = sequence_probe(_probe_input(1.0 / n, n ** -0.3, a_tilde=2.0 / n))
    assert "weight_ratio_tends_to_one" in report.verdict


def test_probe_short_prefix_is_inconclusive_not_consistent():
    # 1e4 terms: hypotheses hold but the b tail has not dropped below 0.05 yet
    n = np.arange(1, 10_001, dtype=np.float64)
    report = sequence_probe(_probe_input(1.0 / n, n ** -0.3))
    assert report.verdict == "inconclusive"


@pytest.mark.parametrize("bad", [
    dict(a=np.ones(50), b=np.ones(50), a_tilde=np.ones(50)),
    dict(a=np.ones(200), b=-np.ones(200), a_tilde=np.ones(200)),
    dict(a=np.ones(200), b=np.ones(200), a_tilde=np.ones(200), C=0.0),
    dict(a=np.ones(200), b=np.ones(200), a_tilde=np.ones(200), eps=3.0),
])
def test_probe_input_validation(bad):
    kwargs = dict(C=10.0, p=2.0, eps=0.5)
    kwargs.update(bad)
    with pytest.raises(ValueError):
        SequenceProbeInput(**kwargs)


# ------------------------------------------------------- descent probe

def _run(noise_radius, alpha, mu, T, seed=0):
    problem = make_problem("noisy_quadratic", dim=6, condition_number=10.0,
                           noise_radius=noise_radius, seed=2)
    spec = ScheduleSpec(alpha=alpha, K=T, p=1.0)
    cfg = make_config(mu, 0.5)
    return run_experiment(problem, cfg, spec, T, mode="last", seed=seed,
                          formulation="sum")


def test_probe_on_a_clean_descent():
    # no noise, no momentum, eta * L = 0.1: plain descent is monotone
    res = _run(noise_radius=0.0, alpha=0.01, mu=0.0, T=300)
    report = descent_probe([res.trajectory])
    assert report.upward_count == 0
    assert report.upward_total == 0.0
    assert report.bounded_upward
    assert (np.diff(report.mean_curve) <= 0).all()


def test_probe_tolerates_momentum_overshoot():
    # heavy-ball overshoot produces tiny upticks that stay bounded
    res = _run(noise_radius=0.0, alpha=0.01, mu=0.9, T=300)
    report = descent_probe([res.trajectory])
    assert report.upward_count > 0
    assert report.bounded_upward


def test_probe_flat_curve_is_stabilized():
    report = descent_probe([_traj([1.0] * 50, full_losses=[2.0] * 50)])
    assert report.upward_count == 0
    assert report.stabilized
    assert report.bounded_upward


def test_probe_flags_divergence():
    # eta * L = 0.25 * 10 exceeds the stable range for the quadratic
    res = _run(noise_radius=0.0, alpha=0.25, mu=0.0, T=30)
    report = descent_probe([res.trajectory])
    assert not report.bounded_upward
    assert report.upward_total > 0


def test_probe_is_labelled_qualitative():
    report = descent_probe([_traj([1.0, 1.0])])
    assert "not an assertion" in report.note
