"""Acceptance checks: each returns a CheckResult with a pass/fail verdict
and a one-line detail. The `verify` CLI subcommand prints them as a table;
the test suite asserts them individually. Tolerances and runtime budgets
are fixed here and nowhere else.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import load_dataset
from .diagnostics import SequenceProbeInput, sequence_probe
from .neural import MlpModel, accuracy, as_oracle
from .optimizer_core import (OutputMode, init_state, init_yan_state, init_zou_state,
                             make_config, run_experiment, sum_step, yan_step, zou_step)
from .problems import make_problem
from .schedules import ScheduleSpec, iterations_for, step_size, step_sizes, validate_schedule


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float
    skipped: bool = False


def _finish(name: str, t0: float, ok: bool, detail: str, budget: float | None = None) -> CheckResult:
    dt = time.perf_counter() - t0
    if budget is not None:
        ok = bool(ok) and dt < budget
        detail = f"{detail}; {dt:.2f}s of {budget:g}s budget"
    else:
        detail = f"{detail}; {dt:.2f}s"
    return CheckResult(name=name, passed=bool(ok), detail=detail, seconds=dt)


def check_formulation_equivalence() -> CheckResult:
    """All three formulations trace the same iterates to 1e-8."""
    t0 = time.perf_counter()
    problem = make_problem("noisy_quadratic", dim=20, condition_number=100.0,
                           noise_radius=1.0, seed=0)
    # alpha chosen stable for the stiffest case lam=10 (x step is -10*eta*g, L=100)
    schedule = ScheduleSpec(alpha=0.001, K=1000, p=1.0)
    T, seed = 2000, 123
    worst = 0.0
    for lam in (0.0, 0.5, 1.0, 5.0, 10.0):
        cfg = make_config(0.9, lam)
        iterates = {}
        for form in ("sum", "zou", "yan"):
            res = run_experiment(problem, cfg, schedule, T, "last", seed, form,
                                 record_iterates=True)
            iterates[form] = res.trajectory.iterates
        for form in ("zou", "yan"):
            dev = float(np.abs(iterates[form] - iterates["sum"]).max())
            worst = max(worst, dev)
    return _finish("formulation_equivalence", t0, worst <= 1e-8,
                   f"max iterate deviation {worst:.2e} (tol 1e-8)", budget=2.0)


def check_first_step_closed_form() -> CheckResult:
    """x2 = x1 - (1 + mu*lam)*eta*g1 for all formulations, 50 random configs."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        mu = float(rng.uniform(0.0, 0.95))
        lam = float(0.999 * rng.uniform(0.0, 1.0 / (1.0 - mu)))
        eta = float(rng.uniform(1e-3, 0.5))
        d = int(rng.integers(1, 9))
        x1 = rng.uniform(-1.0, 1.0, d)
        g = rng.uniform(-1.0, 1.0, d)
        cfg = make_config(mu, lam)
        expected = x1 - (1.0 + mu * lam) * eta * g
        got = [
            sum_step(init_state(x1), cfg, eta, g).x,
            zou_step(init_zou_state(x1), cfg, eta, g).x,
            yan_step(init_yan_state(x1), cfg, eta, g).x,
        ]
        for x2 in got:
            worst = max(worst, float(np.abs(x2 - expected).max()))
    return _finish("first_step_closed_form", t0, worst <= 1e-12,
                   f"max deviation {worst:.2e} (tol 1e-12)")


def check_sgd_reduction() -> CheckResult:
    """mu=0 collapses every formulation to the plain gradient step."""
    t0 = time.perf_counter()
    problem = make_problem("noisy_quadratic", dim=10, condition_number=10.0,
                           noise_radius=0.5, seed=1)
    schedule = ScheduleSpec(alpha=0.01, K=500, p=1.0)
    T, seed = 1000, 11

    init_ss, noise_ss, _ = np.random.SeedSequence(seed).spawn(3)
    rng = np.random.default_rng(noise_ss)
    x = np.asarray(problem.initial_point(np.random.default_rng(init_ss)), dtype=np.float64)
    reference = np.empty((T, x.size))
    for i in range(T):
        _, g = problem.sample(x, rng)
        reference[i] = x
        x = x - step_size(schedule, i + 1) * g

    worst = 0.0
    for lam in (0.0, 0.3, 1.0):
        cfg = make_config(0.0, lam)
        for form in ("sum", "zou", "yan"):
            res = run_experiment(problem, cfg, schedule, T, "last", seed, form,
                                 record_iterates=True)
            dev = float(np.abs(res.trajectory.iterates - reference).max())
            worst = max(worst, dev)
    return _finish("sgd_reduction", t0, worst <= 1e-12,
                   f"max deviation from plain-SGD loop {worst:.2e} (tol 1e-12)")


def check_iteration_arithmetic() -> CheckResult:
    t0 = time.perf_counter()
    got = (iterations_for(60000, 128, 50), iterations_for(50000, 128, 100),
           iterations_for(100, 100, 1))
    want = (23450, 39100, 1)
    return _finish("iteration_arithmetic", t0, got == want,
                   f"iterations_for gave {got}, expected {want}")


def check_schedule_compliance() -> CheckResult:
    t0 = time.perf_counter()
    verdicts_ok = True
    details = []
    for p, want in ((1.0, True), (0.75, True), (0.4, False), (1.5, False)):
        rep = validate_schedule(ScheduleSpec(alpha=0.1, K=10, p=p), horizon=1000)
        verdicts_ok = verdicts_ok and rep.compliant is want
        details.append(f"p={p:g}:{'ok' if rep.compliant is want else 'WRONG'}")
    ratio_ok = True
    K, horizon = 10, 100_000
    for p in (1.0, 0.75):
        eta = step_sizes(ScheduleSpec(alpha=0.1, K=K, p=p), horizon)
        t = np.arange(K + 11, horizon + 1)
        ratios = eta[t - 2] / eta[t - 1]
        ratio_ok = ratio_ok and bool((np.abs(ratios - 1.0) <= 10.0 / t).all())
    return _finish("schedule_compliance", t0, verdicts_ok and ratio_ok,
                   f"verdicts [{', '.join(details)}], ratio bound to t=1e5 "
                   f"{'holds' if ratio_ok else 'VIOLATED'}", budget=1.0)


def check_desk_scale_convergence() -> CheckResult:
    """Last-iterate gradient norm shrinks by 5x from t=2000 and lands under 0.05."""
    t0 = time.perf_counter()
    T = 20000
    # noise radius calibrated once against these fixed seeds: mean final norm
    # lands near 0.039, deterministic because the generator streams are fixed
    problem = make_problem("noisy_quadratic", dim=20, condition_number=10.0,
                           noise_radius=0.5, seed=0)
    schedule = ScheduleSpec(alpha=0.1, K=int(0.9 * T), p=1.0)
    ok = True
    parts = []
    for lam in (0.0, 1.0):
        cfg = make_config(0.9, lam)
        at_2000 = []
        at_T = []
        for seed in range(5):
            res = run_experiment(problem, cfg, schedule, T, "last", seed, "sum")
            gn = res.trajectory.grad_norm
            at_2000.append(gn[1999])
            at_T.append(gn[T - 1])
        m2000 = float(np.mean(at_2000))
        mT = float(np.mean(at_T))
        this_ok = mT <= 0.2 * m2000 and mT <= 0.05
        ok = ok and this_ok
        parts.append(f"lam={lam:g}: |grad|@T {mT:.4f} vs @2000 {m2000:.4f}"
                     f"{'' if this_ok else ' FAIL'}")
    return _finish("desk_scale_convergence", t0, ok,
                   "; ".join(parts) + " (need <=0.2x and <=0.05)", budget=10.0)


def check_output_mode_ordering() -> CheckResult:
    """Gradient norm at the minimum-mode index never exceeds the others'."""
    t0 = time.perf_counter()
    ok = True
    worst = ""
    cases = [("noisy_quadratic", 8, 0.0), ("noisy_quadratic", 8, 1.0),
             ("noisy_rosenbrock", 4, 0.5)]
    for kind, dim, lam in cases:
        problem = make_problem(kind, dim=dim, condition_number=10.0,
                               noise_radius=0.5, seed=3)
        schedule = ScheduleSpec(alpha=0.001, K=200, p=1.0)
        cfg = make_config(0.9, lam)
        for seed in (0, 1):
            T = 400
            res_min = run_experiment(problem, cfg, schedule, T, "minimum", seed, "sum")
            res_rand = run_experiment(problem, cfg, schedule, T, OutputMode.random(5),
                                      seed, "sum")
            gn = res_min.trajectory.grad_norm
            n_min = gn[res_min.output_index - 1]
            n_last = gn[T - 1]
            n_rand = gn[res_rand.output_index - 1]
            if not (n_min <= n_last and n_min <= n_rand):
                ok = False
                worst = f" violated at {kind} lam={lam:g} seed={seed}"
    return _finish("output_mode_ordering", t0, ok,
                   f"argmin index norm <= last and random index norms{worst or ': holds'}")


def check_gradient_correctness() -> CheckResult:
    """Backprop and analytic gradients agree with central finite differences."""
    t0 = time.perf_counter()
    model = MlpModel([784, 8, 10], seed=3)
    rng = np.random.default_rng(4)
    X = rng.uniform(0.0, 1.0, (3, 784))
    y = rng.integers(0, 10, 3)
    ana = model.backward_grad(X, y).grad
    theta = model.params
    fd = np.empty_like(theta)
    for j in range(theta.size):
        h = 1e-5 * (1.0 + abs(theta[j]))
        orig = theta[j]
        theta[j] = orig + h
        f_plus = model.forward_loss(X, y)
        theta[j] = orig - h
        f_minus = model.forward_loss(X, y)
        theta[j] = orig
        fd[j] = (f_plus - f_minus) / (2.0 * h)
    rel_neural = float(np.linalg.norm(fd - ana) / max(np.linalg.norm(ana), 1e-300))
    neural_ok = rel_neural <= 1e-5

    synth_ok = True
    worst_synth = 0.0
    point_rng = np.random.default_rng(9)
    plan = [(make_problem("noisy_quadratic", 7, 50.0, 0.0, seed=2), 34),
            (make_problem("noisy_rosenbrock", 6, 1.0, 0.0, seed=3), 33),
            (make_problem("logistic_synthetic", 5, 10.0, 0.0, seed=4), 33)]
    for problem, n_points in plan:
        for _ in range(n_points):
            if problem.kind == "noisy_rosenbrock":
                x = point_rng.uniform(-1.5, 1.5, problem.dim)
            else:
                x = problem.initial_point(point_rng) * 0.5 + point_rng.standard_normal(problem.dim)
            ana_g = problem.full_gradient(x)
            fd_g = np.empty_like(x)
            for j in range(x.size):
                h = 1e-5 * (1.0 + abs(x[j]))
                orig = x[j]
                x[j] = orig + h
                f_plus = problem.loss(x)
                x[j] = orig - h
                f_minus = problem.loss(x)
                x[j] = orig
                fd_g[j] = (f_plus - f_minus) / (2.0 * h)
            scaled = float((np.abs(fd_g - ana_g) / (1.0 + np.abs(ana_g))).max())
            worst_synth = max(worst_synth, scaled)
            synth_ok = synth_ok and scaled <= 1e-6
    return _finish("gradient_correctness", t0, neural_ok and synth_ok,
                   f"neural relative error {rel_neural:.2e} (tol 1e-5), synthetic "
                   f"worst scaled error {worst_synth:.2e} at 100 points (tol 1e-6)",
                   budget=5.0)


def check_oracle_soundness() -> CheckResult:
    """Sampled gradients are unbiased and respect the second-moment bound."""
    t0 = time.perf_counter()
    problem = make_problem("noisy_quadratic", dim=20, condition_number=100.0,
                           noise_radius=1.0, seed=5)
    offset = np.random.default_rng(8).standard_normal(20)
    x = problem.x_star + 3.0 * offset / np.linalg.norm(offset)
    base = problem.full_gradient(x)
    base_norm = float(np.linalg.norm(base))
    r = problem.noise_radius
    n = 100_000
    rng = np.random.default_rng(6)
    total = np.zeros_like(base)
    norms_sq = np.empty(n)
    triangle_ok = True
    bound = base_norm + r * np.sqrt(20)
    for i in range(n):
        g = problem.sample_gradient(x, rng)
        total += g
        sq = float(g @ g)
        norms_sq[i] = sq
        if np.sqrt(sq) > bound:
            triangle_ok = False
    mean_dev = float(np.abs(total / n - base).max())
    band = 4.0 * (r / np.sqrt(3.0)) / np.sqrt(n)
    unbiased_ok = mean_dev <= band

    est = problem.estimate_second_moment(x, n, np.random.default_rng(7))
    band2 = 4.0 * float(norms_sq.std()) / np.sqrt(n)
    moment_ok = est <= problem.metadata.G_sq + band2
    ok = unbiased_ok and moment_ok and triangle_ok
    return _finish("oracle_soundness", t0, ok,
                   f"mean deviation {mean_dev:.2e} vs 4-sigma band {band:.2e}; "
                   f"second moment {est:.1f} vs bound {problem.metadata.G_sq:.1f}; "
                   f"norm bound {'holds' if triangle_ok else 'VIOLATED'}", budget=5.0)


def check_sequence_probe() -> CheckResult:
    t0 = time.perf_counter()
    n = np.arange(1, 100_001, dtype=np.float64)
    a = 1.0 / n
    good = sequence_probe(SequenceProbeInput(a=a, b=n ** -0.3, a_tilde=a.copy(),
                                             C=1.0, p=2.0, eps=1.0))
    bad = sequence_probe(SequenceProbeInput(a=a, b=np.ones_like(a), a_tilde=a.copy(),
                                            C=1.0, p=2.0, eps=1.0))
    ok = (good.verdict == "consistent"
          and bad.verdict.startswith("hypothesis-violated:")
          and "weighted_power_sum_converges" in bad.verdict)
    return _finish("sequence_probe", t0, ok,
                   f"worked example -> {good.verdict!r}, constant-b counterexample -> {bad.verdict!r}")


MNIST_FILES = {
    "data.train_images": "train-images-idx3-ubyte",
    "data.train_labels": "train-labels-idx1-ubyte",
    "data.test_images": "t10k-images-idx3-ubyte",
    "data.test_labels": "t10k-labels-idx1-ubyte",
}


def find_mnist(data_dir=None) -> tuple[dict, list]:
    """Resolve the four IDX files (raw or .gz); returns (paths, missing keys)."""
    base = Path(data_dir or os.environ.get("SUMOPT_MNIST_DIR") or "data")
    paths = {}
    missing = []
    for key, stem in MNIST_FILES.items():
        raw = base / stem
        gz = base / (stem + ".gz")
        if raw.exists():
            paths[key] = raw
        elif gz.exists():
            paths[key] = gz
        else:
            missing.append(key)
    return paths, missing


def check_mnist_desk_scale(data_dir=None) -> CheckResult:
    """Short multilayer-perceptron training sweep over the interpolation factor."""
    t0 = time.perf_counter()
    paths, missing = find_mnist(data_dir)
    if missing:
        return CheckResult(
            name="mnist_desk_scale", passed=False, skipped=True, seconds=0.0,
            detail="data files missing; provide " + ", ".join(missing) +
                   " (searched " + str(Path(data_dir or os.environ.get('SUMOPT_MNIST_DIR') or 'data')) + ")")
    train = load_dataset(paths["data.train_images"], paths["data.train_labels"])
    test = load_dataset(paths["data.test_images"], paths["data.test_labels"])
    epochs, batch = 5, 128
    T = iterations_for(len(train), batch, epochs)
    schedule = ScheduleSpec(alpha=0.01, K=int(0.9 * T), p=1.0)
    lambdas = (0.0, 0.5, 1.0, 5.0, 10.0)
    final_losses = {}
    ok = True
    parts = []
    for lam in lambdas:
        cfg = make_config(0.9, lam)
        curves = []
        accs = []
        for seed in range(3):
            model = MlpModel([784, 128, 10], seed=seed)
            oracle = as_oracle(model, train, batch, seed=seed)
            res = run_experiment(oracle, cfg, schedule, T, "last", seed, "sum")
            mask = res.trajectory.checkpoint_mask()
            curves.append(res.trajectory.full_loss[mask])
            model.params = res.output_x
            accs.append(accuracy(model, test.inputs, test.labels))
        mean_curve = np.mean(curves, axis=0)
        diffs = np.diff(mean_curve)
        non_increasing = int((diffs <= 0).sum())
        mean_acc = float(np.mean(accs))
        final_losses[lam] = float(mean_curve[-1])
        lam_ok = non_increasing >= 4 and mean_acc >= 0.95
        ok = ok and lam_ok
        parts.append(f"lam={lam:g}: {non_increasing}/{len(diffs)} drops, acc {mean_acc:.3f}"
                     f"{'' if lam_ok else ' FAIL'}")
    best = min(final_losses.values())
    spread_ok = max(final_losses.values()) <= 2.0 * best
    ok = ok and spread_ok
    parts.append(f"final-loss spread {max(final_losses.values()) / best:.2f}x (need <=2x)")
    return _finish("mnist_desk_scale", t0, ok, "; ".join(parts), budget=600.0)


FAST_CHECKS = (
    check_formulation_equivalence,
    check_first_step_closed_form,
    check_sgd_reduction,
    check_iteration_arithmetic,
    check_schedule_compliance,
    check_desk_scale_convergence,
    check_output_mode_ordering,
    check_gradient_correctness,
    check_oracle_soundness,
    check_sequence_probe,
)


def run_all(scope: str = "fast", data_dir=None) -> list:
    if scope not in ("fast", "full"):
        raise ValueError(f"scope must be fast or full, got {scope!r}")
    results = [check() for check in FAST_CHECKS]
    if scope == "full":
        results.append(check_mnist_desk_scale(data_dir))
    return results
