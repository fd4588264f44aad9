"""End-to-end checks shared with `sumopt verify`.

Each test drives one self-contained check from sumopt.verification and
prints a single pass/fail line with the measured quantities. Time budgets
are enforced inside the checks themselves.
"""

import pytest

from sumopt import verification


def _require(result):
    line = f"{result.name}: {'PASS' if result.passed else 'FAIL'} ({result.detail})"
    print(line)
    assert result.passed, line


def test_formulation_equivalence_across_interpolation_grid():
    _require(verification.check_formulation_equivalence())


def test_first_step_matches_closed_form():
    _require(verification.check_first_step_closed_form())


def test_zero_momentum_reduces_to_plain_sgd():
    _require(verification.check_sgd_reduction())


def test_epoch_to_iteration_arithmetic():
    _require(verification.check_iteration_arithmetic())


def test_schedule_compliance_verdicts_and_ratio_bound():
    _require(verification.check_schedule_compliance())


def test_desk_scale_convergence_on_the_noisy_quadratic():
    _require(verification.check_desk_scale_convergence())


def test_output_mode_gradient_ordering():
    _require(verification.check_output_mode_ordering())


def test_analytic_gradients_match_finite_differences():
    _require(verification.check_gradient_correctness())


def test_stochastic_oracle_mean_and_second_moment():
    _require(verification.check_oracle_soundness())


def test_digit_classifier_training_run():
    paths, missing = verification.find_mnist()
    if missing:
        pytest.skip("digit dataset files not found ("
                    + ", ".join(sorted(missing))
                    + "); place the IDX files under data/ or set SUMOPT_MNIST_DIR")
    _require(verification.check_mnist_desk_scale())


def test_sequence_probe_verdicts():
    _require(verification.check_sequence_probe())
