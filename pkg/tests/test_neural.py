import numpy as np
import pytest

from sumopt import Dataset, MlpModel, accuracy, as_oracle, elu, elu_prime


def _toy_dataset(n=40, d=5, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(inputs=rng.uniform(0.0, 1.0, (n, d)),
                   labels=rng.integers(0, 10, n))


# ---------------------------------------------------------------- activation

def test_elu_pointwise_values():
    assert elu(0.0) == 0.0
    assert elu_prime(0.0) == 1.0
    assert elu(2.0) == 2.0
    assert elu(-1.0) == pytest.approx(np.expm1(-1.0), rel=1e-15)
    assert elu_prime(-1.0) == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_elu_handles_extreme_arguments_without_overflow():
    z = np.array([-1e4, -50.0, 0.0, 50.0, 1e4])
    out = elu(z)
    assert np.isfinite(out).all()
    assert out[0] == pytest.approx(-1.0)
    assert out[-1] == 1e4
    assert elu_prime(-1e4) == 0.0
    assert elu_prime(1e4) == 1.0


# ---------------------------------------------------------------- forward

def test_zero_parameters_give_uniform_softmax_loss():
    model = MlpModel([4, 3, 10], seed=0)
    model.params[:] = 0.0
    rng = np.random.default_rng(1)
    X = rng.uniform(0.0, 1.0, (6, 4))
    y = rng.integers(0, 10, 6)
    assert model.forward_loss(X, y) == pytest.approx(np.log(10.0), rel=1e-12)


def test_confident_logit_drives_loss_to_zero():
    model = MlpModel([1, 10], seed=0)
    model.params[:] = 0.0
    weights, biases = model.unflatten(model.params)[0]
    biases[3] = 30.0
    loss = model.forward_loss(np.array([[0.5]]), np.array([3]))
    assert loss < 1e-9


def test_loss_invariant_under_duplication():
    model = MlpModel([5, 4, 10], seed=2)
    X = np.random.default_rng(0).uniform(0.0, 1.0, (1, 5))
    y = np.array([7])
    single = model.forward_loss(X, y)
    doubled = model.forward_loss(np.vstack([X, X]), np.concatenate([y, y]))
    assert doubled == pytest.approx(single, rel=1e-15)


def test_softmax_stays_finite_at_large_logits():
    model = MlpModel([2, 10], seed=0)
    model.params[:] = 0.0
    weights, biases = model.unflatten(model.params)[0]
    biases[:] = np.linspace(-1e3, 1e3, 10)
    res = model.backward_grad(np.array([[0.0, 0.0]]), np.array([0]))
    assert np.isfinite(res.loss)
    assert np.isfinite(res.grad).all()


def test_input_and_label_validation():
    model = MlpModel([3, 2, 10], seed=0)
    with pytest.raises(ValueError):
        model.forward_loss(np.zeros((2, 4)), np.array([0, 1]))
    with pytest.raises(ValueError):
        model.forward_loss(np.zeros((2, 3)), np.array([0, 10]))
    with pytest.raises(ValueError):
        MlpModel([3], seed=0)
    with pytest.raises(ValueError):
        MlpModel([3, 0, 2], seed=0)


# ---------------------------------------------------------------- backward

def test_gradient_matches_finite_differences_on_twenty_parameters():
    model = MlpModel([3, 2, 4], seed=5)
    assert model.n_params == 20
    rng = np.random.default_rng(6)
    X = rng.uniform(0.0, 1.0, (3, 3))
    y = rng.integers(0, 4, 3)
    ana = model.backward_grad(X, y).grad
    theta = model.params
    fd = np.empty_like(theta)
    for j in range(theta.size):
        h = 1e-6 * (1.0 + abs(theta[j]))
        orig = theta[j]
        theta[j] = orig + h
        fp = model.forward_loss(X, y)
        theta[j] = orig - h
        fm = model.forward_loss(X, y)
        theta[j] = orig
        fd[j] = (fp - fm) / (2.0 * h)
    rel = np.linalg.norm(fd - ana) / np.linalg.norm(ana)
    assert rel <= 1e-5


def test_gradient_invariant_under_duplication():
    model = MlpModel([4, 3, 10], seed=1)
    rng = np.random.default_rng(2)
    X = rng.uniform(0.0, 1.0, (2, 4))
    y = rng.integers(0, 10, 2)
    g1 = model.backward_grad(X, y).grad
    g2 = model.backward_grad(np.vstack([X, X]), np.concatenate([y, y])).grad
    assert np.abs(g1 - g2).max() <= 1e-12


def test_zero_inputs_kill_first_layer_weight_gradient_only():
    model = MlpModel([6, 4, 10], seed=3)
    X = np.zeros((5, 6))
    y = np.arange(5) % 10
    grads = model.unflatten(model.backward_grad(X, y).grad.copy())
    first_w, first_b = grads[0]
    assert (first_w == 0.0).all()
    assert np.abs(first_b).max() > 0.0


def test_backward_loss_equals_forward_loss():
    model = MlpModel([5, 3, 10], seed=4)
    rng = np.random.default_rng(9)
    X = rng.uniform(0.0, 1.0, (7, 5))
    y = rng.integers(0, 10, 7)
    assert model.backward_grad(X, y).loss == pytest.approx(model.forward_loss(X, y), rel=1e-15)


def test_flatten_unflatten_round_trip():
    model = MlpModel([7, 5, 10], seed=8)
    pairs = model.unflatten(model.params)
    back = model.flatten(pairs)
    assert (back == model.params).all()
    assert sum(w.size + b.size for w, b in pairs) == model.n_params


def test_predict_and_accuracy():
    model = MlpModel([2, 10], seed=0)
    model.params[:] = 0.0
    weights, biases = model.unflatten(model.params)[0]
    biases[4] = 5.0   # every input classified as 4
    X = np.random.default_rng(0).uniform(0.0, 1.0, (8, 2))
    labels = np.full(8, 4)
    assert accuracy(model, X, labels) == 1.0
    labels[0] = 5
    assert accuracy(model, X, labels) == pytest.approx(7 / 8)


# ---------------------------------------------------------------- oracle

def test_oracle_sample_is_seed_deterministic():
    ds = _toy_dataset()
    a = as_oracle(MlpModel([5, 4, 10], seed=0), ds, batch_size=8, seed=123)
    b = as_oracle(MlpModel([5, 4, 10], seed=0), ds, batch_size=8, seed=123)
    x = a.initial_point(np.random.default_rng(0))
    for _ in range(5):
        la, ga = a.sample(x, None)
        lb, gb = b.sample(x, None)
        assert la == lb
        assert (ga == gb).all()


def test_full_mode_matches_whole_dataset_gradient():
    ds = _toy_dataset()
    model = MlpModel([5, 4, 10], seed=0)
    oracle = as_oracle(model, ds, batch_size=8, seed=0, mode="full")
    x = model.params.copy()
    loss1, g1 = oracle.sample(x, np.random.default_rng(0))
    res = model.backward_grad(ds.inputs, ds.labels)
    assert loss1 == pytest.approx(res.loss, rel=1e-15)
    assert np.abs(g1 - res.grad).max() <= 1e-15
    # with 40 samples the evaluation subset is the whole set too
    loss2, g2 = oracle.evaluate(x)
    assert loss2 == pytest.approx(res.loss, rel=1e-12)
    assert np.abs(g2 - res.grad).max() <= 1e-12


def test_single_sample_draws_average_to_the_full_gradient():
    ds = _toy_dataset(n=30)
    model = MlpModel([5, 3, 10], seed=1)
    oracle = as_oracle(model, ds, batch_size=1, seed=7)
    x = model.params.copy()
    full = model.backward_grad(ds.inputs, ds.labels).grad
    n = 10_000
    total = np.zeros_like(full)
    sq = np.zeros_like(full)
    for _ in range(n):
        _, g = oracle.sample(x, None)
        total += g
        sq += g * g
    mean = total / n
    comp_std = np.sqrt(np.maximum(sq / n - mean ** 2, 0.0))
    band = 4.0 * comp_std / np.sqrt(n) + 1e-12
    assert (np.abs(mean - full) <= band).all()


def test_oracle_eval_cadence_and_batch_domain():
    ds = _toy_dataset(n=40)
    oracle = as_oracle(MlpModel([5, 3, 10], seed=0), ds, batch_size=16, seed=0)
    assert oracle.eval_every == 3    # ceil(40 / 16)
    with pytest.raises(ValueError):
        as_oracle(MlpModel([5, 3, 10], seed=0), ds, batch_size=0, seed=0)
    with pytest.raises(ValueError):
        as_oracle(MlpModel([5, 3, 10], seed=0), ds, batch_size=41, seed=0)
    with pytest.raises(ValueError):
        as_oracle(MlpModel([5, 3, 10], seed=0), ds, batch_size=8, seed=0,
                  mode="bogus")


def test_oracle_initial_point_is_a_fresh_seeded_init():
    ds = _toy_dataset()
    model = MlpModel([5, 4, 10], seed=0)
    oracle = as_oracle(model, ds, batch_size=8, seed=0)
    a = oracle.initial_point(np.random.default_rng(5))
    b = oracle.initial_point(np.random.default_rng(5))
    c = oracle.initial_point(np.random.default_rng(6))
    assert (a == b).all()
    assert np.abs(a - c).max() > 0.0
    assert a.shape == model.params.shape
