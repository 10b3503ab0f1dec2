import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freqbias.network import (
    DEFAULT_SIGMA_A,
    DEFAULT_STEP,
    MultilayerParams,
    NetworkParams,
    TrainConfig,
    forward,
    init_network,
    loss_and_grad,
    train,
)
from freqbias.spectral import (
    Custom,
    Normal,
    SampleGrid,
    Uniform,
    dft_forward,
    register_target,
    target_eval,
)


def test_default_constants():
    assert DEFAULT_SIGMA_A == 2 / np.sqrt(4000)
    assert DEFAULT_STEP == 1e-5 / 240


# ------------------------------------------------------------------ init


def test_init_output_weight_spread():
    p = init_network(TrainConfig(m=2000, seed=5))
    assert isinstance(p, NetworkParams)
    assert abs(np.std(p.a) / DEFAULT_SIGMA_A - 1) < 0.1
    assert abs(np.std(p.b) / DEFAULT_SIGMA_A - 1) < 0.1


def test_init_is_deterministic():
    cfg = TrainConfig(m=64, seed=9)
    p, q = init_network(cfg), init_network(cfg)
    for k in p.arrays():
        assert np.array_equal(p.arrays()[k], q.arrays()[k])


def test_multilayer_shapes():
    p = init_network(TrainConfig(m=8, depth=4, hidden_width=12))
    assert isinstance(p, MultilayerParams)
    assert [h.shape for h in p.hidden] == [(12, 16), (12, 12)]
    assert p.v.shape == (12,) and p.depth == 4
    assert np.all(np.isfinite(forward(p, np.linspace(-1, 1, 7))))


def test_shared_frequencies_with_w_seed():
    p = init_network(TrainConfig(m=32, seed=1, w_seed=100))
    q = init_network(TrainConfig(m=32, seed=2, w_seed=100))
    assert np.array_equal(p.w, q.w) and not np.array_equal(p.a, q.a)


def test_init_output_variance_independent_of_width():
    # f(x) has variance sigma_a^2 / 2 for every width m
    x = np.linspace(-1, 1, 40, endpoint=False)
    variances = []
    for m in (16, 64):
        outs = np.array([forward(init_network(TrainConfig(m=m, seed=s)), x) for s in range(100)])
        variances.append(np.mean(outs**2))
    assert abs(variances[1] / variances[0] - 1) < 0.1
    assert all(abs(v / (DEFAULT_SIGMA_A**2 / 2) - 1) < 0.1 for v in variances)


# --------------------------------------------------------------- forward


def test_forward_constant_feature():
    p = NetworkParams(np.array([np.sqrt(2)]), np.array([0.0]), np.array([0.0]))
    assert forward(p, np.array([-0.7, 0.0, 0.3])) == pytest.approx([1.0, 1.0, 1.0])


def test_forward_two_features():
    p = NetworkParams(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    assert forward(p, 0.25) == pytest.approx(0.0, abs=1e-15)


@given(st.integers(0, 10_000), st.floats(-3, 3))
def test_forward_linear_in_output_weights(seed, factor):
    p = init_network(TrainConfig(m=10, seed=seed))
    x = np.linspace(-1, 1, 9)
    q = NetworkParams(factor * p.a, factor * p.b, p.w)
    assert np.allclose(forward(q, x), factor * forward(p, x), rtol=1e-12, atol=1e-15)


# --------------------------------------------------------------- gradient


def test_exact_fit_has_zero_risk_and_gradient():
    p = init_network(TrainConfig(m=6, seed=3, sigma_a=1.0))
    register_target("fit-exact", lambda x: forward(p, x))
    risk, g = loss_and_grad(p, SampleGrid(20), Custom("fit-exact"))
    assert risk < 1e-30
    for arr in g.arrays().values():
        assert np.max(np.abs(arr)) < 1e-14


def test_frozen_frequencies_get_exact_zero_gradient():
    p = init_network(TrainConfig(m=6, seed=3, frozen_w=True))
    _, g = loss_and_grad(p, SampleGrid(20), TrainConfig().target)
    assert np.all(g.w == 0.0)
    q = init_network(TrainConfig(m=6, depth=3, hidden_width=5, frozen_w=True))
    _, gq = loss_and_grad(q, SampleGrid(20), TrainConfig().target)
    assert np.all(gq.w == 0.0)


def test_gradient_matches_directional_difference():
    # cheap cross-check along a random direction for deeper stacks
    grid, target = SampleGrid(24), TrainConfig().target
    p = init_network(TrainConfig(m=5, depth=4, hidden_width=7, sigma_a=1.0, seed=8))
    _, g = loss_and_grad(p, grid, target)
    rng = np.random.default_rng(0)
    dirs = {k: rng.normal(size=v.shape) for k, v in p.arrays().items()}
    h = 1e-6

    def shifted(sign):
        return MultilayerParams(p.w + sign * h * dirs["w"],
                                [W + sign * h * dirs[f"hidden{i}"] for i, W in enumerate(p.hidden)],
                                p.v + sign * h * dirs["v"])

    fd = (loss_and_grad(shifted(1), grid, target)[0] - loss_and_grad(shifted(-1), grid, target)[0]) / (2 * h)
    analytic = sum(float(np.sum(g.arrays()[k] * dirs[k])) for k in dirs)
    assert analytic == pytest.approx(fd, rel=1e-6)


# ------------------------------------------------------------------ train


def test_zero_step_keeps_spectrum():
    tr = train(TrainConfig(m=16, step_size=0.0, iterations=20, snapshot_every=5))
    assert np.all(tr.values == tr.values[0])
    assert np.all(tr.times == 0.0)


def test_first_snapshot_is_initial_residual():
    cfg = TrainConfig(m=16, iterations=10, snapshot_every=5, seed=2)
    tr = train(cfg)
    p = init_network(cfg)
    r0 = forward(p, cfg.grid.points) - target_eval(cfg.target, cfg.grid.points)
    assert np.allclose(tr.values[0], dft_forward(r0, cfg.grid).values, rtol=0, atol=1e-14)
    assert tr.iterations.tolist() == [0, 5, 10]
    assert np.all(np.diff(tr.times) > 0)
    assert tr.times[-1] == pytest.approx(10 * DEFAULT_STEP)


def test_time_scale_stretches_time_only():
    a = train(TrainConfig(m=16, iterations=10, snapshot_every=5))
    b = train(TrainConfig(m=16, iterations=10, snapshot_every=5, time_scale=0.25))
    assert np.array_equal(a.values, b.values)
    assert np.allclose(b.times, 0.25 * a.times)


def test_training_is_bitwise_deterministic():
    cfg = TrainConfig(m=32, iterations=30, snapshot_every=10, seed=4)
    a, b = train(cfg), train(cfg)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.risks, b.risks)


def test_one_frozen_step_damps_supported_frequencies():
    # ensemble mean of the relative change should follow -step * rho / 4
    # (time constant of this normalisation, see README)
    changes = []
    for seed in range(20):
        tr = train(TrainConfig(dist_w=Uniform(10.0), frozen_w=True, iterations=1, snapshot_every=1, seed=seed))
        a0, a1 = np.abs(tr.values[0]), np.abs(tr.values[1])
        changes.append((a1 - a0) / a0)
    mean = np.mean(changes, axis=0)
    xi = np.abs(tr.freqs)
    inside = mean[xi <= 8]
    assert np.all(inside < 0)
    assert np.mean(inside) == pytest.approx(-DEFAULT_STEP * 0.05 / 4, rel=0.1)
    assert np.mean(np.abs(mean[xi >= 14])) < 0.1 * abs(np.mean(inside))


def test_divergence_names_the_iteration():
    with pytest.raises(FloatingPointError, match="iteration"):
        train(TrainConfig(m=16, sigma_a=1.0, step_size=1e150, iterations=50, snapshot_every=50))


@pytest.mark.parametrize("kwargs", [
    {"iterations": 0}, {"iterations": 10, "snapshot_every": 3}, {"sigma_a": 0.0},
    {"depth": 1}, {"step_size": -1.0},
])
def test_invalid_train_config(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_full_length_training_descends_monotonically():
    tr = train(TrainConfig(m=2000, dist_w=Normal(300 / (2 * np.pi)), iterations=10_000, snapshot_every=2500))
    assert tr.final_risk < tr.initial_risk
    assert np.all(np.diff(tr.risks) <= 0)
    assert len(tr) == 5
