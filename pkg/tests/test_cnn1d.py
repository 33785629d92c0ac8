import numpy as np
import pytest

from shaftwatch.core.models.cnn1d import Cnn1dModel
from shaftwatch.core.models.cnn1d import cnn_forward
from shaftwatch.core.models.cnn1d import cnn_init
from shaftwatch.core.models.cnn1d import cnn_train
from shaftwatch.core.models.optim import TrainingConfig
from shaftwatch.errors import ShapeMismatch

from .test_mlp import numeric_gradients
from .test_mlp import relative_error


def tiny_net(seed: int = 0, length: int = 32, n_conv: int = 1) -> Cnn1dModel:
    return cnn_init(
        length,
        n_conv,
        np.random.default_rng(seed),
        kernel_size=3,
        base_channels=2,
        pool_size=2,
        fc_width=4,
    )


def tone_windows(seed: int, n: int = 160, length: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Noise windows; the positive class carries an added tone."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n).astype(np.float64)
    t = np.arange(length)
    phase = rng.uniform(0, 2 * np.pi, size=(n, 1))
    x = rng.normal(0.0, 0.3, size=(n, length)) + y[:, None] * np.sin(2 * np.pi * t / 8 + phase)
    return x, y


def test_output_is_probability():
    net = tiny_net()
    x = np.random.default_rng(1).normal(0.0, 1e3, size=(5, 32))
    p = cnn_forward(net, x)
    assert p.shape == (5,)
    assert np.all((p > 0) & (p < 1))
    assert isinstance(cnn_forward(net, x[0]), float)


def test_zero_convolutions_give_constant_output():
    """Test that with silent convolutions the output only depends on the shift."""
    net = tiny_net(seed=2, n_conv=2)
    for blk in net.blocks:
        blk.weight[...] = 0.0
        blk.beta[...] = 0.3
    x = np.random.default_rng(3).normal(size=(6, 32))

    p = cnn_forward(net, x)

    np.testing.assert_allclose(p, p[0], rtol=1e-12)


def test_backprop_matches_finite_differences():
    """Test analytic gradients including batch normalisation and pooling."""
    rng = np.random.default_rng(4)
    net = tiny_net(seed=5)
    x = rng.normal(size=(6, 32))
    y = np.array([0, 1, 1, 0, 1, 0], dtype=np.float64)

    _, analytic = net.loss_and_grads(x, y)
    numeric = numeric_gradients(lambda: net.batch_loss(x, y), net.parameters())

    assert relative_error(analytic, numeric) < 1e-3


def test_two_block_backprop():
    rng = np.random.default_rng(6)
    net = tiny_net(seed=7, n_conv=2)
    x = rng.normal(size=(5, 32))
    y = np.array([1, 0, 1, 0, 0], dtype=np.float64)

    _, analytic = net.loss_and_grads(x, y)
    numeric = numeric_gradients(lambda: net.batch_loss(x, y), net.parameters())

    assert relative_error(analytic, numeric) < 1e-3


def test_running_statistics():
    """Test that training steps update the running statistics used at inference."""
    net = tiny_net(seed=8)
    x = np.random.default_rng(9).normal(2.0, 1.0, size=(8, 32))
    before = net.predict_proba(x)

    net.loss_and_grads(x, np.zeros(8))

    assert np.all(net.blocks[0].running_mean != 0.0)
    assert not np.array_equal(net.predict_proba(x), before)


def test_inference_is_batch_independent():
    net = tiny_net(seed=10)
    x = np.random.default_rng(11).normal(size=(300, 32))
    p = net.predict_proba(x)
    assert p.shape == (300,)
    assert net.predict_proba(x[0]) == pytest.approx(p[0], rel=1e-12)
    assert net.predict_proba(x[-1]) == pytest.approx(p[-1], rel=1e-12)


def test_negated_output_layer_complements_probability():
    net = tiny_net(seed=12)
    x = np.random.default_rng(13).normal(size=(4, 32))
    p = net.predict_proba(x)
    net.out_weight *= -1
    net.out_bias *= -1
    np.testing.assert_allclose(p + net.predict_proba(x), 1.0, atol=1e-12)


@pytest.mark.parametrize("n_conv", [1, 3, 6])
def test_full_length_shape_chain(n_conv: int):
    """Test the default architecture on 4096-sample windows."""
    net = cnn_init(4096, n_conv, np.random.default_rng(n_conv))
    x = np.random.default_rng(0).normal(size=(2, 4096))

    p = cnn_forward(net, x)

    assert p.shape == (2,)
    assert net.blocks[-1].weight.shape[0] == 16 * 2 ** (n_conv - 1)
    assert net.output_length == 4096 // 4**n_conv


@pytest.mark.parametrize("n_conv", [0, 7])
def test_block_count_limits(n_conv: int):
    with pytest.raises(ShapeMismatch):
        cnn_init(4096, n_conv, np.random.default_rng(0))


def test_pooling_must_fit_input():
    with pytest.raises(ShapeMismatch):
        cnn_init(16, 3, np.random.default_rng(0), pool_size=4)


def test_wrong_window_length():
    with pytest.raises(ShapeMismatch):
        cnn_forward(tiny_net(), np.zeros(31))


def test_training_loss_decreases():
    train = tone_windows(14)
    test = tone_windows(15, n=40)
    config = TrainingConfig(max_epochs=5, batch_size=16, learning_rate=0.01)

    model = cnn_train(
        train, test, n_conv=1, seed=2, kernel_size=5, base_channels=4, pool_size=2, fc_width=8, config=config
    )

    assert model.history.train_loss[-1] < model.history.train_loss[0]
    assert model.history.best_epoch == int(np.argmin(model.history.test_loss)) + 1


def test_training_is_deterministic():
    train = tone_windows(16, n=48)
    test = tone_windows(17, n=16)
    config = TrainingConfig(max_epochs=2, batch_size=16)
    kwargs = dict(n_conv=2, seed=4, kernel_size=3, base_channels=2, pool_size=2, fc_width=4, config=config)

    first = cnn_train(train, test, **kwargs)
    second = cnn_train(train, test, **kwargs)

    for a, b in zip(first.state(), second.state()):
        np.testing.assert_array_equal(a, b)


def test_params_roundtrip():
    net = tiny_net(seed=18, n_conv=2)
    net.loss_and_grads(np.random.default_rng(19).normal(size=(4, 32)), np.array([0, 1, 0, 1.0]))
    restored = Cnn1dModel.from_params(net.to_params())
    x = np.random.default_rng(20).normal(size=(3, 32))
    np.testing.assert_array_equal(restored.predict_proba(x), net.predict_proba(x))
