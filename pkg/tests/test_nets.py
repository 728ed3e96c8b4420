import numpy as np
import pytest

from detac.nets import Adam, MlpNet, gradient_check


def test_forward_zero_weights_tanh_output_is_zero():
    net = MlpNet([3, 4, 2], hidden="tanh", output="tanh")
    net.set_params(np.zeros(net.num_params))
    out = net.forward(np.array([0.7, -1.2, 3.0]))
    assert np.all(out == 0.0)


def test_forward_identity_single_linear_layer():
    net = MlpNet([2, 2], output="linear")
    flat = np.concatenate([np.eye(2).ravel(), np.zeros(2)])
    net.set_params(flat)
    out = net.forward(np.array([0.2, -0.3]))
    assert np.allclose(out, [0.2, -0.3], atol=1e-15)


def test_forward_matches_straight_line_reimplementation():
    # independently coded matrix-multiply chain
    rng = np.random.default_rng(42)
    net = MlpNet([3, 5, 2], hidden="tanh", output="tanh", rng=rng)
    x = rng.standard_normal(3)
    w1, b1 = net.weights[0], net.biases[0]
    w2, b2 = net.weights[1], net.biases[1]
    expected = np.tanh(np.tanh(x @ w1 + b1) @ w2 + b2)
    assert np.allclose(net.forward(x), expected, atol=1e-12)


def test_param_count_matches_layer_sizes():
    net = MlpNet([4, 8, 8, 2])
    assert net.num_params == (4 + 1) * 8 + (8 + 1) * 8 + (8 + 1) * 2


def test_forward_rejects_dimension_mismatch():
    net = MlpNet([3, 2])
    with pytest.raises(ValueError):
        net.forward(np.zeros(4))


def test_tanh_output_stays_inside_unit_box():
    rng = np.random.default_rng(7)
    net = MlpNet([2, 16, 3], output="tanh", rng=rng)
    for _ in range(50):
        out = net.forward(rng.standard_normal(2) * 10)
        assert np.all(np.abs(out) < 1.0)


def test_forward_pure_in_eval_mode():
    rng = np.random.default_rng(5)
    net = MlpNet([2, 8, 1], batch_norm=True, rng=rng)
    x = rng.standard_normal((3, 2))
    a = net.forward(x, training=False)
    b = net.forward(x, training=False)
    assert np.array_equal(a, b)


def test_backward_zero_upstream_gives_zero_gradient():
    net = MlpNet([2, 4, 1], rng=np.random.default_rng(1))
    net.forward(np.ones((3, 2)))
    grad = net.backward(np.zeros((3, 1)))
    assert np.all(grad == 0.0)


def test_backward_scalar_tanh_analytic():
    # f(theta) = tanh(theta * x) at theta=0, x=1: df/dtheta = sech^2(0) = 1
    net = MlpNet([1, 1], output="tanh")
    net.set_params(np.zeros(2))
    net.forward(np.array([1.0]))
    grad = net.backward(np.array([1.0]))
    assert grad[0] == pytest.approx(1.0, abs=1e-12)  # weight
    assert grad[1] == pytest.approx(1.0, abs=1e-12)  # bias


def test_backward_requires_cached_forward():
    net = MlpNet([2, 1])
    with pytest.raises(RuntimeError):
        net.backward(np.ones((1, 1)))


@pytest.mark.parametrize("hidden", ["tanh", "leaky_relu"])
@pytest.mark.parametrize("output", ["linear", "tanh"])
def test_gradient_check_seeded_nets(hidden, output):
    rng = np.random.default_rng(123)
    net = MlpNet([3, 6, 4, 2], hidden=hidden, output=output, rng=rng)
    err = gradient_check(net, rng.standard_normal((5, 3)))
    assert err < 1e-4


def test_gradient_check_batch_norm_training_mode():
    rng = np.random.default_rng(9)
    net = MlpNet([2, 8, 1], hidden="leaky_relu", output="tanh",
                 batch_norm=True, rng=rng)
    err = gradient_check(net, rng.standard_normal((6, 2)), training=True)
    assert err < 1e-4


def test_adam_zero_gradient_is_identity():
    adam = Adam(3, alpha=0.1)
    params = np.array([1.0, -2.0, 0.5])
    new = adam.step(params, np.zeros(3))
    assert np.array_equal(new, params)
    assert adam.t == 1


def test_adam_first_step_bias_correction():
    # beta1=0 => m_hat = g; v_hat = g^2; step = -alpha g / (|g| + eps)
    adam = Adam(1, alpha=0.1, beta1=0.0, beta2=0.999, eps=1e-8)
    new = adam.step(np.array([0.0]), np.array([0.5]))
    assert new[0] == pytest.approx(-0.1, rel=1e-6)


def test_adam_rejects_nonfinite_gradient():
    adam = Adam(2, alpha=0.1)
    params = np.zeros(2)
    with pytest.raises(ValueError):
        adam.step(params, np.array([1.0, np.nan]))
    assert adam.t == 0


def test_adam_minimizes_quadratic():
    # scripted reference loop on f(theta) = theta^2 from theta = 1
    adam = Adam(1, alpha=0.01, beta1=0.9)
    theta = np.array([1.0])
    for _ in range(100):
        theta = adam.step(theta, 2.0 * theta)
    assert abs(theta[0]) < 0.5


def test_adam_ascent_flag_flips_direction():
    down = Adam(1, alpha=0.1)
    up = Adam(1, alpha=0.1)
    g = np.array([0.3])
    assert down.step(np.zeros(1), g)[0] == pytest.approx(
        -up.step(np.zeros(1), g, ascent=True)[0])


def test_batchnorm_identical_rows_normalize_to_zero():
    net = MlpNet([2, 3, 1], batch_norm=True, rng=np.random.default_rng(2))
    x = np.tile(np.array([0.4, -0.1]), (5, 1))
    z = x @ net.weights[0] + net.biases[0]
    normed, _ = net._bn_forward(z, training=True)
    # gamma=1, beta=0 initially: zero variance rows map to zero
    assert np.allclose(normed, 0.0, atol=1e-12)


def test_batchnorm_symmetric_pair():
    net = MlpNet([1, 1, 1], batch_norm=True)
    z = np.array([[-1.0], [1.0]])
    normed, _ = net._bn_forward(z, training=True)
    floor = np.sqrt(1.0 / (1.0 + 1e-5))
    assert np.allclose(normed, z * floor, atol=1e-9)


def test_batchnorm_eval_reproduces_training_after_convergence():
    rng = np.random.default_rng(3)
    net = MlpNet([2, 4, 1], batch_norm=True, rng=rng)
    x = rng.standard_normal((8, 2))
    for _ in range(400):  # running stats converge to the fixed batch stats
        train_out = net.forward(x, training=True)
    eval_out = net.forward(x, training=False)
    assert np.max(np.abs(train_out - eval_out)) < 1e-6


def test_serialization_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    net = MlpNet([3, 5, 2], hidden="leaky_relu", output="tanh",
                 batch_norm=True, rng=rng)
    net.forward(rng.standard_normal((4, 3)), training=True)
    path = tmp_path / "net.txt"
    net.save(path)
    loaded = MlpNet.load(path)
    x = rng.standard_normal(3)
    assert np.array_equal(net.forward(x), loaded.forward(x))
    assert np.array_equal(net.get_params(), loaded.get_params())
