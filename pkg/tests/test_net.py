import numpy as np
import pytest

from pinncert.net import Jet2, Network, init, param_count


def test_init_deterministic():
    assert np.array_equal(init(0, 2, 32).theta, init(0, 2, 32).theta)
    assert not np.array_equal(init(0).theta, init(1).theta)


def test_zero_network_is_constant():
    net = init(0, zero=True)
    jet = net.forward_jet(np.linspace(-1, 1, 9))
    assert np.all(jet.value == 0) and np.all(jet.d1 == 0) and np.all(jet.d2 == 0)


def test_param_count():
    assert param_count([1, 32, 32, 1]) == 1153
    assert init(0, 2, 32).n_params == 1153
    assert param_count([1, 5, 1]) == 2 * 5 + 6


def test_layers_round_trip():
    net = init(4, 3, 7)
    again = Network.from_layers(net.layers())
    assert again.sizes == net.sizes
    assert np.array_equal(again.theta, net.theta)


def test_checkpoint_round_trip(tmp_path):
    net = init(9, 2, 5)
    net.save(tmp_path / "n.bin")
    back = Network.load(tmp_path / "n.bin")
    assert back.sizes == net.sizes and back.seed == 9
    assert np.array_equal(back.theta, net.theta)
    with pytest.raises(ValueError):
        Network.from_bytes(b"garbage!" + bytes(16))


def test_linear_neuron():
    net = Network.from_layers([(np.array([[2.0]]), np.array([0.0]))])
    x = np.array([-1.0, 0.5, 3.0])
    v, d1, d2 = net.forward_jet(x)
    assert np.array_equal(v, 2 * x)
    assert np.all(d1 == 2.0) and np.all(d2 == 0.0)


def test_tanh_neuron_at_zero():
    net = Network.from_layers([(np.array([[1.0]]), np.array([0.0])), (np.array([[1.0]]), np.array([0.0]))])
    v, d1, d2 = net.forward_jet(np.array([0.0]))
    assert (v[0], d1[0], d2[0]) == (0.0, 1.0, 0.0)


def test_jet_rules():
    x = np.linspace(0.1, 0.9, 5)
    u = Jet2.variable(x)
    p = (u * u).tanh() * u - u
    # p = tanh(x^2) x - x
    s = np.tanh(x * x)
    ds = (1 - s * s) * 2 * x
    d2s = -2 * s * (1 - s * s) * (2 * x) ** 2 + (1 - s * s) * 2
    assert np.allclose(p.value, s * x - x)
    assert np.allclose(p.d1, ds * x + s - 1)
    assert np.allclose(p.d2, d2s * x + 2 * ds)


@pytest.mark.parametrize("seed", range(10))
def test_derivatives_match_finite_differences(seed):
    net = init(seed, 2, 16)
    x = np.linspace(-0.95, 0.95, 20) + 0.01 * seed
    jet = net.forward_jet(x)
    assert np.array_equal(jet.value, net.forward(x))
    h = 1e-4
    fp, fm, f0 = net.forward(x + h), net.forward(x - h), net.forward(x)
    d1 = (fp - fm) / (2 * h)
    d2 = (fp - 2 * f0 + fm) / h**2
    assert np.max(np.abs(jet.d1 - d1)) <= 1e-5 * np.max(np.abs(jet.d1))
    assert np.max(np.abs(jet.d2 - d2)) <= 1e-5 * np.max(np.abs(jet.d2))


def test_single_neuron_gradient_is_backprop():
    # N = v tanh(w x + a) + c
    w, a, v, c = 0.7, -0.2, 1.3, 0.4
    net = Network.from_layers([(np.array([[w]]), np.array([a])), (np.array([[v]]), np.array([c]))])
    x = np.array([0.3, -0.5])
    g = net.grad_theta(x, (np.ones(2), 0.0, 0.0))
    s = np.tanh(w * x + a)
    expected = [np.sum(v * (1 - s * s) * x), np.sum(v * (1 - s * s)), np.sum(s), 2.0]
    assert np.allclose(g, expected, rtol=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_gradient_directional_derivative(seed):
    net = init(seed, 2, 8)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, 12)
    wts = tuple(rng.normal(size=12) for _ in range(3))
    direction = rng.normal(size=net.n_params)

    def functional(theta):
        jet = Network(net.sizes, theta).forward_jet(x)
        return float(np.sum(wts[0] * jet.value + wts[1] * jet.d1 + wts[2] * jet.d2))

    h = 1e-6
    fd = (functional(net.theta + h * direction) - functional(net.theta - h * direction)) / (2 * h)
    an = float(net.grad_theta(x, wts) @ direction)
    assert an == pytest.approx(fd, rel=1e-4)


def test_zero_weights_zero_gradient():
    net = init(0)
    assert np.array_equal(net.grad_theta(np.linspace(0, 1, 5), (0.0, 0.0, 0.0)), np.zeros(net.n_params))
