import numpy as np
import pytest

from pinncert.net import Network, init
from pinncert.problem import registry_get
from pinncert.sample import draw
from pinncert.train import LossSpec, TrainConfig, loss, loss_and_grad, train
from pinncert.trial import PINN1, PINN2, AnalyticTrial, TrialFunction


def test_exact_solution_loss_is_zero(ex51):
    s = draw(0, 256, (0, 1))
    value = loss(ex51, AnalyticTrial(ex51.exact), s, LossSpec(PINN2))
    assert value <= 1e-16 * np.mean(ex51.f_fn(s.points) ** 2)


def test_zero_network_residual_closed_form():
    prob = registry_get("example51", {"k": 0, "lambda": 0, "eps": 1})
    t = TrialFunction.for_problem(PINN2, init(0, zero=True), prob)
    s = draw(1, 64, (0, 1))
    x = s.points
    # l(x) = x so L[l] = b * 1 + c * x = 0
    expected = np.mean(prob.f_fn(x) ** 2)
    assert loss(prob, t, s, LossSpec(PINN2)) == pytest.approx(expected, rel=1e-14)


def test_pinn1_boundary_term():
    prob = registry_get("example52")
    # constant network equal to p = 1 misses q = -1 by 2
    net = Network.from_layers([(np.zeros((1, 1)), np.zeros(1)), (np.zeros((1, 1)), np.array([1.0]))])
    t = TrialFunction.for_problem(PINN1, net, prob)
    s = draw(0, 32, (0, 1))
    plain = loss(prob, t, s, LossSpec(PINN1, boundary_weight=0.0))
    assert loss(prob, t, s, LossSpec(PINN1)) == pytest.approx(plain + 4.0)
    assert loss(prob, t, s, LossSpec(PINN1, boundary_weight=2.5)) == pytest.approx(plain + 10.0)


def test_pinn1_boundary_vanishes_when_matched():
    prob = registry_get("example36")
    net = Network.from_layers([(np.zeros((1, 1)), np.zeros(1)), (np.zeros((1, 1)), np.zeros(1))])
    t = TrialFunction.for_problem(PINN1, net, prob)
    s = draw(0, 32, (0, 1))
    assert loss(prob, t, s, LossSpec(PINN1)) == loss(prob, t, s, LossSpec(PINN1, boundary_weight=0.0))


@pytest.mark.parametrize("kind", [PINN1, PINN2])
@pytest.mark.parametrize("seed", range(5))
def test_loss_gradient_finite_differences(kind, seed):
    prob = registry_get("example52", {"k": 7, "lambda": 3, "eps": 0.5})
    t = TrialFunction.for_problem(kind, init(seed, 2, 8), prob)
    s = draw(seed, 32, (0, 1))
    spec = LossSpec(kind)
    _, grad = loss_and_grad(prob, t, s, spec)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=grad.size)
    h = 1e-6

    def at(theta):
        return loss(prob, t.with_network(Network(t.network.sizes, theta)), s, spec)

    fd = (at(t.network.theta + h * d) - at(t.network.theta - h * d)) / (2 * h)
    assert float(grad @ d) == pytest.approx(fd, rel=1e-3)


def test_zero_epochs_leaves_theta():
    prob = registry_get("example36")
    t = TrialFunction.for_problem(PINN2, init(0, 2, 8), prob)
    res = train(prob, t, LossSpec(PINN2, 32), TrainConfig(epochs=0))
    assert np.array_equal(res.trial.network.theta, t.network.theta)
    assert res.history == [] and res.final_loss == res.initial_loss


def test_deterministic_history():
    prob = registry_get("example36")
    t = TrialFunction.for_problem(PINN2, init(0, 2, 8), prob)
    cfg = TrainConfig(epochs=5)
    a = train(prob, t, LossSpec(PINN2, 32, resample=True), cfg, reference=prob.exact)
    b = train(prob, t, LossSpec(PINN2, 32, resample=True), cfg, reference=prob.exact)
    assert a.history == b.history and a.errors == b.errors
    assert np.array_equal(a.trial.network.theta, b.trial.network.theta)
    # input network untouched
    assert np.array_equal(t.network.theta, init(0, 2, 8).theta)


def test_kind_mismatch():
    prob = registry_get("example36")
    t = TrialFunction.for_problem(PINN1, init(0, 1, 4), prob)
    with pytest.raises(ValueError):
        train(prob, t, LossSpec(PINN2), TrainConfig(epochs=1))


def test_example36_loss_drops_tenfold():
    prob = registry_get("example36")
    t = TrialFunction.for_problem(PINN2, init(0), prob)
    res = train(prob, t, LossSpec(PINN2, 256), TrainConfig(epochs=500, seed=0), reference=prob.exact)
    assert res.final_loss * 10 <= res.initial_loss
    assert len(res.history) == 500 and len(res.errors) == 500
