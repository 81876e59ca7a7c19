"""Residual losses for the two trial families and an Adam training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .net import Network
from .problem import Problem
from .sample import SampleSet, draw
from .trial import PINN1, PINN2, TrialFunction, residual

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class LossSpec:
    kind: str = PINN2
    n: int = 256
    resample: bool = False
    boundary_weight: float = 1.0


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    steps_per_epoch: int = 8
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0


def boundary_loss(prob: Problem, t) -> float:
    ends = t(np.array([prob.x1, prob.x2]))
    return float((prob.p - ends[0]) ** 2 + (prob.q - ends[1]) ** 2)


def loss(prob: Problem, t, s: SampleSet, spec: LossSpec) -> float:
    """Mean squared residual over the sample, plus the boundary term for pinn1."""
    r = residual(prob, t, s.points)
    value = float(np.mean(r * r))
    if spec.kind == PINN1:
        value += spec.boundary_weight * boundary_loss(prob, t)
    return value


def loss_and_grad(prob: Problem, t: TrialFunction, s: SampleSet, spec: LossSpec) -> tuple[float, np.ndarray]:
    x = s.points
    r = residual(prob, t, x)
    value = float(np.mean(r * r))
    # d(mean r^2) = -2/n sum r dL[t];  L[t] = -eps t'' + b t' + c t
    scale = -2.0 / x.size * r
    grad = t.grad_theta(x, (scale * prob.c_fn(x), scale * prob.b_fn(x), scale * -prob.eps))
    if spec.kind == PINN1:
        ends = np.array([prob.x1, prob.x2])
        gap = t(ends) - np.array([prob.p, prob.q])
        value += spec.boundary_weight * float(gap @ gap)
        grad = grad + t.grad_theta(ends, (2.0 * spec.boundary_weight * gap, 0.0, 0.0))
    return value, grad


@dataclass
class TrainedResult:
    trial: TrialFunction
    initial_loss: float
    history: list[float] = field(default_factory=list)
    errors: list[float] | None = None
    sample: SampleSet | None = None

    @property
    def final_loss(self) -> float:
        return self.history[-1] if self.history else self.initial_loss

    def smoothed_trend(self, window: int = 10) -> bool:
        """Whether the window-averaged loss history never increases (reported, not enforced)."""
        h = np.asarray(self.history)
        if h.size < window + 1:
            return True
        avg = np.convolve(h, np.ones(window) / window, mode="valid")
        return bool(np.all(np.diff(avg) <= 0))


def train(prob: Problem, t: TrialFunction, spec: LossSpec, cfg: TrainConfig,
          reference: Callable | None = None, on_epoch: Callable | None = None) -> TrainedResult:
    """Minimise the loss over theta with Adam on full batches.

    ``history[e]`` is the loss after epoch ``e`` on that epoch's sample;
    with ``reference`` the mean squared gap to it is tracked as well.
    The input trial is left untouched.
    """
    if t.kind != spec.kind:
        raise ValueError(f"trial kind {t.kind} does not match loss kind {spec.kind}")
    net: Network = t.network.copy()
    trial = t.with_network(net)
    interval = (prob.x1, prob.x2)
    s = draw(cfg.seed, spec.n, interval)
    initial = loss(prob, trial, s, spec)
    result = TrainedResult(trial, initial, [], [] if reference is not None else None, s)

    m = np.zeros_like(net.theta)
    v = np.zeros_like(net.theta)
    step = 0
    for epoch in range(cfg.epochs):
        if spec.resample and epoch:
            s = draw(cfg.seed, spec.n, interval, stream=epoch)
        for _ in range(cfg.steps_per_epoch):
            value, grad = loss_and_grad(prob, trial, s, spec)
            if not (np.isfinite(value) and np.all(np.isfinite(grad))):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} (lr={cfg.lr}); try a smaller step size")
            step += 1
            m = cfg.beta1 * m + (1 - cfg.beta1) * grad
            v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad
            m_hat = m / (1 - cfg.beta1**step)
            v_hat = v / (1 - cfg.beta2**step)
            net.theta -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        value = loss(prob, trial, s, spec)
        if not np.isfinite(value):
            raise TrainingDivergedError(f"non-finite loss after epoch {epoch} (lr={cfg.lr})")
        result.history.append(value)
        if reference is not None:
            gap = reference(s.points) - trial(s.points)
            result.errors.append(float(np.mean(gap * gap)))
        if on_epoch is not None:
            on_epoch(epoch, result)
    result.sample = s
    log.debug("trained %s: loss %.3e -> %.3e", prob.name or "problem", initial, result.final_loss)
    return result
