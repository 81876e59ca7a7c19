"""Trial functions built on a network, and the differential operator applied to them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net import Jet2, Network
from .problem import ExactSolution, Problem

PINN1 = "pinn1"
PINN2 = "pinn2"
ANALYTIC = "analytic"
KINDS = (PINN1, PINN2)


@dataclass(frozen=True)
class TrialFunction:
    """``Phi = N`` (pinn1) or ``Psi = chi N + l`` (pinn2).

    ``chi(x) = -(x - x1)(x - x2)`` vanishes at both ends and ``l`` is the
    affine interpolant of the boundary values, so pinn2 matches ``p`` and
    ``q`` for every parameter vector.
    """

    kind: str
    network: Network
    x1: float
    x2: float
    p: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trial kind {self.kind!r}")

    @classmethod
    def for_problem(cls, kind: str, network: Network, prob: Problem) -> TrialFunction:
        return cls(kind, network, prob.x1, prob.x2, prob.p, prob.q)

    def with_network(self, network: Network) -> TrialFunction:
        return TrialFunction(self.kind, network, self.x1, self.x2, self.p, self.q)

    @property
    def boundary_exact(self) -> bool:
        return self.kind == PINN2

    def _envelope(self, x):
        """Jets of the cutoff and the boundary line (pinn2 only)."""
        x = np.asarray(x, dtype=float)
        chi = Jet2(-(x - self.x1) * (x - self.x2),
                   -(2.0 * x - self.x1 - self.x2),
                   np.full_like(x, -2.0))
        t = (x - self.x1) / (self.x2 - self.x1)
        line = Jet2(self.p * (1.0 - t) + self.q * t,
                    np.full_like(x, (self.q - self.p) / (self.x2 - self.x1)),
                    np.zeros_like(x))
        return chi, line

    def eval_jet(self, x) -> Jet2:
        net = self.network.forward_jet(x)
        if self.kind == PINN1:
            return net
        chi, line = self._envelope(x)
        return chi * net + line

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.network.forward(x)
        if self.kind == PINN1:
            return n
        t = (x - self.x1) / (self.x2 - self.x1)
        return -(x - self.x1) * (x - self.x2) * n + (self.p * (1.0 - t) + self.q * t)

    def grad_theta(self, x, weights) -> np.ndarray:
        """Gradient of ``sum_i (u0 Psi + u1 Psi' + u2 Psi'')(x_i)`` with respect to theta."""
        if self.kind == PINN1:
            return self.network.grad_theta(x, weights)
        u0, u1, u2 = weights
        chi, _ = self._envelope(x)
        c0, c1, c2 = chi
        return self.network.grad_theta(x, (
            u0 * c0 + u1 * c1 + u2 * c2,
            u1 * c0 + 2.0 * u2 * c1,
            u2 * c0,
        ))


@dataclass(frozen=True)
class AnalyticTrial:
    """A closed-form function used as a trial (e.g. the exact solution)."""

    solution: ExactSolution
    kind: str = ANALYTIC
    boundary_exact: bool = True

    def eval_jet(self, x) -> Jet2:
        v, d1, d2 = self.solution.jet(x)
        return Jet2(np.asarray(v), np.asarray(d1), np.asarray(d2))

    def __call__(self, x):
        return self.solution(x)


def apply_operator(prob: Problem, t, x) -> np.ndarray:
    """``-eps t'' + b t' + c t`` at ``x``."""
    jet = t.eval_jet(x)
    return prob.operator(x, jet.value, jet.d1, jet.d2)


def residual(prob: Problem, t, x) -> np.ndarray:
    """``f - L[t]`` at ``x``."""
    return prob.f_fn(x) - apply_operator(prob, t, x)
