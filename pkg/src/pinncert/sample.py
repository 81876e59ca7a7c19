"""Uniform collocation samples and Monte Carlo means with Chebyshev halfwidths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quad import default_rule, integrate

HALFWIDTH_KS = (2, 5, 10)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for ``seed``; ``stream`` selects an independent substream."""
    ss = np.random.SeedSequence([int(seed), *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SampleSet:
    seed: int
    x1: float
    x2: float
    points: np.ndarray

    @property
    def n(self) -> int:
        return len(self.points)


# substream tag for collocation draws, separate from network initialisation
SAMPLE_STREAM = 1


def draw(seed: int, n: int, interval: tuple[float, float], stream: int = 0) -> SampleSet:
    """``n`` i.i.d. uniform points strictly inside ``interval``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x1, x2 = map(float, interval)
    rng = make_rng(seed, SAMPLE_STREAM, stream)
    # (k + 0.5) / 2^53 never hits 0 or 1
    u = ((rng.integers(0, 1 << 53, size=n, dtype=np.int64) + 0.5) * 2.0**-53)
    pts = x1 + (x2 - x1) * u
    pts = np.clip(pts, np.nextafter(x1, x2), np.nextafter(x2, x1))
    pts.setflags(write=False)
    return SampleSet(int(seed), x1, x2, pts)


@dataclass(frozen=True)
class McEstimate:
    n: int
    mean: float
    beta_hat: float
    beta_true: float | None = None

    @property
    def alpha_hat(self) -> float:
        return self.mean

    def halfwidth(self, k: float, beta: float | None = None) -> float:
        """Chebyshev halfwidth ``k * beta / sqrt(n)``; coverage is at least ``1 - 1/k^2``.

        Uses the plug-in ``beta_hat`` unless ``beta`` is given.
        """
        beta = self.beta_hat if beta is None else beta
        return k * beta / math.sqrt(self.n)

    @property
    def halfwidths(self) -> dict[int, float]:
        return {k: self.halfwidth(k) for k in HALFWIDTH_KS}


def mc_mean(psi: Callable | np.ndarray, s: SampleSet) -> McEstimate:
    """Sample mean of a nonnegative integrand over ``s``.

    ``psi`` may be a vectorised callable or the precomputed values at the
    sample points.
    """
    vals = np.asarray(psi(s.points) if callable(psi) else psi, dtype=float)
    if vals.shape != s.points.shape:
        raise ValueError("integrand values do not match the sample")
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite on the sample")
    if np.any(vals < 0):
        raise ValueError("Monte Carlo integrand must be nonnegative")
    mean = float(vals.mean())
    beta_hat = float(vals.std())
    return McEstimate(s.n, mean, beta_hat)


def true_beta(psi: Callable, interval: tuple[float, float]) -> tuple[float, float]:
    """Quadrature mean ``alpha`` and standard deviation ``beta`` of ``psi(X)``."""
    x1, x2 = interval
    rule = default_rule(x1, x2)
    length = x2 - x1
    alpha = integrate(psi, rule) / length
    second = integrate(lambda x: np.asarray(psi(x)) ** 2, rule) / length
    return alpha, math.sqrt(max(second - alpha**2, 0.0))
