"""Composite Gauss-Legendre quadrature, norms, and the exponential weight rho.

Every integral that enters a certificate constant goes through
:func:`integrate`, which refines the rule (doubling panels) until two
successive values agree to ``rtol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

DEFAULT_PANELS = 64
DEFAULT_POINTS = 8
REFINE_RTOL = 1e-9
MAX_PANELS = 1 << 16


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule on ``(a, b)``."""

    a: float
    b: float
    panels: int = DEFAULT_PANELS
    points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"empty interval ({self.a}, {self.b})")
        if self.panels < 1 or self.points < 1:
            raise ValueError("panels and points must be positive")

    @property
    def nodes_weights(self) -> tuple[np.ndarray, np.ndarray]:
        t, w = leggauss(self.points)
        edges = np.linspace(self.a, self.b, self.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights

    def refined(self) -> QuadratureRule:
        return QuadratureRule(self.a, self.b, 2 * self.panels, self.points)

    def apply(self, g: Callable) -> float:
        nodes, weights = self.nodes_weights
        vals = np.asarray(g(nodes), dtype=float)
        vals = np.broadcast_to(vals, nodes.shape)
        if not np.all(np.isfinite(vals)):
            bad = nodes[~np.isfinite(vals)][0]
            raise QuadratureError(f"integrand is not finite at x={bad!r}")
        return float(np.dot(weights, vals))


def integrate(g: Callable, rule: QuadratureRule, rtol: float = REFINE_RTOL, refine: bool = True,
              atol: float = 0.0) -> float:
    """Integrate the vectorised callable ``g`` over the rule's interval.

    With ``refine`` the panel count doubles until successive values agree
    to ``rtol`` (relative, with an absolute floor of ``rtol * 1e-12`` times
    the largest value seen so that exact zeros terminate) or to ``atol``.
    """
    value = rule.apply(g)
    if not refine:
        return value
    scale = abs(value)
    while rule.panels < MAX_PANELS:
        rule = rule.refined()
        new = rule.apply(g)
        scale = max(scale, abs(new))
        if abs(new - value) <= max(rtol * max(abs(new), 1e-12 * scale), atol) or new == value:
            return new
        value = new
    raise QuadratureError(f"quadrature did not converge to rtol={rtol} with {rule.panels} panels")


def default_rule(a: float, b: float) -> QuadratureRule:
    return QuadratureRule(a, b)


def l2_norm(g: Callable, rule: QuadratureRule) -> float:
    return math.sqrt(integrate(lambda x: np.asarray(g(x)) ** 2, rule))


def weighted_l2_norm(g: Callable, rho: Callable, rule: QuadratureRule) -> float:
    """L2 norm with respect to the measure ``rho dx``."""
    return math.sqrt(integrate(lambda x: np.asarray(g(x)) ** 2 * rho(x), rule))


def l1_norm(g: Callable, rule: QuadratureRule) -> float:
    return integrate(lambda x: np.abs(g(x)), rule)


def sup_norm(g: Callable, grid: np.ndarray) -> float:
    vals = np.abs(np.asarray(g(grid), dtype=float))
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("non-finite value in sup norm")
    return float(vals.max())


def grid_minimum(fn: Callable, a: float, b: float, n: int = 1001, rounds: int = 3) -> tuple[float, float]:
    """Minimum of ``fn`` over ``[a, b]``: uniform grid, then bracket halving.

    Each round evaluates five points across the bracket around the current
    argmin and keeps the two cells adjacent to the best one.  Returns
    ``(min_value, argmin)``.
    """
    xs = np.linspace(a, b, n)
    vals = np.asarray(fn(xs), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError(f"non-finite value at x={xs[~np.isfinite(vals)][0]!r}")
    i = int(np.argmin(vals))
    best, arg = float(vals[i]), float(xs[i])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
    for _ in range(rounds):
        ts = np.linspace(lo, hi, 5)
        vs = np.asarray(fn(ts), dtype=float)
        j = int(np.argmin(vs))
        if vs[j] < best:
            best, arg = float(vs[j]), float(ts[j])
        lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, 4)]
    return best, arg


# -- rho ---------------------------------------------------------------------


@dataclass(frozen=True)
class RhoProfile:
    """``rho(x) = exp(int_{x1}^x -b(s)/eps ds)`` tabulated on a grid.

    ``log_rho`` holds the exponent at the grid nodes; evaluation between
    nodes adds a Gauss-Legendre integral over the partial cell.
    """

    grid: np.ndarray
    log_rho: np.ndarray
    log_min: float
    log_max: float
    abs_b_integral: float
    eps: float
    _integrand: Callable

    @property
    def rho_min(self) -> float:
        return math.exp(self.log_min)

    @property
    def rho_max(self) -> float:
        return math.exp(self.log_max)

    @property
    def ratio(self) -> float:
        """``max rho / min rho`` (may overflow to ``inf`` for tiny eps)."""
        try:
            return math.exp(self.log_max - self.log_min)
        except OverflowError:
            return math.inf

    def log_rho_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = self.grid
        idx = np.clip(np.searchsorted(g, x, side="right") - 1, 0, len(g) - 2)
        left = g[idx]
        t, w = leggauss(DEFAULT_POINTS)
        half = 0.5 * (x - left)
        mid = 0.5 * (x + left)
        pts = mid[..., None] + half[..., None] * t
        partial = np.sum(w * self._integrand(pts.ravel()).reshape(pts.shape), axis=-1) * half
        return self.log_rho[idx] + partial

    def __call__(self, x) -> np.ndarray:
        return np.exp(self.log_rho_at(x))


def rho_profile(prob, grid_size: int = 1001) -> RhoProfile:
    """Tabulate the weight of ``prob`` on ``grid_size`` uniform nodes."""
    if grid_size < 101:
        raise ValueError("grid_size must be at least 101")
    eps = prob.eps

    def integrand(s):
        return -np.asarray(prob.b_fn(s), dtype=float) / eps

    grid = np.linspace(prob.x1, prob.x2, grid_size)
    t, w = leggauss(DEFAULT_POINTS)
    half = 0.5 * np.diff(grid)
    mid = 0.5 * (grid[:-1] + grid[1:])
    pts = mid[:, None] + half[:, None] * t
    cell = (integrand(pts.ravel()).reshape(pts.shape) @ w) * half
    log_rho = np.concatenate([[0.0], np.cumsum(cell)])

    profile = RhoProfile(grid, log_rho, 0.0, 0.0, 0.0, eps, integrand)
    # one refinement pass around the grid extrema; endpoints are grid nodes
    lo, _ = grid_minimum(profile.log_rho_at, prob.x1, prob.x2, n=grid_size, rounds=1)
    neg_hi, _ = grid_minimum(lambda x: -profile.log_rho_at(x), prob.x1, prob.x2, n=grid_size, rounds=1)
    abs_b = l1_norm(prob.b_fn, default_rule(prob.x1, prob.x2))
    return RhoProfile(grid, log_rho, min(lo, 0.0), max(-neg_hi, 0.0), abs_b, eps, integrand)
