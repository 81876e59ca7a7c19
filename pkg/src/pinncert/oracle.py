"""Finite-difference reference solutions.

Central differences are used while the mesh Peclet number ``max|b| h / (2 eps)``
stays below one; the mesh is doubled until that holds or ``MAX_M`` is hit,
after which the convection term is upwinded.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .problem import ExactSolution, Problem

MAX_M = 1 << 20
CENTRAL = "central"
UPWIND = "upwind"


class FdError(RuntimeError):
    pass


@dataclass(frozen=True)
class FdSolution:
    mesh: np.ndarray
    values: np.ndarray
    scheme: str
    peclet: float
    residual: float

    @property
    def m(self) -> int:
        return len(self.mesh) - 1

    @property
    def h(self) -> float:
        return (self.mesh[-1] - self.mesh[0]) / self.m

    def __call__(self, x):
        return interpolate(self, x)

    def dump_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for xi, yi in zip(self.mesh, self.values):
                w.writerow([repr(float(xi)), repr(float(yi))])


def peclet(prob: Problem, m: int) -> float:
    mesh = np.linspace(prob.x1, prob.x2, m + 1)
    return float(np.max(np.abs(prob.b_fn(mesh)))) * (prob.length / m) / (2.0 * prob.eps)


def fd_solve(prob: Problem, m: int, auto_refine: bool = True) -> FdSolution:
    """Solve ``-eps y'' + b y' + c y = f`` with Dirichlet data on ``m`` cells."""
    if m < 8:
        raise ValueError("m must be at least 8")
    if auto_refine:
        while peclet(prob, m) >= 1.0 and m < MAX_M:
            m *= 2
    pe = peclet(prob, m)
    scheme = CENTRAL if pe < 1.0 else UPWIND
    if scheme == UPWIND:
        warnings.warn(f"mesh Peclet number {pe:.3g} >= 1 at m={m}; using first-order upwinding",
                      stacklevel=2)

    mesh = np.linspace(prob.x1, prob.x2, m + 1)
    mesh[-1] = prob.x2
    h = prob.length / m
    xi = mesh[1:-1]
    b, c, f = prob.b_fn(xi), prob.c_fn(xi), prob.f_fn(xi)
    eps = prob.eps

    # rows scaled by h^2
    lower = np.full(m - 1, -eps)
    diag = 2.0 * eps + h * h * c
    upper = np.full(m - 1, -eps)
    if scheme == CENTRAL:
        lower -= 0.5 * h * b
        upper += 0.5 * h * b
    else:
        pos = b > 0
        lower -= np.where(pos, h * b, 0.0)
        diag += np.where(pos, h * b, -h * b)
        upper += np.where(pos, 0.0, h * b)
    rhs = h * h * f
    rhs = rhs.astype(float)
    rhs[0] -= lower[0] * prob.p
    rhs[-1] -= upper[-1] * prob.q

    ab = np.zeros((3, m - 1))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        y = solve_banded((1, 1), ab, rhs)
    except (LinAlgError, ValueError) as exc:
        raise FdError(f"singular finite-difference system: {exc}") from exc
    if not np.all(np.isfinite(y)):
        raise FdError("finite-difference solution is not finite")

    ay = diag * y
    ay[1:] += lower[1:] * y[:-1]
    ay[:-1] += upper[:-1] * y[1:]
    res = float(np.max(np.abs(ay - rhs))) if m > 1 else 0.0
    values = np.concatenate([[prob.p], y, [prob.q]])
    return FdSolution(mesh, values, scheme, pe, res)


def interpolate(sol: FdSolution, x) -> np.ndarray:
    """Four-point Lagrange interpolation of the nodal values."""
    x = np.asarray(x, dtype=float)
    x0, x1 = sol.mesh[0], sol.mesh[-1]
    tol = 1e-12 * (x1 - x0)
    if np.any(x < x0 - tol) or np.any(x > x1 + tol):
        raise ValueError(f"x outside [{x0}, {x1}]")
    m = sol.m
    s = (np.clip(x, x0, x1) - x0) / sol.h
    cell = np.clip(np.floor(s).astype(int), 0, m - 1)
    start = np.clip(cell - 1, 0, m - 3)
    t = s - start
    out = np.zeros_like(s)
    for j in range(4):
        w = np.ones_like(s)
        for k in range(4):
            if k != j:
                w *= (t - k) / (j - k)
        out += w * sol.values[start + j]
    on_node = (s == np.round(s))
    if np.any(on_node):
        out = np.where(on_node, sol.values[np.clip(np.round(s).astype(int), 0, m)], out)
    return out


def evaluate(sol: FdSolution | ExactSolution, x):
    return sol(x)


def reference_error_estimate(prob: Problem, sol: FdSolution) -> float:
    """Sup-norm gap between ``sol`` and the solution on a mesh twice as fine."""
    fine = fd_solve(prob, 2 * sol.m, auto_refine=False)
    return float(np.max(np.abs(fine.values[::2] - sol.values)))
