"""Boundary value problems ``-eps y'' + b y' + c y = f`` on ``(x1, x2)``.

Also hosts the registry of worked examples with closed-form solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping

import numpy as np

from .expr import Expr, ExprError, diff, parse
from .quad import grid_minimum

VALIDATION_GRID = 1001

ENERGY = "energy"
WEIGHTED = "weighted"
PLAIN = "plain"
FAMILIES = (ENERGY, WEIGHTED, PLAIN)


class InvalidProblemError(ValueError):
    pass


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution ``formula(x)`` with its own parameter bindings."""

    tag: str
    formula: Expr
    params: Mapping[str, float] = field(default_factory=dict)

    @cached_property
    def first(self) -> Expr:
        return diff(self.formula)

    @cached_property
    def second(self) -> Expr:
        return diff(self.first)

    def __call__(self, x):
        return self.formula.eval(x, self.params)

    def jet(self, x):
        """Value, first and second derivative at ``x``."""
        return (self.formula.eval(x, self.params), self.first.eval(x, self.params),
                self.second.eval(x, self.params))


@dataclass(frozen=True)
class Problem:
    x1: float
    x2: float
    eps: float
    b: Expr
    c: Expr
    f: Expr
    p: float
    q: float
    params: Mapping[str, float] = field(default_factory=dict)
    exact: ExactSolution | None = None
    name: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2) and self.x1 < self.x2):
            raise InvalidProblemError(f"need x1 < x2, got ({self.x1}, {self.x2})")
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise InvalidProblemError(f"eps must be positive, got {self.eps}")
        free = (self.b.params() | self.c.params() | self.f.params()) - set(self.bindings)
        if free:
            raise InvalidProblemError(f"unbound parameters: {', '.join(sorted(free))}")

    @property
    def bindings(self) -> dict[str, float]:
        return {**self.params, "eps": self.eps}

    @property
    def length(self) -> float:
        return self.x2 - self.x1

    @cached_property
    def db(self) -> Expr:
        return diff(self.b)

    def b_fn(self, x):
        return self.b.eval(x, self.bindings)

    def c_fn(self, x):
        return self.c.eval(x, self.bindings)

    def f_fn(self, x):
        return self.f.eval(x, self.bindings)

    def db_fn(self, x):
        return self.db.eval(x, self.bindings)

    def operator(self, x, value, first, second):
        """``L[w](x) = -eps w'' + b w' + c w`` from the jet of ``w`` at ``x``."""
        return -self.eps * second + self.b_fn(x) * first + self.c_fn(x) * value

    def boundary_line(self, x):
        """Affine interpolant with ``l(x1) = p`` and ``l(x2) = q``."""
        t = (np.asarray(x, dtype=float) - self.x1) / self.length
        return self.p * (1.0 - t) + self.q * t

    @property
    def boundary_slope(self) -> float:
        return (self.q - self.p) / self.length

    def homogeneous(self) -> Problem:
        """Same operator and source with ``p = q = 0`` (no exact solution)."""
        return replace(self, p=0.0, q=0.0, exact=None, name=None)

    def with_param(self, name: str, value: float) -> Problem:
        """Copy with one parameter (or ``eps``) changed.

        Registry problems are rebuilt so the exact solution follows.
        """
        params = dict(self.params)
        eps = self.eps
        if name == "eps":
            eps = float(value)
        else:
            params[name] = float(value)
        if self.name in REGISTRY:
            return registry_get(self.name, {**params, "eps": eps})
        if name != "eps" and name not in (self.b.params() | self.c.params() | self.f.params()):
            raise InvalidProblemError(f"problem has no parameter {name!r}")
        return replace(self, eps=eps, params=params, exact=None)


@dataclass(frozen=True)
class ValidationReport:
    min_c: float
    gamma: float
    lam: float
    families: tuple[str, ...]
    grid_size: int

    def admits(self, family: str) -> bool:
        return family in self.families


def validate(prob: Problem, grid_size: int = VALIDATION_GRID) -> ValidationReport:
    """Grid-check the hypotheses of each certificate family.

    ``gamma`` is the minimum of ``-b'/2 + c`` and ``lam`` the minimum of
    ``c``; the plain family needs ``gamma > 0`` and the weighted one
    ``lam > 0``.  All families need ``c >= 0``.
    """
    try:
        min_c, _ = grid_minimum(prob.c_fn, prob.x1, prob.x2, n=grid_size)
        gamma, _ = grid_minimum(lambda x: -0.5 * prob.db_fn(x) + prob.c_fn(x), prob.x1, prob.x2, n=grid_size)
        xs = np.linspace(prob.x1, prob.x2, grid_size)
        for label, fn in (("b", prob.b_fn), ("f", prob.f_fn)):
            if not np.all(np.isfinite(fn(xs))):
                raise InvalidProblemError(f"coefficient {label} is not finite on the validation grid")
    except ExprError as exc:
        raise InvalidProblemError(str(exc)) from exc
    except ArithmeticError as exc:
        raise InvalidProblemError(f"coefficient not finite on the validation grid: {exc}") from exc
    families = []
    if min_c >= 0:
        families.append(ENERGY)
        if min_c > 0:
            families.append(WEIGHTED)
        if gamma > 0:
            families.append(PLAIN)
    return ValidationReport(min_c, gamma, min_c, tuple(families), grid_size)


# -- registry ----------------------------------------------------------------


def _example36(params):
    return Problem(
        x1=0.0, x2=1.0, eps=1.0,
        b=parse("x"), c=parse("10"),
        f=parse("((4+10)*x - 10*x^2 - x^3)*exp(x)"),
        p=0.0, q=0.0, params={},
        exact=ExactSolution("example36", parse("x*(1-x)*exp(x)")),
        name="example36",
    )


def _example41(params):
    eps, lam = params["eps"], params["lambda"]
    s = math.sqrt(1.0 / eps**2 + lam / eps)
    r1, r2 = 1.0 / eps + s, 1.0 / eps - s
    # closed form divided through by exp(r1) so that small eps does not overflow
    formula = parse("(exp(r1*(x-1)) - exp(r2*x - r1))/(1 - exp(r2 - r1))", {"r1", "r2"})
    return Problem(
        x1=0.0, x2=1.0, eps=eps,
        b=parse("2"), c=parse("lambda", {"lambda"}), f=parse("0"),
        p=0.0, q=1.0, params={"lambda": lam},
        exact=ExactSolution("example41", formula, {"r1": r1, "r2": r2}),
        name="example41",
    )


_KL = {"k", "lambda", "eps"}


def _example51(params):
    return Problem(
        x1=0.0, x2=1.0, eps=params["eps"],
        b=parse("-k*x", _KL), c=parse("lambda", _KL),
        f=parse("(k*x^3 + (k-lambda+eps)*x^2 + (3*eps-k+lambda)*x)*exp(x)"
                " + lambda*x^2 - 2*k*x^2 - 2*eps", _KL),
        p=0.0, q=1.0, params={"k": params["k"], "lambda": params["lambda"]},
        exact=ExactSolution("example51", parse("x*(1-x)*exp(x) + x^2")),
        name="example51",
    )


def _example52(params):
    return Problem(
        x1=0.0, x2=1.0, eps=params["eps"],
        b=parse("-k*x", _KL), c=parse("lambda", _KL),
        f=parse("(eps*pi^2 + pi*k*x + lambda)*sin(pi*x)"
                " + (eps*pi^2 - pi*k*x + lambda)*cos(pi*x)", _KL),
        p=1.0, q=-1.0, params={"k": params["k"], "lambda": params["lambda"]},
        exact=ExactSolution("example52", parse("sin(pi*x) + cos(pi*x)")),
        name="example52",
    )


REGISTRY = {
    "example36": (_example36, {}),
    "example41": (_example41, {"eps": 1.0, "lambda": 1.0}),
    "example51": (_example51, {"eps": 1.0, "k": 7.0, "lambda": 7.0}),
    "example52": (_example52, {"eps": 1.0, "k": 7.0, "lambda": 7.0}),
}

DESCRIPTIONS = {
    "example36": "eps=1, b=x, c=10, y=x(1-x)e^x, p=q=0",
    "example41": "b=2, c=lambda, f=0, p=0, q=1 (boundary layer at x=1 for small eps)",
    "example51": "b=-k x, c=lambda, y=x(1-x)e^x + x^2, p=0, q=1",
    "example52": "b=-k x, c=lambda, y=sin(pi x) + cos(pi x), p=1, q=-1",
}


def registry_names() -> list[str]:
    return sorted(REGISTRY)


def registry_get(name: str, params: Mapping[str, float] | None = None) -> Problem:
    """Build a registry problem; ``params`` override the defaults."""
    try:
        build, defaults = REGISTRY[name]
    except KeyError:
        raise InvalidProblemError(f"unknown example {name!r}; known: {', '.join(registry_names())}") from None
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidProblemError(f"{name} takes no parameter(s) {', '.join(sorted(unknown))}")
    merged = {k: float(v) for k, v in {**defaults, **params}.items()}
    if merged.get("eps", 1.0) <= 0:
        raise InvalidProblemError(f"eps must be positive, got {merged['eps']}")
    return build(merged)
