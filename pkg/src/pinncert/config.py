"""Run configuration: ``[section]`` headers with ``key = value`` lines.

Example::

    [problem]
    example = "example51"
    eps = 1

    [params]
    k = 7
    lambda = 7

    [train]
    epochs = 500
    n = 256

Expressions and names may be quoted.  Unknown sections or keys are
rejected and reported as ``section.key``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .expr import ExprError, parse
from .problem import REGISTRY, ExactSolution, InvalidProblemError, Problem, registry_get
from .train import TrainConfig
from .trial import KINDS, PINN2

OUTPUT_ENV = "PINNCERT_OUTPUT_DIR"
DEFAULT_OUTPUT = "pinncert-out"


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCHEMA = {
    "problem": {"example": str, "x1": float, "x2": float, "eps": float, "b": str, "c": str,
                "f": str, "p": float, "q": float, "exact": str},
    "trial": {"kind": str, "hidden_layers": int, "width": int},
    "train": {"epochs": int, "steps_per_epoch": int, "n": int, "resample": _bool, "seed": int,
              "lr": float, "boundary_weight": float},
    "sweep": {"parameter": str, "values": str},
    "output": {"directory": str, "emit_svg": _bool},
}
FREE_SECTIONS = ("params",)
EXPLICIT_REQUIRED = ("x1", "x2", "eps", "b", "c", "f", "p", "q")


@dataclass
class Config:
    problem: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    kind: str = PINN2
    hidden_layers: int = 2
    width: int = 32
    train: TrainConfig = field(default_factory=TrainConfig)
    n: int = 256
    resample: bool = False
    boundary_weight: float = 1.0
    sweep_parameter: str | None = None
    sweep_values: str | None = None
    output_dir: str = field(default_factory=lambda: os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))
    emit_svg: bool = True

    def set(self, section: str, key: str, value) -> None:
        """Apply one typed ``section.key`` value."""
        if section == "problem":
            self.problem[key] = value
        elif section == "params":
            self.params[key] = value
        elif section == "trial":
            setattr(self, key, value)
        elif section == "train":
            if key in {f.name for f in fields(TrainConfig)}:
                self.train = replace(self.train, **{key: value})
            else:
                setattr(self, key, value)
        elif section == "sweep":
            setattr(self, f"sweep_{key}", value)
        elif section == "output":
            setattr(self, "output_dir" if key == "directory" else key, value)
        else:
            raise KeyError(section)

    def build_problem(self) -> Problem:
        return problem_from_section(self.problem, self.params)


def _unquote(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def parse_config(text: str, source: str = "<config>") -> Config:
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from exc
    cfg = Config()
    problems = []
    for section in cp.sections():
        if section in FREE_SECTIONS:
            for key, raw in cp.items(section):
                try:
                    cfg.set(section, key, float(_unquote(raw)))
                except ValueError:
                    problems.append(f"{section}.{key}: expected a number, got {raw!r}")
            continue
        if section not in SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            conv = SCHEMA[section].get(key)
            if conv is None:
                problems.append(f"unknown key {section}.{key}")
                continue
            try:
                cfg.set(section, key, conv(_unquote(raw)))
            except ValueError as exc:
                problems.append(f"{section}.{key}: {exc}")
    if cfg.kind not in KINDS:
        problems.append(f"trial.kind: must be one of {', '.join(KINDS)}, got {cfg.kind!r}")
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_config(text, str(path))


def problem_from_section(section: dict, params: dict) -> Problem:
    """Registry example (``problem.example``) or an explicit problem."""
    section = dict(section)
    if "example" in section:
        extra = set(section) - {"example", "eps"}
        if extra:
            raise ConfigError([f"problem.{k}: not allowed together with problem.example" for k in sorted(extra)])
        merged = dict(params)
        if "eps" in section:
            merged["eps"] = section["eps"]
        try:
            return registry_get(section["example"], merged)
        except InvalidProblemError as exc:
            raise ConfigError([f"problem.example: {exc}"]) from exc
    missing = [f"problem.{k}" for k in EXPLICIT_REQUIRED if k not in section]
    if missing:
        raise ConfigError([f"missing required key {m}" for m in missing])
    names = set(params) | {"eps"}
    errors, exprs = [], {}
    for key in ("b", "c", "f", "exact"):
        if key in section:
            try:
                exprs[key] = parse(section[key], names)
            except ExprError as exc:
                errors.append(f"problem.{key}: {exc}")
    if errors:
        raise ConfigError(errors)
    exact = None
    if "exact" in exprs:
        exact = ExactSolution("custom", exprs["exact"], {**params, "eps": section["eps"]})
    try:
        return Problem(section["x1"], section["x2"], section["eps"], exprs["b"], exprs["c"],
                       exprs["f"], section["p"], section["q"], dict(params), exact)
    except InvalidProblemError as exc:
        raise ConfigError([f"problem: {exc}"]) from exc


def problem_to_config(prob: Problem) -> str:
    """Config text that :func:`parse_config` reads back to an equivalent problem."""
    lines = ["[problem]"]
    if prob.name is not None:
        lines.append(f'example = "{prob.name}"')
        if "eps" in REGISTRY[prob.name][1]:
            lines.append(f"eps = {prob.eps!r}")
    else:
        lines += [f"x1 = {prob.x1!r}", f"x2 = {prob.x2!r}", f"eps = {prob.eps!r}",
                  f'b = "{prob.b}"', f'c = "{prob.c}"', f'f = "{prob.f}"',
                  f"p = {prob.p!r}", f"q = {prob.q!r}"]
        if prob.exact is not None:
            lines.append(f'exact = "{prob.exact.formula}"')
    if prob.params:
        lines += ["", "[params]"] + [f"{k} = {v!r}" for k, v in sorted(prob.params.items())]
    return "\n".join(lines) + "\n"
