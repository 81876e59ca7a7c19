"""A-posteriori error certificates for physics-informed network solutions of
1D convection-diffusion-reaction boundary value problems."""

from .certify import Certificate, Report, constants, report, sweep
from .expr import parse
from .net import Network, init
from .oracle import fd_solve
from .problem import Problem, registry_get, validate
from .sample import draw, mc_mean
from .train import LossSpec, TrainConfig, train
from .trial import PINN1, PINN2, AnalyticTrial, TrialFunction

__version__ = "0.1.0"

__all__ = [
    "Certificate", "Report", "constants", "report", "sweep", "parse", "Network", "init",
    "fd_solve", "Problem", "registry_get", "validate", "draw", "mc_mean", "LossSpec",
    "TrainConfig", "train", "PINN1", "PINN2", "AnalyticTrial", "TrialFunction",
]
