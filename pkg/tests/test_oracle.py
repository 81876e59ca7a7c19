import math
import warnings

import numpy as np
import pytest

from pinncert.expr import parse
from pinncert.oracle import CENTRAL, UPWIND, fd_solve, interpolate, peclet, reference_error_estimate
from pinncert.problem import Problem, registry_get


def test_example41_nodal_accuracy():
    prob = registry_get("example41", {"eps": 1, "lambda": 0})
    sol = fd_solve(prob, 1024)
    assert sol.scheme == CENTRAL
    assert np.max(np.abs(sol.values - prob.exact(sol.mesh))) <= 5e-6


def test_linear_solution_is_exact():
    prob = Problem(0.0, 1.0, 1.0, parse("0"), parse("0"), parse("0"), 0.0, 1.0, {})
    sol = fd_solve(prob, 64)
    assert np.allclose(sol.values, sol.mesh, rtol=0, atol=1e-14)


def test_second_order_convergence(ex51):
    errs = [np.max(np.abs(fd_solve(ex51, m).values - ex51.exact(fd_solve(ex51, m).mesh)))
            for m in (128, 256, 512)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_boundary_and_residual():
    prob = registry_get("example52", {"eps": 0.05})
    sol = fd_solve(prob, 256)
    assert sol.values[0] == prob.p and sol.values[-1] == prob.q
    assert sol.residual <= 1e-10
    assert sol.peclet < 1


def test_mesh_refines_for_small_eps():
    prob = registry_get("example41", {"eps": 1e-3, "lambda": 1})
    sol = fd_solve(prob, 64)
    assert sol.m >= 1024 and sol.scheme == CENTRAL
    assert peclet(prob, sol.m) < 1


def test_upwind_fallback_warns():
    prob = registry_get("example41", {"eps": 1e-3, "lambda": 1})
    with pytest.warns(UserWarning):
        sol = fd_solve(prob, 64, auto_refine=False)
    assert sol.scheme == UPWIND
    assert np.all(np.isfinite(sol.values))


def test_interpolation():
    prob = registry_get("example41", {"eps": 1, "lambda": 10})
    sol = fd_solve(prob, 2048)
    assert interpolate(sol, sol.mesh[17]) == sol.values[17]
    x = np.linspace(0.0013, 0.9991, 101)
    assert np.max(np.abs(sol(x) - prob.exact(x))) <= 1e-5
    with pytest.raises(ValueError):
        sol(1.5)


def test_exact_value():
    assert registry_get("example52").exact(0.25) == pytest.approx(math.sqrt(2), rel=1e-15)


def test_error_estimate_and_csv(tmp_path, ex51):
    sol = fd_solve(ex51, 256)
    est = reference_error_estimate(ex51, sol)
    true = np.max(np.abs(sol.values - ex51.exact(sol.mesh)))
    # Richardson: coarse-minus-fine is about 3/4 of the coarse error
    assert 0.5 * true <= est <= 1.5 * true
    sol.dump_csv(tmp_path / "fd.csv")
    lines = (tmp_path / "fd.csv").read_text().splitlines()
    assert lines[0] == "x,y" and len(lines) == sol.m + 2


def test_small_mesh_rejected(ex51):
    with pytest.raises(ValueError):
        fd_solve(ex51, 4)
