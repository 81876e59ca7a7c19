import math

import numpy as np
import pytest

from pinncert.certify import (CSV_COLUMNS, CertificateError, SweepConfig, constants,
                              records_to_csv, report, sweep)
from pinncert.expr import parse
from pinncert.net import init
from pinncert.problem import ENERGY, PLAIN, WEIGHTED, Problem, registry_get
from pinncert.sample import draw
from pinncert.train import TrainConfig
from pinncert.trial import PINN1, PINN2, AnalyticTrial, TrialFunction


def _problem(b, c, params=None, eps=1.0):
    names = set(params or {}) | {"eps"}
    return Problem(0.0, 1.0, eps, parse(b, names), parse(c, names), parse("1"), 0, 0, dict(params or {}))


def test_plain_bound_example51(ex51):
    certs = constants(ex51)
    assert certs[PLAIN].bound == pytest.approx(4 / 441, rel=1e-12)


@pytest.mark.parametrize("lam", [1.0, 3.0, 10.0])
def test_loose_weighted_bound(lam):
    cert = constants(_problem("2", "lambda", {"lambda": lam}), [WEIGHTED])[WEIGHTED]
    assert cert.constants["loose"] == pytest.approx(math.e**2 / lam**2, rel=1e-12)
    assert cert.constants["tight"] == pytest.approx(math.e**2 / lam**2, rel=1e-9)


def test_tight_weighted_bound_without_convection():
    cert = constants(_problem("0", "4"), [WEIGHTED])[WEIGHTED]
    assert cert.bound == 1 / 16
    assert cert.rho_min == cert.rho_max == 1.0


def test_energy_constants():
    cert = constants(_problem("2", "3"), [ENERGY])[ENERGY]
    amp = math.e**2
    assert cert.constants["K1"] == pytest.approx(amp, rel=1e-9)
    assert cert.constants["K2"] == pytest.approx(amp * (2 + 3) + 1, rel=1e-9)


@pytest.mark.parametrize("name", ["example36", "example41", "example51", "example52"])
@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_constants_positive_and_ordered(name, eps):
    prob = registry_get(name) if name == "example36" else registry_get(name, {"eps": eps})
    for fam, cert in constants(prob).items():
        assert all(v > 0 and math.isfinite(v) for k, v in cert.constants.items() if k != "K3")
        if fam == WEIGHTED:
            assert cert.constants["tight"] <= cert.constants["loose"] * (1 + 1e-12)


def test_inadmissible_family_raises():
    with pytest.raises(CertificateError):
        constants(_problem("2", "0"), [PLAIN])


def test_exact_trial_reports_zero(ex51):
    rep = report(ex51, AnalyticTrial(ex51.exact), draw(0, 128, (0, 1)))
    assert rep.error == 0.0 and rep.ratio == 0.0 and rep.integral_ratio == 0.0
    assert rep.loss <= 1e-20
    assert rep.ok


@pytest.mark.parametrize("lam", [1, 10, 100])
def test_untrained_networks_within_plain_bound(lam):
    prob = registry_get("example51", {"k": 7, "lambda": lam})
    s = draw(0, 128, (0, 1))
    bound = 4 / (7 + 2 * lam) ** 2
    for seed in range(50):
        rep = report(prob, TrialFunction.for_problem(PINN2, init(seed), prob), s, families=[PLAIN])
        assert rep.integral_ratio <= bound * (1 + 1e-6)
        assert rep.passed[PLAIN]


def test_pinn1_boundary_loss_and_restriction():
    prob = registry_get("example36")
    t = TrialFunction.for_problem(PINN1, init(0), prob)
    s = draw(0, 64, (0, 1))
    rep = report(prob, t, s)
    ends = t(np.array([0.0, 1.0]))
    assert rep.boundary_loss == pytest.approx(ends[0] ** 2 + ends[1] ** 2)
    assert rep.boundary_loss > 0
    assert list(rep.passed) == [ENERGY] and rep.ok
    with pytest.raises(CertificateError):
        report(prob, t, s, families=[PLAIN])


def test_fd_reference_matches_exact(ex51):
    stripped = Problem(ex51.x1, ex51.x2, ex51.eps, ex51.b, ex51.c, ex51.f, ex51.p, ex51.q, ex51.params)
    t = TrialFunction.for_problem(PINN2, init(2), ex51)
    s = draw(0, 256, (0, 1))
    a, b = report(ex51, t, s), report(stripped, t, s)
    assert b.reference == "fd"
    assert b.error == pytest.approx(a.error, rel=5e-3)
    assert b.ok


def test_sampled_and_integral_agree(ex51):
    hits = 0
    for seed in range(50):
        t = TrialFunction.for_problem(PINN2, init(seed), ex51)
        hits += report(ex51, t, draw(seed, 256, (0, 1))).agreement(k=5)
    assert hits / 50 >= 0.96


def test_bound_decreasing_along_lambda():
    bounds = [constants(registry_get("example51", {"k": 7, "lambda": lam}), [PLAIN])[PLAIN].bound
              for lam in np.geomspace(1, 100, 12)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))


def test_bound_constant_along_eps():
    for eps in (1, 0.5, 0.1, 0.01):
        prob = registry_get("example51", {"k": 10, "lambda": 15, "eps": eps})
        assert constants(prob, [PLAIN])[PLAIN].bound == pytest.approx(1 / 400, rel=1e-12)


def test_empty_sweep():
    assert sweep(registry_get("example51"), "lambda", []) == []


def test_short_sweep_csv(ex51):
    cfg = SweepConfig(TrainConfig(epochs=3, steps_per_epoch=1), n=32, hidden_layers=1, width=4)
    recs = sweep(ex51, "lambda", [1.0, 5.0], cfg)
    assert [r.param_value for r in recs] == [1.0, 5.0]
    assert all(r.failure is None and all(r.passed.values()) for r in recs)
    text = records_to_csv(recs)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    assert recs[1].bound_plain == pytest.approx(4 / 17**2)


def test_failed_point_recorded(ex51):
    cfg = SweepConfig(TrainConfig(epochs=1, steps_per_epoch=1), n=16, hidden_layers=1, width=2)
    (rec,) = sweep(ex51, "nosuch", [1.0], cfg)
    assert rec.failure is not None and math.isnan(rec.loss)
