import math

import pytest

from plstab.density import build
from plstab.errors import BaseNotEven, EpsOutOfRange, UnknownSuite
from plstab.experiments import (
    SWEEP_COLUMNS,
    fit_exponent,
    make_example,
    perturbed_pair,
    rows_to_csv,
    run_suite,
    sweep,
)
from plstab.midpoint import dominates_midpoint, pl_epsilon

GRID = [0.02, 0.01, 0.005, 0.0025]


def test_scaled_example_deficit_is_eps():
    t = make_example("exa2", 0.1)
    assert pl_epsilon(t) == pytest.approx(0.1, abs=1e-15)


def test_ramp_example_masses():
    t = make_example("exa3", 0.05)
    assert (t.f.mass, t.g.mass, t.m.mass) == pytest.approx((1.0, 1.0, 1.05), abs=1e-14)
    assert dominates_midpoint(t.m, t.f, t.g)


def test_example_guards():
    with pytest.raises(EpsOutOfRange):
        make_example("exa3", 0.6)
    with pytest.raises(EpsOutOfRange):
        make_example("exa2", 0.0)
    with pytest.raises(BaseNotEven):
        make_example("exa2", 0.1, build([0.0], [0.0], 1.0, -2.0))
    even = build([-1.0, 1.0], [0.0, 0.0], 3.0, -3.0)
    assert pl_epsilon(make_example("exa2", 0.1, even)) == pytest.approx(0.1, abs=1e-14)


def test_fit_recovers_power_law():
    fit = fit_exponent([1, 2, 4, 8], [3 * x**2.5 for x in (1, 2, 4, 8)])
    assert fit.slope == pytest.approx(2.5) and fit.intercept == pytest.approx(math.log(3))
    assert fit.r_squared == pytest.approx(1.0)


def test_ramp_sweep_exponents():
    rows, fits = sweep("exa3", GRID)
    assert fits["quadratic_cost"].slope == pytest.approx(3.0, abs=0.15)
    assert fits["deficit_integral"].slope == pytest.approx(1.0, abs=0.1)
    for r in rows:
        assert r.l1 == pytest.approx(4 * r.eps / math.e, abs=1e-9)


def test_scaled_sweep_exponents():
    _, fits = sweep("exa2", GRID)
    assert fits["quadratic_cost"].slope == pytest.approx(2.0, abs=0.05)


def test_sweep_csv_is_reproducible():
    a = rows_to_csv(sweep("exa3", GRID)[0])
    b = rows_to_csv(sweep("exa3", GRID)[0])
    assert a == b
    assert a.splitlines()[0] == ",".join(SWEEP_COLUMNS) == "eps,pl_epsilon,deficit_integral,quadratic_cost,l1,bound_ratio"
    assert len(a.splitlines()) == 1 + len(GRID)


def test_sweep_needs_three_points():
    with pytest.raises(ValueError):
        sweep("exa3", [0.01, 0.02])


@pytest.mark.parametrize("name", ["prop21", "prop22", "cor23", "bobkov", "pl", "hull", "transport"])
def test_suites_pass_small(name):
    rep = run_suite(name, 15, 3)
    assert rep.ok and rep.passed == 15 and rep.worst_margin >= -1e-9


def test_suite_is_deterministic():
    a, b = run_suite("prop22", 10, 5), run_suite("prop22", 10, 5)
    assert a.to_dict() == b.to_dict()


def test_unknown_suite():
    with pytest.raises(UnknownSuite):
        run_suite("nope", 1, 0)


def test_perturbed_pairs_are_centred():
    from plstab.density import stats

    f, g = perturbed_pair(1, 2)
    assert abs(stats(f).mean) < 1e-12 and abs(stats(g).mean) < 1e-12
