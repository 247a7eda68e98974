import math
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from plstab.density import affine_image, build, random_density, stats
from plstab.errors import NonpositiveDerivative
from plstab.experiments import make_example
from plstab.transport import (
    align,
    deficit_integrand,
    pl_deficit_integral,
    quadratic_cost,
    transport_energy_probe,
    transport_map,
)

densities = st.builds(random_density, st.integers(0, 10**6), st.integers(1, 6))


def test_deficit_integrand_values():
    assert deficit_integrand(1.0) == 0.0
    assert deficit_integrand(4.0) == pytest.approx(0.25, abs=1e-16)
    assert deficit_integrand(4.0, 0.3) == pytest.approx((0.3 + 0.7 * 4.0) / 4.0**0.7 - 1.0, rel=1e-14)
    with pytest.raises(NonpositiveDerivative):
        deficit_integrand(0.0)


@given(st.integers(-40, 40))
def test_deficit_integrand_symmetric_under_inversion(k):
    # powers of two have exact reciprocals
    assert deficit_integrand(math.ldexp(1.0, k)) == pytest.approx(deficit_integrand(math.ldexp(1.0, -k)), rel=1e-15)


@given(st.floats(1e-6, 1e6))
def test_deficit_integrand_matches_high_precision(t):
    import mpmath

    with mpmath.workdps(40):
        r = mpmath.sqrt(mpmath.mpf(t))
        ref = float((1 - r) ** 2 / (2 * r))
    assert deficit_integrand(t) == pytest.approx(ref, rel=1e-14, abs=1e-300)


@given(st.floats(1e-3, 1e3), st.floats(0.05, 0.95))
def test_deficit_integrand_nonnegative(t, alpha):
    assert deficit_integrand(t, alpha) >= -1e-15


def test_laplace_map_is_identity(laplace):
    tm = transport_map(laplace, laplace)
    for x in (-30.0, -1.0, 0.0, 0.5, 40.0):
        assert tm.T(x) == pytest.approx(x, abs=1e-12)
    assert quadratic_cost(laplace, laplace) == pytest.approx(0.0, abs=1e-12)
    assert pl_deficit_integral(laplace, laplace) == pytest.approx(0.0, abs=1e-12)


def test_uniform_to_uniform_map(uniform01):
    u2 = build([0.0, 2.0], [0.0, 0.0], normalize=True)
    tm = transport_map(uniform01, u2)
    assert tm.T(0.3) == pytest.approx(0.6, abs=1e-15)
    assert tm.Tprime(0.3) == pytest.approx(2.0, abs=1e-15)
    assert tm.S(1.0) == pytest.approx(0.5, abs=1e-15)
    # int_0^1 (2x - x)**2 dx
    assert quadratic_cost(uniform01, u2) == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert pl_deficit_integral(uniform01, u2) == pytest.approx(deficit_integrand(2.0), abs=1e-10)


def test_exponential_to_laplace_closed_forms():
    """Exp(1) pushed to Laplace: the map is x - ln 2 beyond ln 2 and log-shaped below.

    Closed forms (checked against arbitrary-precision quadrature):
    deficit = pi/4 - 1/2.
    """
    expo = build([0.0], [0.0], None, -1.0, normalize=True)
    lap = build([0.0], [-math.log(2.0)], 1.0, -1.0, normalize=True)
    assert pl_deficit_integral(expo, lap) == pytest.approx(math.pi / 4 - 0.5, abs=1e-10)
    assert pl_deficit_integral(lap, expo) == pytest.approx(math.pi / 4 - 0.5, abs=1e-10)
    assert quadratic_cost(expo, lap) == pytest.approx(1.4492245859500844, abs=1e-10)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_scaled_pair_cost_is_closed_form(laplace, eps):
    t = make_example("exa2", eps)
    expected = eps**2 / (1 + eps) ** 2 * 2.0
    assert quadratic_cost(t.f, t.g) == pytest.approx(expected, abs=1e-12)
    assert pl_deficit_integral(t.f, t.g) == pytest.approx(deficit_integrand(1 / (1 + eps)), abs=1e-12)


@pytest.mark.parametrize("eps", [0.02, 0.01, 0.005])
def test_ramp_example_closed_forms(eps):
    t = make_example("exa3", eps)
    assert quadratic_cost(t.f, t.g) == pytest.approx(5.0 / 3.0 * eps**3, abs=1e-10)
    assert pl_deficit_integral(t.f, t.g) == pytest.approx(2.0 / 3.0 * eps, abs=1e-10)


def test_cost_window_splits_additively():
    f = random_density(3, 4)
    g = random_density(8, 3)
    w = stats(f).median
    whole = quadratic_cost(f, g, 1e-10)
    parts = quadratic_cost(f, g, 1e-10, hi=w) + quadratic_cost(f, g, 1e-10, lo=w)
    assert parts == pytest.approx(whole, abs=3e-10)


@given(densities, st.floats(-3, 3))
def test_translation_cost_is_shift_squared(d, b):
    assert quadratic_cost(d, d.translate(b), 1e-10) == pytest.approx(b * b, abs=1e-9)
    assert pl_deficit_integral(d, d.translate(b), 1e-10) == pytest.approx(0.0, abs=1e-9)


@given(densities, st.floats(0.3, 3.0))
def test_scaling_deficit_is_constant_integrand(d, s):
    g = affine_image(d, s, 0.0)
    assert pl_deficit_integral(d, g, 1e-10) == pytest.approx(deficit_integrand(s), abs=1e-9)


@given(densities, densities, st.lists(st.floats(0.001, 0.999), min_size=2, max_size=6))
def test_map_pushes_forward_and_is_monotone(f, g, levels):
    tm = transport_map(f, g)
    xs = sorted(f.quantile(p) for p in levels)
    ys = [tm.T(x) for x in xs]
    assert all(b >= a for a, b in zip(ys, ys[1:]))
    for x, y in zip(xs, ys):
        assert g.cdf(y) == pytest.approx(f.cdf(x), abs=1e-11)
        assert tm.S(y) == pytest.approx(x, abs=1e-8 * (1 + abs(x)))


@given(densities, densities)
def test_deficit_nonnegative(f, g):
    assert pl_deficit_integral(f, g, 1e-8) >= 0.0


def test_ramp_example_energy_diverges():
    t = make_example("exa3", 0.01)
    probe = transport_energy_probe(t.f, t.g)
    assert probe.divergent
    assert all(b > a for a, b in zip(probe.estimates, probe.estimates[1:]))


def test_scaled_pair_energy_converges():
    t = make_example("exa2", 0.1)
    assert not transport_energy_probe(t.f, t.g).divergent


def test_align_recovers_exact_copy(laplace):
    m = laplace.translate(0.7).rescale(2.5)
    al = align(laplace, m)
    # laplace(t) = a m(t + b) with a = 1/2.5 and b = 0.7
    assert al.a == pytest.approx(0.4, rel=1e-5)
    assert al.b == pytest.approx(0.7, abs=1e-5)
    assert al.residual < 1e-5


def test_align_identity_is_exact(laplace):
    al = align(laplace, laplace)
    assert (al.a, al.b, al.residual) == (1.0, 0.0, 0.0)


def test_ramp_example_runtime():
    start = time.perf_counter()
    for eps in (0.02, 0.01, 0.005, 0.0025):
        t = make_example("exa3", eps)
        quadratic_cost(t.f, t.g)
        pl_deficit_integral(t.f, t.g)
    assert time.perf_counter() - start < 10.0
