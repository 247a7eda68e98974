import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import binned_sup, brute_sup_convolution
from plstab.density import LogConcaveFunction, affine_image, build, random_density
from plstab.errors import DominationViolated
from plstab.midpoint import (
    HypographPolygon,
    PLTriple,
    dominates_midpoint,
    midpoint_density,
    pl_epsilon,
    sup_convolution,
)
from plstab.transport import transport_map

densities = st.builds(random_density, st.integers(0, 10**6), st.integers(1, 6))
alphas = st.floats(0.1, 0.9)


def test_sup_convolution_of_uniforms():
    u1 = build([0.0, 1.0], [0.0, 0.0], normalize=True)
    u2 = build([0.0, 2.0], [0.0, 0.0], normalize=True)
    m = sup_convolution(u1, u2)
    assert m.knots == pytest.approx((0.0, 1.5))
    assert m.logvals == pytest.approx((-0.5 * math.log(2.0),) * 2)
    assert m.mass == pytest.approx(1.5 / math.sqrt(2.0), rel=1e-14)


def test_sup_convolution_tails_are_the_shallower_ones():
    f = build([0.0], [0.0], 2.0, -0.5)
    g = build([0.0], [0.0], 0.7, -3.0)
    m = sup_convolution(f, g)
    assert m.left_tail_slope == 0.7
    assert m.right_tail_slope == -0.5


def test_ramp_example_midpoint_envelope():
    eps = 0.05
    f = build([-0.5, 0.5], [0.0, 0.0], normalize=True)
    g = build([-0.5 + eps, 0.5 - eps], [0.0, 0.0], 1 / eps, -1 / eps, normalize=True)
    m = sup_convolution(f, g)
    assert m.knots == pytest.approx((-0.5 + eps / 2, 0.5 - eps / 2), abs=1e-15)
    assert m.mass == pytest.approx(1 + eps, abs=1e-14)


@given(densities, alphas)
def test_self_convolution_is_identity(d, alpha):
    m = sup_convolution(d, d, alpha)
    assert m.knots == pytest.approx(d.knots, abs=1e-12)
    assert m.logvals == pytest.approx(d.logvals, abs=1e-12)
    assert (m.left_tail_slope, m.right_tail_slope) == (d.left_tail_slope, d.right_tail_slope)


@given(densities, densities, alphas)
def test_prekopa_leindler_on_envelopes(f, g, alpha):
    m = sup_convolution(f, g, alpha)
    assert dominates_midpoint(m, f, g, alpha)
    assert pl_epsilon(PLTriple(m, f, g, alpha)) >= -1e-12


@given(densities, st.floats(-2, 2), st.floats(0.2, 4.0))
def test_translates_give_equality(d, shift, scale):
    g = d.translate(shift).rescale(scale)
    f = d.rescale(scale)
    m = sup_convolution(f, g)
    assert pl_epsilon(PLTriple(m, f, g)) == pytest.approx(0.0, abs=1e-12)


@given(densities, densities)
def test_sup_convolution_is_commutative_at_half(f, g):
    a, b = sup_convolution(f, g), sup_convolution(g, f)
    assert a.knots == pytest.approx(b.knots, abs=1e-12)
    assert a.logvals == pytest.approx(b.logvals, abs=1e-12)


def test_domination_failure_is_reported():
    f = build([0.0, 1.0], [0.0, 0.0], normalize=True)
    small = build([0.0, 1.0], [-0.1, -0.1])
    assert not dominates_midpoint(small, f, f)
    with pytest.raises(DominationViolated):
        pl_epsilon(PLTriple(small, f, f))


def test_steeper_tail_fails_domination(laplace):
    steep = build([0.0], [0.0], 2.0, -2.0)
    assert not dominates_midpoint(steep, laplace, laplace)


def test_polygon_support_function():
    poly = HypographPolygon.from_function(build([0.0, 1.0], [0.0, -1.0], None, -2.0))
    assert poly.support_value(0.0, 1.0) == 0.0
    assert poly.support_value(1.0, 1.0) == 0.0
    assert poly.support_value(3.0, 1.0) == math.inf
    assert isinstance(poly.to_function(), LogConcaveFunction)


@pytest.mark.parametrize(
    "f, g",
    [
        (build([0.0, 1.0], [0.0, -1.0]), build([-1.0, 0.5, 2.0], [-0.5, 0.3, -1.2])),
        (build([-0.5, 0.2, 1.0], [-1.0, 0.0, -0.4]), build([0.0, 1.5], [0.4, 0.0])),
    ],
)
def test_sup_convolution_matches_grid(f, g):
    window = (-1.0, 2.0)
    t, val, step = brute_sup_convolution(f, g, 0.5, window, n=1000)
    m = sup_convolution(f, g)
    exact = np.array([m.logpdf(x) for x in t])
    assert np.all(val <= exact + 1e-12)
    edges = np.linspace(m.knots[0], m.knots[-1], 80)
    centres = 0.5 * (edges[1:] + edges[:-1])
    brute = binned_sup(t, val, edges)
    lip = max(abs(s) for s in (*f.chord_slopes, *g.chord_slopes))
    gap = np.array([m.logpdf(c) for c in centres]) - brute
    assert np.all(gap <= lip * (edges[1] - edges[0] + 2 * step))


@given(densities, densities)
def test_midpoint_density_mass_at_least_one(f, g):
    h = midpoint_density(f, g, spacing=1e-2)
    assert h.mass >= 1.0 - 1e-6


def test_midpoint_density_reproduces_definition():
    f = random_density(5, 3)
    g = random_density(9, 4)
    h = midpoint_density(f, g, spacing=1e-3)
    tm = transport_map(f, g)
    for p in (0.1, 0.37, 0.5, 0.81):
        x = f.quantile(p)
        y = tm.T(x)
        assert h.logpdf(0.5 * (x + y)) == pytest.approx(0.5 * (f.logpdf(x) + g.logpdf(y)), abs=1e-4)


def test_midpoint_density_of_scaled_pair_has_exact_tails(laplace):
    g = affine_image(laplace, 0.5)
    h = midpoint_density(laplace, g)
    assert h.right_tail_slope == pytest.approx(2 * (-1.0) * (-2.0) / (-3.0))
