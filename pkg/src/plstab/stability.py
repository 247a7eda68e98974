"""Numerical verifiers for the quantitative inequalities of the stability theory.

Every check returns :class:`InequalityMargin` records (``margin = rhs - lhs``,
passing when ``margin >= -1e-9``) so suites can aggregate them uniformly.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .density import INF, PiecewiseLogLinear, affine_image, l1_distance, stats
from .errors import (
    DegenerateAtZ,
    EpsilonOutOfRange,
    HypothesisNotMet,
    NonintegrableTestFunction,
    ZeroMass,
)
from .midpoint import PLTriple, pl_epsilon
from .transport import DEFAULT_TOL, Alignment, align, pl_deficit_integral, quadratic_cost

log = logging.getLogger(__name__)

PASS_TOL = 1e-9
EXACT_TOL = 1e-9
LN2 = math.log(2.0)
MEDIAN_MEAN_CONST = 0.5 * (1.0 - LN2)  # ln sqrt(e/2)


@dataclass(frozen=True)
class InequalityMargin:
    label: str
    lhs: float
    rhs: float
    margin: float
    passed: bool

    @classmethod
    def of(cls, label: str, lhs: float, rhs: float) -> "InequalityMargin":
        margin = rhs - lhs
        return cls(label, float(lhs), float(rhs), float(margin), bool(margin >= -PASS_TOL))

    def to_dict(self) -> dict:
        return {"label": self.label, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, "pass": self.passed}


MARGIN_FIELDS = ("label", "lhs", "rhs", "margin", "pass")


def margins_to_csv(margins: Iterable[InequalityMargin]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=MARGIN_FIELDS, lineterminator="\n")
    writer.writeheader()
    for m in margins:
        row = m.to_dict()
        row["lhs"], row["rhs"], row["margin"] = (format(row[k], ".17g") for k in ("lhs", "rhs", "margin"))
        writer.writerow(row)
    return buf.getvalue()


def tail_mass(d: PiecewiseLogLinear, x: float) -> float:
    """The smaller of the two tail masses at ``x``."""
    return min(float(d.cdf(x)), float(d.sf(x)))


# -- height / median estimates ------------------------------------------------


def _reflect(d: PiecewiseLogLinear) -> PiecewiseLogLinear:
    """The density of ``-X``."""
    return d._replace(
        knots=tuple(-x for x in reversed(d.knots)),
        logvals=tuple(reversed(d.logvals)),
        left_tail_slope=None if d.right_tail_slope is None else -d.right_tail_slope,
        right_tail_slope=None if d.left_tail_slope is None else -d.left_tail_slope,
    )


def _right_tail_checks(d, w, hw, mu, x, out):
    """Checks that concern the mass to the right of ``x > w``."""
    hx = d.pdf(x)
    nu = d.sf(x)
    out.append(InequalityMargin.of("tail_mass_vs_height", nu, hx / (2.0 * hw)))
    if nu > 0:
        l2n = math.log(2.0 * nu)
        m1 = d.moment(1, w, lo=x)
        m2 = d.moment(2, w, lo=x)
        out.append(InequalityMargin.of("tail_first_moment", m1, nu / (2.0 * hw) * (1.0 - l2n)))
        out.append(InequalityMargin.of("tail_second_moment", m2, nu / (4.0 * hw * hw) * (l2n * l2n - 2.0 * l2n + 2.0)))
    else:
        log.debug("tail moment checks skipped at x=%g: empty tail", x)
    if 0.0 < nu <= 0.5 and hx > 0:
        # local log-Lipschitz window around x
        reach = nu * LN2 / hx
        for frac in (-1.0, -0.5, -0.25, 0.25, 0.5, 1.0):
            t = x + frac * reach
            ht = d.pdf(t)
            k = math.exp(hx * abs(t - x) / nu)
            out.append(InequalityMargin.of("local_window_lower", hx / k, ht))
            out.append(InequalityMargin.of("local_window_upper", ht, hx * k))
    if 0.0 < nu < 1.0 / 6.0:
        if x >= mu:
            a1 = d.moment(1, mu, lo=x)
        else:
            a1 = d.moment(1, mu, lo=mu) - d.moment(1, mu, lo=x, hi=mu)
        a2 = d.moment(2, mu, lo=x)
        ln_nu = math.log(nu)
        out.append(InequalityMargin.of("tail_abs_first_moment", a1, nu / (2.0 * hw) * (abs(ln_nu) + 2.0 - 2.0 * LN2)))
        out.append(InequalityMargin.of("tail_abs_second_moment", a2, 5.0 * nu / (4.0 * hw * hw) * ln_nu * ln_nu))


def check_hw(d: PiecewiseLogLinear, xs: Sequence[float]) -> list:
    """Height, median and tail-moment estimates for a log-concave density.

    The right-tail checks are evaluated at points ``x > w``; points left of
    the median are handled by reflecting the density.  The first-moment
    tail bounds use the constants ``nu / (2 h(w))`` and ``nu / (4 h(w)**2)``
    (attained by the one-sided exponential), and the absolute first moment
    about the mean carries the extra ``2 - 2 ln 2`` from the mean offset.
    """
    if not d.mass > 0:
        raise ZeroMass("density has zero mass")
    s = stats(d)
    w, hw, mu = s.median, s.median_height, s.mean
    out = [InequalityMargin.of("median_mean_gap", hw * abs(w - mu), MEDIAN_MEAN_CONST)]
    mirror = _reflect(d)
    for x in xs:
        x = float(x)
        hx = d.pdf(x)
        out.append(InequalityMargin.of("height_bound", hx, 2.0 * hw))
        gap = abs(x - w)
        if gap <= LN2 / (2.0 * hw):
            k = math.exp(2.0 * hw * gap)
            out.append(InequalityMargin.of("median_window_lower", hw / k, hx))
            out.append(InequalityMargin.of("median_window_upper", hx, hw * k))
        if x > w:
            _right_tail_checks(d, w, hw, mu, x, out)
        elif x < w:
            _right_tail_checks(mirror, -w, hw, -mu, -x, out)
    return out


# -- Poincare inequality --------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise linear function, extended linearly beyond the end knots."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise NonintegrableTestFunction("piecewise linear test function needs >= 2 matching knots and values")
        if any(not b > a for a, b in zip(self.knots, self.knots[1:])):
            raise NonintegrableTestFunction("knots must be strictly increasing")
        if not all(math.isfinite(v) for v in (*self.knots, *self.values)):
            raise NonintegrableTestFunction("knots and values must be finite")

    def pieces(self):
        """(lo, hi, Polynomial) triples covering the real line."""
        xs, ys = self.knots, self.values
        bounds = [-INF, *xs[1:-1], INF]
        out = []
        for i in range(len(xs) - 1):
            slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
            out.append((bounds[i], bounds[i + 1], np.polynomial.Polynomial([ys[i] - slope * xs[i], slope])))
        return out


TestFunction = Union[np.polynomial.Polynomial, PiecewiseLinear]


def _test_pieces(R) -> list:
    if isinstance(R, PiecewiseLinear):
        return R.pieces()
    if isinstance(R, np.polynomial.Polynomial):
        if R.degree() > 4:
            raise NonintegrableTestFunction(f"polynomial degree {R.degree()} exceeds 4")
        if not np.all(np.isfinite(R.coef)):
            raise NonintegrableTestFunction("polynomial coefficients must be finite")
        return [(-INF, INF, np.polynomial.Polynomial(R.convert().coef))]
    raise NonintegrableTestFunction(f"unsupported test function {type(R).__name__}")


def expectation(h: PiecewiseLogLinear, R: TestFunction) -> float:
    """``int R h`` for a polynomial or piecewise linear ``R``, in closed form."""
    return math.fsum(h.integrate_polynomial(p.coef, lo, hi) for lo, hi, p in _test_pieces(R))


def bobkov_gap(h: PiecewiseLogLinear, R: TestFunction) -> InequalityMargin:
    """Poincare margin ``h(w)**-2 * int h R'**2 - Var_h(R)``.

    All integrals are exact piecewise (polynomial times exponential).
    """
    pieces = _test_pieces(R)
    mass = h.mass
    if not mass > 0:
        raise ZeroMass("density has zero mass")
    mean = math.fsum(h.integrate_polynomial(p.coef, lo, hi) for lo, hi, p in pieces) / mass
    var = math.fsum(h.integrate_polynomial(((p - mean) ** 2).coef, lo, hi) for lo, hi, p in pieces) / mass
    energy = math.fsum(h.integrate_polynomial((p.deriv() ** 2).coef, lo, hi) for lo, hi, p in pieces) / mass
    hw = stats(h).median_height / mass
    return InequalityMargin.of("poincare", var, energy / (hw * hw))


# -- localized transport cost ---------------------------------------------------


@dataclass(frozen=True)
class LocalizedCostReport:
    z: float
    nu: float
    delta: float
    localized_cost: float
    scale: float
    ratio: float
    branch: str

    def to_dict(self) -> dict:
        return asdict(self)


def localized_cost(
    f: PiecewiseLogLinear, g: PiecewiseLogLinear, z: float, tol: float = DEFAULT_TOL
) -> LocalizedCostReport:
    """Transport cost in a window around ``z`` against its predicted scale.

    Branch ``"far"`` applies when one of g's tails at ``z`` holds at most
    half of f's smaller tail ``nu``: window ``nu / f(z)``, scale
    ``nu**3 / f(z)**2``.  Otherwise branch ``"near"`` needs ``g(z) != f(z)``
    and uses ``k = min(|ln(g(z)/f(z))|, 3)``, window ``nu ln2 k / (3 f(z))``
    and scale ``nu**3 k**4 / f(z)**2``.
    """
    z = float(z)
    nu = tail_mass(f, z)
    fz = f.pdf(z)
    if not (nu > 0 and fz > 0):
        raise HypothesisNotMet(f"z={z} is not an interior point of f's support")
    g_lo, g_hi = g.cdf(z), g.sf(z)
    if min(g_lo, g_hi) <= 0.5 * nu:
        branch = "far"
        delta = nu / fz
        scale = nu**3 / fz**2
    else:
        branch = "near"
        gz = g.pdf(z)
        if gz == fz:
            raise DegenerateAtZ(f"g(z) == f(z) at z={z}")
        k = 3.0 if gz == 0 else min(abs(math.log(gz / fz)), 3.0)
        delta = nu * LN2 / (3.0 * fz) * k
        scale = nu**3 / fz**2 * k**4
    cost = quadratic_cost(f, g, tol, z - delta, z + delta)
    return LocalizedCostReport(z, nu, delta, cost, scale, cost / scale, branch)


# -- global transport cost and L1 ----------------------------------------------

EPS_CEILING = 1.0 / 48.0


def transdist_check(f: PiecewiseLogLinear, g: PiecewiseLogLinear, tol: float = DEFAULT_TOL) -> InequalityMargin:
    """Quadratic transport cost of the mean-centred pair against ``2**20 f(w)**-2 eps (ln eps)**2``."""
    f0 = affine_image(f, 1.0, -stats(f).mean)
    g0 = affine_image(g, 1.0, -stats(g).mean)
    eps = pl_deficit_integral(f0, g0, tol)
    cost = quadratic_cost(f0, g0, tol)
    if eps == 0.0:
        return InequalityMargin.of("transport_cost_bound", cost, 0.0)
    if not eps < EPS_CEILING:
        raise EpsilonOutOfRange(f"deficit integral {eps} is not below 1/48")
    hw = stats(f0).median_height
    rhs = 2.0**20 / (hw * hw) * eps * math.log(eps) ** 2
    return InequalityMargin.of("transport_cost_bound", cost, rhs)


@dataclass(frozen=True)
class L1BoundReport:
    l1: float
    eps_cost: float
    shape: float
    ratio: float
    constant: float
    exact: bool
    margin: InequalityMargin

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("l1", "eps_cost", "shape", "ratio", "constant", "exact")}
        out.update(self.margin.to_dict())
        return out


def l1_shape(eps: float) -> float:
    """``eps**(1/3) |ln eps|**(2/3)``."""
    return eps ** (1.0 / 3.0) * abs(math.log(eps)) ** (2.0 / 3.0)


def l1_bound_check(
    f: PiecewiseLogLinear, g: PiecewiseLogLinear, constant: float = 64.0, tol: float = DEFAULT_TOL
) -> L1BoundReport:
    """L1 distance against ``constant * eps**(1/3) |ln eps|**(2/3)``, eps the scaled transport cost."""
    l1 = l1_distance(f, g)
    cost = quadratic_cost(f, g, tol)
    if cost == 0.0:
        return L1BoundReport(l1, 0.0, 0.0, 0.0, constant, True, InequalityMargin.of("l1_vs_cost", l1, 0.0))
    hw = stats(f).median_height
    eps = cost * hw * hw
    shape = l1_shape(eps)
    ratio = l1 / shape if shape > 0 else INF
    return L1BoundReport(
        l1, eps, shape, ratio, constant, False, InequalityMargin.of("l1_vs_cost", l1, constant * shape)
    )


# -- end-to-end certificate -----------------------------------------------------


@dataclass(frozen=True)
class StabilityCertificate:
    """Alignment residuals of f and g against m, compared with the predicted shape.

    ``alignment_f`` minimises ``int |f(t) - a m(t + b)|``.  ``alignment_g``
    is stored in the coupled convention, ``int |g(t) - m(t - b) / a|``.
    Ratios are ``residual / (bound_shape * factor * mass(m))`` with factor
    ``a`` for f and ``1/a`` for g; the certificate passes when both are at
    most ``constant_used``.
    """

    epsilon: float
    alignment_f: Alignment
    alignment_g: Alignment
    bound_shape: float
    ratio_f: float
    ratio_g: float
    constant_used: float
    kind: str
    passed: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def certificate_shape(eps: float) -> float:
    """``eps**(1/3) |ln eps|**(4/3)``."""
    return eps ** (1.0 / 3.0) * abs(math.log(eps)) ** (4.0 / 3.0)


def certify(triple: PLTriple, constant: float = 10.0, rtol: float = 1e-6) -> StabilityCertificate:
    eps = pl_epsilon(triple)
    m, f, g = triple.m, triple.f, triple.g
    if not m.mass > 0:
        raise ZeroMass("m has zero mass")
    al_f = align(f, m, rtol)
    raw_g = align(g, m, rtol)
    al_g = Alignment(1.0 / raw_g.a, (-raw_g.b) or 0.0, raw_g.residual)
    if eps == 0.0:
        ok = al_f.residual <= EXACT_TOL and al_g.residual <= EXACT_TOL
        r = 0.0 if ok else INF
        return StabilityCertificate(eps, al_f, al_g, 0.0, r, r, constant, "exact", ok)
    shape = certificate_shape(eps)
    ratio_f = al_f.residual / (shape * al_f.a * m.mass)
    ratio_g = al_g.residual / (shape / al_g.a * m.mass)
    ok = ratio_f <= constant and ratio_g <= constant
    return StabilityCertificate(eps, al_f, al_g, shape, ratio_f, ratio_g, constant, "approximate", ok)
