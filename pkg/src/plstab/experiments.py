"""Example families, epsilon sweeps and seeded property suites."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .density import (
    LogConcaveFunction,
    PiecewiseLogLinear,
    affine_image,
    as_density,
    build,
    l1_distance,
    log_concave_hull,
    random_density,
    stats,
)
from .errors import BaseNotEven, EpsOutOfRange, UnknownSuite
from .midpoint import PLTriple, pl_epsilon, sup_convolution
from .stability import (
    InequalityMargin,
    PiecewiseLinear,
    bobkov_gap,
    check_hw,
    expectation,
    l1_bound_check,
)
from .transport import DEFAULT_TOL, pl_deficit_integral, quadratic_cost, transport_map

EVEN_TOL = 1e-9


def laplace() -> PiecewiseLogLinear:
    """The density ``exp(-|x|) / 2``."""
    return build([0.0], [-math.log(2.0)], 1.0, -1.0, normalize=True)


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps < 0.5:
        raise EpsOutOfRange(f"eps must lie in (0, 1/2), got {eps}")
    return eps


def make_example(kind: str, eps: float, base: Optional[PiecewiseLogLinear] = None) -> PLTriple:
    """Build one of the two extremal example triples.

    ``"exa2"``: ``f = base``, ``g(x) = (1 + eps) f((1 + eps) x)`` and
    ``m = (1 + eps) f``.  The deficit is exactly ``eps``.

    ``"exa3"``: ``f`` uniform on ``[-1/2, 1/2]``; ``g`` equal to 1 on
    ``|x| <= 1/2 - eps`` with tails ``exp(-(|x| - 1/2 + eps) / eps)``; ``m``
    the weighted midpoint envelope of the two, which is 1 on
    ``|x| <= 1/2 - eps/2`` with tails of rate ``1/eps`` and total mass
    ``1 + eps``.
    """
    eps = _check_eps(eps)
    if kind == "exa2":
        f = laplace() if base is None else as_density(base)
        s = stats(f)
        if abs(s.mean) > EVEN_TOL or abs(s.median) > EVEN_TOL:
            raise BaseNotEven(f"base has mean {s.mean} and median {s.median}")
        g = affine_image(f, 1.0 / (1.0 + eps))
        lift = math.log1p(eps)
        m = build(f.knots, [v + lift for v in f.logvals], f.left_tail_slope, f.right_tail_slope)
        return PLTriple(m, f, g)
    if kind == "exa3":
        f = build([-0.5, 0.5], [0.0, 0.0], normalize=True)
        c = 0.5 - eps
        g = build([-c, c], [0.0, 0.0], 1.0 / eps, -1.0 / eps, normalize=True)
        r = 0.5 - 0.5 * eps
        m = build([-r, r], [0.0, 0.0], 1.0 / eps, -1.0 / eps)
        return PLTriple(m, f, g)
    raise ValueError(f"unknown example kind {kind!r}; expected 'exa2' or 'exa3'")


# -- sweeps -----------------------------------------------------------------------

SWEEP_COLUMNS = ("eps", "pl_epsilon", "deficit_integral", "quadratic_cost", "l1", "bound_ratio")


@dataclass(frozen=True)
class SweepRow:
    eps: float
    pl_epsilon: float
    deficit_integral: float
    quadratic_cost: float
    l1: float
    bound_ratio: float


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> ExponentFit:
    """Least-squares line through ``(ln x, ln y)``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return ExponentFit(float(slope), float(intercept), min(1.0, r2))


def sweep_row(kind: str, eps: float, tol: float = DEFAULT_TOL, base=None) -> SweepRow:
    t = make_example(kind, eps, base)
    report = l1_bound_check(t.f, t.g, tol=tol)
    return SweepRow(
        eps=eps,
        pl_epsilon=pl_epsilon(t),
        deficit_integral=pl_deficit_integral(t.f, t.g, tol),
        quadratic_cost=quadratic_cost(t.f, t.g, tol),
        l1=report.l1,
        bound_ratio=report.ratio,
    )


def sweep(kind: str, eps_grid: Sequence[float], tol: float = DEFAULT_TOL, base=None):
    """Rows for each eps and a log-log exponent fit for every measured column."""
    grid = [_check_eps(e) for e in eps_grid]
    if len(set(grid)) < 3:
        raise ValueError("a sweep needs at least 3 distinct eps values")
    rows = [sweep_row(kind, e, tol, base) for e in grid]
    fits = {}
    for col in SWEEP_COLUMNS[1:]:
        ys = [getattr(r, col) for r in rows]
        if all(y > 0 and math.isfinite(y) for y in ys):
            fits[col] = fit_exponent(grid, ys)
    return rows, fits


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([format(getattr(r, c), ".17g") for c in SWEEP_COLUMNS])
    return buf.getvalue()


# -- seeded instances -------------------------------------------------------------


def _rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def _random_instance(rng: np.random.Generator) -> PiecewiseLogLinear:
    return random_density(int(rng.integers(2**32)), int(rng.integers(1, 7)))


def _sample_points(d: PiecewiseLogLinear, rng: np.random.Generator, n: int = 12) -> list:
    levels = np.concatenate([rng.uniform(1e-4, 1 - 1e-4, n - 2), [1e-3, 0.999]])
    return sorted(float(d.quantile(p)) for p in levels)


def tilted(d: PiecewiseLogLinear, theta: float) -> PiecewiseLogLinear:
    """Normalised ``d(x) exp(theta x)``."""
    sl = None if d.left_tail_slope is None else d.left_tail_slope + theta
    sr = None if d.right_tail_slope is None else d.right_tail_slope + theta
    return build(d.knots, [v + theta * x for x, v in zip(d.knots, d.logvals)], sl, sr, normalize=True)


def _max_tilt(d: PiecewiseLogLinear) -> float:
    return 2.0 if d.right_tail_slope is None else min(2.0, -d.right_tail_slope)


def perturbed_pair(seed: int, trial: int, centred: bool = True):
    """A density and a nearby one (exponential tilt and rescale), both mean zero."""
    rng = _rng(seed, trial)
    f = _random_instance(rng)
    theta = rng.uniform(-0.2, 0.2) * min(_max_tilt(f), 1.0)
    if f.left_tail_slope is not None:
        theta = max(theta, -0.5 * f.left_tail_slope)
    if f.right_tail_slope is not None:
        theta = min(theta, -0.5 * f.right_tail_slope)
    g = affine_image(tilted(f, theta), rng.uniform(0.85, 1.15))
    if centred:
        f = affine_image(f, 1.0, -stats(f).mean)
        g = affine_image(g, 1.0, -stats(g).mean)
    return f, g


# -- suites -----------------------------------------------------------------------

MEDIAN_LABELS = {
    "median_mean_gap",
    "median_window_lower",
    "median_window_upper",
    "height_bound",
    "tail_mass_vs_height",
    "tail_first_moment",
    "tail_second_moment",
}
LOCAL_LABELS = {"local_window_lower", "local_window_upper", "tail_abs_first_moment", "tail_abs_second_moment"}
IDENTITY_TOL = 1e-9


def _trial_prop21(rng) -> list:
    g = _random_instance(rng)
    theta = rng.uniform(0.05, 0.95) * _max_tilt(g)
    f = tilted(g, theta)
    out = [InequalityMargin.of("moment_comparison_identity", g.moment(1), f.moment(1))]
    lo, hi = g.quantile(0.01), g.isf(0.01)
    xs = np.sort(rng.uniform(lo, hi, 4))
    ys = np.cumsum(rng.uniform(0.0, 2.0, 4))
    if np.all(np.diff(xs) > 0):
        R = PiecewiseLinear(tuple(xs), tuple(ys))
        out.append(InequalityMargin.of("moment_comparison_ramp", expectation(g, R), expectation(f, R)))
    c = rng.uniform(lo, hi)
    out.append(InequalityMargin.of("moment_comparison_indicator", g.sf(c), f.sf(c)))
    return out


def _trial_prop22(rng) -> list:
    d = _random_instance(rng)
    return [m for m in check_hw(d, _sample_points(d, rng)) if m.label in MEDIAN_LABELS]


def _trial_cor23(rng) -> list:
    d = _random_instance(rng)
    return [m for m in check_hw(d, _sample_points(d, rng)) if m.label in LOCAL_LABELS]


def _trial_bobkov(rng) -> list:
    d = _random_instance(rng)
    degree = int(rng.integers(1, 5))
    s = stats(d)
    sd = math.sqrt(max(s.second_moment - s.mean**2, 1e-300))
    coef = rng.normal(size=degree + 1)
    # polynomial in the standardised variable, expanded back to x
    R = np.polynomial.Polynomial(coef)(np.polynomial.Polynomial([-s.mean / sd, 1.0 / sd]))
    out = [bobkov_gap(d, R)]
    xs = np.sort(rng.normal(s.mean, sd, 3))
    if np.all(np.diff(xs) > 0):
        out.append(bobkov_gap(d, PiecewiseLinear(tuple(xs), tuple(rng.normal(size=3)))))
    return out


def _trial_pl(rng) -> list:
    f = _random_instance(rng)
    g = _random_instance(rng)
    f = affine_image(f, rng.uniform(0.5, 2.0), rng.uniform(-1, 1))
    if rng.random() < 0.25:
        # translate of f: the equality case
        g = f.translate(float(rng.uniform(-2, 2)))
    lift = rng.uniform(-1, 1)
    g = g._replace(logvals=tuple(v + lift for v in g.logvals), cls=LogConcaveFunction)
    alpha = float(rng.uniform(0.1, 0.9))
    m = sup_convolution(f, g, alpha)
    eps = pl_epsilon(PLTriple(m, f, g, alpha))
    return [InequalityMargin.of("prekopa_leindler", f.mass**alpha * g.mass ** (1 - alpha), m.mass),
            InequalityMargin.of("pl_epsilon_nonnegative", 0.0, eps)]


def _trial_hull(rng) -> list:
    n = int(rng.integers(3, 12))
    xs = rng.uniform(-3, 3, n)
    ys = rng.normal(size=n)
    left = float(rng.uniform(0.5, 3)) if rng.random() < 0.5 else None
    right = -float(rng.uniform(0.5, 3)) if rng.random() < 0.5 else None
    hull = log_concave_hull(zip(xs, ys), left, right)
    out = []
    for x, y in zip(xs, ys):
        out.append(InequalityMargin.of("hull_dominates_points", y, hull.logpdf(x)))
    pts = list(zip(xs, ys))
    for vx, vy in hull.vertices():
        gap = min(abs(vx - x) + abs(vy - y) for x, y in pts)
        out.append(InequalityMargin.of("hull_vertex_is_input", gap, IDENTITY_TOL))
    return out


def _trial_transport(rng) -> list:
    f = _random_instance(rng)
    g = _random_instance(rng)
    tm = transport_map(f, g)
    xs = _sample_points(f, rng, 8)
    out = []
    prev = None
    for x in xs:
        y = tm.T(x)
        out.append(InequalityMargin.of("pushforward_identity", abs(f.cdf(x) - g.cdf(y)), IDENTITY_TOL))
        if prev is not None:
            out.append(InequalityMargin.of("map_monotone", prev, y))
        prev = y
    out.append(InequalityMargin.of("deficit_nonnegative", 0.0, pl_deficit_integral(f, g, 1e-8)))
    return out


SUITES: dict = {
    "prop21": _trial_prop21,
    "prop22": _trial_prop22,
    "cor23": _trial_cor23,
    "bobkov": _trial_bobkov,
    "pl": _trial_pl,
    "hull": _trial_hull,
    "transport": _trial_transport,
}


@dataclass
class SuiteReport:
    name: str
    trials: int
    seed: int
    passed: int = 0
    failed: int = 0
    checks: int = 0
    worst_margin: float = math.inf
    worst_label: str = ""
    worst_trial: int = -1
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = self.ok
        return out


def run_suite(name: str, trials: int, seed: int) -> SuiteReport:
    """Run ``trials`` seeded instances of a named property suite."""
    if name not in SUITES:
        raise UnknownSuite(name)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    trial_fn: Callable = SUITES[name]
    report = SuiteReport(name, trials, seed)
    for k in range(trials):
        margins = trial_fn(_rng(seed, k))
        report.checks += len(margins)
        bad = [m for m in margins if not m.passed]
        if bad:
            report.failed += 1
            report.failures.append({"trial": k, **bad[0].to_dict()})
        else:
            report.passed += 1
        for m in margins:
            if m.margin < report.worst_margin:
                report.worst_margin, report.worst_label, report.worst_trial = m.margin, m.label, k
    return report
