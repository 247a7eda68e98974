import math

import numpy as np
import pytest
from hypothesis import settings

from plstab.density import build

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def laplace():
    return build([0.0], [-math.log(2.0)], 1.0, -1.0, normalize=True)


@pytest.fixture
def phi():
    """exp(-x)/2 on [-ln 2, inf): the extremal density for the median estimates."""
    return build([-math.log(2.0), 0.0], [0.0, -math.log(2.0)], None, -1.0, normalize=True)


@pytest.fixture
def uniform01():
    return build([0.0, 1.0], [0.0, 0.0], normalize=True)


# -- brute-force oracles, independent of the package's closed forms ------------


def grid_logpdf(d, xs):
    """ln d on an array, by linear interpolation of the log values plus tails."""
    xs = np.asarray(xs, float)
    k = np.asarray(d.knots, float)
    v = np.asarray(d.logvals, float)
    out = np.interp(xs, k, v)
    left = xs < k[0]
    right = xs > k[-1]
    out[left] = v[0] + d.left_tail_slope * (xs[left] - k[0]) if d.left_tail_slope is not None else -np.inf
    out[right] = v[-1] + d.right_tail_slope * (xs[right] - k[-1]) if d.right_tail_slope is not None else -np.inf
    return out


def oracle_breakpoints(*ds, decay=45.0):
    """All knots plus window ends that hold all but ~exp(-decay) of each tail."""
    pts = set()
    for d in ds:
        pts.update(float(k) for k in d.knots)
        if d.left_tail_slope is not None:
            pts.add(d.knots[0] - decay / d.left_tail_slope)
        if d.right_tail_slope is not None:
            pts.add(d.knots[-1] + decay / -d.right_tail_slope)
    return sorted(pts)


def grid_integral(fn, breakpoints, n=20000):
    """Trapezoid rule at spacing h and h/2 on each interval, Richardson-combined.

    ``fn`` maps an array of points to values; interval ends are nudged
    inwards so one-sided limits are used at jumps.
    """
    total = 0.0
    for a, b in zip(breakpoints, breakpoints[1:]):
        xs = np.linspace(a, b, 2 * n + 1)
        nudge = 1e-12 * (b - a)
        xs[0] += nudge
        xs[-1] -= nudge
        ys = fn(xs)
        h = (b - a) / (2 * n)
        fine = h * (ys.sum() - 0.5 * (ys[0] + ys[-1]))
        coarse = 2 * h * (ys[::2].sum() - 0.5 * (ys[0] + ys[-1]))
        total += (4.0 * fine - coarse) / 3.0
    return total


def grid_pdf(d):
    return lambda xs: np.exp(grid_logpdf(d, xs))


def oracle_stats(d, n=20000):
    """(mass, mean, median) of d by brute-force grid integration."""
    bps = oracle_breakpoints(d)
    pdf = grid_pdf(d)
    mass = grid_integral(pdf, bps, n)
    mean = grid_integral(lambda xs: xs * pdf(xs), bps, n) / mass
    lo, hi = bps[0], bps[-1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = grid_integral(pdf, [p for p in bps if p < mid] + [mid], 2000) / mass
        if below < 0.5:
            lo = mid
        else:
            hi = mid
    return mass, mean, 0.5 * (lo + hi)


def oracle_l1(d1, d2, n=20000):
    p1, p2 = grid_pdf(d1), grid_pdf(d2)
    return grid_integral(lambda xs: np.abs(p1(xs) - p2(xs)), oracle_breakpoints(d1, d2), n)


def brute_sup_convolution(f, g, alpha, window, n=2000):
    """Pointwise sup of f(r)**alpha g(s)**(1-alpha) over an n-by-n (r, s) grid.

    Returns (t_values, log_values) for every grid pair, so callers can both
    check domination pair-by-pair and bin by t for the sup.
    """
    lo, hi = window
    r = np.linspace(lo, hi, n)
    lf = grid_logpdf(f, r)
    lg = grid_logpdf(g, r)
    t = alpha * r[:, None] + (1 - alpha) * r[None, :]
    val = alpha * lf[:, None] + (1 - alpha) * lg[None, :]
    keep = np.isfinite(val)
    return t[keep], val[keep], (hi - lo) / (n - 1)


def binned_sup(t, val, edges):
    """Max of val within each bin of t; -inf for empty bins."""
    idx = np.searchsorted(edges, t) - 1
    ok = (idx >= 0) & (idx < len(edges) - 1)
    out = np.full(len(edges) - 1, -np.inf)
    np.maximum.at(out, idx[ok], val[ok])
    return out
