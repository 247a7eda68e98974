"""Hypograph geometry: weighted sup-convolutions and the midpoint condition.

For log-concave ``f`` and ``g`` the region under ``ln h`` is convex, and the
sup-convolution ``t -> sup{f(r)**alpha g(s)**beta : t = alpha r + beta s}``
has as hypograph the Minkowski combination ``alpha C_f + beta C_g``.  With
piecewise log-linear inputs that is an edge merge of two concave chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .density import INF, LogConcaveFunction, PiecewiseLogLinear
from .errors import DominationViolated
from .transport import transport_map

DOMINATION_TOL = 1e-12


@dataclass(frozen=True)
class HypographPolygon:
    """Upper boundary of the hypograph of a log-concave function."""

    vertices: tuple
    left_tail_slope: Optional[float] = None
    right_tail_slope: Optional[float] = None

    @classmethod
    def from_function(cls, func: PiecewiseLogLinear) -> "HypographPolygon":
        return cls(tuple(func.vertices()), func.left_tail_slope, func.right_tail_slope)

    def to_function(self) -> LogConcaveFunction:
        xs, ls = zip(*self.vertices)
        return LogConcaveFunction(xs, ls, self.left_tail_slope, self.right_tail_slope)

    def support_value(self, u1: float, u2: float) -> float:
        """``sup <(u1, u2), v>`` over the hypograph, for ``u2 >= 0``."""
        if u2 < 0:
            return INF
        sl, sr = self.left_tail_slope, self.right_tail_slope
        if sl is not None and -u1 - u2 * sl > 0:
            return INF
        if sr is not None and u1 + u2 * sr > 0:
            return INF
        if u2 == 0 and ((u1 < 0 and sl is not None) or (u1 > 0 and sr is not None)):
            return INF
        return max(u1 * x + u2 * y for x, y in self.vertices)


@dataclass(frozen=True)
class PLTriple:
    m: PiecewiseLogLinear
    f: PiecewiseLogLinear
    g: PiecewiseLogLinear
    alpha: float = 0.5

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


def _edge_slopes(func: PiecewiseLogLinear) -> list:
    left = INF if func.left_tail_slope is None else func.left_tail_slope
    right = -INF if func.right_tail_slope is None else func.right_tail_slope
    return [left] + list(func.chord_slopes) + [right]


def sup_convolution(f: PiecewiseLogLinear, g: PiecewiseLogLinear, alpha: float = 0.5) -> LogConcaveFunction:
    """Exact weighted sup-convolution of two log-concave functions.

    Edges of both chains are merged by decreasing slope; equal slopes are
    merged into one edge.  The left tail of the result is the shallower of
    the two left tails (the smaller slope) and the right tail the shallower
    right tail (the larger slope); edges steeper than a tail are absorbed.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    beta = 1.0 - alpha
    ef, eg = _edge_slopes(f), _edge_slopes(g)
    left = min(ef[0], eg[0])
    right = max(ef[-1], eg[-1])
    i = next(k for k in range(len(f.knots)) if ef[k + 1] < left)
    j = next(k for k in range(len(g.knots)) if eg[k + 1] < left)
    fx, fl, gx, gl = f.knots, f.logvals, g.knots, g.logvals
    xs = [alpha * fx[i] + beta * gx[j]]
    ls = [alpha * fl[i] + beta * gl[j]]
    while True:
        a, b = ef[i + 1], eg[j + 1]
        if max(a, b) <= right:
            break
        if a >= b:
            i += 1
        if b >= a:
            j += 1
        xs.append(alpha * fx[i] + beta * gx[j])
        ls.append(alpha * fl[i] + beta * gl[j])
    return LogConcaveFunction(
        xs,
        ls,
        None if math.isinf(left) else left,
        None if math.isinf(right) else right,
    )


def dominates_midpoint(m: PiecewiseLogLinear, f: PiecewiseLogLinear, g: PiecewiseLogLinear, alpha: float = 0.5) -> bool:
    """Whether ``m(alpha r + beta s) >= f(r)**alpha g(s)**beta`` for all r, s.

    Exact for log-concave ``m``: every vertex of the sup-convolution must lie
    under ``ln m`` and m's tails must decay no faster than its tails.
    """
    hull = sup_convolution(f, g, alpha)
    for x, lv in hull.vertices():
        if m.logpdf(x) < lv - DOMINATION_TOL:
            return False
    sl, sr = hull.left_tail_slope, hull.right_tail_slope
    if sl is not None:
        if m.left_tail_slope is None or m.left_tail_slope > sl + DOMINATION_TOL * (1 + abs(sl)):
            return False
    if sr is not None:
        if m.right_tail_slope is None or m.right_tail_slope < sr - DOMINATION_TOL * (1 + abs(sr)):
            return False
    return True


def pl_epsilon(triple: PLTriple) -> float:
    """Relative excess ``mass(m) / (mass(f)**alpha mass(g)**beta) - 1``."""
    m, f, g, alpha = triple.m, triple.f, triple.g, triple.alpha
    if not dominates_midpoint(m, f, g, alpha):
        raise DominationViolated("m does not dominate the weighted midpoint of f and g")
    log_ratio = math.log(m.mass) - alpha * math.log(f.mass) - (1.0 - alpha) * math.log(g.mass)
    eps = math.expm1(log_ratio)
    if -DOMINATION_TOL < eps < 0.0:
        eps = 0.0
    return eps


def midpoint_density(
    f: PiecewiseLogLinear,
    g: PiecewiseLogLinear,
    spacing: float = 1e-3,
    tail_mass: float = 1e-12,
) -> PiecewiseLogLinear:
    """The function h with ``h((x + T(x)) / 2) = sqrt(f(x) g(T(x)))``.

    Sampled at the breakpoints of the transport map and at cdf levels at
    most ``spacing`` apart (geometrically refined down to ``tail_mass`` at
    unbounded ends) and interpolated log-linearly.  When both densities
    have exponential tails on a side the tail of h is exact; otherwise the
    secant slope of the two outermost samples is used.  h need not be
    log-concave, so a plain piecewise log-linear function is returned.
    """
    tm = transport_map(f, g)
    flo, fhi = f.support
    glo, ghi = g.support
    xs = set(tm.breakpoints())
    n = int(math.ceil(1.0 / spacing))
    for k in range(1, n):
        xs.add(f.quantile(k / n))
    # geometric refinement towards ends whose image is unbounded
    level = spacing
    while level > tail_mass:
        level *= 0.5
        if flo == -INF or glo == -INF:
            xs.add(f.quantile(level))
        if fhi == INF or ghi == INF:
            xs.add(f.isf(level))
    pts = []
    for x in sorted(xs):
        y = tm.T(x)
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        lf, lg = f.logpdf(x), g.logpdf(y)
        if not (math.isfinite(lf) and math.isfinite(lg)):
            # one-sided values at a support end
            continue
        pts.append((0.5 * (x + y), 0.5 * (lf + lg)))
    # include exact support ends when both sides are bounded there
    if math.isfinite(flo) and math.isfinite(glo):
        pts.insert(0, (0.5 * (flo + glo), 0.5 * (f.logvals[0] + g.logvals[0])))
    if math.isfinite(fhi) and math.isfinite(ghi):
        pts.append((0.5 * (fhi + ghi), 0.5 * (f.logvals[-1] + g.logvals[-1])))
    pts.sort()
    clean = [pts[0]]
    for p in pts[1:]:
        if p[0] - clean[-1][0] > 1e-13 * max(1.0, abs(p[0])):
            clean.append(p)
    rs, lh = zip(*clean)

    def tail(side):
        fs = f.left_tail_slope if side == "left" else f.right_tail_slope
        gs = g.left_tail_slope if side == "left" else g.right_tail_slope
        bounded_f = math.isfinite(flo if side == "left" else fhi)
        bounded_g = math.isfinite(glo if side == "left" else ghi)
        if bounded_f and bounded_g:
            return None
        if fs is not None and gs is not None:
            return 2.0 * fs * gs / (fs + gs)
        if len(rs) < 2:
            return None
        if side == "left":
            s = (lh[1] - lh[0]) / (rs[1] - rs[0])
            return s if s > 0 else None
        s = (lh[-1] - lh[-2]) / (rs[-1] - rs[-2])
        return s if s < 0 else None

    return PiecewiseLogLinear(rs, lh, tail("left"), tail("right"))
