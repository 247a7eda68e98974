"""Monotone transport between two log-concave densities.

The map ``T`` pushes ``f`` forward to ``g`` by matching cumulative mass.
Because both cdfs and both quantile functions are closed-form, ``T`` is
exact; only the cost integrals below need quadrature.  They are split on
the merged partition (f's knots and the preimages of g's knots), where the
integrands are smooth, and the unbounded end pieces are handled exactly
(both sides in exponential tails, ``T`` affine) or by a certified sandwich
bound (one side bounded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .density import INF, PiecewiseLogLinear, l1_distance, stats
from .errors import NonpositiveDerivative, ToleranceNotReached, ZeroMass
from .quadrature import adaptive_simpson

DEFAULT_TOL = 1e-10


def deficit_integrand(tprime: float, alpha: float = 0.5) -> float:
    """Pointwise slack ``(alpha + beta t) / t**beta - 1`` with ``beta = 1 - alpha``.

    For ``alpha = 1/2`` this is ``(1 - sqrt t)**2 / (2 sqrt t)``, which is
    symmetric under ``t -> 1/t``.
    """
    if not tprime > 0:
        raise NonpositiveDerivative(f"derivative must be positive, got {tprime}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if alpha == 0.5:
        if math.isinf(tprime):
            return INF
        r = math.sqrt(tprime)
        # 1 - sqrt(t) = (1 - t) / (1 + sqrt(t)) avoids cancellation near t = 1
        u = (1.0 - tprime) / (1.0 + r)
        return u * u / (2.0 * r)
    beta = 1.0 - alpha
    return math.expm1(math.log1p(beta * (tprime - 1.0)) - beta * math.log(tprime))


class Segment(NamedTuple):
    """A piece of the coupling, integrated on the ``side`` density's axis.

    ``kind`` is ``"smooth"`` (finite interval), ``"affine"`` (both
    densities in exponential tails, the map is affine) or ``"tail"`` (the
    side density is in an exponential tail, the other is bounded there).
    """

    side: str
    lo: float
    hi: float
    kind: str


class TransportMap:
    """The increasing map ``T`` with ``cdf_f(x) = cdf_g(T(x))`` and its inverse ``S``."""

    def __init__(self, source: PiecewiseLogLinear, target: PiecewiseLogLinear):
        self.source = source
        self.target = target

    @staticmethod
    def _push(a: PiecewiseLogLinear, b: PiecewiseLogLinear, x: float) -> float:
        lo, hi = a.support
        if x <= lo:
            return b.support[0]
        if x >= hi:
            return b.support[1]
        below, above = a._lower(x), a._upper(x)
        if below <= above:
            return b._invert_lower(below / a.mass * b.mass)
        return b._invert_upper(above / a.mass * b.mass)

    def T(self, x: float) -> float:
        return self._push(self.source, self.target, float(x))

    def S(self, y: float) -> float:
        return self._push(self.target, self.source, float(y))

    def __call__(self, x: float) -> float:
        return self.T(x)

    def Tprime(self, x: float) -> float:
        """Right-hand derivative ``f(x) / g(T(x))``."""
        x = float(x)
        return self.source.pdf(x) / self.target.pdf(self.T(x))

    def Sprime(self, y: float) -> float:
        y = float(y)
        return self.target.pdf(y) / self.source.pdf(self.S(y))

    def breakpoints(self) -> list:
        """f's knots together with the finite preimages of g's knots."""
        f = self.source
        lo, hi = f.support
        pts = set(f.knots)
        for y in self.target.knots:
            x = self.S(y)
            if math.isfinite(x) and lo <= x <= hi:
                pts.add(x)
        return sorted(pts)

    def segments(self) -> list:
        f, g = self.source, self.target
        flo, fhi = f.support
        glo, ghi = g.support
        pts = self.breakpoints()
        if len(pts) == 2 and math.isfinite(flo) and math.isfinite(fhi):
            pts = [pts[0], 0.5 * (pts[0] + pts[1]), pts[1]]
        segs = []
        if flo == -INF:
            segs.append(Segment("f", -INF, pts[0], "affine" if glo == -INF else "tail"))
        inner = list(zip(pts, pts[1:]))
        for i, (a, b) in enumerate(inner):
            if i == 0 and math.isfinite(flo) and glo == -INF:
                segs.append(Segment("g", -INF, self.T(b), "tail"))
            elif i == len(inner) - 1 and math.isfinite(fhi) and ghi == INF:
                segs.append(Segment("g", self.T(a), INF, "tail"))
            else:
                segs.append(Segment("f", a, b, "smooth"))
        if fhi == INF:
            segs.append(Segment("f", pts[-1], INF, "affine" if ghi == INF else "tail"))
        return segs

    def _side(self, side: str):
        """(density on this axis, map to the other axis, other density)."""
        if side == "f":
            return self.source, self.T, self.target
        return self.target, self.S, self.source


def transport_map(f: PiecewiseLogLinear, g: PiecewiseLogLinear) -> TransportMap:
    return TransportMap(f, g)


def _tail_rate(d: PiecewiseLogLinear, seg: Segment) -> float:
    return -d.right_tail_slope if seg.hi == INF else d.left_tail_slope


def _affine_parts(tm: TransportMap, seg: Segment):
    """Anchor p, T(p) and slope of the affine map on an unbounded segment."""
    f, g = tm.source, tm.target
    if seg.hi == INF:
        p, slope = seg.lo, f.right_tail_slope / g.right_tail_slope
    else:
        p, slope = seg.hi, f.left_tail_slope / g.left_tail_slope
    return p, tm.T(p), slope


def _cost_segment(tm: TransportMap, seg: Segment, tol: float) -> float:
    d, fwd, other = tm._side(seg.side)
    if seg.kind == "smooth":

        def integrand(x):
            return d.pdf(x) * (fwd(x) - x) ** 2

        return adaptive_simpson(integrand, seg.lo, seg.hi, tol)[0]
    if seg.kind == "affine":
        p, tp, slope = _affine_parts(tm, seg)
        # (T(x) - x) = (slope - 1)(x - p) + (T(p) - p)
        c1, c0 = slope - 1.0, tp - p
        lo, hi = seg.lo, seg.hi
        return (
            c1 * c1 * d.moment(2, p, lo, hi)
            + 2.0 * c1 * c0 * d.moment(1, p, lo, hi)
            + c0 * c0 * d.moment(0, p, lo, hi)
        )
    # One side bounded: beyond a cutoff the map is squeezed between the image
    # at the cutoff and the bounded end, which sandwiches the remainder.
    rate = _tail_rate(d, seg)
    right = seg.hi == INF
    end = other.support[1] if right else other.support[0]
    start = max(seg.lo, end) if right else min(seg.hi, end)
    k = 4.0
    while True:
        xc = start + k / rate if right else start - k / rate
        mc = fwd(xc)
        lo, hi = (xc, INF) if right else (-INF, xc)
        upper = d.moment(2, mc, lo, hi)
        lower = d.moment(2, end, lo, hi)
        if 0.5 * abs(upper - lower) <= 0.25 * tol or k > 4096:
            break
        k *= 2.0
    if 0.5 * abs(upper - lower) > 0.25 * tol:
        raise ToleranceNotReached("tail cutoff search did not converge")

    def integrand(x):
        return d.pdf(x) * (fwd(x) - x) ** 2

    a, b = (seg.lo, xc) if right else (xc, seg.hi)
    body = adaptive_simpson(integrand, a, b, 0.5 * tol)[0]
    return body + 0.5 * (upper + lower)


def _deficit_segment(tm: TransportMap, seg: Segment, tol: float) -> float:
    d, fwd, other = tm._side(seg.side)

    def integrand(x):
        dx = d.pdf(x)
        if dx == 0.0:
            return 0.0
        return dx * deficit_integrand(dx / other.pdf(fwd(x)))

    if seg.kind == "smooth":
        return adaptive_simpson(integrand, seg.lo, seg.hi, tol)[0]
    if seg.kind == "affine":
        _, _, slope = _affine_parts(tm, seg)
        return deficit_integrand(slope) * d.integral(seg.lo, seg.hi)
    # d * D(t) <= (sqrt(d * o) + d**1.5 / sqrt(o)) / 2 with o between the
    # extremes of the other density on its end piece.
    # o ranges over the other density between its bounded end and the image
    # of the cutoff; by log-concavity its minimum there sits at an endpoint.
    rate = _tail_rate(d, seg)
    right = seg.hi == INF
    end_log = other.logvals[-1] if right else other.logvals[0]
    o_max = math.exp(other.max_logval)
    start = seg.lo if right else seg.hi
    k = 4.0
    while True:
        xc = start + k / rate if right else start - k / rate
        lc = d.logpdf(xc)
        o_min = math.exp(min(end_log, other.logpdf(fwd(xc))))
        bound = 0.5 * (
            math.sqrt(o_max) * math.exp(0.5 * lc) / (0.5 * rate)
            + math.exp(1.5 * lc) / math.sqrt(o_min) / (1.5 * rate)
        )
        if bound <= 0.5 * tol or k > 1e5:
            break
        k *= 2.0
    if bound > 0.5 * tol:
        raise ToleranceNotReached("tail cutoff search did not converge")
    a, b = (seg.lo, xc) if right else (xc, seg.hi)
    body = adaptive_simpson(integrand, a, b, 0.5 * tol)[0]
    return body + 0.5 * bound


def _clip_segments(tm: TransportMap, lo: float, hi: float) -> list:
    """Segments restricted to the source window ``[lo, hi]``."""
    out = []
    for seg in tm.segments():
        if seg.side == "f":
            a, b = max(lo, seg.lo), min(hi, seg.hi)
        else:
            a, b = max(tm.T(lo), seg.lo), min(tm.T(hi), seg.hi)
        if not a < b:
            continue
        kind = seg.kind
        if kind != "smooth" and math.isfinite(a) and math.isfinite(b):
            kind = "smooth"
        out.append(Segment(seg.side, a, b, kind))
    return out


def quadratic_cost(
    f: PiecewiseLogLinear,
    g: PiecewiseLogLinear,
    tol: float = DEFAULT_TOL,
    lo: float = -INF,
    hi: float = INF,
) -> float:
    """Integral of ``f(x) (T(x) - x)**2`` over ``[lo, hi]``, absolute error at most ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    tm = transport_map(f, g)
    segs = _clip_segments(tm, lo, hi)
    if not segs:
        return 0.0
    share = tol / len(segs)
    return math.fsum(_cost_segment(tm, s, share) for s in segs)


def pl_deficit_integral(f: PiecewiseLogLinear, g: PiecewiseLogLinear, tol: float = DEFAULT_TOL) -> float:
    """Integral of ``f(x) (1 - sqrt T'(x))**2 / (2 sqrt T'(x))``.

    Pieces that the map sends into an exponential tail of ``g`` are
    integrated on g's axis, using the symmetry of the integrand under
    ``T' -> 1/T'``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    tm = transport_map(f, g)
    segs = tm.segments()
    share = tol / len(segs)
    return max(0.0, math.fsum(_deficit_segment(tm, s, share) for s in segs))


@dataclass(frozen=True)
class DivergenceProbe:
    """Truncated estimates of ``int f (T' - 1)**2`` at shrinking mass cutoffs."""

    cutoffs: tuple
    estimates: tuple
    divergent: bool


def transport_energy_probe(
    f: PiecewiseLogLinear,
    g: PiecewiseLogLinear,
    levels: int = 10,
    tol: float = 1e-9,
) -> DivergenceProbe:
    """Probe whether ``int f (T'(x) - 1)**2 dx`` is finite.

    The integral is evaluated over f's mass range ``[nu, 1 - nu]`` for
    ``nu = 1e-2 * 2**-k``; three successive refinements that each grow the
    estimate by more than a factor 1.5 flag divergence.
    """
    tm = transport_map(f, g)

    def integrand(x):
        return f.pdf(x) * (tm.Tprime(x) - 1.0) ** 2

    cutoffs, estimates = [], []
    inner_lo = inner_hi = None
    total = 0.0
    for k in range(levels):
        nu = 1e-2 * 2.0**-k
        lo, hi = f.quantile(nu), f.isf(nu)
        if inner_lo is None:
            pts = [lo] + [x for x in tm.breakpoints() if lo < x < hi] + [hi]
            total = math.fsum(adaptive_simpson(integrand, a, b, tol)[0] for a, b in zip(pts, pts[1:]))
        else:
            total += _split_simpson(integrand, lo, inner_lo, tm, tol)
            total += _split_simpson(integrand, inner_hi, hi, tm, tol)
        inner_lo, inner_hi = lo, hi
        cutoffs.append(nu)
        estimates.append(total)
    growth = [b / a if a > 0 else INF for a, b in zip(estimates, estimates[1:])]
    divergent = len(growth) >= 3 and all(r > 1.5 for r in growth[-3:])
    return DivergenceProbe(tuple(cutoffs), tuple(estimates), divergent)


def _split_simpson(fn, a, b, tm, tol):
    pts = [a] + [x for x in tm.breakpoints() if a < x < b] + [b]
    return math.fsum(adaptive_simpson(fn, u, v, tol)[0] for u, v in zip(pts, pts[1:]))


@dataclass(frozen=True)
class Alignment:
    a: float
    b: float
    residual: float


def _golden(fn, lo, hi, rtol=1e-6, max_iter=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if abs(hi - lo) <= rtol * max(1.0, abs(c) + abs(d)):
            break
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def align(f: PiecewiseLogLinear, m: PiecewiseLogLinear, rtol: float = 1e-6) -> Alignment:
    """Approximately minimise ``int |f(t) - a m(t + b)| dt`` over ``a > 0`` and ``b``.

    Grid search around ``a0 = mass(f) / mass(m)``, ``b0 = mean(m) - mean(f)``
    (a within a factor 4, b within 4 standard deviations of f), then
    coordinate-wise golden-section refinement.  Only improvements are
    accepted, so the residual never exceeds the one at the initial guess.
    """
    if not (m.mass > 0 and f.mass > 0):
        raise ZeroMass("alignment needs positive masses")

    def residual(a, b):
        return l1_distance(f, m.translate(-b).rescale(a))

    sf, sm = stats(f), stats(m)
    a0 = f.mass / m.mass
    b0 = sm.mean - sf.mean
    best = (residual(a0, b0), a0, b0)
    if best[0] == 0.0:
        return Alignment(a0, b0, 0.0)
    sd = math.sqrt(max(sf.second_moment - sf.mean**2, 1e-300))
    na, nb = 8, 16
    a_step, b_step = math.log(4.0) / na, 4.0 * sd / nb
    candidates = [(1.0, 0.0)]
    for i in range(-na, na + 1):
        for j in range(-nb, nb + 1):
            candidates.append((a0 * math.exp(i * a_step), b0 + j * b_step))
    for a, b in candidates:
        r = residual(a, b)
        if r < best[0]:
            best = (r, a, b)
    r_best, a_best, b_best = best
    la_half, b_half = a_step, b_step
    for _ in range(60):
        prev = (a_best, b_best)
        b_new, r_new = _golden(lambda b: residual(a_best, b), b_best - b_half, b_best + b_half, rtol)
        if r_new < r_best:
            r_best, b_best = r_new, b_new
        la_new, r_new = _golden(
            lambda la: residual(math.exp(la), b_best), math.log(a_best) - la_half, math.log(a_best) + la_half, rtol
        )
        if r_new < r_best:
            r_best, a_best = r_new, math.exp(la_new)
        la_half *= 0.5
        b_half *= 0.5
        moved = abs(a_best - prev[0]) / a_best + abs(b_best - prev[1]) / max(sd, abs(b_best))
        if moved < rtol and la_half < rtol and b_half < rtol * max(sd, abs(b_best)):
            break
    return Alignment(a_best, b_best, r_best)
