"""Piecewise log-linear functions on the real line.

A function is stored by its knots ``x_0 < ... < x_n``, the values of
``ln h`` at the knots, and optional exponential tails.  Between knots
``ln h`` is interpolated linearly; left of ``x_0`` it continues with slope
``left_tail_slope`` (or ``h = 0`` when there is no tail), and symmetrically
on the right.  Every integral of ``(x - c)**k * h(x)`` over an interval has
a closed form, so mass, cdf, quantiles, moments and L1 distances are exact
up to rounding.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import gammainc

from .errors import (
    ConcavityViolated,
    EmptyInput,
    InfiniteMass,
    NonpositiveScale,
    QuantileOutOfRange,
    ZeroMass,
)

INF = math.inf
SMALL_SLOPE = 1e-8
MASS_TOL = 1e-9
# relative slack when comparing consecutive chord slopes
CONCAVITY_RTOL = 1e-9


def _psi(j: int, d: float) -> float:
    """Return the integral of ``t**j * exp(-d t)`` over ``[0, 1]`` for ``d >= 0``."""
    if j == 0:
        if d < SMALL_SLOPE:
            return 1.0 - 0.5 * d
        return -math.expm1(-d) / d
    if d < 1.0:
        total = 0.0
        term = 1.0
        for n in range(40):
            total += term / (n + j + 1)
            term *= -d / (n + 1)
            if abs(term) < 1e-18:
                break
        return total
    return float(gammainc(j + 1, d)) * math.factorial(j) / d ** (j + 1)


def log1p_ratio(y: float) -> float:
    """``log1p(y) / y`` with the ``y -> 0`` limit."""
    if abs(y) < SMALL_SLOPE:
        return 1.0 - 0.5 * y + y * y / 3.0
    return math.log1p(y) / y


# A piece is (lo, hi, log value at lo, log value at hi, slope); tails carry
# -inf for the log value at their infinite end.
Piece = tuple


def _piece_log(piece: Piece, x: float) -> float:
    lo, hi, llo, lhi, s = piece
    if lo == -INF:
        return lhi + s * (x - hi)
    if hi == INF:
        return llo + s * (x - lo)
    if x == hi:
        return lhi
    if x == lo:
        return llo
    return llo + (lhi - llo) * ((x - lo) / (hi - lo))


def _piece_moment(piece: Piece, u: float, v: float, k: int = 0, center: float = 0.0) -> float:
    """Integral of ``(x - center)**k * h(x)`` over ``[u, v]`` inside ``piece``."""
    if not u < v:
        return 0.0
    s = piece[4]
    if u == -INF or v == INF:
        if u == -INF:
            c, rate, sign = v, s, -1.0
        else:
            c, rate, sign = u, -s, 1.0
        lc = _piece_log(piece, c)
        a = c - center
        total = 0.0
        for j in range(k + 1):
            total += math.comb(k, j) * a ** (k - j) * sign**j * math.factorial(j) / rate ** (j + 1)
        return math.exp(lc) * total
    lu = _piece_log(piece, u)
    lv = _piece_log(piece, v)
    width = v - u
    if lu >= lv:
        c, lc, step = u, lu, width
    else:
        c, lc, step = v, lv, -width
    d = abs(lv - lu)
    if k == 0:
        return math.exp(lc) * width * _psi(0, d)
    a = c - center
    total = 0.0
    for j in range(k + 1):
        total += math.comb(k, j) * a ** (k - j) * step**j * _psi(j, d)
    return math.exp(lc) * width * total


@dataclass(frozen=True)
class PiecewiseLogLinear:
    """Positive integrable function whose logarithm is piecewise linear.

    No concavity is enforced here; see :class:`LogConcaveFunction`.
    """

    knots: tuple
    logvals: tuple
    left_tail_slope: Optional[float] = None
    right_tail_slope: Optional[float] = None

    def __post_init__(self):
        knots = tuple(float(x) for x in self.knots)
        logvals = tuple(float(v) for v in self.logvals)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "logvals", logvals)
        for name in ("left_tail_slope", "right_tail_slope"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, float(val))
        self._validate()

    def _validate(self):
        knots, logvals = self.knots, self.logvals
        if not knots:
            raise EmptyInput("at least one knot is required")
        if len(knots) != len(logvals):
            raise ValueError(f"{len(knots)} knots but {len(logvals)} log values")
        if not all(math.isfinite(v) for v in knots + logvals):
            raise ValueError("knots and log values must be finite")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError("knots must be strictly increasing")
        sl, sr = self.left_tail_slope, self.right_tail_slope
        if sl is not None and not (math.isfinite(sl) and sl > 0):
            raise InfiniteMass(f"left tail slope must be positive, got {sl}")
        if sr is not None and not (math.isfinite(sr) and sr < 0):
            raise InfiniteMass(f"right tail slope must be negative, got {sr}")
        if len(knots) == 1 and sl is None and sr is None:
            raise ZeroMass("a single knot without tails has no mass")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ZeroMass(f"mass {self.mass} is not positive and finite")

    # -- structure ---------------------------------------------------------

    @cached_property
    def pieces(self) -> list:
        x, lv = self.knots, self.logvals
        out = []
        if self.left_tail_slope is not None:
            out.append((-INF, x[0], -INF, lv[0], self.left_tail_slope))
        for i in range(len(x) - 1):
            out.append((x[i], x[i + 1], lv[i], lv[i + 1], (lv[i + 1] - lv[i]) / (x[i + 1] - x[i])))
        if self.right_tail_slope is not None:
            out.append((x[-1], INF, lv[-1], -INF, self.right_tail_slope))
        return out

    @cached_property
    def _edges(self) -> list:
        return [p[0] for p in self.pieces] + [self.pieces[-1][1]]

    @cached_property
    def chord_slopes(self) -> np.ndarray:
        return np.diff(self.logvals) / np.diff(self.knots)

    @property
    def support(self) -> tuple:
        lo = -INF if self.left_tail_slope is not None else self.knots[0]
        hi = INF if self.right_tail_slope is not None else self.knots[-1]
        return lo, hi

    @cached_property
    def _piece_masses(self) -> list:
        return [_piece_moment(p, p[0], p[1]) for p in self.pieces]

    @cached_property
    def _cum_left(self) -> list:
        out = [0.0]
        for m in self._piece_masses:
            out.append(out[-1] + m)
        return out

    @cached_property
    def _cum_right(self) -> list:
        # _cum_right[i] = mass of pieces i, i+1, ...
        out = [0.0]
        for m in reversed(self._piece_masses):
            out.append(out[-1] + m)
        return out[::-1]

    @cached_property
    def mass(self) -> float:
        return math.fsum(self._piece_masses)

    @cached_property
    def max_logval(self) -> float:
        return max(self.logvals)

    def piece_index(self, x: float) -> int:
        """Index of the piece containing ``x``; -1 or len(pieces) outside the support."""
        lo, hi = self.support
        if x < lo:
            return -1
        if x > hi:
            return len(self.pieces)
        i = bisect_right(self._edges, x) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    # -- evaluation --------------------------------------------------------

    def _logpdf1(self, x: float) -> float:
        i = self.piece_index(x)
        if i < 0 or i >= len(self.pieces):
            return -INF
        return _piece_log(self.pieces[i], x)

    def logpdf(self, x):
        if np.ndim(x) == 0:
            return self._logpdf1(float(x))
        return np.array([self._logpdf1(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))

    def pdf(self, x):
        return np.exp(self.logpdf(x)) if np.ndim(x) else math.exp(self._logpdf1(float(x)))

    def __call__(self, x):
        return self.pdf(x)

    def _lower(self, x: float) -> float:
        """Integral of h over (-inf, x]."""
        i = self.piece_index(x)
        if i < 0:
            return 0.0
        if i >= len(self.pieces):
            return self.mass
        p = self.pieces[i]
        return self._cum_left[i] + _piece_moment(p, p[0], x)

    def _upper(self, x: float) -> float:
        """Integral of h over [x, inf)."""
        i = self.piece_index(x)
        if i < 0:
            return self.mass
        if i >= len(self.pieces):
            return 0.0
        p = self.pieces[i]
        return self._cum_right[i + 1] + _piece_moment(p, x, p[1])

    def cumulative(self, x: float) -> float:
        return self._lower(float(x))

    def cdf(self, x):
        if np.ndim(x):
            return np.array([self.cdf(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        x = float(x)
        lower = self._lower(x)
        if lower <= 0.5 * self.mass:
            return lower / self.mass
        return 1.0 - self._upper(x) / self.mass

    def sf(self, x):
        if np.ndim(x):
            return np.array([self.sf(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        x = float(x)
        upper = self._upper(x)
        if upper <= 0.5 * self.mass:
            return upper / self.mass
        return 1.0 - self._lower(x) / self.mass

    def _invert_lower(self, r: float) -> float:
        """Point x with integral of h over (-inf, x] equal to r."""
        cum = self._cum_left
        i = min(max(bisect_right(cum, r) - 1, 0), len(self.pieces) - 1)
        rho = r - cum[i]
        lo, hi, llo, lhi, s = self.pieces[i]
        if lo == -INF:
            return hi + (math.log(rho * s) - lhi) / s if rho > 0 else -INF
        y = s * rho * math.exp(-llo)
        if y <= -1.0:
            return hi
        t = rho * math.exp(-llo) * log1p_ratio(y)
        return min(lo + t, hi)

    def _invert_upper(self, r: float) -> float:
        """Point x with integral of h over [x, inf) equal to r."""
        cum = self._cum_right
        # cum is decreasing; find piece i with cum[i+1] <= r < cum[i]
        n = len(self.pieces)
        i = n - 1
        while i > 0 and cum[i] <= r:
            i -= 1
        rho = r - cum[i + 1]
        lo, hi, llo, lhi, s = self.pieces[i]
        if hi == INF:
            return lo + (math.log(rho * -s) - llo) / s if rho > 0 else INF
        y = -s * rho * math.exp(-lhi)
        if y <= -1.0:
            return lo
        t = rho * math.exp(-lhi) * log1p_ratio(y)
        return max(hi - t, lo)

    def quantile(self, p):
        if np.ndim(p):
            return np.array([self.quantile(float(v)) for v in np.ravel(p)]).reshape(np.shape(p))
        p = float(p)
        if not 0.0 < p < 1.0:
            raise QuantileOutOfRange(f"quantile level {p} not in (0, 1)")
        if p <= 0.5:
            return self._invert_lower(p * self.mass)
        return self._invert_upper((1.0 - p) * self.mass)

    def isf(self, q):
        """Inverse survival function, accurate for small ``q``."""
        q = float(q)
        if not 0.0 < q < 1.0:
            raise QuantileOutOfRange(f"survival level {q} not in (0, 1)")
        if q <= 0.5:
            return self._invert_upper(q * self.mass)
        return self._invert_lower((1.0 - q) * self.mass)

    # -- integrals ---------------------------------------------------------

    def moment(self, k: int, center: float = 0.0, lo: float = -INF, hi: float = INF) -> float:
        """Integral of ``(x - center)**k * h(x)`` over ``[lo, hi]``."""
        slo, shi = self.support
        lo, hi = max(lo, slo), min(hi, shi)
        if not lo < hi:
            return 0.0
        total = []
        for p in self.pieces:
            u, v = max(lo, p[0]), min(hi, p[1])
            if u < v:
                total.append(_piece_moment(p, u, v, k, center))
        return math.fsum(total)

    def integral(self, lo: float = -INF, hi: float = INF) -> float:
        return self.moment(0, 0.0, lo, hi)

    def integrate_polynomial(self, coeffs: Sequence[float], lo: float = -INF, hi: float = INF) -> float:
        """Integral of ``P(x) * h(x)`` over ``[lo, hi]`` for ``P`` given by
        ascending power-basis coefficients.

        Each piece is integrated in a basis centred at a finite point of the
        piece so that large offsets do not cancel.
        """
        poly = np.polynomial.Polynomial(coeffs)
        slo, shi = self.support
        lo, hi = max(lo, slo), min(hi, shi)
        total = []
        for p in self.pieces:
            u, v = max(lo, p[0]), min(hi, p[1])
            if not u < v:
                continue
            if math.isfinite(u) and math.isfinite(v):
                c = 0.5 * (u + v)
            else:
                c = u if math.isfinite(u) else v
            shifted = poly(np.polynomial.Polynomial([c, 1.0])).coef
            for k, a in enumerate(shifted):
                if a != 0.0:
                    total.append(a * _piece_moment(p, u, v, k, c))
        return math.fsum(total)

    # -- transformations ---------------------------------------------------

    def _replace(self, **changes):
        fields = dict(
            knots=self.knots,
            logvals=self.logvals,
            left_tail_slope=self.left_tail_slope,
            right_tail_slope=self.right_tail_slope,
        )
        fields.update(changes)
        cls = changes.pop("cls", None) or type(self)
        fields.pop("cls", None)
        return cls(**fields)

    def translate(self, shift: float):
        """The function ``x -> h(x - shift)``."""
        return self._replace(knots=tuple(x + shift for x in self.knots))

    def rescale(self, factor: float):
        """The function ``factor * h``; returns a plain function when ``factor != 1``."""
        if not factor > 0:
            raise NonpositiveScale(f"factor must be positive, got {factor}")
        if factor == 1.0:
            return self
        cls = type(self)
        if cls is LogConcaveDensity:
            cls = LogConcaveFunction
        shift = math.log(factor)
        return self._replace(logvals=tuple(v + shift for v in self.logvals), cls=cls)

    def vertices(self) -> list:
        return list(zip(self.knots, self.logvals))


@dataclass(frozen=True, eq=True)
class LogConcaveFunction(PiecewiseLogLinear):
    """Piecewise log-linear function with concave logarithm."""

    def _validate(self):
        super()._validate()
        slopes = list(self.chord_slopes)
        for a, b in zip(slopes, slopes[1:]):
            if b > a + CONCAVITY_RTOL * (1.0 + abs(a)):
                raise ConcavityViolated(f"chord slope increases from {a} to {b}")
        if slopes:
            sl, sr = self.left_tail_slope, self.right_tail_slope
            if sl is not None and sl < slopes[0] - CONCAVITY_RTOL * (1.0 + abs(sl)):
                raise ConcavityViolated(f"left tail slope {sl} below first chord slope {slopes[0]}")
            if sr is not None and sr > slopes[-1] + CONCAVITY_RTOL * (1.0 + abs(sr)):
                raise ConcavityViolated(f"right tail slope {sr} above last chord slope {slopes[-1]}")


@dataclass(frozen=True, eq=True)
class LogConcaveDensity(LogConcaveFunction):
    """Log-concave probability density (mass one within 1e-9)."""

    def _validate(self):
        super()._validate()
        if abs(self.mass - 1.0) > MASS_TOL:
            raise ValueError(f"density mass {self.mass} differs from 1")

    normalized = True


PiecewiseLogLinear.normalized = False


@dataclass(frozen=True)
class DensityStats:
    mean: float
    median: float
    median_height: float
    total_mass: float
    second_moment: float


def build(
    knots: Iterable[float],
    logvals: Iterable[float],
    left_tail_slope: Optional[float] = None,
    right_tail_slope: Optional[float] = None,
    normalize: bool = False,
):
    """Validate and construct a log-concave function, normalised on request."""
    knots = tuple(float(x) for x in knots)
    logvals = tuple(float(v) for v in logvals)
    if not knots or not logvals:
        raise EmptyInput("knots and log values must be non-empty")
    func = LogConcaveFunction(knots, logvals, left_tail_slope, right_tail_slope)
    if not normalize:
        return func
    shift = -math.log(func.mass)
    return LogConcaveDensity(
        knots, tuple(v + shift for v in logvals), left_tail_slope, right_tail_slope
    )


def as_density(func: PiecewiseLogLinear) -> LogConcaveDensity:
    """Normalise ``func`` to a probability density."""
    return build(func.knots, func.logvals, func.left_tail_slope, func.right_tail_slope, normalize=True)


def stats(d: PiecewiseLogLinear) -> DensityStats:
    median = d.quantile(0.5)
    mass = d.mass
    return DensityStats(
        mean=d.moment(1) / mass,
        median=median,
        median_height=d.pdf(median),
        total_mass=mass,
        second_moment=d.moment(2) / mass,
    )


def affine_image(d: PiecewiseLogLinear, scale: float, shift: float = 0.0):
    """Density of ``scale * X + shift`` when ``X`` has density ``d``."""
    if not scale > 0:
        raise NonpositiveScale(f"scale must be positive, got {scale}")
    ls = math.log(scale)
    return d._replace(
        knots=tuple(scale * x + shift for x in d.knots),
        logvals=tuple(v - ls for v in d.logvals),
        left_tail_slope=None if d.left_tail_slope is None else d.left_tail_slope / scale,
        right_tail_slope=None if d.right_tail_slope is None else d.right_tail_slope / scale,
    )


def _piece_on(func: PiecewiseLogLinear, lo: float, hi: float):
    """Piece of ``func`` covering the open interval (lo, hi), or None if h = 0 there."""
    if math.isfinite(lo) and math.isfinite(hi):
        probe = 0.5 * (lo + hi)
    elif math.isfinite(lo):
        probe = lo + 1.0
    elif math.isfinite(hi):
        probe = hi - 1.0
    else:
        probe = 0.0
    i = func.piece_index(probe)
    if i < 0 or i >= len(func.pieces):
        return None
    return func.pieces[i]


def l1_distance(d1: PiecewiseLogLinear, d2: PiecewiseLogLinear) -> float:
    """Exact integral of ``|d1 - d2|`` over the real line.

    On each interval of the merged knot partition ``ln d1 - ln d2`` is affine,
    so the difference changes sign at most once; the crossing is located in
    closed form and the signed piece integrals are summed.
    """
    cuts = sorted(set(d1.knots) | set(d2.knots))
    bounds = [-INF] + cuts + [INF]
    parts = []
    for lo, hi in zip(bounds, bounds[1:]):
        p1 = _piece_on(d1, lo, hi)
        p2 = _piece_on(d2, lo, hi)
        if p1 is None and p2 is None:
            continue
        if p1 is None or p2 is None:
            p = p1 if p2 is None else p2
            parts.append(_piece_moment(p, lo, hi))
            continue
        pieces_split = [(lo, hi)]
        slope = p1[4] - p2[4]
        if math.isfinite(lo) and math.isfinite(hi):
            da = _piece_log(p1, lo) - _piece_log(p2, lo)
            db = _piece_log(p1, hi) - _piece_log(p2, hi)
            if da * db < 0:
                xc = lo + (hi - lo) * (da / (da - db))
                pieces_split = [(lo, xc), (xc, hi)]
        elif slope != 0.0:
            anchor = lo if math.isfinite(lo) else hi
            da = _piece_log(p1, anchor) - _piece_log(p2, anchor)
            xc = anchor - da / slope
            if lo < xc < hi:
                pieces_split = [(lo, xc), (xc, hi)]
        for u, v in pieces_split:
            parts.append(abs(_piece_moment(p1, u, v) - _piece_moment(p2, u, v)))
    return math.fsum(parts)


def log_concave_hull(
    points,
    left_tail_slope: Optional[float] = None,
    right_tail_slope: Optional[float] = None,
) -> LogConcaveFunction:
    """Smallest log-concave function above the points ``(x, ln h(x))``.

    This is the upper concave envelope of the points, continued by the
    optional tail slopes; points that fall below a tail ray are dropped.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise EmptyInput("log_concave_hull needs at least one point")
    best = {}
    for x, y in pts:
        if not math.isfinite(y):
            raise ValueError(f"non-finite log value at x={x}")
        if x not in best or y > best[x]:
            best[x] = y
    ordered = sorted(best.items())
    hull = []
    for p in ordered:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or below the chord hull[-2] -> p
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    if left_tail_slope is not None:
        scores = [y - left_tail_slope * x for x, y in hull]
        hull = hull[int(np.argmax(scores)):]
    if right_tail_slope is not None:
        scores = [y - right_tail_slope * x for x, y in hull]
        hull = hull[: int(np.argmax(scores)) + 1]
    xs, ys = zip(*hull)
    return LogConcaveFunction(xs, ys, left_tail_slope, right_tail_slope)


def random_density(seed: int, n_pieces: int) -> LogConcaveDensity:
    """Seeded random log-concave density with ``n_pieces`` bounded pieces.

    Generator: ``numpy.random.default_rng(seed)``; the first knot is uniform on
    [-2, 2], gaps uniform on [0.2, 2]; the first chord slope is uniform on
    [-2, 2] and each later slope is smaller by a uniform [0.05, 1] step; each
    tail is present with probability 1/2, with slope steeper than the adjacent
    chord (and of the decaying sign) by a uniform [0.1, 1.5] margin.
    """
    if n_pieces < 1:
        raise ValueError("n_pieces must be at least 1")
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-2.0, 2.0)
    gaps = rng.uniform(0.2, 2.0, size=n_pieces)
    knots = np.concatenate([[x0], x0 + np.cumsum(gaps)])
    first = rng.uniform(-2.0, 2.0)
    steps = rng.uniform(0.05, 1.0, size=n_pieces - 1)
    slopes = np.concatenate([[first], first - np.cumsum(steps)])
    logvals = np.concatenate([[0.0], np.cumsum(slopes * gaps)])
    has_left, has_right = rng.random(2) < 0.5
    margins = rng.uniform(0.1, 1.5, size=2)
    left = max(slopes[0], 0.0) + margins[0] if has_left else None
    right = min(slopes[-1], 0.0) - margins[1] if has_right else None
    return build(knots, logvals, left, right, normalize=True)
