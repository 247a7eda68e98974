"""Adaptive Simpson quadrature with an explicit error budget."""

from __future__ import annotations

import math
from typing import Callable

from .errors import ToleranceNotReached

MAX_EVALS = 2_000_000
MAX_DEPTH = 60


def adaptive_simpson(
    fn: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    max_evals: int = MAX_EVALS,
) -> tuple:
    """Integrate ``fn`` over the finite interval ``[a, b]``.

    Returns ``(value, error_estimate)``.  Subintervals are processed in a
    fixed left-to-right order so the result is deterministic.  The local
    acceptance test is the classical ``|S2 - S1| <= 15 * tol_local`` with
    Richardson correction.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("adaptive_simpson needs a finite interval")
    if b <= a:
        return 0.0, 0.0
    fa, fm, fb = fn(a), fn(0.5 * (a + b)), fn(b)
    evals = 3
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    parts = []
    err_total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl = fn(0.5 * (lo + mid))
        fr = fn(0.5 * (mid + hi))
        evals += 2
        left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi)
        delta = left + right - est
        if abs(delta) <= 15.0 * eps or depth >= MAX_DEPTH or hi - lo <= 4 * math.ulp(mid):
            if abs(delta) > 15.0 * eps and depth >= MAX_DEPTH:
                raise ToleranceNotReached(f"depth limit reached on [{lo}, {hi}]")
            parts.append(left + right + delta / 15.0)
            err_total += abs(delta) / 15.0
            continue
        if evals > max_evals:
            raise ToleranceNotReached(f"evaluation budget {max_evals} exhausted on [{a}, {b}]")
        # right pushed first so the left half is finished first
        stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, fl, fmid, left, 0.5 * eps, depth + 1))
    return math.fsum(parts), err_total
