"""Minimax (Chebyshev) straight-line fits for arcsine-like sections.

Two engines live here:

* :func:`minimax_line_sine` solves the symmetric continuous problem
  ``min_a max_{|t| <= lr/2} |a sin(t) - t|`` by its equioscillation
  condition (interior extremum balances the endpoint error).
* :func:`minimax_line_data` is the exact discrete Chebyshev line fit. The
  width ``max(theta - s v) - min(theta - s v)`` is convex and piecewise
  linear in ``s`` with breakpoints at convex-hull edge slopes, so the
  optimum is found by evaluating those slopes only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import PreconditionError

DEG_PER_RAD = 180.0 / math.pi


@dataclass(frozen=True)
class LineFit:
    """``theta_hat = slope * v + intercept`` with its worst-case error.

    ``max_err`` is None when the fit came from a binary table, which does
    not store it.
    """

    slope: float
    intercept: float
    max_err: Optional[float]

    def __call__(self, v):
        return self.slope * np.asarray(v, dtype=float) + self.intercept


@dataclass(frozen=True)
class LrErrorCurve:
    samples: Tuple[Tuple[float, float], ...]

    @property
    def lr(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def max_err(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])


def minimax_line_sine(lr: float) -> LineFit:
    """Best zero-intercept line mapping ``sin(theta)`` back to ``theta``.

    ``lr`` is the full linearized range in degrees, centred on zero.
    """
    if not 0 < lr < 180:
        raise PreconditionError(f"linearized range {lr} outside (0, 180)")
    half = math.radians(lr / 2.0)
    a_hi = half / math.sin(half)

    def balance(a):
        t = math.acos(1.0 / a)
        return (a * math.sin(t) - t) + (a * math.sin(half) - half)

    if a_hi - 1.0 < 1e-13:
        a = 1.0
    else:
        a = brentq(balance, 1.0, a_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    err = (half - a * math.sin(half)) * DEG_PER_RAD
    return LineFit(slope=a * DEG_PER_RAD, intercept=0.0, max_err=max(err, 0.0))


def _hull_chain(v, t, upper: bool):
    """Monotone-chain half hull over points pre-sorted by v."""
    chain = []
    for i in range(len(v)):
        while len(chain) >= 2:
            j, k = chain[-2], chain[-1]
            cross = (v[k] - v[j]) * (t[i] - t[j]) - (t[k] - t[j]) * (v[i] - v[j])
            if (cross >= 0) if upper else (cross <= 0):
                chain.pop()
            else:
                break
        chain.append(i)
    return chain


def _as_points(points) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise PreconditionError("points must be a sequence of (v, theta) pairs")
    if arr.shape[0] < 3:
        raise PreconditionError(f"need at least 3 points, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("points must be finite")
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    return arr[order, 0], arr[order, 1]


def minimax_line_data(points: Sequence[Tuple[float, float]]) -> LineFit:
    """Exact discrete Chebyshev line through ``(v, theta)`` samples."""
    v, t = _as_points(points)
    if v[-1] == v[0]:
        raise PreconditionError("all v values are equal; slope is undefined")

    slopes = []
    for chain in (_hull_chain(v, t, True), _hull_chain(v, t, False)):
        for j, k in zip(chain, chain[1:]):
            if v[k] != v[j]:
                slopes.append((t[k] - t[j]) / (v[k] - v[j]))
    slopes = np.unique(np.asarray(slopes))

    best = None
    for chunk in np.array_split(slopes, max(1, len(slopes) * len(v) // 2_000_000 + 1)):
        resid = t[None, :] - chunk[:, None] * v[None, :]
        hi, lo = resid.max(axis=1), resid.min(axis=1)
        k = int(np.argmin(hi - lo))
        cand = (hi[k] - lo[k], chunk[k], hi[k], lo[k])
        if best is None or cand[0] < best[0]:
            best = cand
    width, slope, hi, lo = best
    fit = LineFit(slope=float(slope), intercept=float((hi + lo) / 2),
                  max_err=float(width / 2))
    if not equioscillates(points, fit):
        raise RuntimeError("discrete minimax fit failed its optimality certificate")
    return fit


def _extremal(points, fit: LineFit, rtol: float):
    """Sorted points, residuals and extremal indices; None if max_err is stale."""
    v, t = _as_points(points)
    resid = t - (fit.slope * v + fit.intercept)
    err = float(np.max(np.abs(resid)))
    scale = max(err, float(np.max(np.abs(t))), 1.0)
    if err <= 1e-12 * scale:
        return v, resid, np.array([], dtype=int)
    if fit.max_err is not None and abs(err - fit.max_err) > rtol * scale:
        return None
    return v, resid, np.nonzero(np.abs(resid) >= err - rtol * scale)[0]


def equioscillation_points(points, fit: LineFit, rtol: float = 1e-9):
    """Indices (in v order) of alternating extremal points, or None.

    Points sharing a v value may be taken in either order, so a vertical
    pair of opposite residuals counts as one alternation. Returns an empty
    list for an exact (zero-error) fit.
    """
    ext = _extremal(points, fit, rtol)
    if ext is None:
        return None
    v, resid, idx = ext
    if len(idx) == 0:
        return []
    picked, last = [], 0
    for x in np.unique(v[idx]):
        group = [int(i) for i in idx if v[i] == x]
        # Take the residual sign that continues the alternation first.
        group.sort(key=lambda i: (resid[i] > 0) == (last > 0))
        for i in group:
            s = 1 if resid[i] > 0 else -1
            if s != last:
                picked.append(i)
                last = s
    if len(picked) >= 3:
        return picked[:3]
    if len(picked) == 2 and v[picked[0]] == v[picked[1]]:
        return picked
    return None


def equioscillates(points, fit: LineFit, rtol: float = 1e-9) -> bool:
    """Optimality certificate for a Chebyshev line fit.

    The fit is optimal iff the v spans of the positive and negative
    extremal residuals overlap, so no slope change can shrink both.
    """
    ext = _extremal(points, fit, rtol)
    if ext is None:
        return False
    v, resid, idx = ext
    if len(idx) == 0:
        return True
    pos, neg = v[idx][resid[idx] > 0], v[idx][resid[idx] < 0]
    if len(pos) == 0 or len(neg) == 0:
        return False
    return bool(max(pos.min(), neg.min()) <= min(pos.max(), neg.max()))


def error_vs_lr(lr_min: float, lr_max: float, step: float) -> LrErrorCurve:
    if not 0 < lr_min < lr_max < 180:
        raise PreconditionError("need 0 < lr_min < lr_max < 180")
    if not step > 0:
        raise PreconditionError("step must be positive")
    n = int(math.floor((lr_max - lr_min) / step + 1e-9)) + 1
    grid = lr_min + step * np.arange(n)
    return LrErrorCurve(tuple(
        (float(lr), minimax_line_sine(float(lr)).max_err) for lr in grid))


def required_lr(deviation: float) -> float:
    """Linearized range that closes the 360 degree circle for a deviation."""
    if not abs(deviation) < 90:
        raise PreconditionError(f"deviation {deviation} outside (-90, 90)")
    return 90.0 + abs(deviation)


def max_admissible_deviation(err_budget: float) -> float:
    """Largest quadrature deviation whose fit error stays within budget."""
    floor = minimax_line_sine(90.0).max_err
    if err_budget < floor:
        raise PreconditionError(
            f"error budget {err_budget} below the {floor:.4f} deg floor at LR 90")

    def ok(d):
        return minimax_line_sine(required_lr(d)).max_err <= err_budget

    lo, hi = 0.0, 90.0 - 1e-9
    if ok(hi):
        return hi
    while hi - lo > 1e-5:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
