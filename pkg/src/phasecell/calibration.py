"""Build the four-section calibration table from a 0-360 degree sweep.

Pipeline: normalize each channel by its sweep extrema, estimate the
quadrature deviation from the rising zero crossings, partition the circle
with the runtime selector, then fit each section with a minimax line.

Each section is fitted over its linearized range: a window centred on the
selected curve's zero crossing that reaches the farthest selector
boundary. For a deviation d the selector regions stay 90 degrees wide but
sit d/2 off the curve centre, so the window is 90 + |d| wide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .detector import wrap_deg
from .errors import PreconditionError
from .linfit import LineFit, minimax_line_data
from .sections import SECTION_ORDER, Curve, SectionId, SlopeSign, select_index

MAX_SWEEP_STEP = 2.0
DEAD_BRANCH_V = 1e-3


@dataclass(frozen=True)
class SweepRecord:
    phase_set: float
    vdi: float
    vdq: float


@dataclass(frozen=True)
class ChannelNorm:
    gain: float
    offset: float

    def __call__(self, v):
        return (np.asarray(v, dtype=float) - self.offset) / self.gain


@dataclass(frozen=True)
class Section:
    curve: Curve
    slope_sign: SlopeSign
    center: float
    fit: LineFit
    domain: Tuple[float, float]
    v_bounds: Tuple[float, float]

    @property
    def id(self) -> SectionId:
        return SectionId(self.curve, self.slope_sign)

    def contains(self, theta: float) -> bool:
        lo, hi = self.domain
        t = lo + (theta - lo) % 360.0
        return t <= hi


@dataclass(frozen=True)
class CalibrationTable:
    norm_i: ChannelNorm
    norm_q: ChannelNorm
    delta_hat: float
    sections: Tuple[Section, Section, Section, Section]

    def __post_init__(self):
        ids = tuple(s.id for s in self.sections)
        if ids != SECTION_ORDER:
            raise PreconditionError(f"sections must be ordered {SECTION_ORDER}, got {ids}")
        if not abs(self.delta_hat) < 90:
            raise PreconditionError(f"delta_hat {self.delta_hat} outside (-90, 90)")

    def section_at(self, theta: float) -> Optional[int]:
        """Index of the first section whose domain holds ``theta``."""
        for k, s in enumerate(self.sections):
            if s.contains(theta):
                return k
        return None

    def coverage_gaps(self, step: float = 0.1) -> List[float]:
        grid = np.arange(0.0, 360.0, step)
        return [float(t) for t in grid if self.section_at(float(t)) is None]


@dataclass
class _Sweep:
    phase: np.ndarray
    vi: np.ndarray
    vq: np.ndarray
    step: float

    def periodic(self, values):
        """Sample phases and values extended by one period on each side."""
        p = np.concatenate([self.phase - 360.0, self.phase, self.phase + 360.0])
        return p, np.tile(values, 3)


def _as_sweep(records: Sequence[SweepRecord]) -> _Sweep:
    if len(records) < 3:
        raise PreconditionError("sweep needs at least 3 records")
    phase = np.array([r.phase_set for r in records], dtype=float)
    vi = np.array([r.vdi for r in records], dtype=float)
    vq = np.array([r.vdq for r in records], dtype=float)
    if not (np.all(np.isfinite(phase)) and np.all(np.isfinite(vi)) and np.all(np.isfinite(vq))):
        raise PreconditionError("sweep contains non-finite values")
    gaps = np.diff(phase)
    if np.any(gaps <= 0):
        raise PreconditionError("sweep phases must be strictly increasing without duplicates")
    # Anything at or past one full turn repeats the start of the circle.
    keep = phase < phase[0] + 360.0
    phase, vi, vq = phase[keep], vi[keep], vq[keep]
    closing = phase[0] + 360.0 - phase[-1]
    step = float(max(np.max(np.diff(phase)), closing))
    if step > MAX_SWEEP_STEP:
        raise PreconditionError(
            f"sweep must span 360 deg at step <= {MAX_SWEEP_STEP} deg "
            f"(largest gap {step:.3g} deg)")
    return _Sweep(phase, vi, vq, step)


def _records(phase, vi, vq) -> List[SweepRecord]:
    return [SweepRecord(float(p), float(a), float(b)) for p, a, b in zip(phase, vi, vq)]


def _circular_smooth(v, width=5):
    pad = width // 2
    ext = np.concatenate([v[-pad:], v, v[:pad]])
    return np.convolve(ext, np.ones(width) / width, mode="valid")


def _channel_norm(v, smooth: bool, name: str) -> ChannelNorm:
    src = _circular_smooth(v) if smooth else v
    hi, lo = float(np.max(src)), float(np.min(src))
    gain = (hi - lo) / 2.0
    if gain < DEAD_BRANCH_V:
        raise PreconditionError(f"dead branch: {name} channel swing {2 * gain:.3g} V")
    return ChannelNorm(gain=gain, offset=(hi + lo) / 2.0)


def normalize_sweep(records: Sequence[SweepRecord], smooth: bool = False):
    """Per-channel extrema normalization to [-1, 1].

    With ``smooth`` the extrema are read from a 5-point circular moving
    average, which keeps single noisy samples from setting the scale.
    """
    sw = _as_sweep(records)
    norm_i = _channel_norm(sw.vi, smooth, "in-phase")
    norm_q = _channel_norm(sw.vq, smooth, "quadrature")
    return _records(sw.phase, norm_i(sw.vi), norm_q(sw.vq)), norm_i, norm_q


def _zero_crossings(phase, v, rising: Optional[bool]):
    """Interpolated zero crossings on the closed circle."""
    p_next = np.append(phase[1:], phase[0] + 360.0)
    v_next = np.append(v[1:], v[0])
    if rising is None:
        mask = ((v < 0) & (v_next >= 0)) | ((v >= 0) & (v_next < 0))
    elif rising:
        mask = (v < 0) & (v_next >= 0)
    else:
        mask = (v >= 0) & (v_next < 0)
    idx = np.nonzero(mask)[0]
    frac = -v[idx] / (v_next[idx] - v[idx])
    return phase[idx] + frac * (p_next[idx] - phase[idx]), np.abs(v_next[idx] - v[idx])


def _rising_zero(phase, v, name: str) -> float:
    where, jump = _zero_crossings(phase, v, rising=True)
    if len(where) == 0:
        raise PreconditionError(f"no rising zero crossing in the {name} channel")
    return float(where[np.argmax(jump)])


def estimate_deviation(normalized: Sequence[SweepRecord]) -> float:
    """Quadrature deviation from 90 degrees, relative to the I channel.

    The result is reduced modulo 180, so a sign-inverted quadrature channel
    reports the same deviation.
    """
    sw = _as_sweep(normalized)
    q_zero = _rising_zero(sw.phase, sw.vq, "quadrature")
    i_zero = _rising_zero(sw.phase, sw.vi, "in-phase")
    d = q_zero - (i_zero + 90.0)
    return float((d + 90.0) % 180.0 - 90.0)


@dataclass(frozen=True)
class _Run:
    first: float
    last: float
    edge_lo: float
    edge_hi: float


def _selector_runs(sw: _Sweep) -> List[_Run]:
    labels = select_index(sw.vi, sw.vq)
    n = len(labels)
    starts = [k for k in range(n) if labels[k] != labels[k - 1]]
    if len(starts) != 4 or sorted(labels[starts]) != [0, 1, 2, 3]:
        raise PreconditionError(
            f"selector produced {len(starts)} contiguous runs; expected one per section")
    d = np.abs(sw.vq) - np.abs(sw.vi)
    runs = [None] * 4
    for j, s in enumerate(starts):
        e = (starts[(j + 1) % 4] - 1) % n
        first = sw.phase[s]
        last = sw.phase[e] + (360.0 if e < s else 0.0)
        runs[labels[s]] = (first, last, s, e)

    def boundary(k_before):
        # Between sample k_before and its successor on the circle; the
        # crossing variable depends on which selector test flipped.
        k_after = (k_before + 1) % n
        p0 = sw.phase[k_before]
        p1 = sw.phase[k_after] + (360.0 if k_after == 0 else 0.0)
        a, b = labels[k_before], labels[k_after]
        if a % 2 != b % 2:
            f = d
        else:
            f = sw.vi if a % 2 == 0 else sw.vq
        f0, f1 = f[k_before], f[k_after]
        if f1 == f0:
            return 0.5 * (p0 + p1)
        return p0 + (p1 - p0) * float(np.clip(-f0 / (f1 - f0), 0.0, 1.0))

    out = []
    for first, last, s, e in runs:
        lo = boundary((s - 1) % n)
        if lo > first:
            lo -= 360.0
        hi = boundary(e)
        while hi < last:
            hi += 360.0
        out.append(_Run(first, last, lo, hi))
    return out


def partition_sections(normalized: Sequence[SweepRecord]) -> List[Tuple[float, float]]:
    """Selector-driven section intervals, widened by one sweep step."""
    sw = _as_sweep(normalized)
    return [(r.first - sw.step, r.last + sw.step) for r in _selector_runs(sw)]


def linearized_ranges(normalized: Sequence[SweepRecord]) -> List[Tuple[float, float]]:
    """(centre, linearized range) per section: window about the curve zero."""
    sw = _as_sweep(normalized)
    out = []
    for sid, run in zip(SECTION_ORDER, _selector_runs(sw)):
        center = _section_center(sw, sid, run)
        out.append((center, 2.0 * max(center - run.edge_lo, run.edge_hi - center)))
    return out


def _section_center(sw: _Sweep, sid: SectionId, run: _Run) -> float:
    v = sw.vq if sid.curve is Curve.QUADRATURE else sw.vi
    where, _ = _zero_crossings(sw.phase, v, rising=None)
    if len(where) == 0:
        raise PreconditionError(f"{sid} curve never crosses zero")
    mid = 0.5 * (run.edge_lo + run.edge_hi)
    where = mid + wrap_deg(where - mid)
    inside = where[(where >= run.edge_lo) & (where <= run.edge_hi)]
    if len(inside) == 0:
        raise PreconditionError(f"{sid} curve has no zero crossing inside its section")
    return float(inside[np.argmin(np.abs(inside - mid))])


def _fit_section(sw: _Sweep, sid: SectionId, run: _Run) -> Section:
    v = sw.vq if sid.curve is Curve.QUADRATURE else sw.vi
    center_raw = _section_center(sw, sid, run)
    center = wrap_deg(center_raw)
    shift = center - center_raw
    half = max(center_raw - run.edge_lo, run.edge_hi - center_raw)
    p, vals = sw.periodic(v)
    p = p + shift
    lo_w, hi_w = center - half, center + half
    sel = (p > lo_w) & (p < hi_w)
    edges = np.array([lo_w, hi_w])
    phases = np.concatenate([edges, p[sel]])
    volts = np.concatenate([np.interp(edges, p, vals), vals[sel]])
    fit = minimax_line_data(np.column_stack([volts, phases]))
    dom = (run.first - sw.step + shift, run.last + sw.step + shift)
    v_bounds = tuple(float(x) for x in np.interp(dom, p, vals))
    return Section(sid.curve, sid.slope_sign, center, fit, dom, v_bounds)


def build_table(records: Sequence[SweepRecord], smooth: bool = False) -> CalibrationTable:
    normalized, norm_i, norm_q = normalize_sweep(records, smooth=smooth)
    sw = _as_sweep(normalized)
    if smooth:
        # The symmetric kernel leaves zero crossings of a sinusoid in place.
        sw = _Sweep(sw.phase, _circular_smooth(sw.vi), _circular_smooth(sw.vq), sw.step)
        normalized = _records(sw.phase, sw.vi, sw.vq)
    delta_hat = estimate_deviation(normalized)
    runs = _selector_runs(sw)
    sections = tuple(_fit_section(sw, sid, run) for sid, run in zip(SECTION_ORDER, runs))
    return CalibrationTable(norm_i, norm_q, delta_hat, sections)
