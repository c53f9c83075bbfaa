"""Runtime phase recovery from one I/Q reading.

The float path works on a :class:`CalibrationTable`. The fixed path takes
the encoded table image and ADC codes and uses only integer arithmetic
whose per-sample intermediates fit in signed 32 bits (checked).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .calibration import CalibrationTable
from .detector import AdcParams, code_to_volts, wrap_deg
from .errors import PreconditionError
from .sections import SECTION_ORDER, Curve, SectionId, select_index
from .tableio import unpack_table

IQ_LIMIT = 1.25


@dataclass(frozen=True)
class IqNormalized:
    vdi_n: float
    vdq_n: float

    def __post_init__(self):
        for name in ("vdi_n", "vdq_n"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise PreconditionError(f"{name} is not finite")
            if abs(v) > IQ_LIMIT:
                raise PreconditionError(f"{name}={v} outside +/-{IQ_LIMIT}")


def select_section(iq: IqNormalized) -> SectionId:
    return SECTION_ORDER[select_index(iq.vdi_n, iq.vdq_n)]


def normalize_codes(code_i, code_q, table: CalibrationTable, adc: AdcParams):
    """Float normalization of raw ADC codes with the table's channel scales."""
    return (table.norm_i(code_to_volts(code_i, adc)),
            table.norm_q(code_to_volts(code_q, adc)))


def estimate_phase_array(vdi_n, vdq_n, table: CalibrationTable) -> np.ndarray:
    """Vectorized :func:`estimate_phase` over arrays of normalized I/Q."""
    vi = np.asarray(vdi_n, dtype=float)
    vq = np.asarray(vdq_n, dtype=float)
    if not (np.all(np.isfinite(vi)) and np.all(np.isfinite(vq))):
        raise PreconditionError("normalized I/Q must be finite")
    if np.any(np.abs(vi) > IQ_LIMIT) or np.any(np.abs(vq) > IQ_LIMIT):
        raise PreconditionError(f"normalized I/Q outside +/-{IQ_LIMIT}")
    idx = select_index(vi, vq)
    out = np.empty(np.broadcast(vi, vq).shape)
    for k, sec in enumerate(table.sections):
        m = idx == k
        if not np.any(m):
            continue
        v = vq[m] if sec.curve is Curve.QUADRATURE else vi[m]
        v = np.clip(v, min(sec.v_bounds), max(sec.v_bounds))
        out[m] = sec.fit.slope * v + sec.fit.intercept
    return wrap_deg(out)


def estimate_phase(iq: IqNormalized, table: CalibrationTable) -> float:
    """Phase shift in degrees, wrapped to (-180, 180]."""
    sec = table.sections[select_index(iq.vdi_n, iq.vdq_n)]
    v = iq.vdq_n if sec.curve is Curve.QUADRATURE else iq.vdi_n
    v = min(max(v, min(sec.v_bounds)), max(sec.v_bounds))
    return wrap_deg(sec.fit.slope * v + sec.fit.intercept)


def baseline_single(vd_n: float) -> Tuple[float, float]:
    """Single-multiplier arcsine inversion and its mirrored alternative.

    Only the first value is what a lone detector reports; the second,
    ``180 - asin``, is the solution it cannot tell apart.
    """
    if not abs(vd_n) <= 1:
        raise PreconditionError(f"|vd_n|={abs(vd_n)} > 1 has no arcsine")
    primary = math.degrees(math.asin(vd_n))
    return primary, wrap_deg(180.0 - primary)


# -- integer path ---------------------------------------------------------

_I32_MIN, _I32_MAX = -(1 << 31), (1 << 31) - 1


def _i32(x: int) -> int:
    if not _I32_MIN <= x <= _I32_MAX:
        raise OverflowError(f"intermediate {x} overflows int32")
    return x


def _div_round(num: int, den: int) -> int:
    """Integer division rounded half away from zero (den > 0)."""
    q = (abs(num) + den // 2) // den
    return q if num >= 0 else -q


def mul_q15(a: int, v: int) -> int:
    """``round(a * v / 2**15)`` with 32-bit partial products.

    ``v`` is split into a signed high byte and unsigned low byte so each
    partial product stays below 2**31 for |a| < 2**22 and |v| <= 2**15.
    """
    hi, lo = v >> 8, v & 0xFF
    p1 = _i32(a * hi)
    p2 = _i32(a * lo)
    acc = _i32(p1 + (p2 >> 8))
    return _i32(acc + 64) >> 7


@dataclass(frozen=True)
class _FixedSection:
    curve: int
    slope_md: int
    intercept_cd: int
    v_lo: int
    v_hi: int


@dataclass(frozen=True)
class FixedChannel:
    """``code -> code * mul - zero``: normalized Q15 scaled by ``2**shift``.

    ``mul`` is kept even and ``zero = round(mul * z)`` for the exact
    zero-volt code ``z``, so two readings symmetric about a half-integer
    zero code map to exactly opposite values.
    """

    mul: int
    zero: int

    def scaled(self, code: int) -> int:
        return _i32(_i32(code * self.mul) - self.zero)


@dataclass(frozen=True)
class FixedTable:
    """Integer constants loaded once per (table image, ADC) pair.

    The one-off derivation uses wide integers; per-sample work does not.
    """

    ch_i: FixedChannel
    ch_q: FixedChannel
    shift: int
    sections: Tuple[_FixedSection, ...]


def _adc_integers(adc: AdcParams) -> Tuple[int, int]:
    """Detector-referred (base in nV, step in pV per code)."""
    base = (adc.v_min - adc.conditioner_offset) / adc.conditioner_gain
    step = (adc.v_max - adc.v_min) / adc.max_code / adc.conditioner_gain
    return round(base * 1e9), round(step * 1e12)


@functools.lru_cache(maxsize=64)
def load_fixed_table(encoded: bytes, adc: AdcParams) -> FixedTable:
    header, raw_sections = unpack_table(encoded)
    _, _, _, gi, oi, gq, oq = header
    if gi <= 0 or gq <= 0:
        raise PreconditionError("table channel gains must be positive")
    base_nv, step_pv = _adc_integers(adc)

    def channel(gain_uv, off_uv, shift):
        mul = 2 * _div_round(step_pv << (15 + shift), 2 * gain_uv * 10**6)
        zero = _div_round(mul * (off_uv * 10**6 - base_nv * 1000), step_pv)
        return FixedChannel(mul, zero)

    def fits(shift):
        for g, o in ((gi, oi), (gq, oq)):
            ch = channel(g, o, shift)
            span = max(abs(ch.zero), abs(adc.max_code * ch.mul - ch.zero))
            if abs(adc.max_code * ch.mul) > _I32_MAX or span + (1 << shift) > _I32_MAX:
                return False
        return True

    shift = next((s for s in range(16, -1, -1) if fits(s)), None)
    if shift is None:
        raise PreconditionError("ADC/table scaling cannot be represented in 32 bits")
    sections = []
    for curve, _, _, slope, intercept, _, _, vlo, vhi in raw_sections:
        if abs(slope) >= 1 << 22:
            raise PreconditionError(f"slope {slope} md/unit exceeds the 32-bit multiply range")
        sections.append(_FixedSection(curve, slope, intercept, min(vlo, vhi), max(vlo, vhi)))
    return FixedTable(channel(gi, oi, shift), channel(gq, oq, shift), shift, tuple(sections))


def estimate_phase_fixed(code_i: int, code_q: int, encoded_table: bytes,
                         adc: AdcParams) -> int:
    """Integer-only phase estimate in centidegrees, wrapped to (-18000, 18000]."""
    ft = load_fixed_table(bytes(encoded_table), adc)
    code_i, code_q = int(code_i), int(code_q)
    if not (0 <= code_i <= adc.max_code and 0 <= code_q <= adc.max_code):
        raise PreconditionError("ADC codes outside the converter range")
    # Selection runs on the unshifted values for the extra resolution.
    wi = ft.ch_i.scaled(code_i)
    wq = ft.ch_q.scaled(code_q)
    if abs(wq) <= abs(wi):
        k = 0 if wi >= 0 else 2
    else:
        k = 1 if wq >= 0 else 3
    sec = ft.sections[k]
    w = wq if sec.curve == Curve.QUADRATURE else wi
    v = _i32(w + ((1 << ft.shift) >> 1)) >> ft.shift
    v = min(max(v, sec.v_lo), sec.v_hi)
    md = _i32(mul_q15(sec.slope_md, v) + sec.intercept_cd * 10)
    cd = (md + 5) // 10
    while cd > 18000:
        cd -= 36000
    while cd <= -18000:
        cd += 36000
    return cd
