"""Behavioral model of the switched dual-multiplier phase detector cell.

Only the post low-pass DC levels are modeled. The in-phase branch
(both switches on the 0 degree path) produces

    vdi = gain_i * g(da + eps_i) + offset_i

and the quadrature branch (SW1 on the 90 degree hybrid path) produces

    vdq = gain_q * g(da - delta_q - 90) + offset_q

with ``g(x) = cos(x) + sum_n a_n cos(n x + psi_n)``. Without distortion
the quadrature curve is ``gain_q * sin(da - delta_q) + offset_q``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import PreconditionError


def wrap_deg(angle):
    """Wrap an angle (scalar or array, degrees) into (-180, 180]."""
    a = np.asarray(angle, dtype=float)
    out = a - 360.0 * np.ceil((a - 180.0) / 360.0)
    if out.ndim == 0:
        return float(out)
    return out


class Path(enum.Enum):
    P0 = "Path0"
    P90 = "Path90"


class SwitchState(NamedTuple):
    sw1: Path
    sw0: Path


IN_PHASE = SwitchState(Path.P0, Path.P0)
QUADRATURE = SwitchState(Path.P90, Path.P0)
ALL_SWITCH_STATES = tuple(SwitchState(a, b) for a in Path for b in Path)


@dataclass(frozen=True)
class DetectorParams:
    gain_i: float = 1.0
    gain_q: float = 1.0
    offset_i: float = 0.0
    offset_q: float = 0.0
    delta_q: float = 0.0
    eps_i: float = 0.0
    # (order, relative amplitude, phase in degrees)
    harmonics: Tuple[Tuple[int, float, float], ...] = ()
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "harmonics",
            tuple((int(n), float(a), float(p)) for n, a, p in self.harmonics))
        if not (self.gain_i > 0 and self.gain_q > 0):
            raise PreconditionError("detector gains must be positive")
        if not abs(self.delta_q) < 90:
            raise PreconditionError(
                f"quadrature deviation {self.delta_q} outside (-90, 90)")
        for n, a, _ in self.harmonics:
            if n < 2:
                raise PreconditionError(f"harmonic order {n} < 2")
            if not 0 <= a < 1:
                raise PreconditionError(f"harmonic amplitude {a} outside [0, 1)")
        if not self.noise_sigma >= 0:
            raise PreconditionError("noise_sigma must be >= 0")

    def with_deviation(self, delta_q: float) -> "DetectorParams":
        return dataclasses.replace(self, delta_q=delta_q)


@dataclass(frozen=True)
class AdcParams:
    bits: int = 10
    v_min: float = -1.5
    v_max: float = 1.5
    conditioner_gain: float = 1.0
    conditioner_offset: float = 0.0

    def __post_init__(self):
        if not self.v_max > self.v_min:
            raise PreconditionError("ADC range requires v_max > v_min")
        if not 2 <= self.bits <= 16:
            raise PreconditionError(f"ADC bits {self.bits} outside [2, 16]")
        if self.conditioner_gain == 0:
            raise PreconditionError("conditioner gain must be non-zero")

    @property
    def max_code(self) -> int:
        return (1 << self.bits) - 1

    @property
    def lsb(self) -> float:
        """Detector-referred volts per code."""
        return (self.v_max - self.v_min) / self.max_code / abs(self.conditioner_gain)


@dataclass(frozen=True)
class FrequencyProfile:
    """Quadrature deviation versus frequency, linearly interpolated."""

    anchors: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        anchors = tuple((float(f), float(d)) for f, d in self.anchors)
        object.__setattr__(self, "anchors", anchors)
        if not anchors:
            raise PreconditionError("frequency profile needs at least one anchor")
        freqs = [f for f, _ in anchors]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise PreconditionError("profile frequencies must be strictly increasing")

    @property
    def span(self) -> Tuple[float, float]:
        return self.anchors[0][0], self.anchors[-1][0]

    def deviation_at(self, freq_ghz: float) -> float:
        lo, hi = self.span
        if not lo <= freq_ghz <= hi:
            raise PreconditionError(
                f"frequency {freq_ghz} GHz outside profile span [{lo}, {hi}]")
        f, d = zip(*self.anchors)
        return float(np.interp(freq_ghz, f, d))


def transfer_curve(x_deg, harmonics: Sequence[Tuple[int, float, float]] = ()):
    """Normalized detector transfer ``g(x)`` (cosine plus harmonics)."""
    x = np.radians(np.asarray(x_deg, dtype=float))
    y = np.cos(x)
    for n, a, psi in harmonics:
        y = y + a * np.cos(n * x + math.radians(psi))
    return y


def branch_voltage(delta_alpha, sw: SwitchState, params: DetectorParams,
                   rng_seed: Optional[int] = None):
    """Low-pass output of one multiplier branch for the given switch state.

    Accepts a scalar or an array of phase shifts; one noise sample is drawn
    per element. Only the in-phase and quadrature switch states are wired
    to the measurement sequence; the other two raise.
    """
    if sw == IN_PHASE:
        x = np.asarray(delta_alpha, dtype=float) + params.eps_i
        gain, offset = params.gain_i, params.offset_i
    elif sw == QUADRATURE:
        x = np.asarray(delta_alpha, dtype=float) - params.delta_q - 90.0
        gain, offset = params.gain_q, params.offset_q
    else:
        raise PreconditionError(f"switch state {sw} is not used by the cell")
    v = gain * transfer_curve(x, params.harmonics) + offset
    if params.noise_sigma > 0:
        rng = np.random.default_rng(rng_seed)
        v = v + rng.normal(0.0, params.noise_sigma, size=np.shape(v))
    if np.ndim(v) == 0:
        return float(v)
    return v


def adc_quantize(v, adc: AdcParams):
    """Condition and quantize a voltage; saturates at the rails.

    Rounding is half away from zero on the scaled value, so the exact
    midpoint of a 10-bit range maps to code 512.
    """
    u = adc.conditioner_gain * np.asarray(v, dtype=float) + adc.conditioner_offset
    u = np.clip(u, adc.v_min, adc.v_max)
    scaled = (u - adc.v_min) / (adc.v_max - adc.v_min) * adc.max_code
    code = np.floor(scaled + 0.5).astype(np.int64)
    if code.ndim == 0:
        return int(code)
    return code


def code_to_volts(code, adc: AdcParams):
    """Detector-referred voltage at the centre of an ADC code."""
    u = adc.v_min + np.asarray(code, dtype=float) * (adc.v_max - adc.v_min) / adc.max_code
    v = (u - adc.conditioner_offset) / adc.conditioner_gain
    if np.ndim(v) == 0:
        return float(v)
    return v


def _child_seeds(rng_seed: Optional[int], n: int):
    if rng_seed is None:
        return [None] * n
    children = np.random.SeedSequence(rng_seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def measure_voltages(delta_alpha, params: DetectorParams,
                     rng_seed: Optional[int] = None):
    """Analog (vdi, vdq) pair with independent noise per switch state."""
    seed_i, seed_q = _child_seeds(rng_seed, 2)
    vdi = branch_voltage(delta_alpha, IN_PHASE, params, seed_i)
    vdq = branch_voltage(delta_alpha, QUADRATURE, params, seed_q)
    return vdi, vdq


def measure_pair(delta_alpha, params: DetectorParams, adc: AdcParams,
                 rng_seed: Optional[int] = None):
    """Switch to the in-phase then quadrature state and digitize each."""
    vdi, vdq = measure_voltages(delta_alpha, params, rng_seed)
    return adc_quantize(vdi, adc), adc_quantize(vdq, adc)
