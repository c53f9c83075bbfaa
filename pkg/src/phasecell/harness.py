"""Scenario plumbing: sweep simulation, calibration runs, error evaluation."""

from __future__ import annotations

import dataclasses
import io
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .calibration import CalibrationTable, SweepRecord, build_table
from .detector import (AdcParams, DetectorParams, FrequencyProfile, adc_quantize,
                       code_to_volts, measure_pair, measure_voltages, wrap_deg)
from .errors import InputFormatError, PreconditionError
from .estimator import estimate_phase_array, estimate_phase_fixed, normalize_codes
from .linfit import error_vs_lr
from .tableio import encode_table


@dataclass(frozen=True)
class ScenarioConfig:
    detector: DetectorParams = DetectorParams()
    # None means an ideal, infinite-resolution converter.
    adc: Optional[AdcParams] = AdcParams()
    sweep_step: float = 1.0
    eval_step: float = 0.1
    seed: int = 0
    frequency: Optional[float] = None
    profile: Optional[FrequencyProfile] = None
    sweep_adc: bool = False

    def __post_init__(self):
        if not (self.sweep_step > 0 and self.eval_step > 0):
            raise PreconditionError("sweep_step and eval_step must be positive")
        if self.frequency is not None:
            if self.profile is None:
                raise PreconditionError("frequency given without a frequency profile")
            self.profile.deviation_at(self.frequency)

    @property
    def effective_detector(self) -> DetectorParams:
        if self.frequency is None:
            return self.detector
        return self.detector.with_deviation(self.profile.deviation_at(self.frequency))

    @property
    def seeds(self) -> Tuple[int, int]:
        """Independent (sweep, evaluation) seeds derived from ``seed``."""
        kids = np.random.SeedSequence(self.seed).spawn(2)
        return tuple(int(k.generate_state(1, dtype=np.uint64)[0]) for k in kids)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputFormatError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "detector" in kw:
                det = dict(kw["detector"])
                det["harmonics"] = tuple(tuple(h) for h in det.get("harmonics", ()))
                kw["detector"] = DetectorParams(**det)
            if kw.get("adc") is not None:
                kw["adc"] = AdcParams(**kw["adc"])
            if kw.get("profile") is not None:
                anchors = kw["profile"]
                if isinstance(anchors, dict):
                    anchors = anchors["anchors"]
                kw["profile"] = FrequencyProfile(tuple(tuple(a) for a in anchors))
        except (TypeError, KeyError) as exc:
            raise InputFormatError(f"malformed config: {exc}") from exc
        return cls(**kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["detector"]["harmonics"] = [list(h) for h in self.detector.harmonics]
        if self.profile is not None:
            d["profile"] = [list(a) for a in self.profile.anchors]
        return d


def load_config(text: str) -> ScenarioConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise InputFormatError("config must be a JSON object")
    return ScenarioConfig.from_dict(d)


@dataclass(frozen=True)
class ErrorReport:
    max_abs_err: float
    rms_err: float
    worst_phase: float
    per_phase: Tuple[Tuple[float, float], ...]

    @classmethod
    def from_errors(cls, theta, err) -> "ErrorReport":
        theta = np.asarray(theta, dtype=float)
        err = np.asarray(err, dtype=float)
        k = int(np.argmax(np.abs(err)))
        return cls(max_abs_err=float(abs(err[k])),
                   rms_err=float(np.sqrt(np.mean(err ** 2))),
                   worst_phase=float(wrap_deg(theta[k])),
                   per_phase=tuple(zip(theta.tolist(), err.tolist())))

    @property
    def errors(self) -> np.ndarray:
        return np.array([e for _, e in self.per_phase])

    def summary(self) -> dict:
        return {"max_abs_err": self.max_abs_err, "rms_err": self.rms_err,
                "worst_phase": self.worst_phase}

    def per_phase_csv(self) -> str:
        out = io.StringIO()
        out.write("theta_deg,err_deg\n")
        for t, e in self.per_phase:
            out.write(f"{t!r},{e!r}\n")
        return out.getvalue()


def circle_grid(step: float) -> np.ndarray:
    """Phases 0, step, ... strictly below 360."""
    n = int(math.ceil(360.0 / step - 1e-9))
    return step * np.arange(n)


def simulate_sweep(config: ScenarioConfig) -> List[SweepRecord]:
    params = config.effective_detector
    phase = circle_grid(config.sweep_step)
    vdi, vdq = measure_voltages(phase, params, config.seeds[0])
    if config.sweep_adc:
        if config.adc is None:
            raise PreconditionError("sweep_adc needs an ADC")
        vdi = code_to_volts(adc_quantize(vdi, config.adc), config.adc)
        vdq = code_to_volts(adc_quantize(vdq, config.adc), config.adc)
    return [SweepRecord(float(p), float(a), float(b)) for p, a, b in zip(phase, vdi, vdq)]


def calibrate(config: ScenarioConfig) -> CalibrationTable:
    return build_table(simulate_sweep(config), smooth=config.detector.noise_sigma > 0)


def evaluate(table: CalibrationTable, config: ScenarioConfig, fixed: bool = False) -> ErrorReport:
    """Sweep the true phase over the circle and report wrapped estimate errors."""
    params = config.effective_detector
    theta = circle_grid(config.eval_step)
    seed = config.seeds[1]
    adc = config.adc
    if adc is None:
        if fixed:
            raise PreconditionError("the fixed-point path needs an ADC")
        vdi, vdq = measure_voltages(theta, params, seed)
        est = estimate_phase_array(table.norm_i(vdi), table.norm_q(vdq), table)
    else:
        ci, cq = measure_pair(theta, params, adc, seed)
        if fixed:
            image = encode_table(table)
            est = np.array([estimate_phase_fixed(a, b, image, adc) for a, b in zip(ci, cq)]) / 100.0
        else:
            est = estimate_phase_array(*normalize_codes(ci, cq, table, adc), table)
    return ErrorReport.from_errors(theta, wrap_deg(est - theta))


def round_trip(config: ScenarioConfig, fixed: bool = False) -> ErrorReport:
    return evaluate(calibrate(config), config, fixed=fixed)


def fig6_rows(lr_min: float, lr_max: float, step: float) -> List[Tuple[float, float, float]]:
    """(LR, max error, admissible deviation) rows."""
    return [(lr, err, lr - 90.0) for lr, err in error_vs_lr(lr_min, lr_max, step).samples]


def freq_study(config: ScenarioConfig, frequencies: Sequence[float]) -> List[dict]:
    """Calibrate and evaluate independently at each frequency."""
    if config.profile is None:
        raise PreconditionError("frequency study needs a frequency profile")
    for f in frequencies:
        config.profile.deviation_at(f)
    rows = []
    for f in frequencies:
        cfg = config.replace(frequency=float(f))
        table = calibrate(cfg)
        report = evaluate(table, cfg)
        rows.append({
            "frequency_ghz": float(f),
            "delta_q": cfg.effective_detector.delta_q,
            "delta_hat": table.delta_hat,
            "max_abs_err": report.max_abs_err,
            "rms_err": report.rms_err,
        })
    return rows
