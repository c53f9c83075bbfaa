"""Simulation, calibration and phase estimation for a switched dual-multiplier
360 degree phase detector cell."""

from .calibration import (CalibrationTable, ChannelNorm, Section, SweepRecord, build_table,
                          estimate_deviation, normalize_sweep, partition_sections)
from .detector import (AdcParams, DetectorParams, FrequencyProfile, SwitchState, adc_quantize,
                       branch_voltage, measure_pair, wrap_deg)
from .errors import InputFormatError, PhaseCellError, PreconditionError
from .estimator import (IqNormalized, baseline_single, estimate_phase, estimate_phase_fixed,
                        select_section)
from .linfit import (LineFit, LrErrorCurve, error_vs_lr, max_admissible_deviation,
                     minimax_line_data, minimax_line_sine, required_lr)
from .tableio import decode_table, encode_table

__version__ = "0.1.0"
