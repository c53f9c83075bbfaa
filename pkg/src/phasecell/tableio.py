"""Serialization: sweep CSV, table JSON and the ``.pdt`` binary image.

Binary layout (little-endian, 95 bytes)::

    magic      4s   b"PDC1"
    version    u8   1
    delta_hat  i16  centidegrees
    norm_i     2 x i32  gain, offset in microvolts
    norm_q     2 x i32  gain, offset in microvolts
    4 sections, each:
        curve      u8   0 in-phase, 1 quadrature
        sign       u8   0 plus, 1 minus
        center     i16  centidegrees
        slope      i32  millidegrees per normalized unit (applied to Q15 voltages)
        intercept  i16  centidegrees
        domain     2 x i16  centidegrees
        v_bounds   2 x i16  Q15 normalized voltage

The line's ``max_err`` is not stored; decoded fits carry ``None``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
import tempfile
from pathlib import Path
from typing import List, Union

from .calibration import CalibrationTable, ChannelNorm, Section, SweepRecord
from .errors import InputFormatError
from .linfit import LineFit
from .sections import Curve, SlopeSign

MAGIC = b"PDC1"
VERSION = 1
MAX_TABLE_BYTES = 2048
Q15 = 1 << 15

_HEADER = struct.Struct("<4sBh4i")
_SECTION = struct.Struct("<BBhih2h2h")
TABLE_SIZE = _HEADER.size + 4 * _SECTION.size

SWEEP_HEADER = ("phase_deg", "vdi_v", "vdq_v")

_INT_RANGE = {
    "h": (-(1 << 15), (1 << 15) - 1),
    "i": (-(1 << 31), (1 << 31) - 1),
}


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _fixed(value: float, scale: float, kind: str, name: str) -> int:
    if not math.isfinite(value):
        raise InputFormatError(f"field {name} is not finite")
    q = _round_half_away(value * scale)
    lo, hi = _INT_RANGE[kind]
    if not lo <= q <= hi:
        raise InputFormatError(
            f"field {name}={value!r} does not fit its {kind} encoding ({q} not in [{lo}, {hi}])")
    return q


def encode_table(table: CalibrationTable) -> bytes:
    buf = bytearray(_HEADER.pack(
        MAGIC, VERSION,
        _fixed(table.delta_hat, 100, "h", "delta_hat"),
        _fixed(table.norm_i.gain, 1e6, "i", "norm_i.gain"),
        _fixed(table.norm_i.offset, 1e6, "i", "norm_i.offset"),
        _fixed(table.norm_q.gain, 1e6, "i", "norm_q.gain"),
        _fixed(table.norm_q.offset, 1e6, "i", "norm_q.offset"),
    ))
    for k, s in enumerate(table.sections):
        name = f"sections[{k}]"
        buf += _SECTION.pack(
            int(s.curve), int(s.slope_sign),
            _fixed(s.center, 100, "h", f"{name}.center"),
            _fixed(s.fit.slope, 1000, "i", f"{name}.fit.slope"),
            _fixed(s.fit.intercept, 100, "h", f"{name}.fit.intercept"),
            _fixed(s.domain[0], 100, "h", f"{name}.domain.lo"),
            _fixed(s.domain[1], 100, "h", f"{name}.domain.hi"),
            _fixed(s.v_bounds[0], Q15, "h", f"{name}.v_bounds.lo"),
            _fixed(s.v_bounds[1], Q15, "h", f"{name}.v_bounds.hi"),
        )
    assert len(buf) == TABLE_SIZE <= MAX_TABLE_BYTES
    return bytes(buf)


def unpack_table(data: bytes):
    """Raw integer fields of a binary table: (header tuple, section tuples)."""
    if len(data) != TABLE_SIZE:
        raise InputFormatError(f"table image is {len(data)} bytes, expected {TABLE_SIZE}")
    header = _HEADER.unpack_from(data, 0)
    if header[0] != MAGIC:
        raise InputFormatError(f"bad table magic {header[0]!r}")
    if header[1] != VERSION:
        raise InputFormatError(f"unsupported table version {header[1]}")
    sections = [_SECTION.unpack_from(data, _HEADER.size + k * _SECTION.size) for k in range(4)]
    for k, s in enumerate(sections):
        if s[0] not in (0, 1) or s[1] not in (0, 1):
            raise InputFormatError(f"section {k} has invalid curve/sign codes {s[:2]}")
    return header, sections


def decode_table(data: bytes) -> CalibrationTable:
    header, raw_sections = unpack_table(data)
    _, _, dh, gi, oi, gq, oq = header
    sections = []
    for curve, sign, center, slope, intercept, lo, hi, vlo, vhi in raw_sections:
        sections.append(Section(
            curve=Curve(curve), slope_sign=SlopeSign(sign), center=center / 100,
            fit=LineFit(slope / 1000, intercept / 100, None),
            domain=(lo / 100, hi / 100), v_bounds=(vlo / Q15, vhi / Q15)))
    try:
        return CalibrationTable(ChannelNorm(gi / 1e6, oi / 1e6), ChannelNorm(gq / 1e6, oq / 1e6),
                                dh / 100, tuple(sections))
    except ValueError as exc:
        raise InputFormatError(f"decoded table is invalid: {exc}") from exc


def table_to_dict(table: CalibrationTable) -> dict:
    def norm(n):
        return {"gain": n.gain, "offset": n.offset}

    return {
        "norm_i": norm(table.norm_i),
        "norm_q": norm(table.norm_q),
        "delta_hat": table.delta_hat,
        "sections": [
            {
                "curve": s.curve.label,
                "slope_sign": s.slope_sign.label,
                "center": s.center,
                "fit": {"slope": s.fit.slope, "intercept": s.fit.intercept,
                        "max_err": s.fit.max_err},
                "domain": list(s.domain),
                "v_bounds": list(s.v_bounds),
            }
            for s in table.sections
        ],
    }


_CURVES = {c.label: c for c in Curve}
_SIGNS = {s.label: s for s in SlopeSign}


def table_from_dict(d: dict) -> CalibrationTable:
    try:
        sections = tuple(
            Section(
                curve=_CURVES[s["curve"]], slope_sign=_SIGNS[s["slope_sign"]],
                center=float(s["center"]),
                fit=LineFit(float(s["fit"]["slope"]), float(s["fit"]["intercept"]),
                            None if s["fit"].get("max_err") is None else float(s["fit"]["max_err"])),
                domain=(float(s["domain"][0]), float(s["domain"][1])),
                v_bounds=(float(s["v_bounds"][0]), float(s["v_bounds"][1])),
            )
            for s in d["sections"])
        return CalibrationTable(
            ChannelNorm(float(d["norm_i"]["gain"]), float(d["norm_i"]["offset"])),
            ChannelNorm(float(d["norm_q"]["gain"]), float(d["norm_q"]["offset"])),
            float(d["delta_hat"]), sections)
    except (KeyError, TypeError, IndexError) as exc:
        raise InputFormatError(f"malformed table JSON: {exc!r}") from exc


def write_atomic(path: Union[str, Path], data: Union[str, bytes]) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_table_json(table: CalibrationTable) -> str:
    return json.dumps(table_to_dict(table), indent=2) + "\n"


def read_table_json(path) -> CalibrationTable:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON: {exc}") from exc
    return table_from_dict(d)


def dumps_sweep_csv(records: List[SweepRecord]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in records:
        w.writerow([repr(float(r.phase_set)), repr(float(r.vdi)), repr(float(r.vdq))])
    return out.getvalue()


def parse_sweep_csv(text: str) -> List[SweepRecord]:
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise InputFormatError("sweep CSV is empty") from None
    if tuple(h.strip() for h in header) != SWEEP_HEADER:
        raise InputFormatError(f"line 1: expected header {','.join(SWEEP_HEADER)}")
    records = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise InputFormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            records.append(SweepRecord(*(float(c) for c in row)))
        except ValueError:
            raise InputFormatError(f"line {lineno}: non-numeric field in {row!r}") from None
    return records


def read_sweep_csv(path) -> List[SweepRecord]:
    return parse_sweep_csv(Path(path).read_text(encoding="utf-8"))
