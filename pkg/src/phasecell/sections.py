"""Section identities and the four-way I/Q selector."""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

TIE_EPS = 1e-12


class Curve(enum.IntEnum):
    IN_PHASE = 0
    QUADRATURE = 1

    @property
    def label(self) -> str:
        return "InPhase" if self is Curve.IN_PHASE else "Quadrature"


class SlopeSign(enum.IntEnum):
    PLUS = 0
    MINUS = 1

    @property
    def label(self) -> str:
        return "Plus" if self is SlopeSign.PLUS else "Minus"


class SectionId(NamedTuple):
    curve: Curve
    slope_sign: SlopeSign

    def __str__(self):
        return f"{self.curve.label}/{self.slope_sign.label}"


# Table order; index 0..3 is also the tie-break priority for overlapping domains.
SECTION_ORDER = (
    SectionId(Curve.QUADRATURE, SlopeSign.PLUS),
    SectionId(Curve.IN_PHASE, SlopeSign.MINUS),
    SectionId(Curve.QUADRATURE, SlopeSign.MINUS),
    SectionId(Curve.IN_PHASE, SlopeSign.PLUS),
)


def select_index(vdi_n, vdq_n):
    """Vectorized selector returning the index into :data:`SECTION_ORDER`.

    |vdq| <= |vdi| interpolates on the quadrature curve (Plus when vdi >= 0),
    otherwise on the in-phase curve (Minus when vdq >= 0). Comparisons are
    inclusive up to ``TIE_EPS`` so values that are equal before floating
    point rounding still count as ties.
    """
    vi = np.asarray(vdi_n)
    vq = np.asarray(vdq_n)
    idx = np.where(np.abs(vq) <= np.abs(vi) + TIE_EPS,
                   np.where(vi >= -TIE_EPS, 0, 2),
                   np.where(vq >= -TIE_EPS, 1, 3))
    if idx.ndim == 0:
        return int(idx)
    return idx
