"""Delay-discrete envelope-probability features.

A D-DPDP is a per-delay histogram of the estimated fading envelope: row l
bins |gains[l, n]| over time into 400 equal intervals on [0, 2) (bin width
0.005), with values >= 2 clipped into the last bin so every row keeps unit
mass.  Flattened row-major, it is the classifier input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bem import CIREstimate
from .profiles import DELAY_UNIT_US, MAX_DELAY_UNITS

ENVELOPE_BINS = 400
ENVELOPE_MAX = 2.0
BIN_WIDTH = ENVELOPE_MAX / ENVELOPE_BINS
FEATURE_LENGTH = ENVELOPE_BINS * MAX_DELAY_UNITS  # 4800
N_SCENARIOS = 6


@dataclass(frozen=True)
class DDPDP:
    """Row-stochastic envelope-probability matrix, one row per delay unit."""

    bins: np.ndarray
    bin_width: float = BIN_WIDTH
    delay_unit_us: float = DELAY_UNIT_US

    def __post_init__(self):
        bins = np.array(self.bins, dtype=np.float64, copy=True)
        if bins.ndim != 2 or bins.shape[1] != ENVELOPE_BINS:
            raise ValueError(f"bins must be L x {ENVELOPE_BINS}")
        if np.any(bins < 0):
            raise ValueError("bin probabilities must be non-negative")
        if np.any(np.abs(bins.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("every row must sum to 1 within 1e-12")
        bins.flags.writeable = False
        object.__setattr__(self, "bins", bins)

    @property
    def row_count(self) -> int:
        return self.bins.shape[0]


@dataclass(frozen=True)
class FeatureVector:
    """Flattened D-DPDP plus (optionally) its scenario label."""

    values: np.ndarray
    label: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (FEATURE_LENGTH,):
            raise ValueError(f"feature length must be exactly {FEATURE_LENGTH}")
        if self.label is not None and not 1 <= self.label <= N_SCENARIOS:
            raise ValueError(f"label must lie in 1..{N_SCENARIOS}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def build_ddpdp(cir: CIREstimate) -> DDPDP:
    """Histogram the envelope of every delay row of a CIR estimate."""
    n = cir.n_samples
    if n < ENVELOPE_BINS:
        raise ValueError(
            f"need at least {ENVELOPE_BINS} time samples per row, got {n}")
    env = np.abs(cir.gains)
    idx = np.minimum((env / BIN_WIDTH).astype(np.int64), ENVELOPE_BINS - 1)
    rows = np.stack([np.bincount(r, minlength=ENVELOPE_BINS) for r in idx])
    return DDPDP(rows / float(n))


def flatten_ddpdp(ddpdp: DDPDP) -> np.ndarray:
    """Row-major concatenation: element 400*l + b is bins[l, b]."""
    return ddpdp.bins.reshape(-1).copy()


def one_hot(label: int) -> np.ndarray:
    """Length-6 indicator with position label-1 set."""
    if not 1 <= label <= N_SCENARIOS:
        raise ValueError(f"label must lie in 1..{N_SCENARIOS}, got {label}")
    out = np.zeros(N_SCENARIOS)
    out[label - 1] = 1.0
    return out
