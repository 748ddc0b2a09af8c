"""Covariance estimation, lag averaging and correlation-domain conditioning.

The central object is the coarray signal z: one autocorrelation value per
integer lag in [-(P-1), P-1], obtained by averaging all covariance entries
that share the same lag. Clutter filtering and apodization both act
directly on z, which is what makes sparse sampling compatible with
conventional wall filters and windowing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from .patterns import DifferenceSet
from .signals import SlowTimeSnapshots

log = logging.getLogger(__name__)


class CoarrayHoleError(ValueError):
    """The pattern's difference set does not cover every required lag."""

    def __init__(self, missing_lags):
        self.missing_lags = list(missing_lags)
        super().__init__(
            f"coarray has holes: missing lags {self.missing_lags} -- "
            "lag averaging requires a contiguous difference set"
        )


@dataclass(frozen=True)
class CovarianceEstimate:
    """Hermitian N x N sample covariance of the sparse slow-time vector."""

    matrix: np.ndarray
    q_used: int
    mean_removed: bool


@dataclass(frozen=True)
class CoarraySignal:
    """Autocorrelation estimate over lags -(P-1)..(P-1).

    ``values[i]`` holds the lag ``i - (P - 1)``; lag 0 sits in the middle.
    Conjugate symmetry holds up to estimation noise because the covariance
    is Hermitian and the index sets of opposite lags mirror each other.
    """

    window_size: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (2 * self.window_size - 1,):
            raise ValueError(
                f"expected {2 * self.window_size - 1} lags, got {self.values.shape}"
            )

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-(self.window_size - 1), self.window_size)

    def value(self, lag: int) -> complex:
        if abs(lag) > self.window_size - 1:
            raise IndexError(f"lag {lag} outside [-(P-1), P-1]")
        return self.values[lag + self.window_size - 1]

    def with_values(self, values: np.ndarray) -> "CoarraySignal":
        return CoarraySignal(window_size=self.window_size, values=values)


def estimate_covariance(
    snapshots: SlowTimeSnapshots, remove_mean: bool = False
) -> CovarianceEstimate:
    """Sample covariance (1/Q) sum_k y_k y_k^H, optionally mean-subtracted."""
    y = snapshots.data
    q = y.shape[0]
    if remove_mean:
        if q < 2:
            raise ValueError("mean removal requires at least 2 snapshots")
        y = y - y.mean(axis=0, keepdims=True)
    r = y.conj().T @ y / q
    r = r.T  # (1/Q) sum y y^H with y as rows
    r = 0.5 * (r + r.conj().T)  # kill floating-point asymmetry
    return CovarianceEstimate(matrix=r, q_used=q, mean_removed=remove_mean)


def lag_average(cov: CovarianceEstimate, diffs: DifferenceSet) -> CoarraySignal:
    """Average redundant covariance entries into one value per lag.

    Lags beyond the observation window (possible for co-prime patterns)
    are discarded. Raises CoarrayHoleError when a lag inside the window is
    not realized by any slot pair.
    """
    missing = diffs.missing_lags()
    if missing:
        raise CoarrayHoleError(missing)
    p = diffs.window_size
    r_vec = cov.matrix.flatten(order="F")  # column-stacking
    values = np.empty(2 * p - 1, dtype=complex)
    for lag in range(-(p - 1), p):
        idx = diffs.index_sets[lag]
        values[lag + p - 1] = r_vec[list(idx)].mean()
    return CoarraySignal(window_size=p, values=values)


def build_toeplitz(z: CoarraySignal) -> np.ndarray:
    """P x P Hermitian Toeplitz matrix with entry (i, j) = z(i - j)."""
    p = z.window_size
    col = z.values[p - 1 :]  # lags 0..P-1
    row = z.values[p - 1 :: -1]  # lags 0..-(P-1)
    return linalg.toeplitz(col, row)


def filter_autocorrelation(h, length: int | None = None) -> np.ndarray:
    """Deterministic autocorrelation of a filter, h conv conj(h[-n]).

    ``h`` is either a FIR coefficient array or an IIR (b, a) pair. IIR
    responses are evaluated to ``length`` taps (required for IIR) before
    correlating; the truncation error bound is logged based on the largest
    pole radius.
    """
    if isinstance(h, tuple):
        b, a = h
        poles = np.roots(a)
        radius = float(np.max(np.abs(poles))) if len(poles) else 0.0
        if radius >= 1.0:
            raise ValueError(f"unstable IIR filter: pole radius {radius:.4f} >= 1")
        if length is None:
            raise ValueError("IIR filters need an explicit impulse-response length")
        impulse = np.zeros(length)
        impulse[0] = 1.0
        hh = signal.lfilter(b, a, impulse)
        if radius > 0:
            # tail after truncation decays like radius^n
            bound = radius**length / (1.0 - radius)
            log.debug(
                "IIR impulse response truncated at %d taps; tail bound ~%.3g",
                length,
                bound,
            )
    else:
        hh = np.asarray(h)
    return np.correlate(hh, np.conj(hh), mode="full")


def clutter_filter(z: CoarraySignal, h, ir_length: int | None = None) -> CoarraySignal:
    """Apply a filter in the correlation domain: z conv h conv conj(h[-n]).

    Equivalent to filtering the (unobservable) uniform slow-time signal
    with ``h`` and re-estimating its autocorrelation. Linear convolution
    with central truncation back to 2P-1 lags.
    """
    p = z.window_size
    if ir_length is None:
        ir_length = 4 * p
    g = filter_autocorrelation(h, length=ir_length)
    full = np.convolve(z.values, g)
    center = (len(full) - 1) // 2
    return z.with_values(full[center - (p - 1) : center + p])


def butterworth_highpass(order: int, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """Butterworth high-pass (b, a) with cutoff in cycles per sample."""
    if not 0 < cutoff < 0.5:
        raise ValueError("cutoff must be in (0, 0.5) cycles/sample")
    return signal.butter(order, cutoff / 0.5, btype="highpass")


def apodize(z: CoarraySignal, window: np.ndarray) -> CoarraySignal:
    """Taper the coarray signal by the window's deterministic autocorrelation."""
    window = np.asarray(window, dtype=float)
    if window.shape != (z.window_size,):
        raise ValueError(
            f"window length {window.shape} does not match P={z.window_size}"
        )
    taper = np.correlate(window, window, mode="full")  # length 2P-1
    return z.with_values(z.values * taper)
