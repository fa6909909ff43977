"""Local power spectra on a frequency x depth-window grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .errors import DegenerateBandError, InvalidArgumentError
from .units import RfFrame, ScanConfig, depth_of_sample

TAPERS = ("hann", "rect")


@dataclass
class SpectralMap:
    """Line-averaged local power spectra.

    ``power`` has shape ``(num_windows, window_length)`` and holds the full
    two-sided spectrum of each depth window in FFT order (even in
    frequency). ``freqs`` lists the one-sided bins ``0 .. L/2``.
    """

    power: np.ndarray
    depths: np.ndarray
    sampling_rate: float
    window_length: int
    hop: int
    taper: str
    lines_averaged: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.power = np.asarray(self.power, dtype=np.float64)
        self.depths = np.asarray(self.depths, dtype=np.float64)
        if self.power.ndim != 2 or self.power.shape[1] != self.window_length:
            raise InvalidArgumentError(
                f"power shape {self.power.shape} inconsistent with window_length {self.window_length}"
            )
        if self.power.shape[0] != self.depths.shape[0] or self.power.shape[0] == 0:
            raise InvalidArgumentError("need one non-empty power row per depth")
        if not np.all(np.isfinite(self.power)) or np.any(self.power < 0):
            raise InvalidArgumentError("power must be finite and non-negative")
        if np.any(np.diff(self.depths) <= 0):
            raise InvalidArgumentError("depths must be strictly increasing")

    @property
    def num_windows(self) -> int:
        return self.power.shape[0]

    @property
    def bin_spacing(self) -> float:
        return self.sampling_rate / self.window_length

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.window_length // 2 + 1) * self.bin_spacing

    @property
    def abs_freqs(self) -> np.ndarray:
        """|f| for every two-sided bin, FFT order."""
        return np.abs(np.fft.fftfreq(self.window_length, d=1.0 / self.sampling_rate))

    @property
    def one_sided(self) -> np.ndarray:
        return self.power[:, : self.window_length // 2 + 1]

    def with_power(self, power: np.ndarray, **meta) -> "SpectralMap":
        merged = dict(self.meta)
        merged.update(meta)
        return replace(self, power=power, meta=merged)

    def select_depths(self, mask: np.ndarray) -> "SpectralMap":
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise InvalidArgumentError("depth selection is empty")
        return replace(self, power=self.power[mask], depths=self.depths[mask], meta=dict(self.meta))


@dataclass(frozen=True)
class BandSelection:
    """Inclusive one-sided bin range ``[i_lo, i_hi]``."""

    i_lo: int
    i_hi: int
    threshold_db: float

    def __post_init__(self):
        if not 0 <= self.i_lo < self.i_hi:
            raise InvalidArgumentError(f"invalid band [{self.i_lo}, {self.i_hi}]")

    @property
    def bins(self) -> np.ndarray:
        return np.arange(self.i_lo, self.i_hi + 1)

    def to_dict(self) -> dict:
        return {"i_lo": self.i_lo, "i_hi": self.i_hi, "threshold_db": self.threshold_db}


def taper_window(taper: str, length: int) -> np.ndarray:
    """Periodic taper scaled to unit mean square, so white noise of unit
    variance has expected bin power ``length`` for every taper."""
    if taper == "hann":
        w = get_window("hann", length, fftbins=True)
    elif taper == "rect":
        w = np.ones(length)
    else:
        raise InvalidArgumentError(f"unknown taper {taper!r}; expected one of {TAPERS}")
    return w / np.sqrt(np.mean(w**2))


def local_power_spectra(
    frame: RfFrame, window_length: int = 256, hop: int = 64, taper: str = "hann"
) -> SpectralMap:
    """Sliding-window periodograms, averaged across lines only.

    Window ``k`` covers samples ``[k*hop, k*hop + L)``; its depth is that of
    sample ``k*hop + L//2``.
    """
    config = frame.config
    L = int(window_length)
    if L < 2 or L & (L - 1):
        raise InvalidArgumentError(f"window_length must be a power of two, got {window_length}")
    if L > config.samples_per_line:
        raise InvalidArgumentError(
            f"window_length {L} exceeds samples_per_line {config.samples_per_line}"
        )
    if int(hop) != hop or hop < 1:
        raise InvalidArgumentError("hop must be a positive integer")
    hop = int(hop)
    w = taper_window(taper, L)

    segments = sliding_window_view(frame.samples, L, axis=1)[:, ::hop, :]
    one_sided = np.abs(np.fft.rfft(segments * w, axis=-1)) ** 2
    # lines are summed in ascending order for reproducibility
    mean = one_sided.mean(axis=0)
    # mirror so every row is exactly even
    power = np.concatenate([mean, mean[:, L // 2 - 1 : 0 : -1]], axis=1)

    starts = np.arange(segments.shape[1]) * hop
    depths = np.array([depth_of_sample(int(s) + L // 2, config) for s in starts])
    return SpectralMap(
        power=power,
        depths=depths,
        sampling_rate=config.sampling_rate,
        window_length=L,
        hop=hop,
        taper=taper,
        lines_averaged=config.num_lines,
    )


def select_band(smap: SpectralMap, threshold_db: float = 15.0) -> BandSelection:
    """Contiguous bins around the reference-spectrum peak within ``threshold_db``.

    The reference spectrum is the mean over the shallowest quarter of the
    depth windows (at least one).
    """
    if not (math.isfinite(threshold_db) and threshold_db > 0):
        raise InvalidArgumentError("threshold_db must be positive")
    n_ref = max(1, smap.num_windows // 4)
    reference = smap.one_sided[:n_ref].mean(axis=0)
    peak = int(np.argmax(reference))
    if reference[peak] <= 0:
        raise DegenerateBandError("reference spectrum is identically zero")
    floor = reference[peak] / 10.0 ** (threshold_db / 10.0)
    lo = hi = peak
    while lo > 0 and reference[lo - 1] >= floor:
        lo -= 1
    while hi < len(reference) - 1 and reference[hi + 1] >= floor:
        hi += 1
    if hi - lo < 1:
        raise DegenerateBandError(
            f"only bin {peak} lies within {threshold_db:g} dB of the spectral peak"
        )
    return BandSelection(lo, hi, float(threshold_db))


def model_spectral_map(
    config: ScanConfig,
    depths: np.ndarray,
    alpha_np: float,
    window_length: int = 256,
    transducer: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    bsc: float = 1.0,
    depth_gain: Optional[np.ndarray] = None,
) -> SpectralMap:
    """Spectral map built directly from the multiplicative spectral model
    ``S = G(f) * TGC(z) * BSC * exp(-4*alpha*|f|*z)`` with no diffraction term.

    Used as an exact oracle for the estimators.
    """
    depths = np.asarray(depths, dtype=np.float64)
    L = int(window_length)
    absf = np.abs(np.fft.fftfreq(L, d=1.0 / config.sampling_rate))
    g = np.ones(L) if transducer is None else np.asarray(transducer(absf), dtype=np.float64)
    gain = np.ones(len(depths)) if depth_gain is None else np.asarray(depth_gain, dtype=np.float64)
    power = (
        gain[:, None] * bsc * g[None, :] * np.exp(-4.0 * alpha_np * absf[None, :] * depths[:, None])
    )
    hop = int(round((depths[1] - depths[0]) / config.sample_depth_step)) if len(depths) > 1 else 1
    return SpectralMap(
        power=power,
        depths=depths,
        sampling_rate=config.sampling_rate,
        window_length=L,
        hop=max(hop, 1),
        taper="model",
        lines_averaged=0,
        meta={"model": True},
    )
