"""Cepstral smoothing of local power spectra.

The log power spectrum of a windowed echo is the sum of a slowly varying
pulse term and a rapidly varying interference term from the scatterer
arrangement. Keeping only low quefrencies of the real cepstrum removes the
interference ripple and leaves a smooth single-scatterer spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AceError, InvalidArgumentError
from .spectra import BandSelection, SpectralMap

SYMMETRY_RTOL = 1e-9
# cepstral values are in nepers; below this, asymmetry is rounding noise
CEPSTRUM_ATOL = 1e-12
IMAG_RTOL = 1e-9


def _mirror(x: np.ndarray) -> np.ndarray:
    """x[(L - n) % L] for every n."""
    return np.roll(x[::-1], 1)


def _is_even(x: np.ndarray, rtol: float = SYMMETRY_RTOL, atol: float = 0.0) -> bool:
    scale = np.max(np.abs(x))
    return bool(np.max(np.abs(x - _mirror(x))) <= rtol * scale + atol)


@dataclass
class Cepstrum:
    """Real cepstrum of one two-sided power row (length L, FFT order)."""

    values: np.ndarray
    source_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("cepstrum values must be a finite 1-D sequence")
        if not _is_even(self.values, atol=CEPSTRUM_ATOL):
            raise InvalidArgumentError("cepstrum is not even-symmetric")

    @property
    def length(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LifterSpec:
    """Quefrency cutoff: indices ``0..cutoff`` and their mirrors are kept."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise InvalidArgumentError(f"lifter cutoff must be an integer >= 1, got {self.cutoff}")
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @classmethod
    def default_for(cls, window_length: int) -> "LifterSpec":
        return cls(max(4, window_length // 16))

    def check(self, length: int) -> None:
        if self.cutoff > length // 2:
            raise InvalidArgumentError(
                f"lifter cutoff {self.cutoff} exceeds half the cepstrum length {length // 2}"
            )


def real_cepstrum(power_row, floor_rel: float = 1e-12) -> Cepstrum:
    """Inverse DFT of the log of a two-sided power row.

    Entries below ``floor_rel * max(power_row)`` are clamped before the log.
    """
    row = np.asarray(power_row, dtype=np.float64)
    if row.ndim != 1 or row.size < 2:
        raise InvalidArgumentError("power row must be a 1-D sequence")
    if not np.all(np.isfinite(row)) or np.any(row < 0):
        raise InvalidArgumentError("power row must be finite and non-negative")
    peak = row.max()
    if peak <= 0:
        raise InvalidArgumentError("power row is identically zero")
    if not _is_even(row):
        raise InvalidArgumentError("power row is not even-symmetric (not a real signal's spectrum)")
    log_row = np.log(np.maximum(row, floor_rel * peak))
    c = np.fft.ifft(log_row)
    _check_imag(c, "cepstrum")
    return Cepstrum(c.real, {"window_length": row.size})


def lifter(c: Cepstrum, spec: LifterSpec) -> Cepstrum:
    """Zero every quefrency except ``0..N_c`` and ``L-N_c..L-1``."""
    L = c.length
    spec.check(L)
    keep = np.zeros(L, dtype=bool)
    keep[: spec.cutoff + 1] = True
    keep[L - spec.cutoff :] = True
    return Cepstrum(np.where(keep, c.values, 0.0), {**c.source_meta, "lifter_cutoff": spec.cutoff})


def reconstruct_spectrum(c: Cepstrum) -> np.ndarray:
    """Forward DFT of a cepstrum, exponentiated back to a power row."""
    if not _is_even(c.values, atol=CEPSTRUM_ATOL):
        raise InvalidArgumentError("cepstrum is not even-symmetric")
    spectrum = np.fft.fft(c.values)
    _check_imag(spectrum, "reconstructed log spectrum")
    return np.exp(spectrum.real)


def _check_imag(z: np.ndarray, what: str) -> None:
    real_norm = np.linalg.norm(z.real)
    if np.linalg.norm(z.imag) > IMAG_RTOL * max(real_norm, np.finfo(float).tiny):
        raise InvalidArgumentError(f"{what} has a non-negligible imaginary part")


def _smooth_row(row: np.ndarray, spec: LifterSpec, floor_rel: float) -> np.ndarray:
    # the gain is factored out before the log so that power-of-two gains stay bit-exact
    peak = row.max()
    if not peak > 0:
        raise InvalidArgumentError("power row is identically zero")
    return peak * reconstruct_spectrum(lifter(real_cepstrum(row / peak, floor_rel), spec))


def _band_mask(L: int, band: BandSelection) -> np.ndarray:
    if band.i_hi > L // 2:
        raise InvalidArgumentError(f"band {band.to_dict()} exceeds the one-sided spectrum")
    mask = np.zeros(L, dtype=bool)
    mask[band.bins] = True
    mask[(L - band.bins) % L] = True
    return mask


def _trend_basis(absf: np.ndarray, degree: int) -> np.ndarray:
    x = absf / absf.max()
    return np.stack([x**p for p in range(degree + 1)], axis=1)


def _smooth_row_in_band(
    row: np.ndarray,
    spec: LifterSpec,
    floor_rel: float,
    mask: np.ndarray,
    basis: np.ndarray,
) -> np.ndarray:
    peak = row.max()
    if peak <= 0:
        raise InvalidArgumentError("power row is identically zero")
    # scaling by the row peak keeps power-of-two gains bit-exact
    log_row = np.log(np.maximum(row / peak, floor_rel))
    coef, *_ = np.linalg.lstsq(basis[mask], log_row[mask], rcond=None)
    trend = basis @ coef
    residual = np.where(mask, log_row - trend, 0.0)
    smoothed_residual = _smooth_row(np.exp(residual), spec, 0.0)
    out = row.copy()
    out[mask] = peak * smoothed_residual[mask] * np.exp(trend[mask])
    return out


def smooth_spectral_map(
    smap: SpectralMap,
    spec: Optional[LifterSpec] = None,
    floor_rel: float = 1e-12,
    trend_band: Optional[BandSelection] = None,
    trend_degree: int = 2,
) -> SpectralMap:
    """Cepstrally smooth every depth row of a spectral map.

    Without ``trend_band`` each row goes through log, cepstrum, lifter and
    back over the whole two-sided spectrum.

    With ``trend_band`` only the band is smoothed. A polynomial in ``|f|``
    (degree ``trend_degree``) is least-squares fitted to the in-band log
    spectrum, and only the residual is liftered. Out-of-band bins are set to
    zero residual and pass through unchanged. The trend goes back in
    untouched, so a log spectrum that is linear in ``|f|`` keeps its slope
    exactly. Without this, the ``|f|`` kink at DC and the out-of-band leakage
    floor both leak through the lifter into the band.
    """
    L = smap.window_length
    spec = spec or LifterSpec.default_for(L)
    spec.check(L)
    if not 0 <= floor_rel < 1:
        raise InvalidArgumentError("floor_rel must lie in [0, 1)")

    if trend_band is not None:
        mask = _band_mask(L, trend_band)
        n_distinct = trend_band.i_hi - trend_band.i_lo + 1
        basis = _trend_basis(smap.abs_freqs, min(int(trend_degree), n_distinct - 1))

    out = np.empty_like(smap.power)
    for k, row in enumerate(smap.power):
        try:
            if trend_band is None:
                out[k] = _smooth_row(row, spec, floor_rel)
            else:
                out[k] = _smooth_row_in_band(row, spec, floor_rel, mask, basis)
        except AceError as exc:
            raise type(exc)(f"depth window {k} (z={smap.depths[k]:.6g} m): {exc}") from exc

    record = {"lifter_cutoff": spec.cutoff, "floor_rel": floor_rel}
    if trend_band is not None:
        record["trend_band"] = trend_band.to_dict()
        record["trend_degree"] = int(trend_degree)
    return smap.with_power(out, lifter=record)
