"""Reference frequency method.

Dividing the spectrum at ``f_i`` by the spectrum at ``f_{i-step}`` from the
same depth cancels every factor that does not depend on frequency (TGC) or
varies slowly across the pair (diffraction). What is left is::

    ln R(f_i, z) = ln[G(f_i) BSC(f_i) / G(f_{i-step}) BSC(f_{i-step})] - 4*alpha*df*z

so alpha is the depth slope of the log ratio divided by ``-4*df``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateBandError, InsufficientDataError, InvalidArgumentError, InvalidInputError
from .homomorphic import LifterSpec, smooth_spectral_map
from .spectra import TAPERS, BandSelection, SpectralMap, local_power_spectra, select_band
from .units import Attenuation, RfFrame, ScanConfig

METHODS = ("baseline", "improved")


@dataclass(frozen=True)
class RatioCurves:
    """Log frequency-power ratios against depth, one curve per bin pair."""

    bins: np.ndarray
    pairs: list
    curves: np.ndarray
    depths: np.ndarray
    delta_f: float

    @property
    def num_pairs(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    residual_rms: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FrequencyEstimate:
    f_hz: float
    f_ref_hz: float
    alpha: float
    fit: FitResult


@dataclass
class RfmOptions:
    """Estimator settings. ``lifter=None`` means ``LifterSpec.default_for(window)``."""

    window: int = 256
    hop: int = 64
    taper: str = "hann"
    step: int = 1
    band_threshold_db: float = 15.0
    fit_range: Optional[tuple[float, float]] = None
    method: str = "improved"
    lifter: Optional[LifterSpec] = None
    floor_rel: float = 1e-12
    trend_degree: int = 2

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.step) != self.step or self.step < 1:
            raise InvalidArgumentError("step must be a positive integer")
        if int(self.window) != self.window or self.window < 2 or int(self.window) & (int(self.window) - 1):
            raise InvalidArgumentError(f"window must be a power of two, got {self.window}")
        if int(self.hop) != self.hop or self.hop < 1:
            raise InvalidArgumentError("hop must be a positive integer")
        if self.taper not in TAPERS:
            raise InvalidArgumentError(f"taper must be one of {TAPERS}, got {self.taper!r}")
        if self.fit_range is not None:
            lo, hi = (float(v) for v in self.fit_range)
            if not hi > lo:
                raise InvalidArgumentError(f"fit_range must satisfy z_lo < z_hi, got {self.fit_range}")
            self.fit_range = (lo, hi)
        if isinstance(self.lifter, int):
            self.lifter = LifterSpec(self.lifter)

    @property
    def lifter_spec(self) -> LifterSpec:
        return self.lifter or LifterSpec.default_for(self.window)

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "hop": self.hop,
            "taper": self.taper,
            "step": self.step,
            "band_threshold_db": self.band_threshold_db,
            "fit_range": list(self.fit_range) if self.fit_range else None,
            "method": self.method,
            "cutoff": self.lifter_spec.cutoff,
            "floor_rel": self.floor_rel,
            "trend_degree": self.trend_degree,
        }


@dataclass
class AceResult:
    per_frequency: list[FrequencyEstimate]
    aggregate_alpha: float
    method: str
    band: BandSelection
    mean_residual_rms: float
    curves: RatioCurves
    options: dict = field(default_factory=dict)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p.alpha for p in self.per_frequency])

    @property
    def fits(self) -> list[FitResult]:
        return [p.fit for p in self.per_frequency]


def ratio_curves(smap: SpectralMap, step: int, band: BandSelection) -> RatioCurves:
    """``ln(power[k, i] / power[k, i - step])`` for every ``i`` whose partner
    ``i - step`` is also in the band."""
    if int(step) != step or step < 1:
        raise InvalidArgumentError("step must be a positive integer")
    if band.i_hi > smap.window_length // 2:
        raise InvalidArgumentError("band exceeds the one-sided spectrum")
    bins = np.arange(band.i_lo + step, band.i_hi + 1)
    if bins.size == 0:
        raise DegenerateBandError(
            f"band [{band.i_lo}, {band.i_hi}] is narrower than the ratio step {step}"
        )
    sub = smap.power[:, band.i_lo : band.i_hi + 1]
    bad = np.argwhere(~(sub > 0))
    if bad.size:
        k, i = bad[0]
        raise InvalidInputError(f"non-positive power at bin {band.i_lo + i}, depth window {k}")
    curves = np.log(smap.power[:, bins] / smap.power[:, bins - step]).T
    df = smap.bin_spacing
    pairs = [(float(i * df), float((i - step) * df)) for i in bins]
    return RatioCurves(bins=bins, pairs=pairs, curves=curves, depths=smap.depths.copy(), delta_f=step * df)


def fit_decay(curve, depths, fit_range: Optional[tuple[float, float]] = None) -> FitResult:
    """Ordinary least squares of a log-ratio curve on depth."""
    y = np.asarray(curve, dtype=np.float64)
    z = np.asarray(depths, dtype=np.float64)
    if y.shape != z.shape:
        raise InvalidArgumentError("curve and depths differ in length")
    if fit_range is not None:
        keep = (z >= fit_range[0]) & (z <= fit_range[1])
        y, z = y[keep], z[keep]
    n = y.size
    if n < 3:
        raise InsufficientDataError(f"decay fit needs at least 3 depth points, got {n}")
    z_mean = z.mean()
    dz = z - z_mean
    sxx = float(dz @ dz)
    if sxx <= (1e-12 * max(np.max(np.abs(z)), 1e-300)) ** 2 * n:
        raise InvalidArgumentError("depth points have no spread")
    y_mean = y.mean()
    slope = float(dz @ (y - y_mean)) / sxx
    intercept = float(y_mean - slope * z_mean)
    resid = y - (intercept + slope * z)
    ss_res = float(resid @ resid)
    ss_tot = float((y - y_mean) @ (y - y_mean))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope, intercept, r2, math.sqrt(ss_res / n), n)


def alpha_from_slope(slope: float, delta_f: float) -> Attenuation:
    """Attenuation from the depth slope (1/m) of a log power ratio at spacing ``delta_f``.

    Negative values come back unchanged.
    """
    if not delta_f > 0:
        raise InvalidArgumentError("delta_f must be positive")
    return Attenuation.from_np(-slope / (4.0 * delta_f))


def oscillation_metric(curves: RatioCurves, fits) -> float:
    """Mean decay-fit residual RMS over all frequency pairs."""
    fits = list(fits)
    if not fits or curves.num_pairs == 0:
        raise InvalidArgumentError("no curves to measure")
    if len(fits) != curves.num_pairs:
        raise InvalidArgumentError("fits do not correspond to curves")
    return float(np.mean([f.residual_rms for f in fits]))


def interior_fit_range(
    depth_range: tuple[float, float], window_length: int, config: ScanConfig
) -> tuple[float, float]:
    """Depths whose analysis windows lie fully inside the scattering region,
    with one window length of margin on each side."""
    margin = window_length * config.sample_depth_step
    lo, hi = depth_range[0] + margin, depth_range[1] - margin
    if not hi > lo:
        raise InvalidArgumentError("depth range is too short for the analysis window")
    return lo, hi


def _restrict_depths(smap: SpectralMap, fit_range) -> SpectralMap:
    if fit_range is None:
        if smap.num_windows < 5:
            raise InsufficientDataError(
                f"{smap.num_windows} depth windows; need at least 5 to drop the edge windows"
            )
        mask = np.zeros(smap.num_windows, dtype=bool)
        mask[1:-1] = True
    else:
        mask = (smap.depths >= fit_range[0]) & (smap.depths <= fit_range[1])
    if mask.sum() < 3:
        raise InsufficientDataError(
            f"only {int(mask.sum())} depth windows fall inside the fit range {fit_range}"
        )
    return smap.select_depths(mask)


def run_rfm_on_map(smap: SpectralMap, options: Optional[RfmOptions] = None) -> AceResult:
    """Estimate attenuation from a spectral map.

    Windows outside the fit range are discarded first, so band selection
    and smoothing only see the analyzed depths. The improved method smooths
    each row inside the band found on the raw map, then selects the band
    again on the smoothed map.
    """
    options = options or RfmOptions()
    work = _restrict_depths(smap, options.fit_range)
    band = select_band(work, options.band_threshold_db)
    if options.method == "improved":
        work = smooth_spectral_map(
            work,
            options.lifter_spec,
            options.floor_rel,
            trend_band=band,
            trend_degree=options.trend_degree,
        )
        band = select_band(work, options.band_threshold_db)

    curves = ratio_curves(work, options.step, band)
    per_frequency = []
    for (f_hi, f_lo), curve in zip(curves.pairs, curves.curves):
        fit = fit_decay(curve, curves.depths)
        alpha = alpha_from_slope(fit.slope, curves.delta_f).value
        per_frequency.append(FrequencyEstimate(f_hi, f_lo, alpha, fit))

    alphas = np.array([p.alpha for p in per_frequency])
    return AceResult(
        per_frequency=per_frequency,
        aggregate_alpha=float(np.median(alphas)),
        method=options.method,
        band=band,
        mean_residual_rms=oscillation_metric(curves, [p.fit for p in per_frequency]),
        curves=curves,
        options=options.to_dict(),
    )


def run_rfm(frame: RfFrame, options: Optional[RfmOptions] = None) -> AceResult:
    """Full pipeline: local spectra, optional smoothing, band, ratios, fits."""
    options = options or RfmOptions()
    smap = local_power_spectra(frame, options.window, options.hop, options.taper)
    return run_rfm_on_map(smap, options)
