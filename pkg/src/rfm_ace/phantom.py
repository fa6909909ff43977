"""Synthetic RF phantoms from random point-scatterer fields.

Each A-line is an independent 1-D medium. Echoes are synthesized in the
frequency domain, one term per scatterer::

    Y(f) = sum_s a_s * X(f) * exp(-j*2*pi*f*(2*z_s/c)) * exp(-2*alpha*|f|*z_s)

so the echo power from depth ``z`` decays exactly as ``exp(-4*alpha*f*z)``.
``X`` is a zero-phase Gaussian amplitude spectrum. Focusing and diffraction
are not modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError
from .units import Attenuation, RfFrame, ScanConfig

MAX_SCATTERERS_PER_LINE = 10**7
_SCATTERER_CHUNK = 512

# spawn keys separating the scatterer streams from the noise stream
_SCATTERER_STREAM = 0
_NOISE_STREAM = 1


@dataclass(frozen=True)
class PhantomSpec:
    """Random-medium parameters.

    ``scatterer_density`` counts scatterers per meter of depth per line.
    Amplitudes are zero-mean Gaussian with standard deviation
    ``amplitude_std``, so the backscatter is frequency-flat.
    """

    depth_range: tuple[float, float] = (0.005, 0.045)
    scatterer_density: float = 3000.0
    amplitude_std: float = 1.0
    alpha: Attenuation = Attenuation(0.68)
    seed: int = 0

    def __post_init__(self):
        z_min, z_max = (float(v) for v in self.depth_range)
        if not (math.isfinite(z_min) and math.isfinite(z_max)) or not z_max > z_min >= 0:
            raise InvalidArgumentError(f"invalid depth_range {self.depth_range!r}")
        if not (math.isfinite(self.scatterer_density) and self.scatterer_density > 0):
            raise InvalidArgumentError("scatterer_density must be positive")
        if not (math.isfinite(self.amplitude_std) and self.amplitude_std > 0):
            raise InvalidArgumentError("amplitude_std must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
        alpha = self.alpha if isinstance(self.alpha, Attenuation) else Attenuation(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "depth_range", (z_min, z_max))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def expected_count(self) -> float:
        return self.scatterer_density * (self.depth_range[1] - self.depth_range[0])

    def to_dict(self) -> dict:
        return {
            "depth_range": list(self.depth_range),
            "scatterer_density": self.scatterer_density,
            "amplitude_std": self.amplitude_std,
            "alpha_db_cm_mhz": self.alpha.value,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomSpec":
        return cls(
            depth_range=tuple(d["depth_range"]),
            scatterer_density=d["scatterer_density"],
            amplitude_std=d["amplitude_std"],
            alpha=Attenuation(d["alpha_db_cm_mhz"]),
            seed=d["seed"],
        )


@dataclass
class SystemEffects:
    """Depth gain, transducer coloring and measurement noise.

    ``transducer_response`` maps frequency (Hz, non-negative) to a power
    weighting applied on top of the Gaussian pulse spectrum.
    """

    tgc_profile: Optional[np.ndarray] = None
    transducer_response: Optional[Callable[[np.ndarray], np.ndarray]] = None
    noise_snr_db: Optional[float] = None
    tgc_label: str = "none"

    def __post_init__(self):
        if self.tgc_profile is not None:
            self.tgc_profile = np.asarray(self.tgc_profile, dtype=np.float64)
            _check_gain(self.tgc_profile)
        if self.noise_snr_db is not None and not math.isfinite(self.noise_snr_db):
            raise InvalidArgumentError("noise_snr_db must be finite")

    def to_dict(self) -> dict:
        return {
            "tgc": self.tgc_label,
            "transducer_response": "custom" if self.transducer_response else "pulse",
            "noise_snr_db": self.noise_snr_db,
            "diffraction": "identity",
        }


@dataclass
class ScattererField:
    """Per-line scatterer depths (m) and amplitudes."""

    depths: list[np.ndarray] = field(default_factory=list)
    amplitudes: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if len(self.depths) != len(self.amplitudes):
            raise InvalidArgumentError("depths and amplitudes must list the same lines")
        for z, a in zip(self.depths, self.amplitudes):
            if np.shape(z) != np.shape(a):
                raise InvalidArgumentError("per-line depth/amplitude arrays differ in length")
            if not (np.all(np.isfinite(z)) and np.all(np.isfinite(a))):
                raise InvalidArgumentError("scatterer depths and amplitudes must be finite")

    @property
    def num_lines(self) -> int:
        return len(self.depths)

    def counts(self) -> np.ndarray:
        return np.array([len(z) for z in self.depths])

    def union(self, other: "ScattererField") -> "ScattererField":
        if other.num_lines != self.num_lines:
            raise InvalidArgumentError("fields have different line counts")
        return ScattererField(
            [np.concatenate([a, b]) for a, b in zip(self.depths, other.depths)],
            [np.concatenate([a, b]) for a, b in zip(self.amplitudes, other.amplitudes)],
        )


def _check_gain(profile: np.ndarray) -> None:
    if not np.all(np.isfinite(profile)) or np.any(profile <= 0):
        raise InvalidArgumentError("gain profile must be strictly positive and finite")


def _line_rng(seed: int, line_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_SCATTERER_STREAM, line_index))
    )


def generate_line(spec: PhantomSpec, line_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Scatterers of a single line; identical to that line of the full field."""
    if spec.expected_count > MAX_SCATTERERS_PER_LINE:
        raise ResourceLimitError(
            f"expected {spec.expected_count:.3g} scatterers per line exceeds "
            f"{MAX_SCATTERERS_PER_LINE:g}"
        )
    rng = _line_rng(spec.seed, line_index)
    n = rng.poisson(spec.expected_count)
    z_min, z_max = spec.depth_range
    depths = rng.uniform(z_min, z_max, size=n)
    amplitudes = rng.normal(0.0, spec.amplitude_std, size=n)
    return depths, amplitudes


def generate_scatterers(
    spec: PhantomSpec, config: ScanConfig, lines: Optional[Sequence[int]] = None
) -> ScattererField:
    """Draw a Poisson scatterer field, one independent stream per line."""
    if lines is None:
        lines = range(config.num_lines)
    per_line = [generate_line(spec, int(i)) for i in lines]
    return ScattererField([p[0] for p in per_line], [p[1] for p in per_line])


def pulse_sigma(config: ScanConfig) -> float:
    """Std (Hz) of the Gaussian amplitude spectrum with the configured -6 dB width."""
    half_width = 0.5 * config.fractional_bandwidth * config.center_frequency
    return half_width / math.sqrt(2.0 * math.log(2.0))


def pulse_spectrum(freqs: np.ndarray, config: ScanConfig) -> np.ndarray:
    """Zero-phase Gaussian amplitude spectrum, even in frequency."""
    sigma = pulse_sigma(config)
    return np.exp(-((np.abs(freqs) - config.center_frequency) ** 2) / (2.0 * sigma**2))


def _fft_length(spec: PhantomSpec, config: ScanConfig) -> int:
    # pulse tails must not wrap into the recorded samples
    sigma_t = 1.0 / (2.0 * math.pi * pulse_sigma(config))
    guard = int(math.ceil(12.0 * sigma_t * config.sampling_rate)) + 1
    max_delay = int(math.ceil(2.0 * spec.depth_range[1] / config.sound_speed * config.sampling_rate))
    n = max(config.samples_per_line, max_delay) + guard
    return 1 << (n - 1).bit_length()


def synthesize_rf(
    field: ScattererField,
    spec: PhantomSpec,
    effects: Optional[SystemEffects],
    config: ScanConfig,
) -> RfFrame:
    """Render the scatterer field to an RF frame.

    A unit scatterer at zero attenuation produces an echo of unit peak
    amplitude. TGC is applied after synthesis, then noise seeded from
    ``spec.seed``.
    """
    effects = effects or SystemEffects()
    if config.sampling_rate <= 2 * config.pulse_upper_frequency:
        raise InvalidArgumentError("pulse band exceeds the Nyquist frequency")
    if field.num_lines != config.num_lines:
        raise InvalidArgumentError(
            f"field has {field.num_lines} lines, config expects {config.num_lines}"
        )

    nfft = _fft_length(spec, config)
    freqs = np.fft.rfftfreq(nfft, d=1.0 / config.sampling_rate)
    spectrum = pulse_spectrum(freqs, config)
    if effects.transducer_response is not None:
        weight = np.asarray(effects.transducer_response(freqs), dtype=np.float64)
        if weight.shape != freqs.shape or np.any(weight < 0) or not np.all(np.isfinite(weight)):
            raise InvalidArgumentError("transducer_response must be finite and non-negative")
        spectrum = spectrum * np.sqrt(weight)
    peak = np.fft.irfft(pulse_spectrum(freqs, config), nfft)[0]

    # per-meter exponent: attenuation (amplitude, round trip) plus propagation delay
    alpha_np = spec.alpha.np_m_hz
    k = -(2.0 * alpha_np * freqs + 2j * np.pi * freqs * 2.0 / config.sound_speed)

    samples = np.zeros((config.num_lines, config.samples_per_line))
    for line, (z, a) in enumerate(zip(field.depths, field.amplitudes)):
        if len(z) == 0:
            continue
        acc = np.zeros(freqs.shape, dtype=np.complex128)
        for start in range(0, len(z), _SCATTERER_CHUNK):
            zc = z[start : start + _SCATTERER_CHUNK]
            ac = a[start : start + _SCATTERER_CHUNK]
            # explicit reduction (not BLAS) keeps results independent of thread count
            acc += (ac[:, None] * np.exp(zc[:, None] * k[None, :])).sum(axis=0)
        samples[line] = np.fft.irfft(spectrum * acc, nfft)[: config.samples_per_line] / peak

    frame = RfFrame(
        samples,
        config,
        {
            "synthetic": True,
            "seed": spec.seed,
            "alpha_db_cm_mhz": spec.alpha.value,
            "tgc_applied": False,
            "noise_snr_db": None,
        },
    )
    if effects.tgc_profile is not None:
        frame = apply_tgc(frame, effects.tgc_profile)
    if effects.noise_snr_db is not None:
        frame = add_noise(frame, effects.noise_snr_db, spec.seed)
    return frame


def simulate_frame(
    spec: PhantomSpec, config: ScanConfig, effects: Optional[SystemEffects] = None
) -> RfFrame:
    """Scatterer draw plus synthesis in one call."""
    return synthesize_rf(generate_scatterers(spec, config), spec, effects, config)


def apply_tgc(frame: RfFrame, tgc_profile) -> RfFrame:
    """Multiply every line by a per-sample gain."""
    profile = np.asarray(tgc_profile, dtype=np.float64)
    if profile.shape != (frame.config.samples_per_line,):
        raise InvalidArgumentError(
            f"TGC profile length {profile.shape} != samples_per_line "
            f"{frame.config.samples_per_line}"
        )
    _check_gain(profile)
    return frame.with_samples(frame.samples * profile[None, :], tgc_applied=True)


def exponential_tgc(config: ScanConfig, rate_db_per_cm: float) -> np.ndarray:
    """Amplitude gain rising by ``rate_db_per_cm`` dB per cm of depth."""
    z_cm = np.arange(config.samples_per_line) * config.sample_depth_step * 100.0
    return 10.0 ** (rate_db_per_cm * z_cm / 20.0)


def add_noise(frame: RfFrame, snr_db: float, seed: int) -> RfFrame:
    """Add white Gaussian noise with std ``rms(frame) / 10**(snr_db/20)``."""
    rms = frame.rms()
    if rms == 0:
        raise InvalidArgumentError("cannot set an SNR relative to an all-zero frame")
    if not math.isfinite(snr_db):
        raise InvalidArgumentError("snr_db must be finite")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_NOISE_STREAM,)))
    sigma = rms / 10.0 ** (snr_db / 20.0)
    noise = rng.normal(0.0, 1.0, size=frame.samples.shape) * sigma
    return frame.with_samples(frame.samples + noise, noise_snr_db=float(snr_db))
