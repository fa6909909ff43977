"""Shared domain types and unit conversions.

Attenuation is reported externally in dB/(cm*MHz). All exponent math
(power decay ``exp(-4*alpha*f*z)``) runs in Np/(m*Hz). Depth follows the
round-trip convention ``z = c*t/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgumentError

#: dB per neper, 20*log10(e).
DB_PER_NP = 20.0 * math.log10(math.e)

# dB/(cm*MHz) -> Np/(m*Hz): /DB_PER_NP, *100 (per cm -> per m), /1e6 (per MHz -> per Hz)
_DB_CM_MHZ_TO_NP_M_HZ = 100.0 / (1e6 * DB_PER_NP)

DB_TO_NP = "db_cm_mhz->np_m_hz"
NP_TO_DB = "np_m_hz->db_cm_mhz"


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")


def db_to_np(value: float) -> float:
    """dB/(cm*MHz) to Np/(m*Hz)."""
    value = float(value)
    _require_finite("attenuation", value)
    return value * _DB_CM_MHZ_TO_NP_M_HZ


def np_to_db(value: float) -> float:
    """Np/(m*Hz) to dB/(cm*MHz)."""
    value = float(value)
    _require_finite("attenuation", value)
    return value / _DB_CM_MHZ_TO_NP_M_HZ


def convert_attenuation(value: float, direction: str) -> float:
    """Convert an attenuation slope between dB/(cm*MHz) and Np/(m*Hz).

    ``direction`` is either :data:`DB_TO_NP` or :data:`NP_TO_DB`.
    """
    if direction == DB_TO_NP:
        return db_to_np(value)
    if direction == NP_TO_DB:
        return np_to_db(value)
    raise InvalidArgumentError(f"unknown conversion direction {direction!r}")


@dataclass(frozen=True)
class Attenuation:
    """Attenuation coefficient slope, stored in dB/(cm*MHz)."""

    value: float

    def __post_init__(self):
        _require_finite("attenuation", float(self.value))
        object.__setattr__(self, "value", float(self.value))

    @classmethod
    def from_np(cls, value_np: float) -> "Attenuation":
        return cls(np_to_db(value_np))

    @property
    def db_cm_mhz(self) -> float:
        return self.value

    @property
    def np_m_hz(self) -> float:
        return db_to_np(self.value)


@dataclass(frozen=True)
class ScanConfig:
    """Acquisition geometry and sampling for a stack of A-lines.

    Attributes
    ----------
    sampling_rate : float
        RF sampling rate in Hz.
    sound_speed : float
        Speed of sound in m/s.
    center_frequency : float
        Pulse center frequency in Hz.
    fractional_bandwidth : float
        -6 dB two-sided bandwidth of the pulse amplitude spectrum divided by
        the center frequency.
    num_lines, samples_per_line : int
        Frame dimensions.
    """

    sampling_rate: float = 50e6
    sound_speed: float = 1540.0
    center_frequency: float = 5e6
    fractional_bandwidth: float = 0.6
    num_lines: int = 64
    samples_per_line: int = 3072

    def __post_init__(self):
        for name in ("sampling_rate", "sound_speed", "center_frequency", "fractional_bandwidth"):
            _require_finite(name, float(getattr(self, name)))
        if self.sound_speed <= 0:
            raise InvalidArgumentError("sound_speed must be positive")
        if self.center_frequency <= 0:
            raise InvalidArgumentError("center_frequency must be positive")
        if not 0 < self.fractional_bandwidth < 2:
            raise InvalidArgumentError("fractional_bandwidth must lie in (0, 2)")
        if int(self.num_lines) != self.num_lines or self.num_lines < 1:
            raise InvalidArgumentError("num_lines must be an integer >= 1")
        if int(self.samples_per_line) != self.samples_per_line or self.samples_per_line < 16:
            raise InvalidArgumentError("samples_per_line must be an integer >= 16")
        if self.sampling_rate <= 2 * self.pulse_upper_frequency:
            raise InvalidArgumentError(
                f"sampling_rate {self.sampling_rate:g} Hz does not exceed twice the pulse "
                f"upper frequency {self.pulse_upper_frequency:g} Hz"
            )
        object.__setattr__(self, "num_lines", int(self.num_lines))
        object.__setattr__(self, "samples_per_line", int(self.samples_per_line))

    @property
    def pulse_upper_frequency(self) -> float:
        return self.center_frequency * (1.0 + self.fractional_bandwidth)

    @property
    def sample_depth_step(self) -> float:
        """Depth increment between consecutive samples, in meters."""
        return self.sound_speed / (2.0 * self.sampling_rate)

    def to_dict(self) -> dict:
        return {
            "sampling_rate": self.sampling_rate,
            "sound_speed": self.sound_speed,
            "center_frequency": self.center_frequency,
            "fractional_bandwidth": self.fractional_bandwidth,
            "num_lines": self.num_lines,
            "samples_per_line": self.samples_per_line,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def depth_of_sample(sample_index: int, config: ScanConfig) -> float:
    """Depth in meters of a time sample, ``c * (index / fs) / 2``."""
    if int(sample_index) != sample_index or not 0 <= sample_index < config.samples_per_line:
        raise InvalidArgumentError(
            f"sample index {sample_index} outside [0, {config.samples_per_line})"
        )
    return config.sound_speed * (sample_index / config.sampling_rate) / 2.0


@dataclass
class RfFrame:
    """Multi-line RF samples, shape ``(num_lines, samples_per_line)``."""

    samples: np.ndarray
    config: ScanConfig
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        expected = (self.config.num_lines, self.config.samples_per_line)
        if self.samples.shape != expected:
            raise InvalidArgumentError(
                f"samples shape {self.samples.shape} does not match config {expected}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgumentError("RF samples must be finite")

    def with_samples(self, samples: np.ndarray, **provenance) -> "RfFrame":
        meta = dict(self.provenance)
        meta.update(provenance)
        return RfFrame(samples, self.config, meta)

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))
