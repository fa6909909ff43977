"""File formats: binary RF frames, JSON sidecars and result documents, CSV curves.

RF file layout (all little-endian)::

    offset 0   8 bytes   magic b"ACERF001"
    offset 8   uint32    num_lines
    offset 12  uint32    samples_per_line
    offset 16  float32   samples, line-major (line 0 first)
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CorruptFileError
from .phantom import PhantomSpec, SystemEffects
from .rfm import AceResult
from .units import ScanConfig

RF_MAGIC = b"ACERF001"
_HEADER = struct.Struct("<8sII")
HEADER_SIZE = _HEADER.size
_SAMPLE_DTYPE = np.dtype("<f4")


def rf_paths(out: str | Path) -> tuple[Path, Path]:
    """``<out>.rf`` and its ``<out>.json`` sidecar; a trailing ``.rf`` is accepted."""
    out = Path(out)
    stem = out.with_suffix("") if out.suffix == ".rf" else out
    return stem.with_name(stem.name + ".rf"), stem.with_name(stem.name + ".json")


def write_rf(path: str | Path, samples: np.ndarray) -> None:
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ValueError("RF samples must be a 2-D (lines x samples) array")
    lines, n = samples.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(RF_MAGIC, lines, n))
        fh.write(np.ascontiguousarray(samples, dtype=_SAMPLE_DTYPE).tobytes())


def read_rf(path: str | Path) -> np.ndarray:
    """Read an RF file into a float32 array of shape ``(lines, samples)``."""
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise CorruptFileError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, lines, n = _HEADER.unpack_from(data)
    if magic != RF_MAGIC:
        raise CorruptFileError(f"{path}: bad magic {magic!r}")
    expected = lines * n * _SAMPLE_DTYPE.itemsize
    if len(data) - HEADER_SIZE != expected:
        raise CorruptFileError(
            f"{path}: payload is {len(data) - HEADER_SIZE} bytes, header implies {expected}"
        )
    return np.frombuffer(data, dtype=_SAMPLE_DTYPE, offset=HEADER_SIZE).reshape(lines, n).copy()


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc


def sidecar_document(
    config: ScanConfig, spec: PhantomSpec, effects: SystemEffects, extra: Optional[dict] = None
) -> dict:
    doc = {
        "format": "ACERF001",
        "scan_config": config.to_dict(),
        "phantom": spec.to_dict(),
        "system_effects": effects.to_dict(),
        "seed": spec.seed,
        "provenance": {
            "synthetic": True,
            "seed": spec.seed,
            "ground_truth_alpha_db_cm_mhz": spec.alpha.value,
        },
    }
    if extra:
        doc.update(extra)
    return doc


def load_scan_config(sidecar: dict) -> ScanConfig:
    try:
        return ScanConfig.from_dict(sidecar["scan_config"])
    except (KeyError, TypeError) as exc:
        raise CorruptFileError(f"sidecar lacks a complete scan_config: {exc}") from exc


def result_document(
    result: AceResult, provenance: Optional[dict] = None
) -> dict:
    """Serializable summary of one estimation run."""
    provenance = dict(provenance or {})
    doc = {
        "method": result.method,
        "aggregate_alpha_db_cm_mhz": result.aggregate_alpha,
        "per_frequency": [
            {
                "f_hz": p.f_hz,
                "f_ref_hz": p.f_ref_hz,
                "alpha_db_cm_mhz": p.alpha,
                "slope": p.fit.slope,
                "intercept": p.fit.intercept,
                "r_squared": p.fit.r_squared,
                "residual_rms": p.fit.residual_rms,
                "n_points": p.fit.n_points,
            }
            for p in result.per_frequency
        ],
        "band": result.band.to_dict(),
        "options": dict(result.options),
        "provenance": provenance,
        "oscillation_metric": result.mean_residual_rms,
    }
    truth = provenance.get("ground_truth_alpha_db_cm_mhz")
    if truth is not None:
        doc["signed_error_db_cm_mhz"] = result.aggregate_alpha - truth
    return doc


def write_curves_csv(path: str | Path, result: AceResult) -> int:
    """Write ``pair_f_hz,depth_m,ln_ratio,fit_value`` rows; returns the row count."""
    curves = result.curves
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair_f_hz", "depth_m", "ln_ratio", "fit_value"])
        for est, curve in zip(result.per_frequency, curves.curves):
            for z, y in zip(curves.depths, curve):
                fit_value = est.fit.intercept + est.fit.slope * z
                writer.writerow([repr(est.f_hz), repr(float(z)), repr(float(y)), repr(float(fit_value))])
                rows += 1
    return rows
