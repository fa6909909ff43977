"""Ultrasound attenuation estimation with the reference frequency method.

Synthetic RF phantoms, local power spectra, cepstral smoothing of the
spectra, and slope-based attenuation recovery.
"""

from .errors import (
    AceError,
    CorruptFileError,
    DegenerateBandError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidInputError,
    ResourceLimitError,
)
from .units import (
    Attenuation,
    RfFrame,
    ScanConfig,
    convert_attenuation,
    db_to_np,
    depth_of_sample,
    np_to_db,
)
from .phantom import (
    PhantomSpec,
    ScattererField,
    SystemEffects,
    add_noise,
    apply_tgc,
    exponential_tgc,
    generate_scatterers,
    simulate_frame,
    synthesize_rf,
)
from .spectra import BandSelection, SpectralMap, local_power_spectra, model_spectral_map, select_band
from .homomorphic import (
    Cepstrum,
    LifterSpec,
    lifter,
    real_cepstrum,
    reconstruct_spectrum,
    smooth_spectral_map,
)
from .rfm import (
    AceResult,
    FitResult,
    RatioCurves,
    RfmOptions,
    alpha_from_slope,
    fit_decay,
    interior_fit_range,
    oscillation_metric,
    ratio_curves,
    run_rfm,
    run_rfm_on_map,
)

__version__ = "0.1.0"
