"""Near-field wideband hybrid beamforming for THz integrated sensing and communications."""

__version__ = "0.1.0"

from .array import (
    ArrayConfig,
    DegenerateGeometryError,
    Dictionary,
    SteeringParams,
    aperture,
    build_dictionary,
    element_range,
    element_range_fresnel,
    far_field_steering,
    fraunhofer_distance,
    squint_deviation,
    squint_map,
    steering_vector,
)
from .channel import (
    ChannelRealization,
    PathSet,
    Scenario,
    array_response,
    build_channels,
    channel_at,
    optimal_beamformer,
    received_signal,
    sample_paths,
    sample_targets,
    subcarrier_frequencies,
)
from .design import (
    HybridDesign,
    NumericalError,
    TradeoffConfig,
    bsa_baseband,
    design_hybrid,
    fd_isac_beamformer,
    jrc_beamformer,
    ls_baseband,
    normalize_baseband,
    omp_select,
    radar_beamformer,
    sd_analog,
    update_pi,
)
from .metrics import BeampatternGrid, beampattern, design_residual, spectral_efficiency, transmit_covariance
