"""Link-level simulation and optimization for RDARS-aided uplink and ISAC systems.

An RDARS (reconfigurable distributed antennas and reflecting surface) is a
surface whose elements either reflect passively with a unit-modulus phase
shift or are wired back to the base station as distributed antennas.
"""

from rdars.channel import (
    ChannelSet,
    FadingParams,
    Geometry,
    generate_isac_channels,
    generate_uplink_channels,
    path_loss,
    sample_fading,
    steering_vector,
)
from rdars.core import (
    GainDecomposition,
    ModeSelection,
    PhaseProfile,
    UplinkEffectiveChannel,
    effective_uplink_channel,
    gain_decomposition,
    mrc_combiner,
    ris_approx_gains,
    uplink_snr,
)
from rdars.errors import (
    ConfigError,
    DegenerateChannelError,
    InfeasibleError,
    InvalidGeometryError,
    RdarsError,
    SearchCapError,
)
from rdars.isac import (
    IsacBeamformer,
    IsacEffectiveChannels,
    IsacSolution,
    comm_snr,
    isac_effective_channels,
    optimize_beamformer_qos,
    radar_snr,
    radar_snr_mrc_mrt,
    solve_fixed_mode,
    solve_p2,
)
from rdars.optimize import (
    OptimizerOptions,
    UplinkSolution,
    optimize_phases,
    select_modes_exhaustive,
    select_modes_greedy,
    solve_p1,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "ConfigError",
    "DegenerateChannelError",
    "FadingParams",
    "GainDecomposition",
    "Geometry",
    "InfeasibleError",
    "InvalidGeometryError",
    "IsacBeamformer",
    "IsacEffectiveChannels",
    "IsacSolution",
    "ModeSelection",
    "OptimizerOptions",
    "PhaseProfile",
    "RdarsError",
    "SearchCapError",
    "UplinkEffectiveChannel",
    "UplinkSolution",
    "comm_snr",
    "effective_uplink_channel",
    "gain_decomposition",
    "generate_isac_channels",
    "generate_uplink_channels",
    "isac_effective_channels",
    "mrc_combiner",
    "optimize_beamformer_qos",
    "optimize_phases",
    "path_loss",
    "radar_snr",
    "radar_snr_mrc_mrt",
    "ris_approx_gains",
    "sample_fading",
    "select_modes_exhaustive",
    "select_modes_greedy",
    "solve_p1",
    "solve_fixed_mode",
    "solve_p2",
    "steering_vector",
    "uplink_snr",
]
