"""Beamforming and achievable rates for symbiotic radio with many backscatter devices."""

from .channel import BdSymbolModel, ChannelRealization, SystemParams, sample_channels
from .beamforming import (
    BeamMethod,
    BeamformerResult,
    corr_eig_beamformer,
    mrc_beamformer,
    sdr_beamformer,
)
from .rates import (
    bd_sum_rate_logdet,
    bd_sum_rate_sinr,
    primary_rate_closed,
    primary_rate_mc,
)

__all__ = [
    "BdSymbolModel",
    "BeamMethod",
    "BeamformerResult",
    "ChannelRealization",
    "SystemParams",
    "bd_sum_rate_logdet",
    "bd_sum_rate_sinr",
    "corr_eig_beamformer",
    "mrc_beamformer",
    "primary_rate_closed",
    "primary_rate_mc",
    "sample_channels",
    "sdr_beamformer",
]
