"""Differential-geometry toolkit for Shannon-Kotel'nikov analog mappings.

Curve and surface geometry, 3:2 mapping surfaces, analytical distortion
models, a power-constrained parameter optimizer and a Monte-Carlo channel
simulator.
"""

from . import channel, curves, distortion, errors, mappings, optimizer, surfaces
from .channel import SimConfig, SimResult, decode, encode, run_simulation, slope_estimate
from .distortion import DistortionBreakdown, bpam_sdr, channel_power, opta_sdr
from .mappings import MAPPING_NAMES, MappingParams, MappingSystem, build_mapping
from .optimizer import OptProblem, OptResult, optimize_mapping, sweep

__version__ = "0.1.0"

__all__ = [
    "channel", "curves", "distortion", "errors", "mappings", "optimizer", "surfaces",
    "SimConfig", "SimResult", "encode", "decode", "run_simulation", "slope_estimate",
    "DistortionBreakdown", "opta_sdr", "bpam_sdr", "channel_power",
    "MAPPING_NAMES", "MappingParams", "MappingSystem", "build_mapping",
    "OptProblem", "OptResult", "optimize_mapping", "sweep",
]
