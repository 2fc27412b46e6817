"""Latency model and bandwidth allocation for a two-cell edge-computing VR social network."""

from .kernels import BACKEND
from .model import (ChannelDerived, EmptyGroupError, InvalidAllocation, ModelError,
                    ScenarioConfig, SpectrumAllocation, UserConfiguration, ValidationError,
                    ValidationResult, derive_channel, downlink_threshold, uplink_threshold,
                    validate_scenario)
from .latency import LatencyReport, end_to_end_report, estimate_upload_latency
from .optimize import (OptimizerSettings, OptimizerTrace, equal_baseline, optimize_downlink,
                       optimize_uplink, project_uplink)
from .harness import SweepSpec, run_sweep, swap_communities, symmetric_configuration

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelDerived", "EmptyGroupError", "InvalidAllocation", "ModelError", "ScenarioConfig",
    "SpectrumAllocation", "UserConfiguration", "ValidationError", "ValidationResult",
    "derive_channel", "downlink_threshold", "uplink_threshold", "validate_scenario",
    "LatencyReport", "end_to_end_report", "estimate_upload_latency",
    "OptimizerSettings", "OptimizerTrace", "equal_baseline", "optimize_downlink",
    "optimize_uplink", "project_uplink",
    "SweepSpec", "run_sweep", "swap_communities", "symmetric_configuration",
]
