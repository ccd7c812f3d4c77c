"""Loewner-based data-driven controller design.

Typical flow: sample a plant, count and locate its right-half-plane poles and
zeros, build an achievable reference model, interpolate the ideal controller
with a Loewner pencil, then certify the reduced controllers.
"""

from .certify import (
    ClosedLoopData,
    ProjectionTestResult,
    StabilityCertificate,
    certify_controllers,
    certify_orders,
    delta_norm,
    gamma_bound,
    projection_stability_test,
    reconstruct_closed_loop,
    step_response,
)
from .errors import LDDCError, ValidationError
from .hardy import (
    HardyProjector,
    HardySplit,
    bandpass_prefilter,
    has_integrator,
    laguerre_basis,
    project,
)
from .loewner import (
    DescriptorSystem,
    LoewnerInterpolator,
    LoewnerPencil,
    build_pencil,
    eval_descriptor,
    minimal_order,
    partition_points,
    realize,
)
from .pipeline import LDDC, PipelineConfig, load_config, run_pipeline
from .plants import (
    DelayedRational,
    FreqResponseData,
    OpenChannel,
    RationalLTI,
    TransferModel,
    eval_transfer,
    invert_response,
    make_linear_grid,
    make_log_grid,
    sample_response,
)
from .refmodel import ReferenceModel, eval_blaschke, ideal_controller, make_achievable
from .unstable import (
    InstabilityAnalyzer,
    InstabilityEstimate,
    analyze,
    count_unstable,
    detect_rhp_zeros,
    estimate_rhp_poles,
)

__version__ = "0.1.0"

__all__ = [
    "ClosedLoopData",
    "DelayedRational",
    "DescriptorSystem",
    "FreqResponseData",
    "HardyProjector",
    "HardySplit",
    "InstabilityAnalyzer",
    "InstabilityEstimate",
    "LDDC",
    "LDDCError",
    "LoewnerInterpolator",
    "LoewnerPencil",
    "OpenChannel",
    "PipelineConfig",
    "ProjectionTestResult",
    "RationalLTI",
    "ReferenceModel",
    "StabilityCertificate",
    "TransferModel",
    "ValidationError",
    "analyze",
    "bandpass_prefilter",
    "build_pencil",
    "certify_controllers",
    "certify_orders",
    "count_unstable",
    "delta_norm",
    "detect_rhp_zeros",
    "estimate_rhp_poles",
    "eval_blaschke",
    "eval_descriptor",
    "eval_transfer",
    "gamma_bound",
    "has_integrator",
    "ideal_controller",
    "invert_response",
    "laguerre_basis",
    "load_config",
    "make_achievable",
    "make_linear_grid",
    "make_log_grid",
    "minimal_order",
    "partition_points",
    "project",
    "projection_stability_test",
    "realize",
    "reconstruct_closed_loop",
    "run_pipeline",
    "sample_response",
    "step_response",
]
