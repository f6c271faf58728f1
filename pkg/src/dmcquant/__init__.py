"""Optimal and near-optimal output quantizers for discrete memoryless channels."""
from . import _backend as backend
from .baselines import combine_loss, greedy_combining, greedy_combining_heap, kl_means, run_gc, run_kl_means
from .channel import (
    Channel,
    ChannelError,
    Labeling,
    PamSpec,
    bsc,
    check_dominance,
    discretize_pam,
    joint_prefix,
    posterior_geometry,
    read_channel,
    relabel_inputs_dominant,
    relabel_outputs_sequential,
    validate,
    write_channel,
)
from .cost import (
    CostFamily,
    SegmentCostView,
    alpha_mi,
    cost_to_alpha_mi,
    dq_cost,
    mi_gap,
    mutual_information,
    phi,
    sdq_cost,
    segment_cost,
)
from .dp import QiReport, QiViolation, SdqSolution, check_qi, dp_smawk, dp_standard, dp_yao, enumerate_optimal
from .idp import IdpState, idp, relabel_for_incumbent
from .quantizer import Assignment
from .smawk import LazyMatrix, row_minima

__version__ = "0.1.0"

__all__ = [
    "Assignment", "Channel", "ChannelError", "CostFamily", "IdpState", "Labeling", "LazyMatrix",
    "PamSpec", "QiReport", "QiViolation", "SdqSolution", "SegmentCostView", "alpha_mi", "backend",
    "bsc", "check_dominance", "check_qi", "combine_loss", "cost_to_alpha_mi", "discretize_pam",
    "dp_smawk", "dp_standard", "dp_yao", "dq_cost", "enumerate_optimal", "greedy_combining",
    "greedy_combining_heap", "idp", "joint_prefix", "kl_means", "mi_gap", "mutual_information",
    "phi", "posterior_geometry", "read_channel", "relabel_for_incumbent", "relabel_inputs_dominant",
    "relabel_outputs_sequential", "row_minima", "run_gc", "run_kl_means", "sdq_cost",
    "segment_cost", "validate", "write_channel",
]
