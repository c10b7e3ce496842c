"""Achievable-region boundaries for generalized bottleneck and funnel
problems over discrete memoryless sources.

Given a joint source (q, T) and two convex information functionals, the
package computes the lower and upper boundaries of the achievable pairs
(E[f(p_w)], E[g(T p_w)]) over all finite mixtures matching the marginal,
extracts explicit witness channels, and cross-checks the results against
exact binary-symmetric formulas and a brute-force oracle.
"""

__version__ = "0.1.0"

from .closed_forms import (
    BscInstance,
    GerberPoint,
    arimoto_mr_gerber,
    arimoto_mrs_gerber,
    k_frame_to_entropy,
    k_norm,
    mr_gerber,
    mr_gerber_point,
    mrs_gerber,
)
from .core import (
    Channel,
    Distribution,
    DivergenceKernel,
    JointDistribution,
    arimoto_conditional_entropy,
    beta_norm,
    binary_entropy,
    binary_entropy_inv,
    bsc_joint,
    conditional_f_information,
    decompose_joint,
    entropy,
    f_divergence,
    f_information,
    joint_from_marginal_channel,
    load_joint,
    resolve_functional,
    star,
)
from .envelope import (
    EnvelopeResult,
    LagrangianGraph,
    SimplexLattice,
    build_lagrangian_graph,
    envelope_gap_at,
    envelope_general,
    lower_envelope_1d,
    upper_envelope_1d,
)
from .oracle import OracleConfig, OraclePoint, oracle_boundary, oracle_exhaustive_binary
from .sweep import (
    BoundaryCurve,
    BoundaryPoint,
    WitnessChannel,
    bottleneck_value,
    boundary_point_at_lambda,
    default_lambda_grid,
    funnel_value,
    matched_channel_extract,
    matched_channel_invariance_check,
    problem_curve,
    sweep,
    transform_entropy_frame,
)

__all__ = [
    "BoundaryCurve",
    "BoundaryPoint",
    "BscInstance",
    "Channel",
    "Distribution",
    "DivergenceKernel",
    "EnvelopeResult",
    "GerberPoint",
    "JointDistribution",
    "LagrangianGraph",
    "OracleConfig",
    "OraclePoint",
    "SimplexLattice",
    "WitnessChannel",
    "arimoto_conditional_entropy",
    "arimoto_mr_gerber",
    "arimoto_mrs_gerber",
    "beta_norm",
    "binary_entropy",
    "binary_entropy_inv",
    "bottleneck_value",
    "boundary_point_at_lambda",
    "bsc_joint",
    "build_lagrangian_graph",
    "conditional_f_information",
    "decompose_joint",
    "default_lambda_grid",
    "entropy",
    "envelope_gap_at",
    "envelope_general",
    "f_divergence",
    "f_information",
    "funnel_value",
    "joint_from_marginal_channel",
    "k_frame_to_entropy",
    "k_norm",
    "load_joint",
    "lower_envelope_1d",
    "matched_channel_extract",
    "matched_channel_invariance_check",
    "mr_gerber",
    "mr_gerber_point",
    "mrs_gerber",
    "oracle_boundary",
    "oracle_exhaustive_binary",
    "problem_curve",
    "resolve_functional",
    "star",
    "sweep",
    "transform_entropy_frame",
    "upper_envelope_1d",
]
