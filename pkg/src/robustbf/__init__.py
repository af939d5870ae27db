"""Robust downlink multi-user beamforming under l1-norm bounded CSI uncertainty."""

from .channel import (
    ChannelModelParams,
    ChannelSet,
    SystemConfig,
    UncertaintyModel,
    build_channel_set,
    gen_channel,
    make_estimate,
    sample_error,
    sparsity_stats,
    steering_vector,
    to_angular,
    to_spatial,
)
from .coneprog import (
    ConeProgram,
    ProblemSpec,
    VariableLayout,
    build_l1_robust,
    build_l2_robust,
    build_perfect_csi,
    extract_solution,
    structurally_infeasible,
)
from .evaluate import Certificate, certify, mc_min_sinr, sinr_all, theorem1_check, wc_den_l1, wc_num_l1
from .numerics import RngStream, dft_basis, inner, norms
from .solver import SolverSettings, SolveResult, project_cones, project_soc, solve

__version__ = "0.1.0"

__all__ = [
    "ChannelModelParams",
    "ChannelSet",
    "Certificate",
    "ConeProgram",
    "ProblemSpec",
    "RngStream",
    "SolverSettings",
    "SolveResult",
    "SystemConfig",
    "UncertaintyModel",
    "VariableLayout",
    "build_channel_set",
    "build_l1_robust",
    "build_l2_robust",
    "build_perfect_csi",
    "certify",
    "dft_basis",
    "extract_solution",
    "gen_channel",
    "inner",
    "make_estimate",
    "mc_min_sinr",
    "norms",
    "project_cones",
    "project_soc",
    "sample_error",
    "sinr_all",
    "solve",
    "sparsity_stats",
    "steering_vector",
    "structurally_infeasible",
    "theorem1_check",
    "to_angular",
    "to_spatial",
    "wc_den_l1",
    "wc_num_l1",
]
