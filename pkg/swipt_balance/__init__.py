from .errors import SwiptError
from .model import ChannelSet, SystemConfig, check_feasible, realize_channels, sigma_id2, stack_channels
from .ia import IASolution, solve_ia, solve_leakage_min, solve_mmse, solve_subspace_3user
from .grassmann import (
    CDDecomposition,
    Codebook,
    build_codebook,
    cd_decompose,
    chordal_distance_sq,
    displace,
    quantize,
)
from .swipt import (
    BalancedResult,
    MaxEHResult,
    balanced_precoders_iterative,
    balanced_precoders_noniterative,
    design_z,
    energy_bounds,
    max_eh_precoders,
    z_bar,
    z_eh,
)
from .metrics import MetricsRecord, evaluate, harvested_energy, rate_loss_bound, ser_qpsk, sum_rate
from .feedback import FeedbackOutcome, analog_feedback, quantized_feedback

__all__ = [
    "SwiptError",
    "ChannelSet",
    "SystemConfig",
    "check_feasible",
    "realize_channels",
    "sigma_id2",
    "stack_channels",
    "IASolution",
    "solve_ia",
    "solve_leakage_min",
    "solve_mmse",
    "solve_subspace_3user",
    "CDDecomposition",
    "Codebook",
    "build_codebook",
    "cd_decompose",
    "chordal_distance_sq",
    "displace",
    "quantize",
    "BalancedResult",
    "MaxEHResult",
    "balanced_precoders_iterative",
    "balanced_precoders_noniterative",
    "design_z",
    "energy_bounds",
    "max_eh_precoders",
    "z_bar",
    "z_eh",
    "MetricsRecord",
    "evaluate",
    "harvested_energy",
    "rate_loss_bound",
    "ser_qpsk",
    "sum_rate",
    "FeedbackOutcome",
    "analog_feedback",
    "quantized_feedback",
]
