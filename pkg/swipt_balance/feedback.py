"""
Precoder feedback models: codebook (PMI) quantization and a noisy analog proxy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np

from swipt_balance.errors import DimensionError
from swipt_balance.grassmann import Codebook, chordal_distance_sq, quantize
from swipt_balance.ia import IASolution, mmse_decoders
from swipt_balance.model import ChannelSet, SystemConfig
from swipt_balance.numerics import SeedLike, complex_normal, make_rng, orthonormalize

logger = logging.getLogger(__name__)

ANALOG_MODEL_LABEL = "analog-proxy (additive Gaussian + MMSE scaling + orthonormalization)"


@dataclass
class FeedbackOutcome:
    """Transmitter-side precoder estimates after feedback."""

    mode: Literal["quantized", "analog"]
    precoders: np.ndarray
    realized_z: np.ndarray
    bits: Optional[int] = None
    feedback_snr_db: Optional[float] = None
    indices: List[int] = field(default_factory=list)
    decoders: Optional[np.ndarray] = None
    model: str = ""


def _distances(true: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    return np.array([chordal_distance_sq(true[k], estimate[k]) for k in range(true.shape[0])])


def _receiver_decoders(cfg: Optional[SystemConfig], ch: Optional[ChannelSet], precoders: np.ndarray):
    if cfg is None or ch is None:
        return None
    return mmse_decoders(cfg, ch, precoders)


def quantized_feedback(
    ia: IASolution,
    cb: Codebook,
    cfg: Optional[SystemConfig] = None,
    ch: Optional[ChannelSet] = None,
) -> FeedbackOutcome:
    """
    Replace each IA precoder with its nearest codebook entry.

    With ``cfg`` and ``ch`` the receivers recompute MMSE decoders against the
    fed-back precoders.
    """
    V = ia.precoders
    if V.shape[1:] != (cb.M, cb.d):
        raise DimensionError(f"precoders are {V.shape[1:]}, codebook entries are {(cb.M, cb.d)}")
    indices = []
    estimates = []
    for k in range(V.shape[0]):
        index, entry = quantize(V[k], cb)
        indices.append(index)
        estimates.append(entry)
    precoders = np.stack(estimates)
    return FeedbackOutcome(
        mode="quantized",
        precoders=precoders,
        realized_z=_distances(V, precoders),
        bits=cb.bits,
        indices=indices,
        decoders=_receiver_decoders(cfg, ch, precoders),
        model=f"random Grassmannian codebook, {cb.bits} bits",
    )


def analog_feedback(
    ia: IASolution,
    feedback_snr_db: float,
    rng_seed: SeedLike = None,
    cfg: Optional[SystemConfig] = None,
    ch: Optional[ChannelSet] = None,
) -> FeedbackOutcome:
    """
    Analog precoder feedback proxy.

    Each precoder is observed through additive CN(0, 1/SNR_f) noise, scaled by
    the MMSE factor SNR_f / (1 + SNR_f) and orthonormalized. The resulting
    chordal distance falls as 1/SNR_f at high feedback SNR.
    """
    if not np.isfinite(feedback_snr_db):
        raise ValueError("feedback SNR must be finite")
    rng = make_rng(rng_seed)
    snr = 10.0 ** (feedback_snr_db / 10.0)
    V = ia.precoders
    noisy = V + complex_normal(rng, V.shape) / np.sqrt(snr)
    mmse = snr / (1.0 + snr) * noisy
    precoders = np.stack([orthonormalize(mmse[k]) for k in range(V.shape[0])])
    return FeedbackOutcome(
        mode="analog",
        precoders=precoders,
        realized_z=_distances(V, precoders),
        feedback_snr_db=float(feedback_snr_db),
        decoders=_receiver_decoders(cfg, ch, precoders),
        model=ANALOG_MODEL_LABEL,
    )
