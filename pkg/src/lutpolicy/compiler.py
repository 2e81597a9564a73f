"""Freeze trained policies into pure-integer circuits.

A compiled circuit contains no real-valued parameter: per-dimension integer
comparison thresholds (normalization constants folded in), binarized LUT
tables, fixed selection indices, and one small action table per output that
maps a popcount to a quantized action word. Evaluation is comparisons,
table lookups, popcounts, and one table read per action, bit-for-bit
reproducible anywhere.

Raw observations are ADC-style integers: `raw * adc_scale` is the real
value a sensor word represents. Integer thresholds are chosen by binary
search against the exact float pipeline of the hard-mode policy, so the
circuit agrees with it on every representable input, not just away from
boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .encoding import CLIP_HI, CLIP_LO
from .errors import ConfigError, ShapeError, StateError
from .lutnet import LutPolicy

ADC_MIN = -32768
ADC_MAX = 32767
# sentinel: one past ADC_MAX, meaning "no in-range word reaches this bit"
ADC_NEVER = 32768

FORMAT_VERSION = 1
ADDRESSING = "lsb-first"


@dataclass
class CompiledCircuit:
    bits: int
    d_in: int
    d_act: int
    arity: int
    widths: list
    int_thresholds: np.ndarray       # (d_in, bits) int32, ascending per row
    tables: list                     # per layer: uint8 (width, 2**arity)
    selections: list                 # per layer: int32 (width, arity)
    group_size: int
    action_tables: np.ndarray        # (d_act, group_size + 1) int16
    adc_scale: np.ndarray            # (d_in,) float64
    out_quant_bits: int
    squash: str
    addressing: str = ADDRESSING
    format_version: int = FORMAT_VERSION

    def meta(self) -> dict:
        return {
            "format_version": self.format_version,
            "addressing": self.addressing,
            "bits": self.bits,
            "d_in": self.d_in,
            "d_act": self.d_act,
            "arity": self.arity,
            "widths": list(self.widths),
            "group_size": self.group_size,
            "adc_scale": [float(s) for s in self.adc_scale],
            "out_quant_bits": self.out_quant_bits,
            "squash": self.squash,
        }

    def validate(self) -> None:
        if self.addressing != ADDRESSING:
            raise ConfigError(f"unsupported addressing {self.addressing!r}")
        if self.widths[-1] != self.d_act * self.group_size:
            raise ConfigError("final width must equal d_act * group_size")
        for d in range(self.d_act):
            if np.any(np.diff(self.action_tables[d].astype(np.int32)) < 0):
                raise ConfigError(f"action table {d} is not nondecreasing")


def round_to_even(x: np.ndarray) -> np.ndarray:
    """Round half to even (IEEE default), as an integer array."""
    return np.rint(x).astype(np.int64)


def build_action_table(alpha_p: float, beta: float, group_size: int,
                       out_quant_bits: int, squash: str = "tanh") -> np.ndarray:
    """Quantized popcount-to-action table for one output dimension.

    entry[s] mirrors the hard-mode head arithmetic, operation for operation,
    so compiled outputs match the float path exactly: z = s/|G| - 1/2,
    l = exp(alpha_p) * z + beta, optional tanh, then round-to-nearest-even
    onto signed fixed point with `out_quant_bits` fractional bits.
    """
    if group_size < 1:
        raise ConfigError("group size must be >= 1")
    s = np.arange(group_size + 1, dtype=np.float64)
    z = s / group_size - 0.5
    logit = np.exp(alpha_p) * z + beta
    y = np.tanh(logit) if squash == "tanh" else logit
    words = round_to_even(y * (1 << out_quant_bits))
    return np.clip(words, ADC_MIN, ADC_MAX).astype(np.int16)


def _integer_threshold(dim_scale: float, mean: float, sigma: float, tau: float) -> int:
    """Smallest raw word whose hard-path normalized value passes `tau`.

    Replicates the exact float pipeline of the deployed comparison
    (raw * scale -> subtract mean -> divide by sigma -> clip -> >= tau),
    which is monotone in the raw word, so a binary search finds the exact
    cut point including all rounding behavior.
    """

    def passes(raw: int) -> bool:
        x = raw * dim_scale
        normalized = min(max((x - mean) / sigma, CLIP_LO), CLIP_HI)
        return normalized >= tau

    if passes(ADC_MIN):
        return ADC_MIN
    if not passes(ADC_MAX):
        return ADC_NEVER
    lo, hi = ADC_MIN, ADC_MAX  # passes(lo) False, passes(hi) True
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi


def binarize(policy: LutPolicy, adc_scale, out_quant_bits: int = 15) -> CompiledCircuit:
    """Freeze a trained policy into a compiled circuit.

    Requires frozen running statistics (the normalization constants are
    folded into the integer thresholds). `adc_scale` is a scalar or one
    factor per observation dimension.
    """
    if not policy.stats.frozen:
        raise StateError("running statistics must be frozen before compilation")
    if not 1 <= out_quant_bits <= 15:
        raise ConfigError("out_quant_bits must lie in [1, 15]")
    scales = np.broadcast_to(np.asarray(adc_scale, dtype=np.float64),
                             (policy.d_in,)).copy()
    if np.any(scales <= 0):
        raise ConfigError("adc scales must be positive")
    sigma = policy.stats.sigma()
    mean = policy.stats.mean
    taus = policy.spec.thresholds
    thresholds = np.empty((policy.d_in, policy.spec.bits), dtype=np.int32)
    for j in range(policy.d_in):
        for m, tau in enumerate(taus):
            thresholds[j, m] = _integer_threshold(scales[j], mean[j], sigma[j], tau)

    tables = [layer.hard_tables() for layer in policy.layers]
    selections = [layer.selections().astype(np.int32) for layer in policy.layers]
    head = policy.head
    action_tables = np.stack([
        build_action_table(head.alpha_p[d], head.beta[d], head.group_size,
                           out_quant_bits, head.squash)
        for d in range(head.d_act)])

    circuit = CompiledCircuit(
        bits=policy.spec.bits, d_in=policy.d_in, d_act=policy.d_act,
        arity=policy.layers[0].arity,
        widths=[layer.width for layer in policy.layers],
        int_thresholds=thresholds, tables=tables, selections=selections,
        group_size=head.group_size, action_tables=action_tables,
        adc_scale=scales, out_quant_bits=out_quant_bits, squash=head.squash)
    circuit.validate()
    return circuit


def circuit_eval(circuit: CompiledCircuit, raw_obs: np.ndarray) -> np.ndarray:
    """Evaluate the circuit on integer sensor words.

    Accepts one observation (d_in,) or a batch (n, d_in); out-of-range
    words saturate to the ADC range, matching the clip semantics of the
    float path. Returns int16 action words.
    """
    raw = np.asarray(raw_obs)
    squeeze = raw.ndim == 1
    if squeeze:
        raw = raw[None, :]
    if raw.shape[1] != circuit.d_in:
        raise ShapeError(f"raw observation dim {raw.shape[1]} != {circuit.d_in}")
    raw = np.clip(raw.astype(np.int64), ADC_MIN, ADC_MAX)
    bits = (raw[:, :, None] >= circuit.int_thresholds[None, :, :]).astype(np.uint8)
    signal = bits.reshape(raw.shape[0], circuit.d_in * circuit.bits)
    for table, sel in zip(circuit.tables, circuit.selections):
        gathered = signal[:, sel].astype(np.int64)
        idx = gathered[..., 0].copy()
        for j in range(1, sel.shape[1]):
            idx += gathered[..., j] << j
        signal = table[np.arange(table.shape[0]), idx]
    counts = signal.reshape(raw.shape[0], circuit.d_act, circuit.group_size).sum(axis=2)
    words = np.take_along_axis(circuit.action_tables[None, :, :], counts[:, :, None],
                               axis=2)[:, :, 0]
    return words[0] if squeeze else words


def decode_action(circuit: CompiledCircuit, words: np.ndarray) -> np.ndarray:
    """Action words back to real values (the DAC side of the contract)."""
    return np.asarray(words, dtype=np.float64) / (1 << circuit.out_quant_bits)


def quantize_action(circuit: CompiledCircuit, action: np.ndarray) -> np.ndarray:
    """Reference output quantizer used for parity checks against the float path."""
    words = round_to_even(np.asarray(action, dtype=np.float64) * (1 << circuit.out_quant_bits))
    return np.clip(words, ADC_MIN, ADC_MAX).astype(np.int16)


def parity_check(policy: LutPolicy, circuit: CompiledCircuit, raw_obs: np.ndarray) -> int:
    """Number of observations where the circuit and the hard-mode policy
    disagree after matched quantization."""
    raw = np.atleast_2d(np.asarray(raw_obs))
    words = circuit_eval(circuit, raw)
    saturated = np.clip(raw.astype(np.int64), ADC_MIN, ADC_MAX)
    obs = saturated.astype(np.float64) * circuit.adc_scale
    old_mode = policy.mode
    policy.set_mode("hard")
    try:
        ref_words = quantize_action(circuit, policy.squash(
            policy.logits(policy.normalize(obs))))
    finally:
        policy.set_mode(old_mode)
    return int(np.sum(np.any(words != ref_words, axis=1)))
