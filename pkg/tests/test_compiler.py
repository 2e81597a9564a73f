import math

import numpy as np
import pytest

from conftest import make_frozen_policy
from lutpolicy.compiler import (
    ADC_MAX,
    ADC_MIN,
    ADC_NEVER,
    binarize,
    build_action_table,
    circuit_eval,
    decode_action,
    parity_check,
    quantize_action,
)
from lutpolicy.encoding import compute_thresholds
from lutpolicy.errors import ConfigError, StateError
from lutpolicy.lutnet import PolicyConfig, init_policy


def reference_action_table(alpha_p, beta, g, frac_bits, squash="tanh"):
    """Independent oracle: scalar math + Python's banker's rounding."""
    out = []
    for s in range(g + 1):
        z = s / g - 0.5
        y = math.exp(alpha_p) * z + beta
        if squash == "tanh":
            y = math.tanh(y)
        word = round(y * (1 << frac_bits))
        out.append(max(ADC_MIN, min(ADC_MAX, word)))
    return out


class TestBuildActionTable:
    def test_center_zero(self):
        table = build_action_table(0.3, 0.0, group_size=8, out_quant_bits=15)
        assert table[4] == 0

    def test_tanh_odd_symmetry(self):
        table = build_action_table(1.1, 0.0, group_size=10, out_quant_bits=15)
        assert table[0] == -table[10]

    def test_against_reference_rounding_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            alpha_p = rng.uniform(-3, 2)
            beta = rng.uniform(-1, 1)
            g = int(rng.integers(1, 40))
            frac = int(rng.integers(4, 16))
            squash = "tanh" if rng.uniform() < 0.7 else "identity"
            got = build_action_table(alpha_p, beta, g, frac, squash)
            assert got.tolist() == reference_action_table(alpha_p, beta, g, frac, squash)

    def test_monotone(self):
        table = build_action_table(0.9, -0.4, group_size=33, out_quant_bits=12)
        assert np.all(np.diff(table.astype(np.int32)) >= 0)


class TestBinarize:
    def test_requires_frozen_stats(self):
        pol = init_policy(2, 1, PolicyConfig(width=8, bits=5), seed=0)
        with pytest.raises(StateError):
            binarize(pol, adc_scale=0.001)

    def test_identity_stats_unit_scale_thresholds(self):
        pol = make_frozen_policy(d_in=1, bits=7)
        pol.stats.mean = np.zeros(1)
        pol.stats.m2 = np.ones(1) * pol.stats.count  # sigma = 1
        circuit = binarize(pol, adc_scale=1.0)
        taus = compute_thresholds(7).thresholds
        # bit 0 always set after clipping; others cut at ceil(tau)
        assert circuit.int_thresholds[0, 0] == ADC_MIN
        for m in range(1, 7):
            assert circuit.int_thresholds[0, m] == math.ceil(taus[m])

    def test_all_negative_logits_constant_circuit(self):
        pol = make_frozen_policy(seed=3)
        for layer in pol.layers:
            layer.table_logits = -np.abs(layer.table_logits) - 0.1
        circuit = binarize(pol, adc_scale=0.001)
        rng = np.random.default_rng(1)
        raw = rng.integers(ADC_MIN, ADC_MAX + 1, size=(50, pol.d_in))
        words = circuit_eval(circuit, raw)
        for row in words:
            np.testing.assert_array_equal(row, circuit.action_tables[:, 0])

    def test_sram_monotone(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        for d in range(circuit.d_act):
            assert np.all(np.diff(circuit.action_tables[d].astype(np.int32)) >= 0)

    def test_never_sentinel(self):
        pol = make_frozen_policy(d_in=1, bits=5)
        pol.stats.mean = np.array([1e9])  # thresholds far beyond the ADC range
        circuit = binarize(pol, adc_scale=1.0)
        assert circuit.int_thresholds[0, -1] == ADC_NEVER


class TestCircuitEval:
    def test_parity_random_policies(self):
        rng = np.random.default_rng(7)
        for seed in range(4):
            pol = make_frozen_policy(seed=seed, d_in=2, d_act=2, width=24,
                                     bits=9, arity=5)
            circuit = binarize(pol, adc_scale=0.003)
            raw = rng.integers(ADC_MIN, ADC_MAX + 1, size=(2000, 2))
            assert parity_check(pol, circuit, raw) == 0

    def test_parity_exhaustive_single_dim(self):
        pol = make_frozen_policy(seed=11, d_in=1, d_act=1, width=12, bits=15, arity=3)
        circuit = binarize(pol, adc_scale=0.0033)
        raw = np.arange(ADC_MIN, ADC_MAX + 1, dtype=np.int64)[:, None]
        assert parity_check(pol, circuit, raw) == 0

    def test_saturation_matches_nearest_in_range(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        lo = np.full(circuit.d_in, ADC_MIN, dtype=np.int64)
        hi = np.full(circuit.d_in, ADC_MAX, dtype=np.int64)
        np.testing.assert_array_equal(circuit_eval(circuit, lo - 5000),
                                      circuit_eval(circuit, lo))
        np.testing.assert_array_equal(circuit_eval(circuit, hi + 12345),
                                      circuit_eval(circuit, hi))

    def test_thermometer_monotone_single_input(self):
        pol = make_frozen_policy(seed=5, d_in=1, bits=15)
        circuit = binarize(pol, adc_scale=0.001)
        raws = np.linspace(ADC_MIN, ADC_MAX, 500).astype(np.int64)
        counts = [
            int(np.sum(raw >= circuit.int_thresholds[0])) for raw in raws
        ]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_decode_quantize_roundtrip(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        words = circuit.action_tables[:, 3]
        np.testing.assert_array_equal(
            quantize_action(circuit, decode_action(circuit, words)), words)

    def test_identity_squash_circuit(self):
        pol = make_frozen_policy(seed=9, squash="identity")
        circuit = binarize(pol, adc_scale=0.01)
        raw = np.random.default_rng(2).integers(ADC_MIN, ADC_MAX + 1, size=(500, pol.d_in))
        assert parity_check(pol, circuit, raw) == 0

    def test_bad_out_quant(self, frozen_policy):
        with pytest.raises(ConfigError):
            binarize(frozen_policy, adc_scale=0.01, out_quant_bits=16)
