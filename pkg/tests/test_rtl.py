import numpy as np
import pytest

from conftest import make_frozen_policy
from lutpolicy.compiler import ADC_MAX, ADC_MIN, binarize, circuit_eval
from lutpolicy.errors import ConfigError
from lutpolicy.rtl import emit_rtl, latency_cycles, resource_report
from lutpolicy.rtlsim import RtlModule, simulate_actions


def thermometer_bits(circuit, raw):
    raw = np.clip(np.asarray(raw, dtype=np.int64), ADC_MIN, ADC_MAX)
    bits = (raw[:, None] >= circuit.int_thresholds).astype(np.uint8)
    return bits.reshape(-1)


class TestEmission:
    def test_deterministic_text(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        assert emit_rtl(circuit, 1) == emit_rtl(circuit, 1)

    def test_zero_stages_only_rom_clocked(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        text = emit_rtl(circuit, 0)
        assert text.count("always @(posedge clk)") == circuit.d_act

    def test_two_stages_has_two_register_cuts(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        text = emit_rtl(circuit, 2)
        assert text.count("pipeline register cut") == 2
        assert text.count("always @(posedge clk)") == circuit.d_act + 2

    def test_three_stages_rejected(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        with pytest.raises(ConfigError):
            emit_rtl(circuit, 3)

    def test_single_layer_supports_one_stage_only(self):
        pol = make_frozen_policy(seed=4, n_layers=1, width=10, bits=5, d_act=2)
        circuit = binarize(pol, adc_scale=0.01)
        emit_rtl(circuit, 1)
        with pytest.raises(ConfigError):
            emit_rtl(circuit, 2)


class TestSelfSimulation:
    @pytest.mark.parametrize("stages", [0, 1, 2])
    def test_matches_circuit_eval(self, stages):
        pol = make_frozen_policy(seed=6, d_in=2, d_act=3, width=18, bits=7, arity=4)
        circuit = binarize(pol, adc_scale=0.004)
        text = emit_rtl(circuit, stages)
        module = RtlModule(text)
        rng = np.random.default_rng(stages)
        for _ in range(40):
            raw = rng.integers(ADC_MIN, ADC_MAX + 1, size=2)
            bits = thermometer_bits(circuit, raw)
            outs = module.run(bits, latency_cycles(stages))
            got = np.array([outs[f"act_{d}"] for d in range(3)], dtype=np.int16)
            np.testing.assert_array_equal(got, circuit_eval(circuit, raw))

    def test_simulate_actions_wrapper(self):
        pol = make_frozen_policy(seed=8, d_in=1, d_act=1, width=6, bits=5, arity=2)
        circuit = binarize(pol, adc_scale=0.002)
        text = emit_rtl(circuit, 0)
        raw = np.array([1234])
        got = simulate_actions(text, thermometer_bits(circuit, raw), 0)
        np.testing.assert_array_equal(got, np.atleast_1d(circuit_eval(circuit, raw)))

    def test_pipeline_outputs_need_latency(self):
        pol = make_frozen_policy(seed=8, d_in=1, d_act=1, width=6, bits=5, arity=2)
        circuit = binarize(pol, adc_scale=0.002)
        module = RtlModule(emit_rtl(circuit, 2))
        raw = np.array([-777])
        bits = thermometer_bits(circuit, raw)
        expected = int(np.atleast_1d(circuit_eval(circuit, raw))[0])
        early = module.run(bits, latency_cycles(2) - 1)
        full = module.run(bits, latency_cycles(2))
        assert full["act_0"] == expected
        # one cycle early the ROM register has not seen the settled popcount
        assert (early["act_0"] == expected) in (True, False)  # defined, no crash


class TestResourceReport:
    def test_lower_bound(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        report = resource_report(circuit, 0)
        assert report.lut_count >= sum(circuit.widths)

    def test_zero_stages_ff_is_rom_register_only(self, frozen_policy):
        circuit = binarize(frozen_policy, adc_scale=0.01)
        report = resource_report(circuit, 0)
        assert report.ff_estimate == circuit.d_act * 16

    def test_paper_shape_window(self):
        # 2 x 1024 LUTs, 8 action dims (group 128): the structural estimate
        # must land inside the published-hardware window [2048, 6000]
        pol = make_frozen_policy(seed=12, d_in=4, d_act=8, width=1024, bits=5, arity=6)
        circuit = binarize(pol, adc_scale=0.01)
        report = resource_report(circuit, 2)
        assert 2048 <= report.lut_count <= 6000
        assert report.sram_words == 8 * 129

    def test_depth_and_stage_ffs(self):
        pol = make_frozen_policy(seed=13, d_in=2, d_act=2, width=16, bits=5, arity=3)
        circuit = binarize(pol, adc_scale=0.01)
        r0 = resource_report(circuit, 0)
        r2 = resource_report(circuit, 2)
        assert r2.ff_estimate == r0.ff_estimate + 16 + 16
        assert r0.logic_depth == 2 + 3 + 1  # layers + ceil(log2(8)) + rom read
