"""Trainable lookup-table circuit policies for continuous control.

Pipeline: thermometer-encode observations, run them through sparsely
connected LUT layers with a per-action popcount head, train the relaxation
with soft actor-critic, then freeze the result into a bit-exact integer
circuit with RTL emission and structural resource reports.
"""

__version__ = "0.1.0"

from .compiler import CompiledCircuit, binarize, build_action_table, circuit_eval
from .config import RunConfig, RunRecord
from .encoding import (
    RunningStats,
    ThermometerSpec,
    compute_thresholds,
    encode,
    inverse_normal_cdf,
    normalize_clip,
)
from .lutnet import ActionHead, LutLayer, LutPolicy, PolicyConfig, init_policy, policy_action
from .rtl import ResourceReport, emit_rtl, resource_report
from .rtlsim import RtlModule, simulate_actions
from .sac import ReplayBuffer, SacTrainer, evaluate, train
from .serialize import load_circuit, load_model, save_circuit, save_model

__all__ = [
    "ActionHead", "CompiledCircuit", "LutLayer", "LutPolicy", "PolicyConfig",
    "ReplayBuffer", "ResourceReport", "RtlModule", "RunConfig", "RunRecord",
    "RunningStats", "SacTrainer", "ThermometerSpec", "binarize",
    "build_action_table", "circuit_eval", "compute_thresholds", "emit_rtl",
    "encode", "evaluate", "init_policy", "inverse_normal_cdf", "load_circuit",
    "load_model", "normalize_clip", "policy_action", "resource_report",
    "save_circuit", "save_model", "simulate_actions", "train",
]
