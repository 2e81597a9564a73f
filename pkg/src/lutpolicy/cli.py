"""Command-line interface: train, evaluate, compile, diagnose, parity-check.

Exit codes: 0 success, 1 runtime failure (including training divergence and
parity mismatches), 2 usage or configuration errors. Output files land
under $LUTPOLICY_OUT (default: current directory).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import diagnostics
from .compiler import ADC_MAX, ADC_MIN, binarize, parity_check
from .config import RunConfig, preset_names, resolve_config
from .envs import make_env
from .errors import ConfigError, ProtocolError, StateError, TrainingDiverged
from .lutnet import LutPolicy
from .rtl import emit_rtl, resource_report
from .sac import evaluate, train
from .serialize import load_circuit, load_model, save_circuit, save_model

OUT_ROOT_VAR = "LUTPOLICY_OUT"


def _out_root() -> str:
    return os.environ.get(OUT_ROOT_VAR, ".")


def cmd_train(args) -> int:
    cfg = resolve_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.steps is not None:
        cfg.total_steps = args.steps
    if args.out is not None:
        cfg.out_dir = args.out
    cfg.validate()
    out_dir = os.path.join(_out_root(), cfg.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    tag = diagnostics.config_hash(cfg.to_dict())

    def progress(step, mean, std):
        print(f"step {step}: eval return {mean:.1f} +- {std:.1f}", flush=True)

    policy, record = train(cfg, progress=progress)
    model_path = os.path.join(out_dir, f"model_{tag}.bin")
    record_path = os.path.join(out_dir, f"run_{tag}.json")
    if isinstance(policy, LutPolicy):
        save_model(policy, model_path)
        print(f"model: {model_path}")
    else:
        print("policy type mlp is a training baseline; no model file emitted")
    record.save(record_path)
    print(f"record: {record_path}")
    if record.final_eval:
        print(f"final eval: {record.final_eval['mean']:.1f} "
              f"+- {record.final_eval['std']:.1f}")
    return 0


def cmd_eval(args) -> int:
    policy = load_model(args.model)
    env = make_env(args.env)
    mode = "hard" if args.hard else "relaxed"
    mean, std, _ = evaluate(policy, env, args.episodes, noise_sigma=args.noise,
                            seed=args.seed, mode=mode)
    print("sigma,mean_return,std_return,episodes")
    print(f"{args.noise},{mean},{std},{args.episodes}")
    return 0


def cmd_compile(args) -> int:
    policy = load_model(args.model)
    try:
        circuit = binarize(policy, adc_scale=args.adc_scale,
                           out_quant_bits=args.out_quant)
    except StateError:
        print("error: model statistics are not frozen; finish training before "
              "compiling", file=sys.stderr)
        return 1
    circuit_path = args.circuit or os.path.splitext(args.model)[0] + ".circuit.bin"
    save_circuit(circuit, circuit_path)
    print(f"circuit: {circuit_path}")
    if args.rtl:
        text = emit_rtl(circuit, args.stages)
        with open(args.rtl, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"rtl: {args.rtl}")
    for line in resource_report(circuit, args.stages).lines():
        print(line)
    return 0


def cmd_diag(args) -> int:
    policy = load_model(args.model)
    out_dir = os.path.join(_out_root(), args.out)
    os.makedirs(out_dir, exist_ok=True)
    tag = diagnostics.config_hash({"model": os.path.basename(args.model),
                                   "what": args.what, "seed": args.seed})
    path = diagnostics.diag_filename(out_dir, args.what, tag)
    if args.what == "connections":
        counts, unused = diagnostics.input_connection_histogram(policy)
        diagnostics.write_connection_csv(path, counts)
        print(f"dimensions without connections: {unused}")
    elif args.what == "bits":
        diagnostics.write_bit_csv(path, diagnostics.bit_index_histogram(policy))
    else:
        env = make_env(args.env)
        sigmas = [float(s) for s in args.sigmas.split(",")]
        mode = "hard" if args.hard else "relaxed"
        rows = diagnostics.noise_sweep(policy, env, sigmas, args.episodes,
                                       seed=args.seed, mode=mode)
        diagnostics.write_noise_csv(path, rows)
    print(f"csv: {path}")
    return 0


def cmd_parity(args) -> int:
    policy = load_model(args.model)
    circuit = load_circuit(args.circuit)
    rng = np.random.default_rng(args.seed)
    raw = rng.integers(ADC_MIN, ADC_MAX + 1, size=(args.samples, circuit.d_in))
    mismatches = parity_check(policy, circuit, raw)
    print(f"parity: {mismatches} mismatches over {args.samples} observations")
    return 0 if mismatches == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lutpolicy", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a policy from a preset or config file")
    p.add_argument("config", help="preset name or path to a config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=None, help="override total_steps")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model")
    p.add_argument("model")
    p.add_argument("--env", default="pendulum")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hard", action="store_true", help="deployment (binarized) mode")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compile", help="freeze a model into a circuit and RTL")
    p.add_argument("model")
    p.add_argument("--stages", type=int, default=0, choices=(0, 1, 2))
    p.add_argument("--rtl", default=None, help="write RTL text here")
    p.add_argument("--circuit", default=None, help="circuit output path")
    p.add_argument("--adc-scale", type=float, default=2.0 ** -10)
    p.add_argument("--out-quant", type=int, default=15)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("diag", help="connectivity histograms and noise sweeps")
    p.add_argument("model")
    p.add_argument("--what", choices=("connections", "bits", "noise"),
                   required=True)
    p.add_argument("--env", default="pendulum")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--sigmas", default="0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hard", action="store_true")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("parity", help="check a circuit against its model")
    p.add_argument("model")
    p.add_argument("circuit")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_parity)

    p = sub.add_parser("presets", help="list shipped configuration presets")
    p.set_defaults(func=lambda args: (print("\n".join(preset_names())), 0)[1])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (TrainingDiverged, ProtocolError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
