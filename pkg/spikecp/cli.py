#!/usr/bin/env python3
"""
Command-line entry point: ``python -m spikecp <command>``.

    gen         draw a synthetic dataset from a YAML spec
    train       train a network with surrogate gradients and write a model file
    infer       calibrate a policy and decide one input (prints one JSON line)
    experiment  run the Monte Carlo harness from a YAML config
    sweep       repeat an experiment over values of p_targ, i_th, n_checkpoints or n_cal
    inspect     print the header of a model or dataset file

Every command is a thin wrapper around the library; errors are logged with
the offending path and give exit code 1.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from spikecp import __version__
from spikecp.analysis.harness import calibrate_and_infer, run_experiment, sweep, write_sweep
from spikecp.analysis.summarize import summarize_report
from spikecp.errors import InvalidParameterError, SpikeCPError
from spikecp.inference.policies import Policy
from spikecp.snn.kernels import KERNEL_KINDS, FIRST_ORDER, make_kernel
from spikecp.snn.model_io import load_model, model_header, save_model
from spikecp.snn.network import init_params
from spikecp.training.trainer import TrainConfig, evaluate_accuracy, train
from spikecp.utils.config import SWEEP_PARAMETERS, load_experiment_config
from spikecp.utils.datagen import generate, load_synthetic_spec, split_indices
from spikecp.utils.dataset_io import DATA_VERSION, dataset_header, load_dataset, save_dataset
from spikecp.utils.events import load_events
from spikecp.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)

INTEGER_SWEEPS = ("i_th", "n_checkpoints", "n_cal")


def _checkpoints_arg(value):
    return value if "," in value else int(value)


def cmd_gen(args):
    spec = load_synthetic_spec(args.spec)
    data = generate(spec, args.n, args.seed)
    save_dataset(data, args.out)
    print(f"✓ Wrote {len(data)} items (C={data.n_classes}, N={data.n_input}, T={data.T}) to {args.out}")
    return 0


def cmd_train(args):
    data = load_dataset(args.data)
    kernel = make_kernel(args.kernel, args.tau_mem, args.tau_syn, args.tau_ref, T=data.T, horizon=args.horizon)
    params = init_params(
        data.n_input, args.hidden, data.n_classes, data.T, kernel, threshold=args.threshold, seed=args.seed
    )
    cfg = TrainConfig(args.epochs, args.lr, args.batch_size, args.slope, args.seed)
    params, history = train(params, data, cfg)
    save_model(params, args.out)

    history_path = Path(args.history) if args.history else Path(args.out).with_suffix(".history.csv")
    history.to_csv(history_path, index=False)
    accuracy = evaluate_accuracy(params, data)
    print("=" * 60)
    print(f"✓ Model written to {args.out} (layers={params.layer_sizes})")
    print(f"  Training accuracy at T: {accuracy:.4f}")
    print(f"  Loss history: {history_path}")
    print("=" * 60)
    return 0


def _load_test_input(args, params):
    if args.events:
        n_channels = params.n_input // 2 if args.split_polarity else params.n_input
        return load_events(args.events, params.T, n_channels, args.duration, args.split_polarity)
    if args.input:
        data = load_dataset(args.input)
        if not 0 <= args.index < len(data):
            raise InvalidParameterError(f"--index must lie in 0..{len(data) - 1}, got {args.index}")
        return data.inputs[args.index]
    raise InvalidParameterError("Give the test input with --input (and --index) or --events")


def _json_ready(value):
    """Non-finite floats become the strings 'inf', '-inf' or 'nan' so the line stays strict JSON."""
    if isinstance(value, dict):
        return {key: _json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def cmd_infer(args):
    if args.ptarg is None and Policy.parse(args.policy) is not Policy.STATIC_POINT:
        raise InvalidParameterError(f"--ptarg is required for policy {args.policy}")
    params = load_model(args.model)
    x = _load_test_input(args, params)
    cal_set = load_dataset(args.cal)
    if args.ncal is not None:
        if not 1 <= args.ncal < len(cal_set):
            raise InvalidParameterError(
                f"--ncal must lie in 1..{len(cal_set) - 1} for the {len(cal_set)} items in {args.cal}, got {args.ncal}"
            )
        cal_idx, _ = split_indices(len(cal_set), args.ncal, args.seed)
        cal_set = cal_set.subset(cal_idx)
    decision, calibration = calibrate_and_infer(
        params, cal_set, x, args.policy, args.ptarg, i_th=args.ith, checkpoints=args.checkpoints
    )
    record = {"policy": Policy.parse(args.policy).value, **decision.to_dict(), "calibration": calibration}
    print(json.dumps(_json_ready(record), default=float, allow_nan=False))
    return 0


def _experiment_config(args):
    cfg = load_experiment_config(args.config)
    overrides = {
        "policy": args.policy,
        "p_targ": args.ptarg,
        "i_th": args.ith,
        "checkpoints": args.checkpoints,
        "n_cal": args.ncal,
        "n_trials": args.trials,
        "seed": args.seed,
        "threads": args.threads,
        "output_dir": args.output,
    }
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if isinstance(overrides.get("checkpoints"), str):
        overrides["checkpoints"] = tuple(int(t) for t in overrides["checkpoints"].split(",") if t.strip())
    return replace(cfg, **overrides)


def cmd_experiment(args):
    cfg = _experiment_config(args)
    report = run_experiment(cfg, dump_scores=args.dump_scores)
    output_path = report.write(cfg.output_dir)
    print(summarize_report(output_path, title=f"SpikeCP Experiment: {cfg.name}"))
    return 0


def cmd_sweep(args):
    cfg = _experiment_config(args)
    cast = int if args.param in INTEGER_SWEEPS else float
    values = [cast(v) for v in args.values.split(",") if v.strip()]
    reports = sweep(cfg, args.param, values)
    output_file = Path(args.out) if args.out else Path(cfg.output_dir) / f"sweep_{args.param}.csv"
    write_sweep(reports, args.param, values, output_file)
    if reports:
        print(summarize_report(output_file, title=f"SpikeCP Sweep over {args.param}"))
    else:
        print(f"✓ Empty sweep written to {output_file}")
    return 0


def _is_dataset_file(path):
    with open(path) as f:
        for line in f:
            if line.strip():
                return line.strip() == f"version: {DATA_VERSION}"
    return False


def cmd_inspect(args):
    for path in args.paths:
        header = dataset_header(path) if _is_dataset_file(path) else model_header(path)
        print("=" * 60)
        print(path)
        print("=" * 60)
        for key, value in header.items():
            print(f"  {key}: {value}")
    return 0


def _add_policy_args(parser, required=False):
    parser.add_argument("--policy", required=required, choices=[p.value for p in Policy], help="Inference policy")
    parser.add_argument("--ptarg", type=float, help="Target reliability p_targ in (0, 1)")
    parser.add_argument("--ith", type=int, help="Target set size I_th for SpikeCP")
    parser.add_argument("--checkpoints", type=_checkpoints_arg, help="Checkpoint count or comma-separated times")
    parser.add_argument("--ncal", type=int, help="Number of calibration inputs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spikecp", description="Conformal delay-adaptive inference for spiking neural networks"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    gen = commands.add_parser("gen", help="Generate a synthetic dataset")
    gen.add_argument("--spec", required=True, help="Synthetic spec YAML")
    gen.add_argument("--n", type=int, required=True, help="Number of items")
    gen.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    gen.add_argument("--out", required=True, help="Output dataset file")
    gen.set_defaults(handler=cmd_gen)

    trn = commands.add_parser("train", help="Train a network with surrogate gradients")
    trn.add_argument("--data", required=True, help="Training dataset file")
    trn.add_argument("--out", required=True, help="Output model file")
    trn.add_argument("--hidden", type=int, nargs="*", default=[64], help="Hidden layer sizes (default: 64)")
    trn.add_argument("--epochs", type=int, default=30, help="Epochs; 0 writes the initial weights")
    trn.add_argument("--lr", type=float, default=0.005, help="SGD learning rate")
    trn.add_argument("--batch-size", type=int, default=32)
    trn.add_argument("--slope", type=float, default=5.0, help="Surrogate slope")
    trn.add_argument("--seed", type=int, default=0, help="Seed for initialisation and shuffling")
    trn.add_argument("--threshold", type=float, default=1.0, help="Firing threshold")
    trn.add_argument("--kernel", choices=KERNEL_KINDS, default=FIRST_ORDER)
    trn.add_argument("--tau-mem", type=float, default=4.0)
    trn.add_argument("--tau-syn", type=float, default=2.0)
    trn.add_argument("--tau-ref", type=float, default=1.0)
    trn.add_argument("--horizon", type=int, help="Kernel truncation horizon (default: automatic)")
    trn.add_argument("--history", help="Per-epoch loss CSV (default: next to the model)")
    trn.set_defaults(handler=cmd_train)

    inf = commands.add_parser("infer", help="Calibrate and decide a single input")
    inf.add_argument("--model", required=True, help="Model file")
    inf.add_argument("--cal", required=True, help="Calibration dataset file")
    inf.add_argument("--input", help="Dataset file holding the test input")
    inf.add_argument("--index", type=int, default=0, help="Item of --input to decide (default: 0)")
    inf.add_argument("--events", help="Event list (t channel polarity) holding the test input")
    inf.add_argument("--duration", type=float, help="Event recording duration (default: last event time)")
    inf.add_argument("--split-polarity", action="store_true", help="Separate channels for OFF events")
    inf.add_argument("--seed", type=int, default=0, help="Seed for the --ncal subsample")
    _add_policy_args(inf, required=True)
    inf.set_defaults(handler=cmd_infer)

    for name, handler, help_text in (
        ("experiment", cmd_experiment, "Run the Monte Carlo harness"),
        ("sweep", cmd_sweep, "Sweep one experiment parameter"),
    ):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="Experiment config YAML")
        _add_policy_args(sub)
        sub.add_argument("--trials", type=int, help="Number of trials R")
        sub.add_argument("--seed", type=int, help="Experiment seed")
        sub.add_argument("--threads", type=int, help="Worker threads (default: $SPIKECP_THREADS or physical cores)")
        sub.add_argument("--output", help="Output directory")
        sub.set_defaults(handler=handler)
        if name == "experiment":
            sub.add_argument("--dump-scores", action="store_true", help="Write trial-0 calibration scores")
        else:
            sub.add_argument("--param", required=True, choices=SWEEP_PARAMETERS, help="Parameter to sweep")
            sub.add_argument("--values", required=True, help="Comma-separated values")
            sub.add_argument("--out", help="Sweep CSV (default: <output>/sweep_<param>.csv)")

    ins = commands.add_parser("inspect", help="Print model or dataset headers")
    ins.add_argument("paths", nargs="+", help="Model or dataset files")
    ins.set_defaults(handler=cmd_inspect)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except (SpikeCPError, OSError) as e:
        logger.error(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
