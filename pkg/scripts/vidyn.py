#!/usr/bin/env python3
"""Command-line entry point: generate, train, forecast, onestep, evaluate, latent, reproduce-desk.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 I/O error.
"""

import argparse
import logging
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import settings  # noqa: E402
from config.errors import UsageError, VidynError  # noqa: E402
from config.run_config import DESK_CONFIG_PATH, RunConfig, describe_fields, load_run_config  # noqa: E402

logger = logging.getLogger("vidyn")

EXIT_IO = 4


def _config_epilog() -> str:
    lines = ["configuration keys (override with --set key=value):"]
    for key, default, description in describe_fields():
        lines.append(f"  {key:<28} {description} [default: {default}]")
    return "\n".join(lines)


def _parse_set(items: list[str]) -> dict[str, str]:
    overrides = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="Run config YAML/JSON (default: config/run_config.yaml)")
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="Override a config key, e.g. --set train.iterations=500 (repeatable)",
    )
    common.add_argument("--seed", type=int, help="Seed for data, training and simulation")
    common.add_argument("--threads", type=int, help="Worker thread cap (results do not depend on it)")
    common.add_argument("--print-config", action="store_true", help="Print and store the resolved config")
    common.add_argument("--log-level", type=str, help=f"Logging level (default: {settings.log_level})")

    parser = argparse.ArgumentParser(
        description="Variational-inference RNN for dynamical systems with random parameters",
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(
            name, help=help_text, parents=[common], epilog=_config_epilog(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    p = add("generate", "Generate a synthetic dataset")
    p.add_argument("--system", choices=["mackey-glass", "mackey_glass", "vdp"], help="Dynamical system")
    p.add_argument("--k", type=int, help="Number of trajectories")
    p.add_argument("--t", type=int, help="Observed steps per trajectory")
    p.add_argument("--out", type=str, help=f"Dataset directory (default: {settings.data_dir}/<system>)")

    p = add("train", "Train an encoder, VI model or baseline RNN")
    p.add_argument("kind", choices=["encoder", "vi", "baseline"])
    p.add_argument("--dataset", required=True, help="Dataset directory")
    p.add_argument("--encoder", help="Pretrained encoder checkpoint (required for vi)")
    p.add_argument("--lambda", dest="lambdas", help="KL penalty, or a comma-separated sweep")
    p.add_argument("--out", help="Output directory (default: output_dir)")

    p = add("forecast", "Monte Carlo multi-step forecasts")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ns", type=int, help="Ensemble size N_s")
    p.add_argument("--horizon", type=int, help="Forecast horizon")
    p.add_argument("--starts", help="Comma-separated start indices")
    p.add_argument("--out", help="Output directory")

    p = add("onestep", "One-step-ahead mixture predictions")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--samples", type=int, help="Latent samples M")
    p.add_argument("--out", help="Output directory")

    p = add("evaluate", "Metrics from one-step and forecast outputs")
    p.add_argument("--dataset", required=True)
    p.add_argument("--onestep", help="Directory of one-step CSVs")
    p.add_argument("--forecast", help="Directory of forecast ensemble CSVs")
    p.add_argument("--ll-denominator", choices=["var", "std"])
    p.add_argument("--out", help="Report directory")

    p = add("latent", "Latent-space analysis and lambda selection")
    p.add_argument("--checkpoints", nargs="+", required=True, help="VI checkpoints (one per lambda)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="Report directory")

    p = add("reproduce-desk", "Run the whole desk-scale pipeline and write acceptance.json")
    p.add_argument("--out", help="Run directory (default: output_dir of the desk preset)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = _parse_set(args.overrides)
    command = args.command
    if command == "generate":
        for flag, key in (("system", "data.system"), ("k", "data.k"), ("t", "data.t")):
            value = getattr(args, flag)
            if value is not None:
                overrides[key] = value.replace("-", "_") if flag == "system" else value
    elif command == "forecast":
        for flag, key in (("ns", "simulate.n_samples"), ("horizon", "simulate.horizon"), ("starts", "simulate.starts")):
            if getattr(args, flag) is not None:
                overrides[key] = getattr(args, flag)
    elif command == "onestep" and args.samples is not None:
        overrides["simulate.onestep_samples"] = args.samples
    elif command == "evaluate" and args.ll_denominator is not None:
        overrides["eval.ll_denominator"] = args.ll_denominator
    if args.threads is not None:
        overrides["threads"] = args.threads

    config_path = args.config or settings.run_config_path
    if config_path is None and command == "reproduce-desk":
        config_path = DESK_CONFIG_PATH
    config = load_run_config(config_path, overrides)

    defaults = {}
    if "output_dir" not in config.model_fields_set:
        defaults["output_dir"] = settings.output_dir
    if "threads" not in config.model_fields_set:
        defaults["threads"] = settings.threads
    if defaults:
        config = config.model_copy(update=defaults)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _lambdas(raw: str | None) -> list[float] | None:
    if raw is None:
        return None
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise UsageError(f"--lambda expects numbers, got {raw!r}") from e


def run(args: argparse.Namespace) -> int:
    from services import (
        cmd_evaluate,
        cmd_forecast,
        cmd_generate,
        cmd_latent,
        cmd_onestep,
        cmd_train,
        reproduce_desk,
    )
    from services.artifacts import write_resolved_config

    config = resolve_config(args)
    command = args.command
    out = getattr(args, "out", None)

    if command == "generate" and out is None:
        out = str(Path(settings.data_dir) / config.data.system)
    if args.print_config:
        print(config.dump_yaml())
        if out is not None:
            write_resolved_config(config, out)

    if command == "generate":
        cmd_generate(config, out)
    elif command == "train":
        paths = cmd_train(args.kind, config, args.dataset, out, args.encoder, _lambdas(args.lambdas))
        for path in paths:
            print(path)
    elif command == "forecast":
        print(cmd_forecast(config, args.checkpoint, args.dataset, out))
    elif command == "onestep":
        print(cmd_onestep(config, args.checkpoint, args.dataset, out))
    elif command == "evaluate":
        report = cmd_evaluate(config, args.dataset, args.onestep, args.forecast, out)
        print(report.scalar_frame().to_string(index=False))
    elif command == "latent":
        _, lam_star = cmd_latent(config, args.checkpoints, args.dataset, out)
        print(f"lambda* = {lam_star}")
    elif command == "reproduce-desk":
        acceptance = reproduce_desk(config, out)
        for name, entry in acceptance.items():
            if isinstance(entry, dict) and "pass" in entry:
                print(f"{name:<20} {'PASS' if entry['pass'] else 'FAIL'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return run(args)
    except VidynError as e:
        logger.error(str(e))
        logger.debug("details", exc_info=True)
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        logger.debug("details", exc_info=True)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
