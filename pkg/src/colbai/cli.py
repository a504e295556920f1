"""colbai command line.

Exit codes: 0 success, 1 a validation check failed, 2 configuration error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import streams
from .config import (
    check_keys,
    check_schema,
    expand_sweep,
    load_json,
    parse_experiment,
    parse_hard_params,
    parse_source,
)
from .hard import HardParams, sample_conditioned, sample_hard_instance
from .harness import (
    SUMMARY_COLUMNS,
    TRIAL_COLUMNS,
    ConfigError,
    ExperimentResult,
    ExplicitSource,
    run_trials,
    summary_rows,
    trial_rows,
    write_csv,
)
from .validate import run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _u64(text: str) -> int:
    try:
        return streams.check_seed(int(text, 0))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an unsigned 64-bit integer: {text}") from None


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colbai", description="Collaborative best arm identification experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "run one experiment and write per-trial and summary CSV"),
        ("sweep", "run every point of a parameter grid"),
        ("gen-instance", "write an explicit or hard instance as JSON"),
        ("validate-hard", "check the hard distribution's properties numerically"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--seed", type=_u64, metavar="U64", help="overrides the config seed")
        p.add_argument("--out", metavar="PATH", help="output path (default: stdout)")
        p.add_argument("--workers", type=_positive, metavar="N")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


@contextlib.contextmanager
def _parsing():
    """Report malformed configs as configuration errors."""
    try:
        yield
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from None


# -- output ---------------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _summary_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(f"{p.stem}.summary{p.suffix or '.csv'}")


def _typed(columns: Sequence[str], row: Sequence[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for c, v in zip(columns, row):
        if v == "":
            out[c] = None
        elif c in ("experiment_id", "algorithm", "instance_source"):
            out[c] = v
        elif c == "success":
            out[c] = v == "1"
        else:
            out[c] = float(v) if any(ch in v for ch in ".eE") or v in ("inf", "nan") else int(v)
    return out


def _write_results(results: Sequence[ExperimentResult], args: argparse.Namespace, command: str, seed: int) -> None:
    trials = [row for r in results for row in trial_rows(r)]
    summary = [row for r in results for row in summary_rows(r)]
    exp_id = results[0].config.experiment_id.split("/")[0] if results else ""
    header = f"colbai {command} experiment_id={exp_id} seed={seed}"
    if args.format == "json":
        doc = {
            "header": header,
            "seed": seed,
            "trials": [_typed(TRIAL_COLUMNS, r) for r in trials],
            "summary": [_typed(SUMMARY_COLUMNS, r) for r in summary],
        }
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
        return
    trial_text = write_csv(TRIAL_COLUMNS, trials, header + " table=trials")
    summary_text = write_csv(SUMMARY_COLUMNS, summary, header + " table=summary")
    if args.out is None:
        sys.stdout.write(trial_text + "\n" + summary_text)
    else:
        Path(args.out).write_text(trial_text)
        _summary_path(args.out).write_text(summary_text)


# -- commands -------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    with _parsing():
        cfg = parse_experiment(load_json(args.config), seed=args.seed, workers=args.workers)
    result = run_trials(cfg)
    _write_results([result], args, "run", cfg.seed)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    with _parsing():
        data = load_json(args.config)
        configs = list(expand_sweep(data, seed=args.seed, workers=args.workers))
        master = args.seed if args.seed is not None else int(data["seed"])
    results = [run_trials(c) for c in configs]
    _write_results(results, args, "sweep", master)
    return EXIT_OK


def cmd_gen_instance(args: argparse.Namespace) -> int:
    with _parsing():
        data = load_json(args.config)
        check_schema(data)
        check_keys(data, {"schema", "seed", "instance"}, "config", {"instance"})
        seed = args.seed if args.seed is not None else streams.check_seed(int(data.get("seed", 0)))
        inst_cfg = data["instance"]
        source = parse_source(inst_cfg)
    if isinstance(source, ExplicitSource):
        doc = source.instance.to_dict()
    else:
        rng = streams.make_stream(seed)
        if source.conditioned:
            hi = sample_conditioned(source.params, rng, source.max_attempts, K=source.K)
        else:
            hi = sample_hard_instance(source.params, rng, K=source.K)
        doc = hi.to_dict()
    doc = {"type": inst_cfg["type"] if inst_cfg["type"] != "hard" else "hard_instance", **doc}
    _emit(json.dumps(doc) + "\n", args.out)
    return EXIT_OK


VALIDATE_KEYS = {
    "schema", "seed", "hard", "samples", "conditional_samples", "acceptance_attempts", "gap_checks", "normalization_q",
}


def cmd_validate_hard(args: argparse.Namespace) -> int:
    with _parsing():
        data = load_json(args.config)
        check_schema(data)
        check_keys(data, VALIDATE_KEYS, "config", {"hard"})
        params: HardParams = parse_hard_params(data["hard"])
        seed = args.seed if args.seed is not None else streams.check_seed(int(data.get("seed", 0)))
        gap_checks = []
        for entry in data.get("gap_checks", []):
            check_keys(entry, {"eta", "L"}, "gap_checks entry", {"eta", "L"})
            gap_checks.append((float(entry["eta"]), int(entry["L"])))
            HardParams(n=1, L=gap_checks[-1][1], eta=gap_checks[-1][0])
        qs = [int(q) for q in data.get("normalization_q", [1, 6, 12])]
        if any(q < 0 or q > 16 for q in qs):
            raise ConfigError("normalization_q entries must lie in 0..16")
        counts = {
            k: int(data.get(k, default))
            for k, default in (("samples", 100_000), ("conditional_samples", 20_000), ("acceptance_attempts", 10_000))
        }
        if any(v < 1 for v in counts.values()):
            raise ConfigError("sample counts must be positive")
    results = run_suite(params, seed, gap_checks=gap_checks, normalization_q=qs, **counts)
    passed = all(r.passed for r in results)
    header = f"# colbai validate-hard seed={seed} n={params.n} L={params.L} eta={params.eta!r}"
    if args.format == "json":
        doc = {"header": header[2:], "seed": seed, "checks": [r.__dict__ for r in results], "passed": passed}
        text = json.dumps(doc, indent=1) + "\n"
    else:
        text = "\n".join([header] + [r.line() for r in results]) + "\n"
    _emit(text, args.out)
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "gen-instance": cmd_gen_instance,
    "validate-hard": cmd_validate_hard,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"colbai: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        print(f"colbai: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
