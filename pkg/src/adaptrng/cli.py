"""Command-line driver.

Exit codes: 0 success, 1 battery failure, 2 configuration error,
3 malformed input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import harness
from .bits import read_stream, write_ascii, write_bits1
from .config import load_config, reference
from .errors import ConfigError, DomainError, InputFormatError, SeedError
from .nist import run_battery, write_report_csv, write_report_json

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_FORMAT = 0, 1, 2, 3
OUT_ENV = "ADAPTRNG_OUT"


def _stub_pass(cfg, n_bits):
    return True


def _stub_fail(cfg, n_bits):
    return False


_STUBS = {"pass": _stub_pass, "fail": _stub_fail}


def _overrides(args) -> dict[str, str]:
    pairs = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        pairs[key.strip().lower()] = value.strip()
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    return pairs


def _run_config(args):
    return load_config(args.config, _overrides(args))


def _out_dir(args, run_cfg=None) -> Path:
    chosen = args.out or (run_cfg.output_dir if run_cfg else None) or os.environ.get(OUT_ENV) or "."
    path = Path(chosen)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc.strerror}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")
    return path


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_generate(args) -> int:
    run_cfg = _run_config(args)
    if args.bits <= 0:
        raise ConfigError("--bits must be positive")
    fmt = args.format or run_cfg.output_format
    name = args.name or run_cfg.output_name
    out = _out_dir(args, run_cfg)
    start = time.perf_counter()
    stream = harness.run_pipeline(run_cfg.pipeline, args.bits).output[: args.bits]
    elapsed = time.perf_counter() - start
    written = []
    if fmt in ("bits1", "both"):
        written.append(out / f"{name}.bits1")
        write_bits1(written[-1], stream)
    if fmt in ("ascii", "both"):
        written.append(out / f"{name}.txt")
        write_ascii(written[-1], stream)
    print(f"wrote {len(stream)} bits to {', '.join(map(str, written))}")
    print(f"ones fraction {stream.ones() / len(stream):.6f}")
    print(f"throughput {len(stream) / max(elapsed, 1e-9):.3g} bits/s")
    return EXIT_OK


def _print_report(report) -> None:
    for r in report.results:
        label = "N/A " if not r.applicable else ("Pass" if r.passed else "Fail")
        p = f"{r.p_value:.6f}" if r.p_values else "-"
        print(f"  {r.test_name:<42} {label}  {p}")
    print("all rows passed" if report.all_passed else "battery FAILED: " + ", ".join(report.failed_rows()))


def cmd_test(args) -> int:
    stream = read_stream(args.stream, args.format)
    if len(stream) == 0:
        raise InputFormatError(f"{args.stream} holds no bits")
    out = _out_dir(args)
    report = run_battery(stream)
    write_report_csv(out / f"{args.name}.csv", report)
    write_report_json(out / f"{args.name}.json", report)
    _print_report(report)
    return EXIT_OK if report.all_passed else EXIT_FAIL


def _sweep_spec(parameter: str, args, run_cfg) -> harness.SweepSpec:
    s = run_cfg.sweep
    return harness.SweepSpec.default(
        parameter,
        nominal=args.nominal if args.nominal is not None else s.get("nominal"),
        step=args.step if args.step is not None else s.get("step"),
        max_steps=args.max_steps if args.max_steps is not None else s.get("max_steps"),
        bits_per_point=args.bits if args.bits is not None else s.get("bits_per_point"),
        seeds_per_point=args.seeds_per_point if args.seeds_per_point is not None
        else s.get("seeds_per_point"),
    )


def _compare(parameters, args, run_cfg, stem: str) -> int:
    specs = [_sweep_spec(p, args, run_cfg) for p in parameters]
    out = _out_dir(args, run_cfg)
    evaluate = _STUBS.get(args.stub)
    v_ref = args.v_ref
    if v_ref is None and evaluate is not None:
        v_ref = run_cfg.pipeline.vdd / 2
    reports = [harness.compare_fixed_vs_adaptive(spec, run_cfg.pipeline, evaluate, args.jobs, v_ref)
               for spec in specs]
    harness.write_sweep_csv(out / f"{stem}.csv", reports)
    harness.write_sweep_json(out / f"{stem}.json", reports)
    for rep in reports:
        for arm, rng in (("fixed", rep.fixed_range), ("adaptive", rep.adaptive_range)):
            span = "empty" if rng.empty else f"[{rng.lower:g}, {rng.upper:g}]"
            print(f"{rep.parameter:>4} {arm:<8} {span:<24} {len(rng.points)} points visited")
        enh = rep.enhancement
        print(f"{rep.parameter:>4} enhancement "
              f"{'undefined (fixed width 0)' if enh is None else f'{100 * enh:.1f} %'}; "
              f"adaptive contains fixed: {rep.adaptive_contains_fixed}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    run_cfg = _run_config(args)
    parameter = args.parameter or run_cfg.sweep.get("parameter")
    if parameter is None:
        raise ConfigError("sweep needs --parameter or sweep.parameter in the config")
    return _compare([parameter], args, run_cfg, f"sweep_{parameter}")


def cmd_compare(args) -> int:
    run_cfg = _run_config(args)
    return _compare(harness.PARAMETERS, args, run_cfg, "compare")


def cmd_repeat(args) -> int:
    run_cfg = _run_config(args)
    table = harness.repeated_run_study(run_cfg.pipeline, args.runs, args.bits, args.stream, args.jobs)
    out = _out_dir(args, run_cfg)
    harness.write_pass_rate_csv(out / f"{args.name}.csv", table)
    _write_json(out / f"{args.name}.json", table.to_dict())
    for r in table.rows:
        p = "-" if r.mean_p_value is None else f"{r.mean_p_value:.6f}"
        print(f"  {r.test_name:<42} {r.pass_rate:>6}  {p}")
    print(f"{table.runs_all_passed}/{table.runs} runs passed every row")
    return EXIT_OK if table.runs_all_passed == table.runs else EXIT_FAIL


def cmd_bitmap(args) -> int:
    if args.width <= 0:
        raise ConfigError(f"--width must be positive, got {args.width}")
    stream = read_stream(args.stream, args.format)
    text = harness.emit_bitmap(stream, args.width)
    out = _out_dir(args)
    path = out / f"{args.name}.pbm"
    path.write_text(text)
    height = len(stream) // args.width
    print(f"wrote {args.width}x{height} bitmap to {path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, config: bool = True) -> None:
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or .)")
    if config:
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key; repeatable")
        p.add_argument("--seed", type=lambda s: int(s, 0), help="64-bit run seed")


def _sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nominal", type=float)
    p.add_argument("--step", type=float, help="step size in both directions")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--bits", type=int, help="bits per sweep point")
    p.add_argument("--seeds-per-point", type=int)
    p.add_argument("--v-ref", type=float, help="fixed reference (default: calibrated at nominal)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--stub", choices=sorted(_STUBS), help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptrng",
        description="Adaptive-digitizer RNG simulator and SP 800-22 battery.",
        epilog="config keys: " + ", ".join(reference()))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a generated bit stream")
    _common(p)
    p.add_argument("--bits", type=int, default=1 << 20)
    p.add_argument("--format", choices=("bits1", "ascii", "both"))
    p.add_argument("--name", help="file stem (default: stream)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("test", help="run the battery on a stream file")
    p.add_argument("stream")
    _common(p, config=False)
    p.add_argument("--format", choices=("auto", "bits1", "ascii"), default="auto")
    p.add_argument("--name", default="report")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("sweep", help="resilience search for one parameter, both digitizers")
    _common(p)
    p.add_argument("--parameter", choices=harness.PARAMETERS)
    _sweep_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="resilience search over vdd, g0 and tmr")
    _common(p)
    _sweep_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("repeat", help="pass rates over independently seeded runs")
    _common(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--bits", type=int, default=1_670_000)
    p.add_argument("--stream", choices=harness.STREAMS, default="output")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--name", default="repeat")
    p.set_defaults(func=cmd_repeat)

    p = sub.add_parser("bitmap", help="render a stream as a P1 bitmap")
    p.add_argument("stream")
    _common(p, config=False)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--format", choices=("auto", "bits1", "ascii"), default="auto")
    p.add_argument("--name", default="bitmap")
    p.set_defaults(func=cmd_bitmap)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputFormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SeedError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
