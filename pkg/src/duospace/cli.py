"""Command-line entry point: ``duospace run|compare|sweep``.

Exit codes: 0 success, 1 configuration error, 2 runtime error. Diagnostics go
to stderr; stdout receives at most one summary line.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from .errors import ConfigError, DuoSpaceError
from .ingest import MODES, Scenario, load_scenario_file, scenario_from_dict, scenario_to_dict, set_key
from .metrics import RunTrace, dumps_json, export_trace, latency_reduction, report_dict, summarize
from .pipeline.simulation import run_simulation

log = logging.getLogger("duospace")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
U64_MAX = 2**64 - 1


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage problems count as configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _jobs(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--jobs must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="duospace", description="Simulate baseline and predictive XR-agent pipelines.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--scenario", required=True, type=Path, help="scenario TOML file")
        sp.add_argument("--seed", type=_seed, help="override the scenario seed")
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="trace file format")

    run = sub.add_parser("run", help="run one mode and write its trace and report")
    common(run)
    run.add_argument("--mode", choices=MODES, help="override the scenario mode")

    cmp_ = sub.add_parser("compare", help="run both modes with the same seed")
    common(cmp_)

    sw = sub.add_parser("sweep", help="run once per value of one scenario key")
    common(sw)
    sw.add_argument("--mode", choices=MODES, help="override the scenario mode")
    sw.add_argument("--param", required=True, help="KEY=V1,V2,... with KEY a dotted scenario key")
    sw.add_argument("--jobs", type=_jobs, default=1, help="parallel runs (default 1)")
    return p


def _load(args: argparse.Namespace) -> Scenario:
    scenario = load_scenario_file(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_overrides(seed=args.seed)
    return scenario


def _run_and_export(scenario: Scenario, mode: str, out: Path, fmt: str) -> RunTrace:
    log.info("running %s mode, seed %d", mode, scenario.seed)
    trace = run_simulation(scenario, mode)
    export_trace(trace, fmt, out)
    return trace


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args)
    mode = args.mode or scenario.mode
    trace = _run_and_export(scenario, mode, args.out, args.format)
    r = summarize(trace)
    print(f"{mode} mean_aoi_s={r.mean_aoi_s:.9f} frames={r.frame_count}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    scenario = _load(args)
    base = _run_and_export(scenario, "baseline", args.out / "baseline", args.format)
    duo = _run_and_export(scenario, "duo", args.out / "duo", args.format)
    rb, rd = summarize(base), summarize(duo)
    reduction = latency_reduction(rb, rd)
    comparison = {
        "seed": scenario.seed,
        "baseline_fingerprint": base.fingerprint,
        "duo_fingerprint": duo.fingerprint,
        "baseline_mean_aoi_s": rb.mean_aoi_s,
        "duo_mean_aoi_s": rd.mean_aoi_s,
        "latency_reduction_pct": reduction,
        "baseline": report_dict(rb),
        "duo": report_dict(rd),
    }
    (args.out / "comparison.json").write_text(dumps_json(comparison), encoding="utf-8")
    print(f"latency_reduction_pct={reduction:.6f}")
    return EXIT_OK


def _parse_value(text: str) -> Any:
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_param(spec: str) -> tuple[str, list[str]]:
    key, sep, values = spec.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError("expected KEY=V1,V2,...", key="--param")
    items = [v.strip() for v in values.split(",")]
    if not items or any(v == "" for v in items):
        raise ConfigError("empty value in list", key="--param")
    return key, items


def sweep_scenarios(scenario: Scenario, key: str, values: Sequence[str]) -> list[Scenario]:
    """One validated scenario per value; unknown keys raise ``ConfigError``."""
    base = scenario_to_dict(scenario)
    out = []
    for v in values:
        data = set_key(base, key, _parse_value(v))
        out.append(scenario_from_dict(data, scenario.base_dir, load_trajectories=False))
    return out


def _sweep_one(job: tuple[dict, str, str]) -> tuple[float, float, float]:
    data, base_dir, mode = job
    scenario = scenario_from_dict(data, base_dir)
    trace = run_simulation(scenario, mode)
    r = summarize(trace)
    return r.mean_aoi_s, r.merge_delta_d_m.mean, r.merge_max_step_m.max


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _load(args)
    key, values = parse_param(args.param)
    variants = sweep_scenarios(scenario, key, values)
    mode = args.mode or scenario.mode
    jobs = [(scenario_to_dict(s), str(s.base_dir), mode) for s in variants]
    if args.jobs == 1:
        results = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "mean_aoi_s", "mean_delta_d_m", "max_max_step_m"])
    for v, (aoi, dd, step) in zip(values, results):
        w.writerow([v, f"{aoi:.9f}", f"{dd:.9f}", f"{step:.9f}"])
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sweep.csv").write_text(buf.getvalue(), encoding="utf-8")
    print(f"sweep {key}: {len(values)} runs")
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DuoSpaceError, OSError, ZeroDivisionError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
