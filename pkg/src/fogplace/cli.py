"""Command-line front end: ``fogplace solve | sweep | validate``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, read_instance
from .instances import generate, instance_to_dict, with_rate
from .model import DISTANCE_RANGE, TopologyError, validate_topology
from .optimizer import INFEASIBLE, build_model, solve
from .scenarios import BASELINE, DISTRIBUTION_LAYERS, calibration_check, run_sweep, sensitivity

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2

POWER_COLUMNS = ["scenario", "rate_mbps", "total_w", "network_w", "processing_w", "idle_w", "proportional_w", "saving_vs_baseline"]
DISTRIBUTION_COLUMNS = ["scenario", "rate_mbps", "layer", "fraction"]


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _error(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def _instance_for(cfg: RunConfig, base: Path | None, seed: int | None):
    loaded = cfg.load_instance(base)
    if loaded is not None:
        return loaded
    spec = cfg.instance_spec(seed)
    return generate(spec, cfg.profile_set(), cfg.core_hop_count, cfg.edge_servers)


def _load(args) -> tuple[RunConfig, Path | None]:
    cfg, base = load_config(args.config)
    for msg in cfg.out_of_range_warnings():
        _warn(msg)
    return cfg, base


# solve ----------------------------------------------------------------------


def cmd_solve(args) -> int:
    cfg, base = _load(args)
    if args.instance:
        topology, requests = read_instance(Path(args.instance))
    else:
        topology, requests = _instance_for(cfg, base, args.seed)
    if args.rate_mbps is not None:
        if not args.rate_mbps > 0:
            raise ConfigError(f"--rate-mbps must be > 0, got {args.rate_mbps}")
        requests = with_rate(requests, args.rate_mbps * 1e6, cfg.instance.ipb)
    elif not args.instance and cfg.instance_file is None:
        requests = with_rate(requests, cfg.instance.rate_mbps * 1e6, cfg.instance.ipb)
    scenario = cfg.scenario(args.scenario or cfg.scenario_objects()[0].name)

    if args.dump_instance:
        Path(args.dump_instance).write_text(json.dumps(instance_to_dict(topology, requests), indent=2) + "\n", encoding="utf-8")

    report = solve(build_model(topology, requests, scenario, cfg.wireless_model()), args.method)
    doc = report.to_dict(topology)
    doc["scenario"] = scenario.name
    if args.no_timestamp:
        doc.pop("wall_time", None)
    else:
        doc["generated"] = _stamp()
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        if out.is_dir():
            out = out / "report.json"
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_INFEASIBLE if report.status == INFEASIBLE else EXIT_OK


# sweep ----------------------------------------------------------------------


def power_rows(result) -> list[list[str]]:
    rows = []
    for name in result.scenarios:
        for rate in result.rates:
            rep = result.reports[name, rate]
            b = rep.breakdown if rep.status != INFEASIBLE else None
            rows.append(
                [
                    name,
                    _num(rate),
                    _num(b.grand_total if b else None),
                    _num(b.network_total if b else None),
                    _num(b.processing_total if b else None),
                    _num(b.idle_total if b else None),
                    _num(b.proportional_total if b else None),
                    _num(result.savings.get((name, rate))),
                ]
            )
    return rows


def distribution_rows(result) -> list[list[str]]:
    rows = []
    for name in result.scenarios:
        for rate in result.rates:
            dist = result.distribution.get((name, rate))
            if dist is None:
                continue
            for layer in DISTRIBUTION_LAYERS:
                rows.append([name, _num(rate), layer.name, _num(dist[layer])])
    return rows


def _csv_text(header: list[str], rows: list[list[str]], stamp: str | None) -> str:
    buf = io.StringIO()
    if stamp is not None:
        buf.write(f"# generated {stamp}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cfg, base = _load(args)
    spec = cfg.instance_spec(args.seed)
    instance = _instance_for(cfg, base, args.seed)
    profiles = cfg.profile_set()
    result = run_sweep(
        spec,
        cfg.scenario_objects(),
        cfg.rate_list(),
        profiles=profiles,
        core_hop_count=cfg.core_hop_count,
        wireless=cfg.wireless_model(),
        edge_servers=cfg.edge_servers,
        instance=instance,
    )
    calibration = calibration_check(result)
    summary = {
        "baseline": BASELINE,
        "seed": spec.seed,
        "rates_mbps": result.rates,
        "scenarios": result.summary(),
        "calibration": calibration,
    }
    missed = [row["metric"] for row in calibration if not row["within"]]
    if missed or args.sensitivity:
        for metric in missed:
            _warn(f"calibration metric {metric} outside its target band; sensitivity table added to summary.json")
        summary["sensitivity"] = sensitivity(
            spec,
            result.rates,
            policy=cfg.policy(),
            eps_amp=cfg.wireless.eps_amp,
            alpha=cfg.wireless.alpha,
            core_hop_count=cfg.core_hop_count,
            profiles=profiles,
            edge_servers=cfg.edge_servers,
        )
    stamp = None if args.no_timestamp else _stamp()
    if stamp is not None:
        summary["generated"] = stamp

    out = Path(args.out or cfg.output.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in cfg.output.formats:
            (out / "power.csv").write_text(_csv_text(POWER_COLUMNS, power_rows(result), stamp), encoding="utf-8", newline="")
            (out / "distribution.csv").write_text(
                _csv_text(DISTRIBUTION_COLUMNS, distribution_rows(result), stamp), encoding="utf-8", newline=""
            )
        if "json" in cfg.output.formats:
            (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        _error(f"cannot write to {out}: {exc.strerror or exc}")
        return EXIT_CONFIG
    for name, stats in summary["scenarios"].items():
        print(f"{name}: max saving {_pct(stats['max_saving'])}, avg saving {_pct(stats['avg_saving'])}")
    print(f"wrote results to {out}")
    return EXIT_OK


def _pct(x) -> str:
    return "n/a" if x is None else f"{100 * x:.1f}%"


# validate -------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        cfg, base = load_config(args.config)
    except ConfigError as exc:
        print(f"violation: {exc}")
        return EXIT_CONFIG
    warnings = cfg.out_of_range_warnings()
    for msg in warnings:
        print(f"warning: {msg}")
    problems = []
    try:
        topology, _ = _instance_for(cfg, base, args.seed)
    except (TopologyError, ValueError) as exc:
        problems.append(str(exc))
    else:
        # out-of-reference distances are checked against the configured range
        # only when the user has opted in
        rng = cfg.instance.distance_range if args.allow_nonpaper else DISTANCE_RANGE
        problems.extend(validate_topology(topology, rng))
    for p in problems:
        print(f"violation: {p}")
    if problems or (warnings and not args.allow_nonpaper):
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


# entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogplace", description="Energy-optimal placement of IoT services over fog and cloud layers.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: $FOGPLACE_CONFIG, else built-in defaults)")
    common.add_argument("--seed", type=int, help="override instance.seed")
    common.add_argument("--allow-nonpaper", action="store_true", help="accept parameters outside the reference ranges")

    p = sub.add_parser("solve", parents=[common], help="solve one scenario at one rate")
    p.add_argument("--scenario", help="scenario name (default: first configured)")
    p.add_argument("--rate-mbps", type=float, help="per-device data rate in Mbps")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true", help="omit timing and timestamp fields")
    p.add_argument("--dump-instance", metavar="PATH", help="write the solved instance as a replay file")
    p.add_argument("--instance", metavar="PATH", help="solve a replay file instead of generating")
    p.add_argument("--method", choices=["bnb", "brute"], default="bnb")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="run every scenario over the rate sweep")
    p.add_argument("--out", help="output directory (default: output.dir)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    p.add_argument("--sensitivity", action="store_true", help="always include the sensitivity table")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="check config and generated topology")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
