"""Command-line driver.

Exit codes: 0 success, 1 validation error, 2 trend check failed,
3 exhaustive search refused by its size guard.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .baselines import STRATEGIES, run_strategy
from .errors import ConfigError, DatasetError, InstanceError, NcFormationError, SizeGuardError
from .flowsim import CSV_FIELDS, SimConfig, simulate, write_trace
from .formation import form_topology
from .game import build_payoff_table
from .geometry import Scenario, ScenarioConfig, generate_scenario

EXIT_OK, EXIT_INVALID, EXIT_TREND, EXIT_SIZE = 0, 1, 2, 3


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return v


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_scenario(path: str) -> Scenario:
    try:
        return Scenario.from_text(Path(path).read_text())
    except OSError as exc:
        raise InstanceError(f"cannot read scenario {path}: {exc}") from exc


def cmd_gen(args) -> int:
    cfg = ScenarioConfig(
        n_nodes=args.nodes,
        radius=args.radius,
        delta_factor=args.delta_factor,
        dest_count=args.dest_count,
        dest_policy=args.dest_policy,
    )
    cfg.validate()
    _emit(generate_scenario(cfg, args.seed).to_text(), args.out)
    return EXIT_OK


def cmd_form(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.show_game:
        i, j, d = args.show_game
        for v in (i, j, d):
            scenario.check_node(v)
        _emit(build_payoff_table(scenario, i, j, d, args.cost).to_text(), args.out)
        return EXIT_OK
    _emit(form_topology(scenario, args.cost).to_edge_list(), args.out)
    return EXIT_OK


def cmd_baseline(args) -> int:
    scenario = _load_scenario(args.scenario)
    _emit(run_strategy(args.strategy, scenario, args.cost).to_edge_list(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args.scenario)
    topo = run_strategy(args.strategy, scenario, args.cost).topology
    modes = ("SF", "NC") if args.mode.lower() == "both" else (args.mode,)
    lines = [",".join(CSV_FIELDS)]
    for mode in modes:
        rep = simulate(scenario, topo, SimConfig(mode=mode, slots=args.slots, seed=args.seed, trace=bool(args.trace)))
        lines.append(",".join(str(rep.csv_row()[c]) for c in CSV_FIELDS))
        if args.trace:
            path = args.trace if len(modes) == 1 else f"{args.trace}.{rep.mode.lower()}"
            write_trace(rep, path)
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _experiment_config(args) -> ex.ExperimentConfig:
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        base = ex.PRESETS[args.preset] if args.preset else None
        cfg = ex.parse_config(text, base)
    elif args.preset:
        cfg = ex.PRESETS[args.preset]
    else:
        raise ConfigError("sweep needs --preset or --config")
    if args.full:
        cfg = cfg.at_full_scale()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.replications is not None:
        cfg = replace(cfg, replications=args.replications)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    cfg.validate()
    return cfg


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    if cfg.kind == "location":
        rows = ex.run_location_study(cfg)
        _emit(ex.write_csv(rows, ex.LOCATION_COLUMNS), args.out)
    else:
        rows = ex.run_sweep(cfg)
        _emit(ex.write_csv(rows, ex.SWEEP_COLUMNS), args.out)
    if args.no_check:
        return EXIT_OK
    status = EXIT_OK
    for res in ex.check_trends(cfg, rows):
        print(f"trend {res.name}: {'PASS' if res.passed else 'FAIL'}", file=sys.stderr)
        for line in res.details:
            print(f"  {line}", file=sys.stderr)
        if not res.passed:
            status = EXIT_TREND
    return status


def cmd_summarize(args) -> int:
    text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    _emit(ex.summarize(text), args.out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # Bad arguments are validation errors; exit code 2 is reserved for trend failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ncformation", description="Game-theoretic topology formation with network coding.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random scenario")
    g.add_argument("--nodes", "-n", type=int, default=10)
    g.add_argument("--radius", type=float, default=10.0)
    g.add_argument("--delta-factor", type=float, default=1.0)
    g.add_argument("--dest-count", type=int, default=2)
    g.add_argument("--dest-policy", choices=("shared", "random", "edge_pair"), default="shared")
    g.add_argument("--seed", type=_seed, default=1)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("form", help="run the distributed formation on a scenario file")
    f.add_argument("scenario")
    f.add_argument("--cost", "-l", type=float, default=0.1, help="unit link cost")
    f.add_argument("--show-game", nargs=3, type=int, metavar=("I", "J", "D"), help="print one payoff table instead")
    f.add_argument("--out")
    f.set_defaults(func=cmd_form)

    b = sub.add_parser("baseline", help="run one strategy on a scenario file")
    b.add_argument("scenario")
    b.add_argument("--strategy", "-s", default="nc_centralized", choices=[s for s in STRATEGIES if s != "tcle"])
    b.add_argument("--cost", "-l", type=float, default=0.1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_baseline)

    s = sub.add_parser("simulate", help="form a topology and simulate dissemination on it")
    s.add_argument("scenario")
    s.add_argument("--strategy", default="proposed", choices=[s for s in STRATEGIES if s != "tcle"])
    s.add_argument("--cost", "-l", type=float, default=0.1)
    s.add_argument("--mode", default="both", choices=("SF", "NC", "both", "sf", "nc"))
    s.add_argument("--slots", type=int)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--trace", metavar="PATH", help="write a per-slot packet header trace")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run an experiment preset or config file to CSV")
    w.add_argument("--preset", choices=sorted(ex.PRESETS))
    w.add_argument("--config", metavar="PATH")
    w.add_argument("--seed", type=_seed)
    w.add_argument("--full", action="store_true", help="use the full replication count")
    w.add_argument("--replications", type=int)
    w.add_argument("--workers", type=int)
    w.add_argument("--no-check", action="store_true", help="skip the preset's trend checks")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)

    m = sub.add_parser("summarize", help="group means and standard errors of a sweep CSV")
    m.add_argument("input", nargs="?", default="-")
    m.add_argument("--out")
    m.set_defaults(func=cmd_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ConfigError, DatasetError, InstanceError, NcFormationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
