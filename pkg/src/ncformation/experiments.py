"""Experiment sweeps, the location study, CSV summaries and trend checks."""

from __future__ import annotations

import csv
import io
import math
import re
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .baselines import canonical_strategy, run_strategy
from .errors import ConfigError, DatasetError
from .flowsim import SimConfig, connection_failure_ratio, simulate
from .formation import form_topology
from .geometry import Scenario, ScenarioConfig, generate_scenario
from .seeding import derive_seed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SWEEP_COLUMNS = (
    "n",
    "lambda",
    "rep",
    "strategy",
    "mode",
    "active_links",
    "failure_ratio",
    "utility",
    "goodput",
    "per_node_goodput",
    "profiles_examined",
    "wall_ms",
)
GROUP_KEYS = ("n", "lambda", "strategy", "mode")
METRICS = ("active_links", "failure_ratio", "utility", "goodput", "per_node_goodput", "profiles_examined")
LOCATION_COLUMNS = ("rep", "class", "mean_out_links", "nodes")
LOCATION_CLASSES = ("NEAR", "MID", "FAR")

TRENDS = ("links_nonincreasing", "failure_nondecreasing", "nc_dominates", "near_ge_far")


def lambda_grid(start: float = 0.0, stop: float = 1.0, step: float = 0.1) -> list[float]:
    count = int(round((stop - start) / step))
    return [round(start + k * step, 10) for k in range(count + 1)]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    kind: str = "sweep"
    n_nodes: tuple[int, ...] = (30,)
    lambdas: tuple[float, ...] = tuple(lambda_grid())
    replications: int = 200
    full_replications: int = 1000
    seed: int = 1
    radius: float = 10.0
    delta_factor: float = 1.0
    dest_count: int = 2
    dest_policy: str = "shared"
    strategies: tuple[str, ...] = ("proposed",)
    modes: tuple[str, ...] = ()
    slots: int | None = None
    trends: tuple[str, ...] = ()
    workers: int = 1

    def validate(self, lines: dict[str, int] | None = None) -> None:
        lines = lines or {}

        def fail(key, msg):
            raise ConfigError(f"{key}: {msg}", lines.get(key))

        if self.kind not in ("sweep", "location"):
            fail("kind", f"must be 'sweep' or 'location', got {self.kind!r}")
        if not self.n_nodes or any(n < 2 for n in self.n_nodes):
            fail("n_nodes", "needs at least one network size, each >= 2")
        if not self.lambdas or any(x < 0 for x in self.lambdas):
            fail("lambdas", "needs at least one nonnegative unit cost")
        if self.replications < 1:
            fail("replications", "must be >= 1")
        if self.full_replications < 1:
            fail("full_replications", "must be >= 1")
        if not self.radius > 0:
            fail("radius", "must be positive")
        if not self.delta_factor > 0:
            fail("delta_factor", "must be positive")
        for s in self.strategies:
            try:
                if canonical_strategy(s) == "tcle":
                    fail("strategies", "TCLE is only available as a complexity counter")
            except ValueError as exc:
                fail("strategies", str(exc))
        for m in self.modes:
            if m.upper() not in ("SF", "NC"):
                fail("modes", f"unknown mode {m!r}; use SF and/or NC")
        if self.slots is not None and self.slots < 1:
            fail("slots", "must be >= 1")
        for t in self.trends:
            if t not in TRENDS:
                fail("trends", f"unknown trend {t!r}; expected one of {TRENDS}")
        if self.workers < 1:
            fail("workers", "must be >= 1")
        for n in self.n_nodes:
            try:
                self.scenario_config(n).validate()
            except ConfigError as exc:
                fail("dest_count", str(exc))

    def scenario_config(self, n: int) -> ScenarioConfig:
        policy = "edge_pair" if self.kind == "location" else self.dest_policy
        return ScenarioConfig(
            n_nodes=n,
            radius=self.radius,
            delta_factor=self.delta_factor,
            dest_count=self.dest_count,
            dest_policy=policy,
        )

    def at_full_scale(self) -> ExperimentConfig:
        return replace(self, replications=self.full_replications)


PRESETS: dict[str, ExperimentConfig] = {
    "fig2": ExperimentConfig(
        name="fig2", kind="location", n_nodes=(50,), lambdas=(0.1,), trends=("near_ge_far",)
    ),
    "fig4": ExperimentConfig(name="fig4", n_nodes=(30, 50), trends=("links_nonincreasing",)),
    "fig5": ExperimentConfig(name="fig5", n_nodes=(30, 50), trends=("failure_nondecreasing",)),
    "fig6": ExperimentConfig(
        name="fig6", n_nodes=(10, 20, 30), delta_factor=1.1, modes=("SF", "NC"), replications=50, full_replications=1500
    ),
    "fig7": ExperimentConfig(
        name="fig7",
        n_nodes=(10, 20, 30, 40, 50),
        lambdas=(0.1,),
        delta_factor=1.1,
        modes=("SF", "NC"),
        replications=50,
    ),
    "fig8-desk": ExperimentConfig(
        name="fig8-desk",
        n_nodes=(5,),
        strategies=("proposed", "non_nc_centralized", "nc_centralized"),
        replications=20,
        trends=("nc_dominates",),
    ),
    "fig10": ExperimentConfig(
        name="fig10",
        n_nodes=(10, 20, 30, 40, 50),
        lambdas=(0.1,),
        delta_factor=1.1,
        modes=("SF", "NC"),
        replications=50,
        full_replications=4000,
    ),
}


def _key_lines(text: str) -> dict[str, int]:
    out = {}
    for k, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=", line)
        if m:
            out.setdefault(m.group(1), k)
    return out


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read ``key = value`` lines (TOML syntax, lists in brackets).

    A ``preset = "name"`` line starts from that preset; other keys override it.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(str(exc), int(m.group(1)) if m else None) from exc
    lines = _key_lines(text)
    if "preset" in doc:
        name = doc.pop("preset")
        if name not in PRESETS:
            raise ConfigError(f"preset: unknown preset {name!r}; expected one of {sorted(PRESETS)}", lines.get("preset"))
        base = PRESETS[name]
    base = base or ExperimentConfig()
    known = {f.name: f for f in fields(ExperimentConfig)}
    updates = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", lines.get(key))
        current = getattr(base, key)
        try:
            updates[key] = _coerce(value, current, key)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}", lines.get(key)) from exc
    cfg = replace(base, **updates)
    cfg.validate(lines)
    return cfg


def _coerce(value, current, key):
    if key == "lambdas" and isinstance(value, dict):
        return tuple(lambda_grid(float(value["start"]), float(value["stop"]), float(value["step"])))
    if key == "slots":
        if value is None or (isinstance(value, int) and not isinstance(value, bool)):
            return value
        raise TypeError(f"expected an integer, got {value!r}")
    if isinstance(current, tuple):
        if not isinstance(value, list):
            raise TypeError(f"expected a list, got {value!r}")
        if key == "lambdas":
            return tuple(float(v) for v in value)
        if key == "n_nodes":
            return tuple(_as_int(v) for v in value)
        return tuple(str(v) for v in value)
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, int):
        return _as_int(value)
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise TypeError(f"expected a string, got {value!r}")
    return value


def _as_int(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"expected an integer, got {v!r}")
    return v


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def cell_seed(master: int, n: int, lambda_index: int, rep: int) -> int:
    return derive_seed(master, n, lambda_index, rep)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_cell(args) -> list[dict[str, str]]:
    config, n, li, lam, rep = args
    seed = cell_seed(config.seed, n, li, rep)
    scenario = generate_scenario(config.scenario_config(n), seed)
    rows = []
    for strategy in config.strategies:
        t0 = time.perf_counter()
        report = run_strategy(strategy, scenario, lam)
        fr = connection_failure_ratio(scenario, report.topology)
        base = {
            "n": n,
            "lambda": lam,
            "rep": rep,
            "strategy": report.strategy_name,
            "active_links": len(report.topology),
            "failure_ratio": fr,
            "utility": report.network_utility,
            "profiles_examined": report.profiles_examined,
        }
        form_ms = (time.perf_counter() - t0) * 1e3
        if not config.modes:
            rows.append({**base, "mode": "none", "goodput": None, "per_node_goodput": None, "wall_ms": form_ms})
        for mode in config.modes:
            t1 = time.perf_counter()
            sim = simulate(scenario, report.topology, SimConfig(mode=mode, slots=config.slots, seed=seed))
            rows.append(
                {
                    **base,
                    "mode": sim.mode,
                    "goodput": sim.goodput,
                    "per_node_goodput": sim.per_node_goodput,
                    "wall_ms": form_ms + (time.perf_counter() - t1) * 1e3,
                }
            )
    return [{c: _fmt(r[c]) if c != "wall_ms" else f"{r[c]:.3f}" for c in SWEEP_COLUMNS} for r in rows]


def _cells(config: ExperimentConfig):
    for n in config.n_nodes:
        for li, lam in enumerate(config.lambdas):
            for rep in range(config.replications):
                yield (config, n, li, float(lam), rep)


def _map_cells(fn, cells, workers: int):
    if workers <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells, chunksize=16))


def run_sweep(config: ExperimentConfig) -> list[dict[str, str]]:
    """One row per (n, lambda, rep, strategy, mode), in grid order."""
    config.validate()
    if config.kind != "sweep":
        raise ConfigError(f"config {config.name!r} is a {config.kind} study, not a sweep")
    out = []
    for rows in _map_cells(_run_cell, list(_cells(config)), config.workers):
        out.extend(rows)
    return out


def location_classes(scenario: Scenario, out_degree: np.ndarray) -> dict[str, tuple[float, int]]:
    """Mean outgoing links per distance tertile of the source nodes.

    Sources are ranked by mean distance to the destination set; destination
    nodes themselves are excluded. Returns ``class -> (mean, node count)``.
    """
    dests = [d - 1 for d in scenario.destination_set]
    srcs = np.array([i for i in range(scenario.n_nodes) if i not in dests])
    dist = scenario.distance_matrix[np.ix_(srcs, dests)].mean(axis=1)
    order = srcs[np.argsort(dist, kind="stable")]
    out = {}
    for name, group in zip(LOCATION_CLASSES, np.array_split(order, 3)):
        out[name] = (float(np.mean(out_degree[group])) if group.size else 0.0, int(group.size))
    return out


def _run_location_rep(args) -> list[dict[str, str]]:
    config, n, lam, rep = args
    seed = cell_seed(config.seed, n, 0, rep)
    scenario = generate_scenario(config.scenario_config(n), seed)
    topo = form_topology(scenario, lam).topology
    classes = location_classes(scenario, topo.out_degree())
    return [
        {"rep": str(rep), "class": c, "mean_out_links": repr(m), "nodes": str(k)} for c, (m, k) in classes.items()
    ]


def run_location_study(config: ExperimentConfig) -> list[dict[str, str]]:
    """Outgoing links per NEAR/MID/FAR class with shared cell-edge destinations."""
    config.validate()
    n = config.n_nodes[0]
    lam = float(config.lambdas[0])
    cells = [(config, n, lam, rep) for rep in range(config.replications)]
    out = []
    for rows in _map_cells(_run_location_rep, cells, config.workers):
        out.extend(rows)
    return out


def write_csv(rows: Sequence[dict[str, str]], columns: Sequence[str], path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def _parse_number(value: str, column: str, row: int) -> float | None:
    if value == "":
        return None
    try:
        return float(value)
    except ValueError:
        raise DatasetError(f"row {row}: column {column!r} is not numeric: {value!r}") from None


def summarize(text: str) -> str:
    """Group means and standard errors by (n, lambda, strategy, mode).

    Blank cells are skipped; a group whose metric is blank everywhere gets
    blank statistics. Standard errors use the sample standard deviation and
    are 0 for a single observation. Row numbers in errors count the header
    as row 1.
    """
    out_cols = list(GROUP_KEYS) + ["count"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "se")]
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return ",".join(out_cols) + "\n"
    missing = [c for c in GROUP_KEYS + METRICS if c not in reader.fieldnames]
    if missing:
        raise DatasetError(f"row 1: missing columns {missing}")
    groups: dict[tuple, dict[str, list[float]]] = {}
    counts: dict[tuple, int] = {}
    for rownum, row in enumerate(reader, start=2):
        if None in row or any(v is None for v in row.values()):
            raise DatasetError(f"row {rownum}: wrong number of fields")
        n = _parse_number(row["n"], "n", rownum)
        lam = _parse_number(row["lambda"], "lambda", rownum)
        if n is None or lam is None:
            raise DatasetError(f"row {rownum}: n and lambda are required")
        key = (int(n), lam, row["strategy"], row["mode"])
        g = groups.setdefault(key, {m: [] for m in METRICS})
        counts[key] = counts.get(key, 0) + 1
        for m in METRICS:
            v = _parse_number(row[m], m, rownum)
            if v is not None:
                g[m].append(v)
    lines = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
        rec = {"n": str(key[0]), "lambda": repr(key[1]), "strategy": key[2], "mode": key[3], "count": str(counts[key])}
        for m in METRICS:
            vals = groups[key][m]
            if not vals:
                rec[f"{m}_mean"] = rec[f"{m}_se"] = ""
                continue
            mean = statistics.fmean(vals)
            se = statistics.stdev(vals) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
            rec[f"{m}_mean"] = repr(mean)
            rec[f"{m}_se"] = repr(se)
        lines.append(rec)
    return write_csv(lines, out_cols)


@dataclass
class TrendResult:
    name: str
    passed: bool
    details: list[str] = field(default_factory=list)


def _series(rows, metric: str, strategy: str = "proposed", mode: str | None = None):
    """``{n: {lambda: {rep: value}}}`` for one strategy (first mode seen if none given)."""
    out: dict[int, dict[float, dict[int, float]]] = {}
    for r in rows:
        if r["strategy"] != strategy or (mode is not None and r["mode"] != mode):
            continue
        out.setdefault(int(r["n"]), {}).setdefault(float(r["lambda"]), {}).setdefault(int(r["rep"]), float(r[metric]))
    return out


def monotone_trend(rows, metric: str, direction: str, alpha: float = 0.05, strategy: str = "proposed") -> TrendResult:
    """Sign test on every adjacent unit-cost step, paired by replication.

    A step violates the trend when moves against ``direction`` outnumber
    moves along it significantly (two-sided binomial test at ``alpha``).
    """
    if direction not in ("nonincreasing", "nondecreasing"):
        raise ValueError(direction)
    res = TrendResult(f"{metric} {direction}", True)
    for n, by_lam in sorted(_series(rows, metric, strategy).items()):
        lams = sorted(by_lam)
        for a, b in zip(lams, lams[1:]):
            reps = sorted(by_lam[a].keys() & by_lam[b].keys())
            diffs = [by_lam[b][r] - by_lam[a][r] for r in reps]
            up = sum(d > 0 for d in diffs)
            down = sum(d < 0 for d in diffs)
            against, along = (up, down) if direction == "nonincreasing" else (down, up)
            if against > along:
                p = stats.binomtest(against, against + along, 0.5).pvalue
                if p < alpha:
                    res.passed = False
                    res.details.append(f"n={n} lambda {a}->{b}: {against} vs {along} reps against trend (p={p:.3g})")
    return res


def zero_at_unit_cost_one(rows, strategy: str = "proposed") -> TrendResult:
    """At unit cost 1 every proposed topology is empty: no links, utility 0, all flows fail."""
    res = TrendResult("empty topology at lambda = 1", True)
    seen = 0
    for r in rows:
        if r["strategy"] != strategy or float(r["lambda"]) != 1.0:
            continue
        seen += 1
        if int(r["active_links"]) != 0 or float(r["utility"]) != 0.0 or float(r["failure_ratio"]) != 1.0:
            res.passed = False
            res.details.append(f"n={r['n']} rep={r['rep']}: links={r['active_links']} utility={r['utility']}")
    if not seen:
        res.details.append("no rows at lambda = 1")
    return res


def nc_dominates(rows) -> TrendResult:
    """NC centralized utility is at least every other strategy's on each instance."""
    res = TrendResult("nc_centralized utility dominates", True)
    cells: dict[tuple, dict[str, float]] = {}
    for r in rows:
        cells.setdefault((r["n"], r["lambda"], r["rep"]), {})[r["strategy"]] = float(r["utility"])
    for key, by in cells.items():
        if "nc_centralized" not in by:
            continue
        for s, u in by.items():
            if u > by["nc_centralized"]:
                res.passed = False
                res.details.append(f"n={key[0]} lambda={key[1]} rep={key[2]}: {s} {u!r} > nc {by['nc_centralized']!r}")
    return res


def near_ge_far(rows, alpha: float = 0.05) -> TrendResult:
    """One-sided paired t-test that NEAR nodes build more outgoing links than FAR nodes."""
    by_rep: dict[str, dict[str, float]] = {}
    for r in rows:
        by_rep.setdefault(r["rep"], {})[r["class"]] = float(r["mean_out_links"])
    diffs = [v["NEAR"] - v["FAR"] for v in by_rep.values()]
    res = TrendResult("NEAR >= FAR outgoing links", True)
    if len(diffs) < 2 or np.allclose(diffs, diffs[0]):
        res.passed = bool(diffs) and diffs[0] >= 0
        res.details.append(f"constant difference {diffs[0] if diffs else None}")
        return res
    p = stats.ttest_1samp(diffs, 0.0, alternative="greater").pvalue
    res.passed = bool(p < alpha)
    res.details.append(f"mean NEAR-FAR = {statistics.fmean(diffs):.4g}, one-sided p = {p:.3g}")
    return res


def check_trends(config: ExperimentConfig, rows) -> list[TrendResult]:
    out = []
    for t in config.trends:
        if t == "links_nonincreasing":
            out.append(monotone_trend(rows, "active_links", "nonincreasing"))
        elif t == "failure_nondecreasing":
            out.append(monotone_trend(rows, "failure_ratio", "nondecreasing"))
            if 1.0 in config.lambdas:
                out.append(zero_at_unit_cost_one(rows))
        elif t == "nc_dominates":
            out.append(nc_dominates(rows))
        elif t == "near_ge_far":
            out.append(near_ge_far(rows))
    return out
