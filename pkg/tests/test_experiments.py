import math
from dataclasses import replace

import numpy as np
import pytest

from ncformation import experiments as ex
from ncformation.errors import ConfigError, DatasetError
from ncformation.formation import form_topology
from ncformation.geometry import Scenario

SMALL = ex.ExperimentConfig(name="t", n_nodes=(8, 10), lambdas=(0.0, 0.5, 1.0), replications=3, seed=5)


def strip_wall(rows):
    return [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]


def test_lambda_grid():
    assert ex.lambda_grid() == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def test_presets_match_setup():
    for name, cfg in ex.PRESETS.items():
        cfg.validate()
        assert cfg.radius == 10.0 and cfg.dest_count == 2
    assert ex.PRESETS["fig4"].n_nodes == (30, 50) and ex.PRESETS["fig4"].delta_factor == 1.0
    assert ex.PRESETS["fig4"].replications == 200 and ex.PRESETS["fig4"].lambdas == tuple(ex.lambda_grid())
    assert ex.PRESETS["fig6"].delta_factor == 1.1 and set(ex.PRESETS["fig6"].modes) == {"SF", "NC"}
    assert ex.PRESETS["fig2"].kind == "location" and ex.PRESETS["fig2"].n_nodes == (50,)
    assert ex.PRESETS["fig4"].at_full_scale().replications == 1000
    assert ex.PRESETS["fig10"].at_full_scale().replications == 4000


def test_sweep_rows_and_columns():
    rows = ex.run_sweep(SMALL)
    assert len(rows) == 2 * 3 * 3
    assert tuple(rows[0]) == ex.SWEEP_COLUMNS
    assert [(r["n"], r["lambda"], r["rep"]) for r in rows[:4]] == [("8", "0.0", "0"), ("8", "0.0", "1"), ("8", "0.0", "2"), ("8", "0.5", "0")]
    assert all(r["mode"] == "none" and r["goodput"] == "" for r in rows)


def test_sweep_deterministic_and_order_free():
    a = ex.run_sweep(SMALL)
    b = ex.run_sweep(replace(SMALL, workers=2))
    assert strip_wall(a) == strip_wall(b)
    # A cell's output depends only on its own coordinates.
    sub = ex.run_sweep(replace(SMALL, n_nodes=(10,), lambdas=(0.0, 0.5)))
    assert strip_wall(sub) == strip_wall([r for r in a if r["n"] == "10" and r["lambda"] != "1.0"])


def test_sweep_with_simulation():
    cfg = replace(SMALL, n_nodes=(5,), modes=("SF", "NC"), strategies=("proposed", "nc"), lambdas=(0.1,), replications=2)
    rows = ex.run_sweep(cfg)
    assert [(r["strategy"], r["mode"]) for r in rows[:4]] == [
        ("proposed", "SF"),
        ("proposed", "NC"),
        ("nc_centralized", "SF"),
        ("nc_centralized", "NC"),
    ]
    for r in rows:
        assert math.isclose(float(r["per_node_goodput"]), float(r["goodput"]) / 5)


def test_cell_seed_is_stable():
    assert ex.cell_seed(1, 30, 2, 7) == ex.cell_seed(1, 30, 2, 7)
    assert len({ex.cell_seed(1, 30, li, r) for li in range(5) for r in range(50)}) == 250


def test_summarize_empty_and_header_only():
    out = ex.summarize("")
    assert out.strip().split(",")[:5] == ["n", "lambda", "strategy", "mode", "count"]
    assert out.count("\n") == 1
    assert ex.summarize(ex.write_csv([], ex.SWEEP_COLUMNS)).count("\n") == 1


def _row(n, lam, links, util, strategy="proposed", mode="none"):
    return {
        "n": str(n), "lambda": str(lam), "rep": "0", "strategy": strategy, "mode": mode,
        "active_links": str(links), "failure_ratio": "0.5", "utility": str(util),
        "goodput": "", "per_node_goodput": "", "profiles_examined": "40", "wall_ms": "1.0",
    }


def test_summarize_fixture():
    rows = [_row(5, 0.1, 2, 1.0), _row(5, 0.1, 4, 2.0), _row(5, 0.1, 9, 6.0), _row(6, 0.1, 1, 0.0)]
    out = ex.read_csv(ex.summarize(ex.write_csv(rows, ex.SWEEP_COLUMNS)))
    assert len(out) == 2
    g = out[0]
    assert g["count"] == "3"
    assert float(g["active_links_mean"]) == 5.0
    # sample sd of (2, 4, 9) is sqrt(13); se = sqrt(13 / 3)
    assert math.isclose(float(g["active_links_se"]), math.sqrt(13 / 3))
    assert float(g["utility_mean"]) == 3.0
    assert float(g["failure_ratio_se"]) == 0.0
    assert float(g["profiles_examined_se"]) == 0.0
    assert g["goodput_mean"] == "" and g["goodput_se"] == ""
    assert out[1]["active_links_se"] == "0.0"


def test_summarize_reports_bad_rows():
    text = ex.write_csv([_row(5, 0.1, 2, 1.0), _row(5, 0.1, "x", 1.0)], ex.SWEEP_COLUMNS)
    with pytest.raises(DatasetError, match="row 3"):
        ex.summarize(text)
    with pytest.raises(DatasetError, match="row 1"):
        ex.summarize("n,lambda\n1,2\n")
    bad = ex.write_csv([_row(5, 0.1, 2, 1.0)], ex.SWEEP_COLUMNS) + "5,0.1\n"
    with pytest.raises(DatasetError, match="row 3"):
        ex.summarize(bad)


def test_parse_config_overrides_preset():
    cfg = ex.parse_config('preset = "fig4"\nn_nodes = [10, 20]\nreplications = 7\n')
    assert cfg.n_nodes == (10, 20) and cfg.replications == 7 and cfg.trends == ("links_nonincreasing",)
    grid = ex.parse_config("lambdas = {start = 0.0, stop = 0.5, step = 0.25}\n")
    assert grid.lambdas == (0.0, 0.25, 0.5)


@pytest.mark.parametrize(
    "text, line",
    [
        ("replications = 3\n\nreplications2 = 4\n", 3),
        ("seed = 1\nreplications = 0\n", 2),
        ('n_nodes = [10]\nstrategies = ["tcle"]\n', 2),
        ('modes = ["XX"]\n', 1),
        ("seed = 1\nlambdas = [0.1, -1]\n", 2),
        ('# comment\npreset = "nope"\n', 2),
        ("seed = \n", 1),
        ('seed = "abc"\n', 1),
        ("n_nodes = [3]\ndest_count = 3\n", 2),
    ],
)
def test_config_errors_carry_lines(text, line):
    with pytest.raises(ConfigError) as info:
        ex.parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_monotone_trend_detects_violation():
    good = [
        {**_row(5, lam, links, 0), "rep": str(r)}
        for r in range(20)
        for lam, links in ((0.0, 10 + r % 3), (0.5, 5), (1.0, 0))
    ]
    assert ex.monotone_trend(good, "active_links", "nonincreasing").passed
    bad = [{**r, "active_links": str(20 - int(r["active_links"]))} for r in good]
    res = ex.monotone_trend(bad, "active_links", "nonincreasing")
    assert not res.passed and res.details
    assert ex.monotone_trend(bad, "active_links", "nondecreasing").passed


def test_exact_unit_cost_one_check():
    rows = ex.run_sweep(replace(SMALL, lambdas=(1.0,)))
    assert ex.zero_at_unit_cost_one(rows).passed
    broken = [dict(rows[0], active_links="1")] + rows[1:]
    assert not ex.zero_at_unit_cost_one(broken).passed


def test_nc_dominates_check():
    rows = [_row(5, 0.1, 1, 1.0, "nc_centralized"), _row(5, 0.1, 1, 0.5, "proposed")]
    assert ex.nc_dominates(rows).passed
    rows[1]["utility"] = "2.0"
    assert not ex.nc_dominates(rows).passed


def test_location_ring_gives_equal_classes():
    # Destination at the center, sources evenly spaced on a circle around it.
    k = 9
    ang = 2 * np.pi * np.arange(k) / k
    pos = np.vstack([[0.0, 0.0], np.column_stack((5 * np.cos(ang), 5 * np.sin(ang)))])
    dests = (frozenset(),) + (frozenset({1}),) * k
    sc = Scenario(pos, 10.0, 10.0, dests)
    out_deg = form_topology(sc, 0.1).topology.out_degree()
    classes = ex.location_classes(sc, out_deg)
    means = {m for m, _ in classes.values()}
    assert len(means) == 1 and means == {1.0}
    assert [c for _, c in classes.values()] == [3, 3, 3]


def test_location_study_reproducible():
    cfg = replace(ex.PRESETS["fig2"], n_nodes=(20,), replications=1, seed=3)
    a = ex.run_location_study(cfg)
    assert a == ex.run_location_study(cfg)
    assert [r["class"] for r in a] == ["NEAR", "MID", "FAR"]
    assert sum(int(r["nodes"]) for r in a) == 18


def test_sweep_rejects_location_config():
    with pytest.raises(ConfigError):
        ex.run_sweep(ex.PRESETS["fig2"])
