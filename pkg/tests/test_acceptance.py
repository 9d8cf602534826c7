"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import math
import statistics
import time
from dataclasses import replace

import numpy as np
import pytest
from _fixtures import butterfly
from scipy import stats

from ncformation import experiments as ex
from ncformation.baselines import (
    nc_centralized,
    non_nc_centralized,
    proposed,
    restricted_search_space_size,
    search_space_size,
)
from ncformation.flowsim import SimConfig, simulate
from ncformation.formation import form_topology, joint_game_oracle, pair_ne_product
from ncformation.game import PayoffTable, enumerate_pure_ne, verify_pure_dominance
from ncformation.geometry import ScenarioConfig, generate_scenario
from ncformation.gf import gf_inv, gf_mul
from ncformation.rlnc import decode, encode_at_node, random_local_coeffs, recoverable_sources, source_packet, unit_row

LAMBDA_GRID = ex.lambda_grid()


def test_c01_equilibrium_existence(criterion):
    rng = np.random.default_rng(101)
    r = rng.uniform(-1, 1, size=(100_000, 2))
    lam = rng.uniform(0, 2, size=100_000)
    t0 = time.perf_counter()
    empty = sum(1 for k in range(100_000) if not enumerate_pure_ne(PayoffTable(r[k, 0], r[k, 1], lam[k])))
    dt = time.perf_counter() - t0
    criterion(1, empty == 0 and dt < 5, f"empty NE sets {empty}/100000, {dt:.2f}s (limit 5s)")


def test_c02_pure_dominance(criterion):
    rng = np.random.default_rng(102)
    fails = 0
    for _ in range(1000):
        r_i, r_j = rng.uniform(-1, 1, size=2)
        fails += not verify_pure_dominance(PayoffTable(r_i, r_j, rng.uniform(0, 2)), grid_resolution=101)
    criterion(2, fails == 0, f"dominance failures {fails}/1000 on a 101-point grid")


def test_c03_decomposition(criterion):
    t0 = time.perf_counter()
    checked = mismatches = 0
    for n in (3, 4):
        for k in (1, 2):
            for seed in range(50):
                sc = generate_scenario(ScenarioConfig(n_nodes=n, dest_count=k), seed)
                for lam in (0.1, 0.5, 0.9):
                    checked += 1
                    mismatches += joint_game_oracle(sc, lam).profiles != pair_ne_product(sc, lam).profiles
    dt = time.perf_counter() - t0
    criterion(3, mismatches == 0 and dt < 600, f"{mismatches} mismatches over {checked} instances, {dt:.1f}s (limit 600s)")


def test_c04_dominance_chain(criterion):
    violations = instances = 0
    for n in (2, 3, 4, 5):
        for seed in range(15 if n == 5 else 30):
            sc = generate_scenario(ScenarioConfig(n_nodes=n, dest_count=1 if n == 2 else 2), seed)
            for lam in LAMBDA_GRID:
                instances += 1
                nc = nc_centralized(sc, lam).network_utility
                violations += nc < proposed(sc, lam).network_utility
                violations += nc < non_nc_centralized(sc, lam).network_utility
    criterion(4, violations == 0, f"{violations} ordering violations over {instances} (instance, cost) cells, exact comparison")


def test_c05_proposed_beats_non_nc(criterion):
    diffs = []
    for seed in range(500):
        sc = generate_scenario(ScenarioConfig(n_nodes=5), ex.cell_seed(105, 5, 3, seed))
        diffs.append(proposed(sc, 0.3).network_utility - non_nc_centralized(sc, 0.3).network_utility)
    mean = statistics.fmean(diffs)
    se = statistics.stdev(diffs) / math.sqrt(len(diffs))
    p = stats.ttest_1samp(diffs, 0.0, alternative="greater").pvalue
    # Paired differences; the one-sided 95% lower confidence bound must clear 0.
    lower = mean - stats.t.ppf(0.95, len(diffs) - 1) * se
    criterion(5, lower >= 0, f"mean(proposed - non_nc) = {mean:.4f}, one-sided 95% lower bound {lower:.4f} (one-sided p {p:.3g})")


def test_c06_counters(criterion):
    ok = all(
        search_space_size("non_nc_centralized", n) == n**n
        and search_space_size("nc_centralized", n) == 2 ** (n * (n - 1))
        and search_space_size("proposed", n) == math.comb(n, 2) * 4
        for n in range(2, 9)
    )
    mismatched = 0
    for seed in range(20):
        n = 3 + seed % 3
        sc = generate_scenario(ScenarioConfig(n_nodes=n, delta_factor=0.6 + 0.1 * (seed % 5)), seed)
        mismatched += nc_centralized(sc, 0.2).profiles_examined != restricted_search_space_size("nc", sc)
        mismatched += non_nc_centralized(sc, 0.2).profiles_examined != restricted_search_space_size("non_nc", sc)
    criterion(6, ok and mismatched == 0, f"closed forms n=2..8 {'exact' if ok else 'WRONG'}; restricted counter mismatches {mismatched}/40")


def test_c07_cost_trends(criterion):
    t0 = time.perf_counter()
    results = []
    for name in ("fig4", "fig5"):
        cfg = ex.PRESETS[name]
        results += ex.check_trends(cfg, ex.run_sweep(cfg))
    dt = time.perf_counter() - t0
    ok = all(r.passed for r in results) and dt < 120
    names = ", ".join(f"{r.name}={'ok' if r.passed else 'violated'}" for r in results)
    criterion(7, ok, f"{names}; {dt:.1f}s (limit 120s)")


def test_c08_location_effect(criterion):
    cfg = ex.PRESETS["fig2"]
    assert cfg.replications == 200 and cfg.n_nodes == (50,)
    res = ex.near_ge_far(ex.run_location_study(cfg))
    criterion(8, res.passed, "; ".join(res.details))


def test_c09_rlnc(criterion):
    rng = np.random.default_rng(109)
    wrong = decoded = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 6))
        x = rng.integers(0, 256, size=n).tolist()
        pool = [source_packet(k + 1, n, x[k]) for k in range(n)]
        for _ in range(int(rng.integers(1, 5))):
            take = rng.choice(len(pool), size=int(rng.integers(1, min(3, len(pool)) + 1)), replace=False)
            own = int(rng.integers(0, n))
            coeffs = random_local_coeffs(len(take) + 1, rng)
            pool.append(encode_at_node(unit_row(own + 1, n), [pool[t] for t in take], coeffs, x[own]))
        heard = [pool[t] for t in rng.choice(len(pool), size=int(rng.integers(1, len(pool) + 1)), replace=False)]
        got = decode([p.coefficients for p in heard], [p.payload[0] for p in heard])
        wrong += set(got) != recoverable_sources([p.coefficients for p in heard])
        wrong += sum(sym != x[k - 1] for k, sym in got.items())
        decoded += len(got)
    oracle = gf_mul(0x53, 0xCA) == 0x01
    inverses = all(gf_mul(a, gf_inv(a)) == 1 for a in range(1, 256))
    ok = wrong == 0 and oracle and inverses
    criterion(9, ok, f"wrong symbols {wrong} over {decoded} decoded; 0x53*0xCA=0x01 {oracle}; inverse law over 255 elements {inverses}")


def test_c10_coding_goodput(criterion):
    sc, topo = butterfly()
    sf = simulate(sc, topo, SimConfig(mode="SF", seed=0)).goodput
    nc = simulate(sc, topo, SimConfig(mode="NC", seed=0)).goodput
    g_sf, g_nc = [], []
    cfg = ScenarioConfig(n_nodes=20, delta_factor=1.1)
    for rep in range(100):
        seed = ex.cell_seed(110, 20, 1, rep)
        s = generate_scenario(cfg, seed)
        t = form_topology(s, 0.1).topology
        g_sf.append(simulate(s, t, SimConfig(mode="SF", seed=seed)).goodput)
        g_nc.append(simulate(s, t, SimConfig(mode="NC", seed=seed)).goodput)
    m_sf, m_nc = statistics.fmean(g_sf), statistics.fmean(g_nc)
    ok = nc > sf and m_nc >= m_sf
    criterion(10, ok, f"butterfly NC {nc:.3f} > SF {sf:.3f}; n=20 mean NC {m_nc:.3f} >= SF {m_sf:.3f}")


def test_c11_scalability(criterion):
    sc = generate_scenario(ScenarioConfig(n_nodes=200, dest_count=2), 111)
    t0 = time.perf_counter()
    res = form_topology(sc, 0.1)
    dt = time.perf_counter() - t0
    want = math.comb(200, 2) * 4 * 2
    ok = dt < 5 and res.profiles_examined == want
    criterion(11, ok, f"n=200 formed in {dt:.3f}s (limit 5s); profiles examined {res.profiles_examined} (want {want})")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
