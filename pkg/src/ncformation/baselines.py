"""Centralized exhaustive baselines and search-space counters.

Both searches enumerate every admissible link profile over the Δ-feasible
directed edges and keep the one with the highest network utility. Ties go to
the profile with fewer links, then to the lexicographically smaller sorted
edge list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SizeGuardError
from .formation import _proximity_table, form_topology, network_utility
from .geometry import Scenario, Topology

STRATEGIES = ("non_nc_centralized", "nc_centralized", "proposed", "tcle")

_ALIASES = {
    "non-nc": "non_nc_centralized",
    "non_nc": "non_nc_centralized",
    "non-nc-centralized": "non_nc_centralized",
    "nc": "nc_centralized",
    "nc-centralized": "nc_centralized",
}

# Candidate window for the vectorized pre-screen; exact utilities decide.
_SCREEN_TOL = 1e-9


def canonical_strategy(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGIES}")
    return key


def search_space_size(strategy_name: str, n: int, eta: int | None = None) -> int:
    """Worst-case number of profiles a strategy examines on ``n`` nodes."""
    key = canonical_strategy(strategy_name)
    if n < 2:
        raise ValueError(f"network size must be at least 2, got {n}")
    if key == "non_nc_centralized":
        return n**n
    if key == "nc_centralized":
        return 2 ** (n * (n - 1))
    if key == "proposed":
        return math.comb(n, 2) * 4
    if eta is None:
        raise ValueError("the TCLE counter needs the per-node action count eta")
    return eta * n**3


def restricted_search_space_size(strategy_name: str, scenario: Scenario) -> int:
    """Search-space size when only neighbors (distance <= delta) may link.

    With complete neighborhoods this equals :func:`search_space_size`.
    """
    key = canonical_strategy(strategy_name)
    nb = scenario.neighbor_matrix
    if key == "non_nc_centralized":
        return math.prod(int(k) + 1 for k in nb.sum(axis=0))
    if key == "nc_centralized":
        return 2 ** int(nb.sum())
    if key == "proposed":
        return int(np.triu(nb, k=1).sum()) * 4
    raise ValueError("no Δ-restricted counter is defined for TCLE")


@dataclass(frozen=True, eq=False)
class StrategyReport:
    strategy_name: str
    topology: Topology
    network_utility: float
    profiles_examined: int
    theoretical_profiles: int

    def to_edge_list(self) -> str:
        adj = self.topology.adjacency
        lines = [f"# strategy {self.strategy_name}", "# i j * a_ij a_ji"]
        n = self.topology.n_nodes
        for i in range(n):
            for j in range(i + 1, n):
                if adj[i, j] or adj[j, i]:
                    lines.append(f"{i + 1} {j + 1} * {int(adj[i, j])} {int(adj[j, i])}")
        lines += [
            "# summary",
            f"utility {self.network_utility!r}",
            f"active_links {len(self.topology)}",
            "# counters",
            f"profiles_examined {self.profiles_examined}",
            f"theoretical_profiles {self.theoretical_profiles}",
        ]
        return "\n".join(lines) + "\n"


def _link_weights(scenario: Scenario) -> np.ndarray:
    """``W[i, j]``: reward of link (i+1, j+1) summed over all destinations."""
    F = _proximity_table(scenario)
    s = F.sum(axis=1) if F.size else np.zeros(scenario.n_nodes)
    return s[None, :] - s[:, None]


def _select(scenario: Scenario, unit_cost: float, candidates: list[np.ndarray]) -> tuple[Topology, float]:
    best_key, best_topo, best_u = None, None, None
    for adj in candidates:
        topo = Topology(adj)
        u = network_utility(scenario, topo, unit_cost)
        key = (-u, len(topo), topo.sorted_links())
        if best_key is None or key < best_key:
            best_key, best_topo, best_u = key, topo, u
    return best_topo, best_u


def nc_centralized(scenario: Scenario, unit_cost: float, max_nodes: int = 5) -> StrategyReport:
    """Best topology over every subset of feasible directed links."""
    n = scenario.n_nodes
    if n > max_nodes:
        raise SizeGuardError(f"NC centralized search limited to {max_nodes} nodes, got {n}")
    edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(scenario.neighbor_matrix))]
    E = len(edges)
    total = 2**E
    W = _link_weights(scenario)
    w = np.array([W[i, j] for i, j in edges])
    idx = np.arange(total, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(E)) & 1).astype(bool)
    pos = {e: k for k, e in enumerate(edges)}
    pairs = [(pos[(i, j)], pos[(j, i)]) for i, j in edges if i < j]
    n_pairs = np.zeros(total, dtype=np.int64)
    for a, b in pairs:
        n_pairs += bits[:, a] | bits[:, b]
    score = bits.astype(float) @ w - unit_cost * n_pairs if E else np.zeros(1)
    cand = np.flatnonzero(score >= score.max() - _SCREEN_TOL)
    mats = []
    for c in cand:
        adj = np.zeros((n, n), dtype=bool)
        for k in np.flatnonzero(bits[c]) if E else []:
            adj[edges[k]] = True
        mats.append(adj)
    topo, u = _select(scenario, unit_cost, mats)
    return StrategyReport("nc_centralized", topo, u, total, search_space_size("nc_centralized", n))


def non_nc_centralized(scenario: Scenario, unit_cost: float, max_nodes: int = 7) -> StrategyReport:
    """Best topology in which every node has at most one incoming link."""
    n = scenario.n_nodes
    if n > max_nodes:
        raise SizeGuardError(f"Non-NC centralized search limited to {max_nodes} nodes, got {n}")
    nb = scenario.neighbor_matrix
    options = [np.concatenate(([-1], np.flatnonzero(nb[:, j]))) for j in range(n)]
    radices = [len(o) for o in options]
    total = math.prod(radices)
    W = _link_weights(scenario)
    idx = np.arange(total, dtype=np.int64)
    choice = np.empty((total, n), dtype=np.int64)
    stride = 1
    for j in range(n):
        choice[:, j] = options[j][(idx // stride) % radices[j]]
        stride *= radices[j]
    has = choice >= 0
    safe = np.where(has, choice, 0)
    cols = np.arange(n)
    gains = np.where(has, W[safe, cols[None, :]], 0.0).sum(axis=1)
    links = has.sum(axis=1)
    # a pair is mutual when j's tail i has j as its own tail
    back = np.take_along_axis(choice, safe, axis=1)
    mutual = (has & (back == cols[None, :])).sum(axis=1) // 2
    score = gains - unit_cost * (links - mutual)
    cand = np.flatnonzero(score >= score.max() - _SCREEN_TOL)
    mats = []
    for c in cand:
        adj = np.zeros((n, n), dtype=bool)
        for j in range(n):
            if choice[c, j] >= 0:
                adj[choice[c, j], j] = True
        mats.append(adj)
    topo, u = _select(scenario, unit_cost, mats)
    return StrategyReport("non_nc_centralized", topo, u, total, search_space_size("non_nc_centralized", n))


def proposed(scenario: Scenario, unit_cost: float) -> StrategyReport:
    """The distributed formation wrapped as a strategy report."""
    res = form_topology(scenario, unit_cost)
    theo = search_space_size("proposed", scenario.n_nodes) * max(1, len(scenario.destination_set))
    return StrategyReport("proposed", res.topology, res.network_utility, res.profiles_examined, theo)


def run_strategy(name: str, scenario: Scenario, unit_cost: float) -> StrategyReport:
    key = canonical_strategy(name)
    if key == "tcle":
        raise ValueError("TCLE is available only as a complexity counter, not as a strategy")
    return {"non_nc_centralized": non_nc_centralized, "nc_centralized": nc_centralized, "proposed": proposed}[key](
        scenario, unit_cost
    )
