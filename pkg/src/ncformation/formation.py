"""Distributed topology construction from independent link formation games.

Every node pair within the connection boundary plays one two-player game per
destination. The per-destination outcomes are virtual sublinks; a physical
link is active when any destination activates it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np

from .errors import SizeGuardError
from .game import (
    TIE_TOL,
    ActionProfile,
    best_response_arrays,
    best_response_profile,
    build_payoff_table,
    enumerate_pure_ne,
    proximity,
)
from .geometry import Scenario, Topology


def enumerate_pairs(scenario: Scenario) -> list[tuple[int, int]]:
    """All unordered node pairs ``(i, j)``, ``i < j``, in lexicographic order."""
    return list(combinations(scenario.node_ids, 2))


def _proximity_table(scenario: Scenario) -> np.ndarray:
    """``F[k, m]``: proximity of node k+1 to the m-th destination of the scenario."""
    cols = [d - 1 for d in scenario.destination_set]
    return proximity(scenario.distance_matrix[:, cols])


@dataclass(frozen=True, eq=False)
class FormationResult:
    scenario: Scenario
    unit_cost: float
    topology: Topology
    network_utility: float
    games_solved: int

    @property
    def destinations(self) -> tuple[int, ...]:
        return self.scenario.destination_set

    @cached_property
    def per_pair_profiles(self) -> dict[tuple[int, int, int], ActionProfile]:
        """Equilibrium of every solved game, keyed by ``(i, j, d)`` with ``i < j``.

        Pairs beyond the connection boundary play no game and are absent.
        """
        out = {}
        nb = self.scenario.neighbor_matrix
        subs = self.topology.sublinks
        for i, j in enumerate_pairs(self.scenario):
            if not nb[i - 1, j - 1]:
                continue
            for d in self.destinations:
                m = subs[d]
                out[(i, j, d)] = (int(m[i - 1, j - 1]), int(m[j - 1, i - 1]))
        return out

    def profile(self, i: int, j: int, d: int) -> ActionProfile:
        m = self.topology.sublinks[d]
        return int(m[i - 1, j - 1]), int(m[j - 1, i - 1])

    @property
    def profiles_examined(self) -> int:
        return 4 * self.games_solved

    def to_edge_list(self) -> str:
        lines = ["# i j d a_i a_j"]
        for (i, j, d), (a_i, a_j) in self.per_pair_profiles.items():
            lines.append(f"{i} {j} {d} {a_i} {a_j}")
        lines += [
            "# summary",
            f"utility {self.network_utility!r}",
            f"active_links {len(self.topology)}",
            f"games_solved {self.games_solved}",
        ]
        return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> tuple[dict[tuple[int, int, int], ActionProfile], dict[str, str]]:
    """Inverse of :meth:`FormationResult.to_edge_list`: (profiles, summary fields)."""
    profiles, summary = {}, {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 5 and parts[2] != "*":
            i, j, d, a_i, a_j = (int(p) for p in parts)
            profiles[(i, j, d)] = (a_i, a_j)
        elif len(parts) == 2:
            summary[parts[0]] = parts[1]
    return profiles, summary


def network_utility(
    scenario: Scenario,
    topology: Topology,
    unit_cost: float,
    reading: str = "physical",
) -> float:
    """Sum over nodes of destination rewards minus link formation costs.

    ``reading="physical"`` credits every active link with its reward for every
    destination. ``reading="virtual"`` credits a link only for the
    destinations whose game activated it (requires ``topology.sublinks``).
    Costs are charged once per physical link in both readings: the full unit
    cost for a one-way link, half to each end of a two-way link.
    The sum is evaluated with ``math.fsum`` so equal link sets give
    bit-identical utilities regardless of how they were found.
    """
    adj = topology.adjacency
    if not adj.any():
        return 0.0
    F = _proximity_table(scenario)
    tails, heads = np.nonzero(adj)
    if reading == "physical":
        rewards = (F[heads] - F[tails]).ravel()
    elif reading == "virtual":
        if not topology.sublinks and scenario.destination_set:
            raise ValueError("virtual reading needs per-destination sublinks")
        parts = []
        for m, d in enumerate(scenario.destination_set):
            t, h = np.nonzero(topology.sublinks[d])
            parts.append(F[h, m] - F[t, m])
        rewards = np.concatenate(parts) if parts else np.zeros(0)
    else:
        raise ValueError(f"unknown reading {reading!r}")
    shared = adj[heads, tails]
    costs = np.where(shared, unit_cost / 2, unit_cost)
    return math.fsum(rewards.tolist() + (-costs).tolist())


def form_topology(
    scenario: Scenario,
    unit_cost: float,
    *,
    sequential: bool = False,
    pair_order: Sequence[tuple[int, int]] | None = None,
) -> FormationResult:
    """Solve every pair-destination game and assemble the resulting topology.

    The default path runs the best-response dynamics on all games at once
    with numpy. ``sequential=True`` solves the games one at a time through
    :func:`~ncformation.game.best_response_profile`, visiting pairs in
    ``pair_order`` when given; both paths return identical results.
    """
    if unit_cost < 0:
        raise ValueError(f"unit cost must be nonnegative, got {unit_cost}")
    n = scenario.n_nodes
    dests = scenario.destination_set
    games = math.comb(n, 2) * len(dests)
    if sequential:
        subs = _solve_sequential(scenario, unit_cost, pair_order)
    else:
        subs = _solve_vectorized(scenario, unit_cost)
    adj = np.logical_or.reduce(list(subs.values())) if subs else np.zeros((n, n), dtype=bool)
    topo = Topology(adj, subs)
    return FormationResult(scenario, float(unit_cost), topo, network_utility(scenario, topo, unit_cost), games)


def _solve_vectorized(scenario: Scenario, unit_cost: float) -> dict[int, np.ndarray]:
    n = scenario.n_nodes
    dests = scenario.destination_set
    if not dests:
        return {}
    iu, ju = np.nonzero(np.triu(scenario.neighbor_matrix, k=1))
    F = _proximity_table(scenario)
    r_i = (F[ju] - F[iu]).T
    r_j = (F[iu] - F[ju]).T
    a_i, a_j = best_response_arrays(r_i, r_j, unit_cost)
    subs = {}
    for m, d in enumerate(dests):
        mat = np.zeros((n, n), dtype=bool)
        mat[iu, ju] = a_i[m]
        mat[ju, iu] = a_j[m]
        subs[d] = mat
    return subs


def _solve_sequential(
    scenario: Scenario, unit_cost: float, pair_order: Iterable[tuple[int, int]] | None
) -> dict[int, np.ndarray]:
    n = scenario.n_nodes
    nb = scenario.neighbor_matrix
    subs = {d: np.zeros((n, n), dtype=bool) for d in scenario.destination_set}
    for i, j in pair_order if pair_order is not None else enumerate_pairs(scenario):
        if not nb[i - 1, j - 1]:
            continue
        for d, mat in subs.items():
            a_i, a_j = best_response_profile(build_payoff_table(scenario, i, j, d, unit_cost))
            mat[i - 1, j - 1] = bool(a_i)
            mat[j - 1, i - 1] = bool(a_j)
    return subs


@dataclass(frozen=True)
class JointGameResult:
    """Joint equilibria over all virtual sublinks.

    ``sublinks[k]`` is the ``(tail, head, d)`` of bit ``k`` in every profile.
    """

    sublinks: tuple[tuple[int, int, int], ...]
    profiles: frozenset[tuple[int, ...]]


def _joint_sublinks(scenario: Scenario) -> list[tuple[int, int, int]]:
    nb = scenario.neighbor_matrix
    out = []
    for i, j in enumerate_pairs(scenario):
        if nb[i - 1, j - 1]:
            for d in scenario.destination_set:
                out += [(i, j, d), (j, i, d)]
    return out


def joint_game_oracle(scenario: Scenario, unit_cost: float, max_bits: int = 24, tol: float = TIE_TOL) -> JointGameResult:
    """Exhaustively enumerate the Nash equilibria of the joint formation game.

    Every node chooses all of its virtual sublinks at once; its utility sums
    rewards and shared costs over those sublinks with no in-degree constraint.
    A joint profile is an equilibrium when no node can gain more than ``tol``
    by any change of its complete action.
    """
    if scenario.n_nodes > 5 or len(scenario.destination_set) > 2:
        raise SizeGuardError(
            f"joint oracle limited to 5 nodes and 2 destinations, got {scenario.n_nodes} and "
            f"{len(scenario.destination_set)}"
        )
    sublinks = _joint_sublinks(scenario)
    bits = len(sublinks)
    if bits > max_bits:
        raise SizeGuardError(f"joint profile space 2^{bits} exceeds the 2^{max_bits} limit")
    if bits == 0:
        return JointGameResult((), frozenset({()}))

    index = {s: k for k, s in enumerate(sublinks)}
    dist = scenario.distance_matrix
    shape = (2,) * bits
    ne = np.ones(shape, dtype=bool)
    for v in scenario.node_ids:
        own = [k for k, (t, _, _) in enumerate(sublinks) if t == v]
        if not own:
            continue
        u = np.zeros(shape)
        for k in own:
            t, h, d = sublinks[k]
            rev = index[(h, t, d)]
            gain = 1.0 / (dist[h - 1, d - 1] ** 2 + 1.0) - 1.0 / (dist[t - 1, d - 1] ** 2 + 1.0)
            # term[e, e_rev] = e * gain - unit_cost * e / (e + e_rev), with 0/0 = 0
            term = np.array([[0.0, 0.0], [gain - unit_cost, gain - unit_cost / 2]])
            if k > rev:
                term = term.T
            bshape = [1] * bits
            bshape[k] = bshape[rev] = 2
            u += term.reshape(bshape)
        best = u.max(axis=tuple(own), keepdims=True)
        ne &= u >= best - tol
    profiles = frozenset(tuple(int(b) for b in row) for row in np.argwhere(ne))
    return JointGameResult(tuple(sublinks), profiles)


def pair_ne_product(scenario: Scenario, unit_cost: float, tol: float = TIE_TOL) -> JointGameResult:
    """Cartesian product of the per-pair, per-destination equilibrium sets."""
    sublinks = _joint_sublinks(scenario)
    index = {s: k for k, s in enumerate(sublinks)}
    factors = []
    for i, j in enumerate_pairs(scenario):
        if not scenario.neighbor_matrix[i - 1, j - 1]:
            continue
        for d in scenario.destination_set:
            ne = enumerate_pure_ne(build_payoff_table(scenario, i, j, d, unit_cost), tol)
            factors.append(((index[(i, j, d)], index[(j, i, d)]), sorted(ne)))
    profiles = set()
    for choice in product(*(ne for _, ne in factors)):
        bits = [0] * len(sublinks)
        for ((ki, kj), _), (a_i, a_j) in zip(factors, choice):
            bits[ki], bits[kj] = a_i, a_j
        profiles.add(tuple(bits))
    return JointGameResult(tuple(sublinks), frozenset(profiles))
