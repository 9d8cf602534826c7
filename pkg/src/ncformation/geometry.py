"""Problem instances: node placement, distances, neighborhoods and topologies.

Node identifiers are 1-based throughout the public API (``1..n_nodes``);
arrays indexed by node use ``id - 1``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, InstanceError

DEST_POLICIES = ("random", "shared", "edge_pair", "fixed")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable problem instance.

    ``destinations[i - 1]`` is the destination set of node ``i``.
    """

    positions: np.ndarray
    radius: float
    delta: float
    destinations: tuple[frozenset[int], ...]
    seed: int = 0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise InstanceError(f"positions must be an (n, 2) array, got shape {pos.shape}")
        n = pos.shape[0]
        if not self.radius > 0:
            raise InstanceError(f"cell radius must be positive, got {self.radius}")
        if not self.delta > 0:
            raise InstanceError(f"connection boundary must be positive, got {self.delta}")
        norms = np.hypot(pos[:, 0], pos[:, 1])
        if np.any(norms > self.radius * (1 + 1e-9)):
            worst = int(np.argmax(norms)) + 1
            raise InstanceError(f"node {worst} lies outside the cell of radius {self.radius}")
        dests = tuple(frozenset(int(d) for d in ds) for ds in self.destinations)
        if len(dests) != n:
            raise InstanceError(f"expected {n} destination sets, got {len(dests)}")
        for i, ds in enumerate(dests, start=1):
            bad = [d for d in ds if not 1 <= d <= n]
            if bad:
                raise InstanceError(f"node {i} has invalid destination(s) {sorted(bad)}")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "destinations", dests)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def node_ids(self) -> range:
        return range(1, self.n_nodes + 1)

    def check_node(self, i: int) -> int:
        """Return the array index of node ``i`` or raise InstanceError."""
        if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 1 <= i <= self.n_nodes:
            raise InstanceError(f"invalid node index {i!r} (valid: 1..{self.n_nodes})")
        return int(i) - 1

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        p = self.positions
        dx = p[:, None, 0] - p[None, :, 0]
        dy = p[:, None, 1] - p[None, :, 1]
        d = np.hypot(dx, dy)
        np.fill_diagonal(d, 0.0)
        return _readonly(d)

    @cached_property
    def neighbor_matrix(self) -> np.ndarray:
        """Boolean matrix of node pairs that may form a link."""
        d = self.distance_matrix
        return _readonly((d > 0) & (d <= self.delta))

    @cached_property
    def destination_set(self) -> tuple[int, ...]:
        """Sorted distinct destinations over all nodes."""
        return tuple(sorted(set().union(*self.destinations)))

    def sources_of(self, d: int) -> frozenset[int]:
        """Nodes whose destination set contains ``d``."""
        self.check_node(d)
        return frozenset(i for i, ds in zip(self.node_ids, self.destinations) if d in ds)

    @property
    def flows(self) -> list[tuple[int, int]]:
        """All required (source, destination) flows in node order."""
        return [(i, d) for i, ds in zip(self.node_ids, self.destinations) for d in sorted(ds)]

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            np.array_equal(self.positions, other.positions)
            and self.radius == other.radius
            and self.delta == other.delta
            and self.destinations == other.destinations
            and self.seed == other.seed
        )

    __hash__ = None

    def to_text(self) -> str:
        doc = {
            "n_nodes": self.n_nodes,
            "radius": self.radius,
            "delta": self.delta,
            "seed": self.seed,
            "positions": [[float(x), float(y)] for x, y in self.positions],
            "destinations": [sorted(ds) for ds in self.destinations],
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Scenario:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"scenario file is not valid: {exc}") from exc
        missing = {"n_nodes", "radius", "delta", "positions", "destinations"} - doc.keys()
        if missing:
            raise InstanceError(f"scenario file missing keys: {sorted(missing)}")
        sc = cls(
            positions=np.array(doc["positions"], dtype=float).reshape(-1, 2),
            radius=doc["radius"],
            delta=doc["delta"],
            destinations=tuple(doc["destinations"]),
            seed=doc.get("seed", 0),
        )
        if sc.n_nodes != doc["n_nodes"]:
            raise InstanceError(f"n_nodes={doc['n_nodes']} but {sc.n_nodes} positions given")
        return sc


def euclidean_distance(scenario: Scenario, i: int, j: int) -> float:
    a, b = scenario.check_node(i), scenario.check_node(j)
    return float(scenario.distance_matrix[a, b])


def neighbor_set(scenario: Scenario, i: int) -> frozenset[int]:
    a = scenario.check_node(i)
    return frozenset(int(k) + 1 for k in np.flatnonzero(scenario.neighbor_matrix[a]))


class Topology:
    """Immutable set of active directed links over ``n_nodes`` nodes.

    ``sublinks`` optionally maps each destination to the boolean matrix of
    virtual sublinks activated for it; when present, the physical links are
    exactly their union.
    """

    def __init__(self, adjacency: np.ndarray, sublinks: Mapping[int, np.ndarray] | None = None):
        adj = np.array(adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InstanceError(f"adjacency must be square, got shape {adj.shape}")
        if np.any(np.diagonal(adj)):
            raise InstanceError("self-links are not allowed")
        subs = {}
        for d, m in (sublinks or {}).items():
            m = np.array(m, dtype=bool)
            if m.shape != adj.shape:
                raise InstanceError(f"sublink matrix for destination {d} has shape {m.shape}")
            subs[int(d)] = _readonly(m)
        if subs:
            union = np.logical_or.reduce(list(subs.values()))
            if not np.array_equal(union, adj):
                raise InstanceError("active links differ from the union of per-destination sublinks")
        self.n_nodes = adj.shape[0]
        self.adjacency = _readonly(adj)
        self.sublinks = subs

    @classmethod
    def from_links(
        cls,
        n_nodes: int,
        links: Iterable[tuple[int, int]] | None,
        per_destination: Mapping[int, Iterable[tuple[int, int]]] | None = None,
    ) -> Topology:
        def to_matrix(pairs):
            m = np.zeros((n_nodes, n_nodes), dtype=bool)
            for i, j in pairs:
                if not (1 <= i <= n_nodes and 1 <= j <= n_nodes):
                    raise InstanceError(f"link ({i}, {j}) references a node outside 1..{n_nodes}")
                if i == j:
                    raise InstanceError(f"self-link ({i}, {i}) is not allowed")
                m[i - 1, j - 1] = True
            return m

        subs = None
        if per_destination is not None:
            subs = {d: to_matrix(p) for d, p in per_destination.items()}
        if links is None:
            # Active links default to the union of the sublinks.
            adj = np.zeros((n_nodes, n_nodes), dtype=bool)
            for m in (subs or {}).values():
                adj |= m
            return cls(adj, subs)
        return cls(to_matrix(links), subs)

    @classmethod
    def empty(cls, n_nodes: int) -> Topology:
        return cls(np.zeros((n_nodes, n_nodes), dtype=bool))

    @cached_property
    def active_links(self) -> frozenset[tuple[int, int]]:
        return frozenset((int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(self.adjacency)))

    @cached_property
    def per_destination_sublinks(self) -> dict[int, frozenset[tuple[int, int]]]:
        return {
            d: frozenset((int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(m)))
            for d, m in self.sublinks.items()
        }

    def sorted_links(self) -> list[tuple[int, int]]:
        return sorted(self.active_links)

    def out_degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def in_degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)

    def successors(self, i: int) -> list[int]:
        return [int(k) + 1 for k in np.flatnonzero(self.adjacency[i - 1])]

    def predecessors(self, j: int) -> list[int]:
        return [int(k) + 1 for k in np.flatnonzero(self.adjacency[:, j - 1])]

    def __len__(self) -> int:
        return int(self.adjacency.sum())

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency) and self.sublinks.keys() == other.sublinks.keys() and all(
            np.array_equal(m, other.sublinks[d]) for d, m in self.sublinks.items()
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Topology(n_nodes={self.n_nodes}, links={self.sorted_links()})"


def is_feasible(scenario: Scenario, topology: Topology) -> bool:
    """True when every active link joins two neighbors (0 < distance <= delta)."""
    if topology.n_nodes != scenario.n_nodes:
        return False
    return not np.any(topology.adjacency & ~scenario.neighbor_matrix)


def reachable(topology: Topology, src: int, dst: int) -> bool:
    if src == dst:
        return True
    adj = topology.adjacency
    seen = {src - 1}
    queue = deque([src - 1])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v == dst - 1:
                return True
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return False


def reachability_matrix(topology: Topology) -> np.ndarray:
    """Transitive-reflexive closure of the link relation: ``M[a, b]`` iff a reaches b."""
    n = topology.n_nodes
    closure = topology.adjacency | np.eye(n, dtype=bool)
    while True:
        c = closure.astype(np.int32)
        nxt = (c @ c) > 0
        if np.array_equal(nxt, closure):
            return closure
        closure = nxt


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters for random scenario generation.

    ``dest_policy``:
      * ``random``: every node draws ``dest_count`` destinations among the others.
      * ``shared``: ``dest_count`` nodes are drawn once and every other node
        targets all of them. Destination nodes are sinks only: their own data
        stays local, so their destination sets are empty.
      * ``edge_pair``: like ``shared`` but the destination nodes are placed next
        to each other on the cell edge, ``edge_spacing`` apart.
      * ``fixed``: ``fixed_destinations`` gives every node's set explicitly.
    """

    n_nodes: int
    radius: float = 10.0
    delta_factor: float = 1.0
    dest_count: int = 2
    dest_policy: str = "shared"
    fixed_destinations: Sequence[Sequence[int]] | None = field(default=None)
    edge_spacing: float = 1.0

    @property
    def delta(self) -> float:
        return self.delta_factor * self.radius

    def validate(self) -> None:
        if self.n_nodes < 2:
            raise ConfigError(f"n_nodes must be at least 2, got {self.n_nodes}")
        if not self.radius > 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")
        if not self.delta_factor > 0:
            raise ConfigError(f"delta_factor must be positive, got {self.delta_factor}")
        if self.dest_policy not in DEST_POLICIES:
            raise ConfigError(f"unknown destination policy {self.dest_policy!r}; expected one of {DEST_POLICIES}")
        if self.dest_policy == "fixed":
            if self.fixed_destinations is None or len(self.fixed_destinations) != self.n_nodes:
                raise ConfigError("fixed destination policy needs one destination list per node")
        elif not 1 <= self.dest_count <= self.n_nodes - 1:
            raise ConfigError(
                f"destination count {self.dest_count} infeasible for {self.n_nodes} nodes "
                f"(need 1..{self.n_nodes - 1}; nodes are never their own destination)"
            )


def sample_disk(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    """Uniform samples over a disk: radius scales with sqrt(u) so density is flat in area."""
    r = radius * np.sqrt(rng.random(count))
    theta = 2 * math.pi * rng.random(count)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    config.validate()
    rng = np.random.default_rng(seed)
    n = config.n_nodes
    positions = sample_disk(rng, n, config.radius)
    ids = np.arange(1, n + 1)

    if config.dest_policy == "random":
        dests = []
        for i in ids:
            others = ids[ids != i]
            dests.append(frozenset(int(d) for d in rng.choice(others, config.dest_count, replace=False)))
    elif config.dest_policy == "fixed":
        dests = [frozenset(int(d) for d in ds) for ds in config.fixed_destinations]
    else:
        if config.dest_policy == "edge_pair":
            chosen = ids[: config.dest_count]
            phi = 2 * math.pi * rng.random()
            step = 2 * math.asin(min(1.0, config.edge_spacing / (2 * config.radius)))
            for k, d in enumerate(chosen):
                ang = phi + k * step
                positions[d - 1] = (config.radius * math.cos(ang), config.radius * math.sin(ang))
        else:
            chosen = rng.choice(ids, config.dest_count, replace=False)
        shared = frozenset(int(d) for d in chosen)
        dests = [frozenset() if int(i) in shared else shared for i in ids]

    # Points placed exactly on the cell edge can exceed the radius by an ulp.
    norms = np.hypot(positions[:, 0], positions[:, 1])
    over = norms > config.radius
    positions[over] *= (config.radius / norms[over])[:, None]
    return Scenario(positions=positions, radius=config.radius, delta=config.delta, destinations=tuple(dests), seed=seed)
