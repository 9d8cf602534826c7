"""Time-slotted dissemination of one generation of source symbols.

Each slot, every node with an outgoing link multicasts one packet on all of
its outgoing links, and every node receives everything sent to it. In SF
mode a node forwards the head of a FIFO queue of uncoded packets; in NC mode
it sends a fresh random combination of everything it holds.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .geometry import Scenario, Topology, reachability_matrix
from .gf import GF256, GaloisField
from .rlnc import Basis, Packet, encode_at_node, random_local_coeffs, unit_row
from .seeding import substream

MODES = ("SF", "NC")

CSV_FIELDS = (
    "mode",
    "slots",
    "goodput",
    "per_node_goodput",
    "delivered_flows",
    "total_flows",
    "last_delivery_slot",
    "connection_failure_ratio",
    "active_links",
)


@dataclass(frozen=True)
class SimConfig:
    """``slots=None`` uses a horizon of four slots per node."""

    mode: str = "NC"
    slots: int | None = None
    seed: int = 0
    trace: bool = False
    field: GaloisField = GF256

    def __post_init__(self):
        mode = self.mode.upper()
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if self.slots is not None and self.slots < 1:
            raise ValueError(f"slots must be positive, got {self.slots}")

    @property
    def capacity(self) -> int:
        return 1

    def horizon(self, n_nodes: int) -> int:
        return self.slots if self.slots is not None else 4 * n_nodes


@dataclass(frozen=True)
class SimReport:
    mode: str
    slots: int
    goodput: float
    per_node_goodput: float
    delivered: dict[tuple[int, int], int]
    total_flows: int
    connection_failure_ratio: float
    active_links: int
    decode_errors: int = 0
    trace: list[tuple[int, int, str]] = field(default_factory=list, repr=False)

    @property
    def last_delivery_slot(self) -> int:
        return max(self.delivered.values(), default=0)

    def csv_row(self) -> dict[str, object]:
        return {
            "mode": self.mode,
            "slots": self.slots,
            "goodput": repr(self.goodput),
            "per_node_goodput": repr(self.per_node_goodput),
            "delivered_flows": len(self.delivered),
            "total_flows": self.total_flows,
            "last_delivery_slot": self.last_delivery_slot,
            "connection_failure_ratio": repr(self.connection_failure_ratio),
            "active_links": self.active_links,
        }


def write_report_csv(reports: Iterable[SimReport], path, header: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if header:
            w.writeheader()
        for r in reports:
            w.writerow(r.csv_row())


def write_trace(report: SimReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("slot", "node", "header_hex"))
        w.writerows(report.trace)


def count_active_links(topology: Topology) -> int:
    return len(topology)


def connection_failure_ratio(scenario: Scenario, topology: Topology) -> float:
    """Fraction of required (source, destination) flows with no directed path."""
    flows = scenario.flows
    if not flows:
        return 0.0
    reach = reachability_matrix(topology)
    failed = sum(1 for k, d in flows if not reach[k - 1, d - 1])
    return failed / len(flows)


def simulate(scenario: Scenario, topology: Topology, config: SimConfig) -> SimReport:
    n = scenario.n_nodes
    horizon = config.horizon(n)
    flows = scenario.flows
    required: dict[int, set[int]] = {}
    for k, d in flows:
        required.setdefault(d, set()).add(k)
    reach = reachability_matrix(topology)
    reachable_flows = {(k, d) for k, d in flows if reach[k - 1, d - 1]}
    symbols = [int(s) for s in substream(config.seed, 0).integers(0, config.field.order, size=n)]
    senders = [i for i in range(n) if topology.adjacency[i].any()]
    receivers = [list(np.flatnonzero(topology.adjacency[i])) for i in range(n)]

    delivered: dict[tuple[int, int], int] = {}
    for k, d in flows:
        if k == d:
            delivered[(k, d)] = 0
    trace: list[tuple[int, int, str]] = []
    if config.mode == "SF":
        errors = _run_sf(n, horizon, senders, receivers, required, reachable_flows, delivered, trace, config)
    else:
        errors = _run_nc(n, horizon, senders, receivers, required, reachable_flows, symbols, delivered, trace, config)

    if len(delivered) == len(flows):
        denom = max(1, max(delivered.values(), default=1))
    else:
        denom = horizon
    goodput = len(delivered) / denom
    return SimReport(
        mode=config.mode,
        slots=horizon,
        goodput=goodput,
        per_node_goodput=goodput / n,
        delivered=delivered,
        total_flows=len(flows),
        connection_failure_ratio=connection_failure_ratio(scenario, topology),
        active_links=len(topology),
        decode_errors=errors,
        trace=trace,
    )


def _run_sf(n, horizon, senders, receivers, required, reachable_flows, delivered, trace, config) -> int:
    queues = [deque([i]) for i in range(n)]
    seen = [{i} for i in range(n)]
    for t in range(1, horizon + 1):
        if reachable_flows <= delivered.keys():
            break
        sent = []
        for i in senders:
            if queues[i]:
                src = queues[i].popleft()
                sent.append((i, src))
                if config.trace:
                    trace.append((t, i + 1, Packet(unit_row(src + 1, n), ()).header_hex(config.field)))
        for i, src in sent:
            for r in receivers[i]:
                if src in seen[r]:
                    continue
                seen[r].add(src)
                queues[r].append(src)
                key = (src + 1, int(r) + 1)
                if src + 1 in required.get(int(r) + 1, ()) and key not in delivered:
                    delivered[key] = t
    return 0


def _run_nc(n, horizon, senders, receivers, required, reachable_flows, symbols, delivered, trace, config) -> int:
    gf = config.field
    stores = []
    for i in range(n):
        b = Basis(n, 1, gf)
        b.insert(unit_row(i + 1, n), (symbols[i],))
        stores.append(b)
    rngs = [substream(config.seed, 1, i + 1) for i in range(n)]
    errors = 0
    for t in range(1, horizon + 1):
        if reachable_flows <= delivered.keys():
            break
        sent = []
        for i in senders:
            held = stores[i].packets()
            coeffs = random_local_coeffs(len(held) + 1, rngs[i], gf)
            pkt = encode_at_node(unit_row(i + 1, n), held, coeffs, symbols[i], gf)
            sent.append((i, pkt))
            if config.trace:
                trace.append((t, i + 1, pkt.header_hex(gf)))
        touched = set()
        for i, pkt in sent:
            for r in receivers[i]:
                if stores[r].insert(pkt.coefficients, pkt.payload):
                    touched.add(int(r))
        for r in sorted(touched):
            wanted = required.get(r + 1)
            if not wanted:
                continue
            for k, sym in stores[r].decoded().items():
                if k in wanted and (k, r + 1) not in delivered:
                    delivered[(k, r + 1)] = t
                    if sym[0] != symbols[k - 1]:
                        errors += 1
    return errors
