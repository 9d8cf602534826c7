"""Random linear network coding over GF(2^M).

A packet carries its global coding coefficients (one per source node) as a
header and the correspondingly combined source symbols as payload. Nodes
recombine whatever they hold with random local coefficients; receivers run
Gaussian elimination on the headers to find which sources they can decode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError
from .gf import GF256, GaloisField


@dataclass(frozen=True)
class Packet:
    coefficients: tuple[int, ...]
    payload: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(int(c) for c in self.coefficients))
        object.__setattr__(self, "payload", tuple(int(y) for y in self.payload))

    @property
    def n_sources(self) -> int:
        return len(self.coefficients)

    def to_bytes(self, field: GaloisField = GF256) -> bytes:
        """Big-endian, ``ceil(M/8)`` bytes per element: header then payload."""
        width = (field.m + 7) // 8
        return b"".join(v.to_bytes(width, "big") for v in self.coefficients + self.payload)

    @classmethod
    def from_bytes(cls, data: bytes, n_sources: int, field: GaloisField = GF256) -> Packet:
        width = (field.m + 7) // 8
        if len(data) % width or len(data) // width < n_sources:
            raise ContractError(f"{len(data)} bytes cannot hold {n_sources} coefficients of width {width}")
        vals = [field.check(int.from_bytes(data[k : k + width], "big")) for k in range(0, len(data), width)]
        return cls(tuple(vals[:n_sources]), tuple(vals[n_sources:]))

    def header_hex(self, field: GaloisField = GF256) -> str:
        width = (field.m + 7) // 8
        return b"".join(v.to_bytes(width, "big") for v in self.coefficients).hex()


def unit_row(node: int, n_nodes: int) -> tuple[int, ...]:
    """Header of an uncoded packet from 1-based ``node``."""
    row = [0] * n_nodes
    row[node - 1] = 1
    return tuple(row)


def source_packet(node: int, n_nodes: int, symbol: int | Sequence[int]) -> Packet:
    payload = (symbol,) if isinstance(symbol, (int, np.integer)) else tuple(symbol)
    return Packet(unit_row(node, n_nodes), payload)


def encode_at_node(
    own_source_coeff_row: Sequence[int],
    incoming: Sequence[Packet],
    local_coeffs: Sequence[int],
    own_symbol: int | Sequence[int],
    field: GaloisField = GF256,
) -> Packet:
    """Combine incoming packets and the node's own symbol into one packet.

    ``local_coeffs`` holds one coefficient per incoming packet followed by the
    coefficient for the node's own symbol.
    """
    if len(local_coeffs) != len(incoming) + 1:
        raise ContractError(f"need {len(incoming) + 1} local coefficients, got {len(local_coeffs)}")
    own_payload = (own_symbol,) if isinstance(own_symbol, (int, np.integer)) else tuple(own_symbol)
    n = len(own_source_coeff_row)
    for p in incoming:
        if p.n_sources != n or len(p.payload) != len(own_payload):
            raise ContractError("incoming packet dimensions do not match the node's own row")
    headers = np.array([p.coefficients for p in incoming] + [tuple(own_source_coeff_row)], dtype=np.int64)
    payloads = np.array([p.payload for p in incoming] + [own_payload], dtype=np.int64).reshape(len(incoming) + 1, -1)
    coeffs = np.array([field.check(int(c)) for c in local_coeffs], dtype=np.int64)
    return Packet(tuple(field.combine(coeffs, headers)), tuple(field.combine(coeffs, payloads)))


def random_local_coeffs(count: int, rng: np.random.Generator, field: GaloisField = GF256) -> list[int]:
    if count < 0:
        raise ContractError(f"count must be nonnegative, got {count}")
    return [int(c) for c in rng.integers(0, field.order, size=count)]


class Basis:
    """Row space of received headers, kept in reduced row echelon form.

    Payloads are carried along through every row operation, so once a row
    becomes a unit vector its payload is the decoded source symbol.
    """

    def __init__(self, n_sources: int, payload_len: int = 1, field: GaloisField = GF256):
        self.n_sources = n_sources
        self.payload_len = payload_len
        self.field = field
        self._rows = np.zeros((0, n_sources + payload_len), dtype=np.int64)
        self._pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._pivots)

    @property
    def headers(self) -> np.ndarray:
        return self._rows[:, : self.n_sources]

    @property
    def payloads(self) -> np.ndarray:
        return self._rows[:, self.n_sources :]

    def packets(self) -> list[Packet]:
        return [Packet(tuple(r[: self.n_sources]), tuple(r[self.n_sources :])) for r in self._rows]

    def insert(self, coefficients: Sequence[int], payload: Sequence[int] | None = None) -> bool:
        """Add a row; returns True when it increased the rank."""
        if len(coefficients) != self.n_sources:
            raise ContractError(f"row has {len(coefficients)} coefficients, expected {self.n_sources}")
        if payload is None:
            payload = (0,) * self.payload_len
        if len(payload) != self.payload_len:
            raise ContractError(f"payload has {len(payload)} symbols, expected {self.payload_len}")
        gf = self.field
        v = np.array(tuple(coefficients) + tuple(payload), dtype=np.int64)
        for r, p in zip(self._rows, self._pivots):
            if v[p]:
                v ^= gf.mul_vec(v[p], r)
        nz = np.flatnonzero(v[: self.n_sources])
        if nz.size == 0:
            return False
        q = int(nz[0])
        v = gf.mul_vec(gf.inv(int(v[q])), v)
        rows = self._rows
        hit = rows[:, q] != 0
        if np.any(hit):
            rows = rows.copy()
            rows[hit] ^= gf.mul_vec(rows[hit, q][:, None], v[None, :])
        at = int(np.searchsorted(self._pivots, q))
        self._rows = np.insert(rows, at, v, axis=0)
        self._pivots.insert(at, q)
        return True

    def recoverable(self) -> set[int]:
        """1-based sources whose unit vector lies in the row space."""
        heads = self.headers
        singles = np.count_nonzero(heads, axis=1) == 1
        return {p + 1 for p, s in zip(self._pivots, singles) if s}

    def decoded(self) -> dict[int, tuple[int, ...]]:
        out = {}
        for r, p in zip(self._rows, self._pivots):
            if np.count_nonzero(r[: self.n_sources]) == 1:
                out[p + 1] = tuple(int(y) for y in r[self.n_sources :])
        return out


def _as_rows(matrix) -> list[tuple[int, ...]]:
    return [tuple(int(c) for c in row) for row in matrix]


def recoverable_sources(matrix: Sequence[Sequence[int]], field: GaloisField = GF256) -> set[int]:
    """1-based indices k with e_k in the row space of ``matrix``."""
    rows = _as_rows(matrix)
    if not rows:
        return set()
    b = Basis(len(rows[0]), 1, field)
    for r in rows:
        b.insert(r)
    return b.recoverable()


def decode(matrix: Sequence[Sequence[int]], payloads: Sequence, field: GaloisField = GF256) -> dict[int, int | tuple[int, ...]]:
    """Map each recoverable 1-based source to its symbol.

    Scalar payloads give scalar symbols; sequence payloads give tuples.
    """
    rows = _as_rows(matrix)
    if len(rows) != len(payloads):
        raise ContractError(f"{len(rows)} header rows but {len(payloads)} payloads")
    if not rows:
        return {}
    scalar = all(isinstance(y, (int, np.integer)) for y in payloads)
    pays = [(int(y),) if scalar else tuple(int(v) for v in y) for y in payloads]
    b = Basis(len(rows[0]), len(pays[0]), field)
    for r, y in zip(rows, pays):
        if len(r) != b.n_sources:
            raise ContractError("header rows have inconsistent lengths")
        b.insert(r, y)
    dec = b.decoded()
    return {k: v[0] for k, v in dec.items()} if scalar else dec
