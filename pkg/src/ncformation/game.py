"""The two-player link formation game.

Players ``i`` and ``j`` each decide whether to build their outgoing link of
the pair, for one destination ``d``. Building earns the distance-reduction
reward toward ``d`` and costs the unit cost, halved when both build.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .geometry import Scenario

TIE_TOL = 1e-12

ActionProfile = tuple[int, int]
PROFILES: tuple[ActionProfile, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


def proximity(distance):
    """Decreasing proximity score ``1 / (distance^2 + 1)``; works on arrays."""
    return 1.0 / (np.square(distance) + 1.0)


def reward(scenario: Scenario, i: int, j: int, d: int) -> float:
    """Reward for node ``i`` building the link to ``j`` with respect to ``d``."""
    a, b, c = scenario.check_node(i), scenario.check_node(j), scenario.check_node(d)
    dist = scenario.distance_matrix
    return float(proximity(dist[b, c]) - proximity(dist[a, c]))


def cost(a_i: int, a_j: int, unit_cost: float) -> float:
    if not a_i:
        return 0.0
    return unit_cost / 2 if a_j else unit_cost


def utility(a_i: int, a_j: int, reward_i: float, unit_cost: float) -> float:
    return a_i * reward_i - cost(a_i, a_j, unit_cost)


@dataclass(frozen=True)
class PayoffTable:
    reward_i: float
    reward_j: float
    unit_cost: float
    i: int | None = None
    j: int | None = None
    d: int | None = None

    def payoff(self, a_i: int, a_j: int) -> tuple[float, float]:
        return (
            utility(a_i, a_j, self.reward_i, self.unit_cost),
            utility(a_j, a_i, self.reward_j, self.unit_cost),
        )

    @property
    def u(self) -> dict[ActionProfile, tuple[float, float]]:
        return {p: self.payoff(*p) for p in PROFILES}

    def to_text(self) -> str:
        """2x2 matrix with rows a_i = 1, 0 and columns a_j = 1, 0."""
        label = ""
        if self.i is not None:
            label = f"game i={self.i} j={self.j} d={self.d} "
        lines = [f"{label}R_i={self.reward_i:.6g} R_j={self.reward_j:.6g} cost={self.unit_cost:.6g}"]
        lines.append(f"{'':8}{'a_j=1':>26}{'a_j=0':>26}")
        for a_i in (1, 0):
            cells = "".join(f"{'(%.6f, %.6f)' % self.payoff(a_i, a_j):>26}" for a_j in (1, 0))
            lines.append(f"a_i={a_i}   {cells}")
        return "\n".join(lines) + "\n"


def build_payoff_table(scenario: Scenario, i: int, j: int, d: int, unit_cost: float) -> PayoffTable:
    if i == j:
        raise ValueError("a link formation game needs two distinct players")
    return PayoffTable(reward(scenario, i, j, d), reward(scenario, j, i, d), float(unit_cost), i, j, d)


def enumerate_pure_ne(table: PayoffTable, tol: float = TIE_TOL) -> set[ActionProfile]:
    """All profiles where no unilateral deviation gains more than ``tol``."""
    out = set()
    for a_i, a_j in PROFILES:
        u_i, u_j = table.payoff(a_i, a_j)
        if table.payoff(1 - a_i, a_j)[0] <= u_i + tol and table.payoff(a_i, 1 - a_j)[1] <= u_j + tol:
            out.add((a_i, a_j))
    return out


def _best_action(current: int, stay: float, switch: float, tol: float) -> int:
    # Ties keep the current action.
    return 1 - current if switch > stay + tol else current


def best_response_trace(table: PayoffTable, tol: float = TIE_TOL) -> list[ActionProfile]:
    """Profiles visited by alternating best responses from (0, 0).

    The first entry is the starting profile; the last two entries are equal,
    the repeat being what stops the dynamics.
    """
    a_i, a_j = 0, 0
    trace = [(a_i, a_j)]
    while True:
        a_i = _best_action(a_i, table.payoff(a_i, a_j)[0], table.payoff(1 - a_i, a_j)[0], tol)
        a_j = _best_action(a_j, table.payoff(a_i, a_j)[1], table.payoff(a_i, 1 - a_j)[1], tol)
        trace.append((a_i, a_j))
        if trace[-1] == trace[-2]:
            return trace


def best_response_profile(table: PayoffTable, tol: float = TIE_TOL) -> ActionProfile:
    return best_response_trace(table, tol)[-1]


def best_response_arrays(reward_i, reward_j, unit_cost, tol: float = TIE_TOL):
    """Elementwise best-response dynamics over arrays of games.

    Same update rule and tie handling as :func:`best_response_trace`, applied
    to every game at once. Returns boolean arrays ``(a_i, a_j)``.
    """
    r_i = np.asarray(reward_i, dtype=float)
    r_j = np.asarray(reward_j, dtype=float)
    lam = np.broadcast_to(np.asarray(unit_cost, dtype=float), np.broadcast_shapes(r_i.shape, r_j.shape))
    a_i = np.zeros(lam.shape, dtype=bool)
    a_j = np.zeros(lam.shape, dtype=bool)

    r_i_b = np.broadcast_to(r_i, lam.shape)
    r_j_b = np.broadcast_to(r_j, lam.shape)
    while True:
        prev_i, prev_j = a_i, a_j
        g_i = np.where(a_j, r_i_b - lam / 2, r_i_b - lam)
        a_i = np.where(a_i, g_i >= -tol, g_i > tol)
        g_j = np.where(a_i, r_j_b - lam / 2, r_j_b - lam)
        a_j = np.where(a_j, g_j >= -tol, g_j > tol)
        if np.array_equal(a_i, prev_i) and np.array_equal(a_j, prev_j):
            return a_i, a_j


def expected_utility(alpha_i, alpha_j, reward_i: float, unit_cost: float):
    """Player i's expected payoff when i builds w.p. ``alpha_i`` and j w.p. ``alpha_j``.

    Broadcasts over array arguments.
    """
    alpha_i = np.asarray(alpha_i, dtype=float)
    alpha_j = np.asarray(alpha_j, dtype=float)
    total = 0.0
    for a_i, a_j in product((0, 1), repeat=2):
        w = (alpha_i if a_i else 1 - alpha_i) * (alpha_j if a_j else 1 - alpha_j)
        total = total + w * utility(a_i, a_j, reward_i, unit_cost)
    return total


def verify_pure_dominance(table: PayoffTable, grid_resolution: int = 101, tol: float = TIE_TOL) -> bool:
    """Check on a grid that some pure action is at least as good as any mixture.

    For each player and each grid value of the opponent's mixing probability,
    the better pure action must do no worse than every grid mixture.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    grid = np.linspace(0.0, 1.0, grid_resolution)
    own, other = np.meshgrid(grid, grid, indexing="ij")
    for own_reward in (table.reward_i, table.reward_j):
        mixed = expected_utility(own, other, own_reward, table.unit_cost)
        pure = np.maximum(
            expected_utility(0.0, grid, own_reward, table.unit_cost),
            expected_utility(1.0, grid, own_reward, table.unit_cost),
        )
        if np.any(mixed > pure[None, :] + tol):
            return False
    return True
