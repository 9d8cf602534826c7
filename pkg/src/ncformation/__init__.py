"""Topology formation for multi-source multicast sensor networks.

Nodes build links by playing independent two-player link formation games,
one per neighbor pair and destination. With random linear network coding at
the relays, the union of the per-game equilibria is an equilibrium of the
whole network formation game.
"""

from .baselines import (
    STRATEGIES,
    StrategyReport,
    canonical_strategy,
    nc_centralized,
    non_nc_centralized,
    proposed,
    restricted_search_space_size,
    run_strategy,
    search_space_size,
)
from .errors import ConfigError, ContractError, DatasetError, InstanceError, NcFormationError, SizeGuardError
from .flowsim import SimConfig, SimReport, connection_failure_ratio, count_active_links, simulate
from .formation import (
    FormationResult,
    enumerate_pairs,
    form_topology,
    joint_game_oracle,
    network_utility,
    pair_ne_product,
)
from .game import (
    PayoffTable,
    best_response_profile,
    build_payoff_table,
    cost,
    enumerate_pure_ne,
    reward,
    utility,
    verify_pure_dominance,
)
from .geometry import (
    Scenario,
    ScenarioConfig,
    Topology,
    euclidean_distance,
    generate_scenario,
    neighbor_set,
    reachable,
)
from .gf import GF256, GaloisField, gf_add, gf_inv, gf_mul
from .rlnc import Basis, Packet, decode, encode_at_node, random_local_coeffs, recoverable_sources

__version__ = "0.1.0"
