"""Hand-built instances shared by several test modules."""

import numpy as np

from ncformation.geometry import Scenario, Topology

BUTTERFLY_LINKS = [(1, 5), (1, 3), (2, 3), (2, 6), (3, 4), (4, 5), (4, 6)]


def butterfly():
    """Two sources (1, 2), both wanted at sinks 5 and 6, sharing the middle link 3 -> 4.

    Positions only need to lie inside the cell; the topology is given, not formed.
    """
    pos = np.array([(-2.0, 1.0), (2.0, 1.0), (0.0, 0.5), (0.0, -0.5), (-2.0, -1.0), (2.0, -1.0)])
    sinks = frozenset({5, 6})
    dests = (sinks, sinks, frozenset(), frozenset(), frozenset(), frozenset())
    return Scenario(pos, 5.0, 5.0, dests), Topology.from_links(6, BUTTERFLY_LINKS)
