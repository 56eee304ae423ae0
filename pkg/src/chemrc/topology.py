"""Cycle-with-chord reservoir graphs.

The reservoir is a directed cycle over ``num_nodes`` nodes with chord
shortcuts layered on top: every ``chord_step`` nodes, starting at node 0,
an extra edge jumps ``chord_length`` positions forward (mod n). Node 0 is
the input node where the inflow arrives. All edges point along ascending
index so information travels one way around the cycle, with the chords
acting as feedback shortcuts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

Edge = tuple[int, int]


@dataclass(frozen=True)
class TopologySpec:
    """Validated construction parameters for a cycle-with-chords graph."""

    num_nodes: int
    chord_length: int
    chord_step: int

    def __post_init__(self):
        if self.num_nodes < 3:
            raise ValueError(f"num_nodes must be >= 3, got {self.num_nodes}")
        if not 1 <= self.chord_length < self.num_nodes:
            raise ValueError(
                f"chord_length must be in [1, num_nodes), got "
                f"{self.chord_length} with num_nodes={self.num_nodes}"
            )
        if not 1 <= self.chord_step <= self.num_nodes:
            raise ValueError(
                f"chord_step must be in [1, num_nodes], got "
                f"{self.chord_step} with num_nodes={self.num_nodes}"
            )


@dataclass(frozen=True)
class Topology:
    """A directed reservoir graph. Immutable once built.

    ``cycle_edges`` and ``chord_edges`` are kept as separate reaction
    channels even when they coincide (chord_length 1), because kinetic
    rates are assigned per edge.
    """

    num_nodes: int
    cycle_edges: tuple[Edge, ...]
    chord_edges: tuple[Edge, ...]
    input_node: int = 0

    @property
    def edges(self) -> tuple[Edge, ...]:
        """All edges, cycle first, then chords, in construction order."""
        return self.cycle_edges + self.chord_edges

    @property
    def num_edges(self) -> int:
        return len(self.cycle_edges) + len(self.chord_edges)


def build_topology(spec: TopologySpec) -> Topology:
    """Construct the cycle-with-chords graph described by ``spec``.

    Pure function: identical specs yield identical edge lists. Cycle edges
    are listed in node-index order; chords originate at multiples of
    ``chord_step`` in ascending order.
    """
    n = spec.num_nodes
    cycle = tuple((i, (i + 1) % n) for i in range(n))
    chords = tuple(
        (i, (i + spec.chord_length) % n) for i in range(0, n, spec.chord_step)
    )
    return Topology(num_nodes=n, cycle_edges=cycle, chord_edges=chords)


def export_dot(topology: Topology) -> str:
    """Render the graph as DOT text.

    Cycle and chord edges carry distinct ``kind`` attributes and the input
    node is tagged, so the two edge families survive a round trip through
    any DOT parser.
    """
    lines = ["digraph reservoir {"]
    lines.append(
        f'  {topology.input_node} [kind="input", style="filled", fillcolor="lightblue"];'
    )
    for u, v in topology.cycle_edges:
        lines.append(f'  {u} -> {v} [kind="cycle", color="blue"];')
    for u, v in topology.chord_edges:
        lines.append(f'  {u} -> {v} [kind="chord", color="orange"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def topology_to_dict(topology: Topology) -> dict:
    """JSON-ready description of the edge lists, used in run manifests."""
    return {
        "num_nodes": topology.num_nodes,
        "input_node": topology.input_node,
        "cycle_edges": [list(e) for e in topology.cycle_edges],
        "chord_edges": [list(e) for e in topology.chord_edges],
    }


def topology_to_json(topology: Topology) -> str:
    return json.dumps(topology_to_dict(topology), indent=2) + "\n"
