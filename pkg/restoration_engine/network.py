# restoration_engine/network.py
"""
Power trees and problem instances.

Nodes are numbered 1..n with 1 the source; 0 is the depot, which is a road
location only and never part of the power network. Node sets are stored as
int bitmasks with bit i standing for node i.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidTreeError
from .models import GeoPoint, Region

log = logging.getLogger(__name__)

DEPOT = 0
SOURCE = 1


# --- Bitmask helpers ---


def iter_bits(mask: int) -> Iterator[int]:
    """Yields the node ids set in `mask`, in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(nodes: Iterable[int]) -> int:
    mask = 0
    for node in nodes:
        mask |= 1 << node
    return mask


def nodes_of(mask: int) -> List[int]:
    return list(iter_bits(mask))


# --- Power tree ---


@dataclass(frozen=True)
class PowerTree:
    """
    Directed tree rooted at the source. `parents[i]` is the predecessor of
    node i; entries 0 (depot slot) and 1 (source) are None.
    """

    parents: Tuple[Optional[int], ...]

    def __post_init__(self):
        parents = tuple(self.parents)
        object.__setattr__(self, "parents", parents)
        n = len(parents) - 1
        if n < 1:
            raise InvalidTreeError("A power tree needs at least the source node")
        if parents[DEPOT] is not None or parents[SOURCE] is not None:
            raise InvalidTreeError("Depot and source must not have a parent")
        for node in range(2, n + 1):
            parent = parents[node]
            if parent is None or not 1 <= parent <= n or parent == node:
                raise InvalidTreeError(f"Node {node} has invalid parent {parent}")
        # Every node must reach the source without revisiting anything.
        for node in range(2, n + 1):
            seen = {node}
            current = parents[node]
            while current != SOURCE:
                if current in seen:
                    raise InvalidTreeError(f"Cycle through node {current}")
                seen.add(current)
                current = parents[current]

    @classmethod
    def from_parent_list(cls, parents: List[Optional[int]]) -> "PowerTree":
        return cls(tuple(parents))

    @property
    def n(self) -> int:
        return len(self.parents) - 1

    @property
    def all_mask(self) -> int:
        """Bitmask of every power node 1..n."""
        return ((1 << (self.n + 1)) - 1) & ~1

    def arcs(self) -> List[Tuple[int, int]]:
        return [(self.parents[i], i) for i in range(2, self.n + 1)]

    @cached_property
    def children(self) -> Tuple[Tuple[int, ...], ...]:
        kids: List[List[int]] = [[] for _ in range(self.n + 1)]
        for parent, child in self.arcs():
            kids[parent].append(child)
        return tuple(tuple(sorted(k)) for k in kids)

    @cached_property
    def path_masks(self) -> Tuple[int, ...]:
        """P_{1i} as a bitmask, node i included. Index 0 is unused (0)."""
        masks = [0] * (self.n + 1)
        for node in self.topological_order:
            parent = self.parents[node]
            masks[node] = (masks[parent] if parent is not None else 0) | (1 << node)
        return tuple(masks)

    @cached_property
    def strict_masks(self) -> Tuple[int, ...]:
        """P_{1i} without i itself."""
        return tuple(mask & ~(1 << i) for i, mask in enumerate(self.path_masks))

    @cached_property
    def topological_order(self) -> Tuple[int, ...]:
        order = [SOURCE]
        for node in order:
            order.extend(self.children[node])
        return tuple(order)

    @cached_property
    def descendant_counts(self) -> Tuple[int, ...]:
        """Number of transitive successors of every node (0 for the depot slot)."""
        graph = self.to_digraph()
        counts = [0] * (self.n + 1)
        for node in range(1, self.n + 1):
            counts[node] = len(nx.descendants(graph, node))
        return tuple(counts)

    def to_digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(1, self.n + 1))
        graph.add_edges_from(self.arcs())
        return graph

    def depth(self) -> int:
        if self.n == 1:
            return 0
        return nx.dag_longest_path_length(self.to_digraph())


# --- Instance ---


@dataclass(frozen=True)
class Instance:
    """
    One TRNRP problem: power tree, node coordinates (index 0 is the depot)
    and the (s, p) pair. Travel times are the Euclidean distances between
    points.
    """

    tree: PowerTree
    points: Tuple[GeoPoint, ...]
    repair_time: float
    fault_prob: float
    seed: int = 0
    region: Optional[Region] = None
    degree_bound: int = 3
    reduce_requested: int = 0
    reduce_applied: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) != self.tree.n + 1:
            raise InvalidTreeError(
                f"Expected {self.tree.n + 1} points (depot + nodes), got {len(self.points)}"
            )
        if not 0.0 < self.fault_prob < 1.0:
            raise ValueError(f"Fault probability must lie in (0, 1), got {self.fault_prob}")
        if not self.repair_time >= 0.0:
            raise ValueError(f"Repair time must be non-negative, got {self.repair_time}")

    @classmethod
    def from_points(
        cls,
        parents: List[Optional[int]],
        coordinates: List[Tuple[float, float]],
        repair_time: float,
        fault_prob: float,
        **kwargs,
    ) -> "Instance":
        """Convenience builder from raw coordinates, depot first."""
        points = tuple(GeoPoint(x=x, y=y) for x, y in coordinates)
        return cls(PowerTree.from_parent_list(parents), points, repair_time, fault_prob, **kwargs)

    @property
    def n(self) -> int:
        return self.tree.n

    @property
    def all_mask(self) -> int:
        return self.tree.all_mask

    @property
    def depth(self) -> int:
        return self.tree.depth()

    @cached_property
    def distances(self) -> np.ndarray:
        coords = np.array([[p.x, p.y] for p in self.points], dtype=float)
        return cdist(coords, coords)

    @cached_property
    def d(self) -> Tuple[Tuple[float, ...], ...]:
        """Nested-tuple copy of `distances` for scalar lookups in hot loops."""
        return tuple(tuple(float(v) for v in row) for row in self.distances)

    @cached_property
    def max_distance(self) -> float:
        return float(self.distances.max())
