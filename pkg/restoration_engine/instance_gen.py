# restoration_engine/instance_gen.py
"""
Random instance generation: scatter demand nodes over a region, connect them
with a degree-constrained minimum spanning tree, relabel so the busiest node
is the source, then optionally flatten the tree by re-parenting nodes to
their grandparents.
"""
import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import InvalidRegionError, InvalidTreeError
from .models import GenerationConfig, GeoPoint, Region, RegionShape
from .network import Instance, PowerTree

log = logging.getLogger(__name__)

Point = Tuple[float, float]


# --- Coordinates ---


def generate_points(
    region: Region, n: int, rng: np.random.Generator, radial: str = "area"
) -> List[GeoPoint]:
    """
    Draws n points uniformly over the region.

    For circles, `radial="area"` samples uniformly over the disc while
    `radial="uniform-radius"` draws the radius uniformly, which crowds
    points towards the centre.
    """
    if n < 0:
        raise ValueError(f"Point count must be non-negative, got {n}")
    width, height = region.dimensions()
    if n == 0:
        return []
    x0, y0 = region.origin.x, region.origin.y

    if region.shape is RegionShape.CIRCLE:
        u = rng.uniform(0.0, 1.0, size=n)
        if radial == "area":
            r = width * np.sqrt(u)
        elif radial == "uniform-radius":
            r = width * u
        else:
            raise InvalidRegionError(f"Unknown radial sampling '{radial}'")
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        xs = x0 + r * np.cos(theta)
        ys = y0 + r * np.sin(theta)
    else:
        xy = rng.uniform((x0, y0), (x0 + width, y0 + height), size=(n, 2))
        xs, ys = xy[:, 0], xy[:, 1]

    return [GeoPoint(x=float(x), y=float(y)) for x, y in zip(xs, ys)]


def compute_depot(points: Sequence[GeoPoint]) -> GeoPoint:
    """Centre of gravity of the demand nodes."""
    if not points:
        raise ValueError("Cannot place a depot for an empty point list")
    centre = np.mean([[p.x, p.y] for p in points], axis=0)
    return GeoPoint(x=float(centre[0]), y=float(centre[1]))


# --- Degree-constrained MST ---


def _complete_graph(points: Sequence[GeoPoint]) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(len(points)))
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            length = points[i].distance(points[j])
            graph.add_edge(i, j, length=length, base=length)
    return graph


def _violators(tree: nx.Graph, degree_bound: int) -> List[int]:
    return sorted(node for node, deg in tree.degree() if deg > degree_bound)


def _degree_capped_prim(graph: nx.Graph, degree_bound: int) -> nx.Graph:
    """Grows a tree from node 0, only extending from nodes still below the bound."""
    tree = nx.Graph()
    tree.add_nodes_from(graph.nodes)
    in_tree = {0}
    while len(in_tree) < graph.number_of_nodes():
        best = None
        for u in sorted(in_tree):
            if tree.degree(u) >= degree_bound:
                continue
            for v in graph.neighbors(u):
                if v in in_tree:
                    continue
                candidate = (graph[u][v]["base"], u, v)
                if best is None or candidate < best:
                    best = candidate
        _, u, v = best
        tree.add_edge(u, v, length=graph[u][v]["base"], base=graph[u][v]["base"])
        in_tree.add(v)
    return tree


def build_dmst(
    points: Sequence[GeoPoint], degree_bound: int = 3, max_rounds: int = 500
) -> nx.Graph:
    """
    Degree-constrained MST over the demand nodes (graph node k = points[k]).

    Each round penalizes the MST edges incident to degree violators and
    recomputes the MST. Falls back to a degree-capped Prim tree when the
    penalties stall or the round limit is hit.
    """
    if degree_bound < 2:
        raise InvalidTreeError(f"Degree bound must be at least 2, got {degree_bound}")
    if len(points) < 2:
        raise InvalidTreeError(f"Need at least 2 points for a spanning tree, got {len(points)}")

    graph = _complete_graph(points)
    mst = nx.minimum_spanning_tree(graph, weight="length")

    for round_no in range(max_rounds):
        violators = _violators(mst, degree_bound)
        if not violators:
            log.debug(f"d-MST satisfied the degree bound after {round_no} rounds")
            return mst

        lengths = [data["length"] for _, _, data in mst.edges(data=True)]
        l_min, l_max = min(lengths), max(lengths)
        if l_max <= l_min:
            break
        factor = len(violators)
        changed = False
        for node in violators:
            for u, v in mst.edges(node):
                length = mst[u][v]["length"]
                if length > l_min:
                    graph[u][v]["length"] += factor * l_max * (length - l_min) / (l_max - l_min)
                    changed = True
        if not changed:
            break
        mst = nx.minimum_spanning_tree(graph, weight="length")

    if not _violators(mst, degree_bound):
        return mst
    log.warning(
        f"d-MST penalties did not reach degree bound {degree_bound}; "
        f"finishing with degree-capped Prim"
    )
    return _degree_capped_prim(graph, degree_bound)


# --- Relabeling ---


def relabel(graph: nx.Graph) -> Tuple[PowerTree, List[int]]:
    """
    Orients the tree away from its highest-degree node (lowest index on ties)
    and numbers nodes 1..n in breadth-first order.

    Returns the tree and `order`, where `order[k - 1]` is the graph node that
    received label k.
    """
    if graph.number_of_nodes() == 0:
        raise InvalidTreeError("Cannot relabel an empty graph")
    if not nx.is_tree(graph):
        raise InvalidTreeError("Relabeling needs a spanning tree")

    source = min(graph.nodes, key=lambda node: (-graph.degree(node), node))
    order = [source]
    parent_of = {source: None}
    for parent, child in nx.bfs_edges(graph, source, sort_neighbors=sorted):
        order.append(child)
        parent_of[child] = parent

    label = {node: k + 1 for k, node in enumerate(order)}
    parents: List[Optional[int]] = [None] * (len(order) + 1)
    for node in order:
        if parent_of[node] is not None:
            parents[label[node]] = label[parent_of[node]]
    return PowerTree.from_parent_list(parents), order


# --- Depth reduction ---


def _orientation(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Proper intersection test; touching at an endpoint does not count."""
    d1 = _orientation(q1, q2, p1)
    d2 = _orientation(q1, q2, p2)
    d3 = _orientation(p1, p2, q1)
    d4 = _orientation(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def _crosses_existing(
    parents: List[Optional[int]], coords: Sequence[Point], node: int, new_parent: int
) -> bool:
    a, b = coords[new_parent], coords[node]
    for child in range(2, len(parents)):
        parent = parents[child]
        if child == node:
            continue
        if {parent, child} & {new_parent, node}:
            continue
        if segments_cross(a, b, coords[parent], coords[child]):
            return True
    return False


def reduce_depth(
    tree: PowerTree,
    points: Sequence[GeoPoint],
    k: int,
    rng: np.random.Generator,
    attempts: int = 50,
) -> Tuple[PowerTree, int]:
    """
    Re-parents up to k distinct nodes to their grandparents.

    `points` is indexed by node label (index 0, the depot, is ignored). A
    move whose new arc would cross an existing arc is rejected and another
    node is drawn, at most `attempts` times per move. Returns the new tree
    and the number of moves applied.
    """
    if k <= 0:
        return tree, 0
    parents = list(tree.parents)
    coords = [(p.x, p.y) for p in points]
    moved = set()

    eligible_count = sum(
        1 for node in range(2, tree.n + 1) if parents[parents[node]] is not None
    )
    if k > eligible_count:
        log.warning(
            f"Requested {k} depth reductions but only {eligible_count} nodes have a grandparent"
        )
        k = eligible_count

    applied = 0
    for _ in range(k):
        for _attempt in range(attempts):
            eligible = [
                node
                for node in range(2, tree.n + 1)
                if node not in moved and parents[parents[node]] is not None
            ]
            if not eligible:
                break
            node = int(rng.choice(eligible))
            grandparent = parents[parents[node]]
            if _crosses_existing(parents, coords, node, grandparent):
                continue
            parents[node] = grandparent
            moved.add(node)
            applied += 1
            break

    if applied < k:
        log.warning(f"Depth reduction applied {applied} of {k} moves")
    return PowerTree.from_parent_list(parents), applied


def depth(tree: PowerTree) -> int:
    """Arcs on the longest source-to-leaf path."""
    return tree.depth()


# --- Whole instances ---


def generate_instance(config: GenerationConfig) -> Instance:
    """Runs the full generation pipeline from one seeded generator."""
    rng = np.random.default_rng(config.seed)
    raw = generate_points(config.region, config.nodes, rng, config.radial)

    if config.nodes == 1:
        tree, order = PowerTree.from_parent_list([None, None]), [0]
    else:
        graph = build_dmst(raw, config.degree_bound, config.max_rounds)
        tree, order = relabel(graph)

    ordered = [raw[i] for i in order]
    depot = compute_depot(ordered)
    points = [depot, *ordered]

    applied = 0
    if config.reduce:
        tree, applied = reduce_depth(tree, points, config.reduce, rng, config.crossing_attempts)

    instance = Instance(
        tree=tree,
        points=tuple(points),
        repair_time=config.repair_time,
        fault_prob=config.fault_prob,
        seed=config.seed,
        region=config.region,
        degree_bound=config.degree_bound,
        reduce_requested=config.reduce,
        reduce_applied=applied,
    )
    log.info(
        f"Generated instance: n={instance.n} depth={instance.depth} "
        f"shape={config.region.shape.value} seed={config.seed}"
    )
    return instance


def with_parameters(instance: Instance, repair_time: float, fault_prob: float) -> Instance:
    """Same network and geometry under another (s, p) pair."""
    return dataclasses.replace(instance, repair_time=repair_time, fault_prob=fault_prob)
