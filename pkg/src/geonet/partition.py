"""Disjoint node partitions: deterministic Louvain, contiguous ID ranges, and edge classification."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .graphs import Graph

MIN_GAIN = 1e-9


class Partition:
    """Assignment of each node ID to one of ``k`` clusters.

    ``nodes`` is sorted; ``labels[i]`` is the cluster of ``nodes[i]``.
    Clusters may only be empty when ``allow_empty`` is set, which the
    dynamic-update path uses to keep cluster indices stable.
    """

    def __init__(self, nodes, labels, k: int | None = None, allow_empty: bool = False):
        nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if len(nodes) != len(labels):
            raise ValueError("nodes and labels differ in length")
        order = np.argsort(nodes, kind="stable")
        nodes, labels = nodes[order], labels[order]
        if len(nodes) > 1 and np.any(np.diff(nodes) == 0):
            raise ValueError("a node appears more than once")
        self.k = int(labels.max()) + 1 if k is None and len(labels) else (k or 0)
        if len(labels) and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"cluster labels must lie in [0, {self.k})")
        self.nodes = nodes
        self.labels = labels
        if not allow_empty:
            sizes = np.bincount(labels, minlength=self.k)
            if np.any(sizes == 0):
                raise ValueError(f"cluster(s) {np.flatnonzero(sizes == 0).tolist()} are empty")

    @classmethod
    def from_dict(cls, assignment: dict[int, int], k: int | None = None, allow_empty: bool = False) -> "Partition":
        return cls(list(assignment.keys()), list(assignment.values()), k, allow_empty)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.nodes.tolist(), self.labels.tolist()))

    def cluster_of(self, node: int) -> int:
        i = np.searchsorted(self.nodes, node)
        if i >= len(self.nodes) or self.nodes[i] != node:
            raise KeyError(node)
        return int(self.labels[i])

    def clusters(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.searchsorted(self.labels[order], np.arange(self.k + 1))
        return [self.nodes[order[bounds[c]:bounds[c + 1]]] for c in range(self.k)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def labels_for(self, ids) -> np.ndarray:
        """Cluster labels for an array of node IDs; raises if any ID is not covered."""
        ids = np.asarray(ids, dtype=np.int64)
        pos = np.searchsorted(self.nodes, ids)
        pos_c = np.minimum(pos, max(len(self.nodes) - 1, 0))
        if len(self.nodes) == 0 or np.any(self.nodes[pos_c] != ids):
            missing = ids[(pos >= len(self.nodes)) | (self.nodes[pos_c] != ids)] if len(self.nodes) else ids
            raise ValueError(f"node {int(missing.ravel()[0])} is not covered by the partition")
        return self.labels[pos_c]

    def __eq__(self, other):
        return (isinstance(other, Partition) and self.k == other.k
                and np.array_equal(self.nodes, other.nodes) and np.array_equal(self.labels, other.labels))

    def __repr__(self):
        return f"Partition(k={self.k}, n={len(self.nodes)})"


def modularity(g: Graph, p: Partition, resolution: float = 1.0) -> float:
    """Newman modularity of an undirected, unweighted partition (0 for an edgeless graph)."""
    if g.m == 0:
        return 0.0
    lab = p.labels_for(g.edges)
    intra = np.bincount(lab[lab[:, 0] == lab[:, 1], 0], minlength=p.k)
    deg = np.bincount(p.labels_for(g.nodes), weights=g.degrees(), minlength=p.k)
    m = g.m
    return float(np.sum(intra / m - resolution * (deg / (2.0 * m)) ** 2))


def _one_level(adj: list[dict[int, float]], degree: list[float], m2: float, resolution: float):
    n = len(adj)
    comm = list(range(n))
    tot = list(degree)
    improved = False
    moved = True
    while moved:
        moved = False
        for i in range(n):
            ci = comm[i]
            ki = degree[i]
            links: dict[int, float] = defaultdict(float)
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] += w
            tot[ci] -= ki
            stay = links.get(ci, 0.0) - resolution * tot[ci] * ki / m2
            best, best_gain = ci, stay
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * ki / m2
                if gain > best_gain or (gain == best_gain and c < best):
                    best, best_gain = c, gain
            # gains are in units of m2/2 modularity; only strict improvements move
            if best != ci and (best_gain - stay) * 2.0 / m2 <= MIN_GAIN:
                best = ci
            tot[best] += ki
            if best != ci:
                comm[i] = best
                moved = improved = True
    return comm, improved


def partition_louvain(g: Graph, rng=None, resolution: float = 1.0, shuffle: bool = False) -> Partition:
    """Greedy modularity maximisation with Louvain aggregation.

    Nodes are swept in ascending-ID order (ties go to the lowest community
    index), so the result is deterministic. ``shuffle=True`` randomises the
    initial node order with ``rng`` instead.
    """
    if g.n == 0:
        raise ValueError("cannot partition an empty graph")
    order = np.arange(g.n)
    if shuffle:
        if rng is None:
            raise ValueError("shuffle needs an rng")
        order = rng.permutation(g.n)
    position = np.empty(g.n, np.int64)
    position[order] = np.arange(g.n)
    idx = position[np.searchsorted(g.nodes, g.edges)]
    adj: list[dict[int, float]] = [dict() for _ in range(g.n)]
    for u, v in idx.tolist():
        adj[u][v] = adj[u].get(v, 0.0) + 1.0
        adj[v][u] = adj[v].get(u, 0.0) + 1.0
    membership = np.arange(g.n)  # original index (in sweep order) -> current super-node
    m2 = 2.0 * g.m
    if m2 > 0:
        while True:
            # rows hold ordered-pair weights, so a super-node's self entry already counts internal edges twice
            degree = [sum(row.values()) for row in adj]
            comm, improved = _one_level(adj, degree, m2, resolution)
            if not improved:
                break
            relabel: dict[int, int] = {}
            for c in comm:
                relabel.setdefault(c, len(relabel))
            comm = [relabel[c] for c in comm]
            membership = np.asarray(comm)[membership]
            new_adj: list[dict[int, float]] = [dict() for _ in range(len(relabel))]
            for i, row in enumerate(adj):
                ci = comm[i]
                for j, w in row.items():
                    cj = comm[j]
                    new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
            adj = new_adj
    labels_in_order = membership[position]
    return _canonical(g.nodes, labels_in_order)


def _canonical(nodes: np.ndarray, labels: np.ndarray) -> Partition:
    """Renumber clusters by their smallest member ID."""
    relabel: dict[int, int] = {}
    for c in labels.tolist():
        relabel.setdefault(c, len(relabel))
    return Partition(nodes, [relabel[c] for c in labels.tolist()], len(relabel))


def partition_range(g: Graph, k: int) -> Partition:
    """Split the sorted node IDs into ``k`` contiguous, near-equal chunks."""
    n = g.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    base, extra = divmod(n, k)
    sizes = np.full(k, base)
    sizes[:extra] += 1
    return Partition(g.nodes, np.repeat(np.arange(k), sizes), k)


def default_range_k(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))


def partition_by_strategy(g: Graph, strategy: str, rng=None) -> Partition:
    """``louvain``, ``range:<k>``, or bare ``range`` for ``ceil(sqrt(n))`` chunks."""
    name, _, arg = strategy.partition(":")
    if name == "louvain" and not arg:
        return partition_louvain(g, rng)
    if name == "range":
        k = int(arg) if arg else default_range_k(g.n)
        return partition_range(g, k)
    raise ValueError(f"unknown partition strategy {strategy!r}")


def edge_split(g: Graph, p: Partition) -> tuple[list[np.ndarray], np.ndarray]:
    """Classify edges as intra-cluster (one array per cluster) or inter-cluster."""
    lab = p.labels_for(g.nodes)  # validates coverage of every node
    del lab
    if g.m == 0:
        return [np.zeros((0, 2), np.int64) for _ in range(p.k)], np.zeros((0, 2), np.int64)
    el = p.labels_for(g.edges)
    same = el[:, 0] == el[:, 1]
    intra_edges, intra_lab = g.edges[same], el[same, 0]
    intra = [intra_edges[intra_lab == c] for c in range(p.k)]
    return intra, g.edges[~same]
