"""Undirected simple graphs: storage, random generators, edge-list files and metrics."""

from __future__ import annotations

import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .numkit import make_rng


class EdgeListError(ValueError):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class Graph:
    """Sorted unique node IDs plus canonical ``(u, v)`` edges with ``u < v``, sorted lexicographically."""

    __slots__ = ("nodes", "edges", "_adj")

    def __init__(self, nodes, edges=None):
        nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
        edges = np.zeros((0, 2), np.int64) if edges is None else np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(nodes) and (nodes.min() < 0 or np.any(np.diff(nodes) <= 0)):
            raise ValueError("nodes must be non-negative, sorted and unique")
        if len(edges):
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must be stored as (u, v) with u < v (no self-loops)")
            keys = edges[:, 0] * (int(edges.max()) + 1) + edges[:, 1]
            if np.any(np.diff(keys) <= 0):
                raise ValueError("edges must be sorted and free of duplicates")
            if not np.all(np.isin(edges.ravel(), nodes)):
                raise ValueError("edge endpoint missing from node set")
        self.nodes = nodes
        self.edges = edges
        self._adj = None

    @classmethod
    def from_edges(cls, edges=(), nodes=()) -> "Graph":
        """Canonicalise arbitrary pairs: orient ``u < v``, drop self-loops and duplicates."""
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64).reshape(-1, 2)
        e = e[e[:, 0] != e[:, 1]]
        e = np.sort(e, axis=1)
        if len(e):
            e = np.unique(e, axis=0)
        all_nodes = np.union1d(np.asarray(list(nodes), dtype=np.int64), e.ravel())
        return cls(all_nodes, e)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def adjacency(self) -> dict[int, set[int]]:
        if self._adj is None:
            adj = {int(v): set() for v in self.nodes}
            for u, v in self.edges.tolist():
                adj[u].add(v)
                adj[v].add(u)
            self._adj = adj
        return self._adj

    def degrees(self) -> np.ndarray:
        pos = np.searchsorted(self.nodes, self.edges.ravel())
        return np.bincount(pos, minlength=self.n)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(self.edges, other.edges)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


# -- generators --------------------------------------------------------------

def gen_er(n: int, p: float, rng=None) -> Graph:
    """G(n, p): every unordered pair joins independently with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = rng if rng is not None else make_rng(0)
    rows = []
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p)
        if len(hits):
            rows.append(np.column_stack([np.full(len(hits), u), hits + u + 1]))
    edges = np.vstack(rows) if rows else np.zeros((0, 2), np.int64)
    return Graph(np.arange(n), edges)


def gen_ws(n: int, k_ring: int, beta: float, rng=None) -> Graph:
    """Watts-Strogatz: ring lattice of ``k_ring`` neighbours with each edge rewired w.p. ``beta``."""
    if k_ring % 2 or k_ring < 0 or k_ring >= n:
        raise ValueError(f"k_ring must be even and < n, got k_ring={k_ring}, n={n}")
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    rng = rng if rng is not None else make_rng(0)
    adj = {u: set() for u in range(n)}
    for j in range(1, k_ring // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k_ring // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adj[u] or rng.random() >= beta:
                continue
            if len(adj[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return Graph.from_edges(edges, range(n))


def gen_ba(n: int, m: int, rng=None) -> Graph:
    """Barabasi-Albert: an ``m``-clique seed, then each new node attaches to ``m`` distinct nodes by degree."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = rng if rng is not None else make_rng(0)
    edges = [(u, v) for u in range(m) for v in range(u + 1, m)]
    # each node appears once per incident edge end, so uniform picks are degree-weighted
    ends = [x for e in edges for x in e]
    for new in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            if ends:
                targets.add(ends[int(rng.integers(len(ends)))])
            else:
                targets.add(int(rng.integers(new)))
        for t in sorted(targets):
            edges.append((t, new))
            ends.extend((t, new))
    return Graph.from_edges(edges, range(n))


# -- edge-list files ---------------------------------------------------------

def load_edge_list(path) -> Graph:
    """Read ``u v`` lines; ``#`` lines are comments and a lone ID declares an isolated node."""
    edges, nodes = [], []
    self_loops = 0
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) > 2:
                raise EdgeListError(path, line_no, f"expected 'u v', got {line!r}")
            try:
                ids = [int(t) for t in tokens]
            except ValueError:
                raise EdgeListError(path, line_no, f"non-integer node ID in {line!r}") from None
            if min(ids) < 0:
                raise EdgeListError(path, line_no, "node IDs must be non-negative")
            if len(ids) == 1:
                nodes.append(ids[0])
            elif ids[0] == ids[1]:
                self_loops += 1
                nodes.append(ids[0])
            else:
                edges.append(ids)
    if self_loops:
        warnings.warn(f"{path}: dropped {self_loops} self-loop(s)", stacklevel=2)
    return Graph.from_edges(edges, nodes)


def save_edge_list(g: Graph, path) -> None:
    degrees = g.degrees()
    with open(Path(path), "w") as f:
        f.write(f"# nodes {g.n} edges {g.m}\n")
        for v in g.nodes[degrees == 0].tolist():
            f.write(f"{v}\n")
        for u, v in g.edges.tolist():
            f.write(f"{u} {v}\n")


# -- metrics -----------------------------------------------------------------

def local_clustering(g: Graph) -> dict[int, float]:
    adj = g.adjacency()
    out = {}
    for u, nbrs in adj.items():
        k = len(nbrs)
        if k < 2:
            out[u] = 0.0
            continue
        links = sum(len(adj[v] & nbrs) for v in nbrs) // 2
        out[u] = 2.0 * links / (k * (k - 1))
    return out


def clustering_coefficient(g: Graph) -> float:
    """Mean local clustering; nodes of degree below two count as zero.

    Summed in exact rational arithmetic, so the result is the correctly
    rounded mean.
    """
    if g.n == 0:
        raise ValueError("clustering coefficient of an empty graph is undefined")
    adj = g.adjacency()
    total = Fraction(0)
    for nbrs in adj.values():
        k = len(nbrs)
        if k >= 2:
            links = sum(len(adj[v] & nbrs) for v in nbrs) // 2
            total += Fraction(2 * links, k * (k - 1))
    return float(total / g.n)


def path_length_summary(g: Graph, chunk: int = 512) -> tuple[float, float]:
    """Mean BFS distance over reachable ordered pairs, and the fraction of pairs reachable."""
    n = g.n
    if n < 2:
        raise ValueError("average path length needs at least two nodes")
    if g.m == 0:
        raise ValueError("no reachable pairs")
    idx = np.searchsorted(g.nodes, g.edges)
    a = csr_matrix((np.ones(g.m), (idx[:, 0], idx[:, 1])), shape=(n, n))
    total, pairs = 0, 0
    for lo in range(0, n, chunk):
        d = shortest_path(a, directed=False, unweighted=True, indices=np.arange(lo, min(lo + chunk, n)))
        finite = np.isfinite(d) & (d > 0)
        total += int(d[finite].sum())
        pairs += int(finite.sum())
    if pairs == 0:
        raise ValueError("no reachable pairs")
    return total / pairs, pairs / (n * (n - 1))


def average_path_length(g: Graph) -> float:
    return path_length_summary(g)[0]
