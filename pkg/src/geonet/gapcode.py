"""Two-level gap encoding of partitioned graphs.

Each cluster stores its sorted node IDs as ``[base, gap, gap, ...]`` and its
internal edges as pairs of positions into that sorted list. Edges that cross
clusters are grouped by cluster pair ``(p, q)`` with ``p < q`` and stored as
``(position in p, position in q)`` pairs. Position pairs are linearised to
``a * width + b``, sorted, and written as a first value followed by
successive differences, so every stored number is small.

Serialized layout, every number an unsigned LEB128 varint::

    "GGE1" | k | per cluster: count, [base, gaps...], m, [first, deltas...]
           | groups | per group: p, q, m, [first, deltas...]

An empty cluster is written as a bare ``0`` count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graphs import Graph
from .partition import Partition

MAGIC = b"GGE1"
FORMAT_VERSION = 1
MAX_VARINT_BYTES = 10
ADJ_MAGIC = b"ADJ1"
ADJ_HEADER_BYTES = 16

_EMPTY = np.zeros(0, np.int64)


class GapFormatError(ValueError):
    """Malformed serialized data or gap sequence."""


class VersionMismatchError(GapFormatError):
    pass


class TruncatedDataError(GapFormatError):
    pass


class VarintOverflowError(GapFormatError):
    pass


class PartitionMismatchError(ValueError):
    pass


class UpdateError(ValueError):
    code = "update_error"


class NodeExistsError(UpdateError):
    code = "node_exists"


class NodeMissingError(UpdateError):
    code = "node_missing"


class EdgeExistsError(UpdateError):
    code = "edge_exists"


class EdgeMissingError(UpdateError):
    code = "edge_missing"


class SelfLoopError(UpdateError):
    code = "self_loop"


class BadClusterError(UpdateError):
    code = "bad_cluster"


# -- varints -----------------------------------------------------------------

def encode_varints(values) -> bytes:
    """LEB128-encode a sequence of non-negative integers (vectorised)."""
    v = np.asarray(values, dtype=np.int64).reshape(-1)
    if len(v) == 0:
        return b""
    if v.min() < 0:
        raise ValueError("varints must be non-negative")
    v = v.astype(np.uint64)
    nbytes = np.ones(len(v), np.int64)
    for j in range(1, MAX_VARINT_BYTES):
        nbytes += v >= np.uint64(1 << (7 * j))
    starts = np.concatenate(([0], np.cumsum(nbytes)[:-1]))
    out = np.zeros(int(nbytes.sum()), np.uint8)
    for j in range(int(nbytes.max())):
        sel = nbytes > j
        chunk = (v[sel] >> np.uint64(7 * j)) & np.uint64(0x7F)
        more = (nbytes[sel] - 1 > j).astype(np.uint64) << np.uint64(7)
        out[starts[sel] + j] = (chunk | more).astype(np.uint8)
    return out.tobytes()


def encode_varint(value: int) -> bytes:
    return encode_varints([value])


def decode_varints(data: bytes) -> np.ndarray:
    """Decode a back-to-back varint stream into an int64 array."""
    b = np.frombuffer(data, dtype=np.uint8)
    if len(b) == 0:
        return _EMPTY.copy()
    ends = np.flatnonzero(b < 0x80)
    # an over-long run is an overflow even when the data also stops inside it
    bounds = np.concatenate(([-1], ends, [len(b) - 1]))
    if np.diff(bounds).max() > MAX_VARINT_BYTES:
        raise VarintOverflowError(f"varint longer than {MAX_VARINT_BYTES} bytes")
    if len(ends) == 0 or ends[-1] != len(b) - 1:
        raise TruncatedDataError("data ends inside a varint")
    starts = np.concatenate(([0], ends[:-1] + 1))
    lengths = ends - starts + 1
    long_ = lengths == MAX_VARINT_BYTES
    if np.any(b[ends[long_]] > 1):
        raise VarintOverflowError("varint exceeds 64 bits")
    out = np.zeros(len(ends), np.uint64)
    for j in range(int(lengths.max())):
        sel = lengths > j
        out[sel] |= (b[starts[sel] + j] & np.uint8(0x7F)).astype(np.uint64) << np.uint64(7 * j)
    if np.any(out > np.uint64(np.iinfo(np.int64).max)):
        raise VarintOverflowError("varint exceeds the signed 64-bit range")
    return out.astype(np.int64)


# -- gap sequences -----------------------------------------------------------

def encode_gaps(ids) -> np.ndarray:
    """``[base, v1 - v0, v2 - v1, ...]`` of a strictly increasing ID sequence."""
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    if len(ids) == 0:
        return _EMPTY.copy()
    gaps = np.diff(ids, prepend=0)
    if np.any(gaps[1:] <= 0):
        raise ValueError("IDs must be strictly increasing")
    return gaps


def decode_gaps(gaps) -> np.ndarray:
    """Prefix-sum a gap sequence back to IDs; every gap after the base must be >= 1."""
    gaps = np.asarray(gaps, dtype=np.int64).reshape(-1)
    if len(gaps) and gaps[0] < 0:
        raise GapFormatError(f"base ID must be non-negative, got {gaps[0]}")
    if np.any(gaps[1:] <= 0):
        bad = int(np.flatnonzero(gaps[1:] <= 0)[0]) + 1
        raise GapFormatError(f"gap {gaps[bad]} at index {bad} is not positive")
    return np.cumsum(gaps)


def inter_edge_gap(vi: int, vj: int) -> int:
    """``|vi - vj|`` for the endpoints of a cross-cluster edge."""
    if vi == vj:
        raise ValueError("inter-cluster edge endpoints must differ")
    return abs(int(vi) - int(vj))


def _delta(sorted_values: np.ndarray) -> np.ndarray:
    return np.diff(sorted_values, prepend=0) if len(sorted_values) else _EMPTY


def _undelta(deltas: np.ndarray, what: str) -> np.ndarray:
    if np.any(deltas[1:] <= 0):
        raise GapFormatError(f"{what}: edge deltas must be positive")
    return np.cumsum(deltas)


# -- in-memory encoding ------------------------------------------------------

class GapSubgraph(NamedTuple):
    cluster: int
    gaps: np.ndarray  # [base, gaps...]
    intra: np.ndarray  # (m, 2) positions into the sorted ID list, a < b

    @property
    def node_ids(self) -> np.ndarray:
        return decode_gaps(self.gaps)


class InterEdge(NamedTuple):
    p: int
    q: int
    vi: int  # endpoint in cluster p
    vj: int  # endpoint in cluster q
    gap: int


@dataclass(frozen=True)
class UpdateStats:
    """What an update rewrote: subgraph blocks (``clusters``) and cross-cluster groups."""

    op: str
    clusters: tuple[int, ...]
    groups: tuple[tuple[int, int], ...]

    @property
    def clusters_reencoded(self) -> int:
        return len(self.clusters)


class GapEncodedGraph:
    """Cluster ID lists plus linearised edge positions, with per-block byte caches.

    ``ids[c]`` holds cluster ``c``'s sorted node IDs, ``intra[c]`` the sorted
    values ``a * |V_c| + b`` of its internal edges, and ``groups[(p, q)]`` the
    sorted values ``a * |V_q| + b`` of edges between ``p`` and ``q``.
    Update methods mutate in place and keep every untouched block's cached
    bytes.
    """

    version = FORMAT_VERSION

    def __init__(self, ids: list[np.ndarray], intra: list[np.ndarray], groups: dict[tuple[int, int], np.ndarray]):
        self.ids = ids
        self.intra = intra
        self.groups = dict(sorted(groups.items()))
        self._cluster_bytes: list[bytes | None] = [None] * len(ids)
        self._group_bytes: dict[tuple[int, int], bytes] = {}
        self._where: dict[int, int] | None = None

    # -- views --

    @property
    def k(self) -> int:
        return len(self.ids)

    @property
    def n_nodes(self) -> int:
        return int(sum(len(x) for x in self.ids))

    @property
    def n_inter(self) -> int:
        return int(sum(len(x) for x in self.groups.values()))

    def _lookup(self) -> dict[int, int]:
        if self._where is None:
            self._where = {int(v): c for c, ids in enumerate(self.ids) for v in ids.tolist()}
        return self._where

    @property
    def partition(self) -> Partition:
        nodes = np.concatenate(self.ids) if self.ids else _EMPTY
        labels = np.repeat(np.arange(self.k), [len(x) for x in self.ids])
        return Partition(nodes, labels, self.k, allow_empty=True)

    def subgraphs(self) -> list[GapSubgraph]:
        out = []
        for c, (ids, lin) in enumerate(zip(self.ids, self.intra)):
            s = len(ids)
            out.append(GapSubgraph(c, encode_gaps(ids), np.column_stack([lin // s, lin % s]) if s else np.zeros((0, 2), np.int64)))
        return out

    def inter_edges(self) -> list[InterEdge]:
        out = []
        for (p, q), lin in self.groups.items():
            width = len(self.ids[q])
            for vi, vj in zip(self.ids[p][lin // width].tolist(), self.ids[q][lin % width].tolist()):
                out.append(InterEdge(p, q, vi, vj, inter_edge_gap(vi, vj)))
        return out

    def __eq__(self, other):
        if not isinstance(other, GapEncodedGraph):
            return NotImplemented
        return (self.k == other.k and self.groups.keys() == other.groups.keys()
                and all(np.array_equal(a, b) for a, b in zip(self.ids, other.ids))
                and all(np.array_equal(a, b) for a, b in zip(self.intra, other.intra))
                and all(np.array_equal(v, other.groups[key]) for key, v in self.groups.items()))

    def __repr__(self):
        return f"GapEncodedGraph(k={self.k}, nodes={self.n_nodes}, inter={self.n_inter})"

    # -- bytes --

    def cluster_block(self, c: int) -> bytes:
        if self._cluster_bytes[c] is None:
            self._cluster_bytes[c] = _cluster_block(self.ids[c], self.intra[c])
        return self._cluster_bytes[c]

    def group_block(self, key: tuple[int, int]) -> bytes:
        if key not in self._group_bytes:
            self._group_bytes[key] = _group_block(key, self.groups[key])
        return self._group_bytes[key]

    def serialize(self) -> bytes:
        return serialize(self)

    def _invalidate(self, clusters=(), groups=()):
        for c in clusters:
            self._cluster_bytes[c] = None
        for key in groups:
            self._group_bytes.pop(key, None)

    # -- dynamic updates --

    def _groups_of(self, c: int) -> list[tuple[int, int]]:
        return [key for key in self.groups if c in key]

    def add_node(self, node: int, cluster: int) -> UpdateStats:
        """Insert an isolated node into ``cluster`` (``cluster == k`` opens a new one)."""
        where = self._lookup()
        node = int(node)
        if node < 0:
            raise BadClusterError(f"node IDs must be non-negative, got {node}")
        if node in where:
            raise NodeExistsError(f"node {node} already present")
        if not 0 <= cluster <= self.k:
            raise BadClusterError(f"cluster {cluster} out of range [0, {self.k}]")
        if cluster == self.k:
            self.ids.append(_EMPTY.copy())
            self.intra.append(_EMPTY.copy())
            self._cluster_bytes.append(None)
        ids = self.ids[cluster]
        pos = int(np.searchsorted(ids, node))
        old = len(ids)
        a, b = np.divmod(self.intra[cluster], max(old, 1))
        a, b = a + (a >= pos), b + (b >= pos)
        self.ids[cluster] = np.insert(ids, pos, node)
        self.intra[cluster] = a * (old + 1) + b
        touched = self._groups_of(cluster)
        for p, q in touched:
            a, b = np.divmod(self.groups[(p, q)], len(self.ids[q]) - (q == cluster))
            if p == cluster:
                a = a + (a >= pos)
            else:
                b = b + (b >= pos)
            self.groups[(p, q)] = a * len(self.ids[q]) + b
        where[node] = cluster
        self._invalidate([cluster], touched)
        return UpdateStats("add_node", (cluster,), tuple(touched))

    def remove_node(self, node: int) -> UpdateStats:
        """Delete a node and all its edges; its cluster may become empty."""
        where = self._lookup()
        node = int(node)
        if node not in where:
            raise NodeMissingError(f"node {node} not present")
        c = where[node]
        ids = self.ids[c]
        pos = int(np.searchsorted(ids, node))
        old = len(ids)
        a, b = np.divmod(self.intra[c], old)
        keep = (a != pos) & (b != pos)
        a, b = a[keep], b[keep]
        a, b = a - (a > pos), b - (b > pos)
        self.ids[c] = np.delete(ids, pos)
        self.intra[c] = a * (old - 1) + b
        touched = self._groups_of(c)
        for p, q in touched:
            width = len(self.ids[q]) + (q == c)
            a, b = np.divmod(self.groups[(p, q)], width)
            if p == c:
                keep = a != pos
                a, b = a[keep], b[keep]
                a = a - (a > pos)
            else:
                keep = b != pos
                a, b = a[keep], b[keep]
                b = b - (b > pos)
            if len(a):
                self.groups[(p, q)] = a * len(self.ids[q]) + b
            else:
                del self.groups[(p, q)]
        del where[node]
        self._invalidate([c], touched)
        return UpdateStats("remove_node", (c,), tuple(touched))

    def _edge_slot(self, u: int, v: int):
        where = self._lookup()
        u, v = int(u), int(v)
        if u == v:
            raise SelfLoopError(f"self-loop on node {u}")
        for x in (u, v):
            if x not in where:
                raise NodeMissingError(f"node {x} not present")
        cu, cv = where[u], where[v]
        if cu > cv:
            u, v, cu, cv = v, u, cv, cu
        a = int(np.searchsorted(self.ids[cu], u))
        b = int(np.searchsorted(self.ids[cv], v))
        if cu == cv:
            a, b = min(a, b), max(a, b)
            return None, cu, a * len(self.ids[cu]) + b
        return (cu, cv), None, a * len(self.ids[cv]) + b

    def _edge_array(self, key, c):
        return self.intra[c] if key is None else self.groups.get(key, _EMPTY)

    def _set_edge_array(self, key, c, arr):
        if key is None:
            self.intra[c] = arr
        elif len(arr):
            self.groups[key] = arr
            self.groups = dict(sorted(self.groups.items()))
        else:
            del self.groups[key]

    def add_edge(self, u: int, v: int) -> UpdateStats:
        key, c, lin = self._edge_slot(u, v)
        arr = self._edge_array(key, c)
        i = int(np.searchsorted(arr, lin))
        if i < len(arr) and arr[i] == lin:
            raise EdgeExistsError(f"edge ({u}, {v}) already present")
        self._set_edge_array(key, c, np.insert(arr, i, lin))
        return self._edge_stats("add_edge", key, c)

    def remove_edge(self, u: int, v: int) -> UpdateStats:
        key, c, lin = self._edge_slot(u, v)
        arr = self._edge_array(key, c)
        i = int(np.searchsorted(arr, lin))
        if i >= len(arr) or arr[i] != lin:
            raise EdgeMissingError(f"edge ({u}, {v}) not present")
        self._set_edge_array(key, c, np.delete(arr, i))
        return self._edge_stats("remove_edge", key, c)

    def _edge_stats(self, op, key, c) -> UpdateStats:
        if key is None:
            self._invalidate([c])
            return UpdateStats(op, (c,), ())
        self._invalidate((), [key])
        return UpdateStats(op, key, (key,))


def _cluster_block(ids: np.ndarray, lin: np.ndarray) -> bytes:
    if len(ids) == 0:
        return encode_varints([0])
    return encode_varints(np.concatenate(([len(ids)], encode_gaps(ids), [len(lin)], _delta(lin))))


def _group_block(key: tuple[int, int], lin: np.ndarray) -> bytes:
    return encode_varints(np.concatenate((key, [len(lin)], _delta(lin))))


# -- encode / decode ---------------------------------------------------------

def _split(g: Graph, p: Partition):
    """Per-cluster IDs, linearised intra edges, and grouped inter edges."""
    if not np.array_equal(p.nodes, g.nodes):
        raise PartitionMismatchError("partition must cover exactly the graph's nodes")
    k = p.k
    labels = p.labels
    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=k)
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    pos = np.empty(g.n, np.int64)
    pos[order] = np.arange(g.n) - np.repeat(bounds[:-1], sizes)
    ids = [g.nodes[order[bounds[c]:bounds[c + 1]]] for c in range(k)]
    if g.m == 0:
        return ids, [_EMPTY.copy() for _ in range(k)], {}
    ei = np.searchsorted(g.nodes, g.edges)
    lu, lv = labels[ei[:, 0]], labels[ei[:, 1]]
    pu, pv = pos[ei[:, 0]], pos[ei[:, 1]]
    same = lu == lv
    # canonical edges have u < v, so positions inside one cluster already satisfy a < b
    c_in = lu[same]
    lin_in = pu[same] * sizes[c_in] + pv[same]
    o = np.lexsort((lin_in, c_in))
    c_in, lin_in = c_in[o], lin_in[o]
    cb = np.searchsorted(c_in, np.arange(k + 1))
    intra = [lin_in[cb[c]:cb[c + 1]] for c in range(k)]
    swap = lu > lv
    lp = np.where(swap, lv, lu)[~same]
    lq = np.where(swap, lu, lv)[~same]
    a = np.where(swap, pv, pu)[~same]
    b = np.where(swap, pu, pv)[~same]
    lin_x = a * sizes[lq] + b
    gkey = lp * k + lq
    o = np.lexsort((lin_x, gkey))
    gkey, lin_x = gkey[o], lin_x[o]
    starts = np.flatnonzero(np.diff(gkey, prepend=-1))
    ends = np.append(starts[1:], len(gkey))
    groups = {(int(key // k), int(key % k)): lin_x[s:e] for key, s, e in zip(gkey[starts].tolist(), starts, ends)}
    return ids, intra, groups


def encode(g: Graph, p: Partition) -> GapEncodedGraph:
    """Gap-encode ``g`` under partition ``p``; the result is deterministic."""
    return GapEncodedGraph(*_split(g, p))


def encode_parallel(g: Graph, p: Partition, workers: int = 1) -> GapEncodedGraph:
    """Encode with per-cluster and per-group byte blocks built on a thread pool.

    Blocks are merged back in cluster and group order, so the result
    serializes identically to :func:`encode`.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    enc = GapEncodedGraph(*_split(g, p))
    if workers == 1:
        enc.serialize()
        return enc
    keys = list(enc.groups)
    jobs = [("c", c) for c in range(enc.k)] + [("g", key) for key in keys]
    batches = [jobs[i::workers] for i in range(workers)]

    def run(batch):
        out = []
        for kind, ref in batch:
            if kind == "c":
                out.append((kind, ref, _cluster_block(enc.ids[ref], enc.intra[ref])))
            else:
                out.append((kind, ref, _group_block(ref, enc.groups[ref])))
        return out

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, batches))
    for batch in results:
        for kind, ref, blob in batch:
            if kind == "c":
                enc._cluster_bytes[ref] = blob
            else:
                enc._group_bytes[ref] = blob
    return enc


def decode(e: GapEncodedGraph) -> Graph:
    """Rebuild the plain graph from an encoding."""
    nodes = np.sort(np.concatenate(e.ids)) if e.k else _EMPTY
    for ids in e.ids:
        decode_gaps(np.diff(ids, prepend=0))
    parts = []
    for ids, lin in zip(e.ids, e.intra):
        s = len(ids)
        if len(lin):
            parts.append(np.column_stack([ids[lin // s], ids[lin % s]]))
    for (p, q), lin in e.groups.items():
        width = len(e.ids[q])
        u, v = e.ids[p][lin // width], e.ids[q][lin % width]
        parts.append(np.column_stack([np.minimum(u, v), np.maximum(u, v)]))
    edges = np.vstack(parts) if parts else np.zeros((0, 2), np.int64)
    if len(edges):
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    return Graph(nodes, edges)


# -- serialization -----------------------------------------------------------

def serialize(e: GapEncodedGraph) -> bytes:
    parts = [MAGIC, encode_varint(e.k)]
    parts.extend(e.cluster_block(c) for c in range(e.k))
    parts.append(encode_varint(len(e.groups)))
    parts.extend(e.group_block(key) for key in e.groups)
    return b"".join(parts)


class _Reader:
    def __init__(self, values: np.ndarray):
        self.values = values
        self.i = 0

    def take(self, count: int = 1) -> np.ndarray:
        if count < 0 or self.i + count > len(self.values):
            raise TruncatedDataError("data ends before the structure is complete")
        out = self.values[self.i:self.i + count]
        self.i += count
        return out

    def one(self) -> int:
        return int(self.take(1)[0])


def deserialize(data: bytes) -> GapEncodedGraph:
    data = bytes(data)
    if len(data) < len(MAGIC):
        raise TruncatedDataError("data shorter than the 4-byte header")
    if data[:3] == MAGIC[:3] and data[:4] != MAGIC:
        raise VersionMismatchError(f"unsupported format version {data[3:4]!r}, expected {MAGIC[3:4]!r}")
    if data[:4] != MAGIC:
        raise GapFormatError(f"bad magic {data[:4]!r}")
    r = _Reader(decode_varints(data[4:]))
    k = r.one()
    ids, intra = [], []
    for c in range(k):
        count = r.one()
        if count == 0:
            ids.append(_EMPTY.copy())
            intra.append(_EMPTY.copy())
            continue
        ids.append(decode_gaps(r.take(count)))
        lin = _undelta(r.take(r.one()), f"cluster {c}")
        if len(lin) and (lin[0] < 0 or lin[-1] >= count * count or np.any(lin // count >= lin % count)):
            raise GapFormatError(f"cluster {c}: intra-edge position out of range")
        intra.append(lin)
    groups = {}
    prev = None
    for _ in range(r.one()):
        p, q, m = r.one(), r.one(), r.one()
        if not (0 <= p < q < k) or (prev is not None and (p, q) <= prev) or m == 0:
            raise GapFormatError(f"bad inter-edge group ({p}, {q})")
        lin = _undelta(r.take(m), f"group ({p}, {q})")
        if lin[0] < 0 or lin[-1] >= len(ids[p]) * len(ids[q]):
            raise GapFormatError(f"group ({p}, {q}): position out of range")
        groups[(p, q)] = lin
        prev = (p, q)
    if r.i != len(r.values):
        raise GapFormatError(f"{len(r.values) - r.i} trailing value(s) after the encoding")
    all_ids = np.concatenate(ids) if ids else _EMPTY
    if len(np.unique(all_ids)) != len(all_ids):
        raise GapFormatError("a node ID appears in more than one cluster")
    return GapEncodedGraph(ids, intra, groups)


# -- dense baseline and cost model -------------------------------------------

def adjacency_bytes(n: int) -> int:
    """Size of a bit-packed upper-triangle adjacency matrix plus its header."""
    return math.ceil(n * (n - 1) // 2 / 8) + ADJ_HEADER_BYTES


def adjacency_encode(g: Graph) -> bytes:
    """Bit-packed strict upper triangle (row-major) after a 16-byte header."""
    n = g.n
    bits = np.zeros(n * (n - 1) // 2, np.uint8)
    if g.m:
        i, j = np.searchsorted(g.nodes, g.edges).T
        bits[i * n - i * (i + 1) // 2 + (j - i - 1)] = 1
    header = ADJ_MAGIC + np.array([n], "<u8").tobytes() + np.array([g.m], "<u4").tobytes()
    return header + np.packbits(bits).tobytes()


def ideal_parallel_time(total_time: float, k: int) -> float:
    """Idealised ``T_total / k`` speed-up model; reported, never measured."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return total_time / k


# -- functional update API (in place; returns the encoding for chaining) -----

def add_node(e: GapEncodedGraph, node: int, cluster: int) -> tuple[GapEncodedGraph, UpdateStats]:
    return e, e.add_node(node, cluster)


def remove_node(e: GapEncodedGraph, node: int) -> tuple[GapEncodedGraph, UpdateStats]:
    return e, e.remove_node(node)


def add_edge(e: GapEncodedGraph, u: int, v: int) -> tuple[GapEncodedGraph, UpdateStats]:
    return e, e.add_edge(u, v)


def remove_edge(e: GapEncodedGraph, u: int, v: int) -> tuple[GapEncodedGraph, UpdateStats]:
    return e, e.remove_edge(u, v)
