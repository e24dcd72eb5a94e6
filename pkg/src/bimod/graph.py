"""Sparse graph storage and partition bookkeeping.

Three graph flavours live here:

* ``BipartiteGraph`` -- the document-feature graph. Vertices are numbered
  documents first (0 .. n_docs-1), then features; edges have unit weight.
* ``SimpleGraph`` -- a small weighted unipartite graph, used for validating
  the classical modularity objective.
* ``AggregatedGraph`` -- the quotient of a ``BipartiteGraph`` by a base
  partition. Blocks carry their two side-degree sums separately so that the
  bipartite objective stays exact even though a block may mix sides.

``Partition`` stores a dense cluster-id array together with the per-cluster
aggregates (internal edge weight, doc-side degree sum, feature-side degree
sum, vertex count) that the objective and the move gains are computed from.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DataError

__all__ = [
    "GraphView",
    "BipartiteGraph",
    "SimpleGraph",
    "AggregatedGraph",
    "Partition",
    "aggregate",
    "canonical_labels",
    "canonicalize",
    "export_partition_tsv",
    "partition_summary",
]


@dataclass(frozen=True)
class GraphView:
    """Flat arrays consumed by the descent kernels.

    ``d1``/``d2`` give each vertex's doc-side and feature-side degree mass
    (for a base vertex one of the two is zero); ``selfw`` is the weight of
    edges internal to the vertex (nonzero only for aggregated blocks).
    """

    indptr: np.ndarray   # int64, len n+1
    indices: np.ndarray  # int32, len 2*L
    weights: np.ndarray  # float64, len 2*L
    d1: np.ndarray       # float64, len n
    d2: np.ndarray       # float64, len n
    selfw: np.ndarray    # float64, len n
    L: float

    @property
    def n_vertices(self) -> int:
        return len(self.indptr) - 1


def _symmetric_csr(n, rows, cols, data):
    """Build a sorted symmetric CSR adjacency from one direction of edges."""
    m = sp.coo_matrix(
        (np.concatenate([data, data]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    ).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


class BipartiteGraph:
    """Immutable sparse document-feature graph with unit edge weights."""

    def __init__(self, n_docs, n_features, indptr, indices, doc_labels, feature_labels):
        self.n_docs = int(n_docs)
        self.n_features = int(n_features)
        self.indptr = indptr
        self.indices = indices
        self.degree = np.diff(indptr).astype(np.int64)
        self.L = int(indices.shape[0] // 2)
        self.labels = list(doc_labels) + list(feature_labels)
        self._doc_index = None
        self._feature_index = None
        self._view = None

    @property
    def n_vertices(self) -> int:
        return self.n_docs + self.n_features

    def is_doc(self, v: int) -> bool:
        return v < self.n_docs

    @property
    def doc_index(self):
        """doc_id -> vertex id."""
        if self._doc_index is None:
            self._doc_index = {self.labels[v]: v for v in range(self.n_docs)}
        return self._doc_index

    @property
    def feature_index(self):
        """feature label -> vertex id (first occurrence wins on collisions)."""
        if self._feature_index is None:
            idx = {}
            for v in range(self.n_docs, self.n_vertices):
                idx.setdefault(self.labels[v], v)
            self._feature_index = idx
        return self._feature_index

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @classmethod
    def from_edges(cls, n_docs, n_features, doc_ids, feat_ids, doc_labels=None, feature_labels=None):
        """Build from parallel arrays of (document index, feature index) pairs.

        Duplicate pairs collapse to a single unit edge. Feature indices are
        local (0 .. n_features-1) and are shifted past the document block.
        """
        doc_ids = np.asarray(doc_ids, dtype=np.int64)
        feat_ids = np.asarray(feat_ids, dtype=np.int64)
        if doc_ids.size:
            if doc_ids.min() < 0 or doc_ids.max() >= n_docs:
                raise DataError("document index out of range")
            if feat_ids.min() < 0 or feat_ids.max() >= n_features:
                raise DataError("feature index out of range")
        pairs = np.unique(np.stack([doc_ids, feat_ids + n_docs], axis=1), axis=0)
        n = n_docs + n_features
        m = _symmetric_csr(n, pairs[:, 0], pairs[:, 1], np.ones(len(pairs)))
        if doc_labels is None:
            doc_labels = [f"d{i}" for i in range(n_docs)]
        if feature_labels is None:
            feature_labels = [f"w{i}" for i in range(n_features)]
        g = cls(n_docs, n_features, m.indptr.astype(np.int64), m.indices.astype(np.int32),
                doc_labels, feature_labels)
        g.check()
        return g

    def check(self):
        """Assert bipartiteness and the degree-sum identity."""
        src = np.repeat(np.arange(self.n_vertices), np.diff(self.indptr))
        if np.any((src < self.n_docs) == (self.indices < self.n_docs)):
            raise DataError("edge connects two vertices of the same side")
        d_doc = int(self.degree[: self.n_docs].sum())
        d_feat = int(self.degree[self.n_docs:].sum())
        assert d_doc == d_feat == self.L, "side degree sums must both equal L"

    @property
    def view(self) -> GraphView:
        if self._view is None:
            n = self.n_vertices
            deg = self.degree.astype(np.float64)
            d1 = np.where(np.arange(n) < self.n_docs, deg, 0.0)
            d2 = deg - d1
            self._view = GraphView(
                indptr=self.indptr.astype(np.int64),
                indices=self.indices.astype(np.int32),
                weights=np.ones(len(self.indices), dtype=np.float64),
                d1=d1,
                d2=d2,
                selfw=np.zeros(n, dtype=np.float64),
                L=float(self.L),
            )
        return self._view


class SimpleGraph:
    """Weighted undirected unipartite graph (edge-list based, small scale)."""

    def __init__(self, n, u, v, w):
        self.n = int(n)
        self.u = np.asarray(u, dtype=np.int64)
        self.v = np.asarray(v, dtype=np.int64)
        self.w = np.asarray(w, dtype=np.float64)
        if np.any(self.u == self.v):
            raise DataError("self-loops are not supported")
        self.wdeg = np.bincount(self.u, weights=self.w, minlength=n) + np.bincount(
            self.v, weights=self.w, minlength=n)
        self.L = float(self.w.sum())

    @classmethod
    def from_edges(cls, n, edges):
        """``edges`` is an iterable of (u, v) or (u, v, weight) tuples."""
        u, v, w = [], [], []
        for e in edges:
            u.append(e[0])
            v.append(e[1])
            w.append(e[2] if len(e) > 2 else 1.0)
        return cls(n, u, v, w)

    def disjoint_copies(self, k):
        """k vertex-disjoint copies of this graph, plus the copies-partition."""
        u = np.concatenate([self.u + i * self.n for i in range(k)])
        v = np.concatenate([self.v + i * self.n for i in range(k)])
        w = np.tile(self.w, k)
        g = SimpleGraph(self.n * k, u, v, w)
        labels = np.repeat(np.arange(k), self.n)
        return g, labels


class AggregatedGraph:
    """Quotient of a bipartite graph over the blocks of a base partition."""

    def __init__(self, view: GraphView, block_of: np.ndarray):
        self._view = view
        self.block_of = block_of
        self.n_blocks = view.n_vertices

    @property
    def n_vertices(self) -> int:
        return self.n_blocks

    @property
    def view(self) -> GraphView:
        return self._view

    def check(self):
        v = self._view
        assert float(v.d1.sum()) == v.L and float(v.d2.sum()) == v.L
        inter = float(v.weights.sum()) / 2.0
        assert inter + float(v.selfw.sum()) == v.L, "edge mass must be conserved"


class Partition:
    """Cluster assignment over the vertices of a graph, with aggregates.

    ``assign`` holds a dense cluster id per vertex (ids 0..n_clusters-1, no
    gaps). ``l``/``d1``/``d2``/``sizes`` are per-cluster: internal edge
    weight, doc-side degree sum, feature-side degree sum, and vertex count.
    """

    __slots__ = ("assign", "n_clusters", "l", "d1", "d2", "sizes")

    def __init__(self, assign, n_clusters, l, d1, d2, sizes):
        self.assign = assign
        self.n_clusters = n_clusters
        self.l = l
        self.d1 = d1
        self.d2 = d2
        self.sizes = sizes

    @classmethod
    def from_assign(cls, g, assign, validate=True):
        """Compute aggregates for a dense assignment over graph ``g``.

        ``g`` may be a BipartiteGraph or an AggregatedGraph; only its kernel
        view is consulted.
        """
        view = g.view
        n = view.n_vertices
        assign = np.asarray(assign, dtype=np.int32)
        if assign.shape != (n,):
            raise DataError(f"assignment length {assign.shape} does not match {n} vertices")
        k = int(assign.max()) + 1 if n else 0
        sizes = np.bincount(assign, minlength=k).astype(np.int64)
        if validate and (assign.min() < 0 or np.any(sizes == 0)):
            raise DataError("cluster ids must be dense 0..k-1 with no empty ids")
        d1 = np.bincount(assign, weights=view.d1, minlength=k)
        d2 = np.bincount(assign, weights=view.d2, minlength=k)
        src = np.repeat(np.arange(n), np.diff(view.indptr))
        intra = assign[src] == assign[view.indices]
        l = np.bincount(assign[src][intra], weights=view.weights[intra], minlength=k) / 2.0
        l += np.bincount(assign, weights=view.selfw, minlength=k)
        p = cls(assign, k, l, d1, d2, sizes)
        if validate:
            p.check(view.L)
        return p

    @classmethod
    def singletons(cls, g):
        """The finest partition: every vertex its own cluster."""
        view = g.view
        n = view.n_vertices
        return cls(
            assign=np.arange(n, dtype=np.int32),
            n_clusters=n,
            l=view.selfw.copy(),
            d1=view.d1.copy(),
            d2=view.d2.copy(),
            sizes=np.ones(n, dtype=np.int64),
        )

    def check(self, L):
        assert abs(float(self.d1.sum()) - L) < 1e-6, "doc-side degree sums must total L"
        assert abs(float(self.d2.sum()) - L) < 1e-6, "feature-side degree sums must total L"
        assert float(self.l.sum()) <= L + 1e-6
        assert np.all(self.sizes > 0)

    def copy(self) -> "Partition":
        return Partition(self.assign.copy(), self.n_clusters, self.l.copy(),
                         self.d1.copy(), self.d2.copy(), self.sizes.copy())

    def same_as(self, other: "Partition") -> bool:
        return self.n_clusters == other.n_clusters and np.array_equal(self.assign, other.assign)

    def cluster_members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assign == c)


def canonical_labels(assign) -> np.ndarray:
    """Relabel cluster ids to 0..k-1 in order of first appearance."""
    assign = np.asarray(assign)
    out = np.empty(len(assign), dtype=np.int32)
    remap = {}
    for i, c in enumerate(assign.tolist()):
        nc = remap.get(c)
        if nc is None:
            nc = remap[c] = len(remap)
        out[i] = nc
    return out


def canonicalize(p: Partition) -> Partition:
    """Return ``p`` with ids renumbered by first appearance; aggregates permuted."""
    new = canonical_labels(p.assign)
    k = int(new.max()) + 1 if len(new) else 0
    # old id of each new id, in first-appearance order
    old_of_new = np.empty(k, dtype=np.int64)
    seen = np.zeros(p.n_clusters, dtype=bool)
    for old, nc in zip(p.assign.tolist(), new.tolist()):
        if not seen[old]:
            seen[old] = True
            old_of_new[nc] = old
    return Partition(new, k, p.l[old_of_new].copy(), p.d1[old_of_new].copy(),
                     p.d2[old_of_new].copy(), p.sizes[old_of_new].copy())


def aggregate(g, p: Partition) -> AggregatedGraph:
    """Quotient ``g`` by the blocks of ``p``.

    Each block becomes a super-vertex carrying its side-degree sums and its
    internal edge weight; parallel inter-block edges are summed.
    """
    view = g.view
    n = view.n_vertices
    if len(p.assign) != n:
        raise DataError("partition does not match the graph")
    k = p.n_clusters
    src = np.repeat(np.arange(n), np.diff(view.indptr))
    bs, bd = p.assign[src], p.assign[view.indices]
    inter = bs != bd
    m = sp.coo_matrix((view.weights[inter], (bs[inter], bd[inter])), shape=(k, k)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    agg_view = GraphView(
        indptr=m.indptr.astype(np.int64),
        indices=m.indices.astype(np.int32),
        weights=m.data.astype(np.float64),
        d1=p.d1.astype(np.float64).copy(),
        d2=p.d2.astype(np.float64).copy(),
        selfw=p.l.astype(np.float64).copy(),
        L=view.L,
    )
    a = AggregatedGraph(agg_view, p.assign.copy())
    a.check()
    return a


def export_partition_tsv(g, p: Partition, path):
    """Write ``vertex_label<TAB>cluster_id`` rows, vertices in id order."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in range(g.n_vertices):
            fh.write(f"{g.labels[v]}\t{int(p.assign[v])}\n")


def partition_summary(g: BipartiteGraph, p: Partition, mv=None, lam=None, top_k=10):
    """JSON-ready summary: sizes plus top-degree feature labels per cluster."""
    top_words = {}
    feats = np.arange(g.n_docs, g.n_vertices)
    by_cluster = {}
    for v in feats:
        by_cluster.setdefault(int(p.assign[v]), []).append(v)
    for c, vs in by_cluster.items():
        vs.sort(key=lambda v: (-int(g.degree[v]), v))
        top_words[str(c)] = [g.labels[v] for v in vs[:top_k]]
    out = {
        "n_clusters": int(p.n_clusters),
        "cluster_sizes": [int(s) for s in p.sizes],
        "docs_per_cluster": [int(c) for c in
                             np.bincount(p.assign[: g.n_docs], minlength=p.n_clusters)],
        "top_words": top_words,
    }
    if lam is not None:
        out["lambda"] = float(lam)
    if mv is not None:
        out["modularity"] = {"total": mv.total, "edge_term": mv.edge_term,
                             "null_term": mv.null_term}
    return out


def save_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
