"""Objectives and optimizers for bipartite-graph modularity.

The objective scored here is, per cluster i,

    Q = sum_i ( l_i / L  -  lam * D1_i * D2_i / L^2 )

where l_i is the edge weight inside cluster i, D1_i/D2_i the doc-side and
feature-side degree sums, L the total edge weight, and ``lam`` a positive
resolution knob (lam = 1 is the plain bipartite objective; larger values
penalise degree mass harder and yield finer partitions). ``q_simple`` is the
classical unipartite analogue with null term D_i^2 / (4 L^2), kept for
validation.

Optimizers:

* ``local_descent`` -- cyclic coordinate descent moving whole blocks of a
  base partition; the workhorse behind everything else.
* ``cluster`` -- full clustering from singletons, by either the classic
  coarsening schedule ("louvain") or the interleaved schedule that re-runs a
  vertex-level pass after every coarse pass ("interleaved", default).
* ``redistribute`` -- dissolve all but n anchor clusters and reassign the
  astray vertices among the anchors (greedy seeding + restricted descent).
* ``finalize`` -- ``redistribute`` followed by one vertex-level descent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .graph import (AggregatedGraph, BipartiteGraph, Partition, SimpleGraph,
                    aggregate, canonical_labels)
from .kernels import (active_impl, q_terms, run_anchor_descent, run_descent)

__all__ = [
    "ModularityValue",
    "DescentConfig",
    "q_simple",
    "q_bipartite",
    "DescentState",
    "local_descent",
    "cluster",
    "redistribute",
    "finalize",
]

FRESH = -1  # move target meaning "a new singleton cluster"


@dataclass(frozen=True)
class ModularityValue:
    """Objective value split into its edge and null-model terms."""

    total: float
    edge_term: float
    null_term: float

    def __post_init__(self):
        assert abs(self.total - (self.edge_term - self.null_term)) <= 1e-12
        assert -1e-12 <= self.edge_term <= 1.0 + 1e-12


@dataclass(frozen=True)
class DescentConfig:
    """Knobs for the descent optimizers.

    epsilon is the strict improvement threshold for accepting a move and the
    round-over-round stopping tolerance; seed=0 keeps the natural sweep
    order, any other value reshuffles it every sweep.
    """

    lam: float = 1.0
    epsilon: float = 1e-12
    max_sweeps: int | None = None
    seed: int = 0
    schedule: str = "interleaved"

    def __post_init__(self):
        if not self.lam > 0:
            raise UsageError("lam must be positive")
        if self.epsilon < 0:
            raise UsageError("epsilon must be non-negative")
        if self.schedule not in ("louvain", "interleaved"):
            raise UsageError(f"unknown schedule {self.schedule!r}")
        if self.max_sweeps is not None and self.max_sweeps < 1:
            raise UsageError("max_sweeps must be at least 1")


def _labels_of(p):
    return p.assign if isinstance(p, Partition) else np.asarray(p)


def q_simple(g: SimpleGraph, p, lam: float = 1.0) -> ModularityValue:
    """Classical modularity of a unipartite weighted graph."""
    if g.L <= 0:
        raise DataError("graph has no edges")
    labels = canonical_labels(_labels_of(p))
    k = int(labels.max()) + 1
    intra = labels[g.u] == labels[g.v]
    l = np.bincount(labels[g.u][intra], weights=g.w[intra], minlength=k)
    d = np.bincount(labels, weights=g.wdeg, minlength=k)
    edge = float(np.sum(l)) / g.L
    null = lam * float(np.sum(d * d)) / (4.0 * g.L * g.L)
    return ModularityValue(edge - null, edge, null)


def q_bipartite(g, p, lam: float = 1.0) -> ModularityValue:
    """Bipartite modularity of a partition over ``g`` (graph or quotient)."""
    if g.view.L <= 0:
        raise DataError("graph has no edges")
    if not isinstance(p, Partition):
        p = Partition.from_assign(g, canonical_labels(_labels_of(p)))
    edge, null = q_terms(p.l, p.d1, p.d2, g.view.L, lam)
    return ModularityValue(edge - null, edge, null)


class DescentState:
    """Cached aggregates for scoring and applying single block moves.

    Exposes the incremental gain used by the sweep kernels, for audits and
    tests; the optimizers themselves run the kernels directly. ``base``
    defaults to singletons (blocks = vertices) and ``start`` to ``base``.
    """

    def __init__(self, g, base: Partition | None = None,
                 start: Partition | None = None, lam: float = 1.0):
        self.g = g
        self.lam = float(lam)
        if base is None:
            base = Partition.singletons(g)
        if start is None:
            start = base
        if base.n_clusters == g.n_vertices:
            self.view = g.view
            self._block_of = None
            assign = start.assign.copy()
        else:
            agg = aggregate(g, base)
            self.view = agg.view
            self._block_of = base.assign.copy()
            assign = _coarsen_assign(base, start)
        self.assign = assign.astype(np.int32)
        n = self.view.n_vertices
        from .kernels import _cluster_arrays
        self.c_l, self.c_d1, self.c_d2, self.c_size = _cluster_arrays(
            self.view, self.assign, n)
        self.high_water = int(self.assign.max()) + 1

    def q(self) -> ModularityValue:
        edge, null = q_terms(self.c_l, self.c_d1, self.c_d2, self.view.L, self.lam)
        return ModularityValue(edge - null, edge, null)

    def _weights_to(self, block):
        w = {}
        view = self.view
        for e in range(view.indptr[block], view.indptr[block + 1]):
            u = int(view.indices[e])
            if u == block:
                continue
            t = int(self.assign[u])
            w[t] = w.get(t, 0.0) + float(view.weights[e])
        return w

    def _check_target(self, target):
        if target == FRESH:
            return
        if not (0 <= target < len(self.c_size)) or self.c_size[target] == 0:
            raise UsageError(f"unknown cluster id {target}")

    def move_gain(self, block: int, target: int) -> float:
        """Objective change from moving ``block`` to ``target`` (or FRESH)."""
        self._check_target(target)
        c = int(self.assign[block])
        if target == c:
            return 0.0
        view = self.view
        w = self._weights_to(block)
        d1v, d2v = float(view.d1[block]), float(view.d2[block])
        rd1 = float(self.c_d1[c]) - d1v
        rd2 = float(self.c_d2[c]) - d2v
        w_cur = w.get(c, 0.0)
        if target == FRESH:
            wt, td1, td2 = 0.0, 0.0, 0.0
        else:
            wt = w.get(target, 0.0)
            td1, td2 = float(self.c_d1[target]), float(self.c_d2[target])
        inv_l = 1.0 / view.L
        inv_l2 = 1.0 / (view.L * view.L)
        return (wt - w_cur) * inv_l - self.lam * inv_l2 * (
            d1v * (td2 - rd2) + d2v * (td1 - rd1))

    def apply_move(self, block: int, target: int):
        self._check_target(target)
        c = int(self.assign[block])
        if target == c:
            return
        if target == FRESH:
            empty = np.flatnonzero(self.c_size[: self.high_water] == 0)
            if len(empty):
                target = int(empty[0])
            else:
                target = self.high_water
                self.high_water += 1
        view = self.view
        w = self._weights_to(block)
        sv = float(view.selfw[block])
        d1v, d2v = float(view.d1[block]), float(view.d2[block])
        self.c_l[c] -= w.get(c, 0.0) + sv
        self.c_l[target] += w.get(target, 0.0) + sv
        self.c_d1[c] -= d1v
        self.c_d2[c] -= d2v
        self.c_d1[target] += d1v
        self.c_d2[target] += d2v
        self.c_size[c] -= 1
        self.c_size[target] += 1
        if self.c_size[c] == 0:
            self.c_l[c] = self.c_d1[c] = self.c_d2[c] = 0.0
        self.assign[block] = target

    def partition(self) -> Partition:
        """Current state as a canonical partition of the base graph."""
        if self._block_of is None:
            assign = self.assign
        else:
            assign = self.assign[self._block_of]
        return Partition.from_assign(self.g, canonical_labels(assign))


def _coarsen_assign(base: Partition, start: Partition) -> np.ndarray:
    """start-cluster id of each base block; errors if start is no coarsening."""
    pairs = np.unique(np.stack([base.assign, start.assign], axis=1), axis=0)
    if len(np.unique(pairs[:, 0])) != len(pairs):
        raise DataError("start partition is not a coarsening of the base partition")
    return pairs[:, 1].astype(np.int32)


def local_descent(g, base: Partition, start: Partition, cfg: DescentConfig,
                  impl=None, on_move=None) -> Partition:
    """Improve ``start`` by cyclic coordinate descent over the blocks of ``base``.

    Candidate targets per block are the clusters containing one of its
    neighbours plus a fresh singleton; the best strictly-improving move
    (gain > cfg.epsilon) is applied. Stops after a full sweep without moves.
    The result is canonical and never worse than ``start``.
    """
    if g.view.L <= 0:
        raise DataError("graph has no edges")
    if base.n_clusters == g.n_vertices:
        res = run_descent(g.view, start.assign, lam=cfg.lam, epsilon=cfg.epsilon,
                          seed=cfg.seed, max_sweeps=cfg.max_sweeps,
                          allow_fresh=True, impl=impl, on_move=on_move)
        final = res.assign
    else:
        super_start = _coarsen_assign(base, start)
        agg = aggregate(g, base)
        res = run_descent(agg.view, super_start, lam=cfg.lam, epsilon=cfg.epsilon,
                          seed=cfg.seed, max_sweeps=cfg.max_sweeps,
                          allow_fresh=True, impl=impl, on_move=on_move)
        final = res.assign[base.assign]
    return Partition.from_assign(g, canonical_labels(final))


def cluster(g: BipartiteGraph, cfg: DescentConfig,
            impl=None) -> tuple[Partition, ModularityValue]:
    """Cluster ``g`` from singletons under the configured schedule.

    louvain      P(n) = T[P(n-1)] P(n-1): each round moves the blocks of the
                 previous partition, coarsening monotonically.
    interleaved  P(n) = T[P0] T[P(n-1)] P(n-1): each round first moves blocks
                 at the current coarseness, then re-optimizes at single-vertex
                 granularity. Rounds are not necessarily coarsenings.

    Both stop when a round improves the objective by at most cfg.epsilon.
    """
    if g.view.L <= 0:
        raise DataError("graph has no edges")
    p0 = Partition.singletons(g)
    if cfg.schedule == "louvain":
        p, q_prev = p0, 0.0
        while True:
            p_new = local_descent(g, base=p, start=p, cfg=cfg, impl=impl)
            mv = q_bipartite(g, p_new, cfg.lam)
            if mv.total - q_prev <= cfg.epsilon:
                return p_new, mv
            p, q_prev = p_new, mv.total
    else:
        p = local_descent(g, base=p0, start=p0, cfg=cfg, impl=impl)
        q_prev = q_bipartite(g, p, cfg.lam).total
        while True:
            x = local_descent(g, base=p, start=p, cfg=cfg, impl=impl)
            p_new = local_descent(g, base=p0, start=x, cfg=cfg, impl=impl)
            mv = q_bipartite(g, p_new, cfg.lam)
            if mv.total - q_prev <= cfg.epsilon:
                return p_new, mv
            p, q_prev = p_new, mv.total


def _anchor_ids_by_size(p: Partition, n: int) -> list[int]:
    order = sorted(range(p.n_clusters), key=lambda c: (-int(p.sizes[c]), c))
    return order[:n]


def redistribute(g: BipartiteGraph, p: Partition, n: int, cfg: DescentConfig,
                 anchors=None, impl=None, on_move=None) -> Partition:
    """Reassign every vertex outside the anchor clusters to some anchor.

    Anchors are the n largest clusters of ``p`` (ties to the lower id), or an
    explicit list of n cluster ids. Astray vertices are seeded greedily in
    order of descending degree (ties to the lower vertex id), then reassigned
    by descent restricted to anchor targets. Anchor members never move; the
    result has exactly n clusters, numbered by anchor rank.
    """
    if n < 1:
        raise UsageError("n must be at least 1")
    if anchors is None:
        if n >= p.n_clusters:
            raise UsageError(
                f"cannot redistribute onto {n} clusters: partition has only "
                f"{p.n_clusters}")
        anchors = _anchor_ids_by_size(p, n)
    else:
        anchors = [int(a) for a in anchors]
        if len(anchors) != n:
            raise UsageError("anchors must list exactly n cluster ids")
        if len(set(anchors)) != n:
            raise UsageError("anchors must be distinct")
        for a in anchors:
            if not 0 <= a < p.n_clusters:
                raise UsageError(f"unknown anchor cluster id {a}")

    pos = np.full(p.n_clusters, -1, dtype=np.int32)
    for i, a in enumerate(anchors):
        pos[a] = i
    assign = pos[p.assign]
    astray = np.flatnonzero(assign < 0)
    astray = astray[np.lexsort((astray, -g.degree[astray]))].astype(np.int32)
    res = run_anchor_descent(g.view, assign, astray, n, lam=cfg.lam,
                             epsilon=cfg.epsilon, max_sweeps=cfg.max_sweeps,
                             impl=impl, on_move=on_move)
    return Partition.from_assign(g, res.assign)


def finalize(g: BipartiteGraph, p: Partition, n: int, cfg: DescentConfig,
             anchors=None, impl=None) -> Partition:
    """Redistribute onto n anchors, then re-optimize at vertex granularity.

    The trailing descent may merge or empty clusters, so the result can have
    fewer than n clusters; callers report when that happens.
    """
    r = redistribute(g, p, n, cfg, anchors=anchors, impl=impl)
    return local_descent(g, Partition.singletons(g), r, cfg, impl=impl)
