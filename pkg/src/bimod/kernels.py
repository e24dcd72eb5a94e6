"""Kernel selection and descent drivers.

The cyclic coordinate-descent sweeps are the hot loops of the whole package.
Two interchangeable implementations exist: a Cython extension
(``bimod._kernels_c``, built at install time) and a pure-Python twin
(``bimod._kernels_py``). The compiled one is used when importable unless the
``BIMOD_PURE_PYTHON`` environment variable is set. Both are bit-for-bit
equivalent; ``benchmarks/kernel_benchmark.py`` compares their speed.

Drivers here own everything around the sweeps: cluster-aggregate
initialisation, the convergence loop, per-sweep visit order, fresh-cluster
bookkeeping, and replaying the move log to an optional ``on_move`` audit
callback ``(vertex, src_cluster, dst_cluster, running_q)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

HAVE_COMPILED = _kernels_c is not None

__all__ = [
    "HAVE_COMPILED",
    "active_impl",
    "available_impls",
    "q_terms",
    "DescentResult",
    "run_descent",
    "run_anchor_descent",
]


def active_impl():
    """The kernel module in effect: compiled if available, else pure Python."""
    if _kernels_c is not None and not os.environ.get("BIMOD_PURE_PYTHON"):
        return _kernels_c
    return _kernels_py


def available_impls():
    """name -> kernel module, for benchmarks and equivalence tests."""
    impls = {"python": _kernels_py}
    if _kernels_c is not None:
        impls["compiled"] = _kernels_c
    return impls


def q_terms(l, d1, d2, L, lam):
    """(edge_term, null_term) of the bipartite objective from per-cluster sums."""
    edge = float(np.sum(l)) / L
    null = lam * float(np.sum(d1 * d2)) / (L * L)
    return edge, null


def _cluster_arrays(view, assign, cap):
    """Per-cluster aggregate arrays of capacity ``cap`` for ``assign``."""
    c_d1 = np.bincount(assign, weights=view.d1, minlength=cap).astype(np.float64)
    c_d2 = np.bincount(assign, weights=view.d2, minlength=cap).astype(np.float64)
    c_size = np.bincount(assign, minlength=cap).astype(np.int64)
    n = view.n_vertices
    src = np.repeat(np.arange(n), np.diff(view.indptr))
    intra = assign[src] == assign[view.indices]
    c_l = np.bincount(assign[src][intra], weights=view.weights[intra],
                      minlength=cap) / 2.0
    c_l += np.bincount(assign, weights=view.selfw, minlength=cap)
    return c_l.astype(np.float64), c_d1, c_d2, c_size


@dataclass
class DescentResult:
    assign: np.ndarray
    q: float
    sweeps: int
    moves: int


def run_descent(view, start_assign, *, lam, epsilon=1e-12, seed=0,
                max_sweeps=None, allow_fresh=True, impl=None, on_move=None):
    """Run sweeps until none moves a block (or ``max_sweeps`` is hit).

    ``start_assign`` must use dense cluster ids 0..k-1. Visit order is the
    natural one, or reshuffled every sweep when ``seed`` is nonzero.
    """
    if impl is None:
        impl = active_impl()
    n = view.n_vertices
    assign = np.ascontiguousarray(start_assign, dtype=np.int32).copy()
    high_water = int(assign.max()) + 1 if n else 0
    c_l, c_d1, c_d2, c_size = _cluster_arrays(view, assign, n)
    free_ids = np.zeros(n, dtype=np.int32)
    n_free = 0
    edge, null = q_terms(c_l, c_d1, c_d2, view.L, lam)
    q = edge - null
    log_v = np.zeros(n, dtype=np.int32)
    log_src = np.zeros(n, dtype=np.int32)
    log_dst = np.zeros(n, dtype=np.int32)
    log_q = np.zeros(n, dtype=np.float64)
    rng = np.random.default_rng(seed) if seed else None

    sweeps = 0
    total_moves = 0
    while True:
        if rng is not None:
            order = rng.permutation(n).astype(np.int32)
        else:
            order = np.arange(n, dtype=np.int32)
        moves, n_free, high_water, q = impl.sweep(
            view.indptr, view.indices, view.weights, view.d1, view.d2,
            view.selfw, order, assign, c_l, c_d1, c_d2, c_size,
            free_ids, n_free, high_water, view.L, lam, epsilon,
            allow_fresh, q, log_v, log_src, log_dst, log_q)
        sweeps += 1
        total_moves += moves
        if on_move is not None:
            for i in range(moves):
                on_move(int(log_v[i]), int(log_src[i]), int(log_dst[i]),
                        float(log_q[i]))
        if moves == 0:
            break
        if max_sweeps is not None and sweeps >= max_sweeps:
            break
    return DescentResult(assign=assign, q=q, sweeps=sweeps, moves=total_moves)


def run_anchor_descent(view, assign, astray_order, n_anchors, *, lam,
                       epsilon=1e-12, max_sweeps=None, impl=None, on_move=None):
    """Greedy placement of astray vertices followed by anchor-restricted descent.

    ``assign`` maps anchor members to their anchor index in [0, n_anchors)
    and every astray vertex to -1. Astray vertices are first placed one by
    one (in ``astray_order``) at the anchor with the best objective gain,
    unplaced ones still counting as singletons; afterwards plain descent
    sweeps reassign them among the anchors until no move improves. Anchor
    members never move.
    """
    if impl is None:
        impl = active_impl()
    assign = np.ascontiguousarray(assign, dtype=np.int32).copy()
    astray = np.ascontiguousarray(astray_order, dtype=np.int32)
    n_anchors = int(n_anchors)

    placed = assign >= 0
    sub = assign[placed]
    c_d1 = np.bincount(sub, weights=view.d1[placed], minlength=n_anchors).astype(np.float64)
    c_d2 = np.bincount(sub, weights=view.d2[placed], minlength=n_anchors).astype(np.float64)
    c_size = np.bincount(sub, minlength=n_anchors).astype(np.int64)
    n = view.n_vertices
    src = np.repeat(np.arange(n), np.diff(view.indptr))
    dst = view.indices
    intra = (assign[src] >= 0) & (assign[src] == assign[dst])
    c_l = (np.bincount(assign[src][intra], weights=view.weights[intra],
                       minlength=n_anchors) / 2.0).astype(np.float64)

    edge, null = q_terms(c_l, c_d1, c_d2, view.L, lam)
    q = edge - null
    m = len(astray)
    log_v = np.zeros(m, dtype=np.int32)
    log_src = np.zeros(m, dtype=np.int32)
    log_dst = np.zeros(m, dtype=np.int32)
    log_q = np.zeros(m, dtype=np.float64)

    def flush(k):
        if on_move is not None:
            for i in range(k):
                on_move(int(log_v[i]), int(log_src[i]), int(log_dst[i]),
                        float(log_q[i]))

    moves, q = impl.anchor_sweep(
        view.indptr, view.indices, view.weights, view.d1, view.d2,
        astray, assign, c_l, c_d1, c_d2, c_size, n_anchors, view.L, lam,
        epsilon, True, q, log_v, log_src, log_dst, log_q)
    flush(moves)
    total_moves = moves

    sweeps = 0
    while True:
        moves, q = impl.anchor_sweep(
            view.indptr, view.indices, view.weights, view.d1, view.d2,
            astray, assign, c_l, c_d1, c_d2, c_size, n_anchors, view.L, lam,
            epsilon, False, q, log_v, log_src, log_dst, log_q)
        flush(moves)
        sweeps += 1
        total_moves += moves
        if moves == 0:
            break
        if max_sweeps is not None and sweeps >= max_sweeps:
            break
    return DescentResult(assign=assign, q=q, sweeps=sweeps, moves=total_moves)
