# cython: language_level=3, boundscheck=False, wraparound=False
# cython: initializedcheck=False, cdivision=True
"""Compiled descent kernels.

Twin of ``bimod._kernels_py``: identical signatures, visit order,
tie-breaking and floating-point expression shapes (the extension is built
with FP contraction disabled), so both kernels produce bit-identical
results. Keep the two in sync.
"""

import numpy as np


cdef void _sweep_pass(const long long[::1] ip, const int[::1] nb, const double[::1] wt,
                      const double[::1] a_d1, const double[::1] a_d2, const double[::1] a_sw,
                      const int[::1] vis, int[::1] a,
                      double[::1] cl, double[::1] cd1, double[::1] cd2, long long[::1] cs,
                      int[::1] free_ids, double[::1] w_to, int[::1] touched,
                      double L, double lam, double eps, bint allow_fresh,
                      long long* p_moves, long long* p_nfree, long long* p_hw,
                      double* p_q,
                      int[::1] log_v, int[::1] log_src, int[::1] log_dst,
                      double[::1] log_q) noexcept nogil:
    cdef double inv_l = 1.0 / L
    cdef double inv_l2 = 1.0 / (L * L)
    cdef long long moves = 0
    cdef long long n_free = p_nfree[0]
    cdef long long high_water = p_hw[0]
    cdef double q_running = p_q[0]
    cdef Py_ssize_t i, k
    cdef long long e
    cdef int v, c, u, t, best_t
    cdef int n_touched
    cdef bint use_fresh
    cdef double d1v, d2v, rd1, rd2, w_cur, g, best_gain, sv

    for i in range(vis.shape[0]):
        v = vis[i]
        c = a[v]
        n_touched = 0
        for e in range(ip[v], ip[v + 1]):
            u = nb[e]
            if u == v:
                continue
            t = a[u]
            if w_to[t] == 0.0:
                touched[n_touched] = t
                n_touched += 1
            w_to[t] += wt[e]

        d1v = a_d1[v]
        d2v = a_d2[v]
        rd1 = cd1[c] - d1v
        rd2 = cd2[c] - d2v
        w_cur = w_to[c]

        best_gain = eps
        best_t = -1
        for k in range(n_touched):
            t = touched[k]
            if t == c:
                continue
            g = (w_to[t] - w_cur) * inv_l - lam * inv_l2 * (
                d1v * (cd2[t] - rd2) + d2v * (cd1[t] - rd1))
            if g > best_gain or (g == best_gain and best_t != -1 and t < best_t):
                best_gain = g
                best_t = t
        use_fresh = False
        if allow_fresh and cs[c] > 1:
            g = (0.0 - w_cur) * inv_l - lam * inv_l2 * (
                d1v * (0.0 - rd2) + d2v * (0.0 - rd1))
            if g > best_gain:
                best_gain = g
                best_t = -1
                use_fresh = True

        if best_t != -1 or use_fresh:
            if use_fresh:
                if n_free > 0:
                    n_free -= 1
                    best_t = free_ids[n_free]
                else:
                    best_t = <int> high_water
                    high_water += 1
            sv = a_sw[v]
            cl[c] -= w_cur + sv
            cl[best_t] += w_to[best_t] + sv
            cd1[c] = rd1
            cd2[c] = rd2
            cd1[best_t] += d1v
            cd2[best_t] += d2v
            cs[c] -= 1
            cs[best_t] += 1
            if cs[c] == 0:
                cl[c] = 0.0
                cd1[c] = 0.0
                cd2[c] = 0.0
                free_ids[n_free] = c
                n_free += 1
            a[v] = best_t
            q_running += best_gain
            log_v[moves] = v
            log_src[moves] = c
            log_dst[moves] = best_t
            log_q[moves] = q_running
            moves += 1

        for k in range(n_touched):
            w_to[touched[k]] = 0.0

    p_moves[0] = moves
    p_nfree[0] = n_free
    p_hw[0] = high_water
    p_q[0] = q_running


def sweep(indptr, indices, weights, d1, d2, selfw,
          order, assign, c_l, c_d1, c_d2, c_size,
          free_ids, n_free, high_water,
          L, lam, eps, allow_fresh, q_running,
          log_v, log_src, log_dst, log_q):
    """One cyclic pass over ``order``. Mutates assign/aggregates in place.

    Returns (moves, n_free, high_water, q_running).
    """
    cdef const long long[::1] ip = indptr
    cdef const int[::1] nb = indices
    cdef const double[::1] wt = weights
    cdef const double[::1] a_d1 = d1
    cdef const double[::1] a_d2 = d2
    cdef const double[::1] a_sw = selfw
    cdef const int[::1] vis = order
    cdef int[::1] a = assign
    cdef double[::1] cl = c_l
    cdef double[::1] cd1 = c_d1
    cdef double[::1] cd2 = c_d2
    cdef long long[::1] cs = c_size
    cdef int[::1] free_mv = free_ids
    cdef int[::1] lv = log_v
    cdef int[::1] lsrc = log_src
    cdef int[::1] ldst = log_dst
    cdef double[::1] lq = log_q

    cdef Py_ssize_t n = assign.shape[0]
    w_scratch = np.zeros(n, dtype=np.float64)
    t_scratch = np.empty(n, dtype=np.int32)
    cdef double[::1] w_to = w_scratch
    cdef int[::1] touched = t_scratch

    cdef double c_L = L
    cdef double c_lam = lam
    cdef double c_eps = eps
    cdef bint c_fresh = allow_fresh
    cdef long long c_moves = 0
    cdef long long c_nfree = n_free
    cdef long long c_hw = high_water
    cdef double c_q = q_running

    with nogil:
        _sweep_pass(ip, nb, wt, a_d1, a_d2, a_sw, vis, a, cl, cd1, cd2, cs,
                    free_mv, w_to, touched, c_L, c_lam, c_eps, c_fresh,
                    &c_moves, &c_nfree, &c_hw, &c_q, lv, lsrc, ldst, lq)
    return int(c_moves), int(c_nfree), int(c_hw), float(c_q)


cdef void _anchor_pass(const long long[::1] ip, const int[::1] nb, const double[::1] wt,
                       const double[::1] a_d1, const double[::1] a_d2,
                       const int[::1] vis, int[::1] a,
                       double[::1] cl, double[::1] cd1, double[::1] cd2, long long[::1] cs,
                       double[::1] w_to, int n_anchors,
                       double L, double lam, double eps, bint greedy,
                       long long* p_moves, double* p_q,
                       int[::1] log_v, int[::1] log_src, int[::1] log_dst,
                       double[::1] log_q) noexcept nogil:
    cdef double inv_l = 1.0 / L
    cdef double inv_l2 = 1.0 / (L * L)
    cdef long long moves = 0
    cdef double q_running = p_q[0]
    cdef Py_ssize_t i
    cdef long long e
    cdef int v, c, t, best_t
    cdef double d1v, d2v, rd1, rd2, w_cur, g, best_gain

    for i in range(vis.shape[0]):
        v = vis[i]
        c = a[v]
        for e in range(ip[v], ip[v + 1]):
            t = a[nb[e]]
            if 0 <= t < n_anchors:
                w_to[t] += wt[e]
        d1v = a_d1[v]
        d2v = a_d2[v]

        if greedy and c < 0:
            best_gain = -1e300
            best_t = 0
            for t in range(n_anchors):
                g = w_to[t] * inv_l - lam * inv_l2 * (d1v * cd2[t] + d2v * cd1[t])
                if g > best_gain:
                    best_gain = g
                    best_t = t
            cl[best_t] += w_to[best_t]
            cd1[best_t] += d1v
            cd2[best_t] += d2v
            cs[best_t] += 1
            a[v] = best_t
            q_running += best_gain
            log_v[moves] = v
            log_src[moves] = -1
            log_dst[moves] = best_t
            log_q[moves] = q_running
            moves += 1
        else:
            rd1 = cd1[c] - d1v
            rd2 = cd2[c] - d2v
            w_cur = w_to[c]
            best_gain = eps
            best_t = -1
            for t in range(n_anchors):
                if t == c:
                    continue
                g = (w_to[t] - w_cur) * inv_l - lam * inv_l2 * (
                    d1v * (cd2[t] - rd2) + d2v * (cd1[t] - rd1))
                if g > best_gain:
                    best_gain = g
                    best_t = t
            if best_t != -1:
                cl[c] -= w_cur
                cl[best_t] += w_to[best_t]
                cd1[c] = rd1
                cd2[c] = rd2
                cd1[best_t] += d1v
                cd2[best_t] += d2v
                cs[c] -= 1
                cs[best_t] += 1
                a[v] = best_t
                q_running += best_gain
                log_v[moves] = v
                log_src[moves] = c
                log_dst[moves] = best_t
                log_q[moves] = q_running
                moves += 1

        for t in range(n_anchors):
            w_to[t] = 0.0

    p_moves[0] = moves
    p_q[0] = q_running


def anchor_sweep(indptr, indices, weights, d1, d2,
                 astray, assign, c_l, c_d1, c_d2, c_size,
                 n_anchors, L, lam, eps, greedy, q_running,
                 log_v, log_src, log_dst, log_q):
    """One pass over the astray vertices with anchors as the only targets.

    Returns (moves, q_running).
    """
    cdef const long long[::1] ip = indptr
    cdef const int[::1] nb = indices
    cdef const double[::1] wt = weights
    cdef const double[::1] a_d1 = d1
    cdef const double[::1] a_d2 = d2
    cdef const int[::1] vis = astray
    cdef int[::1] a = assign
    cdef double[::1] cl = c_l
    cdef double[::1] cd1 = c_d1
    cdef double[::1] cd2 = c_d2
    cdef long long[::1] cs = c_size
    cdef int[::1] lv = log_v
    cdef int[::1] lsrc = log_src
    cdef int[::1] ldst = log_dst
    cdef double[::1] lq = log_q

    w_scratch = np.zeros(n_anchors, dtype=np.float64)
    cdef double[::1] w_to = w_scratch

    cdef int c_anchors = n_anchors
    cdef double c_L = L
    cdef double c_lam = lam
    cdef double c_eps = eps
    cdef bint c_greedy = greedy
    cdef long long c_moves = 0
    cdef double c_q = q_running

    with nogil:
        _anchor_pass(ip, nb, wt, a_d1, a_d2, vis, a, cl, cd1, cd2, cs,
                     w_to, c_anchors, c_L, c_lam, c_eps, c_greedy,
                     &c_moves, &c_q, lv, lsrc, ldst, lq)
    return int(c_moves), float(c_q)
