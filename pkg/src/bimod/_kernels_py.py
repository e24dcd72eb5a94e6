"""Pure-Python descent kernels.

Fallback twin of the compiled module ``bimod._kernels_c``: same signatures,
same visit order, same tie-breaking, and the same floating-point expression
shapes, so both produce bit-identical results. Keep the two in sync.

A "sweep" is one cyclic pass of the discrete coordinate descent: each block
in ``order`` is offered its best strictly-improving move (gain > eps) into a
neighbouring cluster or, when allowed, a fresh singleton cluster. The anchor
variant restricts the coordinate range to a fixed set of anchor clusters and
is used for tail redistribution and classification.

Every accepted move is appended to the ``log_*`` arrays together with the
running objective value, which lets callers audit incremental consistency
move by move.
"""

__all__ = ["sweep", "anchor_sweep"]


def sweep(indptr, indices, weights, d1, d2, selfw,
          order, assign, c_l, c_d1, c_d2, c_size,
          free_ids, n_free, high_water,
          L, lam, eps, allow_fresh, q_running,
          log_v, log_src, log_dst, log_q):
    """One cyclic pass over ``order``. Mutates assign/aggregates in place.

    Returns (moves, n_free, high_water, q_running).
    """
    ip = indptr.tolist()
    nb = indices.tolist()
    wt = weights.tolist()
    a_d1 = d1.tolist()
    a_d2 = d2.tolist()
    a_sw = selfw.tolist()
    a = assign.tolist()
    cl = c_l.tolist()
    cd1 = c_d1.tolist()
    cd2 = c_d2.tolist()
    cs = c_size.tolist()
    free = free_ids.tolist()
    vis = order.tolist()

    n = len(a)
    inv_l = 1.0 / L
    inv_l2 = 1.0 / (L * L)
    w_to = [0.0] * n
    touched = []
    moves = 0

    for v in vis:
        c = a[v]
        for e in range(ip[v], ip[v + 1]):
            u = nb[e]
            if u == v:
                continue
            t = a[u]
            if w_to[t] == 0.0:
                touched.append(t)
            w_to[t] += wt[e]

        d1v = a_d1[v]
        d2v = a_d2[v]
        rd1 = cd1[c] - d1v
        rd2 = cd2[c] - d2v
        w_cur = w_to[c]

        best_gain = eps
        best_t = -1
        for t in touched:
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
                    best_t = free[n_free]
                else:
                    best_t = high_water
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
                free[n_free] = c
                n_free += 1
            a[v] = best_t
            q_running += best_gain
            log_v[moves] = v
            log_src[moves] = c
            log_dst[moves] = best_t
            log_q[moves] = q_running
            moves += 1

        for t in touched:
            w_to[t] = 0.0
        touched.clear()

    assign[:] = a
    c_l[:] = cl
    c_d1[:] = cd1
    c_d2[:] = cd2
    c_size[:] = cs
    free_ids[:] = free
    return moves, n_free, high_water, q_running


def anchor_sweep(indptr, indices, weights, d1, d2,
                 astray, assign, c_l, c_d1, c_d2, c_size,
                 n_anchors, L, lam, eps, greedy, q_running,
                 log_v, log_src, log_dst, log_q):
    """One pass over the astray vertices with anchors as the only targets.

    In greedy mode vertices with assignment -1 are placed at their best
    anchor unconditionally (remaining unplaced vertices count as singletons);
    otherwise this is a plain descent pass restricted to anchor targets.

    Returns (moves, q_running).
    """
    ip = indptr.tolist()
    nb = indices.tolist()
    wt = weights.tolist()
    a_d1 = d1.tolist()
    a_d2 = d2.tolist()
    a = assign.tolist()
    cl = c_l.tolist()
    cd1 = c_d1.tolist()
    cd2 = c_d2.tolist()
    cs = c_size.tolist()
    vis = astray.tolist()

    inv_l = 1.0 / L
    inv_l2 = 1.0 / (L * L)
    w_to = [0.0] * n_anchors
    moves = 0

    for v in vis:
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

    assign[:] = a
    c_l[:] = cl
    c_d1[:] = cd1
    c_d2[:] = cd2
    c_size[:] = cs
    return moves, q_running
