"""Loop kernels shared by both backends.

Every function here is written in the numba nopython subset.  Under the
numba backend ``kernel`` compiles them; under the numpy backend they stay
plain Python and ``_kernels_numpy`` swaps in vectorized versions wherever
one exists.

Hypergraphs are passed in CSR form: ``edge_ptr`` (m+1) and ``edge_vtx`` hold
the sorted vertex lists, ``inc_ptr`` (n+1) and ``inc_edges`` the per-vertex
incident edge ids in increasing order.
"""

import numpy as np

from ._accel import kernel


@kernel
def incidence(edge_ptr, edge_vtx, n):
    m = edge_ptr.shape[0] - 1
    counts = np.zeros(n + 1, np.int64)
    for p in range(edge_vtx.shape[0]):
        counts[edge_vtx[p] + 1] += 1
    inc_ptr = np.cumsum(counts)
    fill = inc_ptr[:-1].copy()
    inc_edges = np.empty(edge_vtx.shape[0], np.int64)
    for e in range(m):
        for p in range(edge_ptr[e], edge_ptr[e + 1]):
            v = edge_vtx[p]
            inc_edges[fill[v]] = e
            fill[v] += 1
    return inc_ptr, inc_edges


@kernel
def alive_edge_mask(edge_ptr, edge_vtx, alive):
    m = edge_ptr.shape[0] - 1
    out = np.ones(m, np.bool_)
    for e in range(m):
        for p in range(edge_ptr[e], edge_ptr[e + 1]):
            if not alive[edge_vtx[p]]:
                out[e] = False
                break
    return out


@kernel
def masked_degrees(edge_ptr, edge_vtx, edge_mask, n):
    deg = np.zeros(n, np.int64)
    for e in range(edge_ptr.shape[0] - 1):
        if edge_mask[e]:
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                deg[edge_vtx[p]] += 1
    return deg


@kernel
def intersect_counts_simple(edge_ptr, edge_vtx, edge_mask, deg):
    m = edge_ptr.shape[0] - 1
    out = np.zeros(m, np.int64)
    for e in range(m):
        if edge_mask[e]:
            t = 0
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                t += deg[edge_vtx[p]] - 1
            out[e] = t
    return out


@kernel
def intersect_counts_exact(edge_ptr, edge_vtx, edge_mask, inc_ptr, inc_edges):
    m = edge_ptr.shape[0] - 1
    out = np.zeros(m, np.int64)
    stamp = np.full(m, -1, np.int64)
    for e in range(m):
        if not edge_mask[e]:
            continue
        t = 0
        for p in range(edge_ptr[e], edge_ptr[e + 1]):
            v = edge_vtx[p]
            for q in range(inc_ptr[v], inc_ptr[v + 1]):
                f = inc_edges[q]
                if f != e and edge_mask[f] and stamp[f] != e:
                    stamp[f] = e
                    t += 1
        out[e] = t
    return out


@kernel
def vertex_prob_sums(edge_ptr, edge_vtx, edge_mask, edge_prob, n):
    out = np.zeros(n, np.float64)
    for e in range(edge_ptr.shape[0] - 1):
        if edge_mask[e]:
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                out[edge_vtx[p]] += edge_prob[e]
    return out


@kernel
def isolated_selection(edge_ptr, edge_vtx, selected, n):
    m = edge_ptr.shape[0] - 1
    cnt = np.zeros(n, np.int64)
    for e in range(m):
        if selected[e]:
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                cnt[edge_vtx[p]] += 1
    out = np.zeros(m, np.bool_)
    for e in range(m):
        if selected[e]:
            ok = True
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                if cnt[edge_vtx[p]] != 1:
                    ok = False
                    break
            out[e] = ok
    return out


@kernel
def batch_isolated(edge_ptr, edge_vtx, sample_ptr, sample_edges, n):
    """Isolation flag for every (sample, selected edge) entry."""
    out = np.zeros(sample_edges.shape[0], np.bool_)
    cnt = np.zeros(n, np.int64)
    for s in range(sample_ptr.shape[0] - 1):
        lo = sample_ptr[s]
        hi = sample_ptr[s + 1]
        for q in range(lo, hi):
            e = sample_edges[q]
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                cnt[edge_vtx[p]] += 1
        for q in range(lo, hi):
            e = sample_edges[q]
            ok = True
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                if cnt[edge_vtx[p]] != 1:
                    ok = False
            out[q] = ok
        for q in range(lo, hi):
            e = sample_edges[q]
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                cnt[edge_vtx[p]] = 0
    return out


@kernel
def batch_matched_vertices(edge_ptr, edge_vtx, sample_ptr, sample_edges, n):
    """Per-sample indicator of v in V(M) where M is the isolated part of B."""
    ns = sample_ptr.shape[0] - 1
    iso = batch_isolated(edge_ptr, edge_vtx, sample_ptr, sample_edges, n)
    out = np.zeros((ns, n), np.bool_)
    for s in range(ns):
        for q in range(sample_ptr[s], sample_ptr[s + 1]):
            if iso[q]:
                e = sample_edges[q]
                for p in range(edge_ptr[e], edge_ptr[e + 1]):
                    out[s, edge_vtx[p]] = True
    return out


@kernel
def max_codegree(edge_ptr, edge_vtx, inc_ptr, inc_edges, n):
    cnt = np.zeros(n, np.int64)
    touched = np.empty(n, np.int64)
    best = 0
    for u in range(n):
        nt = 0
        for q in range(inc_ptr[u], inc_ptr[u + 1]):
            e = inc_edges[q]
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                v = edge_vtx[p]
                if v > u:
                    if cnt[v] == 0:
                        touched[nt] = v
                        nt += 1
                    cnt[v] += 1
        for t in range(nt):
            v = touched[t]
            if cnt[v] > best:
                best = cnt[v]
            cnt[v] = 0
    return best


@kernel
def stat_D_all(edge_ptr, edge_vtx, alive, n):
    """D(x) = #{e containing x : e minus x inside U} for every vertex x."""
    out = np.zeros(n, np.int64)
    for e in range(edge_ptr.shape[0] - 1):
        lo = edge_ptr[e]
        hi = edge_ptr[e + 1]
        a = 0
        for p in range(lo, hi):
            if alive[edge_vtx[p]]:
                a += 1
        size = hi - lo
        for p in range(lo, hi):
            v = edge_vtx[p]
            own = 1 if alive[v] else 0
            if a - own == size - 1:
                out[v] += 1
    return out


@kernel
def stat_Z(edge_ptr, edge_vtx, inc_ptr, inc_edges, alive, covered, xs):
    out = np.zeros(xs.shape[0], np.int64)
    for i in range(xs.shape[0]):
        x = xs[i]
        z = 0
        for q in range(inc_ptr[x], inc_ptr[x + 1]):
            e = inc_edges[q]
            size = edge_ptr[e + 1] - edge_ptr[e]
            cm = 0
            cu = 0
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                v = edge_vtx[p]
                if v == x:
                    continue
                if covered[v]:
                    cm += 1
                elif alive[v]:
                    cu += 1
            if cm == 1 and cu == size - 2:
                z += 1
        out[i] = z
    return out


@kernel
def _mark_edge(edge_ptr, edge_vtx, e, stamp, tag):
    for p in range(edge_ptr[e], edge_ptr[e + 1]):
        stamp[edge_vtx[p]] = tag


@kernel
def _edge_has(edge_ptr, edge_vtx, e, v):
    for p in range(edge_ptr[e], edge_ptr[e + 1]):
        if edge_vtx[p] == v:
            return True
    return False


@kernel
def _triple_count(edge_ptr, edge_vtx, inc_ptr, inc_edges, alive, matched, x, y,
                  central_matched, ymap, s1, s3):
    """Shared enumeration behind the Y and X pair statistics."""
    for q in range(inc_ptr[y], inc_ptr[y + 1]):
        e2 = inc_edges[q]
        for p in range(edge_ptr[e2], edge_ptr[e2 + 1]):
            v = edge_vtx[p]
            if v != y:
                ymap[v] = e2
    total = 0
    tag1 = 0
    tag3 = 0
    for q1 in range(inc_ptr[x], inc_ptr[x + 1]):
        e1 = inc_edges[q1]
        if _edge_has(edge_ptr, edge_vtx, e1, y):
            continue
        tag1 += 1
        _mark_edge(edge_ptr, edge_vtx, e1, s1, tag1)
        for p1 in range(edge_ptr[e1], edge_ptr[e1 + 1]):
            xp = edge_vtx[p1]
            if xp == x:
                continue
            # e1 minus x must be alive (Y) or e1 minus {x, x'} (X)
            ok1 = True
            for p in range(edge_ptr[e1], edge_ptr[e1 + 1]):
                v = edge_vtx[p]
                if v != x and not (central_matched and v == xp) and not alive[v]:
                    ok1 = False
                    break
            if not ok1:
                continue
            for q3 in range(inc_ptr[xp], inc_ptr[xp + 1]):
                e3 = inc_edges[q3]
                if e3 == e1:
                    continue
                if central_matched:
                    if not matched[e3]:
                        continue
                ok3 = True
                for p in range(edge_ptr[e3], edge_ptr[e3 + 1]):
                    v = edge_vtx[p]
                    if v == xp:
                        continue
                    if s1[v] == tag1 or v == y:
                        ok3 = False
                        break
                    if not central_matched and not alive[v]:
                        ok3 = False
                        break
                if not ok3:
                    continue
                if not central_matched and not alive[xp]:
                    continue
                tag3 += 1
                _mark_edge(edge_ptr, edge_vtx, e3, s3, tag3)
                for p3 in range(edge_ptr[e3], edge_ptr[e3 + 1]):
                    yp = edge_vtx[p3]
                    if yp == xp:
                        continue
                    e2 = ymap[yp]
                    if e2 < 0 or e2 == e3 or e2 == e1:
                        continue
                    ok2 = True
                    for p in range(edge_ptr[e2], edge_ptr[e2 + 1]):
                        v = edge_vtx[p]
                        if v == yp:
                            continue
                        if s3[v] == tag3 or s1[v] == tag1:
                            ok2 = False
                            break
                        if v != y and not alive[v]:
                            ok2 = False
                            break
                    if ok2 and not central_matched and not alive[yp]:
                        ok2 = False
                    if ok2:
                        total += 1
    for q in range(inc_ptr[y], inc_ptr[y + 1]):
        e2 = inc_edges[q]
        for p in range(edge_ptr[e2], edge_ptr[e2 + 1]):
            ymap[edge_vtx[p]] = -1
    return total


@kernel
def stat_Y(edge_ptr, edge_vtx, inc_ptr, inc_edges, alive, xs, ys):
    n = inc_ptr.shape[0] - 1
    m = edge_ptr.shape[0] - 1
    ymap = np.full(n, -1, np.int64)
    s1 = np.zeros(n, np.int64)
    s3 = np.zeros(n, np.int64)
    matched = np.zeros(m, np.bool_)
    out = np.zeros(xs.shape[0], np.int64)
    for i in range(xs.shape[0]):
        s1[:] = 0
        s3[:] = 0
        out[i] = _triple_count(edge_ptr, edge_vtx, inc_ptr, inc_edges, alive,
                               matched, xs[i], ys[i], False, ymap, s1, s3)
    return out


@kernel
def stat_X(edge_ptr, edge_vtx, inc_ptr, inc_edges, alive, matched, xs, ys):
    n = inc_ptr.shape[0] - 1
    ymap = np.full(n, -1, np.int64)
    s1 = np.zeros(n, np.int64)
    s3 = np.zeros(n, np.int64)
    out = np.zeros(xs.shape[0], np.int64)
    for i in range(xs.shape[0]):
        s1[:] = 0
        s3[:] = 0
        out[i] = _triple_count(edge_ptr, edge_vtx, inc_ptr, inc_edges, alive,
                               matched, xs[i], ys[i], True, ymap, s1, s3)
    return out


@kernel
def star_candidates(edge_ptr, edge_vtx, inc_ptr, inc_edges, l_edges, free, n):
    """Per (matched edge, slot) lists of edges that may serve in an augmenting star.

    Slot j of matched edge e_M is its j-th vertex v; a candidate is an edge
    through v meeting e_M only in v whose other vertices are all free.
    """
    nl = l_edges.shape[0]
    k = 0
    if nl > 0:
        k = edge_ptr[l_edges[0] + 1] - edge_ptr[l_edges[0]]
    mark = np.full(n, -1, np.int64)
    counts = np.zeros(nl * k + 1, np.int64)
    cand_ptr = counts
    cand_edges = np.empty(0, np.int64)
    fill = counts
    for rep in range(2):
        if rep == 1:
            cand_ptr = np.cumsum(counts)
            cand_edges = np.empty(cand_ptr[-1], np.int64)
            fill = cand_ptr[:-1].copy()
        for li in range(nl):
            em = l_edges[li]
            for p in range(edge_ptr[em], edge_ptr[em + 1]):
                mark[edge_vtx[p]] = li
            for j in range(k):
                v = edge_vtx[edge_ptr[em] + j]
                for q in range(inc_ptr[v], inc_ptr[v + 1]):
                    e = inc_edges[q]
                    if e == em:
                        continue
                    ok = True
                    for p in range(edge_ptr[e], edge_ptr[e + 1]):
                        w = edge_vtx[p]
                        if w == v:
                            continue
                        if mark[w] == li or not free[w]:
                            ok = False
                            break
                    if ok:
                        if rep == 0:
                            counts[li * k + j + 1] += 1
                        else:
                            cand_edges[fill[li * k + j]] = e
                            fill[li * k + j] += 1
            for p in range(edge_ptr[em], edge_ptr[em + 1]):
                mark[edge_vtx[p]] = -1
    return cand_ptr, cand_edges


@kernel
def _fits(edge_ptr, edge_vtx, e, used, slot_vertex):
    for p in range(edge_ptr[e], edge_ptr[e + 1]):
        w = edge_vtx[p]
        if w != slot_vertex and used[w] > 0:
            return False
    return True


@kernel
def _use(edge_ptr, edge_vtx, e, used, slot_vertex, delta):
    for p in range(edge_ptr[e], edge_ptr[e + 1]):
        w = edge_vtx[p]
        if w != slot_vertex:
            used[w] += delta


@kernel
def count_stars(edge_ptr, edge_vtx, cand_ptr, cand_edges, l_edges, k, li, forced, n):
    """Number of augmenting stars at matched edge ``l_edges[li]``.

    ``forced[j] >= 0`` pins slot j to that candidate edge.  The last free
    slot is counted by marking its candidates hit by already chosen vertices,
    so the cost is about D^(k-1) rather than D^k.
    """
    em = l_edges[li]
    base = edge_ptr[em]
    used = np.zeros(n, np.int64)
    for j in range(k):
        if forced[j] >= 0:
            if not _fits(edge_ptr, edge_vtx, forced[j], used, edge_vtx[base + j]):
                return 0
            _use(edge_ptr, edge_vtx, forced[j], used, edge_vtx[base + j], 1)
    free_slots = np.empty(k, np.int64)
    nf = 0
    for j in range(k):
        if forced[j] < 0:
            free_slots[nf] = j
            nf += 1
    if nf == 0:
        return 1
    last = free_slots[nf - 1]
    lv = edge_vtx[base + last]
    lo_last = cand_ptr[li * k + last]
    hi_last = cand_ptr[li * k + last + 1]
    n_last = hi_last - lo_last
    if n_last == 0:
        return 0
    # vertex -> candidates of the last slot containing it (linked lists)
    head = np.full(n, -1, np.int64)
    size_last = 0
    for q in range(lo_last, hi_last):
        e = cand_edges[q]
        size_last += edge_ptr[e + 1] - edge_ptr[e]
    nxt = np.empty(size_last, np.int64)
    who = np.empty(size_last, np.int64)
    pos = 0
    for q in range(lo_last, hi_last):
        e = cand_edges[q]
        for p in range(edge_ptr[e], edge_ptr[e + 1]):
            w = edge_vtx[p]
            if w == lv:
                continue
            who[pos] = q - lo_last
            nxt[pos] = head[w]
            head[w] = pos
            pos += 1
    hit = np.full(n_last, -1, np.int64)
    chosen = np.empty(k * (edge_ptr[em + 1] - edge_ptr[em]) * 4 + 16, np.int64)
    nchosen = 0
    for j in range(k):
        if forced[j] >= 0:
            e = forced[j]
            for p in range(edge_ptr[e], edge_ptr[e + 1]):
                w = edge_vtx[p]
                if w != edge_vtx[base + j]:
                    chosen[nchosen] = w
                    nchosen += 1
    depth_n = nf - 1
    idx = np.zeros(k + 1, np.int64)
    pick = np.full(k + 1, -1, np.int64)
    mark_counter = 0
    total = 0
    if depth_n == 0:
        mark_counter += 1
        bad = 0
        for c in range(nchosen):
            pp = head[chosen[c]]
            while pp >= 0:
                if hit[who[pp]] != mark_counter:
                    hit[who[pp]] = mark_counter
                    bad += 1
                pp = nxt[pp]
        return n_last - bad
    d = 0
    idx[0] = cand_ptr[li * k + free_slots[0]]
    while d >= 0:
        j = free_slots[d]
        vj = edge_vtx[base + j]
        hi = cand_ptr[li * k + j + 1]
        if pick[d] >= 0:
            e_prev = pick[d]
            _use(edge_ptr, edge_vtx, e_prev, used, vj, -1)
            nchosen -= edge_ptr[e_prev + 1] - edge_ptr[e_prev] - 1
            pick[d] = -1
        advanced = False
        while idx[d] < hi:
            e = cand_edges[idx[d]]
            idx[d] += 1
            if _fits(edge_ptr, edge_vtx, e, used, vj):
                _use(edge_ptr, edge_vtx, e, used, vj, 1)
                for p in range(edge_ptr[e], edge_ptr[e + 1]):
                    w = edge_vtx[p]
                    if w != vj:
                        chosen[nchosen] = w
                        nchosen += 1
                pick[d] = e
                advanced = True
                break
        if not advanced:
            d -= 1
            continue
        if d + 1 == depth_n:
            mark_counter += 1
            bad = 0
            for c in range(nchosen):
                pp = head[chosen[c]]
                while pp >= 0:
                    if hit[who[pp]] != mark_counter:
                        hit[who[pp]] = mark_counter
                        bad += 1
                    pp = nxt[pp]
            total += n_last - bad
        else:
            d += 1
            idx[d] = cand_ptr[li * k + free_slots[d]]
            pick[d] = -1
    return total


@kernel
def enumerate_stars(edge_ptr, edge_vtx, cand_ptr, cand_edges, l_edges, k, cap, n):
    """All augmenting stars, at most ``cap`` per matched edge.

    Returns (stars[S, k] of edge ids ordered by slot, owner[S] index into
    l_edges, truncated[L]).
    """
    nl = l_edges.shape[0]
    used = np.zeros(n, np.int64)
    counts = np.zeros(nl + 1, np.int64)
    truncated = np.zeros(nl, np.bool_)
    idx = np.zeros(k + 1, np.int64)
    pick = np.full(k + 1, -1, np.int64)
    stars = np.empty((0, k), np.int64)
    owner = np.empty(0, np.int64)
    offs = counts
    for rep in range(2):
        if rep == 1:
            offs = np.cumsum(counts)
            stars = np.empty((offs[-1], k), np.int64)
            owner = np.empty(offs[-1], np.int64)
        for li in range(nl):
            em = l_edges[li]
            base = edge_ptr[em]
            empty = False
            for j in range(k):
                if cand_ptr[li * k + j + 1] == cand_ptr[li * k + j]:
                    empty = True
            if empty or k == 0:
                continue
            produced = 0
            d = 0
            idx[0] = cand_ptr[li * k]
            pick[:] = -1
            stop = False
            while d >= 0 and not stop:
                vj = edge_vtx[base + d]
                hi = cand_ptr[li * k + d + 1]
                if pick[d] >= 0:
                    _use(edge_ptr, edge_vtx, pick[d], used, vj, -1)
                    pick[d] = -1
                advanced = False
                while idx[d] < hi:
                    e = cand_edges[idx[d]]
                    idx[d] += 1
                    if _fits(edge_ptr, edge_vtx, e, used, vj):
                        advanced = True
                        if d == k - 1:
                            if produced >= cap:
                                truncated[li] = True
                                stop = True
                                break
                            if rep == 1:
                                row = offs[li] + produced
                                for t in range(k - 1):
                                    stars[row, t] = pick[t]
                                stars[row, k - 1] = e
                                owner[row] = li
                            produced += 1
                            advanced = False
                            continue
                        _use(edge_ptr, edge_vtx, e, used, vj, 1)
                        pick[d] = e
                        break
                if stop:
                    break
                if not advanced:
                    d -= 1
                    continue
                d += 1
                idx[d] = cand_ptr[li * k + d]
                pick[d] = -1
            for t in range(k):
                if pick[t] >= 0:
                    _use(edge_ptr, edge_vtx, pick[t], used, edge_vtx[base + t], -1)
                    pick[t] = -1
            if rep == 0:
                counts[li + 1] = produced
    return stars, owner, truncated


@kernel
def first_fit(edge_ptr, edge_vtx, inc_ptr, inc_edges, order, colors, base):
    """Colour ``order`` edges with fresh colours base, base+1, ... first-fit."""
    out = colors.copy()
    nfresh = order.shape[0] + 1
    stamp = np.full(nfresh, -1, np.int64)
    for t in range(order.shape[0]):
        e = order[t]
        for p in range(edge_ptr[e], edge_ptr[e + 1]):
            v = edge_vtx[p]
            for q in range(inc_ptr[v], inc_ptr[v + 1]):
                f = inc_edges[q]
                c = out[f]
                if f != e and c >= base:
                    stamp[c - base] = t
        c = 0
        while stamp[c] == t:
            c += 1
        out[e] = base + c
    return out


@kernel
def _pair_used(bits, a, b):
    return (bits[a, b >> 6] >> np.uint64(b & 63)) & np.uint64(1)


@kernel
def _pair_set(bits, a, b, value):
    if value:
        bits[a, b >> 6] |= np.uint64(1) << np.uint64(b & 63)
        bits[b, a >> 6] |= np.uint64(1) << np.uint64(a & 63)
    else:
        bits[a, b >> 6] &= ~(np.uint64(1) << np.uint64(b & 63))
        bits[b, a >> 6] &= ~(np.uint64(1) << np.uint64(a & 63))


@kernel
def _set_edge_pairs(bits, row, value):
    for i in range(row.shape[0]):
        for j in range(i + 1, row.shape[0]):
            _pair_set(bits, row[i], row[j], value)


@kernel
def insert_rows(rows, edges, n_edges, deficit, bits):
    """Add each candidate row that keeps the hypergraph simple and within
    the degree budget.  Returns the new edge count."""
    k = rows.shape[1]
    for r in range(rows.shape[0]):
        ok = True
        for i in range(k):
            a = rows[r, i]
            if deficit[a] <= 0:
                ok = False
                break
            for j in range(i + 1, k):
                b = rows[r, j]
                if a == b or _pair_used(bits, a, b):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            for i in range(k):
                edges[n_edges, i] = rows[r, i]
                deficit[rows[r, i]] -= 1
            _set_edge_pairs(bits, rows[r], True)
            n_edges += 1
    return n_edges


@kernel
def repair_regular(k, tol, rand, edges, n_edges, deficit, bits, max_steps):
    """Finish a partial fill until every deficit is at most ``tol``.

    Each step picks a vertex u with deficit above ``tol`` and scans the other
    deficient vertices from a random offset for a compatible k-set through
    u; if none exists a uniformly random edge is deleted.  ``rand`` supplies
    the random words.  Returns (n_edges, words used, steps, status) with
    status 0 = done, 1 = random words exhausted, 2 = step budget spent.
    """
    n = deficit.shape[0]
    needy = np.empty(n, np.int64)
    chosen = np.empty(k, np.int64)
    ptr = 0
    steps = 0
    while steps < max_steps:
        nn = 0
        nb = 0
        for v in range(n):
            if deficit[v] > 0:
                needy[nn] = v
                nn += 1
                if deficit[v] > tol:
                    nb += 1
        if nb == 0:
            return n_edges, ptr, steps, 0
        if ptr + 3 > rand.shape[0]:
            return n_edges, ptr, steps, 1
        pick = np.int64(rand[ptr] % np.uint64(nb))
        ptr += 1
        u = -1
        for t in range(nn):
            if deficit[needy[t]] > tol:
                if pick == 0:
                    u = needy[t]
                    break
                pick -= 1
        chosen[0] = u
        s = 1
        start = np.int64(rand[ptr] % np.uint64(nn))
        ptr += 1
        for t in range(nn):
            w = needy[(start + t) % nn]
            if w == u:
                continue
            ok = True
            for i in range(s):
                if _pair_used(bits, chosen[i], w):
                    ok = False
                    break
            if ok:
                chosen[s] = w
                s += 1
                if s == k:
                    break
        if s == k:
            row = np.sort(chosen)
            for i in range(k):
                edges[n_edges, i] = row[i]
                deficit[row[i]] -= 1
            _set_edge_pairs(bits, row, True)
            n_edges += 1
        elif n_edges > 0:
            idx = np.int64(rand[ptr] % np.uint64(n_edges))
            ptr += 1
            _set_edge_pairs(bits, edges[idx], False)
            for i in range(k):
                deficit[edges[idx, i]] += 1
                edges[idx, i] = edges[n_edges - 1, i]
            n_edges -= 1
        steps += 1
    return n_edges, ptr, steps, 2


@kernel
def _adjacent(nbr, deg, u, v):
    if deg[u] > deg[v]:
        u, v = v, u
    for j in range(deg[u]):
        if nbr[u, j] == v:
            return True
    return False


@kernel
def _link(nbr, deg, aux, u, v):
    nbr[u, deg[u]] = v
    aux[u, deg[u]] = True
    deg[u] += 1
    nbr[v, deg[v]] = u
    aux[v, deg[v]] = True
    deg[v] += 1


@kernel
def _unlink_half(nbr, deg, aux, u, v):
    for j in range(deg[u]):
        if nbr[u, j] == v:
            last = deg[u] - 1
            nbr[u, j] = nbr[u, last]
            aux[u, j] = aux[u, last]
            nbr[u, last] = -1
            aux[u, last] = False
            deg[u] = last
            return


@kernel
def link_pairs(nbr, deg, aux, s, us, vs):
    """Add each proposed pair that is new, loop-free and within degree s."""
    added = 0
    for t in range(us.shape[0]):
        u = us[t]
        v = vs[t]
        if u != v and deg[u] < s and deg[v] < s and not _adjacent(nbr, deg, u, v):
            _link(nbr, deg, aux, u, v)
            added += 1
    return added


@kernel
def regular_repair(nbr, deg, aux, s, rand, max_steps):
    """Raise every degree to exactly s by direct links and by splitting
    auxiliary edges (a, b) into (u, a), (w, b).  Original edges are never
    touched.  Returns (words used, steps, status) with status 0 = done,
    1 = random words exhausted, 2 = step budget spent."""
    n = deg.shape[0]
    low = np.empty(n, np.int64)
    ptr = 0
    steps = 0
    while steps < max_steps:
        nd = 0
        for v in range(n):
            if deg[v] < s:
                low[nd] = v
                nd += 1
        if nd == 0:
            return ptr, steps, 0
        if ptr + 6 > rand.shape[0]:
            return ptr, steps, 1
        steps += 1
        u = low[np.int64(rand[ptr] % np.uint64(nd))]
        start = np.int64(rand[ptr + 1] % np.uint64(nd))
        ptr += 2
        partner = -1
        other = -1
        for t in range(nd):
            v = low[(start + t) % nd]
            if v == u:
                continue
            if other < 0:
                other = v
            if not _adjacent(nbr, deg, u, v):
                partner = v
                break
        if partner >= 0:
            _link(nbr, deg, aux, u, partner)
            continue
        w = u if s - deg[u] >= 2 else other
        if w < 0:
            return ptr, steps, 2
        a = np.int64(rand[ptr] % np.uint64(n))
        ptr += 1
        if deg[a] == 0:
            continue
        j = np.int64(rand[ptr] % np.uint64(deg[a]))
        ptr += 1
        if not aux[a, j]:
            continue
        b = nbr[a, j]
        if rand[ptr] & np.uint64(1):
            a, b = b, a
        ptr += 1
        if a == u or b == w or _adjacent(nbr, deg, u, a) or _adjacent(nbr, deg, w, b):
            continue
        _unlink_half(nbr, deg, aux, a, b)
        _unlink_half(nbr, deg, aux, b, a)
        _link(nbr, deg, aux, u, a)
        _link(nbr, deg, aux, w, b)
    return ptr, steps, 2
