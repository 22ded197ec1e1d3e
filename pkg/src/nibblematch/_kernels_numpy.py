"""Vectorized numpy versions of the kernels in ``_loops``.

Routines that are inherently sequential (pair statistics, star enumeration,
first-fit colouring) are re-exported from ``_loops``; with the numpy backend
they run as plain Python.
"""

import numpy as np

from ._loops import (  # noqa: F401
    count_stars,
    enumerate_stars,
    first_fit,
    insert_rows,
    link_pairs,
    regular_repair,
    repair_regular,
    star_candidates,
    stat_X,
    stat_Y,
)

_BINCOUNT_LIMIT = 50_000_000


def _edge_index(edge_ptr):
    return np.repeat(np.arange(edge_ptr.shape[0] - 1, dtype=np.int64), np.diff(edge_ptr))


def incidence(edge_ptr, edge_vtx, n):
    order = np.argsort(edge_vtx, kind="stable")
    inc_edges = _edge_index(edge_ptr)[order]
    inc_ptr = np.zeros(n + 1, np.int64)
    inc_ptr[1:] = np.cumsum(np.bincount(edge_vtx, minlength=n))
    return inc_ptr, inc_edges


def alive_edge_mask(edge_ptr, edge_vtx, alive):
    m = edge_ptr.shape[0] - 1
    dead = np.bincount(_edge_index(edge_ptr), weights=~alive[edge_vtx], minlength=m)
    return dead == 0


def masked_degrees(edge_ptr, edge_vtx, edge_mask, n):
    keep = edge_mask[_edge_index(edge_ptr)]
    return np.bincount(edge_vtx[keep], minlength=n).astype(np.int64)


def intersect_counts_simple(edge_ptr, edge_vtx, edge_mask, deg):
    m = edge_ptr.shape[0] - 1
    t = np.bincount(_edge_index(edge_ptr), weights=deg[edge_vtx] - 1, minlength=m)
    return np.where(edge_mask, np.rint(t), 0).astype(np.int64)


def _group_pairs(keys, values):
    """All ordered (a, b) value pairs that share a key, a != b as positions."""
    order = np.argsort(keys, kind="stable")
    k = keys[order]
    v = values[order]
    if k.size == 0:
        return v[:0], v[:0]
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    sizes = np.diff(np.r_[starts, k.size])
    gsize = np.repeat(sizes, sizes)
    gstart = np.repeat(starts, sizes)
    a = np.repeat(np.arange(k.size), gsize)
    offs = np.arange(a.size) - np.repeat(np.cumsum(gsize) - gsize, gsize)
    b = np.repeat(gstart, gsize) + offs
    keep = a != b
    return v[a[keep]], v[b[keep]]


def intersect_counts_exact(edge_ptr, edge_vtx, edge_mask, inc_ptr, inc_edges):
    m = edge_ptr.shape[0] - 1
    eidx = _edge_index(edge_ptr)
    keep = edge_mask[eidx]
    ea, eb = _group_pairs(edge_vtx[keep], eidx[keep])
    distinct = ea != eb
    pairs = np.unique(ea[distinct] * m + eb[distinct])
    return np.bincount(pairs // max(m, 1), minlength=m).astype(np.int64)


def vertex_prob_sums(edge_ptr, edge_vtx, edge_mask, edge_prob, n):
    eidx = _edge_index(edge_ptr)
    w = np.where(edge_mask[eidx], edge_prob[eidx], 0.0)
    return np.bincount(edge_vtx, weights=w, minlength=n)


def isolated_selection(edge_ptr, edge_vtx, selected, n):
    m = edge_ptr.shape[0] - 1
    eidx = _edge_index(edge_ptr)
    cnt = np.bincount(edge_vtx[selected[eidx]], minlength=n)
    bad = np.bincount(eidx, weights=cnt[edge_vtx] != 1, minlength=m)
    return selected & (bad == 0)


def _expand(edge_ptr, edge_vtx, sample_ptr, sample_edges):
    sizes = np.diff(edge_ptr)[sample_edges]
    entry = np.repeat(np.arange(sample_edges.size), sizes)
    offs = np.arange(entry.size) - np.repeat(np.cumsum(sizes) - sizes, sizes)
    vtx = edge_vtx[np.repeat(edge_ptr[sample_edges], sizes) + offs]
    sid = np.repeat(np.arange(sample_ptr.size - 1), np.diff(sample_ptr))[entry]
    return entry, sid, vtx


def batch_isolated(edge_ptr, edge_vtx, sample_ptr, sample_edges, n):
    entry, sid, vtx = _expand(edge_ptr, edge_vtx, sample_ptr, sample_edges)
    keys = sid * n + vtx
    ns = sample_ptr.size - 1
    if ns * n <= _BINCOUNT_LIMIT:
        cnt = np.bincount(keys, minlength=ns * n)[keys]
    else:
        _, inv, c = np.unique(keys, return_inverse=True, return_counts=True)
        cnt = c[inv]
    bad = np.bincount(entry, weights=cnt != 1, minlength=sample_edges.size)
    return bad == 0


def batch_matched_vertices(edge_ptr, edge_vtx, sample_ptr, sample_edges, n):
    ns = sample_ptr.size - 1
    iso = batch_isolated(edge_ptr, edge_vtx, sample_ptr, sample_edges, n)
    entry, sid, vtx = _expand(edge_ptr, edge_vtx, sample_ptr, sample_edges)
    hit = iso[entry]
    out = np.zeros((ns, n), np.bool_)
    out[sid[hit], vtx[hit]] = True
    return out


def max_codegree(edge_ptr, edge_vtx, inc_ptr, inc_edges, n):
    sizes = np.diff(edge_ptr)
    best = 0
    for s in np.unique(sizes):
        if s < 2:
            continue
        rows = np.flatnonzero(sizes == s)
        mat = edge_vtx[edge_ptr[rows][:, None] + np.arange(s)]
        iu, ju = np.triu_indices(s, 1)
        keys = (mat[:, iu] * n + mat[:, ju]).ravel()
        if keys.size:
            keys.sort()
            starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
            runs = np.diff(np.r_[starts, keys.size])
            best = max(best, int(runs.max()))
    return best


def stat_D_all(edge_ptr, edge_vtx, alive, n):
    m = edge_ptr.shape[0] - 1
    eidx = _edge_index(edge_ptr)
    a = np.bincount(eidx, weights=alive[edge_vtx], minlength=m)
    sizes = np.diff(edge_ptr)
    hit = (a[eidx] - alive[edge_vtx]) == sizes[eidx] - 1
    return np.bincount(edge_vtx[hit], minlength=n).astype(np.int64)


def stat_Z(edge_ptr, edge_vtx, inc_ptr, inc_edges, alive, covered, xs):
    out = np.zeros(xs.shape[0], np.int64)
    for i, x in enumerate(xs):
        edges = inc_edges[inc_ptr[x]:inc_ptr[x + 1]]
        if edges.size == 0:
            continue
        sizes = np.diff(edge_ptr)[edges]
        pos = np.repeat(edge_ptr[edges], sizes) + (
            np.arange(sizes.sum()) - np.repeat(np.cumsum(sizes) - sizes, sizes))
        vtx = edge_vtx[pos]
        owner = np.repeat(np.arange(edges.size), sizes)
        other = vtx != x
        cm = np.bincount(owner, weights=other & covered[vtx], minlength=edges.size)
        cu = np.bincount(owner, weights=other & ~covered[vtx] & alive[vtx], minlength=edges.size)
        out[i] = int(np.count_nonzero((cm == 1) & (cu == sizes - 2)))
    return out
