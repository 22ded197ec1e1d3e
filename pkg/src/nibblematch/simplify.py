"""Codegree reduction: colour splitting, thinning, conflict-graph
regularization and isolated selection, ending in a simple subhypergraph."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _rng, kernels
from .hypergraph import Hypergraph

DEFAULT_RETRIES = 50
DEFAULT_SLACK = 2.0

_SPLIT, _THIN, _REG, _ISO = _rng.COLOR_SPLIT, _rng.THIN, _rng.REGULARIZE, _rng.ISOLATE


class RetryExhausted(RuntimeError):
    """No attempt met its audit; ``best`` holds the least-bad attempt."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class StageFailure(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class Stage:
    """Output of one edge-deleting step: kept ids index the stage input."""

    hypergraph: Hypergraph
    kept: np.ndarray
    audit: dict


def _subset(H: Hypergraph, keep: np.ndarray) -> Stage:
    ids = np.flatnonzero(keep)
    return Stage(H.edge_subset(ids), ids, {})


def _band_audit(H: Hypergraph, sub: Hypergraph, expected_factor: float, halfwidth, slack):
    """Per-vertex |deg_sub - factor*deg_H| <= slack * halfwidth(deg_H)."""
    d = H.degrees().astype(float)
    got = sub.degrees().astype(float)
    mean = expected_factor * d
    width = slack * halfwidth(d)
    err = np.abs(got - mean)
    active = d > 0
    worst = float((err[active] / np.maximum(width[active], 1e-12)).max()) if active.any() else 0.0
    return {
        "degree_min": int(got.min()) if got.size else 0,
        "degree_max": int(got.max()) if got.size else 0,
        "band_factor": expected_factor,
        "band_violations": int((err > width + 1e-9).sum()),
        "band_worst": worst,
    }


def _split_classes(H: Hypergraph, classes: int, codegree_cap: int, halfwidth, seed: int,
                   key: int, retries: int, slack: float, name: str) -> Stage:
    """Colour edges uniformly with ``classes`` colours, keep one class and
    audit codegree and the degree band; Las Vegas over ``retries`` draws."""
    if classes <= 1:
        st = Stage(H, np.arange(H.num_edges), {})
        st.audit = {"stage": name, "classes": 1, "attempts": 0,
                    "codegree_before": H.max_codegree(), "codegree_after": H.max_codegree(),
                    "codegree_cap": codegree_cap, "band_ok": True, "codegree_ok": True,
                    **_band_audit(H, H, 1.0, halfwidth, slack)}
        return st
    best = None
    before = H.max_codegree()
    for attempt in range(retries):
        rng = _rng.stream(seed, key, attempt)
        colour = rng.integers(0, classes, size=H.num_edges)
        pick = int(rng.integers(classes))
        st = _subset(H, colour == pick)
        codeg = st.hypergraph.max_codegree()
        band = _band_audit(H, st.hypergraph, 1.0 / classes, halfwidth, slack)
        st.audit = {"stage": name, "classes": classes, "attempts": attempt + 1,
                    "codegree_before": before, "codegree_after": codeg,
                    "codegree_cap": codegree_cap, "codegree_ok": codeg <= codegree_cap,
                    "band_ok": band["band_violations"] == 0, **band}
        score = (not st.audit["codegree_ok"], band["band_violations"], band["band_worst"])
        if best is None or score < best[0]:
            best = (score, st)
        if st.audit["codegree_ok"] and st.audit["band_ok"]:
            return st
    raise RetryExhausted(f"{name}: no class met the audit in {retries} attempts", best[1])


def _max_degree(H: Hypergraph) -> int:
    return int(H.degrees().max()) if H.num_edges else 0


def color_split(H: Hypergraph, C: int, seed: int = 0, retries: int = DEFAULT_RETRIES,
                slack: float = DEFAULT_SLACK, D: float | None = None) -> Stage:
    """Keep one of C random colour classes; codegree drops to about log(D/C)."""
    D = float(D if D is not None else _max_degree(H))
    C = int(C)
    if C < 1:
        raise ValueError("C must be positive")
    if H.max_codegree() > C:
        raise ValueError("codegree exceeds C")
    if D > 1 and not (math.log(D) <= C <= D):
        warnings.warn("C outside the log D .. D range", RuntimeWarning, stacklevel=2)
    cap = max(1, math.ceil(math.log(D / C))) if D > C else 1
    logd = math.log(max(D, 2.0))
    return _split_classes(H, C, cap, lambda d: 4 * np.sqrt(d / C * logd), seed, _SPLIT,
                          retries, slack, "color_split")


def thin(H: Hypergraph, delta: float, seed: int = 0, retries: int = DEFAULT_RETRIES,
         slack: float = DEFAULT_SLACK, D: float | None = None) -> Stage:
    """Keep one of ceil(D^delta) random classes; codegree drops to ceil(2/delta)."""
    if not 0 < delta < 1 / 3:
        raise ValueError("delta must lie in (0, 1/3)")
    D = float(D if D is not None else _max_degree(H))
    classes = max(1, math.ceil(D ** delta)) if D >= 1 else 1
    logd = math.log(max(D, 2.0))
    if H.max_codegree() > max(1.0, logd):
        warnings.warn("thinning input codegree above log D", RuntimeWarning, stacklevel=2)
    return _split_classes(H, classes, math.ceil(2 / delta),
                          lambda d: 4 * np.sqrt(d / classes * logd), seed, _THIN,
                          retries, slack, "thin")


# ---------------------------------------------------------------------------
# conflict graph

@dataclass
class ConflictGraph:
    """Graph on edge ids; ``pairs`` (sorted rows, a < b) lists adjacencies and
    ``original`` flags the ones coming from |e1 & e2| >= 2."""

    n: int
    pairs: np.ndarray
    original: np.ndarray
    s: int | None = None

    def degrees(self) -> np.ndarray:
        return np.bincount(self.pairs.ravel(), minlength=self.n) if self.pairs.size else \
            np.zeros(self.n, np.int64)

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def contains(self, other: "ConflictGraph") -> bool:
        if other.pairs.shape[0] == 0:
            return True
        mine = self.pairs[:, 0] * self.n + self.pairs[:, 1]
        theirs = other.pairs[:, 0] * other.n + other.pairs[:, 1]
        return bool(np.isin(theirs, mine).all())

    def neighbor_hits(self, mask: np.ndarray) -> np.ndarray:
        """For each node, how many neighbours are in ``mask``."""
        if self.pairs.size == 0:
            return np.zeros(self.n, np.int64)
        a, b = self.pairs[:, 0], self.pairs[:, 1]
        return (np.bincount(a, weights=mask[b], minlength=self.n)
                + np.bincount(b, weights=mask[a], minlength=self.n)).astype(np.int64)


def _pack(n, a, b):
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    key = np.unique(lo * n + hi)
    return np.stack([key // n, key % n], axis=1) if key.size else np.zeros((0, 2), np.int64)


def build_conflict_graph(H: Hypergraph) -> ConflictGraph:
    """Edges of H are adjacent when they share two or more vertices."""
    m = H.num_edges
    if m == 0:
        return ConflictGraph(0, np.zeros((0, 2), np.int64), np.zeros(0, bool))
    n = H.num_vertices
    keys, owners = [], []
    sizes = H.edge_sizes()
    for size in np.unique(sizes).tolist():
        ids = np.flatnonzero(sizes == size)
        if size < 2:
            continue
        mat = np.stack([H.edge(e) for e in ids]) if H.uniformity is None else H.edge_matrix()[ids]
        i, j = np.triu_indices(size, 1)
        keys.append((mat[:, i] * n + mat[:, j]).ravel())
        owners.append(np.repeat(ids, i.size))
    if not keys:
        return ConflictGraph(m, np.zeros((0, 2), np.int64), np.zeros(0, bool))
    key = np.concatenate(keys)
    own = np.concatenate(owners)
    order = np.lexsort((own, key))
    key, own = key[order], own[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    lengths = np.diff(np.r_[starts, key.size])
    a_parts, b_parts = [], []
    for g in np.unique(lengths[lengths > 1]).tolist():
        st = starts[lengths == g]
        block = own[st[:, None] + np.arange(g)]
        i, j = np.triu_indices(g, 1)
        a_parts.append(block[:, i].ravel())
        b_parts.append(block[:, j].ravel())
    if not a_parts:
        return ConflictGraph(m, np.zeros((0, 2), np.int64), np.zeros(0, bool))
    pairs = _pack(m, np.concatenate(a_parts), np.concatenate(b_parts))
    return ConflictGraph(m, pairs, np.ones(pairs.shape[0], bool))


def regularize(G: ConflictGraph, s: int, seed: int = 0, max_steps: int | None = None) -> ConflictGraph:
    """Exactly s-regular simple supergraph of G on the same nodes.

    Random stub pairing, then a repair walk that links deficient nodes or
    splits an added edge (a, b) into (u, a) and (w, b).
    """
    if s % 2:
        raise ValueError("s must be even")
    if s < G.max_degree:
        raise ValueError(f"s = {s} below the maximum degree {G.max_degree}")
    n = G.n
    if s == 0 or n == 0:
        return ConflictGraph(n, G.pairs.copy(), G.original.copy(), s)
    if n <= s:
        raise ValueError(f"no {s}-regular simple graph on {n} nodes")
    if n < 2 * G.max_degree ** 3:
        warnings.warn("conflict graph smaller than 2 * maxdeg^3", RuntimeWarning, stacklevel=2)
    nbr = np.full((n, s), -1, np.int64)
    aux = np.zeros((n, s), bool)
    deg = np.zeros(n, np.int64)
    for a, b in G.pairs.tolist():
        nbr[a, deg[a]] = b
        deg[a] += 1
        nbr[b, deg[b]] = a
        deg[b] += 1
    rng = _rng.stream(seed, _REG)
    for _ in range(3):
        stubs = np.repeat(np.arange(n), s - deg)
        if stubs.size < 2:
            break
        rng.shuffle(stubs)
        stubs = stubs[: stubs.size // 2 * 2].reshape(-1, 2)
        if kernels.link_pairs(nbr, deg, aux, s, stubs[:, 0], stubs[:, 1]) == 0:
            break
    budget = max_steps or 200 * n + 10 * s * n
    while True:
        rand = rng.integers(0, 2**63, size=max(4096, 8 * int((s - deg).sum())), dtype=np.uint64)
        _, steps, status = kernels.regular_repair(nbr, deg, aux, s, rand, budget)
        budget -= steps
        if status == 0:
            break
        if status == 2 or budget <= 0:
            raise ValueError(f"regularization did not converge ({int((s - deg).sum())} stubs left)")
    rows = np.repeat(np.arange(n), s)
    flat = nbr.ravel()
    half = rows < flat
    pairs = np.stack([rows[half], flat[half]], axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs = pairs[order]
    original = ~aux.ravel()[half][order]
    return ConflictGraph(n, pairs, original, s)


def isolate_select(H: Hypergraph, G: ConflictGraph, T: int, seed: int = 0,
                   retries: int = DEFAULT_RETRIES, slack: float = DEFAULT_SLACK,
                   D: float | None = None) -> Stage:
    """Keep each edge with probability 1/T, then drop kept edges with a kept
    neighbour in G.  Audits the per-vertex survivor band."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if G.n != H.num_edges:
        raise ValueError("conflict graph does not match the hypergraph")
    s = G.s if G.s is not None else G.max_degree
    D = float(D if D is not None else _max_degree(H))
    logd = math.log(max(D, 2.0))
    factor = (1 / T) * (1 - 1 / T) ** s
    halfwidth = lambda d: 4 * s * np.sqrt((s + 1) * d / T * logd)  # noqa: E731
    best = None
    for attempt in range(retries):
        rng = _rng.stream(seed, _ISO, attempt)
        keep = rng.random(H.num_edges) < 1 / T
        isolated = keep & (G.neighbor_hits(keep) == 0)
        st = _subset(H, isolated)
        band = _band_audit(H, st.hypergraph, factor, halfwidth, slack)
        st.audit = {"stage": "isolate_select", "T": T, "s": s, "attempts": attempt + 1,
                    "sampled": int(keep.sum()), "codegree_before": H.max_codegree(),
                    "codegree_after": st.hypergraph.max_codegree(),
                    "band_ok": band["band_violations"] == 0, **band}
        score = (band["band_violations"], band["band_worst"])
        if best is None or score < best[0]:
            best = (score, st)
        if st.audit["band_ok"]:
            return st
    raise RetryExhausted(f"isolate_select: band missed in {retries} attempts", best[1])


def conflict_degree(k: int, delta: float, policy: str = "window", max_degree: int = 0) -> int:
    """Regular degree s for the conflict graph.

    "window": smallest even integer above 1 + 2 C(k,2)/delta, which is the
    even integer of the interval (1 + 2 C(k,2)/delta, 3 + 2 C(k,2)/delta)
    whenever that interval has one.  "min_feasible": smallest even integer
    at least the conflict graph's maximum degree.
    """
    if policy == "window":
        lo = 1 + 2 * math.comb(k, 2) / delta
        s = math.floor(lo) + 1
        return s + (s % 2)
    if policy == "min_feasible":
        return max_degree + (max_degree % 2)
    raise ValueError(f"unknown s policy {policy!r}")


@dataclass
class SimplifyResult:
    hypergraph: Hypergraph
    kept: np.ndarray
    s: int
    report: dict = field(default_factory=dict)


def _run(stage, fn, stages, strict):
    try:
        st = fn()
    except RetryExhausted as exc:
        if strict or exc.best is None:
            raise StageFailure(stage, exc) from exc
        st = exc.best
        st.audit["exhausted"] = True
    except ValueError as exc:
        raise StageFailure(stage, exc) from exc
    stages.append(st.audit)
    return st


def simple_subhypergraph(H: Hypergraph, C: float, delta: float, seed: int = 0,
                         retries: int = DEFAULT_RETRIES, slack: float = DEFAULT_SLACK,
                         s_policy: str = "window", strict: bool = False,
                         D: float | None = None) -> SimplifyResult:
    """Simple near-regular subhypergraph of H (codegree <= C).

    Chains color_split, thin, the conflict graph, regularize and
    isolate_select with T = ceil(log(D/C)).  With ``strict=False`` a stage
    whose retries run out continues with its best attempt and the report
    records it.  When no s-regular supergraph exists on the conflict graph's
    node count, selection runs on the unregularized graph and the report
    says so.
    """
    k = H.uniformity
    if k is None:
        raise ValueError("simplification needs a uniform hypergraph")
    D = float(D if D is not None else _max_degree(H))
    logd = math.log(D) if D > 1 else 0.0
    report: dict = {"D": D, "C_declared": C, "delta": delta, "seed": seed,
                    "s_policy": s_policy, "slack": slack}
    if C < logd:
        C = logd
    C_int = max(1, math.ceil(C))
    report["C"] = C_int
    stages: list[dict] = []
    report["stages"] = stages
    ids = np.arange(H.num_edges)

    st = _run("color_split", lambda: color_split(H, C_int, seed, retries, slack, D), stages, strict)
    ids = ids[st.kept]
    work = st.hypergraph
    if work.num_edges:
        st = _run("thin", lambda: thin(work, delta, seed, retries, slack, D / C_int),
                  stages, strict)
        ids = ids[st.kept]
        work = st.hypergraph

    G = build_conflict_graph(work)
    s = conflict_degree(k, delta, s_policy, G.max_degree)
    report["conflict"] = {"nodes": G.n, "edges": int(G.pairs.shape[0]),
                          "max_degree": G.max_degree, "s": s,
                          "hypothesis_ok": bool(G.n > 2 * G.max_degree ** 3)}
    regularized = True
    if s < G.max_degree:
        raise StageFailure("regularize", ValueError("s below the conflict graph maximum degree"))
    if G.n <= s and G.n > 0 and s > 0:
        regularized = False
        Greg = ConflictGraph(G.n, G.pairs, G.original, s)
    else:
        try:
            Greg = regularize(G, s, seed)
        except ValueError as exc:
            raise StageFailure("regularize", exc) from exc
    report["conflict"]["regularized"] = regularized
    if regularized and G.n:
        dg = Greg.degrees()
        report["conflict"]["regular_ok"] = bool((dg == s).all() and Greg.contains(G))

    T = max(1, math.ceil(math.log(D / C_int))) if D > C_int else 1
    report["T"] = T
    if work.num_edges:
        st = _run("isolate_select",
                  lambda: isolate_select(work, Greg, T, seed, retries, slack), stages, strict)
        ids = ids[st.kept]
        out = st.hypergraph
    else:
        out = work
    report["edges_in"] = H.num_edges
    report["edges_out"] = out.num_edges
    report["is_simple"] = bool(out.max_codegree() <= 1)
    report["duplicates"] = int(out.duplicate_edge_count())
    report["band_ok"] = all(a.get("band_ok", True) for a in stages)
    return SimplifyResult(out, np.asarray(ids, dtype=np.int64), s, report)
