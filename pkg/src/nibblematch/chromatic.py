"""Edge colouring through matchings: the incidence hypergraph H0 turns a
near-perfect matching into a partial D-colouring, first-fit finishes it."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import _rng, kernels
from .augment import PipelineParams, compute_eta0, full_simple_pipeline
from .generators import embed_into_near_regular
from .hypergraph import Hypergraph, Matching, verify_matching
from .nibble import CSV_HEADER


def g_lower_bound(n: int) -> int:
    """Edges of an STS(n) pairwise meeting force at least this many colours."""
    if n % 6 == 1:
        return (n + 1) // 2
    if n % 6 == 3:
        return (n - 1) // 2
    raise ValueError(f"n = {n} is not 1 or 3 mod 6")


def is_steiner_triple_system(H: Hypergraph) -> bool:
    n = H.num_vertices
    return (H.uniformity == 3 and n % 6 in (1, 3) and H.num_edges == n * (n - 1) // 6
            and H.max_codegree() <= 1)


@dataclass(frozen=True)
class IncidenceDecoder:
    """H0 layout: vertex e < m is edge e of Hp, vertex m + i*n + v is copy i
    of v; H0 edge e*D + i stands for "edge e gets colour i"."""

    num_edges: int
    num_vertices: int
    D: int

    def decode(self, h0_edges):
        ids = np.asarray(h0_edges, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.num_edges * self.D):
            raise ValueError("H0 edge id outside the decoder range")
        return ids // self.D, ids % self.D

    def copies_of(self, v: int) -> np.ndarray:
        return self.num_edges + np.arange(self.D) * self.num_vertices + v


def build_incidence_hypergraph(Hp: Hypergraph, D: int) -> tuple[Hypergraph, IncidenceDecoder]:
    k = Hp.uniformity
    if k is None:
        raise ValueError("incidence hypergraph needs a uniform hypergraph")
    deg = Hp.degrees()
    if Hp.num_edges and deg.max() > D:
        raise ValueError(f"max degree {int(deg.max())} exceeds D = {D}")
    m, n = Hp.num_edges, Hp.num_vertices
    mat = Hp.edge_matrix()
    rows = np.empty((m, D, k + 1), np.int64)
    rows[:, :, 0] = np.arange(m)[:, None]
    rows[:, :, 1:] = m + np.arange(D)[None, :, None] * n + mat[:, None, :]
    width = k + 1
    H0 = Hypergraph(m + D * n, np.arange(m * D + 1, dtype=np.int64) * width, rows.ravel(), width)
    return H0, IncidenceDecoder(m, n, D)


@dataclass
class EdgeColoring:
    """``colors[e]`` is the colour of edge e, or -1 while uncoloured."""

    colors: np.ndarray

    @classmethod
    def empty(cls, m: int) -> "EdgeColoring":
        return cls(np.full(m, -1, np.int64))

    @property
    def palette_size(self) -> int:
        c = self.colors[self.colors >= 0]
        return int(np.unique(c).size)

    @property
    def is_total(self) -> bool:
        return bool((self.colors >= 0).all())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        buf.write("edge_id,color\n")
        for e, c in enumerate(self.colors.tolist()):
            buf.write(f"{e},{c}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EdgeColoring":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        if not lines or lines[0] != "edge_id,color":
            raise ValueError("not a colouring CSV")
        pairs = np.array([[int(x) for x in ln.split(",")] for ln in lines[1:]],
                         dtype=np.int64).reshape(-1, 2)
        colors = np.full(pairs.shape[0], -1, np.int64)
        colors[pairs[:, 0]] = pairs[:, 1]
        return cls(colors)


def audit_coloring(Hp: Hypergraph, coloring: EdgeColoring) -> dict:
    """Independent properness check: at every vertex the coloured incident
    edges carry distinct colours."""
    c = coloring.colors
    if c.size != Hp.num_edges:
        raise ValueError("colouring size does not match the hypergraph")
    sizes = Hp.edge_sizes()
    owner = np.repeat(np.arange(Hp.num_edges), sizes)
    col = c[owner]
    mask = col >= 0
    key = Hp.edge_vtx[mask].astype(np.int64) * (int(c.max()) + 2 if c.size else 1) + col[mask]
    clashes = int(key.size - np.unique(key).size)
    return {"proper": clashes == 0, "clashes": clashes, "total": coloring.is_total,
            "colored": int((c >= 0).sum()), "palette_size": coloring.palette_size}


def matching_to_partial_coloring(M0, decoder: IncidenceDecoder) -> EdgeColoring:
    ids = M0.edge_ids if isinstance(M0, Matching) else np.asarray(M0, dtype=np.int64)
    e, colour = decoder.decode(ids)
    if np.unique(e).size != e.size:
        raise ValueError("matching colours an edge twice")
    out = EdgeColoring.empty(decoder.num_edges)
    out.colors[e] = colour
    return out


def greedy_complete(Hp: Hypergraph, partial: EdgeColoring, order=None) -> tuple[EdgeColoring, dict]:
    """First-fit the uncoloured edges with fresh colours above the partial
    palette.  Returns the total colouring and an audit of the fresh part."""
    colors = partial.colors.copy()
    base = int(colors.max()) + 1 if colors.size and colors.max() >= 0 else 0
    todo = np.flatnonzero(colors < 0) if order is None else np.asarray(order, dtype=np.int64)
    rest = Hp.edge_subset(todo)
    delta2 = int(rest.degrees().max()) if todo.size else 0
    inc_ptr, inc_edges = Hp.incidence
    out = kernels.first_fit(Hp.edge_ptr, Hp.edge_vtx, inc_ptr, inc_edges, todo, colors, base)
    fresh = int(np.unique(out[todo]).size) if todo.size else 0
    k = Hp.uniformity or int(Hp.edge_sizes().max(initial=0))
    bound = k * (delta2 - 1) + 1 if todo.size else 0
    return EdgeColoring(out), {"uncolored": int(todo.size), "uncolored_max_degree": delta2,
                               "fresh_colors": fresh, "fresh_bound": bound,
                               "fresh_ok": fresh <= bound, "base": base}


def chromatic_eta(k: int, eta: float) -> tuple[float, float]:
    """(eta0, eta') for colouring a k-uniform hypergraph."""
    eta0 = (k - 2) / (k * (k**3 + k**2 - 2 * k + 2))
    if not 0 < eta < eta0:
        raise ValueError(f"eta must lie in (0, {eta0})")
    return eta0, (eta0 + eta) / 2


@dataclass
class ColoringParams:
    eta: float = 0.001
    delta: float = 0.3
    mu: float = 1.0
    inner: str = "nibble"
    embed: str = "auto"
    max_stages: int = 1000
    inner_max_stages: int = 200
    cap: int = 200_000


def chromatic_index_coloring(H: Hypergraph, D: int | None = None, C: int | None = None,
                             params: ColoringParams | None = None,
                             seed: int = 0) -> tuple[EdgeColoring, dict]:
    """Proper total edge colouring of H through a matching of H0.

    ``params.embed``: "auto" embeds only when H is not already near-regular
    (max minus min degree above k), "always" or "never".
    """
    from .simplify import simple_subhypergraph

    params = params or ColoringParams()
    k = H.uniformity
    if k is None or k < 3:
        raise ValueError("colouring pipeline needs a k-uniform hypergraph with k >= 3")
    deg = H.degrees()
    Dmax = int(deg.max()) if H.num_edges else 0
    D = int(math.ceil(D)) if D is not None else Dmax
    C = int(C) if C is not None else max(1, H.max_codegree())
    eta0, eta_p = chromatic_eta(k, params.eta)
    report: dict = {"k": k, "N": H.num_vertices, "edges": H.num_edges, "D": D, "C": C,
                    "eta0": eta0, "eta_prime": eta_p, "seed": seed}
    stage = "embed"
    try:
        spread = Dmax - int(deg.min()) if H.num_edges else 0
        embed = params.embed == "always" or (params.embed == "auto" and (spread > k or Dmax < D))
        if embed:
            Hp, erep = embed_into_near_regular(H, D, C, seed)
            report["embedding"] = erep
        else:
            Hp = H
            report["embedding"] = {"skipped": True, "degree_spread": spread}
        stage = "incidence"
        H0, dec = build_incidence_hypergraph(Hp, D)
        report["H0"] = {"vertices": H0.num_vertices, "edges": H0.num_edges}
        tracked = [dec.copies_of(v) for v in range(Hp.num_vertices)]
        pp = PipelineParams(k=k + 1, epsilon=0.25, eta=eta_p, delta=params.delta, mu=params.mu,
                            cap=params.cap, max_stages=params.max_stages,
                            inner_max_stages=params.inner_max_stages, inner=params.inner)
        report["pipeline_eta0"] = compute_eta0(k + 1, 0.25)
        work, kept = H0, np.arange(H0.num_edges)
        codeg0 = H0.max_codegree()
        report["H0"]["codegree"] = codeg0
        if codeg0 > 1:
            stage = "simplify"
            simp = simple_subhypergraph(H0, C, params.delta,
                                        int(_rng.stream(seed, _rng.PIPELINE, 5).integers(2**31)))
            work, kept = simp.hypergraph, simp.kept
            report["simplify"] = simp.report
        stage = "matching"
        res = full_simple_pipeline(work, pp, seed, track_sets=tracked)
        report["pipeline"] = {k_: v for k_, v in res.report.items()
                              if k_ not in ("leftover_M", "leftover_M_star",
                                            "tracked_outside_hypothesis")}
        report["tracked_uncovered_max"] = int(max(res.report["leftover_M_star"][1:], default=0))
        M0 = kept[res.matching.edge_ids]
        if not verify_matching(H0, M0)["valid"]:
            raise ValueError("matching of H0 is invalid")
        stage = "decode"
        partial = matching_to_partial_coloring(M0, dec)
        if embed:
            partial = EdgeColoring(partial.colors[:H.num_edges].copy())
        stage = "complete"
        total, fresh = greedy_complete(H, partial)
        report["partial_colored"] = int((partial.colors >= 0).sum())
        report["partial_palette"] = partial.palette_size
        report.update(fresh)
        audit = audit_coloring(H, total)
        report["proper"] = audit["proper"]
        report["total"] = audit["total"]
        report["palette_size"] = total.palette_size
        report["palette_bound"] = D + fresh["fresh_bound"]
        report["palette_bound_ok"] = total.palette_size <= D + fresh["fresh_bound"]
        report["baseline"] = D + D * (D / C) ** (-1 / k) if D > 0 else 0.0
        report["hypothesis_ok"] = bool(D >= math.exp(math.log(max(H0.num_vertices, 2))
                                                    ** (params.mu / 2)))
        if is_steiner_triple_system(H):
            report["g_lower_bound"] = g_lower_bound(H.num_vertices)
            report["g_ok"] = total.palette_size >= report["g_lower_bound"]
    except Exception as exc:
        if not hasattr(exc, "stage"):
            exc.stage = stage
        raise
    return total, report
