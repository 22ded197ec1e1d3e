"""Augmenting stars: the partite star hypergraph, its boosting, the degree
and codegree audit, matching augmentation and the simple-input pipeline."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _rng, kernels
from .hypergraph import Hypergraph, Matching, PartiteTag, verify_matching
from .nibble import NibbleConfig, NibbleResult, run_nibble, stat_Z

DEFAULT_CAP = 200_000


# ---------------------------------------------------------------------------
# parameters

def compute_eta0(k: int, epsilon: float) -> float:
    if k <= 3:
        raise ValueError("augmentation parameters need k > 3")
    if not 0 < epsilon < 1 - 1 / (k - 1):
        raise ValueError("epsilon out of range")
    return min((k - 3) / ((k - 1) * (k**3 - 2 * k**2 - k + 4)), 1 - 1 / (k - 1) - epsilon)


def compute_gamma(k: int, epsilon: float, eta: float = 0.0) -> tuple[float, float]:
    """(gamma, gamma') for the outer and inner nibble."""
    eta0 = compute_eta0(k, epsilon)
    gamma = min(2 / (k**3 - 2 * k**2 - k + 4), (2 * (k - 1) * (1 - epsilon) - 2) / (k - 3))
    gamma_prime = min(1 / (4 * (k - 1)), eta0 - eta)
    return gamma, gamma_prime


@dataclass
class PipelineParams:
    """Pipeline knobs.  ``gamma``/``gamma_prime`` default to the formulas.

    ``inner`` selects how H_A is matched: "nibble" (simplify, then nibble) or
    "greedy" (simplify, then random greedy).  ``simplify=False`` feeds the
    boosted star hypergraph to the inner matcher directly.
    """

    k: int
    epsilon: float = 0.25
    eta: float = 0.001
    delta: float = 0.3
    mu: float = 1.0
    gamma: float | None = None
    gamma_prime: float | None = None
    cap: int = DEFAULT_CAP
    max_stages: int = 1000
    inner_max_stages: int = 200
    inner: str = "nibble"
    simplify: bool = True
    band: float = 2.0

    def __post_init__(self):
        if self.k > 3:
            g, gp = compute_gamma(self.k, self.epsilon, self.eta)
            if self.gamma is None:
                self.gamma = g
            if self.gamma_prime is None:
                self.gamma_prime = gp
            if self.eta >= self.eta0:
                raise ValueError("eta must be below eta0")
        if self.gamma is None or self.gamma_prime is None:
            raise ValueError("gamma and gamma_prime are required when k <= 3")
        if self.inner not in ("nibble", "greedy"):
            raise ValueError(f"unknown inner matcher {self.inner!r}")

    @property
    def eta0(self) -> float:
        return compute_eta0(self.k, self.epsilon)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# star hypergraph

@dataclass
class AugStarHypergraph:
    """H_A (or a boosted copy): vertex ids 0..nL-1 are L, then c blocks of R.

    ``stars[s]`` holds the k star edges of H ordered by the vertex of the
    matched edge they meet; edge j of ``hypergraph`` encodes star
    ``edge_star[j]`` on copy ``edge_copy[j]`` of R.
    """

    hypergraph: Hypergraph
    l_edges: np.ndarray
    r_vertices: np.ndarray
    copies: int
    stars: np.ndarray
    star_owner: np.ndarray
    edge_star: np.ndarray
    edge_copy: np.ndarray
    truncated: np.ndarray
    k: int
    cap: int

    @property
    def n_left(self) -> int:
        return int(self.l_edges.size)

    @property
    def n_right(self) -> int:
        return int(self.r_vertices.size)

    @property
    def is_truncated(self) -> bool:
        return bool(self.truncated.any())

    def tag(self) -> PartiteTag:
        part = np.full(self.hypergraph.num_vertices, -1, np.int64)
        part[self.n_left:] = np.repeat(np.arange(self.copies), self.n_right)
        return PartiteTag(part, 1, self.k * (self.k - 1))

    def left_degrees(self) -> np.ndarray:
        return self.hypergraph.degrees()[:self.n_left]

    def right_degrees(self, copy: int = 0) -> np.ndarray:
        lo = self.n_left + copy * self.n_right
        return self.hypergraph.degrees()[lo:lo + self.n_right]


def _star_rows(H: Hypergraph, stars: np.ndarray, owner: np.ndarray, free: np.ndarray,
               r_index: np.ndarray, n_left: int, n_right: int, copy: int = 0) -> np.ndarray:
    k = H.uniformity
    vtx = H.edge_matrix()[stars].reshape(stars.shape[0], k * k)
    outside = free[vtx]
    right = vtx[outside].reshape(stars.shape[0], k * (k - 1))
    right = np.sort(r_index[right], axis=1) + n_left + copy * n_right
    return np.concatenate([owner[:, None], right], axis=1)


def enumerate_aug_stars(H: Hypergraph, M: Matching, W: np.ndarray,
                        cap: int = DEFAULT_CAP) -> AugStarHypergraph:
    """All augmenting stars of (H, M, W), at most ``cap`` per matched edge."""
    k = H.uniformity
    if k is None:
        raise ValueError("star enumeration needs a uniform hypergraph")
    free = ~(M.covered | np.asarray(W, bool))
    l_edges = np.asarray(M.edge_ids, dtype=np.int64)
    r_vertices = np.flatnonzero(free)
    r_index = np.full(H.num_vertices, -1, np.int64)
    r_index[r_vertices] = np.arange(r_vertices.size)
    inc_ptr, inc_edges = H.incidence
    cand_ptr, cand_edges = kernels.star_candidates(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges,
                                                   l_edges, free, H.num_vertices)
    stars, owner, truncated = kernels.enumerate_stars(H.edge_ptr, H.edge_vtx, cand_ptr,
                                                      cand_edges, l_edges, k, cap, H.num_vertices)
    nl, nr = l_edges.size, r_vertices.size
    rows = _star_rows(H, stars, owner, free, r_index, nl, nr) if stars.shape[0] else \
        np.zeros((0, k * (k - 1) + 1), np.int64)
    width = k * (k - 1) + 1
    hyper = Hypergraph(nl + nr, np.arange(rows.shape[0] + 1, dtype=np.int64) * width,
                       rows.ravel(), width)
    ha = AugStarHypergraph(hyper, l_edges, r_vertices, 1, stars, owner,
                           np.arange(stars.shape[0]), np.zeros(stars.shape[0], np.int64),
                           truncated, k, cap)
    ha._cand = (cand_ptr, cand_edges)
    return ha


def check_star(H: Hypergraph, M: Matching, W: np.ndarray, e_M: int, star) -> bool:
    """Direct check of the augmenting-star definition."""
    star = [int(e) for e in star]
    if e_M not in set(M.edge_ids.tolist()) or len(star) != H.uniformity:
        return False
    em = set(H.edge(e_M).tolist())
    free = ~(M.covered | np.asarray(W, bool))
    sets = [set(H.edge(e).tolist()) for e in star]
    for i, s in enumerate(sets):
        if len(s & em) != 1:
            return False
        if not all(free[v] for v in s - em):
            return False
        for t in sets[i + 1:]:
            if s & t:
                return False
    return True


def boost(ha: AugStarHypergraph) -> AugStarHypergraph:
    """Replicate R floor(D_R / D_L) times so both sides have similar degree."""
    if ha.copies != 1:
        raise ValueError("boost expects an unboosted star hypergraph")
    dl = float(ha.left_degrees().mean()) if ha.n_left else 0.0
    dr = float(ha.right_degrees().mean()) if ha.n_right else 0.0
    if dl == 0:
        raise ValueError("mean L-degree is 0; nothing to boost")
    c = max(1, int(math.floor(dr / dl)))
    rows = ha.hypergraph.edge_matrix()
    nl, nr = ha.n_left, ha.n_right
    blocks = []
    for r in range(c):
        b = rows.copy()
        b[:, 1:] += r * nr
        blocks.append(b)
    mat = np.concatenate(blocks) if blocks else rows
    width = rows.shape[1]
    hyper = Hypergraph(nl + c * nr, np.arange(mat.shape[0] + 1, dtype=np.int64) * width,
                       mat.ravel(), width)
    S = rows.shape[0]
    out = AugStarHypergraph(hyper, ha.l_edges, ha.r_vertices, c, ha.stars, ha.star_owner,
                            np.tile(np.arange(S), c), np.repeat(np.arange(c), S),
                            ha.truncated, ha.k, ha.cap)
    out._cand = getattr(ha, "_cand", None)
    out.boost_means = (dl, dr)
    return out


# ---------------------------------------------------------------------------
# degree counts without materialising every star

def _candidates(H: Hypergraph, ha: AugStarHypergraph):
    cand = getattr(ha, "_cand", None)
    if cand is None:
        raise ValueError("star hypergraph lacks its candidate index")
    return cand


def count_left_degrees(H: Hypergraph, ha: AugStarHypergraph, which=None) -> np.ndarray:
    """Exact H_A degree of L vertices (all, or the indices in ``which``)."""
    cand_ptr, cand_edges = _candidates(H, ha)
    k = ha.k
    idx = np.arange(ha.n_left) if which is None else np.asarray(which, dtype=np.int64)
    forced = np.full(k, -1, np.int64)
    return np.array([kernels.count_stars(H.edge_ptr, H.edge_vtx, cand_ptr, cand_edges,
                                         ha.l_edges, k, int(li), forced, H.num_vertices)
                     for li in idx], dtype=np.int64)


def candidate_counts(H: Hypergraph, ha: AugStarHypergraph, li: int):
    """For matched edge ``li``: every candidate edge, its slot and the number of
    stars using it.  Summing one slot gives the L-degree; summing over the
    candidates through y gives the codegree of (li, y)."""
    cand_ptr, cand_edges = _candidates(H, ha)
    k = ha.k
    forced = np.full(k, -1, np.int64)
    lo, hi = cand_ptr[li * k], cand_ptr[(li + 1) * k]
    edges = cand_edges[lo:hi]
    slots = np.repeat(np.arange(k), np.diff(cand_ptr[li * k:(li + 1) * k + 1]))
    counts = np.zeros(edges.size, np.int64)
    for t in range(edges.size):
        forced[:] = -1
        forced[slots[t]] = edges[t]
        counts[t] = kernels.count_stars(H.edge_ptr, H.edge_vtx, cand_ptr, cand_edges,
                                        ha.l_edges, k, li, forced, H.num_vertices)
    return edges, slots, counts


def left_right_codegree(H: Hypergraph, ha: AugStarHypergraph, li: int, profile=None) -> int:
    """Largest codegree between L vertex ``li`` and any R vertex."""
    edges, slots, counts = profile if profile is not None else candidate_counts(H, ha, li)
    if edges.size == 0:
        return 0
    free = np.zeros(H.num_vertices, bool)
    free[ha.r_vertices] = True
    vtx = H.edge_matrix()[edges]
    w = np.repeat(counts, vtx.shape[1])
    flat = vtx.ravel()
    keep = free[flat]
    return int(np.bincount(flat[keep], weights=w[keep], minlength=H.num_vertices).max())


def count_right_degrees(H: Hypergraph, ha: AugStarHypergraph, which) -> np.ndarray:
    """Exact H_A degree of the R vertices ``ha.r_vertices[which]``."""
    cand_ptr, cand_edges = _candidates(H, ha)
    k = ha.k
    owner = np.full(H.num_vertices, -1, np.int64)
    slot = np.full(H.num_vertices, -1, np.int64)
    mat = H.edge_matrix()
    for li, e in enumerate(ha.l_edges.tolist()):
        owner[mat[e]] = li
        slot[mat[e]] = np.arange(k)
    out = np.zeros(len(which), np.int64)
    forced = np.full(k, -1, np.int64)
    for t, ri in enumerate(np.asarray(which, dtype=np.int64).tolist()):
        x = int(ha.r_vertices[ri])
        total = 0
        for c in H.incident_edges(x).tolist():
            verts = mat[c]
            hits = verts[owner[verts] >= 0]
            if hits.size != 1:
                continue
            v = int(hits[0])
            li, j = int(owner[v]), int(slot[v])
            lo, hi = cand_ptr[li * k + j], cand_ptr[li * k + j + 1]
            pos = lo + np.searchsorted(cand_edges[lo:hi], c)
            if pos >= hi or cand_edges[pos] != c:
                continue
            forced[:] = -1
            forced[j] = c
            total += kernels.count_stars(H.edge_ptr, H.edge_vtx, cand_ptr, cand_edges,
                                         ha.l_edges, k, li, forced, H.num_vertices)
        out[t] = total
    return out


# ---------------------------------------------------------------------------
# audit

def verify_M3(ha: AugStarHypergraph, D_omega: float, H: Hypergraph, nibble: NibbleResult,
              band: float = 2.0, codegree_band: float = 1.0, sample: int | None = None,
              seed: int = 0) -> dict:
    """Degree and codegree audit of an (unboosted) star hypergraph.

    L-degrees are compared with D_omega^k, R-degrees with
    Z_omega(x) D_omega^(k-1) using the measured Z_omega(x), codegree with
    codegree_band * D_omega^(k-1) log^2 N.  When the enumeration was
    truncated, or ``sample`` is given, degrees are recounted exactly on a
    sample of vertices and the report is marked "sampled".
    """
    if ha.n_left == 0:
        raise ValueError("star hypergraph has an empty L side")
    if ha.n_right == 0:
        raise ValueError("star hypergraph has an empty R side")
    k = ha.k
    N = H.num_vertices
    rng = _rng.stream(seed, _rng.STAT_SAMPLE, 7)
    sampled = ha.is_truncated or sample is not None
    if sampled:
        size = sample if sample is not None else 200
        li = np.sort(rng.choice(ha.n_left, size=min(size, ha.n_left), replace=False))
        ri = np.sort(rng.choice(ha.n_right, size=min(size, ha.n_right), replace=False))
        dl = np.zeros(li.size, np.int64)
        lr_codeg = 0
        for t, l in enumerate(li.tolist()):
            prof = candidate_counts(H, ha, l)
            dl[t] = prof[2][prof[1] == 0].sum()
            lr_codeg = max(lr_codeg, left_right_codegree(H, ha, l, prof))
        dr = count_right_degrees(H, ha, ri)
    else:
        li = np.arange(ha.n_left)
        ri = np.arange(ha.n_right)
        dl = ha.left_degrees()
        dr = ha.right_degrees()
    z = np.array([stat_Z(H, nibble.leftover, nibble.matching.covered, int(x))
                  for x in ha.r_vertices[ri].tolist()], dtype=np.int64)
    target_l = D_omega ** k
    ratio_l = dl / target_l
    has_z = z > 0
    target_r = z[has_z] * D_omega ** (k - 1)
    ratio_r = dr[has_z] / target_r
    tag_ok = ha.tag().check(ha.hypergraph) if ha.hypergraph.num_edges else True
    codeg = ha.hypergraph.max_codegree()
    if sampled:
        codeg = max(codeg, lr_codeg)
    codeg_bound = codegree_band * D_omega ** (k - 1) * math.log(N) ** 2

    def within(r):
        return bool(np.all((r >= 1 / band) & (r <= band))) if r.size else True

    def frac(r):
        return float(np.mean((r >= 1 / band) & (r <= band))) if r.size else 1.0

    report = {
        "mode": "sampled" if sampled else "exact",
        "truncated": ha.is_truncated,
        "D_omega": float(D_omega), "k": k, "N": N,
        "n_left": ha.n_left, "n_right": ha.n_right, "edges": ha.hypergraph.num_edges,
        "left_degree_min": int(dl.min()), "left_degree_max": int(dl.max()),
        "left_degree_mean": float(dl.mean()),
        "right_degree_min": int(dr.min()), "right_degree_max": int(dr.max()),
        "right_degree_mean": float(dr.mean()),
        "left_ratio_min": float(ratio_l.min()), "left_ratio_max": float(ratio_l.max()),
        "left_ratio_median": float(np.median(ratio_l)),
        "right_ratio_min": float(ratio_r.min()) if ratio_r.size else float("nan"),
        "right_ratio_max": float(ratio_r.max()) if ratio_r.size else float("nan"),
        "right_ratio_median": float(np.median(ratio_r)) if ratio_r.size else float("nan"),
        "left_within_band_fraction": frac(ratio_l),
        "right_within_band_fraction": frac(ratio_r),
        "right_zero_z": int((~has_z).sum()),
        "left_left_codegree": 0 if tag_ok else None,
        "partite_ok": bool(tag_ok),
        "max_codegree": int(codeg),
        "codegree_bound": float(codeg_bound),
        "codegree_scope": "partial" if sampled else "exact",
        "band": band,
    }
    report["left_ok"] = within(ratio_l)
    report["right_ok"] = within(ratio_r)
    report["codegree_ok"] = bool(codeg <= codeg_bound)
    report["passed"] = bool(tag_ok and report["left_ok"] and report["right_ok"]
                            and report["codegree_ok"])
    return report


# ---------------------------------------------------------------------------
# augmentation

def restrict_to_first_copy(ha: AugStarHypergraph, edge_ids) -> np.ndarray:
    """Matching edges of H_A lying inside L and the first copy of R."""
    ids = np.asarray(edge_ids, dtype=np.int64)
    return ids[ha.edge_copy[ids] == 0]


def augment_matching(H: Hypergraph, M: Matching, ha: AugStarHypergraph, M_A) -> Matching:
    """Swap each matched edge e_M used by M_A for the k edges of its star."""
    ids = np.asarray(M_A.edge_ids if isinstance(M_A, Matching) else M_A, dtype=np.int64)
    if ids.size == 0:
        return M
    if ids.min() < 0 or ids.max() >= ha.hypergraph.num_edges:
        raise ValueError("M_A references an edge outside the star hypergraph")
    if not verify_matching(ha.hypergraph, ids)["valid"]:
        raise ValueError("M_A is not a matching of the star hypergraph")
    if np.any(ha.edge_copy[ids] != 0):
        raise ValueError("M_A must be restricted to the first copy of R")
    stars = ha.edge_star[ids]
    removed = ha.l_edges[ha.star_owner[stars]]
    added = ha.stars[stars].ravel()
    keep = np.setdiff1d(M.edge_ids, removed)
    out = Matching.of(H, np.concatenate([keep, added]))
    if out.edge_ids.size != M.edge_ids.size + (ha.k - 1) * ids.size:
        raise ValueError("augmentation produced overlapping stars")
    if not verify_matching(H, out)["valid"]:
        raise ValueError("augmented matching is not valid")
    return out


def random_greedy_matching(H: Hypergraph, seed: int) -> np.ndarray:
    """Maximal matching from one random edge order."""
    order = _rng.stream(seed, _rng.PIPELINE, 3).permutation(H.num_edges)
    used = np.zeros(H.num_vertices, bool)
    chosen = []
    for e in order.tolist():
        vs = H.edge(e)
        if not used[vs].any():
            used[vs] = True
            chosen.append(e)
    return np.sort(np.array(chosen, dtype=np.int64))


def leftover_counts(M: Matching, sets) -> list[int]:
    return [int((~M.covered[np.asarray(s, dtype=np.int64)]).sum()) for s in sets]


@dataclass
class PipelineResult:
    matching: Matching
    report: dict
    nibble: NibbleResult | None = None
    star_hypergraph: AugStarHypergraph | None = None
    inner_edges: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))


def full_simple_pipeline(H: Hypergraph, params: PipelineParams, seed: int = 0,
                         track_sets=(), H_is_simple: bool | None = None) -> PipelineResult:
    """Nibble, star hypergraph, boost, simplify, inner matching, augment."""
    from .simplify import simple_subhypergraph

    k = H.uniformity
    N = H.num_vertices
    sets = [np.arange(N)] + [np.asarray(s, dtype=np.int64) for s in track_sets]
    stage = "nibble"
    report: dict = {"params": params.to_dict(), "seed": seed, "N": N, "k": k}
    try:
        res = run_nibble(H, NibbleConfig(gamma=params.gamma, seed=seed,
                                         max_stages=params.max_stages,
                                         track_sets=sets[1:], stat_pairs=0))
        M = res.matching
        report["nibble"] = {"status": res.log.status, "omega": res.log.omega,
                            "D0": res.log.D0, "D_omega": res.D_omega,
                            "matching_size": len(M), "waste": int(res.waste.sum()),
                            "leftover": int(res.leftover.sum())}
        stage = "stars"
        ha = enumerate_aug_stars(H, M, res.waste, params.cap)
        report["stars"] = {"edges": ha.hypergraph.num_edges, "n_left": ha.n_left,
                           "n_right": ha.n_right, "truncated": ha.is_truncated}
        inner = np.zeros(0, np.int64)
        if ha.hypergraph.num_edges:
            stage = "boost"
            hb = boost(ha)
            report["boost"] = {"copies": hb.copies, "mean_left": hb.boost_means[0],
                               "mean_right": hb.boost_means[1],
                               "edges": hb.hypergraph.num_edges,
                               "codegree": hb.hypergraph.max_codegree()}
            work = hb.hypergraph
            origin = np.arange(work.num_edges)
            if params.simplify:
                stage = "simplify"
                C = max(1, work.max_codegree())
                simp = simple_subhypergraph(work, C, params.delta,
                                            int(_rng.stream(seed, _rng.PIPELINE, 1)
                                                .integers(2**31)))
                origin = simp.kept
                work = simp.hypergraph
                report["simplify"] = simp.report
            stage = "inner"
            if work.num_edges:
                if params.inner == "greedy":
                    local = random_greedy_matching(work, seed)
                    report["inner"] = {"method": "greedy", "size": int(local.size)}
                else:
                    r1 = [hb.n_left + np.searchsorted(hb.r_vertices, s[np.isin(s, hb.r_vertices)])
                          for s in sets[1:]]
                    wdeg = work.degrees()
                    inner_res = run_nibble(work, NibbleConfig(
                        gamma=params.gamma_prime, D0=float(wdeg[wdeg > 0].mean()),
                        seed=int(_rng.stream(seed, _rng.PIPELINE, 2).integers(2**31)),
                        max_stages=params.inner_max_stages, track_sets=r1,
                        stat_vertices=0, stat_pairs=0))
                    local = inner_res.matching.edge_ids
                    report["inner"] = {"method": "nibble", "status": inner_res.log.status,
                                       "omega": inner_res.log.omega, "size": int(local.size),
                                       "t_path": inner_res.log.t_path}
                inner = restrict_to_first_copy(hb, origin[local])
            else:
                report["inner"] = {"method": params.inner, "size": 0}
            stage = "augment"
            M_star = augment_matching(H, M, hb, inner)
        else:
            hb = ha
            M_star = M
        report["augmented_stars"] = int(inner.size)
        report["matching_size"] = len(M)
        report["augmented_size"] = len(M_star)
        report["leftover_M"] = leftover_counts(M, sets)
        report["leftover_M_star"] = leftover_counts(M_star, sets)
        report["valid"] = verify_matching(H, M_star)["valid"]
        D = res.log.D0
        if D > 1:
            report["baseline_nibble"] = N * D ** (-1 / (k - 1))
            report["baseline_improved"] = N * D ** (-1 / (k - 1) - params.eta)
        report["tracked_outside_hypothesis"] = [
            bool(s.size < math.sqrt(max(D, 1)) * math.log(max(N, 2))) for s in sets[1:]]
    except Exception as exc:
        exc.stage = stage
        raise
    return PipelineResult(M_star, report, res, hb, inner)
