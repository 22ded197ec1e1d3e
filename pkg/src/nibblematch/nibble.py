"""The nibble process with waste vertices, its exact stage probabilities,
parameter recurrences and tracked statistics."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _rng, kernels
from .hypergraph import Hypergraph, Matching, is_simple

CSV_HEADER = "# nibble-match v1"
TRAJECTORY_COLUMNS = ("i", "U_i", "D_i", "Delta_i", "p_star", "M_i", "W_i",
                      "z_mean", "y_max", "x_max")


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


# ---------------------------------------------------------------------------
# exact stage probabilities

def count_intersecting_edges(H: Hypergraph, F: int, alive: np.ndarray | None = None,
                             exact: bool = False) -> int:
    """t(F): number of other alive edges meeting edge F.

    The default path uses the sum of (alive degree - 1) over F, which is
    exact only for simple hypergraphs; ``exact=True`` enumerates.
    """
    alive = np.ones(H.num_vertices, bool) if alive is None else np.asarray(alive, bool)
    mask = kernels.alive_edge_mask(H.edge_ptr, H.edge_vtx, alive)
    if not mask[F]:
        raise ValueError(f"edge {F} is not alive")
    if exact:
        inc_ptr, inc_edges = H.incidence
        return int(kernels.intersect_counts_exact(H.edge_ptr, H.edge_vtx, mask,
                                                  inc_ptr, inc_edges)[F])
    if not is_simple(H):
        raise ValueError("degree shortcut for t(F) needs a simple hypergraph")
    deg = kernels.masked_degrees(H.edge_ptr, H.edge_vtx, mask, H.num_vertices)
    return int(deg[H.edge(F)].sum() - H.edge(F).size)


def edge_matching_prob(D: float, tF):
    """P(F in M_i) = (1/D)(1 - 1/D)^t(F)."""
    if D < 1:
        raise ValueError("selection degree D must be at least 1")
    out = (1.0 / D) * (1.0 - 1.0 / D) ** np.asarray(tF, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def vertex_matching_prob(H: Hypergraph, D: float, v: int,
                         alive: np.ndarray | None = None) -> float:
    """p_M(v): sum of edge_matching_prob over alive edges through v."""
    alive = np.ones(H.num_vertices, bool) if alive is None else np.asarray(alive, bool)
    if not alive[v]:
        raise ValueError(f"vertex {v} is not alive")
    _, _, pm = _probabilities(H, alive, D, exact=not is_simple(H))
    return float(pm[v])


def waste_prob(pM, pStar):
    """Waste probability equalising P(v survives) to 1 - p*."""
    pM = np.asarray(pM, dtype=np.float64)
    if np.any(pM > pStar):
        raise ValueError("p_M exceeds p*")
    if pStar >= 1.0:
        out = np.where(pM < 1.0, 1.0, 0.0)
    else:
        out = (pStar - pM) / (1.0 - pM)
    return float(out) if out.ndim == 0 else out


def _probabilities(H: Hypergraph, alive: np.ndarray, D: float, exact: bool):
    mask = kernels.alive_edge_mask(H.edge_ptr, H.edge_vtx, alive)
    if exact:
        inc_ptr, inc_edges = H.incidence
        t = kernels.intersect_counts_exact(H.edge_ptr, H.edge_vtx, mask, inc_ptr, inc_edges)
    else:
        deg = kernels.masked_degrees(H.edge_ptr, H.edge_vtx, mask, H.num_vertices)
        t = kernels.intersect_counts_simple(H.edge_ptr, H.edge_vtx, mask, deg)
    p_sel = min(1.0, 1.0 / D)
    pe = np.where(mask, p_sel * (1.0 - p_sel) ** t.astype(np.float64), 0.0)
    pm = kernels.vertex_prob_sums(H.edge_ptr, H.edge_vtx, mask, pe, H.num_vertices)
    return mask, pe, pm


# ---------------------------------------------------------------------------
# process state

@dataclass
class NibbleConfig:
    gamma: float
    max_stages: int = 10_000
    seed: int = 0
    track_sets: Sequence[Sequence[int]] = ()
    stat_vertices: int = 16
    stat_pairs: int = 2
    D0: float | None = None
    Delta0: float | None = None
    exact_t: bool | None = None

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")


@dataclass
class NibbleState:
    alive: np.ndarray
    stage: int
    D: float
    Delta: float
    D0: float
    Delta0: float
    k: int
    log_n: float
    exact_t: bool
    p_star: list = field(default_factory=list)
    q: np.ndarray = field(default_factory=lambda: np.ones(1))
    matched: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    matched_stage: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    covered: np.ndarray | None = None
    waste: np.ndarray | None = None
    seed: int = 0


@dataclass
class StageRecord:
    i: int
    U: int
    D: float
    Delta: float
    p_star: float
    M: int
    W: int
    D_emp_min: int
    D_emp_max: int
    z_mean: float
    y_max: int
    x_max: int
    tracked_U: list
    tracked_W: list


@dataclass
class TrajectoryLog:
    N: int
    k: int
    D0: float
    Delta0: float
    gamma: float
    t_path: str
    records: list = field(default_factory=list)
    status: str = "running"
    warnings: list = field(default_factory=list)
    initial_D_emp: tuple = (0, 0)
    initial_tracked: list = field(default_factory=list)
    y0_max: int = 0

    @property
    def omega(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def rows(self) -> list[list]:
        return [[r.i, r.U, r.D, r.Delta, r.p_star, r.M, r.W, r.z_mean, r.y_max, r.x_max]
                for r in self.records]

    def to_csv(self, dest=None) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for row in self.rows():
            w.writerow([_fmt(x) for x in row])
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", newline="\n") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {"N": self.N, "k": self.k, "D0": self.D0, "Delta0": self.Delta0,
                "gamma": self.gamma, "t_path": self.t_path, "status": self.status,
                "omega": self.omega, "warnings": list(self.warnings),
                "initial_D_emp": list(self.initial_D_emp), "y0_max": self.y0_max,
                "records": [r.__dict__ for r in self.records]}


def init_state(H: Hypergraph, config: NibbleConfig) -> NibbleState:
    if H.uniformity is None:
        raise ValueError("the nibble needs a uniform hypergraph")
    deg = H.degrees()
    D0 = float(config.D0) if config.D0 is not None else float(deg.mean()) if deg.size else 0.0
    spread = float(np.abs(deg - D0).max()) if deg.size else 0.0
    Delta0 = float(config.Delta0) if config.Delta0 is not None else spread
    exact = config.exact_t if config.exact_t is not None else not is_simple(H)
    n = H.num_vertices
    return NibbleState(alive=np.ones(n, bool), stage=0, D=D0, Delta=Delta0, D0=D0,
                       Delta0=Delta0, k=H.uniformity, log_n=math.log(max(n, 2)),
                       exact_t=exact, covered=np.zeros(n, bool), waste=np.zeros(n, bool),
                       seed=config.seed)


def stage_probabilities(H: Hypergraph, state: NibbleState):
    """(alive edge mask, P(F in M_i), p_M(v), p*) for the next stage."""
    mask, pe, pm = _probabilities(H, state.alive, max(state.D, 1.0), state.exact_t)
    p_star = float(pm[state.alive].max()) if state.alive.any() else 0.0
    return mask, pe, pm, p_star


def nibble_stage(state: NibbleState, H: Hypergraph):
    """Run stage i = state.stage + 1; returns (M_i edge ids, W_i mask, new state)."""
    i = state.stage + 1
    D_prev = state.D
    mask, pe, pm, p_star = stage_probabilities(H, state)
    p_sel = min(1.0, 1.0 / D_prev) if D_prev > 0 else 1.0
    alive_ids = np.flatnonzero(mask)
    rng_e = _rng.stream(state.seed, _rng.STAGE_EDGES, i)
    selected = np.zeros(H.num_edges, bool)
    selected[alive_ids[rng_e.random(alive_ids.size) < p_sel]] = True
    iso = kernels.isolated_selection(H.edge_ptr, H.edge_vtx, selected, H.num_vertices)
    M_i = np.flatnonzero(iso)

    alive_v = np.flatnonzero(state.alive)
    pw = waste_prob(pm[alive_v], p_star)
    rng_w = _rng.stream(state.seed, _rng.STAGE_WASTE, i)
    W_i = np.zeros(H.num_vertices, bool)
    W_i[alive_v[rng_w.random(alive_v.size) < pw]] = True

    covered_i = np.zeros(H.num_vertices, bool)
    if M_i.size:
        covered_i[H.edge_subset(M_i).edge_vtx] = True
    alive = state.alive & ~covered_i & ~W_i
    shrink = (1.0 - p_star) ** (state.k - 1)
    q = np.append(state.q * (1.0 - p_star), 1.0)
    new = replace(
        state, alive=alive, stage=i, D=shrink * D_prev,
        Delta=shrink * state.Delta + math.sqrt(max(D_prev, 0.0)) * state.log_n,
        p_star=state.p_star + [p_star], q=q,
        matched=np.concatenate([state.matched, M_i]),
        matched_stage=np.concatenate([state.matched_stage, np.full(M_i.size, i)]),
        covered=state.covered | covered_i, waste=state.waste | W_i)
    return M_i, W_i, new


# ---------------------------------------------------------------------------
# statistics

def stat_D(H: Hypergraph, U: np.ndarray, x: int) -> int:
    """Edges e through x with e minus x inside U."""
    return int(kernels.stat_D_all(H.edge_ptr, H.edge_vtx, np.asarray(U, bool),
                                  H.num_vertices)[x])


def stat_Z(H: Hypergraph, U: np.ndarray, covered: np.ndarray, x: int) -> int:
    """Edges e through x with one vertex of e minus x covered and the rest in U."""
    inc_ptr, inc_edges = H.incidence
    return int(kernels.stat_Z(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges, np.asarray(U, bool),
                              np.asarray(covered, bool), np.array([x], np.int64))[0])


def stat_Y(H: Hypergraph, U: np.ndarray, x: int, y: int) -> int:
    """Ordered edge triples linking x and y through a central alive edge."""
    if x == y:
        raise ValueError("x and y must differ")
    inc_ptr, inc_edges = H.incidence
    return int(kernels.stat_Y(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges, np.asarray(U, bool),
                              np.array([x], np.int64), np.array([y], np.int64))[0])


def stat_X(H: Hypergraph, U: np.ndarray, matched_edges, x: int, y: int) -> int:
    """As stat_Y but the central edge is a matching edge."""
    if x == y:
        raise ValueError("x and y must differ")
    inc_ptr, inc_edges = H.incidence
    mmask = np.zeros(H.num_edges, bool)
    mmask[np.asarray(matched_edges, dtype=np.int64)] = True
    return int(kernels.stat_X(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges, np.asarray(U, bool),
                              mmask, np.array([x], np.int64), np.array([y], np.int64))[0])


# ---------------------------------------------------------------------------
# full run

@dataclass
class NibbleResult:
    matching: Matching
    waste: np.ndarray
    leftover: np.ndarray
    log: TrajectoryLog
    state: NibbleState

    @property
    def D_omega(self) -> float:
        return self.state.D


def run_nibble(H: Hypergraph, config: NibbleConfig) -> NibbleResult:
    """Iterate stages until D_i <= D_0^gamma (or a stop condition)."""
    state = init_state(H, config)
    n = H.num_vertices
    sets = [np.asarray(s, dtype=np.int64) for s in config.track_sets]
    t_path = "exact" if state.exact_t else "simple"
    log = TrajectoryLog(N=n, k=state.k, D0=state.D0, Delta0=state.Delta0,
                        gamma=config.gamma, t_path=t_path)
    deg = H.degrees()
    if config.Delta0 is not None and deg.size and np.abs(deg - state.D0).max() > config.Delta0:
        msg = (f"measured degree spread {float(np.abs(deg - state.D0).max()):.3g} exceeds "
               f"declared Delta0 {config.Delta0}")
        warnings.warn(msg)
        log.warnings.append(msg)

    rng_s = _rng.stream(config.seed, _rng.STAT_SAMPLE)
    zs = np.sort(rng_s.choice(n, size=min(config.stat_vertices, n), replace=False)) \
        if n else np.zeros(0, np.int64)
    npairs = config.stat_pairs if n >= 2 else 0
    px = np.zeros(npairs, np.int64)
    py = np.zeros(npairs, np.int64)
    for j in range(npairs):
        a, b = rng_s.choice(n, size=2, replace=False)
        px[j], py[j] = a, b
    inc_ptr, inc_edges = H.incidence

    d_all = kernels.stat_D_all(H.edge_ptr, H.edge_vtx, state.alive, n)
    log.initial_D_emp = (int(d_all.min()), int(d_all.max())) if n else (0, 0)
    log.initial_tracked = [int(s.size) for s in sets]
    if npairs:
        log.y0_max = int(kernels.stat_Y(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges,
                                        state.alive, px, py).max())

    threshold = state.D0 ** config.gamma
    while log.status == "running":
        if state.stage >= config.max_stages:
            log.status = "max_stages"
            break
        if not state.alive.any():
            log.status = "starved"
            break
        degenerate = state.D < 1
        M_i, W_i, state = nibble_stage(state, H)
        if state.p_star[-1] == 0.0:
            log.status = "no_edges"
        d_all = kernels.stat_D_all(H.edge_ptr, H.edge_vtx, state.alive, n)
        z = kernels.stat_Z(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges, state.alive,
                           state.covered, zs[state.alive[zs]]) if zs.size else np.zeros(0)
        y_max = x_max = 0
        if npairs:
            mmask = np.zeros(H.num_edges, bool)
            mmask[state.matched] = True
            y_max = int(kernels.stat_Y(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges,
                                       state.alive, px, py).max())
            x_max = int(kernels.stat_X(H.edge_ptr, H.edge_vtx, inc_ptr, inc_edges,
                                       state.alive, mmask, px, py).max())
        log.records.append(StageRecord(
            i=state.stage, U=int(state.alive.sum()), D=state.D, Delta=state.Delta,
            p_star=state.p_star[-1], M=int(M_i.size), W=int(W_i.sum()),
            D_emp_min=int(d_all.min()), D_emp_max=int(d_all.max()),
            z_mean=float(z.mean()) if z.size else float("nan"), y_max=y_max, x_max=x_max,
            tracked_U=[int(state.alive[s].sum()) for s in sets],
            tracked_W=[int(W_i[s].sum()) for s in sets]))
        if log.status != "running":
            break
        if degenerate:
            log.status = "degenerate"
        elif state.D <= threshold:
            log.status = "threshold"

    matching = Matching(np.sort(state.matched), state.covered.copy())
    return NibbleResult(matching=matching, waste=state.waste.copy(),
                        leftover=state.alive.copy(), log=log, state=state)


# ---------------------------------------------------------------------------
# idealised trajectory

@dataclass(frozen=True)
class Prediction:
    i: int
    D: float
    Delta: float
    u_factor: float
    D_closed: float


def predict_trajectory(D0: float, Delta0: float, k: int, gamma: float,
                       n_vertices: int | None = None, max_stages: int = 1_000_000):
    """Recurrences with p* = e^-k, stopped at D_i <= D0^gamma.

    ``n_vertices`` enables the sqrt(D) log N increment of Delta; without it
    Delta scales like D.
    """
    if D0 < 1:
        raise ValueError("D0 must be at least 1")
    p = math.exp(-k)
    shrink = (1.0 - p) ** (k - 1)
    log_n = math.log(n_vertices) if n_vertices else 0.0
    out = [Prediction(0, float(D0), float(Delta0), 1.0, float(D0))]
    threshold = D0 ** gamma
    D, Delta, u = float(D0), float(Delta0), 1.0
    i = 0
    while D > threshold and i < max_stages:
        i += 1
        Delta = shrink * Delta + math.sqrt(D) * log_n
        D = shrink * D
        u *= 1.0 - p
        out.append(Prediction(i, D, Delta, u, (1.0 - p) ** (i * (k - 1)) * D0))
    return out


# ---------------------------------------------------------------------------
# Monte Carlo over one stage

def bernoulli_subsets(rng: np.random.Generator, m: int, p: float, samples: int):
    """CSR (ptr, idx) of ``samples`` independent Bernoulli(p) subsets of range(m).

    Uses geometric gaps, so the cost is proportional to the selected count.
    """
    if p >= 1.0:
        ptr = np.arange(samples + 1, dtype=np.int64) * m
        return ptr, np.tile(np.arange(m, dtype=np.int64), samples)
    if m == 0 or p <= 0.0:
        return np.zeros(samples + 1, np.int64), np.zeros(0, np.int64)
    mean = m * p
    width = int(mean + 6.0 * math.sqrt(mean) + 10)
    pos = np.cumsum(rng.geometric(p, size=(samples, width)), axis=1) - 1
    if np.all(pos[:, -1] >= m):
        keep = pos < m
        counts = keep.sum(axis=1)
        idx = pos[keep]
    else:
        rows = []
        for row in pos:
            while row[-1] < m:
                row = np.concatenate([row, np.cumsum(rng.geometric(p, size=width)) + row[-1]])
            rows.append(row[row < m])
        counts = np.array([r.size for r in rows], np.int64)
        idx = np.concatenate(rows)
    ptr = np.zeros(samples + 1, np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, idx


@dataclass
class StageSamples:
    samples: int
    edge_hits: np.ndarray
    matched_hits: np.ndarray
    survive_hits: np.ndarray
    tuple_matched: np.ndarray | None
    tuple_survive: np.ndarray | None


def sample_stage(H: Hypergraph, state: NibbleState, samples: int, seed: int,
                 chunk: int = 2000, watch: Sequence[int] | None = None) -> StageSamples:
    """Resample the next stage ``samples`` times from a fixed state.

    Returns per-edge counts of {F in M}, per-vertex counts of {v in V(M)} and
    {v survives}, and for the ``watch`` vertices the per-sample indicators.
    """
    mask, pe, pm, p_star = stage_probabilities(H, state)
    alive_ids = np.flatnonzero(mask)
    sub = H.edge_subset(alive_ids)
    n = H.num_vertices
    p_sel = min(1.0, 1.0 / state.D) if state.D > 0 else 1.0
    alive_v = np.flatnonzero(state.alive)
    pw = np.zeros(n)
    pw[alive_v] = waste_prob(pm[alive_v], p_star)
    watch_arr = None if watch is None else np.asarray(watch, dtype=np.int64)
    edge_hits = np.zeros(H.num_edges, np.int64)
    matched_hits = np.zeros(n, np.int64)
    survive_hits = np.zeros(n, np.int64)
    t_m, t_s = [], []
    done = 0
    block = 0
    while done < samples:
        s = min(chunk, samples - done)
        rng = _rng.stream(seed, _rng.MONTE_CARLO, block)
        ptr, idx = bernoulli_subsets(rng, alive_ids.size, p_sel, s)
        iso = kernels.batch_isolated(sub.edge_ptr, sub.edge_vtx, ptr, idx, n)
        edge_hits += np.bincount(alive_ids[idx[iso]], minlength=H.num_edges)
        matched = kernels.batch_matched_vertices(sub.edge_ptr, sub.edge_vtx, ptr, idx, n)
        wasted = rng.random((s, alive_v.size)) < pw[alive_v]
        survive = np.zeros((s, n), bool)
        survive[:, alive_v] = ~matched[:, alive_v] & ~wasted
        matched_hits += matched.sum(axis=0)
        survive_hits += survive.sum(axis=0)
        if watch_arr is not None:
            t_m.append(matched[:, watch_arr])
            t_s.append(survive[:, watch_arr])
        done += s
        block += 1
    return StageSamples(samples, edge_hits, matched_hits, survive_hits,
                        np.concatenate(t_m) if t_m else None,
                        np.concatenate(t_s) if t_s else None)
