"""Instance families: Steiner triple systems, near-regular Steiner blocks,
random regular simple hypergraphs and the near-regular embedding host."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from . import _rng, kernels
from .hypergraph import Hypergraph, build_hypergraph

# Smallest Steiner block order accepted by near_regular_steiner_block.
N1_DEFAULT = 7


class GenerationError(RuntimeError):
    """A Las Vegas generator ran out of retries."""


def _canonical(n: int, mat: np.ndarray, uniformity: int) -> Hypergraph:
    mat = np.sort(mat, axis=1)
    if mat.shape[0]:
        mat = mat[np.lexsort(mat.T[::-1])]
    return build_hypergraph(n, mat.reshape(-1, uniformity), uniformity=uniformity)


def _relabel(n: int, mat: np.ndarray, seed: int | None) -> np.ndarray:
    if seed is None:
        return mat
    perm = _rng.stream(seed, _rng.RELABEL).permutation(n)
    return perm[mat]


def _bose(n: int) -> np.ndarray:
    t = (n - 3) // 6
    v = 2 * t + 1
    half = t + 1  # inverse of 2 modulo v
    x = np.arange(v)
    blocks = [np.stack([x, x + v, x + 2 * v], axis=1)]
    a, b = np.triu_indices(v, 1)
    c = ((a + b) * half) % v
    for i in range(3):
        j = (i + 1) % 3
        blocks.append(np.stack([a + i * v, b + i * v, c + j * v], axis=1))
    return np.concatenate(blocks)


def _skolem(n: int) -> np.ndarray:
    t = (n - 1) // 6
    v = 2 * t
    inf = 3 * v

    def op(a, b):
        s = (a + b) % v
        return np.where(s % 2 == 0, s // 2, (s - 1) // 2 + t)

    x = np.arange(t)
    blocks = [np.stack([x, x + v, x + 2 * v], axis=1)]
    for i in range(3):
        j = (i + 1) % 3
        blocks.append(np.stack([np.full(t, inf), x + t + i * v, x + j * v], axis=1))
    a, b = np.triu_indices(v, 1)
    c = op(a, b)
    for i in range(3):
        j = (i + 1) % 3
        blocks.append(np.stack([a + i * v, b + i * v, c + j * v], axis=1))
    return np.concatenate(blocks)


def steiner_triple_system(n: int, seed: int | None = 0) -> Hypergraph:
    """S(2, 3, n) via Bose (n = 3 mod 6) or Skolem (n = 1 mod 6).

    The construction is fixed; ``seed`` only permutes vertex labels
    (``None`` keeps the construction's labels).
    """
    if n < 7 or n % 6 not in (1, 3):
        raise ValueError(f"no Steiner triple system on {n} points")
    mat = _bose(n) if n % 6 == 3 else _skolem(n)
    return _canonical(n, _relabel(n, mat, seed), 3)


def _greedy_regular(k: int, D: int, N: int, tolerance: int, rng: np.random.Generator,
                    stall_rounds: int = 4, repair_steps: int = 0):
    """Shuffled-stub rounds followed by the repair walk; returns (edges, deficit)."""
    deficit = np.full(N, D, np.int64)
    bits = np.zeros((N, (N + 63) // 64), np.uint64)
    edges = np.zeros((N * D // k + 1, k), np.int64)
    n_edges = 0
    stalled = 0
    while stalled < stall_rounds and deficit.sum() >= k:
        pool = np.repeat(np.arange(N), deficit)
        rng.shuffle(pool)
        rows = np.sort(pool[: (pool.size // k) * k].reshape(-1, k), axis=1)
        before = n_edges
        n_edges = kernels.insert_rows(rows, edges, n_edges, deficit, bits)
        stalled = stalled + 1 if n_edges - before <= max(1, rows.shape[0] // 1000) else 0
    budget = repair_steps or 200 * N
    while budget > 0:
        rand = rng.integers(0, 2**63, size=max(1024, 4 * int(deficit.sum())), dtype=np.uint64)
        n_edges, _, steps, status = kernels.repair_regular(k, tolerance, rand, edges, n_edges,
                                                           deficit, bits, budget)
        budget -= steps
        if status != 1:
            break
    return edges[:n_edges], deficit


def random_regular_simple(k: int, D: int, N: int, tolerance: int = 0, seed: int = 0,
                          max_retries: int = 10) -> Hypergraph:
    """Simple k-uniform hypergraph with every degree in [D - tolerance, D].

    Random greedy insertion that rejects codegree violations, then a repair
    walk that alternately completes k-sets of deficient vertices and deletes
    random edges.  Las Vegas: restarts on a fresh substream up to ``max_retries``.
    """
    if k < 2 or D < 0 or N < 1 or tolerance < 0:
        raise ValueError("invalid parameters")
    if D == 0:
        return build_hypergraph(N, np.zeros((0, k), np.int64), uniformity=k)
    if k * D > N - 1:
        raise ValueError(f"infeasible: k*D = {k * D} exceeds N - 1 = {N - 1}")
    if tolerance == 0 and (N * D) % k:
        raise ValueError("infeasible: N*D not divisible by k with zero tolerance")
    for attempt in range(max_retries):
        rng = _rng.stream(seed, _rng.REGULAR, attempt)
        edges, deficit = _greedy_regular(k, D, N, tolerance, rng)
        if np.all(deficit <= tolerance):
            return _canonical(N, edges, k)
    raise GenerationError(
        f"random_regular_simple(k={k}, D={D}, N={N}, tol={tolerance}) failed "
        f"after {max_retries} attempts")


def near_regular_steiner_block(M: int, seed: int | None = 0, n1: int = N1_DEFAULT) -> Hypergraph:
    """S(M): a Steiner triple system on M + t points with t points removed.

    t < 6 is the smallest shift making M + t = 1 or 3 mod 6.
    """
    if M < n1:
        raise ValueError(f"block order {M} below threshold {n1}")
    t = next(s for s in range(6) if (M + s) % 6 in (1, 3))
    sts = steiner_triple_system(M + t, seed)
    mat = sts.edge_matrix()
    keep = np.all(mat < M, axis=1)
    return build_hypergraph(M, mat[keep], uniformity=3)


def _block_sizes(d: int, D: int, k: int) -> list[int]:
    total = (k - 1) ** 2 * D * D
    b = (k - 1) * (d - k)
    ell = math.ceil((k - 1) * D * D / (d - k))
    small = ell * b - total
    if not 0 <= small <= ell:
        raise ValueError("block partition infeasible")
    return [b - 1] * small + [b] * (ell - small)


def embed_into_near_regular(H: Hypergraph, D: int, C: int | None = None, seed: int = 0,
                            n1: int = N1_DEFAULT) -> tuple[Hypergraph, dict]:
    """Embed H into a host whose degrees lie in [D - K, D].

    The host is T = (k-1)^2 D^2 disjoint copies of H (copy c of vertex v has
    id c*N + v, copy 0 is H itself).  Every vertex with deficiency
    d = D - d_H(v) >= n1 gets a simple d-near-regular overlay on its T
    clones.  Returns the host and a report with the achieved K.
    """
    k = H.uniformity
    if k is None or k < 3:
        raise ValueError("embedding needs a k-uniform hypergraph with k >= 3")
    deg = H.degrees()
    if H.num_edges and deg.max() > D:
        raise ValueError(f"max degree {int(deg.max())} exceeds D = {D}")
    codeg = H.max_codegree()
    if C is not None and codeg > C:
        raise ValueError(f"codegree {codeg} exceeds C = {C}")
    N = H.num_vertices
    T = (k - 1) ** 2 * D * D
    base = H.edge_matrix()
    parts = [base + c * N for c in range(T)]
    clones = np.arange(T, dtype=np.int64) * N
    overlays = 0
    for v in np.flatnonzero(D - deg >= n1).tolist():
        d = int(D - deg[v])
        if k == 3:
            sizes = _block_sizes(d, D, k)
            off = 0
            for i, a in enumerate(sizes):
                blk = near_regular_steiner_block(a, seed=int(_rng.stream(seed, _rng.EMBED, v, i)
                                                             .integers(2**31)), n1=n1)
                parts.append(clones[off + blk.edge_matrix()] + v)
                off += a
        else:
            blk = random_regular_simple(k, d, T, tolerance=(k + 1) * (k - 1),
                                        seed=int(_rng.stream(seed, _rng.EMBED, v)
                                                 .integers(2**31)))
            parts.append(clones[blk.edge_matrix()] + v)
        overlays += 1
    mat = np.concatenate(parts) if parts else np.zeros((0, k), np.int64)
    host = build_hypergraph(T * N, mat, uniformity=k)
    hdeg = host.degrees()
    report = {"copies": T, "num_vertices": T * N, "overlaid_vertices": overlays,
              "K": int(D - hdeg.min()) if hdeg.size else 0,
              "max_degree": int(hdeg.max()) if hdeg.size else 0,
              "codegree": int(host.max_codegree()), "n1": n1}
    return host, report


@dataclass
class GeneratorSpec:
    """Serializable instance description used by configs and the CLI."""

    family: str
    n: int | None = None
    k: int = 3
    D: int | None = None
    C: int | None = None
    tolerance: int = 0
    seed: int = 0
    base: dict[str, Any] | None = field(default=None)

    FAMILIES = ("STS", "RandomRegularSimple", "NearRegularBlock", "EmbedHost")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        return cls(**d)


def generate(spec: GeneratorSpec) -> Hypergraph:
    if spec.family == "STS":
        return steiner_triple_system(spec.n, spec.seed)
    if spec.family == "RandomRegularSimple":
        return random_regular_simple(spec.k, spec.D, spec.n, spec.tolerance, spec.seed)
    if spec.family == "NearRegularBlock":
        return near_regular_steiner_block(spec.n, spec.seed)
    base = generate(GeneratorSpec.from_dict(spec.base))
    return embed_into_near_regular(base, spec.D, spec.C, spec.seed)[0]
