"""Hypergraph, matching and verification primitives."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels


class Hypergraph:
    """Multi-hypergraph on vertices ``0..n-1`` stored in CSR form.

    Edges are sorted vertex lists; repeated edges are allowed and keep
    distinct ids.  Instances are treated as immutable after construction.
    """

    __slots__ = ("num_vertices", "edge_ptr", "edge_vtx", "uniformity", "_cache")

    def __init__(self, num_vertices: int, edge_ptr: np.ndarray, edge_vtx: np.ndarray,
                 uniformity: int | None = None):
        self.num_vertices = int(num_vertices)
        self.edge_ptr = np.ascontiguousarray(edge_ptr, dtype=np.int64)
        self.edge_vtx = np.ascontiguousarray(edge_vtx, dtype=np.int64)
        self.uniformity = uniformity
        self._cache: dict = {}

    @property
    def num_edges(self) -> int:
        return self.edge_ptr.shape[0] - 1

    def __len__(self) -> int:
        return self.num_edges

    def __repr__(self) -> str:
        return (f"Hypergraph(n={self.num_vertices}, m={self.num_edges}, "
                f"k={self.uniformity})")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.num_vertices == other.num_vertices
                and self.uniformity == other.uniformity
                and np.array_equal(self.edge_ptr, other.edge_ptr)
                and np.array_equal(self.edge_vtx, other.edge_vtx))

    __hash__ = None

    def edge_sizes(self) -> np.ndarray:
        return np.diff(self.edge_ptr)

    def edge(self, e: int) -> np.ndarray:
        return self.edge_vtx[self.edge_ptr[e]:self.edge_ptr[e + 1]]

    @property
    def edges(self) -> list[list[int]]:
        return [self.edge(e).tolist() for e in range(self.num_edges)]

    def edge_matrix(self) -> np.ndarray:
        """(m, k) view of the edges; only for uniform hypergraphs."""
        if self.uniformity is None:
            raise ValueError("edge_matrix needs a uniform hypergraph")
        return self.edge_vtx.reshape(self.num_edges, self.uniformity)

    @property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        if "inc" not in self._cache:
            self._cache["inc"] = kernels.incidence(self.edge_ptr, self.edge_vtx, self.num_vertices)
        return self._cache["inc"]

    def incident_edges(self, v: int) -> np.ndarray:
        inc_ptr, inc_edges = self.incidence
        return inc_edges[inc_ptr[v]:inc_ptr[v + 1]]

    def degrees(self) -> np.ndarray:
        if "deg" not in self._cache:
            self._cache["deg"] = np.diff(self.incidence[0])
        return self._cache["deg"]

    def max_codegree(self) -> int:
        if "codeg" not in self._cache:
            inc_ptr, inc_edges = self.incidence
            self._cache["codeg"] = int(kernels.max_codegree(
                self.edge_ptr, self.edge_vtx, inc_ptr, inc_edges, self.num_vertices))
        return self._cache["codeg"]

    def duplicate_edge_count(self) -> int:
        """Number of edges that repeat an earlier edge."""
        if self.num_edges == 0:
            return 0
        if self.uniformity is not None:
            uniq = np.unique(self.edge_matrix(), axis=0)
            return self.num_edges - uniq.shape[0]
        seen = {tuple(e) for e in self.edges}
        return self.num_edges - len(seen)

    def edge_subset(self, edge_ids: Sequence[int] | np.ndarray) -> "Hypergraph":
        """Sub-hypergraph keeping the given edges (renumbered in the given order)."""
        ids = np.asarray(edge_ids, dtype=np.int64)
        sizes = self.edge_sizes()[ids]
        ptr = np.zeros(ids.size + 1, np.int64)
        np.cumsum(sizes, out=ptr[1:])
        offs = np.arange(ptr[-1]) - np.repeat(ptr[:-1], sizes)
        vtx = self.edge_vtx[np.repeat(self.edge_ptr[ids], sizes) + offs]
        return Hypergraph(self.num_vertices, ptr, vtx, self.uniformity)

    def check(self) -> None:
        """Assert the structural invariants; raises ValueError on violation."""
        if self.edge_ptr[0] != 0 or np.any(np.diff(self.edge_ptr) < 1):
            raise ValueError("malformed edge pointer")
        if self.edge_vtx.size and (self.edge_vtx.min() < 0
                                   or self.edge_vtx.max() >= self.num_vertices):
            raise ValueError("vertex id out of range")
        sizes = self.edge_sizes()
        if self.uniformity is not None and np.any(sizes != self.uniformity):
            raise ValueError("edge size differs from uniformity")
        inner = np.ones(self.edge_vtx.size, bool)
        inner[self.edge_ptr[:-1]] = False
        if np.any(np.diff(self.edge_vtx)[inner[1:]] <= 0):
            raise ValueError("edge vertices not strictly increasing")
        inc_ptr, inc_edges = kernels.incidence(self.edge_ptr, self.edge_vtx, self.num_vertices)
        if "inc" in self._cache:
            cp, ce = self._cache["inc"]
            if not (np.array_equal(cp, inc_ptr) and np.array_equal(ce, inc_edges)):
                raise ValueError("stale incidence index")


def build_hypergraph(n: int, edges, uniformity: int | None = None) -> Hypergraph:
    """Validate and index an edge list.

    ``edges`` is either a list of vertex-id lists or an (m, k) integer array.
    Uniformity is inferred when all edges share a size; pass ``uniformity``
    to tag an edgeless hypergraph.
    """
    if isinstance(edges, np.ndarray) and edges.ndim == 2:
        mat = np.sort(np.asarray(edges, dtype=np.int64), axis=1)
        m, k = mat.shape
        if m and k == 0:
            raise ValueError("empty edge")
        if m and np.any(np.diff(mat, axis=1) == 0):
            raise ValueError("edge with repeated vertex")
        ptr = np.arange(m + 1, dtype=np.int64) * k
        vtx = mat.ravel()
        sizes = np.full(m, k)
        if m == 0 and uniformity is None and k > 0:
            uniformity = k
    else:
        lists = [sorted(int(v) for v in e) for e in edges]
        sizes = np.array([len(e) for e in lists], dtype=np.int64)
        if np.any(sizes == 0):
            raise ValueError("empty edge")
        for e in lists:
            if any(a == b for a, b in zip(e, e[1:])):
                raise ValueError(f"edge with repeated vertex: {e}")
        ptr = np.zeros(len(lists) + 1, np.int64)
        np.cumsum(sizes, out=ptr[1:])
        vtx = np.fromiter((v for e in lists for v in e), dtype=np.int64, count=int(ptr[-1]))
    if vtx.size and (vtx.min() < 0 or vtx.max() >= n):
        raise ValueError("vertex id out of range")
    if sizes.size:
        k0 = int(sizes[0])
        inferred = k0 if np.all(sizes == k0) else None
        if uniformity is not None and inferred != uniformity:
            raise ValueError(f"edges are not {uniformity}-uniform")
        uniformity = inferred
    return Hypergraph(n, ptr, vtx, uniformity)


def degree(H: Hypergraph, v: int) -> int:
    return int(H.degrees()[v])


def codegree(H: Hypergraph, u: int, v: int) -> int:
    if u == v:
        raise ValueError("codegree needs two distinct vertices")
    return int(np.intersect1d(H.incident_edges(u), H.incident_edges(v), assume_unique=True).size)


def max_codegree(H: Hypergraph) -> int:
    return H.max_codegree()


def is_simple(H: Hypergraph) -> bool:
    return H.max_codegree() <= 1 and H.duplicate_edge_count() == 0


def alive_edges(H: Hypergraph, alive: np.ndarray) -> np.ndarray:
    """Mask of edges lying entirely inside the alive vertex set."""
    return kernels.alive_edge_mask(H.edge_ptr, H.edge_vtx, np.asarray(alive, dtype=bool))


def induced_subhypergraph(H: Hypergraph, U: Iterable[int] | np.ndarray) -> tuple[Hypergraph, np.ndarray]:
    """H[U] with vertex ids preserved, plus the original ids of the kept edges."""
    alive = np.zeros(H.num_vertices, bool)
    U = np.asarray(U)
    if U.dtype == bool:
        alive[:] = U
    else:
        alive[U.astype(np.int64)] = True
    kept = np.flatnonzero(alive_edges(H, alive))
    return H.edge_subset(kept), kept


@dataclass(frozen=True)
class Matching:
    """Edge ids (sorted) of a matching together with its covered-vertex mask."""

    edge_ids: np.ndarray
    covered: np.ndarray

    @classmethod
    def of(cls, H: Hypergraph, edge_ids) -> "Matching":
        ids = np.unique(np.asarray(edge_ids, dtype=np.int64))
        if ids.size and (ids[0] < 0 or ids[-1] >= H.num_edges):
            raise ValueError("dangling edge id in matching")
        covered = np.zeros(H.num_vertices, bool)
        if ids.size:
            covered[H.edge_subset(ids).edge_vtx] = True
        return cls(ids, covered)

    @classmethod
    def empty(cls, n: int) -> "Matching":
        return cls(np.zeros(0, np.int64), np.zeros(n, bool))

    def __len__(self) -> int:
        return int(self.edge_ids.size)


def verify_matching(H: Hypergraph, M: Matching | Sequence[int]) -> dict:
    """Pairwise disjointness audit recomputed from the raw edge ids."""
    ids = M.edge_ids if isinstance(M, Matching) else np.asarray(M, dtype=np.int64)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= H.num_edges):
        raise ValueError("dangling edge id in matching")
    vtx = H.edge_subset(ids).edge_vtx if ids.size else np.zeros(0, np.int64)
    covered = np.unique(vtx).size
    distinct_ids = np.unique(ids).size == ids.size
    return {"valid": bool(distinct_ids and covered == vtx.size),
            "size": int(ids.size), "covered_count": int(covered)}


@dataclass(frozen=True)
class PartiteTag:
    """Side of every vertex: -1 for L, r >= 0 for copy r of the R side."""

    part_of_vertex: np.ndarray
    a: int
    b: int

    def check(self, H: Hypergraph) -> bool:
        on_left = (self.part_of_vertex[H.edge_vtx] < 0).astype(np.int64)
        eidx = np.repeat(np.arange(H.num_edges), H.edge_sizes())
        left = np.bincount(eidx, weights=on_left, minlength=H.num_edges)
        sizes = H.edge_sizes()
        return bool(np.all(left == self.a) and np.all(sizes - left == self.b))


def format_hypergraph(H: Hypergraph) -> str:
    buf = io.StringIO()
    write_hypergraph(H, buf)
    return buf.getvalue()


def write_hypergraph(H: Hypergraph, dest) -> None:
    """Write the "n m k" text format (k = 0 marks a non-uniform edge list)."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="\n") as fh:
            write_hypergraph(H, fh)
        return
    k = H.uniformity if H.uniformity is not None else 0
    dest.write(f"{H.num_vertices} {H.num_edges} {k}\n")
    if H.num_edges == 0:
        return
    if H.uniformity is not None:
        np.savetxt(dest, H.edge_matrix(), fmt="%d", delimiter=" ", newline="\n")
    else:
        for e in range(H.num_edges):
            dest.write(" ".join(map(str, H.edge(e).tolist())) + "\n")


def parse_hypergraph(text: str) -> Hypergraph:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty hypergraph file")
    n, m, k = (int(t) for t in lines[0].split())
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != m:
        raise ValueError(f"expected {m} edge lines, found {len(body)}")
    if k > 0:
        flat = np.array(" ".join(body).split(), dtype=np.int64)
        if flat.size != m * k:
            raise ValueError("edge line with wrong number of vertices")
        return build_hypergraph(n, flat.reshape(m, k), uniformity=k)
    return build_hypergraph(n, [[int(t) for t in ln.split()] for ln in body])


def read_hypergraph(path) -> Hypergraph:
    with open(path) as fh:
        return parse_hypergraph(fh.read())
