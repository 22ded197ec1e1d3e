"""The numpy fallback must agree with the compiled loops, kernel by kernel
and end to end."""

import os
import subprocess
import sys
import textwrap

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nibblematch import _kernels_numpy as vec
from nibblematch import _loops as loops
from nibblematch import build_hypergraph


@st.composite
def hypergraphs(draw, max_n=14, max_m=25):
    n = draw(st.integers(3, max_n))
    k = draw(st.integers(2, min(4, n)))
    m = draw(st.integers(0, max_m))
    rows = [sorted(draw(st.permutations(range(n)))[:k]) for _ in range(m)]
    H = build_hypergraph(n, np.array(rows, dtype=np.int64).reshape(m, k), uniformity=k)
    alive = np.array(draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    return H, alive


@settings(max_examples=60, deadline=None)
@given(hypergraphs())
def test_vectorized_kernels_match_loops(case):
    H, alive = case
    n = H.num_vertices
    p, v = H.edge_ptr, H.edge_vtx
    inc = loops.incidence(p, v, n)
    for a, b in zip(inc, vec.incidence(p, v, n)):
        assert np.array_equal(a, b)
    inc_ptr, inc_edges = inc
    mask = loops.alive_edge_mask(p, v, alive)
    assert np.array_equal(mask, vec.alive_edge_mask(p, v, alive))
    deg = loops.masked_degrees(p, v, mask, n)
    assert np.array_equal(deg, vec.masked_degrees(p, v, mask, n))
    assert np.array_equal(loops.intersect_counts_simple(p, v, mask, deg),
                          vec.intersect_counts_simple(p, v, mask, deg))
    assert np.array_equal(loops.intersect_counts_exact(p, v, mask, inc_ptr, inc_edges),
                          vec.intersect_counts_exact(p, v, mask, inc_ptr, inc_edges))
    prob = np.linspace(0.1, 0.9, H.num_edges) * mask
    assert np.allclose(loops.vertex_prob_sums(p, v, mask, prob, n),
                       vec.vertex_prob_sums(p, v, mask, prob, n))
    assert np.array_equal(loops.isolated_selection(p, v, mask, n),
                          vec.isolated_selection(p, v, mask, n))
    assert loops.max_codegree(p, v, inc_ptr, inc_edges, n) == \
        vec.max_codegree(p, v, inc_ptr, inc_edges, n)
    assert np.array_equal(loops.stat_D_all(p, v, alive, n), vec.stat_D_all(p, v, alive, n))
    covered = ~alive & (np.arange(n) % 2 == 0)
    xs = np.arange(n, dtype=np.int64)
    assert np.array_equal(loops.stat_Z(p, v, inc_ptr, inc_edges, alive, covered, xs),
                          vec.stat_Z(p, v, inc_ptr, inc_edges, alive, covered, xs))


@settings(max_examples=40, deadline=None)
@given(hypergraphs(), st.integers(0, 2**31))
def test_batch_kernels_match_loops(case, seed):
    H, _ = case
    rng = np.random.default_rng(seed)
    samples = 6
    picks = [np.flatnonzero(rng.random(H.num_edges) < 0.4) for _ in range(samples)]
    ptr = np.zeros(samples + 1, np.int64)
    ptr[1:] = np.cumsum([x.size for x in picks])
    idx = np.concatenate(picks).astype(np.int64) if picks else np.zeros(0, np.int64)
    n = H.num_vertices
    assert np.array_equal(loops.batch_isolated(H.edge_ptr, H.edge_vtx, ptr, idx, n),
                          vec.batch_isolated(H.edge_ptr, H.edge_vtx, ptr, idx, n))
    assert np.array_equal(loops.batch_matched_vertices(H.edge_ptr, H.edge_vtx, ptr, idx, n),
                          vec.batch_matched_vertices(H.edge_ptr, H.edge_vtx, ptr, idx, n))


PIPELINE_SCRIPT = textwrap.dedent("""
    import hashlib, warnings
    warnings.simplefilter("ignore")
    import numpy as np
    from nibblematch import BACKEND
    from nibblematch.generators import random_regular_simple, steiner_triple_system
    from nibblematch.nibble import NibbleConfig, run_nibble
    from nibblematch.augment import PipelineParams, full_simple_pipeline
    from nibblematch.chromatic import chromatic_index_coloring
    h = hashlib.sha256()
    H = random_regular_simple(4, 8, 120, seed=0)
    h.update(H.edge_vtx.tobytes())
    res = run_nibble(H, NibbleConfig(gamma=0.5, seed=1))
    h.update(res.log.to_csv().encode())
    out = full_simple_pipeline(H, PipelineParams(k=4), seed=2)
    h.update(out.matching.edge_ids.tobytes())
    col, _ = chromatic_index_coloring(steiner_triple_system(13, seed=1), seed=0)
    h.update(col.colors.tobytes())
    print(BACKEND, h.hexdigest())
""")


def run_backend(name):
    env = dict(os.environ, NIBBLEMATCH_BACKEND=name)
    proc = subprocess.run([sys.executable, "-c", PIPELINE_SCRIPT], env=env,
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout.split()


def test_backends_agree_end_to_end():
    a = run_backend("numba")
    b = run_backend("numpy")
    assert a[0] == "numba" and b[0] == "numpy"
    assert a[1] == b[1]


def test_unknown_backend_rejected():
    env = dict(os.environ, NIBBLEMATCH_BACKEND="cuda")
    proc = subprocess.run([sys.executable, "-c", "import nibblematch"], env=env,
                          capture_output=True, text=True)
    assert proc.returncode != 0
    assert "NIBBLEMATCH_BACKEND" in proc.stderr
