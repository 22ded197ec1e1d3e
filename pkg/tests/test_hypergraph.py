import io

import numpy as np
import pytest

from nibblematch import (
    Matching,
    build_hypergraph,
    codegree,
    degree,
    induced_subhypergraph,
    is_simple,
    max_codegree,
    verify_matching,
)
from nibblematch.hypergraph import PartiteTag, alive_edges, format_hypergraph, parse_hypergraph

from conftest import brute_codegree, brute_degrees


def test_fano_basic_counts(fano):
    assert fano.num_edges == 7
    assert fano.uniformity == 3
    assert fano.degrees().tolist() == [3] * 7
    assert max_codegree(fano) == 1
    assert is_simple(fano)


def test_degree_and_codegree_match_brute_force(regular3):
    assert np.array_equal(regular3.degrees(), brute_degrees(regular3))
    assert regular3.max_codegree() == brute_codegree(regular3)
    assert degree(regular3, 5) == brute_degrees(regular3)[5]


def test_codegree_pair():
    H = build_hypergraph(5, [[0, 1, 2], [0, 1, 3], [1, 2, 4]])
    assert codegree(H, 0, 1) == 2
    assert codegree(H, 1, 2) == 2
    assert codegree(H, 3, 4) == 0
    assert H.max_codegree() == 2
    with pytest.raises(ValueError):
        codegree(H, 1, 1)


def test_duplicates_are_kept_and_counted():
    H = build_hypergraph(4, [[0, 1, 2], [2, 1, 0], [1, 2, 3]])
    assert H.num_edges == 3
    assert H.duplicate_edge_count() == 1
    assert not is_simple(H)
    assert H.edge(1).tolist() == [0, 1, 2]


def test_mixed_sizes_have_no_uniformity():
    H = build_hypergraph(4, [[0, 1], [1, 2, 3]])
    assert H.uniformity is None
    assert H.edge_sizes().tolist() == [2, 3]
    with pytest.raises(ValueError):
        H.edge_matrix()


@pytest.mark.parametrize("edges", [[[0, 0, 1]], [[0, 1, 9]], [[]], [[-1, 2, 3]]])
def test_bad_edges_rejected(edges):
    with pytest.raises(ValueError):
        build_hypergraph(5, edges)


def test_declared_uniformity_checked():
    with pytest.raises(ValueError):
        build_hypergraph(4, [[0, 1], [1, 2, 3]], uniformity=3)
    empty = build_hypergraph(4, [], uniformity=3)
    assert empty.num_edges == 0 and empty.uniformity == 3


def test_check_catches_corruption(fano):
    fano.check()
    bad = type(fano)(7, fano.edge_ptr, fano.edge_vtx[::-1].copy(), 3)
    with pytest.raises(ValueError):
        bad.check()


def test_incidence_lists(fano):
    for v in range(7):
        inc = fano.incident_edges(v).tolist()
        assert inc == [e for e, line in enumerate(fano.edges) if v in line]


def test_text_round_trip(regular3):
    text = format_hypergraph(regular3)
    assert text.splitlines()[0] == f"60 {regular3.num_edges} 3"
    assert parse_hypergraph(text) == regular3


def test_text_round_trip_non_uniform():
    H = build_hypergraph(5, [[0, 1], [1, 2, 4], [3]])
    text = format_hypergraph(H)
    assert text.startswith("5 3 0\n")
    assert parse_hypergraph(text) == H


def test_parse_rejects_wrong_line_count():
    with pytest.raises(ValueError):
        parse_hypergraph("5 2 3\n0 1 2\n")


def test_write_to_path(tmp_path, fano):
    from nibblematch import read_hypergraph, write_hypergraph
    p = tmp_path / "f.txt"
    write_hypergraph(fano, p)
    assert read_hypergraph(p) == fano
    buf = io.StringIO()
    write_hypergraph(fano, buf)
    assert buf.getvalue() == p.read_text()


def test_verify_matching(fano):
    assert verify_matching(fano, [0])["valid"]
    assert not verify_matching(fano, [0, 1])["valid"]
    assert not verify_matching(fano, [3, 3])["valid"]
    rep = verify_matching(fano, Matching.of(fano, [0]))
    assert rep == {"valid": True, "size": 1, "covered_count": 3}
    with pytest.raises(ValueError):
        verify_matching(fano, [7])


def test_matching_covered_mask(fano):
    M = Matching.of(fano, [0])
    assert M.covered.tolist() == [True, True, True, False, False, False, False]
    assert len(Matching.empty(4)) == 0


def test_induced_subhypergraph(fano):
    sub, kept = induced_subhypergraph(fano, [0, 1, 2, 3, 4])
    assert kept.tolist() == [0, 1]
    assert sub.num_vertices == 7
    mask = np.zeros(7, bool)
    mask[[0, 1, 2, 3, 4]] = True
    assert alive_edges(fano, mask).tolist() == [True, True] + [False] * 5


def test_edge_subset_renumbers(fano):
    sub = fano.edge_subset([6, 0])
    assert sub.edges == [[2, 4, 5], [0, 1, 2]]


def test_partite_tag():
    H = build_hypergraph(5, [[0, 2, 3], [1, 3, 4]])
    tag = PartiteTag(np.array([-1, -1, 0, 0, 0]), 1, 2)
    assert tag.check(H)
    H2 = build_hypergraph(5, [[0, 1, 3]])
    assert not tag.check(H2)
