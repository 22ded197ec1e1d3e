"""Semi-random hypergraph matching: nibble, augmenting stars, simplification
and chromatic-index colouring."""

from ._accel import BACKEND
from .hypergraph import (
    Hypergraph,
    Matching,
    PartiteTag,
    build_hypergraph,
    codegree,
    degree,
    induced_subhypergraph,
    is_simple,
    max_codegree,
    read_hypergraph,
    verify_matching,
    write_hypergraph,
)

__version__ = "0.1.0"
