"""Kernel dispatch: numba-compiled loops or the vectorized numpy fallback."""

from ._accel import BACKEND

if BACKEND == "numba":
    from ._loops import (  # noqa: F401
        alive_edge_mask,
        batch_isolated,
        batch_matched_vertices,
        count_stars,
        enumerate_stars,
        first_fit,
        incidence,
        insert_rows,
        intersect_counts_exact,
        intersect_counts_simple,
        isolated_selection,
        link_pairs,
        masked_degrees,
        repair_regular,
        max_codegree,
        regular_repair,
        star_candidates,
        stat_D_all,
        stat_X,
        stat_Y,
        stat_Z,
        vertex_prob_sums,
    )
else:
    from ._kernels_numpy import (  # noqa: F401
        alive_edge_mask,
        batch_isolated,
        batch_matched_vertices,
        count_stars,
        enumerate_stars,
        first_fit,
        incidence,
        insert_rows,
        intersect_counts_exact,
        intersect_counts_simple,
        isolated_selection,
        link_pairs,
        masked_degrees,
        repair_regular,
        max_codegree,
        regular_repair,
        star_candidates,
        stat_D_all,
        stat_X,
        stat_Y,
        stat_Z,
        vertex_prob_sums,
    )
