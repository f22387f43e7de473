"""Collaborative-representation classifiers and experiment harness."""

from ._core import (
    CollabrepError,
    Dictionary,
    Projector,
    classify,
    classify_crc_rls,
    coef_distribution_fit,
    compute_sci,
    corrupt_pixels,
    default_lambda,
    enroll,
    fit_pca,
    geometry_check,
    make_synthetic,
    normalize_columns,
    occlude_block,
    run_experiment,
    shrink,
    solve_alm_l1res,
    solve_constrained_lp,
    solve_fista_l1,
    solve_omp,
    solve_rls,
    vectorize_image,
)

__all__ = [
    "CollabrepError",
    "Dictionary",
    "Projector",
    "classify",
    "classify_crc_rls",
    "coef_distribution_fit",
    "compute_sci",
    "corrupt_pixels",
    "default_lambda",
    "enroll",
    "fit_pca",
    "geometry_check",
    "make_synthetic",
    "normalize_columns",
    "occlude_block",
    "run_experiment",
    "shrink",
    "solve_alm_l1res",
    "solve_constrained_lp",
    "solve_fista_l1",
    "solve_omp",
    "solve_rls",
    "vectorize_image",
]
