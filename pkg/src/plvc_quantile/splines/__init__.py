"""B-spline basis construction and PLVC design assembly."""

from plvc_quantile.splines.basis import (
    KnotPlacement,
    SpecLike,
    block_offsets,
    build_design,
    constancy_df,
    eval_basis,
    make_constancy_transform,
    make_spec,
    reparameterize_theta,
    resolve_specs,
    restore_theta,
    split_design_for_constancy,
)

__all__ = [
    "KnotPlacement",
    "SpecLike",
    "block_offsets",
    "build_design",
    "constancy_df",
    "eval_basis",
    "make_constancy_transform",
    "make_spec",
    "reparameterize_theta",
    "resolve_specs",
    "restore_theta",
    "split_design_for_constancy",
]
