"""B-spline bases, the PLVC design matrix, and the constancy re-parameterization.

Column layout of the varying part: coefficient l occupies a contiguous block of
``basis_dim_l`` columns holding x_l * pi(t). The constant part Z follows in the
stacked design used by the fitter.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Literal

import numpy as np
from scipy.interpolate import BSpline

from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.errors import ArgumentError, DegenerateKnotsError, DomainError
from plvc_quantile.models.spline import ConstancyTransform, SplineSpec

KnotPlacement = Literal["uniform", "sample-quantile"]
SpecLike = SplineSpec | Sequence[SplineSpec]

# Minimal separation imposed between coincident sample-quantile knots
_KNOT_GAP = 1e-8


def make_spec(
    k_n: int,
    degree: int = 3,
    placement: KnotPlacement = "uniform",
    times: np.ndarray | None = None,
) -> SplineSpec:
    """
    Build a clamped knot vector over [0, 1].

    Args:
        k_n: Number of internal knots (>= 0).
        degree: Spline degree (>= 0); 3 gives cubic splines.
        placement: "uniform" puts knots at i/(k_n+1); "sample-quantile" puts
            them at the empirical i/(k_n+1) quantiles of ``times``.
        times: Mapped times in [0, 1], required for sample-quantile placement.

    Returns:
        SplineSpec with basis_dim = k_n + degree + 1.

    Raises:
        ArgumentError: Negative k_n or degree, or missing times.
        DegenerateKnotsError: Quantile knots cannot be separated inside (0, 1).
    """
    if k_n < 0 or degree < 0:
        raise ArgumentError(f"k_n and degree must be non-negative (got {k_n}, {degree})")

    probs = np.arange(1, k_n + 1) / (k_n + 1)
    if placement == "uniform":
        internal = probs
    elif placement == "sample-quantile":
        if times is None:
            raise ArgumentError("sample-quantile placement requires a time sample")
        sample = np.asarray(times, dtype=float)
        if np.unique(sample).size < k_n:
            raise DegenerateKnotsError(
                f"Need at least {k_n} distinct times for {k_n} quantile knots"
            )
        internal = _separate(np.quantile(sample, probs)) if k_n else probs
    else:
        raise ArgumentError(f"Unknown knot placement '{placement}'")

    knots = np.concatenate([np.zeros(degree + 1), internal, np.ones(degree + 1)])
    return SplineSpec(degree=degree, knots=tuple(float(k) for k in knots))


def _separate(knots: np.ndarray) -> np.ndarray:
    """Push coincident knots apart by the minimal gap, keeping them inside (0, 1)."""
    out = np.clip(np.asarray(knots, dtype=float), _KNOT_GAP, 1.0 - _KNOT_GAP)
    for i in range(1, len(out)):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + _KNOT_GAP
    if len(out) and out[-1] >= 1.0:
        raise DegenerateKnotsError("Quantile knots collapse onto the right boundary")
    return out


def eval_basis(spec: SplineSpec, t: float | np.ndarray) -> np.ndarray:
    """
    Evaluate the normalized B-spline basis pi(t).

    The last basis function is treated as right-continuous, so
    pi(1) = (0, ..., 0, 1).

    Args:
        spec: Spline basis configuration.
        t: A time or array of times in [0, 1].

    Returns:
        Vector of length basis_dim for scalar t, else an array of shape
        (len(t), basis_dim).

    Raises:
        DomainError: Any t outside [0, 1].
    """
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    bad = (arr < 0.0) | (arr > 1.0) | ~np.isfinite(arr)
    if np.any(bad):
        raise DomainError(float(arr[np.argmax(bad)]))
    basis = BSpline.design_matrix(arr, spec.knot_array, spec.degree).toarray()
    if np.ndim(t) == 0:
        return np.asarray(basis[0])
    return np.asarray(basis)


def resolve_specs(spec: SpecLike, p: int) -> tuple[SplineSpec, ...]:
    """Expand a shared spec to one per varying coefficient, or check a per-coefficient list."""
    if isinstance(spec, SplineSpec):
        return (spec,) * p
    specs = tuple(spec)
    if len(specs) != p:
        raise ArgumentError(f"Expected {p} per-coefficient spline specs, got {len(specs)}")
    return specs


def block_offsets(specs: Sequence[SplineSpec]) -> np.ndarray:
    """Start column of each coefficient block, plus the total width at the end."""
    return np.concatenate([[0], np.cumsum([s.basis_dim for s in specs])]).astype(int)


def _basis_per_coefficient(
    t: np.ndarray, specs: Sequence[SplineSpec]
) -> list[np.ndarray]:
    cache: dict[SplineSpec, np.ndarray] = {}
    out = []
    for spec in specs:
        if spec not in cache:
            cache[spec] = eval_basis(spec, t).reshape(len(t), spec.basis_dim)
        out.append(cache[spec])
    return out


def build_design(ds: LongitudinalDataset, spec: SpecLike) -> tuple[np.ndarray, np.ndarray]:
    """
    Assemble the varying-part design Pi and the constant-part design Z.

    Row (i, j) of Pi is (x_ij1 * pi(t_ij)', ..., x_ijp * pi(t_ij)').

    Args:
        ds: Time-mapped dataset.
        spec: Shared spec, or one spec per varying coefficient.

    Returns:
        (Pi of shape (N, sum basis_dim_l), Z of shape (N, q)).
    """
    specs = resolve_specs(spec, ds.p)
    bases = _basis_per_coefficient(ds.t, specs)
    blocks = [ds.x[:, [l]] * bases[l] for l in range(ds.p)]
    return np.hstack(blocks), np.array(ds.z, dtype=float)


def make_constancy_transform(spec: SplineSpec) -> ConstancyTransform:
    """
    Build G with first row all ones and identity rows below.

    G @ pi(t) = (sum_s B_s(t), B_2(t), ..., B_K(t)) = (1, pi_bar(t)).

    Raises:
        ArgumentError: basis_dim < 2 (nothing left to test).
    """
    dim = spec.basis_dim
    if dim < 2:
        raise ArgumentError("Constancy transform needs basis_dim >= 2")
    G = np.eye(dim)
    G[0, :] = 1.0
    return ConstancyTransform(G=G, reduced_dim=dim - 1)


def split_design_for_constancy(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tested: Sequence[int],
) -> tuple[np.ndarray, np.ndarray]:
    """
    Re-parameterize Pi so the non-constant directions of tested coefficients are isolated.

    Pi1 holds x_l * pi_bar(t) for each tested l (in the given order). Pi2 holds
    the plain x_l column for each tested l, followed by the full blocks
    x_l * pi(t) of every untested l in coefficient order. The column span of
    (Pi1, Pi2) equals that of Pi.

    Args:
        ds: Time-mapped dataset.
        spec: Shared spec, or one spec per varying coefficient.
        tested: Zero-based indices of the varying coefficients under test.

    Returns:
        (Pi1, Pi2).

    Raises:
        ArgumentError: Empty, duplicated or out-of-range tested indices.
    """
    tested = list(tested)
    if not tested:
        raise ArgumentError("At least one varying coefficient must be tested")
    if len(set(tested)) != len(tested) or any(l < 0 or l >= ds.p for l in tested):
        raise ArgumentError(f"Tested indices {tested} invalid for p={ds.p}")

    specs = resolve_specs(spec, ds.p)
    bases = _basis_per_coefficient(ds.t, specs)
    reduced = []
    constants = []
    for l in tested:
        transform = make_constancy_transform(specs[l])
        reduced.append(ds.x[:, [l]] * transform.reduced_basis(bases[l]))
        constants.append(ds.x[:, [l]])
    untested = [ds.x[:, [l]] * bases[l] for l in range(ds.p) if l not in tested]
    return np.hstack(reduced), np.hstack(constants + untested)


def constancy_df(spec: SpecLike, p: int, tested: Sequence[int]) -> int:
    """Number of tested directions, sum over tested l of (k_l + degree_l)."""
    specs = resolve_specs(spec, p)
    return int(sum(specs[l].basis_dim - 1 for l in tested))


def reparameterize_theta(theta: np.ndarray) -> tuple[float, np.ndarray]:
    """Map a spline block theta to (gamma, xi): gamma = theta_1, xi_s = theta_s - theta_1."""
    theta = np.asarray(theta, dtype=float)
    return float(theta[0]), theta[1:] - theta[0]


def restore_theta(gamma: float, xi: np.ndarray) -> np.ndarray:
    """Inverse of reparameterize_theta."""
    return np.concatenate([[gamma], gamma + np.asarray(xi, dtype=float)])
