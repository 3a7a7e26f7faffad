"""Conditional density weights f_ij(0) by difference quotients of fitted quantiles."""

import logging

import numpy as np
from scipy.stats import norm

from plvc_quantile.config import settings
from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.errors import ArgumentError
from plvc_quantile.models.inference import DensityWeights, WeightMode
from plvc_quantile.services.fitting import fit
from plvc_quantile.services.solver import QuantileSolver
from plvc_quantile.splines import SpecLike

logger = logging.getLogger(__name__)

# tau +/- eps stays at least this fraction of min(tau, 1 - tau) away from 0 and 1
_BANDWIDTH_SHRINK = 0.99


def hall_sheather_bandwidth(tau: float, n: int) -> float:
    """
    Hall-Sheather bandwidth for quantile spacings.

    eps = 1.57 n^(-1/3) (1.5 phi(z)^2 / (2 z^2 + 1))^(2/3), z = Phi^-1(tau),
    clamped below 0.99 * min(tau, 1 - tau) so both tau +/- eps lie in (0, 1).

    Args:
        tau: Quantile level in (0, 1).
        n: Number of subjects.
    """
    z = float(norm.ppf(tau))
    density = float(norm.pdf(z))
    eps = 1.57 * n ** (-1.0 / 3.0) * (1.5 * density**2 / (2.0 * z**2 + 1.0)) ** (2.0 / 3.0)
    return min(eps, _BANDWIDTH_SHRINK * min(tau, 1.0 - tau))


def difference_quotient(
    spread: np.ndarray, eps: float, cap: float | None = None
) -> tuple[np.ndarray, int]:
    """
    f = 2 eps / spread, with f capped at ``cap`` (spreads below 2 eps / cap,
    including non-positive ones, are floored).

    Returns:
        (f_hat, number of floored entries).
    """
    cap = settings.density_cap if cap is None else cap
    spread = np.asarray(spread, dtype=float)
    floor = 2.0 * eps / cap
    floored = spread < floor
    return 2.0 * eps / np.maximum(spread, floor), int(np.count_nonzero(floored))


def estimate_weights(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tau: float,
    solver: QuantileSolver | None = None,
) -> DensityWeights:
    """
    Estimate f_ij(0) from fits at tau - eps and tau + eps.

    The spread at each observation is the difference of the two fitted
    quantiles x'(alpha(t, tau+eps) - alpha(t, tau-eps)) + z'(beta(tau+eps) - beta(tau-eps)).

    Raises:
        FitError: Either side fit failed.
    """
    eps = hall_sheather_bandwidth(tau, ds.n)
    lower = fit(ds, spec, tau - eps, solver=solver)
    upper = fit(ds, spec, tau + eps, solver=solver)
    # fitted values are y - residual, so their difference is r_lower - r_upper
    spread = lower.residuals - upper.residuals
    f_hat, floored = difference_quotient(spread, eps)
    if floored:
        logger.info(f"tau={tau}: {floored} of {ds.n_obs} density estimates capped")
    return DensityWeights(tau=tau, eps_n=eps, f_hat=f_hat, floor_count=floored)


def build_B(
    weights: DensityWeights | None,
    mode: WeightMode = WeightMode.ESTIMATED,
    n_obs: int | None = None,
) -> np.ndarray:
    """
    Diagonal of B = diag(f_11(0), ..., f_nm_n(0)) in dataset row order.

    Identity mode (or no weights) gives all ones, the homoscedastic form.
    """
    if mode is WeightMode.IDENTITY or weights is None:
        if n_obs is None:
            if weights is None:
                raise ArgumentError("n_obs is required without density weights")
            n_obs = int(weights.f_hat.shape[0])
        return np.ones(n_obs)
    return np.array(weights.f_hat, dtype=float)
