"""Monte Carlo study tool for PLVC Quantile."""

from typing import Any, Literal

from plvc_quantile.audit import audit_log
from plvc_quantile.models.simulation import SimulationConfig, StudyTest
from plvc_quantile.server import mcp
from plvc_quantile.services.simulation import mc_level_power, mc_mse
from plvc_quantile.services.workflow import parse_method

# Keep interactive studies short; larger runs belong on the command line
_MAX_REPS = 500


@mcp.tool()
@audit_log
async def simulate_study(
    study: Literal["level-power", "mse"] = "level-power",
    case: Literal[1, 2, 3] = 1,
    n: int = 100,
    tau: float = 0.5,
    beta: float = 0.0,
    eta: float = 0.0,
    rho: float = 0.8,
    reps: int = 100,
    seed: int = 0,
    truth: Literal["plvc", "lcc", "constancy"] = "plvc",
    hypothesis: Literal["beta", "constancy"] = "beta",
    methods: str = "qrs,qrs_delta,wald",
    knots: int | None = None,
) -> dict[str, Any]:
    """
    Run a Monte Carlo level/power or estimation-accuracy study.

    Each replicate simulates n subjects with irregular visits near times
    0, 1, ..., 10, four varying coefficients and one binary constant
    covariate z with effect beta.

    Args:
        study: "level-power" (rejection rates) or "mse" (MSE and bias of
               beta-hat for the PLVC and constant-coefficient estimators).
        case: Error structure: 1 exchangeable normal, 2 AR(1) normal,
              3 exchangeable multivariate t(3).
        n: Number of subjects (2-1000).
        tau: Quantile level in (0, 1).
        beta: True effect of z (0 gives the level under H0: beta = 0).
        eta: Departure of alpha_1 from constancy (truth="constancy").
        rho: Within-subject correlation in [0, 1).
        reps: Number of replicates (1-500).
        seed: Root seed; identical arguments reproduce identical reports.
        truth: Coefficient functions to simulate from.
        hypothesis: For level-power: "beta" or "constancy" (of alpha_1).
        methods: Comma-separated tests among qrs, qrs_delta, wald.
        knots: Fixed internal knot count; omitted selects by SIC per replicate.

    Returns:
        Report with the configuration, failure count, and either per-method
        rejection rates with binomial standard errors or per-estimator MSE.
    """
    config = SimulationConfig(
        case=case,
        n=max(2, min(1000, n)),
        tau=tau,
        beta=beta,
        eta=eta,
        rho=rho,
        reps=max(1, min(_MAX_REPS, reps)),
        seed=max(0, seed),
        truth=truth,
        knots=knots,
    )
    if study == "mse":
        return mc_mse(config).to_dict()

    test = StudyTest(
        hypothesis=hypothesis,
        methods=[parse_method(m) for m in methods.split(",") if m.strip()],
    )
    return mc_level_power(config, test).to_dict()
