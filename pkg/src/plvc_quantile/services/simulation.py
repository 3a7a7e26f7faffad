"""Simulated longitudinal designs and Monte Carlo level, power and MSE studies.

Every replicate draws from its own counter-based stream
Philox(SeedSequence([seed, replicate])), so results do not depend on the
order or the process in which replicates run.
"""

import logging
import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm
from scipy.stats import t as student_t

from plvc_quantile.config import settings
from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.errors import ArgumentError, PLVCError, ReplicateFailureError
from plvc_quantile.models.inference import Correlation, TestMethod
from plvc_quantile.models.simulation import (
    EstimatorSummary,
    McReport,
    MethodRate,
    SimulatedDataset,
    SimulationConfig,
    StudyTest,
)
from plvc_quantile.models.spline import SplineSpec
from plvc_quantile.services.fitting import eval_alpha, fit, fit_constant, select_knots
from plvc_quantile.services.inference import constancy_test, rank_score_beta, wald_test
from plvc_quantile.splines import make_spec

logger = logging.getLogger(__name__)

SCHEDULE = np.arange(1, 11, dtype=float)
SKIP_PROBABILITY = 0.2
LCC_ALPHA = (15.0, 2.0, 6.0, -4.0)
VARYING_NAMES = ("x1", "x2", "x3")
CONSTANT_NAMES = ("z",)


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Independent generator for one replicate of a study."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replicate])))


def measurement_times(rng: np.random.Generator | int) -> np.ndarray:
    """
    Irregular visit times of one subject.

    Time 0 is always kept; each of the visits 1..10 is skipped with
    probability 0.2 and the kept ones are jittered by U(-0.5, 0.5).
    """
    if not isinstance(rng, np.random.Generator):
        rng = replicate_rng(int(rng), 0)
    keep = rng.random(SCHEDULE.size) >= SKIP_PROBABILITY
    jitter = rng.uniform(-0.5, 0.5, size=SCHEDULE.size)
    return np.sort(np.concatenate([[0.0], (SCHEDULE + jitter)[keep]]))


def marginal_quantile(case: int, tau: float) -> float:
    """tau-quantile of the error marginal: standard normal (cases 1, 2) or t(3) (case 3)."""
    if case in (1, 2):
        return float(norm.ppf(tau))
    if case == 3:
        return float(student_t.ppf(tau, 3))
    raise ArgumentError(f"Unknown simulation case {case}")


def alpha_functions(t: np.ndarray, truth: str = "plvc", eta: float = 1.0) -> np.ndarray:
    """
    True coefficient functions (alpha_0, ..., alpha_3) at original-scale times.

    ``plvc`` uses the estimation-study curves, ``lcc`` the constants
    (15, 2, 6, -4), and ``constancy`` replaces alpha_1 by
    2 - 3 eta cos((t - 25) pi / 15).
    """
    t = np.asarray(t, dtype=float)
    if truth == "lcc":
        return np.tile(np.asarray(LCC_ALPHA), (t.size, 1))
    a0 = 15.0 + 20.0 * np.sin(t * np.pi / 20.0)
    if truth == "constancy":
        a1 = 2.0 - 3.0 * eta * np.cos((t - 25.0) * np.pi / 15.0)
    else:
        a1 = 2.0 - 3.0 * np.cos((3.0 * t - 25.0) * np.pi / 15.0)
    a2 = 6.0 - 0.6 * t
    a3 = -4.0 + (20.0 - 3.0 * t) ** 3 / 1000.0
    return np.column_stack([a0, a1, a2, a3])


def _subject_errors(
    rng: np.random.Generator, times: np.ndarray, case: int, rho: float
) -> np.ndarray:
    m = times.size
    if case == 2:
        sigma = rho ** np.abs(times[:, None] - times[None, :])
    else:
        sigma = (1.0 - rho) * np.eye(m) + rho * np.ones((m, m))
    e = np.linalg.cholesky(sigma) @ rng.standard_normal(m)
    if case == 3:
        e = math.sqrt(3.0) * e / np.sqrt(rng.chisquare(3, size=m))
    return e


def gen_dataset(config: SimulationConfig, replicate_index: int) -> SimulatedDataset:
    """
    Draw one dataset.

    y = alpha_0(t) + alpha_1(t) x1 + alpha_2(t) x2 + alpha_3(t) x3 + beta z
        + (1 + |x1|) (e - F^-1(tau))

    with x1 ~ N(0, 1), x2 ~ U(t/10, 2 + t/10), x3 ~ Exp(1) per visit and
    z ~ Bernoulli(0.5) per subject, so the conditional tau-quantile of y is
    the linear predictor.
    """
    rng = replicate_rng(config.seed, replicate_index)
    center = marginal_quantile(config.case, config.tau)

    subjects: list[np.ndarray] = []
    times: list[np.ndarray] = []
    covariates: list[np.ndarray] = []
    zs: list[np.ndarray] = []
    errors: list[np.ndarray] = []
    for i in range(config.n):
        t = measurement_times(rng)
        m = t.size
        x1 = rng.standard_normal(m)
        x2 = rng.uniform(t / 10.0, 2.0 + t / 10.0)
        x3 = rng.exponential(1.0, size=m)
        z = np.full(m, float(rng.random() < 0.5))
        subjects.append(np.full(m, i))
        times.append(t)
        covariates.append(np.column_stack([x1, x2, x3]))
        zs.append(z)
        errors.append(_subject_errors(rng, t, config.case, config.rho))

    time = np.concatenate(times)
    x = np.vstack(covariates)
    z = np.concatenate(zs)
    e = np.concatenate(errors)
    alpha = alpha_functions(time, config.truth, config.eta)
    design = np.column_stack([np.ones(time.size), x])
    y = np.sum(design * alpha, axis=1) + config.beta * z + (1.0 + np.abs(x[:, 0])) * (e - center)

    labels = [f"s{i:04d}" for i in np.concatenate(subjects)]
    ds = LongitudinalDataset.from_arrays(
        labels,
        time,
        y,
        x,
        z[:, None],
        varying_names=VARYING_NAMES,
        constant_names=CONSTANT_NAMES,
        intercept=True,
    )
    # rows are already subject-contiguous and time-sorted, so errors stay aligned
    return SimulatedDataset(
        dataset=ds,
        replicate=replicate_index,
        alpha_true=alpha_functions(ds.time, config.truth, config.eta),
        beta_true=np.array([config.beta]),
        errors=e,
    )


def _fit_spec(config: SimulationConfig, ds: LongitudinalDataset) -> SplineSpec:
    if config.knots is not None:
        return make_spec(config.knots, config.degree)
    k, _ = select_knots(ds, config.tau, config.degree, n_jobs=1)
    return make_spec(k, config.degree)


# =============================================================================
# Level and power
# =============================================================================


def _replicate_tests(
    config: SimulationConfig, test: StudyTest, replicate: int
) -> dict[str, bool | None]:
    """Rejection decision per method; None where the method failed."""
    outcome: dict[str, bool | None] = {m.value: None for m in test.methods}
    try:
        ds = gen_dataset(config, replicate).dataset
        spec = _fit_spec(config, ds)
    except PLVCError as e:
        logger.warning(f"Replicate {replicate} failed before testing: {e}")
        return outcome

    for method in test.methods:
        correlation = (
            Correlation.EXCHANGEABLE if method is TestMethod.QRS_DELTA else Correlation.EMPIRICAL
        )
        try:
            if test.hypothesis == "constancy":
                l1 = ds.varying_index("x1")
                result = constancy_test(ds, spec, config.tau, [l1], correlation, test.weights)
            elif method is TestMethod.WALD:
                result = wald_test(ds, spec, config.tau, [0])
            else:
                result = rank_score_beta(ds, spec, config.tau, [0], correlation, test.weights)
        except (PLVCError, np.linalg.LinAlgError) as e:
            logger.debug(f"Replicate {replicate}, {method.value} failed: {e}")
            continue
        outcome[method.value] = result.rejects(test.level)
    return outcome


def _check_failures(failures: int, reps: int) -> None:
    cap = settings.mc_failure_cap
    if failures > cap * reps:
        raise ReplicateFailureError(failures, reps, cap)
    if failures:
        logger.warning(f"{failures} of {reps} replicates failed")


def mc_level_power(
    config: SimulationConfig,
    test: StudyTest | None = None,
    n_jobs: int | None = None,
) -> McReport:
    """
    Monte Carlo rejection rates of the requested tests.

    Knots are re-selected by SIC in every replicate unless ``config.knots``
    fixes them. Failed replicates are skipped and counted.

    Raises:
        ReplicateFailureError: More than the configured share of replicates failed.
    """
    test = test or StudyTest()
    outcomes = Parallel(n_jobs=n_jobs or settings.threads)(
        delayed(_replicate_tests)(config, test, r) for r in range(config.reps)
    )
    failures = sum(1 for o in outcomes if any(v is None for v in o.values()))
    _check_failures(failures, config.reps)

    rates = []
    for method in test.methods:
        decisions = [o[method.value] for o in outcomes if o[method.value] is not None]
        trials = len(decisions)
        rejections = int(sum(bool(d) for d in decisions))
        rate = rejections / trials if trials else 0.0
        se = math.sqrt(rate * (1.0 - rate) / trials) if trials else 0.0
        rates.append(
            MethodRate(method=method.value, rejections=rejections, trials=trials, rate=rate, se=se)
        )
    logger.info("Level/power: " + ", ".join(f"{r.method}={r.rate:.3f}" for r in rates))
    return McReport(
        study="level-power", config=config, reps=config.reps, failures=failures, rates=rates
    )


def mc_power_curve(
    config: SimulationConfig,
    test: StudyTest | None,
    target: str,
    values: Sequence[float],
    n_jobs: int | None = None,
) -> list[McReport]:
    """
    Rejection rates along a sweep of beta (target ``beta``) or eta (target ``constancy``).

    The constancy sweep simulates from the constancy truth and tests alpha_1.
    """
    test = test or StudyTest()
    if target == "beta":
        updates: list[dict[str, Any]] = [{"beta": float(v)} for v in values]
    elif target == "constancy":
        updates = [{"eta": float(v), "truth": "constancy"} for v in values]
        if test.hypothesis != "constancy":
            methods = [m for m in test.methods if m is not TestMethod.WALD]
            test = StudyTest(
                hypothesis="constancy",
                methods=methods or [TestMethod.QRS],
                weights=test.weights,
                level=test.level,
            )
    else:
        raise ArgumentError(f"Unknown power-curve target '{target}'")

    reports = []
    for update, value in zip(updates, values):
        report = mc_level_power(config.model_copy(update=update), test, n_jobs)
        reports.append(
            report.model_copy(update={"study": "power-curve", "target": target, "value": value})
        )
    return reports


# =============================================================================
# Estimation accuracy
# =============================================================================


def _replicate_estimates(
    config: SimulationConfig, estimators: Sequence[str], replicate: int
) -> dict[str, tuple[float, np.ndarray]] | None:
    try:
        sim = gen_dataset(config, replicate)
        ds = sim.dataset
        out: dict[str, tuple[float, np.ndarray]] = {}
        for name in estimators:
            if name == "plvc":
                result = fit(ds, _fit_spec(config, ds), config.tau)
            else:
                result = fit_constant(ds, config.tau)
            alpha_hat = np.column_stack(
                [np.asarray(eval_alpha(result, l, ds.time)) for l in range(ds.p)]
            )
            alpha_err = np.mean((alpha_hat - sim.alpha_true) ** 2, axis=0)
            out[name] = (float(result.beta[0]), alpha_err)
        return out
    except (PLVCError, np.linalg.LinAlgError) as e:
        logger.warning(f"Replicate {replicate} failed: {e}")
        return None


def mc_mse(
    config: SimulationConfig,
    estimators: Sequence[str] = ("plvc", "lcc"),
    n_jobs: int | None = None,
) -> McReport:
    """
    Monte Carlo MSE and bias of beta-hat for the PLVC and LCC estimators.

    Each estimator summary also carries the average squared error of every
    alpha_l over the design points, N^-1 sum (alpha_hat_l(t) - alpha_l(t))^2.
    """
    unknown = set(estimators) - {"plvc", "lcc"}
    if unknown or not estimators:
        raise ArgumentError(f"Estimators must be drawn from plvc, lcc (got {list(estimators)})")

    outcomes = Parallel(n_jobs=n_jobs or settings.threads)(
        delayed(_replicate_estimates)(config, list(estimators), r) for r in range(config.reps)
    )
    done = [o for o in outcomes if o is not None]
    failures = config.reps - len(done)
    _check_failures(failures, config.reps)

    summaries = []
    for name in estimators:
        errors = np.array([o[name][0] for o in done]) - config.beta
        squared = errors**2
        trials = len(done)
        summaries.append(
            EstimatorSummary(
                estimator=name,
                trials=trials,
                mse=float(np.mean(squared)) if trials else 0.0,
                bias=float(np.mean(errors)) if trials else 0.0,
                se_mse=float(np.std(squared, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
                alpha_mse=np.mean([o[name][1] for o in done], axis=0).tolist() if trials else None,
            )
        )
    logger.info("MSE: " + ", ".join(f"{s.estimator}={s.mse:.4f}" for s in summaries))
    return McReport(
        study="mse", config=config, reps=config.reps, failures=failures, estimators=summaries
    )

