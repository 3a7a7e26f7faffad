"""Weighted check-loss minimization by linear programming.

The quantile problem min sum w_i rho_tau(y_i - x_i'b) is solved as the LP

    min  sum w_i (tau u_i + (1 - tau) v_i)
    s.t. X b + u - v = y,  u, v >= 0,  b free

with HiGHS: dual simplex for small problems, interior point (with crossover
to a vertex) above ``simplex_max_rows``. Responses are rescaled by max|y|
before solving; coefficients and objective are scaled back.
"""

import logging

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from plvc_quantile.models.errors import SolverError
from plvc_quantile.models.solver import QrProblem, QrSolution, SolverStatus

logger = logging.getLogger(__name__)

# Distance from the ends of [tau - 1, tau] below which a subgradient is "on the boundary"
_BOUNDARY_TOL = 1e-9


def psi(u: float | np.ndarray, tau: float) -> float | np.ndarray:
    """Quantile score tau - I(u < 0), with psi(0) = tau."""
    scores = np.where(np.asarray(u) < 0, tau - 1.0, tau)
    if np.ndim(u) == 0:
        return float(scores)
    return scores


def check_loss(
    residuals: np.ndarray,
    tau: float,
    weights: np.ndarray | None = None,
) -> float:
    """Sum of (weighted) rho_tau(r) = r * (tau - I(r < 0))."""
    r = np.asarray(residuals, dtype=float)
    loss = r * (tau - (r < 0))
    if weights is not None:
        loss = loss * np.asarray(weights, dtype=float)
    return float(np.sum(loss))


def subgradient_certificate(
    design: np.ndarray,
    residuals: np.ndarray,
    weights: np.ndarray,
    tau: float,
) -> np.ndarray:
    """
    Solve for the scores a on zero-residual rows that make the subgradient vanish.

    Finds a with  X_h' diag(w_h) a = -X_{~h}' diag(w_{~h}) psi(r_{~h})  in the
    least-squares sense, where h indexes the zero residuals. At an optimum
    every a lies in [tau - 1, tau].
    """
    zero = residuals == 0.0
    rest = ~zero
    rhs = -design[rest].T @ (weights[rest] * psi(residuals[rest], tau))
    lhs = design[zero].T * weights[zero]
    if lhs.shape[1] == 0:
        return np.zeros(0)
    a, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return np.asarray(a)


class QuantileSolver:
    """Exact (vertex) solver for weighted and L1-penalized quantile regression."""

    def __init__(
        self,
        simplex_max_rows: int = 200,
        max_iter: int = 100_000,
        zero_tol: float = 1e-9,
    ):
        """
        Initialize the solver.

        Args:
            simplex_max_rows: Use dual simplex up to this many rows, interior point above.
            max_iter: Iteration cap passed to HiGHS.
            zero_tol: Residuals below zero_tol * max|y| are set to exactly zero.
        """
        self.simplex_max_rows = simplex_max_rows
        self.max_iter = max_iter
        self.zero_tol = zero_tol

    def solve(self, problem: QrProblem) -> QrSolution:
        """
        Minimize the weighted check loss of a problem, ignoring any penalty.

        Returns:
            QrSolution. Status is ``degenerate`` when the design is rank
            deficient or the optimum is not a unique vertex (a valid minimizer
            is still returned), ``max-iter`` when HiGHS hit its iteration cap.

        Raises:
            SolverError: The LP could not be solved at all.
        """
        X = problem.design
        y = problem.response
        w = problem.weight_vector
        tau = problem.tau

        coef, hit_cap, method, nit = self._solve_lp(X, y, w, tau)
        residuals = self._residuals(X, y, coef)
        objective = check_loss(residuals, tau, w)
        rank = int(np.linalg.matrix_rank(X)) if X.size else 0

        certificate = subgradient_certificate(X, residuals, w, tau)
        if hit_cap:
            status = SolverStatus.MAX_ITER
        elif rank < problem.n_params or self._non_unique(certificate, residuals, rank, tau):
            status = SolverStatus.DEGENERATE
        else:
            status = SolverStatus.OPTIMAL

        if rank < problem.n_params:
            logger.debug(f"Design rank {rank} < {problem.n_params} columns")

        return QrSolution(
            coefficients=coef,
            objective=objective,
            residuals=residuals,
            status=status,
            rank=rank,
            method=method,
            iterations=nit,
            certificate=certificate,
        )

    def solve_l1(self, problem: QrProblem) -> QrSolution:
        """
        Minimize check loss plus lam * sum_{j in P} |b_j|.

        Each penalized coefficient contributes two pseudo-observations with
        response 0, weight lam and design rows +e_j and -e_j; their check losses
        sum to lam * |b_j| for any tau. With lam = 0 (or no penalty) this is
        exactly ``solve``.
        """
        penalty = problem.penalty
        if penalty is None or penalty.lam == 0.0:
            return self.solve(
                QrProblem(problem.design, problem.response, problem.tau, problem.weights)
            )

        X = problem.design
        y = problem.response
        w = problem.weight_vector
        tau = problem.tau
        d = problem.n_params
        idx = np.asarray(penalty.indices, dtype=int)

        pseudo = np.zeros((2 * len(idx), d))
        pseudo[np.arange(len(idx)), idx] = 1.0
        pseudo[len(idx) + np.arange(len(idx)), idx] = -1.0
        X_aug = np.vstack([X, pseudo])
        y_aug = np.concatenate([y, np.zeros(2 * len(idx))])
        w_aug = np.concatenate([w, np.full(2 * len(idx), penalty.lam)])

        coef, hit_cap, method, nit = self._solve_lp(X_aug, y_aug, w_aug, tau)
        residuals = self._residuals(X, y, coef)
        objective = check_loss(residuals, tau, w) + penalty.lam * float(np.sum(np.abs(coef[idx])))
        rank = int(np.linalg.matrix_rank(X)) if X.size else 0

        return QrSolution(
            coefficients=coef,
            objective=objective,
            residuals=residuals,
            status=SolverStatus.MAX_ITER if hit_cap else SolverStatus.OPTIMAL,
            rank=rank,
            method=method,
            iterations=nit,
        )

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _residuals(self, X: np.ndarray, y: np.ndarray, coef: np.ndarray) -> np.ndarray:
        residuals = y - X @ coef
        scale = max(1.0, float(np.max(np.abs(y)))) if y.size else 1.0
        residuals[np.abs(residuals) <= self.zero_tol * scale] = 0.0
        return residuals

    @staticmethod
    def _non_unique(
        certificate: np.ndarray, residuals: np.ndarray, rank: int, tau: float
    ) -> bool:
        n_zero = int(np.count_nonzero(residuals == 0.0))
        if n_zero != rank:
            return True
        if certificate.size == 0:
            return False
        return bool(
            np.any(certificate <= tau - 1.0 + _BOUNDARY_TOL)
            or np.any(certificate >= tau - _BOUNDARY_TOL)
        )

    def _solve_lp(
        self,
        X: np.ndarray,
        y: np.ndarray,
        w: np.ndarray,
        tau: float,
    ) -> tuple[np.ndarray, bool, str, int]:
        """Return (coefficients, iteration cap hit, method, iterations)."""
        n, d = X.shape
        scale = float(np.max(np.abs(y))) if n else 0.0
        if scale == 0.0:
            scale = 1.0
        ys = y / scale

        c = np.concatenate([np.zeros(d), tau * w, (1.0 - tau) * w])
        identity = sparse.identity(n, format="csr")
        A_eq = sparse.hstack([sparse.csr_matrix(X), identity, -identity], format="csr")
        bounds = [(None, None)] * d + [(0, None)] * (2 * n)

        method = "highs-ds" if n <= self.simplex_max_rows else "highs-ipm"
        result = self._linprog(c, A_eq, ys, bounds, method)
        if result.status == 4 and method == "highs-ipm":
            logger.warning("Interior point hit numerical trouble; retrying with dual simplex")
            method = "highs-ds"
            result = self._linprog(c, A_eq, ys, bounds, method)

        if result.status == 0:
            return result.x[:d] * scale, False, method, int(result.nit)
        if result.status == 1 and result.x is not None:
            logger.warning(f"Quantile LP stopped at the iteration cap ({self.max_iter})")
            return result.x[:d] * scale, True, method, int(result.nit)
        raise SolverError(str(result.message), status=int(result.status))

    def _linprog(
        self,
        c: np.ndarray,
        A_eq: sparse.csr_matrix,
        b_eq: np.ndarray,
        bounds: list[tuple[float | None, float | None]],
        method: str,
    ):  # type: ignore[no-untyped-def]
        options: dict[str, object] = {
            "maxiter": self.max_iter,
            "presolve": True,
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        }
        if method == "highs-ipm":
            options["ipm_optimality_tolerance"] = 1e-10
        return linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method=method, options=options)
