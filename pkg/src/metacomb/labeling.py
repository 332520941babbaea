"""Per-series diversity/accuracy labels via a simplex-constrained QP.

For each series the error-correlation matrix (redundancy) and the scaled
negated sOWA vector (relevance) feed a convex quadratic program over the
unit simplex; thresholding its solution yields the binary method labels
used by the classification task.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateBalanceWarning, HorizonTooShort, LengthMismatch, NotConvergedWarning
from .forecasters import ForecastMatrix
from .metrics import sowa


def error_matrix(forecasts: ForecastMatrix | np.ndarray, actual) -> np.ndarray:
    """Signed forecasting errors: actual minus forecast, per step and method."""
    f = forecasts.values if isinstance(forecasts, ForecastMatrix) else np.asarray(forecasts, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64).reshape(-1)
    if f.ndim != 2 or f.shape[0] != y.size:
        raise LengthMismatch(f"forecast matrix {f.shape} incompatible with horizon {y.size}")
    return y[:, None] - f


def _repair_psd(q: np.ndarray) -> np.ndarray:
    sym = 0.5 * (q + q.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals[0] >= 0.0:
        return sym
    repaired = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    return 0.5 * (repaired + repaired.T)


def diversity_matrix(errors: np.ndarray) -> np.ndarray:
    """Pearson correlations between method error columns, repaired to PSD.

    Zero-variance columns contribute 0 off-diagonal (a constant-error
    method carries no redundancy signal); the diagonal is 1. Negative
    eigenvalues from floating point are clamped so the QP stays convex.
    """
    e = np.asarray(errors, dtype=np.float64)
    if e.ndim != 2:
        raise LengthMismatch(f"error matrix must be 2-D, got shape {e.shape}")
    if e.shape[0] < 2:
        raise HorizonTooShort("need at least 2 horizon steps to correlate errors")
    centered = e - e.mean(axis=0)
    sd = np.sqrt((centered ** 2).mean(axis=0))
    m = e.shape[1]
    q = np.eye(m)
    live = sd > 0.0
    if live.any():
        cov = (centered.T @ centered) / e.shape[0]
        denom = np.outer(sd, sd)
        block = np.divide(cov, denom, out=np.zeros_like(cov), where=denom > 0.0)
        q[np.ix_(live, live)] = block[np.ix_(live, live)]
        np.fill_diagonal(q, 1.0)
    return _repair_psd(q)


def relevance_vector(
    forecasts: ForecastMatrix | np.ndarray, actual, naive_pred, train, seasonal_period: int
) -> np.ndarray:
    """Negated per-method sOWA, min-max scaled to [0, 1] within the series.

    The best method maps to 1 and the worst to 0; when every method scores
    identically the vector is all 0.5.
    """
    f = forecasts.values if isinstance(forecasts, ForecastMatrix) else np.asarray(forecasts, dtype=np.float64)
    raw = np.array([
        -sowa(actual, f[:, m], naive_pred, train, seasonal_period) for m in range(f.shape[1])
    ])
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.full(raw.shape, 0.5)
    return (raw - lo) / (hi - lo)


def balance_alpha(q: np.ndarray, c: np.ndarray) -> float:
    """Trade-off weight equating the mean quadratic and linear magnitudes.

    Solves (1 - alpha) * mean(q) == alpha * mean(c), clamped to [0, 1];
    if both means vanish a warning is emitted and 0.5 returned.
    """
    q_bar = float(np.asarray(q).mean())
    c_bar = float(np.asarray(c).mean())
    total = q_bar + c_bar
    if total == 0.0:
        warnings.warn("mean redundancy and relevance are both zero; using alpha=0.5",
                      DegenerateBalanceWarning)
        return 0.5
    return float(np.clip(q_bar / total, 0.0, 1.0))


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-based, O(M log M))."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, v.size + 1) > cumulative)[0][-1]
    theta = cumulative[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray
    objective: float
    converged: bool
    iterations: int


def _kkt_candidate(support: np.ndarray, scaled_q: np.ndarray, linear: np.ndarray,
                   m: int) -> np.ndarray | None:
    """Solve the reduced KKT system on one support and verify optimality.

    The reduced Hessian may be singular (near-duplicate methods), so the
    system is solved by least squares and accepted only when consistent;
    positivity of the support and nonnegativity of the complement's
    multipliers certify the point as the constrained minimizer.
    """
    k = support.size
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = scaled_q[np.ix_(support, support)]
    system[:k, k] = 1.0
    system[k, :k] = 1.0
    rhs = np.concatenate([linear[support], [1.0]])
    solution = np.linalg.lstsq(system, rhs, rcond=None)[0]
    if np.abs(system @ solution - rhs).max() > 1e-9 * max(1.0, float(np.abs(rhs).max())):
        return None
    x_support, shift = solution[:k], solution[k]
    if x_support.min() < -1e-12:
        return None
    candidate = np.zeros(m)
    candidate[support] = np.maximum(x_support, 0.0)
    candidate /= candidate.sum()
    gradient = scaled_q @ candidate - linear
    off = np.setdiff1d(np.arange(m), support)
    if off.size and gradient[off].min() < -shift - 1e-10:
        return None
    return candidate


def _active_set_polish(x: np.ndarray, scaled_q: np.ndarray, linear: np.ndarray) -> np.ndarray | None:
    """Exact KKT solve on the support identified by projected gradient."""
    support = np.nonzero(x > 0.0)[0]
    if support.size == 0:
        return None
    return _kkt_candidate(support, scaled_q, linear, x.size)


def _exhaustive_active_set(scaled_q: np.ndarray, linear: np.ndarray, m: int,
                           q: np.ndarray, c: np.ndarray, alpha: float) -> np.ndarray | None:
    """Certify the optimum by enumerating supports (cheap for M <= 10).

    Used when projected gradient crawls along a nearly flat valley of a
    singular redundancy matrix. Returns the best certified KKT point.
    """
    best_x = None
    best_obj = np.inf
    for size in range(1, m + 1):
        for support in combinations(range(m), size):
            candidate = _kkt_candidate(np.asarray(support), scaled_q, linear, m)
            if candidate is None:
                continue
            objective = qp_objective(candidate, q, c, alpha)
            if objective < best_obj:
                best_obj = objective
                best_x = candidate
    return best_x


def qp_objective(x: np.ndarray, q: np.ndarray, c: np.ndarray, alpha: float) -> float:
    return float(0.5 * (1.0 - alpha) * x @ q @ x - alpha * x @ c)


def solve_qp(
    q: np.ndarray,
    c: np.ndarray,
    alpha: float,
    tol: float = 1e-9,
    max_iter: int = 10_000,
) -> QPSolution:
    """Minimize 0.5*(1-alpha)*x'Qx - alpha*x'c over the unit simplex.

    Projected gradient with backtracking (Armijo) line search; stops when
    the unit-step projected-gradient residual drops below ``tol``. Hitting
    the iteration cap returns the best iterate with ``converged=False``
    and a warning. An exactly linear objective (alpha == 1) is solved at
    the vertex of the largest relevance, ties to the lowest index.
    """
    q = np.asarray(q, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    m = c.size
    if q.shape != (m, m):
        raise LengthMismatch(f"q shape {q.shape} incompatible with c length {m}")
    if alpha >= 1.0:
        x = np.zeros(m)
        x[int(np.argmax(c))] = 1.0
        return QPSolution(x=x, objective=qp_objective(x, q, c, alpha), converged=True, iterations=0)

    scaled_q = (1.0 - alpha) * q
    lipschitz = float(np.linalg.eigvalsh(scaled_q)[-1])
    # Steps at or below 1/L both satisfy Armijo and contract the iterate;
    # the backtracking loop is a safeguard for float round-off.
    safe_step = 1.0 / lipschitz if lipschitz > 0.0 else 1.0

    x = np.full(m, 1.0 / m)
    fx = qp_objective(x, q, c, alpha)
    converged = False
    iterations = 0
    linear = alpha * c
    for iterations in range(1, max_iter + 1):
        grad = scaled_q @ x - linear
        residual = float(np.linalg.norm(x - project_to_simplex(x - grad)))
        if residual <= tol:
            converged = True
            break
        polished = None
        if residual <= 1e-6:
            polished = _active_set_polish(x, scaled_q, linear)
        if polished is None and iterations % 500 == 0 and m <= 12:
            # crawling along a nearly flat valley: certify exhaustively
            polished = _exhaustive_active_set(scaled_q, linear, m, q, c, alpha)
        if polished is not None:
            check = polished - project_to_simplex(polished - (scaled_q @ polished - linear))
            if float(np.linalg.norm(check)) <= tol:
                x = polished
                converged = True
                break
        accepted = False
        t = safe_step
        for _ in range(60):
            candidate = project_to_simplex(x - t * grad)
            decrease = float(grad @ (candidate - x))
            f_cand = qp_objective(candidate, q, c, alpha)
            if f_cand <= fx + 1e-4 * decrease and not np.array_equal(candidate, x):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # Objective differences are below float resolution near the
            # optimum; the plain safeguarded step still contracts.
            candidate = project_to_simplex(x - safe_step * grad)
            f_cand = qp_objective(candidate, q, c, alpha)
            if np.array_equal(candidate, x):
                break  # fixed point at float resolution
        x, fx = candidate, f_cand
    if not converged:
        warnings.warn(f"projected gradient stopped after {iterations} iterations", NotConvergedWarning)
    x = np.maximum(x, 0.0)
    return QPSolution(x=x, objective=qp_objective(x, q, c, alpha), converged=converged, iterations=iterations)


def labels_from_solution(x_star: np.ndarray, tau: float) -> np.ndarray:
    """Binary labels: method j selected iff its simplex mass reaches tau."""
    x = np.asarray(x_star, dtype=np.float64).reshape(-1)
    return (x >= tau).astype(np.int64)


@dataclass(frozen=True)
class LabelBundle:
    """Everything the labeling stage derives for one series."""

    q: np.ndarray
    c: np.ndarray
    alpha: float
    x_star: np.ndarray
    labels: np.ndarray
    tau: float


def build_label_bundle(
    forecasts: ForecastMatrix | np.ndarray,
    actual,
    naive_pred,
    train,
    seasonal_period: int,
    tau: float | None = None,
) -> LabelBundle:
    """Run the full labeling chain: errors, Q, c, alpha, QP, thresholding.

    ``tau`` defaults to 1/M, which guarantees at least one positive label
    (the largest simplex coordinate is at least the mean).
    """
    errors = error_matrix(forecasts, actual)
    q = diversity_matrix(errors)
    c = relevance_vector(forecasts, actual, naive_pred, train, seasonal_period)
    alpha = balance_alpha(q, c)
    solution = solve_qp(q, c, alpha)
    threshold = 1.0 / c.size if tau is None else float(tau)
    labels = labels_from_solution(solution.x, threshold)
    return LabelBundle(q=q, c=c, alpha=alpha, x_star=solution.x, labels=labels, tau=threshold)
