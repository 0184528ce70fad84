"""Sandwich covariance and Wald tests for penalized network fits.

With observed information I_o (negative Hessian of the unpenalized
log-likelihood) and ridge penalty lambda, the covariance of the
penalized estimator is approximated by

    Sigma = (I_o + 2 lambda I)^-1  I_o  (I_o + 2 lambda I)^-1

which collapses to I_o^-1 at lambda = 0.  Single weights are tested
with theta_j^2 / Sigma_jj against chi-square(1); a covariate's whole
incoming weight vector with the quadratic form
omega_j^T (S Sigma S^T)^-1 omega_j against a chi-square whose degrees
of freedom are the effective count tr(S A S^T),
A = (I_o + 2 lambda I)^-1 I_o, which is below q under penalization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (NotPositiveDefiniteError, SingularMatrixError)
from .model import Architecture, Dataset, ParamVector, selection_matrix
from .special import chi_square_survival

#: Relative eigenvalue threshold below which the covariance is flagged
#: as not positive definite.
_PD_RTOL = 1e-10

SIGNIFICANCE_LEGEND = "Significance codes: 0 *** 0.001 ** 0.01 * 0.05"


def significance_stars(p_value: float) -> str:
    if p_value < 0.001:
        return "***"
    if p_value < 0.01:
        return "**"
    if p_value < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class CovarianceEstimate:
    """Sandwich covariance plus the pieces Wald tests need.

    ``a_matrix`` is (I_o + 2 lambda I)^-1 I_o, whose sub-traces give
    effective degrees of freedom.  ``positive_definite`` reflects the
    spectrum of ``sigma_hat``; downstream consumers must refuse to build
    confidence bands when it is False.
    """

    sigma_hat: np.ndarray
    a_matrix: np.ndarray
    positive_definite: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class WaldResult:
    """A single Wald test: statistic, reference df, p-value.

    ``target`` is the flat parameter index for single-weight tests and
    the covariate index (1-based) for grouped tests.
    """

    statistic: float
    df: float
    p_value: float
    target: int


def sandwich_covariance(info: np.ndarray, lam: float) -> CovarianceEstimate:
    """Model-based sandwich covariance of the penalized estimator."""
    info = np.asarray(info, dtype=float)
    if info.ndim != 2 or info.shape[0] != info.shape[1]:
        raise ValueError(f"information matrix must be square, got {info.shape}")
    if not np.all(np.isfinite(info)):
        raise ValueError("information matrix has non-finite entries")
    if lam < 0.0:
        raise ValueError(f"ridge penalty must be nonnegative, got {lam}")
    r = info.shape[0]
    bread = info + 2.0 * lam * np.eye(r)
    try:
        with warnings.catch_warnings():
            # Ill-conditioning is diagnosed explicitly through the
            # positive-definite flag below; the solver's warning adds noise.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            if lam == 0.0:
                # Unpenalized case in closed form: the bread equals the
                # information itself, so the shrinkage factor is the
                # identity and the covariance is the plain inverse.
                a_matrix = np.eye(r)
                sigma = scipy.linalg.solve(info, np.eye(r), assume_a="sym")
            else:
                a_matrix = scipy.linalg.solve(bread, info, assume_a="sym")
                sigma = scipy.linalg.solve(bread, a_matrix.T, assume_a="sym").T
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrixError(
            f"penalized information matrix is numerically singular: {exc}",
            hint="a larger ridge penalty (lambda) usually restores "
                 "invertibility") from exc
    if not np.all(np.isfinite(sigma)):
        raise SingularMatrixError(
            "covariance solve produced non-finite entries",
            hint="a larger ridge penalty (lambda) usually restores "
                 "invertibility")
    sigma = 0.5 * (sigma + sigma.T)
    eigs = np.linalg.eigvalsh(sigma)
    min_eig = float(eigs[0])
    pd = bool(min_eig > _PD_RTOL * max(1.0, float(eigs[-1])))
    return CovarianceEstimate(sigma_hat=sigma, a_matrix=a_matrix,
                              positive_definite=pd, min_eigenvalue=min_eig)


def effective_df(cov: CovarianceEstimate, s_matrix: np.ndarray) -> float:
    """tr(S A S^T): effective parameter count for the selected block."""
    s = np.asarray(s_matrix, dtype=float)
    return float(np.einsum("ij,jk,ik->", s, cov.a_matrix, s))


def wald_single(theta_hat: ParamVector, cov: CovarianceEstimate,
                param_index: int) -> WaldResult:
    """Wald test of one weight against zero, chi-square(1) reference."""
    r = theta_hat.arch.r
    if not 0 <= param_index < r:
        raise IndexError(f"param_index must be in 0..{r - 1}, got {param_index}")
    var = float(cov.sigma_hat[param_index, param_index])
    if not var > 0.0:
        raise NotPositiveDefiniteError(
            f"variance estimate for parameter {param_index} is {var}; "
            "test unavailable")
    stat = float(theta_hat.values[param_index]) ** 2 / var
    return WaldResult(statistic=stat, df=1.0,
                      p_value=chi_square_survival(stat, 1.0),
                      target=param_index)


def wald_multi(theta_hat: ParamVector, cov: CovarianceEstimate,
               arch: Architecture, j: int) -> WaldResult:
    """Joint Wald test that covariate j's incoming weights are all zero.

    Uses effective degrees of freedom tr(S A S^T), so under penalization
    the reference distribution has fewer than q degrees of freedom.
    """
    s = selection_matrix(arch, j)
    omega = s @ theta_hat.values
    block = s @ cov.sigma_hat @ s.T
    block = 0.5 * (block + block.T)
    try:
        c, low = scipy.linalg.cho_factor(block)
        stat = float(omega @ scipy.linalg.cho_solve((c, low), omega))
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"covariance block for covariate {j} is not positive definite; "
            "grouped test unavailable") from exc
    df = effective_df(cov, s)
    if not df > 0.0:
        raise NotPositiveDefiniteError(
            f"effective degrees of freedom for covariate {j} is {df}; "
            "grouped test unavailable")
    return WaldResult(statistic=stat, df=df,
                      p_value=chi_square_survival(stat, df), target=j)


# ---------------------------------------------------------------------------
# Full-model summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightCell:
    """One weight's estimate with its single-parameter test (or failure)."""

    estimate: float
    se: float | None
    statistic: float | None
    p_value: float | None
    stars: str
    error: str | None = None


@dataclass(frozen=True)
class CovariateRow:
    """Per-covariate test results: one cell per hidden node plus the
    grouped test across all of them."""

    name: str
    index: int
    cells: tuple
    mp_statistic: float | None
    mp_df: float | None
    mp_p_value: float | None
    mp_stars: str
    mp_error: str | None = None


@dataclass(frozen=True)
class InferenceReport:
    """Everything the text/JSON summaries and the diagram renderer need."""

    arch: Architecture
    covariates: tuple
    gamma_cells: tuple        # gamma_1..gamma_q single-weight tests
    gamma0_estimate: float
    positive_definite: bool
    min_eigenvalue: float
    loglik: float
    sigma_sq_hat: float | None
    lam: float
    converged: bool
    n_obs: int


def _single_cell(theta_hat, cov, idx) -> WeightCell:
    est = float(theta_hat.values[idx])
    try:
        res = wald_single(theta_hat, cov, idx)
    except NotPositiveDefiniteError as exc:
        return WeightCell(estimate=est, se=None, statistic=None, p_value=None,
                          stars="", error=str(exc))
    return WeightCell(estimate=est,
                      se=float(np.sqrt(cov.sigma_hat[idx, idx])),
                      statistic=res.statistic, p_value=res.p_value,
                      stars=significance_stars(res.p_value))


def summarize(fit_result, cov: CovarianceEstimate, arch: Architecture,
              data: Dataset) -> InferenceReport:
    """Per-weight and per-covariate Wald tests for a fitted network.

    Individual test failures (non-positive variance estimates) are
    recorded in the affected cells rather than aborting the whole
    summary.
    """
    theta_hat = fit_result.theta_hat
    names = [m.name for m in data.column_meta]
    rows = []
    for j in range(1, arch.p + 1):
        cells = tuple(_single_cell(theta_hat, cov, arch.omega_index(j, k))
                      for k in range(1, arch.q + 1))
        try:
            mp = wald_multi(theta_hat, cov, arch, j)
            row = CovariateRow(name=names[j - 1], index=j, cells=cells,
                               mp_statistic=mp.statistic, mp_df=mp.df,
                               mp_p_value=mp.p_value,
                               mp_stars=significance_stars(mp.p_value))
        except NotPositiveDefiniteError as exc:
            row = CovariateRow(name=names[j - 1], index=j, cells=cells,
                               mp_statistic=None, mp_df=None, mp_p_value=None,
                               mp_stars="", mp_error=str(exc))
        rows.append(row)
    gamma_cells = tuple(_single_cell(theta_hat, cov, arch.gamma_index(k))
                        for k in range(1, arch.q + 1))
    return InferenceReport(
        arch=arch,
        covariates=tuple(rows),
        gamma_cells=gamma_cells,
        gamma0_estimate=float(theta_hat.gamma(0)),
        positive_definite=cov.positive_definite,
        min_eigenvalue=cov.min_eigenvalue,
        loglik=fit_result.loglik,
        sigma_sq_hat=fit_result.sigma_sq_hat,
        lam=fit_result.lam,
        converged=fit_result.converged,
        n_obs=data.n,
    )
