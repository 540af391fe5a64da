"""Exact Kalman filtering and Rauch-Tung-Striebel smoothing.

The filter also accumulates the negative log-likelihood of the observations
through the predictive residuals z_k and covariances S_k,

    nll = sum_k 1/2 log|2 pi S_k| + 1/2 z_k^T S_k^{-1} z_k,

which is the data-fit term minimized by all estimators in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import SingularPredictiveCovarianceError
from .model import ModelParams, validate

# Cholesky-diagonal condition estimate beyond which S_k is treated as singular.
CONDITION_LIMIT = 1e12

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class FilterRun:
    """Forward-pass outputs for k = 1..K plus the accumulated likelihood."""

    filtered_means: np.ndarray    # (K, N_x)
    filtered_covs: np.ndarray     # (K, N_x, N_x)
    residuals: np.ndarray         # (K, N_y)
    predictive_covs: np.ndarray   # (K, N_y, N_y)
    neg_log_lik: float

    @property
    def horizon(self) -> int:
        return self.filtered_means.shape[0]


@dataclass(frozen=True)
class SmootherRun:
    """Backward-pass outputs for k = 0..K and the gains G_0..G_{K-1}."""

    smoothed_means: np.ndarray  # (K+1, N_x)
    smoothed_covs: np.ndarray   # (K+1, N_x, N_x)
    gains: np.ndarray           # (K, N_x, N_x)

    @property
    def horizon(self) -> int:
        return self.gains.shape[0]


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _chol_spd(S: np.ndarray, step: int):
    """Cholesky factor of S with a condition guard.

    For SPD S, (max diag(L) / min diag(L))^2 is a lower bound on the
    2-norm condition number; it is cheap and catches the near-singular
    runs this package can produce.
    """
    try:
        c, low = cho_factor(S, lower=True)
    except np.linalg.LinAlgError:
        raise SingularPredictiveCovarianceError(step) from None
    d = np.abs(np.diag(c))
    if d.min() == 0.0 or (d.max() / d.min()) ** 2 > CONDITION_LIMIT:
        raise SingularPredictiveCovarianceError(step)
    return c, low


def kalman_filter(params: ModelParams, observations: np.ndarray) -> FilterRun:
    """Run the forward Kalman recursion on y_1..y_K.

    Parameters
    ----------
    params : ModelParams
        Model parameters; covariances may be semidefinite as long as every
        predictive covariance S_k stays well conditioned.
    observations : ndarray (K, N_y)

    Raises
    ------
    SingularPredictiveCovarianceError
        If some S_k is numerically singular (estimated condition > 1e12).
    """
    validate(params, semidefinite_ok=True)
    ys = np.asarray(observations, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    K = ys.shape[0]
    if K < 1 or ys.shape[1] != params.ny:
        raise ValueError(f"observations must have shape (K, {params.ny}), got {ys.shape}")
    A, H, Q, R = params.A, params.H, params.Q, params.R

    mu = params.mu0.copy()
    Sigma = params.Sigma0.copy()
    means = np.empty((K, params.nx))
    covs = np.empty((K, params.nx, params.nx))
    residuals = np.empty((K, params.ny))
    pred_covs = np.empty((K, params.ny, params.ny))
    nll = 0.0

    for k in range(K):
        m_pred = A @ mu
        P_pred = _sym(A @ Sigma @ A.T + Q)

        z = ys[k] - H @ m_pred
        PHt = P_pred @ H.T
        S = _sym(H @ PHt + R)
        factor = _chol_spd(S, step=k + 1)

        gain = cho_solve(factor, PHt.T).T
        mu = m_pred + gain @ z
        Sigma = _sym(P_pred - gain @ S @ gain.T)

        logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
        nll += 0.5 * (params.ny * LOG_2PI + logdet) + 0.5 * float(z @ cho_solve(factor, z))

        means[k] = mu
        covs[k] = Sigma
        residuals[k] = z
        pred_covs[k] = S

    return FilterRun(
        filtered_means=means,
        filtered_covs=covs,
        residuals=residuals,
        predictive_covs=pred_covs,
        neg_log_lik=nll,
    )


def rts_smoother(params: ModelParams, filter_run: FilterRun) -> SmootherRun:
    """Backward smoothing pass over a completed filter run.

    Produces the smoothed moments down to k = 0 (the initial state, smoothed
    against all observations) and the gains

        G_k = Sigma_k A^T (A Sigma_k A^T + Q)^{-1},  k = 0..K-1,

    where Sigma_0 is the prior initial covariance.
    """
    A, Q = params.A, params.Q
    K = filter_run.horizon
    nx = params.nx

    means = np.empty((K + 1, nx))
    covs = np.empty((K + 1, nx, nx))
    gains = np.empty((K, nx, nx))

    means[K] = filter_run.filtered_means[K - 1]
    covs[K] = filter_run.filtered_covs[K - 1]

    for k in range(K - 1, -1, -1):
        if k == 0:
            mu_k, Sigma_k = params.mu0, params.Sigma0
        else:
            mu_k = filter_run.filtered_means[k - 1]
            Sigma_k = filter_run.filtered_covs[k - 1]
        P_pred = _sym(A @ Sigma_k @ A.T + Q)
        factor = _chol_spd(P_pred, step=k)
        G = cho_solve(factor, A @ Sigma_k).T
        means[k] = mu_k + G @ (means[k + 1] - A @ mu_k)
        covs[k] = _sym(Sigma_k + G @ (covs[k + 1] - P_pred) @ G.T)
        gains[k] = G

    return SmootherRun(smoothed_means=means, smoothed_covs=covs, gains=gains)
