"""Independent reference computations used by the test suite.

Everything here deliberately avoids the library's own recursions: the
likelihood and smoothing oracles build the dense joint Gaussian of the whole
trajectory and condition it directly, and the inner-problem oracle is a plain
proximal-gradient loop.
"""

from __future__ import annotations

import numpy as np

from graphit.model import ModelParams

LOG_2PI = float(np.log(2.0 * np.pi))


def joint_moments(params: ModelParams, K: int):
    """Mean and covariance of the stacked vector (x_0..x_K, y_1..y_K)."""
    nx, ny = params.nx, params.ny
    A, H, Q, R = params.A, params.H, params.Q, params.R

    mean_x = np.zeros((K + 1, nx))
    mean_x[0] = params.mu0
    for k in range(1, K + 1):
        mean_x[k] = A @ mean_x[k - 1]

    P = [params.Sigma0]
    for k in range(1, K + 1):
        P.append(A @ P[-1] @ A.T + Q)

    cov_x = np.zeros(((K + 1) * nx, (K + 1) * nx))
    for i in range(K + 1):
        block = P[i]
        for j in range(i, K + 1):
            cov_x[i * nx:(i + 1) * nx, j * nx:(j + 1) * nx] = block @ np.linalg.matrix_power(A, j - i).T
    cov_x = np.triu(np.ones_like(cov_x)) * cov_x
    cov_x = cov_x + np.triu(cov_x, 1).T

    # y_k = H x_k + r_k for k = 1..K
    lift = np.zeros((K * ny, (K + 1) * nx))
    for k in range(1, K + 1):
        lift[(k - 1) * ny:k * ny, k * nx:(k + 1) * nx] = H
    mean_y = lift @ mean_x.reshape(-1)
    cov_y = lift @ cov_x @ lift.T + np.kron(np.eye(K), R)
    cov_xy = cov_x @ lift.T
    return mean_x.reshape(-1), cov_x, mean_y, cov_y, cov_xy


def nll_oracle(params: ModelParams, observations: np.ndarray) -> float:
    """Negative log density of y_1..y_K under the dense joint Gaussian."""
    K = observations.shape[0]
    _, _, mean_y, cov_y, _ = joint_moments(params, K)
    resid = observations.reshape(-1) - mean_y
    L = np.linalg.cholesky(cov_y)
    alpha = np.linalg.solve(L, resid)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return 0.5 * (resid.size * LOG_2PI + logdet + float(alpha @ alpha))


def smoother_oracle(params: ModelParams, observations: np.ndarray):
    """Smoothed means/covariances of x_0..x_K by dense joint conditioning."""
    K = observations.shape[0]
    nx = params.nx
    mean_x, cov_x, mean_y, cov_y, cov_xy = joint_moments(params, K)
    resid = observations.reshape(-1) - mean_y
    gain = cov_xy @ np.linalg.inv(cov_y)
    post_mean = mean_x + gain @ resid
    post_cov = cov_x - gain @ cov_xy.T
    means = post_mean.reshape(K + 1, nx)
    covs = np.array([post_cov[k * nx:(k + 1) * nx, k * nx:(k + 1) * nx] for k in range(K + 1)])
    return means, covs


def forward_backward(stats, Q, Omega, A0, max_iter=500_000, tol=1e-14):
    """Proximal-gradient reference solver for the weighted-l1 quadratic."""
    Qinv = np.linalg.inv(Q)
    lips = np.linalg.norm(Qinv, 2) * max(np.linalg.norm(stats.Phi, 2), 1e-12)
    eta = 1.0 / lips
    A = np.array(A0, dtype=float)
    for _ in range(max_iter):
        grad = Qinv @ (A @ stats.Phi - stats.Delta)
        V = A - eta * grad
        A_new = np.sign(V) * np.maximum(np.abs(V) - eta * Omega, 0.0)
        done = np.linalg.norm(A_new - A) <= tol * (1.0 + np.linalg.norm(A))
        A = A_new
        if done:
            break
    return A


def random_spd(rng, n, scale=1.0):
    B = rng.standard_normal((n, n))
    return scale * (B @ B.T + n * np.eye(n))


def random_stable_params(rng, nx, ny, norm=0.85):
    """Random well-conditioned model with a stable transition matrix."""
    A = rng.standard_normal((nx, nx))
    A *= norm / np.linalg.norm(A, 2)
    H = rng.standard_normal((ny, nx))
    Q = random_spd(rng, nx, scale=0.1 / nx)
    R = random_spd(rng, ny, scale=0.1 / ny)
    Sigma0 = random_spd(rng, nx, scale=0.5 / nx)
    mu0 = rng.standard_normal(nx)
    return ModelParams(A=A, H=H, Q=Q, R=R, mu0=mu0, Sigma0=Sigma0)
