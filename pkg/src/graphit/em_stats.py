"""Smoothed second-moment statistics and the quadratic bound they induce.

From a smoother run at the current transition matrix, three matrix sums
summarize everything the transition update needs:

    Psi   = sum_{k=1}^K  E[x_k x_k^T     | y]
    Phi   = sum_{k=1}^K  E[x_{k-1} x_{k-1}^T | y]
    Delta = sum_{k=1}^K  E[x_k x_{k-1}^T | y]

with the smoothed cross term E[x_k x_{k-1}^T | y] given exactly by
Sigma_k^s G_{k-1}^T + mu_k^s (mu_{k-1}^s)^T. These feed a convex quadratic
that upper-bounds the negative log-likelihood up to an additive constant,
with equality at the matrix the smoother was run with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kalman import SmootherRun


@dataclass(frozen=True)
class EMStats:
    Psi: np.ndarray    # (N_x, N_x)
    Phi: np.ndarray    # (N_x, N_x), symmetric PSD
    Delta: np.ndarray  # (N_x, N_x)


def compute_stats(smoother: SmootherRun) -> EMStats:
    """Accumulate Psi, Phi, Delta from a smoother run with K >= 1 steps."""
    means = smoother.smoothed_means
    covs = smoother.smoothed_covs
    gains = smoother.gains
    if gains.shape[0] < 1:
        raise ValueError("smoother run must cover at least one step")

    Psi = covs[1:].sum(axis=0) + means[1:].T @ means[1:]
    Phi = covs[:-1].sum(axis=0) + means[:-1].T @ means[:-1]
    Delta = np.einsum("kab,kcb->ac", covs[1:], gains) + means[1:].T @ means[:-1]
    return EMStats(Psi=Psi, Phi=0.5 * (Phi + Phi.T), Delta=Delta)


def q_quadratic(A: np.ndarray, stats: EMStats, Q: np.ndarray) -> float:
    """Quadratic transition term of the EM bound.

    Returns 1/2 tr(Q^{-1} (Psi - Delta A^T - A Delta^T + A Phi A^T)),
    evaluated through a Cholesky solve against Q.
    """
    inner = stats.Psi - stats.Delta @ A.T - A @ stats.Delta.T + A @ stats.Phi @ A.T
    return 0.5 * float(np.trace(cho_solve(cho_factor(Q, lower=True), inner)))
