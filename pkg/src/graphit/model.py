"""Linear-Gaussian state-space model: parameters, simulation, sparse generators.

The model is

    x_k = A x_{k-1} + q_k,   q_k ~ N(0, Q)
    y_k = H x_k + r_k,       r_k ~ N(0, R)
    x_0 ~ N(mu0, Sigma0)

All randomness is driven by NumPy's PCG64 generator so that every draw is
reproducible across runs and platforms for a fixed NumPy version.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, NotPositiveDefiniteError

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Parameter set of the linear-Gaussian state-space model.

    Attributes
    ----------
    A : ndarray (N_x, N_x)
        State transition matrix.
    H : ndarray (N_y, N_x)
        Observation matrix.
    Q : ndarray (N_x, N_x)
        State-noise covariance, symmetric positive definite.
    R : ndarray (N_y, N_y)
        Observation-noise covariance, symmetric positive definite.
    mu0 : ndarray (N_x,)
        Initial state mean.
    Sigma0 : ndarray (N_x, N_x)
        Initial state covariance, symmetric positive definite.
    """

    A: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    mu0: np.ndarray
    Sigma0: np.ndarray

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def ny(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """A simulated run: states x_0..x_K and observations y_1..y_K."""

    states: np.ndarray        # (K+1, N_x)
    observations: np.ndarray  # (K, N_y)

    @property
    def horizon(self) -> int:
        return self.observations.shape[0]


def _rng(seed) -> np.random.Generator:
    # PCG64 is pinned explicitly so simulations are reproducible by contract.
    return np.random.Generator(np.random.PCG64(seed))


def _check_symmetric_pd(M: np.ndarray, name: str, *, semidefinite_ok: bool) -> None:
    if not M.shape or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {M.shape}")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NotPositiveDefiniteError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    if semidefinite_ok:
        eigs = np.linalg.eigvalsh(M)
        floor = -SYMMETRY_TOL * max(1.0, float(np.max(np.abs(eigs))))
        if eigs.min() < floor:
            raise NotPositiveDefiniteError(
                f"{name} is not positive semidefinite (min eigenvalue {eigs.min():.3e})"
            )
        return
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{name} is not positive definite (Cholesky failed)") from None


def validate(params: ModelParams, *, semidefinite_ok: bool = False) -> ModelParams:
    """Check dimensional consistency and covariance definiteness.

    Parameters
    ----------
    params : ModelParams
    semidefinite_ok : bool
        When True, Q, R and Sigma0 only need to be positive semidefinite.
        This supports exact zero-noise limiting cases; sampling from such a
        model must go through ``simulate(..., noiseless=True)``.

    Returns
    -------
    ModelParams
        The same object, returned for chaining.

    Raises
    ------
    DimensionMismatchError
        If any two fields have inconsistent shapes; the message names the pair.
    NotPositiveDefiniteError
        If Q, R or Sigma0 fails symmetry or definiteness; the message names it.
    """
    A, H, Q, R, mu0, Sigma0 = params.A, params.H, params.Q, params.R, params.mu0, params.Sigma0
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"A must be square, got shape {A.shape}")
    nx = A.shape[0]
    if H.ndim != 2 or H.shape[1] != nx:
        raise DimensionMismatchError(f"H has shape {H.shape}, incompatible with A of shape {A.shape}")
    ny = H.shape[0]
    if Q.shape != (nx, nx):
        raise DimensionMismatchError(f"Q has shape {Q.shape}, incompatible with A of shape {A.shape}")
    if R.shape != (ny, ny):
        raise DimensionMismatchError(f"R has shape {R.shape}, incompatible with H of shape {H.shape}")
    if mu0.shape != (nx,):
        raise DimensionMismatchError(f"mu0 has shape {mu0.shape}, incompatible with A of shape {A.shape}")
    if Sigma0.shape != (nx, nx):
        raise DimensionMismatchError(
            f"Sigma0 has shape {Sigma0.shape}, incompatible with A of shape {A.shape}"
        )
    _check_symmetric_pd(Q, "Q", semidefinite_ok=semidefinite_ok)
    _check_symmetric_pd(R, "R", semidefinite_ok=semidefinite_ok)
    _check_symmetric_pd(Sigma0, "Sigma0", semidefinite_ok=semidefinite_ok)
    return params


def simulate(params: ModelParams, K: int, seed, *, noiseless: bool = False) -> Trajectory:
    """Draw one trajectory of length K from the model.

    Sampling uses the Cholesky factor of each covariance, consuming standard
    normals in a fixed order (x_0 first, then q_k, r_k per step), so the
    result is byte-identical for identical (params, K, seed).

    With ``noiseless=True`` sampling is skipped entirely: x_0 = mu0 and the
    recursion runs without noise, which permits exactly zero covariances.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    validate(params, semidefinite_ok=noiseless)
    nx, ny = params.nx, params.ny
    states = np.empty((K + 1, nx))
    obs = np.empty((K, ny))

    if noiseless:
        states[0] = params.mu0
        for k in range(1, K + 1):
            states[k] = params.A @ states[k - 1]
            obs[k - 1] = params.H @ states[k]
        return Trajectory(states=states, observations=obs)

    rng = _rng(seed)
    L0 = np.linalg.cholesky(params.Sigma0)
    LQ = np.linalg.cholesky(params.Q)
    LR = np.linalg.cholesky(params.R)
    states[0] = params.mu0 + L0 @ rng.standard_normal(nx)
    for k in range(1, K + 1):
        states[k] = params.A @ states[k - 1] + LQ @ rng.standard_normal(nx)
        obs[k - 1] = params.H @ states[k] + LR @ rng.standard_normal(ny)
    return Trajectory(states=states, observations=obs)


def spectral_norm(M: np.ndarray, *, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Largest singular value of M by power iteration on M^T M.

    Iterates until the symmetric eigen-residual certifies a relative error
    below `tol` on the dominant eigenvalue of M^T M (hence well below on the
    singular value). Emits a RuntimeWarning and returns the best estimate if
    the cap is hit.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("spectral_norm requires finite entries")
    if M.size == 0 or not M.any():
        return 0.0
    B = M.T @ M
    scale = float(np.max(np.abs(B)))
    # Deterministic start; seeded so it is almost surely not orthogonal to
    # the dominant eigenvector.
    v = _rng(0).standard_normal(B.shape[0])
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_iter):
        w = B @ v
        theta = float(v @ w)
        resid = np.linalg.norm(w - theta * v)
        if resid <= tol * max(theta, scale):
            return float(np.sqrt(max(theta, 0.0)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    warnings.warn("power iteration for spectral_norm hit the iteration cap", RuntimeWarning)
    # The iteration stalls when the two leading singular values nearly
    # coincide; a dense symmetric eigensolve of the Gram matrix is then the
    # best available estimate.
    return float(np.sqrt(max(float(np.linalg.eigvalsh(B).max()), theta, 0.0)))


def generate_sparse_A(N_x: int, S: int, target_norm: float = 0.9, seed=0) -> np.ndarray:
    """Random sparse transition matrix with a prescribed spectral norm.

    Exactly S entries, at distinct uniformly-random positions anywhere in the
    N_x x N_x grid (diagonal included), are drawn i.i.d. standard normal; all
    nonzeros are then rescaled by a single common factor so the spectral norm
    equals `target_norm`. Deterministic given the seed.
    """
    if not 1 <= S <= N_x * N_x:
        raise ValueError(f"S must be in [1, {N_x * N_x}], got {S}")
    if not 0.0 < target_norm:
        raise ValueError(f"target_norm must be positive, got {target_norm}")
    rng = _rng(seed)
    flat_idx = rng.choice(N_x * N_x, size=S, replace=False)
    values = rng.standard_normal(S)
    # A zero draw would erase a support position; nudge deterministically.
    values[values == 0.0] = 1.0
    A = np.zeros(N_x * N_x)
    A[flat_idx] = values
    A = A.reshape(N_x, N_x)
    A *= target_norm / spectral_norm(A)
    return A
