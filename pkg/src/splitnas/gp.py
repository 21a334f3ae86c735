"""Gaussian-process surrogates over the encoded architecture space.

One surrogate per objective.  Inputs are feature vectors normalized to
[0, 1] per dimension; targets are standardized internally and reads are
de-standardized, so callers work in natural units throughout.  The kernel is
a squared exponential with per-dimension length scales; hyperparameters are
fixed rather than refit, which keeps runs deterministic and is adequate at
the data sizes a sequential search produces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

logger = logging.getLogger(__name__)

DEFAULT_LENGTH_SCALE = 2.0
DEFAULT_NOISE_VAR = 1e-4

# Jitter ladder tried when the kernel matrix fails to factorize.
_JITTERS = (0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


class IllConditionedError(RuntimeError):
    """Kernel matrix could not be factorized even at the maximum jitter."""


def _sqexp(xa: np.ndarray, xb: np.ndarray, signal_var: float, length_scales: np.ndarray) -> np.ndarray:
    a = xa / length_scales
    b = xb / length_scales
    sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * a @ b.T
    return signal_var * np.exp(-0.5 * np.maximum(sq, 0.0))


@dataclass
class GPSurrogate:
    """Fitted posterior state: training data plus a factored kernel matrix."""

    x_train: np.ndarray
    y_mean: float
    y_std: float
    signal_var: float
    length_scales: np.ndarray
    noise_var: float
    chol_lower: np.ndarray
    alpha: np.ndarray  # (K + noise I)^-1 y_standardized

    def posterior(self, x_query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return gp_posterior(self, x_query)

    def sample_on(self, pool: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return sample_posterior_on_pool(self, pool, rng)


def gp_fit(
    x: np.ndarray,
    y: np.ndarray,
    signal_var: float | None = None,
    length_scales: float | np.ndarray = DEFAULT_LENGTH_SCALE,
    noise_var: float = DEFAULT_NOISE_VAR,
) -> GPSurrogate:
    """Fit a surrogate to (x, y).

    Targets are standardized in here; with the default ``signal_var=None``
    the signal variance is the variance of the standardized targets, i.e. 1.
    A diagonal jitter is added only if the plain factorization fails,
    escalating tenfold from 1e-8 to 1e-4 before giving up.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(x) != len(y) or len(x) == 0:
        raise ValueError(f"need matching nonempty x/y, got {len(x)} vs {len(y)}")
    length_scales = np.broadcast_to(np.asarray(length_scales, dtype=float), (x.shape[1],)).copy()

    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std < 1e-12:
        y_std = 1.0  # constant targets: standardization degenerates to centering
    y_s = (y - y_mean) / y_std
    if signal_var is None:
        signal_var = 1.0  # the variance of standardized targets, by construction

    k = _sqexp(x, x, signal_var, length_scales)
    eye = np.eye(len(x))
    lower = None
    for jitter in _JITTERS:
        try:
            lower = cholesky(k + (noise_var + jitter) * eye, lower=True, check_finite=False)
            break
        except np.linalg.LinAlgError:
            continue
    if lower is None:
        raise IllConditionedError(
            f"kernel matrix of {len(x)} points not positive definite at jitter {_JITTERS[-1]:g}"
        )
    alpha = cho_solve((lower, True), y_s, check_finite=False)
    return GPSurrogate(
        x_train=x,
        y_mean=y_mean,
        y_std=y_std,
        signal_var=signal_var,
        length_scales=length_scales,
        noise_var=noise_var,
        chol_lower=lower,
        alpha=alpha,
    )


def gp_posterior(surrogate: GPSurrogate, x_query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at query points, in natural units.

    Variance is clamped at zero; round-off can push it a hair (~1e-10)
    negative at training points.
    """
    xq = np.atleast_2d(np.asarray(x_query, dtype=float))
    k_star = _sqexp(surrogate.x_train, xq, surrogate.signal_var, surrogate.length_scales)
    mean_s = k_star.T @ surrogate.alpha
    v = solve_triangular(surrogate.chol_lower, k_star, lower=True, check_finite=False)
    var_s = surrogate.signal_var - np.sum(v**2, axis=0)
    var_s = np.maximum(var_s, 0.0)
    return mean_s * surrogate.y_std + surrogate.y_mean, var_s * surrogate.y_std**2


def _posterior_cov_factor(cov: np.ndarray, scale: float) -> np.ndarray | None:
    """Square root of a posterior covariance, or None when degenerate/broken.

    Cholesky with a tiny escalating relative jitter first; an
    eigendecomposition with negative eigenvalues clamped as the robust
    fallback.  ``None`` means the caller should sample marginals.
    """
    if np.all(np.diag(cov) < 1e-12 * scale):
        return np.zeros_like(cov)  # posterior collapsed onto its mean
    eye = np.eye(len(cov))
    # A dense pool makes the kernel matrix numerically rank-deficient, so
    # plain Cholesky needs a jitter well above round-off to succeed.
    for jitter in (1e-10, 1e-8, 1e-6):
        try:
            return cholesky(cov + jitter * scale * eye, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    try:
        eigvals, eigvecs = np.linalg.eigh(cov)
        return eigvecs * np.sqrt(np.maximum(eigvals, 0.0))
    except np.linalg.LinAlgError:
        return None


def sample_posterior_on_pool(
    surrogate: GPSurrogate, pool: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One joint draw from the posterior over the pool, in natural units.

    The posterior covariance is factored (Cholesky, falling back to an
    eigendecomposition with negative eigenvalues clamped) and applied to a
    standard normal vector.  A posterior that has collapsed onto its mean is
    returned as the mean.  If every factorization fails the points are
    sampled independently from their marginals, with a warning.
    """
    return joint_posterior_samples([surrogate], pool, rng)[0]


def joint_posterior_samples(
    surrogates: list[GPSurrogate], pool: np.ndarray, rng: np.random.Generator
) -> list[np.ndarray]:
    """One joint posterior draw per surrogate over a shared pool.

    When every surrogate was fit on the same inputs with the same kernel
    (the search loop's case: only the targets differ), the kernel matrices
    and the covariance factorization are computed once and reused.
    """
    xq = np.atleast_2d(np.asarray(pool, dtype=float))
    first = surrogates[0]
    shared = all(
        s.x_train is first.x_train
        and np.array_equal(s.length_scales, first.length_scales)
        and s.signal_var == first.signal_var
        and s.noise_var == first.noise_var
        for s in surrogates[1:]
    )
    groups = [surrogates] if shared else [[s] for s in surrogates]

    samples: list[np.ndarray] = []
    for group in groups:
        lead = group[0]
        k_star = _sqexp(lead.x_train, xq, lead.signal_var, lead.length_scales)
        v = solve_triangular(lead.chol_lower, k_star, lower=True, check_finite=False)
        cov = _sqexp(xq, xq, lead.signal_var, lead.length_scales) - v.T @ v
        cov = 0.5 * (cov + cov.T)
        scale = max(lead.signal_var, 1.0)
        factor = _posterior_cov_factor(cov, scale)
        if factor is None:
            logger.warning(
                "posterior covariance factorization failed for %d pool points; "
                "sampling independently from marginals",
                len(xq),
            )
        for surrogate in group:
            mean_s = k_star.T @ surrogate.alpha
            if factor is None:
                std = np.sqrt(np.maximum(np.diag(cov), 0.0))
                sample_s = mean_s + std * rng.standard_normal(len(xq))
            else:
                sample_s = mean_s + factor @ rng.standard_normal(len(xq))
            samples.append(sample_s * surrogate.y_std + surrogate.y_mean)
    return samples
