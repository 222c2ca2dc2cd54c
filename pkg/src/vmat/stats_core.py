"""Statistics and linear-algebra kernel used by the rest of the package.

Least squares and the symmetric eigenproblem are delegated to LAPACK via
numpy (asset counts here are tiny, k <= 32); the normal CDF, quantile and
chi-square survival function sit on libm/scipy.special.  The test suite
cross-checks every one of these against independent hand-rolled oracles
(Gaussian-elimination normal equations, Jacobi rotations, Simpson
quadrature), so the fast paths never self-certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, ndtri

from .errors import DegenerateSeries, InsufficientData, RankDeficient

_RANK_RTOL = 1e-10  # smallest/largest singular value below this is rank deficient
_SYM_TOL = 1e-10
_TIE_RTOL = 1e-12


@dataclass
class OlsFit:
    """Least-squares fit: coefficients, residuals and s^2 with dof n - m."""

    coefficients: np.ndarray
    residuals: np.ndarray
    residual_variance: float


def ols(design: np.ndarray, response: np.ndarray) -> OlsFit:
    """Ordinary least squares via singular value decomposition.

    Requires more rows than columns and a numerically full-rank design
    (smallest singular value > 1e-10 x largest); raises
    :class:`InsufficientData` / :class:`RankDeficient` otherwise.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    n, m = X.shape
    if y.shape[0] != n:
        raise ValueError(f"design has {n} rows but response has {y.shape[0]}")
    if n <= m:
        raise InsufficientData(f"need more rows than regressors: n={n}, m={m}")
    u, s, vt = np.linalg.svd(X, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= _RANK_RTOL * s[0]:
        raise RankDeficient(f"design matrix rank deficient (cond ~ {s[0]/max(s[-1], 1e-300):.2e})")
    beta = vt.T @ ((u.T @ y) / s)
    resid = y - X @ beta
    return OlsFit(beta, resid, float(resid @ resid) / (n - m))


@dataclass
class EigenPair:
    """Largest eigenvalue of a symmetric matrix with its unit eigenvector."""

    value: float
    vector: np.ndarray


def apply_sign_convention(vector: np.ndarray) -> np.ndarray:
    """Flip sign so the largest-magnitude component (lowest index on ties)
    is positive.  Keeps every eigenvector-valued result deterministic."""
    v = np.asarray(vector, dtype=float)
    lead = int(np.argmax(np.abs(v)))
    return -v if v[lead] < 0 else v.copy()


def top_eigenpair(matrix: np.ndarray) -> EigenPair:
    """Algebraically largest eigenpair of a symmetric matrix.

    The input is symmetrized as (K + K^T)/2 first and must be symmetric to
    1e-10 (relative).  When the top eigenvalue is degenerate the returned
    vector is the normalized projection of the first standard basis vector
    with nonzero projection onto the top eigenspace, so ties resolve to the
    lowest asset index.
    """
    K = np.asarray(matrix, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(K)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(K))))
    if np.max(np.abs(K - K.T)) > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    K = 0.5 * (K + K.T)

    values, vectors = np.linalg.eigh(K)
    top = values[-1]
    tie_tol = _TIE_RTOL * max(1.0, abs(top))
    members = np.nonzero(values >= top - tie_tol)[0]
    if members.size == 1:
        vec = vectors[:, members[0]]
    else:
        basis = vectors[:, members]  # orthonormal columns spanning the top eigenspace
        vec = None
        for i in range(K.shape[0]):
            proj = basis @ basis[i, :]
            norm = np.linalg.norm(proj)
            if norm > 1e-8:
                vec = proj / norm
                break
        if vec is None:  # cannot happen for an orthonormal basis
            vec = basis[:, 0]
    return EigenPair(float(top), apply_sign_convention(vec))


_SQRT2 = math.sqrt(2.0)


def normal_cdf(z: float) -> float:
    """Standard normal CDF, absolute error well below 1e-10."""
    if math.isnan(z):
        raise ValueError("z must be finite")
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_quantile(p: float, mean: float = 0.0, variance: float = 1.0) -> float:
    """Quantile of Normal(mean, variance) at probability ``p`` in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if variance <= 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    return mean + math.sqrt(variance) * float(ndtri(p))


def chi2_sf(x: float, dof: int) -> float:
    """Chi-square survival function via the regularized incomplete gamma."""
    if dof < 1 or int(dof) != dof:
        raise ValueError(f"dof must be a positive integer, got {dof}")
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x}")
    return float(gammaincc(dof / 2.0, x / 2.0))


def autocorrelations(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 1..max_lag of the mean-centered series."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if max_lag < 1 or max_lag >= n:
        raise ValueError(f"need 1 <= max_lag < n, got max_lag={max_lag}, n={n}")
    c = x - x.mean()
    denom = float(c @ c)
    if denom <= 0.0:
        raise DegenerateSeries("zero-variance series has no autocorrelation")
    return np.array([float(c[j:] @ c[:-j]) / denom for j in range(1, max_lag + 1)])


def ljung_box(residuals: np.ndarray, max_lag: int, fitted_params: int = 0) -> tuple[float, float]:
    """Portmanteau whiteness test on residuals.

    Q = n (n + 2) sum_{j<=h} rho_j^2 / (n - j), referred to chi-square with
    h - m degrees of freedom, m being the number of fitted model parameters.
    Returns ``(Q, p_value)``.
    """
    x = np.asarray(residuals, dtype=float).ravel()
    n = x.size
    h = int(max_lag)
    m = int(fitted_params)
    if h < 1 or n <= h:
        raise ValueError(f"need n > max_lag >= 1, got n={n}, max_lag={h}")
    if m < 0 or h <= m:
        raise ValueError(f"need max_lag > fitted_params >= 0, got h={h}, m={m}")
    rho = autocorrelations(x, h)
    q = n * (n + 2.0) * float(np.sum(rho**2 / (n - np.arange(1, h + 1))))
    return q, chi2_sf(q, h - m)
