"""NumPy/SciPy implementations of the hot kernels (fallback backend)."""
import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular


def band_terms(b, f_land, f_ocean, W, G):
    """Log-determinant and quadratic term of one band's covariance.

    Builds ``B = (b f_land + (1 - b) f_ocean) * W`` and ``C = B B^T`` and
    returns ``(log|C|, ||L^{-1} G||_F^2)`` with ``C = L L^T``. A covariance
    that is not numerically positive definite gives ``(inf, inf)``.
    """
    B = (b[:, None] * f_land[None, :] + (1.0 - b)[:, None] * f_ocean[None, :]) * W
    C = B @ B.T
    try:
        L = cholesky(C, lower=True, check_finite=False)
    except LinAlgError:
        return np.inf, np.inf
    d = np.diag(L)
    if not np.all(d > 0):
        return np.inf, np.inf
    X = solve_triangular(L, G, lower=True, check_finite=False)
    return 2.0 * np.sum(np.log(d)), float(np.sum(X * X))


def ar2_whiten(eps, phi1, phi2, sigma):
    """``(eps_k - phi1 eps_{k-1} - phi2 eps_{k-2}) / sigma`` for k >= 2, per site.

    ``eps`` has shape (S, K, R); coefficient arrays have shape (S,).
    """
    p1 = phi1[:, None, None]
    p2 = phi2[:, None, None]
    out = eps[:, 2:, :] - p1 * eps[:, 1:-1, :] - p2 * eps[:, :-2, :]
    return out / sigma[:, None, None]


def ar2_colorize(H, phi1, phi2, sigma, burn_in):
    """Run the AR(2) recursion forward from zero initial state, dropping ``burn_in`` steps."""
    S, L, R = H.shape
    out = np.empty((S, L, R))
    p1 = phi1[:, None]
    p2 = phi2[:, None]
    sg = sigma[:, None]
    prev1 = np.zeros((S, R))
    prev2 = np.zeros((S, R))
    for k in range(L):
        cur = p1 * prev1 + p2 * prev2 + sg * H[:, k, :]
        out[:, k, :] = cur
        prev2 = prev1
        prev1 = cur
    return np.ascontiguousarray(out[:, burn_in:, :])
