"""Full (non-sparse) CCA and correlation evaluation."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InputError, ModelError, SolverError
from .model import CovarianceTriple, SparsityPattern, restrict

JITTER_SCALE = 1e-10
# squared Cholesky pivots below this fraction of the largest diagonal entry
# are treated as a failed factorization
PIVOT_RTOL = 1e-14
RHO_TOL = 1e-10
SIGN_TOL = 1e-12
VARIANCE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CcaSolution:
    """Leading canonical pair on ``pattern``.

    ``a`` and ``b`` are indexed by ``pattern.I`` and ``pattern.J``
    respectively, not by the full variable space.
    """

    rho: float
    a: np.ndarray
    b: np.ndarray
    pattern: SparsityPattern

    def embedded(self, n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Weights scattered into full-length vectors, zero off the pattern."""
        self.pattern.check_bounds(n, m)
        a = np.zeros(n)
        b = np.zeros(m)
        a[list(self.pattern.I)] = self.a
        b[list(self.pattern.J)] = self.b
        return a, b


def _try_cholesky(mat: np.ndarray) -> np.ndarray | None:
    try:
        L = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None
    scale = float(np.max(np.diag(mat)))
    if scale <= 0 or np.min(np.diag(L)) ** 2 <= PIVOT_RTOL * scale:
        return None
    return L


def cholesky_with_jitter(mat: np.ndarray, name: str) -> np.ndarray:
    """Lower Cholesky factor, retrying once with a trace-scaled jitter."""
    L = _try_cholesky(mat)
    if L is not None:
        return L
    dim = mat.shape[0]
    jitter = JITTER_SCALE * float(np.trace(mat)) / dim
    if jitter > 0:
        L = _try_cholesky(mat + jitter * np.eye(dim))
        if L is not None:
            return L
    raise SolverError(f"{name} is numerically singular or indefinite")


def _canonical_sign(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nz = np.flatnonzero(np.abs(a) > SIGN_TOL)
    if nz.size and a[nz[0]] < 0:
        return -a, -b
    return a, b


def solve_cca(cov: CovarianceTriple) -> CcaSolution:
    """Leading canonical correlation and weights of ``cov``.

    The marginals are factored as ``Lx Lx'`` and ``Ly Ly'``; the top singular
    triple of ``Lx^-1 Sxy Ly^-T`` gives rho, and back-substitution yields
    weights with unit variance under each marginal.  A singular joint
    matrix with invertible marginals shows up as a unit singular value.
    For unbounded (PLS) triples rho is the top singular value of the cross
    covariance and is not clipped.
    """
    Lx = cholesky_with_jitter(cov.sigma_x, "sigma_x")
    Ly = cholesky_with_jitter(cov.sigma_y, "sigma_y")
    T = solve_triangular(Lx, cov.sigma_xy, lower=True)
    T = solve_triangular(Ly, T.T, lower=True).T
    try:
        U, s, Vt = np.linalg.svd(T)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"SVD of the whitened cross covariance failed: {exc}") from exc
    rho = float(s[0])
    if cov.bounded:
        if rho > 1.0 + RHO_TOL:
            raise SolverError(f"canonical correlation {rho!r} exceeds 1; model is not PSD")
        rho = min(rho, 1.0)
    a = solve_triangular(Lx.T, U[:, 0], lower=False)
    b = solve_triangular(Ly.T, Vt[0], lower=False)
    a, b = _canonical_sign(a, b)
    return CcaSolution(rho, a, b, SparsityPattern.full(cov.n, cov.m))


def solve_on_pattern(cov: CovarianceTriple, pattern: SparsityPattern) -> CcaSolution:
    """``solve_cca`` on the restricted triple, labelled with ``pattern``."""
    if not pattern.I or not pattern.J:
        raise InputError("pattern needs at least one index on each side")
    sol = solve_cca(restrict(cov, pattern))
    return replace(sol, pattern=pattern)


def _variance(mat: np.ndarray, w: np.ndarray, name: str) -> float:
    v = float(w @ mat @ w)
    scale = float(w @ w) * max(1.0, float(np.max(np.abs(np.diag(mat)))))
    if v < -VARIANCE_TOL * scale:
        raise ModelError(f"negative variance {v:.3e} under {name}")
    return max(v, 0.0)


def correlation_of(cov: CovarianceTriple, a, b) -> float:
    """Correlation of ``a'x`` and ``b'y`` under ``cov``, with 0/0 taken as 1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (cov.n,) or b.shape != (cov.m,):
        raise InputError(
            f"weight lengths {a.shape}, {b.shape} do not match ({cov.n}, {cov.m})"
        )
    va = _variance(cov.sigma_x, a, "sigma_x")
    vb = _variance(cov.sigma_y, b, "sigma_y")
    num = float(a @ cov.sigma_xy @ b)
    den = np.sqrt(va) * np.sqrt(vb)
    scale = np.sqrt(float(a @ a) * float(b @ b)) * max(
        1.0, float(np.max(np.abs(cov.sigma_xy))) if cov.sigma_xy.size else 0.0
    )
    if den <= VARIANCE_TOL * scale:
        if abs(num) <= VARIANCE_TOL * scale:
            return 1.0
        raise ModelError("nonzero covariance between zero-variance combinations")
    return num / den


def true_correlation(true_cov: CovarianceTriple, estimated: CcaSolution) -> float:
    """Correlation the estimated weights achieve under the true model."""
    a, b = estimated.embedded(true_cov.n, true_cov.m)
    return correlation_of(true_cov, a, b)
