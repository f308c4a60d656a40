"""Covariance data model, sample estimation and the marginal transforms.

Everything here is a pure function of immutable inputs.  Arrays stored on
the dataclasses are copied and flagged read-only on construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, ModelError

SYMMETRY_RTOL = 1e-12
PSD_TOL = 1e-10


def _frozen(arr, ndim: int, name: str) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    if out.ndim != ndim:
        raise InputError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise InputError(f"{name} contains non-finite entries")
    out.setflags(write=False)
    return out


def _check_symmetric(mat: np.ndarray, name: str) -> None:
    if mat.shape[0] != mat.shape[1]:
        raise InputError(f"{name} must be square, got shape {mat.shape}")
    scale = max(1.0, float(np.max(np.abs(mat))) if mat.size else 0.0)
    if mat.size and np.max(np.abs(mat - mat.T)) > SYMMETRY_RTOL * scale:
        raise InputError(f"{name} is not symmetric")


@dataclass(frozen=True, eq=False)
class CovarianceTriple:
    """Joint second-order model of ``x`` (length n) and ``y`` (length m).

    ``bounded`` is cleared by the PLS and diagonal transforms: the joint
    matrix they produce need not be PSD, so the leading value may exceed 1.
    """

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_xy: np.ndarray
    bounded: bool = True

    def __post_init__(self):
        sx = _frozen(self.sigma_x, 2, "sigma_x")
        sy = _frozen(self.sigma_y, 2, "sigma_y")
        sxy = _frozen(self.sigma_xy, 2, "sigma_xy")
        _check_symmetric(sx, "sigma_x")
        _check_symmetric(sy, "sigma_y")
        if sx.shape[0] < 1 or sy.shape[0] < 1:
            raise InputError("both marginal blocks need at least one variable")
        if sxy.shape != (sx.shape[0], sy.shape[0]):
            raise InputError(
                f"sigma_xy has shape {sxy.shape}, expected {(sx.shape[0], sy.shape[0])}"
            )
        object.__setattr__(self, "sigma_x", sx)
        object.__setattr__(self, "sigma_y", sy)
        object.__setattr__(self, "sigma_xy", sxy)

    @property
    def n(self) -> int:
        return self.sigma_x.shape[0]

    @property
    def m(self) -> int:
        return self.sigma_y.shape[0]

    def joint(self) -> np.ndarray:
        """The stacked (n+m) x (n+m) covariance matrix."""
        return np.block([[self.sigma_x, self.sigma_xy], [self.sigma_xy.T, self.sigma_y]])

    def swapped(self) -> CovarianceTriple:
        return CovarianceTriple(self.sigma_y, self.sigma_x, self.sigma_xy.T, self.bounded)

    def __eq__(self, other):
        if not isinstance(other, CovarianceTriple):
            return NotImplemented
        return (
            np.array_equal(self.sigma_x, other.sigma_x)
            and np.array_equal(self.sigma_y, other.sigma_y)
            and np.array_equal(self.sigma_xy, other.sigma_xy)
            and self.bounded == other.bounded
        )

    __hash__ = None


def min_joint_eigenvalue(cov: CovarianceTriple) -> float:
    return float(np.linalg.eigvalsh(cov.joint())[0])


def validate_psd(cov: CovarianceTriple, tol: float = PSD_TOL) -> None:
    """Raise ModelError unless the joint matrix is PSD up to ``-tol``.

    The tolerance is scaled by the largest eigenvalue when that exceeds one.
    """
    eig = np.linalg.eigvalsh(cov.joint())
    scale = max(1.0, float(np.max(np.abs(eig))))
    if eig[0] < -tol * scale:
        raise ModelError(f"joint covariance has eigenvalue {eig[0]:.3e} < 0")


@dataclass(frozen=True, eq=False)
class DataSet:
    """N paired samples; rows of ``X`` and ``Y`` are observations."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = _frozen(self.X, 2, "X")
        Y = _frozen(self.Y, 2, "Y")
        if X.shape[0] != Y.shape[0]:
            raise InputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[0] < 1:
            raise InputError("need at least one sample")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def N(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class SparsityPattern:
    """Selected x indices ``I`` and y indices ``J``, both strictly increasing."""

    I: tuple[int, ...]
    J: tuple[int, ...]

    def __post_init__(self):
        I = tuple(int(i) for i in self.I)
        J = tuple(int(j) for j in self.J)
        for name, idx in (("I", I), ("J", J)):
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise InputError(f"{name} must be strictly increasing, got {idx}")
            if idx and idx[0] < 0:
                raise InputError(f"{name} has a negative index")
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "J", J)

    @classmethod
    def of(cls, I: Sequence[int], J: Sequence[int]) -> SparsityPattern:
        """Build from unordered index collections."""
        return cls(tuple(sorted(set(I))), tuple(sorted(set(J))))

    @classmethod
    def full(cls, n: int, m: int) -> SparsityPattern:
        return cls(tuple(range(n)), tuple(range(m)))

    @property
    def cardinality(self) -> int:
        return len(self.I) + len(self.J)

    def check_bounds(self, n: int, m: int) -> None:
        if self.I and self.I[-1] >= n:
            raise InputError(f"x index {self.I[-1]} out of range for n={n}")
        if self.J and self.J[-1] >= m:
            raise InputError(f"y index {self.J[-1]} out of range for m={m}")

    def with_x(self, i: int) -> SparsityPattern:
        return SparsityPattern.of(self.I + (i,), self.J)

    def with_y(self, j: int) -> SparsityPattern:
        return SparsityPattern.of(self.I, self.J + (j,))

    def without_x(self, i: int) -> SparsityPattern:
        return SparsityPattern(tuple(k for k in self.I if k != i), self.J)

    def without_y(self, j: int) -> SparsityPattern:
        return SparsityPattern(self.I, tuple(k for k in self.J if k != j))

    def contains(self, other: SparsityPattern) -> bool:
        return set(other.I) <= set(self.I) and set(other.J) <= set(self.J)


def estimate_covariance(data: DataSet, center: bool = False) -> CovarianceTriple:
    """Sample covariance triple ``(X'X, Y'Y, X'Y) / N``.

    With ``center`` the column means are removed first.  The normalisation
    stays 1/N either way.
    """
    X, Y = data.X, data.Y
    if center:
        X = X - X.mean(axis=0)
        Y = Y - Y.mean(axis=0)
    N = data.N
    sx = X.T @ X / N
    sy = Y.T @ Y / N
    # Gram products from gemm may differ from their transpose in the last bit
    sx = (sx + sx.T) / 2
    sy = (sy + sy.T) / 2
    return CovarianceTriple(sx, sy, X.T @ Y / N)


def _check_eps(eps: float, name: str) -> float:
    eps = float(eps)
    if not np.isfinite(eps) or eps < 0:
        raise InputError(f"{name} must be a nonnegative number, got {eps}")
    return eps


def ridge_regularize(cov: CovarianceTriple, eps_x: float, eps_y: float) -> CovarianceTriple:
    eps_x = _check_eps(eps_x, "eps_x")
    eps_y = _check_eps(eps_y, "eps_y")
    return CovarianceTriple(
        cov.sigma_x + eps_x * np.eye(cov.n),
        cov.sigma_y + eps_y * np.eye(cov.m),
        cov.sigma_xy,
        cov.bounded,
    )


def diagonalize_marginals(cov: CovarianceTriple) -> CovarianceTriple:
    """Keep only the variances on the marginals (diagonal CCA).

    The result need not be PSD jointly, so its leading value is unbounded.
    """
    return CovarianceTriple(
        np.diag(np.diag(cov.sigma_x)),
        np.diag(np.diag(cov.sigma_y)),
        cov.sigma_xy,
        bounded=False,
    )


def identity_marginals(cov: CovarianceTriple) -> CovarianceTriple:
    """Replace both marginals by the identity; CCA on the result is PLS."""
    return CovarianceTriple(np.eye(cov.n), np.eye(cov.m), cov.sigma_xy, bounded=False)


def restrict(cov: CovarianceTriple, pattern: SparsityPattern) -> CovarianceTriple:
    pattern.check_bounds(cov.n, cov.m)
    I, J = list(pattern.I), list(pattern.J)
    return CovarianceTriple(
        cov.sigma_x[np.ix_(I, I)],
        cov.sigma_y[np.ix_(J, J)],
        cov.sigma_xy[np.ix_(I, J)],
        cov.bounded,
    )


def wishart_sample(
    rng_seed: int, dim: int, dof: int, n: int | None = None
) -> CovarianceTriple:
    """Normalised Wishart draw ``G'G / dof`` split into an (n, dim - n) triple.

    ``G`` has ``dof`` rows of i.i.d. standard normals.  ``n`` defaults to
    ``dim // 2``.
    """
    if dim < 2:
        raise InputError("dim must be at least 2 to form two blocks")
    if dof < dim:
        raise InputError(f"dof={dof} < dim={dim} gives a singular Wishart matrix")
    if n is None:
        n = dim // 2
    if not 1 <= n < dim:
        raise InputError(f"n={n} must lie in [1, {dim - 1}]")
    rng = np.random.default_rng(rng_seed)
    G = rng.standard_normal((dof, dim))
    W = G.T @ G / dof
    W = (W + W.T) / 2
    return CovarianceTriple(W[:n, :n], W[n:, n:], W[:n, n:])
