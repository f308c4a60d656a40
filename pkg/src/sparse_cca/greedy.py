"""Greedy sparse CCA: exact and bound-driven forward selection, backward elimination.

Every visited pattern is solved exactly, so a path's ``rho`` values are true
canonical correlations of its patterns.  The approximate forward mode only
uses cheap lower bounds to *choose* the next variable, then pays for a
single CCA solve on the chosen pattern.
"""
from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InputError, SolverError
from .model import CovarianceTriple, SparsityPattern
from .solver import PIVOT_RTOL, CcaSolution, cholesky_with_jitter, solve_on_pattern

EXACT = "exact"
APPROXIMATE = "approximate"
FORWARD = "forward"
BACKWARD = "backward"

# Schur complements at or below this fraction of the candidate's variance
# mark the candidate as numerically dependent on the selected set
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class GreedyConfig:
    k_a: int
    k_b: int
    mode: str = APPROXIMATE
    direction: str = FORWARD

    def __post_init__(self):
        if self.mode not in (EXACT, APPROXIMATE):
            raise InputError(f"unknown mode {self.mode!r}")
        if self.direction not in (FORWARD, BACKWARD):
            raise InputError(f"unknown direction {self.direction!r}")
        if self.direction == BACKWARD and self.mode != EXACT:
            raise InputError("backward greedy is only available in exact mode")
        if self.k_a < 1 or self.k_b < 1:
            raise InputError("target cardinalities must be at least 1")

    def check(self, cov: CovarianceTriple) -> None:
        if self.k_a > cov.n or self.k_b > cov.m:
            raise InputError(
                f"targets ({self.k_a}, {self.k_b}) exceed dimensions ({cov.n}, {cov.m})"
            )


@dataclass(frozen=True, eq=False)
class PathEntry:
    """One point of a sparsity path.

    ``side``/``index`` name the variable added (forward) or removed
    (backward); both are ``None`` for the starting entry.  ``solves`` counts
    the CCA solves spent producing this entry.
    """

    step: int
    side: str | None
    index: int | None
    pattern: SparsityPattern
    solution: CcaSolution
    bound_value: float | None = None
    solves: int = 1

    @property
    def rho(self) -> float:
        return self.solution.rho


@dataclass(frozen=True, eq=False)
class SparsityPath:
    entries: tuple[PathEntry, ...]
    direction: str = FORWARD
    mode: str = APPROXIMATE

    @property
    def seed_entry(self) -> PathEntry:
        return self.entries[0]

    @property
    def final(self) -> PathEntry:
        return self.entries[-1]

    @property
    def rhos(self) -> np.ndarray:
        return np.array([e.rho for e in self.entries])

    @property
    def cardinalities(self) -> list[int]:
        return [e.pattern.cardinality for e in self.entries]

    @property
    def solve_count(self) -> int:
        return sum(e.solves for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def by_cardinality(self) -> dict[int, float]:
        return {e.pattern.cardinality: e.rho for e in self.entries}


def _mapper(executor: Executor | None):
    return executor.map if executor is not None else map


def seed_pair(cov: CovarianceTriple) -> tuple[SparsityPattern, CcaSolution]:
    """Best single (x_i, y_j) pair by absolute correlation.

    Ties go to the smallest ``i``, then the smallest ``j``.
    """
    dx = np.diag(cov.sigma_x)
    dy = np.diag(cov.sigma_y)
    den = np.sqrt(np.outer(np.clip(dx, 0, None), np.clip(dy, 0, None)))
    num = np.abs(cov.sigma_xy)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(den > 0, num / den, 1.0)
    i, j = np.unravel_index(int(np.argmax(score)), score.shape)
    pattern = SparsityPattern((int(i),), (int(j),))
    return pattern, solve_on_pattern(cov, pattern)


def _check_growable(cov: CovarianceTriple, pattern: SparsityPattern, k_a, k_b):
    pattern.check_bounds(cov.n, cov.m)
    if not pattern.I or not pattern.J:
        raise InputError("forward steps need a nonempty pattern on both sides")
    k_a = cov.n if k_a is None else k_a
    k_b = cov.m if k_b is None else k_b
    if len(pattern.I) >= k_a and len(pattern.J) >= k_b:
        raise InputError("pattern already at its target cardinalities")
    return k_a, k_b


def _candidates(cov, pattern, k_a, k_b) -> list[tuple[str, int]]:
    """Addable variables in tie-break order: X side first, ascending index."""
    out = []
    if len(pattern.I) < k_a:
        chosen = set(pattern.I)
        out += [("X", i) for i in range(cov.n) if i not in chosen]
    if len(pattern.J) < k_b:
        chosen = set(pattern.J)
        out += [("Y", j) for j in range(cov.m) if j not in chosen]
    return out


def _extended(pattern: SparsityPattern, side: str, index: int) -> SparsityPattern:
    return pattern.with_x(index) if side == "X" else pattern.with_y(index)


def _solve_candidate(cov, pattern, side, index) -> CcaSolution:
    try:
        return solve_on_pattern(cov, pattern)
    except SolverError as exc:
        raise SolverError(f"candidate {side.lower()}{index}: {exc}") from exc


def forward_step_exact(
    cov: CovarianceTriple,
    pattern: SparsityPattern,
    k_a: int | None = None,
    k_b: int | None = None,
    executor: Executor | None = None,
) -> PathEntry:
    """Add the single variable whose inclusion gives the largest exact rho.

    ``k_a``/``k_b`` default to the full dimensions; a side at its target
    offers no candidates.
    """
    k_a, k_b = _check_growable(cov, pattern, k_a, k_b)
    cands = _candidates(cov, pattern, k_a, k_b)
    grown = [_extended(pattern, s, k) for s, k in cands]
    sols = list(
        _mapper(executor)(
            lambda args: _solve_candidate(cov, *args),
            [(p, s, k) for p, (s, k) in zip(grown, cands)],
        )
    )
    best = int(np.argmax([s.rho for s in sols]))
    side, index = cands[best]
    return PathEntry(
        step=pattern.cardinality - 1,
        side=side,
        index=index,
        pattern=grown[best],
        solution=sols[best],
        solves=len(sols),
    )


class _GrowingCholesky:
    """Cholesky factor of ``full[order, order]`` extended one index at a time.

    ``order`` is insertion order, which generally differs from the sorted
    order patterns use.
    """

    def __init__(self, full: np.ndarray, order, name: str):
        self.full = full
        self.name = name
        self.order = list(order)
        self.L = cholesky_with_jitter(full[np.ix_(self.order, self.order)], name)

    def add(self, k: int) -> None:
        col = self.full[self.order, k]
        l = solve_triangular(self.L, col, lower=True)
        d2 = float(self.full[k, k] - l @ l)
        self.order.append(k)
        if d2 <= PIVOT_RTOL * max(float(np.max(np.diag(self.full))), 0.0):
            self.L = cholesky_with_jitter(
                self.full[np.ix_(self.order, self.order)], self.name
            )
            return
        size = len(self.order)
        L = np.zeros((size, size))
        L[:-1, :-1] = self.L
        L[-1, :-1] = l
        L[-1, -1] = np.sqrt(d2)
        self.L = L


def _side_bounds(
    sigma_own: np.ndarray,
    cross: np.ndarray,
    chol: _GrowingCholesky,
    other_idx: tuple[int, ...],
    other_w: np.ndarray,
    rest: list[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Lower bounds on the rho**2 gain from adding each of ``rest`` to one side.

    ``cross`` is the cross covariance oriented with this side on the rows,
    ``other_w`` the current weight vector of the other side (unit variance)
    indexed by ``other_idx``.  Holding it fixed, the best weights on the
    grown side achieve ``v' S^-1 v`` with ``v = cross[:, other] @ other_w``;
    block inversion splits that into the current rho**2 plus
    ``(v_k - S_Ik' S_II^-1 v_I)**2 / schur_k``.
    """
    order = chol.order
    v_sel = cross[np.ix_(order, other_idx)] @ other_w
    v_rest = cross[np.ix_(rest, other_idx)] @ other_w
    Z = solve_triangular(chol.L, sigma_own[np.ix_(order, rest)], lower=True)
    w = solve_triangular(chol.L, v_sel, lower=True)
    var = np.diag(sigma_own)[rest]
    schur = var - np.einsum("ij,ij->j", Z, Z)
    resid = v_rest - Z.T @ w
    degenerate = schur <= DEGENERATE_RTOL * np.maximum(var, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bounds = np.where(degenerate, 0.0, resid**2 / np.where(degenerate, 1.0, schur))
    return bounds, degenerate


def _check_solution(pattern: SparsityPattern, sol: CcaSolution) -> None:
    if sol.pattern != pattern:
        raise InputError("solution does not belong to the given pattern")


def _delta_all(cov, pattern, sol, chol_x, rest):
    return _side_bounds(cov.sigma_x, cov.sigma_xy, chol_x, pattern.J, sol.b, rest)


def _gamma_all(cov, pattern, sol, chol_y, rest):
    return _side_bounds(cov.sigma_y, cov.sigma_xy.T, chol_y, pattern.I, sol.a, rest)


def bound_delta(
    cov: CovarianceTriple, pattern: SparsityPattern, sol: CcaSolution, i: int
) -> float:
    """Guaranteed increase of rho**2 when x-variable ``i`` joins ``I``.

    Degenerate candidates (variance explained by ``I``) get 0.
    """
    _check_solution(pattern, sol)
    if i in pattern.I or not 0 <= i < cov.n:
        raise InputError(f"x index {i} is not a valid candidate")
    chol = _GrowingCholesky(cov.sigma_x, pattern.I, "sigma_x")
    bounds, _ = _delta_all(cov, pattern, sol, chol, [i])
    return float(bounds[0])


def bound_gamma(
    cov: CovarianceTriple, pattern: SparsityPattern, sol: CcaSolution, j: int
) -> float:
    """Guaranteed increase of rho**2 when y-variable ``j`` joins ``J``."""
    _check_solution(pattern, sol)
    if j in pattern.J or not 0 <= j < cov.m:
        raise InputError(f"y index {j} is not a valid candidate")
    chol = _GrowingCholesky(cov.sigma_y, pattern.J, "sigma_y")
    bounds, _ = _gamma_all(cov, pattern, sol, chol, [j])
    return float(bounds[0])


@dataclass(frozen=True, eq=False)
class CandidateBounds:
    side: str
    indices: np.ndarray
    values: np.ndarray
    degenerate: np.ndarray


def candidate_bounds(
    cov: CovarianceTriple,
    pattern: SparsityPattern,
    sol: CcaSolution,
    k_a: int | None = None,
    k_b: int | None = None,
    chol_x: _GrowingCholesky | None = None,
    chol_y: _GrowingCholesky | None = None,
) -> list[CandidateBounds]:
    """Bounds for every addable variable, X side first."""
    _check_solution(pattern, sol)
    k_a = cov.n if k_a is None else k_a
    k_b = cov.m if k_b is None else k_b
    out = []
    if len(pattern.I) < k_a:
        rest = [i for i in range(cov.n) if i not in set(pattern.I)]
        chol_x = chol_x or _GrowingCholesky(cov.sigma_x, pattern.I, "sigma_x")
        vals, deg = _delta_all(cov, pattern, sol, chol_x, rest)
        out.append(CandidateBounds("X", np.array(rest), vals, deg))
    if len(pattern.J) < k_b:
        rest = [j for j in range(cov.m) if j not in set(pattern.J)]
        chol_y = chol_y or _GrowingCholesky(cov.sigma_y, pattern.J, "sigma_y")
        vals, deg = _gamma_all(cov, pattern, sol, chol_y, rest)
        out.append(CandidateBounds("Y", np.array(rest), vals, deg))
    return out


def _approx_step(cov, pattern, sol, k_a, k_b, chol_x, chol_y, executor) -> PathEntry:
    groups = candidate_bounds(cov, pattern, sol, k_a, k_b, chol_x, chol_y)
    sides = [g.side for g in groups for _ in g.indices]
    indices = np.concatenate([g.indices for g in groups])
    values = np.concatenate([g.values for g in groups])
    degenerate = np.concatenate([g.degenerate for g in groups])
    if np.all(degenerate):
        return forward_step_exact(cov, pattern, k_a, k_b, executor)
    best = int(np.argmax(np.where(degenerate, -np.inf, values)))
    side, index = sides[best], int(indices[best])
    grown = _extended(pattern, side, index)
    return PathEntry(
        step=pattern.cardinality - 1,
        side=side,
        index=index,
        pattern=grown,
        solution=_solve_candidate(cov, grown, side, index),
        bound_value=float(values[best]),
        solves=1,
    )


def forward_step_approx(
    cov: CovarianceTriple,
    pattern: SparsityPattern,
    sol: CcaSolution,
    k_a: int | None = None,
    k_b: int | None = None,
) -> PathEntry:
    """Add the variable with the largest rho**2 lower bound, then solve once.

    If every candidate is degenerate the step is taken exactly instead.
    """
    k_a, k_b = _check_growable(cov, pattern, k_a, k_b)
    return _approx_step(cov, pattern, sol, k_a, k_b, None, None, None)


def iter_forward(
    cov: CovarianceTriple, config: GreedyConfig, executor: Executor | None = None
) -> Iterator[PathEntry]:
    """Yield the forward path entry by entry, seed first."""
    config.check(cov)
    pattern, sol = seed_pair(cov)
    yield PathEntry(0, None, None, pattern, sol, None, solves=1)
    chol_x = chol_y = None
    if config.mode == APPROXIMATE:
        chol_x = _GrowingCholesky(cov.sigma_x, pattern.I, "sigma_x")
        chol_y = _GrowingCholesky(cov.sigma_y, pattern.J, "sigma_y")
    while len(pattern.I) < config.k_a or len(pattern.J) < config.k_b:
        if config.mode == APPROXIMATE:
            entry = _approx_step(
                cov, pattern, sol, config.k_a, config.k_b, chol_x, chol_y, executor
            )
            (chol_x if entry.side == "X" else chol_y).add(entry.index)
        else:
            entry = forward_step_exact(cov, pattern, config.k_a, config.k_b, executor)
        pattern, sol = entry.pattern, entry.solution
        yield entry


def iter_backward(
    cov: CovarianceTriple, config: GreedyConfig, executor: Executor | None = None
) -> Iterator[PathEntry]:
    """Yield the backward path, starting from the full pattern.

    Each step removes the variable whose removal keeps the largest exact rho;
    ties go to the X side, then to the largest index.
    """
    config.check(cov)
    pattern = SparsityPattern.full(cov.n, cov.m)
    yield PathEntry(0, None, None, pattern, solve_on_pattern(cov, pattern), None, 1)
    step = 0
    while len(pattern.I) > config.k_a or len(pattern.J) > config.k_b:
        step += 1
        cands = []
        if len(pattern.I) > config.k_a:
            cands += [("X", i) for i in reversed(pattern.I)]
        if len(pattern.J) > config.k_b:
            cands += [("Y", j) for j in reversed(pattern.J)]
        shrunk = [
            pattern.without_x(k) if s == "X" else pattern.without_y(k) for s, k in cands
        ]
        sols = list(
            _mapper(executor)(
                lambda args: _solve_candidate(cov, *args),
                [(p, s, k) for p, (s, k) in zip(shrunk, cands)],
            )
        )
        best = int(np.argmax([s.rho for s in sols]))
        pattern = shrunk[best]
        yield PathEntry(
            step, cands[best][0], cands[best][1], pattern, sols[best], None, len(sols)
        )


def backward_greedy(
    cov: CovarianceTriple, config: GreedyConfig, executor: Executor | None = None
) -> SparsityPath:
    if config.direction != BACKWARD:
        raise InputError("backward_greedy needs direction='backward'")
    return SparsityPath(tuple(iter_backward(cov, config, executor)), BACKWARD, EXACT)


def run_greedy(
    cov: CovarianceTriple, config: GreedyConfig, executor: Executor | None = None
) -> SparsityPath:
    """Full sparsity path for ``config``.

    Forward paths have ``k_a + k_b - 1`` entries including the seed.
    """
    if config.direction == BACKWARD:
        return backward_greedy(cov, config, executor)
    return SparsityPath(tuple(iter_forward(cov, config, executor)), FORWARD, config.mode)
