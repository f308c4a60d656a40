"""Exhaustive sparse CCA for small instances."""
from __future__ import annotations

from itertools import combinations, islice
from math import comb
from typing import NamedTuple

import numpy as np

from .errors import BudgetExceededError, InputError
from .model import CovarianceTriple, SparsityPattern
from .solver import CcaSolution, solve_on_pattern

DEFAULT_BUDGET = 2_000_000
_BATCH = 4096
# batched scores within this of the best are re-solved one by one so the
# winner is chosen with solve_cca's own numbers
_RESCORE_TOL = 1e-12


class OraclePoint(NamedTuple):
    k_a: int
    k_b: int
    rho: float
    solution: CcaSolution


def pattern_count(n: int, m: int, k_a: int, k_b: int) -> int:
    return comb(n, k_a) * comb(m, k_b)


def _batched_rho(cov: CovarianceTriple, pairs: list[tuple[tuple, tuple]]) -> np.ndarray:
    Ix = np.array([p[0] for p in pairs])
    Jy = np.array([p[1] for p in pairs])
    sx = cov.sigma_x[Ix[:, :, None], Ix[:, None, :]]
    sy = cov.sigma_y[Jy[:, :, None], Jy[:, None, :]]
    sxy = cov.sigma_xy[Ix[:, :, None], Jy[:, None, :]]
    try:
        Lx = np.linalg.cholesky(sx)
        Ly = np.linalg.cholesky(sy)
        T = np.linalg.solve(Lx, sxy)
        T = np.linalg.solve(Ly, np.swapaxes(T, 1, 2))
        return np.linalg.svd(T, compute_uv=False)[:, 0]
    except np.linalg.LinAlgError:
        return np.array(
            [solve_on_pattern(cov, SparsityPattern(I, J)).rho for I, J in pairs]
        )


def exhaustive_sparse_cca(
    cov: CovarianceTriple, k_a: int, k_b: int, budget: int = DEFAULT_BUDGET
) -> CcaSolution:
    """Best pattern with exactly ``k_a`` x-variables and ``k_b`` y-variables.

    Patterns are visited in lexicographic (I, J) order and the first one
    attaining the maximum wins.
    """
    if not (1 <= k_a <= cov.n and 1 <= k_b <= cov.m):
        raise InputError(f"cardinalities ({k_a}, {k_b}) out of range for ({cov.n}, {cov.m})")
    count = pattern_count(cov.n, cov.m, k_a, k_b)
    if count > budget:
        raise BudgetExceededError(count, budget)

    def all_patterns():
        for I in combinations(range(cov.n), k_a):
            for J in combinations(range(cov.m), k_b):
                yield I, J

    scored = []
    it = all_patterns()
    while batch := list(islice(it, _BATCH)):
        scored.append(_batched_rho(cov, batch))
    scores = np.concatenate(scored)
    top = float(np.max(scores))
    near = np.flatnonzero(scores >= top - _RESCORE_TOL)
    best = None
    for idx in near:
        I, J = _nth_pattern(cov, k_a, k_b, idx)
        sol = solve_on_pattern(cov, SparsityPattern(I, J))
        if best is None or sol.rho > best.rho:
            best = sol
    return best


def _nth_pattern(cov, k_a, k_b, idx):
    per_i = comb(cov.m, k_b)
    I = next(islice(combinations(range(cov.n), k_a), int(idx) // per_i, None))
    J = next(islice(combinations(range(cov.m), k_b), int(idx) % per_i, None))
    return I, J


def oracle_curve(
    cov: CovarianceTriple, max_total_cardinality: int, budget: int = DEFAULT_BUDGET
) -> list[OraclePoint]:
    """Optimal rho for every total cardinality 2..max_total_cardinality.

    For each total ``t`` the best split ``k_a + k_b = t`` is reported; equal
    values keep the split with the smaller ``k_a``.  The budget applies to
    the patterns summed over all splits of one ``t``.
    """
    top = min(max_total_cardinality, cov.n + cov.m)
    if top < 2:
        raise InputError("max_total_cardinality must be at least 2")
    points = []
    for t in range(2, top + 1):
        splits = [(ka, t - ka) for ka in range(max(1, t - cov.m), min(cov.n, t - 1) + 1)]
        count = sum(pattern_count(cov.n, cov.m, ka, kb) for ka, kb in splits)
        if count > budget:
            raise BudgetExceededError(count, budget)
        best = None
        for ka, kb in splits:
            sol = exhaustive_sparse_cca(cov, ka, kb, budget)
            if best is None or sol.rho > best.rho:
                best = OraclePoint(ka, kb, sol.rho, sol)
        points.append(best)
    return points
