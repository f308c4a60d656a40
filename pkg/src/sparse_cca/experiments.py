"""Monte Carlo studies: correlation vs. sparsity, large-scale paths, regularization."""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import InputError, SparseCCAError, SolverError, TrialError
from .greedy import (
    APPROXIMATE,
    BACKWARD,
    EXACT,
    FORWARD,
    GreedyConfig,
    iter_backward,
    iter_forward,
)
from .model import (
    CovarianceTriple,
    DataSet,
    diagonalize_marginals,
    estimate_covariance,
    identity_marginals,
    wishart_sample,
)
from .oracle import DEFAULT_BUDGET, oracle_curve
from .solver import CcaSolution, true_correlation

METHODS: dict[str, Callable[[CovarianceTriple], CovarianceTriple]] = {
    "CCA": lambda cov: cov,
    "PLS": identity_marginals,
    "DCCA": diagonalize_marginals,
}
MODES = ("forward-approx", "forward-exact", "backward", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 7
    m: int = 7
    trials: int = 200
    seed: int = 0
    dof: int | None = None
    N: int = 20
    methods: tuple[str, ...] = ("CCA",)
    modes: tuple[str, ...] = ("forward-approx",)
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.n < 1 or self.m < 1:
            raise InputError("n and m must be positive")
        if self.trials < 1:
            raise InputError("trials must be at least 1")
        if not self.methods or not self.modes:
            raise InputError("methods and modes must be nonempty")
        bad = [x for x in self.methods if x not in METHODS]
        bad += [x for x in self.modes if x not in MODES]
        if bad:
            raise InputError(f"unknown methods/modes: {bad}")
        if self.dof is not None and self.dof < self.n + self.m:
            raise InputError(f"dof={self.dof} < n+m={self.n + self.m}")

    @property
    def wishart_dof(self) -> int:
        return self.n + self.m if self.dof is None else self.dof

    def digest(self, experiment: str) -> str:
        payload = json.dumps({"experiment": experiment, **asdict(self)}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class CurveRow:
    total_cardinality: int
    method: str
    mode: str
    mean_rho: float
    std_rho: float
    trials: int


@dataclass
class CurveTable:
    rows: list[CurveRow]
    notes: dict[str, str] = field(default_factory=dict)

    def curve(self, method: str, mode: str) -> dict[int, CurveRow]:
        return {
            r.total_cardinality: r for r in self.rows if r.method == method and r.mode == mode
        }


def sample_gaussian(cov: CovarianceTriple, N: int, rng: np.random.Generator) -> DataSet:
    """N zero-mean Gaussian draws of (x, y) from ``cov``.

    The joint matrix is factored through its eigendecomposition with
    negative round-off eigenvalues floored at zero.
    """
    vals, vecs = np.linalg.eigh(cov.joint())
    factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
    Z = rng.standard_normal((N, cov.n + cov.m)) @ factor.T
    return DataSet(Z[:, : cov.n], Z[:, cov.n :])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for one trial, independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _mode_path(
    cov: CovarianceTriple, mode: str, budget: int
) -> Iterator[tuple[int, CcaSolution]]:
    """(total cardinality, solution) pairs covering 2..n+m for one mode."""
    if mode == "oracle":
        for p in oracle_curve(cov, cov.n + cov.m, budget):
            yield p.k_a + p.k_b, p.solution
        return
    if mode == "backward":
        entries = iter_backward(cov, GreedyConfig(1, 1, EXACT, BACKWARD))
    else:
        m = APPROXIMATE if mode == "forward-approx" else EXACT
        entries = iter_forward(cov, GreedyConfig(cov.n, cov.m, m, FORWARD))
    for e in entries:
        yield e.pattern.cardinality, e.solution


def _run_trials(fn, trials: int, threads: int) -> list:
    if threads <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _aggregate(
    per_trial: list[dict[tuple[str, str], dict[int, float]]],
    keys: list[tuple[str, str]],
    cardinalities: range,
) -> list[CurveRow]:
    rows = []
    for card in cardinalities:
        for method, mode in keys:
            vals = np.array(
                [t[(method, mode)][card] for t in per_trial if card in t[(method, mode)]]
            )
            if vals.size == 0:
                continue
            std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            rows.append(CurveRow(card, method, mode, float(np.mean(vals)), std, int(vals.size)))
    return rows


def sparsity_tradeoff_experiment(config: ExperimentConfig, threads: int = 1) -> CurveTable:
    """Average rho per total cardinality over random Wishart instances.

    Trial ``t`` uses the Wishart draw seeded with ``config.seed + t``.  Any
    failure aborts the whole experiment.
    """
    dim = config.n + config.m
    keys = [(meth, mode) for meth in config.methods for mode in config.modes]

    def one(trial):
        cov = wishart_sample(config.seed + trial, dim, config.wishart_dof, config.n)
        out = {}
        try:
            for meth, mode in keys:
                out[(meth, mode)] = {
                    card: sol.rho
                    for card, sol in _mode_path(METHODS[meth](cov), mode, config.budget)
                }
        except SparseCCAError as exc:
            raise TrialError(trial, exc) from exc
        return out

    per_trial = _run_trials(one, config.trials, threads)
    return CurveTable(_aggregate(per_trial, keys, range(2, dim + 1)))


def large_scale_path(config: ExperimentConfig) -> CurveTable:
    """Forward-approx path on one instance, as a fraction of the full rho."""
    dim = config.n + config.m
    cov = wishart_sample(config.seed, dim, config.wishart_dof, config.n)
    entries = list(iter_forward(cov, GreedyConfig(config.n, config.m, APPROXIMATE)))
    rho_full = entries[-1].rho
    rows = [
        CurveRow(e.pattern.cardinality, "CCA", "forward-approx", e.rho / rho_full, 0.0, 1)
        for e in entries
    ]
    half = max(dim // 2, 2)
    notes = {
        "rho_full": repr(rho_full),
        "half_cardinality": str(half),
        "half_cardinality_ratio": repr(entries[half - 2].rho / rho_full),
    }
    return CurveTable(rows, notes)


def regularization_experiment(config: ExperimentConfig, threads: int = 1) -> CurveTable:
    """Mean true correlation of weights estimated from N samples.

    One true triple is drawn from ``config.seed`` with ``2 * (n + m)``
    degrees of freedom unless ``config.dof`` is set; each trial samples N
    zero-mean Gaussian observations from it, estimates the (uncentered)
    sample triple, applies each method's marginal transform, runs the
    requested greedy modes, and scores every path point against the true
    triple.  A solver failure truncates that trial's path; the lost
    cardinalities are counted in ``notes``.
    """
    if config.N < 2:
        raise InputError("regularization study needs N >= 2 samples")
    dim = config.n + config.m
    # at dof = dim the true correlation is close to 1 and sample CCA
    # barely overfits, so the curve has no interior peak
    dof = 2 * dim if config.dof is None else config.dof
    true_cov = wishart_sample(config.seed, dim, dof, config.n)
    keys = [(meth, mode) for meth in config.methods for mode in config.modes]

    def one(trial):
        data = sample_gaussian(true_cov, config.N, trial_rng(config.seed, trial))
        est = estimate_covariance(data, center=False)
        out = {}
        for meth, mode in keys:
            scores = {}
            try:
                for card, sol in _mode_path(METHODS[meth](est), mode, config.budget):
                    scores[card] = true_correlation(true_cov, sol)
            except SolverError:
                pass
            out[(meth, mode)] = scores
        return out

    per_trial = _run_trials(one, config.trials, threads)
    rows = _aggregate(per_trial, keys, range(2, dim + 1))
    failures = {
        f"{meth}/{mode}": sum(
            dim - 1 - len(t[(meth, mode)]) for t in per_trial
        )
        for meth, mode in keys
    }
    notes = {f"failed_points[{k}]": str(v) for k, v in failures.items()}
    return CurveTable(rows, notes)
