"""Repeated-trial experiments, rejection rates and 2-D parameter sweeps.

Every random draw is keyed by a seed derived from the master seed and the
position of the draw in the sweep (cell indices, trial index), so results
do not depend on how cells are scheduled across worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .ks import DEFAULT_LEVELS, two_sample_test
from .simulate import (
    RNG_NAME,
    Scenario,
    derive_seed,
    family_scenario,
    make_rng,
    simulate_reference,
    simulate_signal,
)
from .spectra import BinnedSpectrum, WavelengthGrid, check_same_grid

DEFAULT_TRIALS = 100

# spawn-key prefixes for the substreams of one batch
_REFERENCE_STREAM = 0
_SIGNAL_STREAM = 1
_PER_TRIAL_REFERENCE_STREAM = 2


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Outcome of ``n_trials`` simulated object measurements of one scenario."""

    descriptor: dict
    p_values: np.ndarray
    statistics: np.ndarray
    realized_totals: np.ndarray
    reference_totals: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        n = len(self.p_values)
        if not (len(self.statistics) == n == len(self.realized_totals)):
            raise InvalidParameterError("batch lists must have equal length")
        if n < 1:
            raise InvalidParameterError("a batch needs at least one trial")
        p = np.asarray(self.p_values, dtype=float)
        if np.any(p < 0) or np.any(p > 1):
            raise InvalidParameterError("p-values must lie in [0, 1]")

    @property
    def n_trials(self) -> int:
        return len(self.p_values)

    def __eq__(self, other):
        if not isinstance(other, TrialBatch):
            return NotImplemented
        return (
            self.descriptor == other.descriptor
            and np.array_equal(self.p_values, other.p_values)
            and np.array_equal(self.statistics, other.statistics)
            and np.array_equal(self.realized_totals, other.realized_totals)
        )


@dataclass(frozen=True)
class PValueSummary:
    mean: float
    q25: float
    q75: float
    min: float
    max: float

    def as_tuple(self):
        return (self.mean, self.q25, self.q75, self.min, self.max)


def describe(scenario: Scenario) -> dict:
    d = {
        "scenario": scenario.name,
        "n_signal": scenario.n_signal,
        "n_reference": scenario.n_reference,
        "seed": scenario.seed,
        "rng": RNG_NAME,
    }
    d.update(dict(scenario.params))
    return d


def run_trials(
    scenario: Scenario,
    n_trials: int = DEFAULT_TRIALS,
    resample_reference: bool = False,
    one_sample: bool = False,
) -> TrialBatch:
    """Simulate ``n_trials`` object measurements and KS-test each one.

    By default a single reference is drawn from ``scenario.n_reference``
    resources and shared by all trials, like one long calibration run.
    ``scenario.seed`` is the master seed of the batch.
    """
    if n_trials < 1:
        raise InvalidParameterError("n_trials must be >= 1")
    seed = scenario.seed
    shared_ref = None
    if not resample_reference:
        shared_ref = simulate_reference(scenario, make_rng(seed, _REFERENCE_STREAM))

    p_values = np.empty(n_trials)
    stats = np.empty(n_trials)
    totals = np.empty(n_trials, dtype=np.int64)
    ref_totals = np.empty(n_trials, dtype=np.int64)
    for t in range(n_trials):
        ref = shared_ref
        if ref is None:
            ref = simulate_reference(scenario, make_rng(seed, _PER_TRIAL_REFERENCE_STREAM, t))
        sig = simulate_signal(scenario, make_rng(seed, _SIGNAL_STREAM, t))
        totals[t] = sig.total
        ref_totals[t] = ref.total
        if sig.total == 0:
            # nothing detected: the test cannot reject
            p_values[t], stats[t] = 1.0, 0.0
            continue
        out = two_sample_test(sig, ref, one_sample=one_sample)
        p_values[t], stats[t] = out.p_value, out.statistic
    return TrialBatch(describe(scenario), p_values, stats, totals, ref_totals)


def rejection_rate(batch: TrialBatch, significance: float) -> float:
    return float(np.count_nonzero(np.asarray(batch.p_values) < significance)) / batch.n_trials


def pvalue_stats(batch: TrialBatch) -> PValueSummary:
    """Box statistics of the p-values: mean, quartiles (linear interpolation), extremes."""
    p = np.asarray(batch.p_values, dtype=float)
    q25, q75 = np.percentile(p, [25, 75], method="linear")
    lo, hi = float(p.min()), float(p.max())
    mean = min(hi, max(lo, math.fsum(p) / p.size))
    return PValueSummary(mean, float(q25), float(q75), lo, hi)


# --------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepCell:
    axis1: float
    n_signal: int
    seed: int
    rates: tuple
    pvalues: PValueSummary
    median_statistic: float
    mean_detected: float


@dataclass(frozen=True)
class SweepResult:
    family: str
    axis_name: str
    axis1_values: tuple
    n_signal_values: tuple
    levels: tuple
    n_trials: int
    master_seed: int
    grid: WavelengthGrid
    cells: tuple
    rng: str = RNG_NAME
    n_reference: int | None = None

    def cell(self, i, j) -> SweepCell:
        return self.cells[i * len(self.n_signal_values) + j]

    def rate(self, i, j, level) -> float:
        return self.cell(i, j).rates[self.levels.index(level)]

    def rate_table(self, level) -> np.ndarray:
        """Rejection rates at ``level`` as an (axis1, n_signal) array."""
        k = self.levels.index(level)
        out = np.array([c.rates[k] for c in self.cells])
        return out.reshape(len(self.axis1_values), len(self.n_signal_values))


AXIS_NAMES = {"broad": "alpha", "narrow": "sigma"}


def summarize_cell(batch: TrialBatch, axis1, n_signal, seed, levels) -> SweepCell:
    return SweepCell(
        axis1=float(axis1),
        n_signal=int(n_signal),
        seed=int(seed),
        rates=tuple(rejection_rate(batch, a) for a in levels),
        pvalues=pvalue_stats(batch),
        median_statistic=float(np.median(batch.statistics)),
        mean_detected=float(np.mean(batch.realized_totals)),
    )


def cell_seed(master_seed, i, j) -> int:
    return derive_seed(master_seed, i, j)


def _run_cell(args):
    family, i, j, axis1, n_signal, n_trials, master_seed, levels, grid, n_reference, resample = args
    seed = cell_seed(master_seed, i, j)
    scen = family_scenario(family, axis1, n_signal, seed, grid=grid, n_reference=n_reference)
    batch = run_trials(scen, n_trials, resample_reference=resample)
    return summarize_cell(batch, axis1, n_signal, seed, levels)


def sweep(
    family: str,
    axis1_values,
    n_signal_values,
    n_trials: int = DEFAULT_TRIALS,
    significances=DEFAULT_LEVELS,
    master_seed: int = 0,
    jobs: int = 1,
    grid: WavelengthGrid | None = None,
    n_reference: int | None = None,
    resample_reference: bool = False,
    progress=None,
) -> SweepResult:
    """Evaluate every (axis1, N_T) cell of a scenario family.

    ``grid=None`` uses the family's default wavelength window.

    ``progress(done, total, cell)`` is called from the collecting process in
    cell order.
    """
    axis1_values = tuple(float(a) for a in axis1_values)
    n_signal_values = tuple(int(n) for n in n_signal_values)
    if not axis1_values or not n_signal_values:
        raise InvalidParameterError("sweep axes must be non-empty")
    levels = tuple(float(a) for a in significances)
    for a in levels:
        if not 0.0 < a < 1.0:
            raise InvalidParameterError(f"significance level must be in (0, 1), got {a}")
    # validate every cell before any work starts
    for a in axis1_values:
        for n in n_signal_values:
            family_scenario(family, a, n, 0, grid=grid, n_reference=n_reference)

    tasks = [
        (family, i, j, a, n, n_trials, master_seed, levels, grid, n_reference, resample_reference)
        for i, a in enumerate(axis1_values)
        for j, n in enumerate(n_signal_values)
    ]
    cells = []
    if jobs <= 1:
        results = map(_run_cell, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_run_cell, tasks)
    try:
        for k, c in enumerate(results):
            cells.append(c)
            if progress is not None:
                progress(k + 1, len(tasks), c)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)

    first = family_scenario(family, axis1_values[0], n_signal_values[0], 0, grid=grid,
                            n_reference=n_reference)
    return SweepResult(
        family=family,
        axis_name=AXIS_NAMES.get(family, "axis1"),
        axis1_values=axis1_values,
        n_signal_values=n_signal_values,
        levels=levels,
        n_trials=int(n_trials),
        master_seed=int(master_seed),
        grid=first.grid,
        cells=tuple(cells),
        n_reference=first.n_reference,
    )


# --------------------------------------------------------------------------
# Permutation calibration oracle


def _cdf_gap_numerators(cum_signal, cum_pool, n, m):
    # n*m*|F_s - F_r| in integers, with F_r built from the pool minus the signal
    return np.max(np.abs(cum_signal * (n + m) - cum_pool * n), axis=-1)


def permutation_oracle(
    signal: BinnedSpectrum, reference: BinnedSpectrum, n_permutations: int = 1000, seed=0
) -> float:
    """Permutation p-value of the KS statistic.

    Photons of both spectra are pooled and randomly re-split into groups of
    the original sizes (a multivariate hypergeometric draw over bins). The
    statistic is compared in exact integer arithmetic, so ties count.
    """
    check_same_grid(signal.grid, reference.grid)
    if n_permutations < 100:
        raise InvalidParameterError("n_permutations must be >= 100")
    n, m = signal.total, reference.total
    if n == 0 or m == 0:
        raise InvalidParameterError("permutation oracle needs non-empty spectra")
    pool = signal.counts + reference.counts
    cum_pool = np.cumsum(pool)
    observed = _cdf_gap_numerators(np.cumsum(signal.counts), cum_pool, n, m)
    rng = make_rng(seed)
    draws = rng.multivariate_hypergeometric(pool, n, size=n_permutations)
    permuted = _cdf_gap_numerators(np.cumsum(draws, axis=1), cum_pool, n, m)
    return float(np.count_nonzero(permuted >= observed)) / n_permutations

