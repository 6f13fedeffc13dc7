"""Two-sample Kolmogorov-Smirnov test on binned photon spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .spectra import BinnedSpectrum, EmpiricalCDF, check_same_grid, empirical_cdf

DEFAULT_LEVELS = (0.05, 0.01)

# Below this argument the alternating series converges slowly and loses
# digits to cancellation; the theta-function dual converges in a few terms.
_DUAL_FORM_BELOW = 0.3
_SERIES_TOL = 1e-12


@dataclass(frozen=True)
class KsOutcome:
    statistic: float
    n_signal: int
    n_reference: int
    effective_n: float
    p_value: float
    levels: tuple = DEFAULT_LEVELS
    rejections: tuple = field(default=())

    def __post_init__(self):
        if not self.rejections:
            object.__setattr__(
                self, "rejections", tuple(self.p_value < a for a in self.levels)
            )

    @property
    def reject_at_005(self) -> bool:
        return self.p_value < 0.05

    @property
    def reject_at_001(self) -> bool:
        return self.p_value < 0.01

    def as_dict(self):
        return {
            "statistic": self.statistic,
            "n_signal": self.n_signal,
            "n_reference": self.n_reference,
            "effective_n": self.effective_n,
            "p_value": self.p_value,
            "decisions": {f"{a:g}": bool(r) for a, r in zip(self.levels, self.rejections)},
        }


def ks_statistic(f_s: EmpiricalCDF, f_r: EmpiricalCDF) -> float:
    """Largest absolute gap between two binned CDFs on the same grid."""
    check_same_grid(f_s.grid, f_r.grid)
    return float(np.max(np.abs(f_s.values - f_r.values)))


def kolmogorov_sf(x: float) -> float:
    """Survival function of the limiting Kolmogorov distribution.

    Q(x) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2). For small ``x`` the
    equivalent form 1 - sqrt(2 pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))
    is used instead.
    """
    x = float(x)
    if math.isnan(x) or x < 0:
        raise InvalidParameterError(f"kolmogorov_sf needs x >= 0, got {x}")
    if x < 0.05:
        # 1 - Q(x) < 1e-200 here
        return 1.0
    if x < _DUAL_FORM_BELOW:
        c = math.pi**2 / (8.0 * x * x)
        cdf = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * c)
            cdf += term
            if term < _SERIES_TOL * cdf or term == 0.0:
                break
            k += 1
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / x * cdf))

    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += sign * term
        if term < _SERIES_TOL:
            break
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def two_sample_test(
    signal: BinnedSpectrum,
    reference: BinnedSpectrum,
    significance_levels=DEFAULT_LEVELS,
    one_sample: bool = False,
) -> KsOutcome:
    """KS test of ``signal`` against ``reference`` with the asymptotic p-value.

    With ``one_sample=True`` the reference is treated as the exact parent
    distribution and the effective sample size is the signal total alone.
    """
    check_same_grid(signal.grid, reference.grid)
    f_s = empirical_cdf(signal)
    f_r = empirical_cdf(reference)
    d = ks_statistic(f_s, f_r)
    n, m = signal.total, reference.total
    ne = float(n) if one_sample else n * m / (n + m)
    p = kolmogorov_sf(math.sqrt(ne) * d)
    levels = tuple(float(a) for a in significance_levels)
    for a in levels:
        if not 0.0 < a < 1.0:
            raise InvalidParameterError(f"significance level must be in (0, 1), got {a}")
    return KsOutcome(
        statistic=d,
        n_signal=n,
        n_reference=m,
        effective_n=ne,
        p_value=p,
        levels=levels,
    )


def decide(outcome: KsOutcome, significance: float) -> bool:
    """True when the null (no object) is rejected at ``significance``."""
    if not 0.0 < significance < 1.0:
        raise InvalidParameterError(f"significance must be in (0, 1), got {significance}")
    return outcome.p_value < significance
