from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ghostks.errors import EmptyMeasurementError, GridMismatchError, InvalidParameterError
from ghostks.ks import KsOutcome, decide, kolmogorov_sf, ks_statistic, two_sample_test
from ghostks.simulate import sample_poisson_counts
from ghostks.spectra import (
    BinnedSpectrum,
    WavelengthGrid,
    empirical_cdf,
    make_gaussian_reference,
)


def brute_force_ks(a, b):
    """Exact KS gap from partial sums held as rationals."""
    na, nb = sum(a), sum(b)
    best = Fraction(0)
    sa = sb = 0
    for x, y in zip(a, b):
        sa += x
        sb += y
        best = max(best, abs(Fraction(sa, na) - Fraction(sb, nb)))
    return best


def _spec(counts, grid=None):
    grid = grid or WavelengthGrid(np.arange(len(counts), dtype=float))
    return BinnedSpectrum(grid, counts)


def _stat(a, b, grid=None):
    return ks_statistic(empirical_cdf(_spec(a, grid)), empirical_cdf(_spec(b, grid)))


pair = st.integers(2, 10).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 30), min_size=n, max_size=n).filter(lambda c: sum(c) > 0),
        st.lists(st.integers(0, 30), min_size=n, max_size=n).filter(lambda c: sum(c) > 0),
    )
)


def test_statistic_identical_is_zero():
    assert _stat([3, 5, 2], [3, 5, 2]) == 0.0


def test_statistic_disjoint_is_one():
    assert _stat([7, 0], [0, 7]) == 1.0


def test_statistic_matches_rationals_on_random_spectra():
    rng = np.random.default_rng(20)
    for _ in range(50):
        a = rng.multinomial(50, np.ones(20) / 20)
        b = rng.multinomial(50, np.ones(20) / 20)
        assert round(_stat(a, b), 12) == round(float(brute_force_ks(a, b)), 12)


@given(pair)
def test_statistic_symmetric(ab):
    a, b = ab
    assert _stat(a, b) == _stat(b, a)


@given(pair, st.data())
def test_statistic_ignores_wavelength_values(ab, data):
    a, b = ab
    steps = data.draw(st.lists(st.floats(0.01, 100.0), min_size=len(a), max_size=len(a)))
    g = WavelengthGrid(np.cumsum(steps) + 300.0)
    assert _stat(a, b, g) == _stat(a, b)


def test_statistic_grid_mismatch():
    f1 = empirical_cdf(_spec([1, 2]))
    f2 = empirical_cdf(BinnedSpectrum(WavelengthGrid([0.0, 1.5]), [1, 2]))
    with pytest.raises(GridMismatchError):
        ks_statistic(f1, f2)


# --- Kolmogorov distribution ------------------------------------------------

# 40-digit evaluations of the alternating series with mpmath.nsum
FROZEN_SF = [
    (1.358, 0.050026797334447014226),
    (1.0, 0.2699996716773545212),
    (0.5, 0.96394524366487509439),
    (2.0, 0.00067092525577969534654),
    (0.3, 0.99999069419866543337),
]


@pytest.mark.parametrize("x,expected", FROZEN_SF)
def test_kolmogorov_sf_frozen(x, expected):
    assert kolmogorov_sf(x) == pytest.approx(expected, abs=1e-12)


def test_kolmogorov_sf_examples():
    assert kolmogorov_sf(0.0) == 1.0
    assert kolmogorov_sf(10.0) < 1e-80
    assert abs(kolmogorov_sf(1.358) - 0.05) < 5e-4


def test_kolmogorov_sf_small_argument():
    assert kolmogorov_sf(1e-300) == 1.0
    assert kolmogorov_sf(0.1) == 1.0
    assert 0.99 < kolmogorov_sf(0.29) < 1.0


def test_kolmogorov_sf_continuous_across_branch():
    lo, hi = kolmogorov_sf(0.3 - 1e-12), kolmogorov_sf(0.3)
    assert abs(lo - hi) < 1e-12


def test_kolmogorov_sf_negative():
    with pytest.raises(InvalidParameterError):
        kolmogorov_sf(-0.1)


def test_kolmogorov_sf_monotone():
    x = np.linspace(0.0, 8.0, 4001)
    q = np.array([kolmogorov_sf(v) for v in x])
    assert np.all((q >= 0) & (q <= 1))
    assert np.all(np.diff(q) <= 0)
    # strict where the value is distinguishable from 1 in double precision
    strict = x >= 0.25
    assert np.all(np.diff(q[strict]) < 0)


# --- two-sample test --------------------------------------------------------


def test_two_sample_identical():
    s = _spec([10, 20, 30])
    out = two_sample_test(s, s)
    assert out.statistic == 0.0 and out.p_value == 1.0
    assert not out.reject_at_005 and not out.reject_at_001


def test_two_sample_fields():
    a, b = _spec([30, 10, 0]), _spec([10, 10, 20])
    out = two_sample_test(a, b, (0.05, 0.01, 0.2))
    assert out.n_signal == 40 and out.n_reference == 40
    assert out.effective_n == 20.0
    assert out.statistic == pytest.approx(0.5)
    assert out.p_value == pytest.approx(kolmogorov_sf(np.sqrt(20) * 0.5))
    assert out.rejections == tuple(out.p_value < a for a in (0.05, 0.01, 0.2))


def test_one_sample_mode_uses_signal_total():
    a, b = _spec([30, 10, 0]), _spec([1000, 1000, 2000])
    out = two_sample_test(a, b, one_sample=True)
    assert out.effective_n == 40.0


def test_two_sample_errors():
    with pytest.raises(EmptyMeasurementError):
        two_sample_test(_spec([0, 0]), _spec([1, 1]))
    with pytest.raises(GridMismatchError):
        two_sample_test(_spec([1, 1]), BinnedSpectrum(WavelengthGrid([5.0, 6.0]), [1, 1]))


def test_null_draws_rarely_reject():
    grid = WavelengthGrid.default()
    dens = make_gaussian_reference(grid, 805.0, 4.0)
    ref = sample_poisson_counts(dens, 350_000, seed=1)
    pv = [two_sample_test(sample_poisson_counts(dens, 3000, seed=100 + k), ref).p_value
          for k in range(100)]
    assert np.mean(np.array(pv) < 0.05) <= 0.08


@given(st.integers(1, 10**6), st.integers(1, 10**6), st.floats(0, 1), st.floats(0, 1))
def test_pvalue_nonincreasing_in_statistic(n, m, d1, d2):
    ne = n * m / (n + m)
    lo, hi = sorted((d1, d2))
    assert kolmogorov_sf(np.sqrt(ne) * hi) <= kolmogorov_sf(np.sqrt(ne) * lo)


# --- decision ---------------------------------------------------------------


def _outcome(p):
    return KsOutcome(0.1, 10, 10, 5.0, p)


def test_decide():
    assert decide(_outcome(0.2), 0.05) is False
    assert decide(_outcome(3e-12), 0.01) is True
    assert decide(_outcome(0.05), 0.05) is False


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1])
def test_decide_rejects_bad_level(bad):
    with pytest.raises(InvalidParameterError):
        decide(_outcome(0.5), bad)
