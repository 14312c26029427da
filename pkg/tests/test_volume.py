import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from volgrow import systems, volume
from volgrow.errors import ArgumentError

from oracles import CAT_ENTROPY, brute_max_over_subsets, brute_max_subspace

spectra = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=4).map(
    lambda v: sorted(v, reverse=True))


def test_max_subspace_examples():
    assert volume.max_subspace_log_det([math.log(3), math.log(0.5)]) == pytest.approx(1.0986, abs=1e-4)
    assert volume.max_subspace_log_det([-0.1, -0.2]) == 0.0
    assert volume.max_subspace_log_det([math.log(2), math.log(2), -5]) == pytest.approx(math.log(4))


def test_unsorted_spectrum_rejected():
    with pytest.raises(ArgumentError):
        volume.max_subspace_log_det([0.1, 0.5])


def test_fixed_dim_examples():
    assert volume.fixed_dim_log_det_max([1.0, -1.0], 1) == 1.0
    assert volume.fixed_dim_log_det_max([1.0, -1.0], 2) == 0.0
    assert volume.fixed_dim_log_det_max([3.0, 2.0, 1.0], 0) == 0.0
    with pytest.raises(ArgumentError):
        volume.fixed_dim_log_det_max([1.0, -1.0], 3)


@given(spectra)
def test_max_subspace_equals_brute_force(spectrum):
    assert volume.max_subspace_log_det(spectrum) == pytest.approx(brute_max_subspace(spectrum),
                                                                 abs=1e-12)
    assert volume.max_subspace_log_det(spectrum) == pytest.approx(
        brute_max_over_subsets(spectrum), abs=1e-12)


def test_max_subspace_exact_on_many_random_spectra():
    rng = np.random.default_rng(8)
    for _ in range(10_000):
        spectrum = sorted(rng.normal(0, 3, size=rng.integers(1, 5)), reverse=True)
        assert volume.max_subspace_log_det(spectrum) == brute_max_subspace(spectrum)


def test_integrate_identity_is_zero():
    s = volume.SamplerSpec("grid", 8)
    assert volume.integrate_growth(systems.identity_map(), 17, s) == 0.0


def test_integrate_cat_ten_steps():
    for s in (volume.SamplerSpec("monte_carlo", 50, 4), volume.SamplerSpec("grid", 5)):
        assert volume.integrate_growth(systems.cat_map(), 10, s) == pytest.approx(
            10 * CAT_ENTROPY, abs=1e-8)


def test_integrate_skew_product_structure():
    s = volume.SamplerSpec("monte_carlo", 200, 1)
    assert volume.integrate_growth(systems.skew_product(0.0), 5, s) == pytest.approx(
        5 * CAT_ENTROPY, abs=1e-8)


def test_zero_samples_rejected():
    with pytest.raises(ArgumentError):
        volume.SamplerSpec("monte_carlo", 0)
    with pytest.raises(ArgumentError):
        volume.SamplerSpec("grid", 1)
    with pytest.raises(ArgumentError):
        volume.log_mean_exp([])


def test_log_mean_exp_does_not_overflow():
    value, err = volume.log_mean_exp([2000.0, 2000.0 + math.log(3)])
    assert value == pytest.approx(2000.0 + math.log(2))
    assert np.isfinite(err)


def test_growth_rate_identity():
    c = volume.growth_rate(systems.identity_map(), [5, 10, 15], volume.SamplerSpec("grid", 4))
    assert c.fitted_rate == pytest.approx(0.0, abs=1e-15)
    assert c.normalized == [0.0, 0.0, 0.0]


def test_growth_rate_cat():
    c = volume.growth_rate(systems.cat_map(), [10, 20, 30, 40, 50],
                           volume.SamplerSpec("monte_carlo", 1000, 0))
    assert c.fitted_rate == pytest.approx(CAT_ENTROPY, abs=1e-6)
    assert c.fit_residual <= 1e-9
    assert c.warnings == []
    assert c.n_values == [10, 20, 30, 40, 50]


def test_growth_rate_needs_three_increasing():
    s = volume.SamplerSpec("grid", 4)
    with pytest.raises(ArgumentError):
        volume.growth_rate(systems.cat_map(), [10, 20], s)
    with pytest.raises(ArgumentError):
        volume.growth_rate(systems.cat_map(), [10, 30, 20], s)


def test_proxy_spread_warns():
    # a shear grows polynomially, so (1/n) log I_n is still drifting at n = 8, 16
    with pytest.warns(RuntimeWarning):
        c = volume.growth_rate(systems.linear_toral([[1, 1], [0, 1]]), [1, 2, 3, 4, 8, 16],
                               volume.SamplerSpec("monte_carlo", 10, 0))
    assert c.warnings


@pytest.mark.parametrize("a,b", [(3, 4), (5, 5), (1, 9)])
def test_subadditive_for_linear(a, b):
    s = volume.SamplerSpec("monte_carlo", 20, 0)
    for matrix in ([[2, 1], [1, 1]], [[1, 1], [0, 1]], [[1, 1, 0], [1, 2, 1], [0, 1, 2]]):
        system = systems.linear_toral(matrix)
        ia, ib, iab = (volume.integrate_growth(system, n, s) for n in (a, b, a + b))
        assert iab <= ia + ib + 1e-9


def test_doubling_sample_count_within_three_standard_errors():
    pc = systems.perturbed_cat(0.05)
    (v1, e1), = volume.log_integrals(pc, [15], volume.SamplerSpec("monte_carlo", 5000, 3))
    (v2, e2), = volume.log_integrals(pc, [15], volume.SamplerSpec("monte_carlo", 10000, 3))
    assert abs(v2 - v1) <= 3 * max(e1, e2)


def test_seed_determinism_bitwise():
    pc = systems.perturbed_cat(0.05)
    s = volume.SamplerSpec("monte_carlo", 500, 11)
    a = volume.growth_rate(pc, [4, 8, 12], s)
    b = volume.growth_rate(pc, [4, 8, 12], s)
    assert a == b
    c = volume.growth_rate(pc, [4, 8, 12], volume.SamplerSpec("monte_carlo", 500, 12))
    assert c.log_integrals != a.log_integrals
