import numpy as np
import pytest
from hypothesis import given, strategies as st

from volgrow import systems
from volgrow.errors import ArgumentError, NumericalError

from oracles import circle

coord = st.floats(0.0, 1.0, allow_nan=False, exclude_max=True)
pt2 = st.tuples(coord, coord)
pt3 = st.tuples(coord, coord, coord)

BUILTINS = [systems.cat_map(), systems.skew_product(0.1), systems.perturbed_cat(0.05),
            systems.linear_toral([[1, 1, 0], [1, 2, 1], [0, 1, 2]]), systems.identity_map()]


def test_cat_fixed_point():
    assert systems.evaluate(systems.cat_map(), [0.0, 0.0]).tolist() == [0.0, 0.0]


def test_cat_half_point():
    np.testing.assert_allclose(systems.evaluate(systems.cat_map(), [0.5, 0.5]), [0.5, 0.0])


def test_skew_without_twist_keeps_fibre():
    y = systems.evaluate(systems.skew_product(0.0), [0.25, 0.25, 0.7])
    np.testing.assert_allclose(y, [0.75, 0.5, 0.7])


def test_cat_inverse_examples():
    cat = systems.cat_map()
    np.testing.assert_allclose(systems.evaluate_inverse(cat, [0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_allclose(systems.evaluate_inverse(cat, [0.5, 0.0]), [0.5, 0.5])


def test_skew_inverse_is_product():
    sk = systems.skew_product(0.0)
    y = systems.evaluate_inverse(sk, [0.3, 0.1, 0.6])
    base = np.mod(np.array([[1, -1], [-1, 2]]) @ [0.3, 0.1], 1.0)
    np.testing.assert_allclose(y, [*base, 0.6], atol=1e-15)


def test_jacobian_examples():
    np.testing.assert_array_equal(systems.jacobian(systems.cat_map(), [0.3, 0.9]),
                                  [[2, 1], [1, 1]])
    J = systems.jacobian(systems.skew_product(0.1), [0.25, 0.4, 0.1])
    assert abs(J[2, 0]) < 1e-15
    assert J[0, 2] == J[1, 2] == 0.0
    P = systems.jacobian(systems.perturbed_cat(0.05), [0.7, 0.0])
    np.testing.assert_allclose(P, [[2, 1 + 0.05 * 2 * np.pi], [1, 1]])


def test_torus_distance_examples():
    assert systems.torus_distance([0.1, 0.1], [0.1, 0.1]) == 0.0
    assert systems.torus_distance([0.95, 0.5], [0.05, 0.5]) == pytest.approx(0.1)
    assert systems.torus_distance([0.0, 0.0], [0.5, 0.3]) == 0.5


def test_dimension_mismatch():
    with pytest.raises(ArgumentError):
        systems.evaluate(systems.cat_map(), [0.1, 0.2, 0.3])


def test_wrap_stays_half_open():
    assert systems.wrap(np.array([-1e-18, 1.0, 2.5])).tolist() == [0.0, 0.0, 0.5]


@pytest.mark.parametrize("matrix,message", [
    ([[2, 0], [0, 1]], "unimodular"),
    ([[1, 2, 3], [4, 5, 6]], "square"),
    ([[1.5, 0], [0, 1]], "integers"),
])
def test_invalid_matrix(matrix, message):
    with pytest.raises(ArgumentError, match=message):
        systems.linear_toral(matrix)


def test_perturbation_bound():
    with pytest.raises(ArgumentError, match="2\\*pi\\*epsilon"):
        systems.perturbed_cat(0.08)


def test_newton_failure_is_numerical_error(monkeypatch):
    monkeypatch.setattr(systems, "NEWTON_MAX_STEPS", 0)
    with pytest.raises(NumericalError):
        systems.evaluate_inverse(systems.perturbed_cat(0.05), [0.3, 0.45])


def test_exact_entropy_metadata():
    assert systems.cat_map().exact_entropy == pytest.approx(0.9624236501192069, abs=1e-15)
    assert systems.identity_map().exact_entropy == 0.0
    assert systems.skew_product(0.1).exact_note


def test_linear_jacobian_constant_bitwise():
    rng = np.random.default_rng(0)
    for system in (systems.cat_map(), BUILTINS[3]):
        J = systems.jacobian(system, rng.random((1000, system.dimension)))
        assert np.all(J == J[0])


@pytest.mark.parametrize("system", BUILTINS, ids=lambda s: s.kind + str(s.dimension))
def test_inverse_round_trip(system):
    x = np.random.default_rng(1).random((1000, system.dimension))
    back = systems.evaluate(system, systems.evaluate_inverse(system, x))
    assert systems.circle_distance(back, x).max() <= 1e-12


@pytest.mark.parametrize("system", BUILTINS, ids=lambda s: s.kind + str(s.dimension))
def test_jacobian_matches_central_differences(system):
    rng = np.random.default_rng(2)
    x = rng.random((100, system.dimension))
    h = 1e-6
    J = systems.jacobian(system, x)
    for j in range(system.dimension):
        e = np.zeros(system.dimension)
        e[j] = h
        # unwrapped difference: lift through the mod 1 reduction
        diff = systems.evaluate(system, x + e) - systems.evaluate(system, x - e)
        diff = (diff + 0.5) % 1.0 - 0.5
        np.testing.assert_allclose(diff / (2 * h), J[:, :, j], atol=1e-6)


@given(pt2, pt2, pt2)
def test_torus_distance_is_metric(a, b, c):
    dab = systems.torus_distance(a, b)
    assert 0.0 <= dab <= 0.5
    assert dab == systems.torus_distance(b, a)
    assert dab <= systems.torus_distance(a, c) + systems.torus_distance(c, b) + 1e-15
    assert dab == pytest.approx(max(circle(a[0], b[0]), circle(a[1], b[1])), abs=1e-15)


@given(pt3)
def test_outputs_stay_in_unit_cube(x):
    for system in (BUILTINS[1],):
        y = systems.evaluate(system, x)
        assert np.all((0.0 <= y) & (y < 1.0))
        z = systems.evaluate_inverse(system, x)
        assert np.all((0.0 <= z) & (z < 1.0))


def test_default_dims():
    assert systems.default_dims(systems.cat_map()) == (1, 1)
    assert systems.default_dims(systems.skew_product(0.1)) == (1, 1, 1)


def test_grid_points_are_midpoints_in_lexicographic_order():
    g = systems.grid_points(2, 2)
    np.testing.assert_array_equal(g, [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]])
