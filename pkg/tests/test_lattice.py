import itertools

import numpy as np
import pytest

from lbstab.equilibrium import ISOTROPIC_PRESSURE, equilibrium_product
from lbstab.lattice import CS, FlowState, build_lattice, moments


def test_d1_velocities():
    lat = build_lattice(1)
    assert lat.q == 3
    assert lat.velocities.tolist() == [[-1], [0], [1]]


def test_d2_contains_rest_once():
    lat = build_lattice(2)
    assert lat.q == 9
    rest = [tuple(c) for c in lat.velocities].count((0, 0))
    assert rest == 1
    assert lat.velocities[lat.rest_index].tolist() == [0, 0]


def test_d2_order_is_lexicographic():
    lat = build_lattice(2)
    assert [tuple(c) for c in lat.velocities] == list(itertools.product((-1, 0, 1), repeat=2))


@pytest.mark.parametrize("dim", [0, 3])
def test_unsupported_dimension(dim):
    with pytest.raises(ValueError, match="unsupported dimension"):
        build_lattice(dim)


@pytest.mark.parametrize("dim", [1, 2])
def test_set_closed_under_negation(dim):
    lat = build_lattice(dim)
    np.testing.assert_array_equal(lat.velocities[lat.opposite], -lat.velocities)


@pytest.mark.parametrize("dim", [1, 2])
def test_first_and_second_sums(dim):
    lat = build_lattice(dim)
    c = lat.velocities
    assert np.all(c.sum(axis=0) == 0)
    second = c.T @ c
    assert np.all(second == np.diag(np.diag(second)))
    assert len(set(np.diag(second))) == 1


def test_sound_speed():
    assert build_lattice(2).sound_speed == pytest.approx(1 / np.sqrt(3))
    assert CS**2 == pytest.approx(1 / 3)


def test_moments_rest_state():
    rho, j = moments(build_lattice(1), [1 / 6, 2 / 3, 1 / 6])
    assert rho == pytest.approx(1.0)
    assert j == pytest.approx([0.0])


def test_moments_delta():
    rho, j = moments(build_lattice(1), [0, 0, 1])
    assert rho == 1.0 and j.tolist() == [1.0]


def test_moments_of_d2_equilibrium():
    lat = build_lattice(2)
    f = equilibrium_product(lat, ISOTROPIC_PRESSURE, FlowState(2.0, (0.1, -0.2)))
    rho, j = moments(lat, f)
    assert rho == pytest.approx(2.0, abs=1e-14)
    np.testing.assert_allclose(j, [0.2, -0.4], atol=1e-14)


def test_moments_length_mismatch():
    with pytest.raises(ValueError):
        moments(build_lattice(2), np.ones(3))


@pytest.mark.parametrize("rho,u", [(0.0, (0.1,)), (-1.0, (0.0,)), (1.0, (1.5,)), (1.0, (0.2, float("nan")))])
def test_flow_state_rejects(rho, u):
    with pytest.raises(ValueError):
        FlowState(rho, u)
