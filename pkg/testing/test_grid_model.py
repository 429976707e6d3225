"""
Tests for the grid model: Laplacian, compound plant and parameter validation
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from microgrid.grid_model import (
    GridParams, build_laplacian, build_compound_plant, benchmark_params,
    is_connected, params_from_lists, synchronous_origin,
)
from utils.errors import GridConfigError


def _chain_params():
    coupling = [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    return params_from_lists([1, 1, 1], [1, 1, 1], [0, 0, 0], [1, 1, 1], coupling)


def test_benchmark_laplacian_entries():
    lap = build_laplacian(benchmark_params())
    np.testing.assert_allclose(np.diag(lap), 18.0)
    off = lap[~np.eye(4, dtype=bool)]
    np.testing.assert_allclose(off, -6.0)


def test_disconnected_pair_gives_zero_laplacian():
    params = params_from_lists([1, 1], [1, 1], [0, 0], [1, 1], [[0, 0], [0, 0]])
    np.testing.assert_array_equal(build_laplacian(params), np.zeros((2, 2)))
    assert not is_connected(params.coupling)


def test_chain_laplacian_eigenvalues():
    eig = np.sort(np.linalg.eigvalsh(build_laplacian(_chain_params())))
    np.testing.assert_allclose(eig, [0.0, 1.0, 3.0], atol=1e-12)


def test_random_connected_laplacian_properties():
    rng = np.random.default_rng(3)
    n = 6
    coupling = np.triu(rng.uniform(0.5, 2.0, (n, n)), 1)
    coupling = coupling + coupling.T
    params = params_from_lists(np.ones(n), np.ones(n), np.zeros(n), np.ones(n), coupling)
    lap = build_laplacian(params)
    np.testing.assert_allclose(lap, lap.T)
    np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-12)
    eig = np.linalg.eigvalsh(lap)
    assert eig.min() > -1e-10
    assert np.linalg.matrix_rank(lap) == n - 1


@pytest.mark.parametrize("coupling", [
    [[0, 1], [2, 0]],
    [[0, -1], [-1, 0]],
    [[1, 1], [1, 0]],
])
def test_invalid_coupling_rejected(coupling):
    with pytest.raises(GridConfigError):
        params_from_lists([1, 1], [1, 1], [0, 0], [1, 1], coupling)


def test_nonpositive_constants_rejected():
    with pytest.raises(GridConfigError):
        params_from_lists([0, 1], [1, 1], [0, 0], [1, 1], [[0, 1], [1, 0]])
    with pytest.raises(GridConfigError):
        params_from_lists([1, 1], [1, 1], [0, 0], [1, -1], [[0, 1], [1, 0]])
    with pytest.raises(GridConfigError):
        params_from_lists([1, 1], [1, 1], [-0.1, 0], [1, 1], [[0, 1], [1, 0]])


def test_grid_config_error_is_value_error():
    with pytest.raises(ValueError):
        GridParams(n_nodes=2, inertia=[1, 1, 1], kp=[1, 1], ki=[0, 0], t_li=[1, 1],
                   coupling=[[0, 1], [1, 0]])


def test_compound_plant_benchmark_blocks():
    params = benchmark_params()
    plant = build_compound_plant(params)
    lap = build_laplacian(params)
    n = 4
    np.testing.assert_allclose(plant.a[n, :n], -lap[0] / 5.0)
    assert plant.a[n, n] == pytest.approx(-400.0 / 5.0)
    np.testing.assert_array_equal(plant.e + plant.b, 0.0)
    np.testing.assert_allclose(plant.c_tilde[:, n:2 * n], -np.diag(params.kp))
    np.testing.assert_allclose(plant.c_tilde[:, 2 * n:], np.eye(n))
    np.testing.assert_array_equal(plant.c_tilde[:, :n], 0.0)


def test_benchmark_plant_has_single_zero_mode():
    plant = build_compound_plant(benchmark_params())
    eig = np.linalg.eigvals(plant.a)
    near_zero = np.abs(eig) < 1e-8
    assert near_zero.sum() == 1
    assert np.all(eig[~near_zero].real < 0)


def test_uniform_phase_shift_is_invariant():
    plant = build_compound_plant(benchmark_params())
    rng = np.random.default_rng(0)
    x = rng.normal(size=12)
    shifted = x + synchronous_origin(4, phase=0.7)
    np.testing.assert_allclose((plant.a @ shifted)[4:], (plant.a @ x)[4:], atol=1e-12)


def test_single_node_plant():
    params = benchmark_params(n_nodes=1)
    plant = build_compound_plant(params)
    assert plant.a.shape == (3, 3)
    assert build_laplacian(params)[0, 0] == 0.0
