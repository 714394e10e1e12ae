#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
离子串平衡位置测试
"""

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import numpy as np
import pytest
from scipy.optimize import check_grad, minimize

import settings
from scenario_model import load_scenario_file, with_overrides
from services.addressing import forward_kappa
from services.equilibrium import (
    central_gap_index, compare_exact_positions, equilibrium_positions, exact_ion_positions, potential_energy,
    potential_gradient, potential_hessian, solve_with_exact_positions, spacing_deviation,
)
from services.exceptions import DomainError
from services.fields import build_distance_factors


def test_small_strings():
    assert equilibrium_positions(1).scaled_positions.tolist() == [0.0]

    two = equilibrium_positions(2).scaled_positions
    assert np.allclose(two, [-0.62996, 0.62996], atol=1e-4)
    assert np.allclose(two, [-(0.25 ** (1 / 3)), 0.25 ** (1 / 3)], atol=1e-12)

    three = equilibrium_positions(3).scaled_positions
    assert np.allclose(three, [-1.0772, 0.0, 1.0772], atol=1e-4)
    assert three[1] == 0.0


@pytest.mark.parametrize('n', [4, 10, 51, 100])
def test_converged_and_symmetric(n):
    string = equilibrium_positions(n)
    u = string.scaled_positions
    assert string.n == n
    assert string.gradient_norm < 1e-10
    assert np.max(np.abs(potential_gradient(u))) < 1e-10
    assert np.all(np.diff(u) > 0)
    assert np.array_equal(u, -u[::-1])


def test_every_valid_count_converges():
    """1..200 全部收敛；能量不高于等间距初值"""
    for n in range(1, 201):
        string = equilibrium_positions(n)
        u = string.scaled_positions
        assert string.n == n
        assert string.gradient_norm < 1e-10, n
        assert np.all(np.diff(u) > 0), n
        assert np.allclose(u, -u[::-1], atol=1e-10), n
        if n >= 2:
            uniform = np.arange(n, dtype=float) - 0.5 * (n - 1)
            assert potential_energy(u) <= potential_energy(uniform), n


def test_matches_generic_minimizer():
    n = 6
    reference = minimize(potential_energy, np.linspace(-3, 3, n), jac=potential_gradient, method='BFGS',
                         options={'gtol': 1e-10})
    assert np.allclose(equilibrium_positions(n).scaled_positions, np.sort(reference.x), atol=1e-6)


def test_derivatives_are_consistent():
    u = np.array([-2.1, -0.9, 0.2, 1.3, 2.6])
    assert check_grad(potential_energy, potential_gradient, u) < 1e-5

    hessian = potential_hessian(u)
    assert np.allclose(hessian, hessian.T)
    assert np.all(np.linalg.eigvalsh(hessian) > 0)
    step = 1e-6
    for i in range(u.size):
        shift = np.zeros_like(u)
        shift[i] = step
        column = (potential_gradient(u + shift) - potential_gradient(u - shift)) / (2 * step)
        assert np.allclose(hessian[:, i], column, rtol=1e-5, atol=1e-6)


def test_invalid_counts():
    for bad in [0, -3, 201, 2.5]:
        with pytest.raises(DomainError):
            equilibrium_positions(bad)
    with pytest.raises(DomainError):
        spacing_deviation(2)


def test_spacing_of_long_string():
    """长串中心间距接近均匀，两端间距更大"""
    report = spacing_deviation(51)
    normalized = report.table['normalized_gap'].to_numpy()
    assert len(report.table) == 50
    center = central_gap_index(51)
    assert normalized[center] == 1.0

    central = normalized[center - 5:center + 5]
    central_spread = np.max(np.abs(central - 1.0))
    assert central_spread < 0.1
    assert normalized[0] > 1.2
    assert np.isclose(normalized[0], normalized[-1])
    assert normalized[0] - 1.0 > central_spread
    assert report.max_deviation == pytest.approx(np.max(np.abs(normalized - 1.0)))
    assert set(report.to_dict()) == {'gaps', 'normalized_gaps', 'max_deviation'}

    # 传入已求得的平衡位置时结果相同
    reused = spacing_deviation(equilibrium_positions(51))
    assert reused.max_deviation == report.max_deviation
    assert reused.table.equals(report.table)


def test_exact_positions_in_trap_coordinates():
    scenario = load_scenario_file(settings.SCENARIO_DIR / 'ions10.env')
    geometry = scenario.geometry
    positions = exact_ion_positions(scenario)
    gaps = np.diff(positions)
    assert np.isclose(gaps[central_gap_index(10)], geometry.d, rtol=1e-12)
    assert np.isclose(np.mean(positions), geometry.center, rtol=1e-12)
    assert np.allclose(positions - geometry.center, -(positions - geometry.center)[::-1], atol=1e-18)


def test_solve_with_exact_positions():
    scenario = load_scenario_file(settings.SCENARIO_DIR / 'ions10.env')
    solution = solve_with_exact_positions(scenario)
    positions = exact_ion_positions(scenario)
    m = build_distance_factors(scenario.geometry, ion_positions=positions).m
    kappas = scenario.laser.k * scenario.geometry.d * (m @ solution.scaled_voltages)
    expected = scenario.target.kappa * scenario.target.weights_array
    assert np.allclose(kappas, expected, rtol=0, atol=1e-10 * scenario.target.kappa)
    # 等间距模型下同一组电压不再完全选择性
    uniform_kappas = forward_kappa(scenario, solution.scaled_voltages)
    assert np.max(np.abs(uniform_kappas - expected)) > 1e-6 * scenario.target.kappa

    comparison = compare_exact_positions(scenario)
    assert comparison['uniform_peak_scaled_voltage'] > 0
    assert comparison['exact_peak_scaled_voltage'] == pytest.approx(solution.peak_scaled_voltage)
    assert comparison['relative_difference'] >= 0

    with pytest.raises(DomainError):
        solve_with_exact_positions(with_overrides(scenario, n_sections=12))


def test_to_frame():
    frame = equilibrium_positions(5).to_frame()
    assert list(frame.columns) == ['ion', 'scaled_position']
    assert frame['ion'].tolist() == [1, 2, 3, 4, 5]


if __name__ == '__main__':
    for name, func in list(globals().items()):
        if not (name.startswith('test_') and callable(func)):
            continue
        if name == 'test_converged_and_symmetric':
            for count in [4, 10, 51, 100]:
                func(count)
        else:
            func()
        print(f"✓ {name}")
