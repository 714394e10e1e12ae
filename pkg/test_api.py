#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
HTTP API 测试（Flask test_client，不启动服务器）
"""

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

import settings
from app import create_app

REFERENCE = {
    'mass_amu': 9.012,
    'charge_e': 1,
    'rf_amplitude_V': 2.5,
    'rf_freq_MHz': 246,
    'r_um': 15,
    'd_um': 3,
    'n_ions': 3,
    'n_sections': 3,
    'wavelength_nm': 313,
    'kappa': 0.2,
    'target': '2',
}


@pytest.fixture
def client():
    return create_app(testing=True).test_client()


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    data = response.get_json()
    assert data['success'] is True
    assert data['version'] == settings.VERSION


def test_solve_from_mapping(client):
    response = client.post('/api/solve', json={'scenario': REFERENCE})
    assert response.status_code == 200
    data = response.get_json()
    assert data['success'] is True
    assert data['solution']['scaled_voltages'] == pytest.approx([-0.139684, 0.266730, -0.139684], rel=1e-3)
    assert data['scenario']['n_ions'] == 3


def test_solve_from_config_text_with_target_override(client):
    text = (settings.SCENARIO_DIR / 'reference_3ions.env').read_text(encoding='utf-8')
    response = client.post('/api/solve', json={'config': text, 'target': '1'})
    assert response.status_code == 200
    assert response.get_json()['solution']['scaled_voltages'] == pytest.approx([0.08240, -0.13968, 0.06576], rel=1e-3)

    response = client.post('/api/solve', json={'config': text, 'target': 'all'})
    assert response.status_code == 200
    assert set(response.get_json()['allTargets']) == {'electrode', 'target_1', 'target_2', 'target_3'}


def test_motion_and_profile(client):
    response = client.post('/api/motion', json={'scenario': REFERENCE})
    assert response.status_code == 200
    motion = response.get_json()['motion']
    assert motion['kappa'][1] == pytest.approx(0.2, rel=1e-6)

    response = client.post('/api/profile', json={'scenario': REFERENCE, 'samples': 21})
    assert response.status_code == 200
    data = response.get_json()
    assert len(data['z_um']) == 21
    assert data['z_um'][0] == pytest.approx(0.0, abs=1e-9)
    assert data['z_um'][-1] == pytest.approx(12.0)


def test_sweep(client):
    response = client.post('/api/sweep', json={'scenario': REFERENCE, 'sweep': 'ratio=2,5,1.5'})
    assert response.status_code == 200
    rows = response.get_json()['table']
    assert [row['param'] for row in rows] == [2.0, 5.0, 1.5]
    assert rows[0]['error'] == ''
    # 失败行的数值列为 null
    assert rows[2]['peak_scaled_voltage'] is None
    assert 'pseudopotential invalid' in rows[2]['error']


def test_equilibrium(client):
    response = client.get('/api/equilibrium/3')
    assert response.status_code == 200
    data = response.get_json()
    assert data['scaledPositions'] == pytest.approx([-1.0772, 0.0, 1.0772], abs=1e-4)
    assert 'spacing' in data

    assert client.get('/api/equilibrium/0').status_code == 400
    assert client.get('/api/equilibrium/201').status_code == 400
    assert client.get('/api/equilibrium/150').status_code == 200


def test_exact_positions(client):
    response = client.post('/api/exact-positions', json={'scenario': dict(REFERENCE, n_ions=10, n_sections=10,
                                                                          target='5')})
    assert response.status_code == 200
    data = response.get_json()
    assert data['success'] is True
    assert data['scenario']['n_ions'] == 10
    comparison = data['comparison']
    assert comparison['exact_peak_scaled_voltage'] > 0
    assert comparison['relative_difference'] >= 0

    # 精确位置求解要求 n_sections = n_ions
    response = client.post('/api/exact-positions', json={'scenario': dict(REFERENCE, n_sections=5)})
    assert response.status_code == 400


def test_error_status_codes(client):
    response = client.post('/api/solve', json={})
    assert response.status_code == 400
    assert response.get_json()['success'] is False

    response = client.post('/api/solve', json={'scenario': dict(REFERENCE, n_sections=2)})
    assert response.status_code == 400
    assert 'n_sections' in response.get_json()['error']

    response = client.post('/api/solve', json={'scenario': dict(REFERENCE, r_um=1e9)})
    assert response.status_code == 422
    assert response.get_json()['step'] == 2

    response = client.post('/api/profile', json={'scenario': REFERENCE, 'samples': 'many'})
    assert response.status_code == 400

    assert client.get('/api/nothing').status_code == 404
    assert client.get('/api/solve').status_code == 405


if __name__ == '__main__':
    api_client = create_app(testing=True).test_client()
    for name, func in list(globals().items()):
        if name.startswith('test_') and callable(func):
            func(api_client)
            print(f"✓ {name}")
