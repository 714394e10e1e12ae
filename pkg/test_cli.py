#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行测试：各子命令的输出文件、退出码、输出确定性
"""

import json
import os
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, os.path.dirname(__file__))

import pandas as pd
import pytest

import settings
from cli import EXIT_INPUT_ERROR, EXIT_NUMERICAL_FAILURE, EXIT_OK, main

REFERENCE = str(settings.SCENARIO_DIR / 'reference_3ions.env')
IONS10 = str(settings.SCENARIO_DIR / 'ions10.env')


def _run(*args):
    return main(['--quiet', *args])


def test_solve_writes_csv_and_report():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'solve.csv'
        assert _run('solve', '--scenario', REFERENCE, '--out', str(out)) == EXIT_OK

        frame = pd.read_csv(out)
        assert list(frame.columns) == ['electrode', 'scaled_voltage', 'voltage_V']
        assert frame['scaled_voltage'].tolist() == pytest.approx([-0.139684, 0.266730, -0.139684], rel=1e-3)

        report = json.loads(out.with_suffix('.json').read_text(encoding='utf-8'))
        assert report['command'] == 'solve'
        assert report['tool'] == settings.TOOL_NAME
        assert report['scenario']['n_ions'] == 3
        solution = report['outputs']['solution']
        for key in ['scaled_voltages', 'voltages_V', 'peak_abs_voltage_V', 'residual', 'condition_estimate',
                    'achieved_kappa']:
            assert key in solution
        assert report['diagnostics']['condition_estimate'] >= 1.0


def test_output_is_deterministic():
    with tempfile.TemporaryDirectory() as tmp:
        first, second = Path(tmp) / 'a.csv', Path(tmp) / 'b.csv'
        assert _run('solve', '--scenario', IONS10, '--out', str(first)) == EXIT_OK
        assert _run('solve', '--scenario', IONS10, '--out', str(second)) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        assert first.with_suffix('.json').read_bytes() == second.with_suffix('.json').read_bytes()


def test_target_override_and_all_targets():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'end.csv'
        assert _run('solve', '--scenario', REFERENCE, '--target', '1', '--out', str(out)) == EXIT_OK
        frame = pd.read_csv(out)
        assert frame['scaled_voltage'].tolist() == pytest.approx([0.08240, -0.13968, 0.06576], rel=1e-3)

        out_all = Path(tmp) / 'all.csv'
        assert _run('solve', '--scenario', REFERENCE, '--target', 'all', '--out', str(out_all)) == EXIT_OK
        assert list(pd.read_csv(out_all).columns) == ['electrode', 'target_1', 'target_2', 'target_3']


def test_profile():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'profile.csv'
        assert _run('profile', '--scenario', IONS10, '--samples', '101', '--out', str(out)) == EXIT_OK
        frame = pd.read_csv(out)
        assert list(frame.columns) == ['z_um', 'e_perp_V_per_m']
        assert len(frame) == 101
        # 默认宽度 (N+1) d = 33 µm，以串中心 16.5 µm 为中心
        assert frame['z_um'].iloc[0] == pytest.approx(0.0, abs=1e-9)
        assert frame['z_um'].iloc[-1] == pytest.approx(33.0)

        out_span = Path(tmp) / 'span.csv'
        assert _run('profile', '--scenario', IONS10, '--span', '10', '--samples', '3', '--out', str(out_span)) == EXIT_OK
        assert pd.read_csv(out_span)['z_um'].tolist() == pytest.approx([11.5, 16.5, 21.5])

        assert _run('profile', '--scenario', IONS10, '--samples', '1', '--out', str(out)) == EXIT_INPUT_ERROR
        assert _run('profile', '--scenario', IONS10, '--span', '-5', '--out', str(out)) == EXIT_INPUT_ERROR


def test_motion():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'motion.csv'
        assert _run('motion', '--scenario', REFERENCE, '--out', str(out)) == EXIT_OK
        frame = pd.read_csv(out)
        assert list(frame.columns) == ['ion', 'e_perp_V_per_m', 'y_nm', 'xi_nm', 'kappa', 'rabi_ratio']
        assert frame['kappa'][1] == pytest.approx(0.2, rel=1e-6)
        assert frame['y_nm'][1] == pytest.approx(199.3, rel=0.05)


def test_sweeps():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'sweep.csv'
        assert _run('sweep', '--scenario', REFERENCE, '--sweep', 'n=3..9:2', '--workers', '2', '--out', str(out)) == EXIT_OK
        frame = pd.read_csv(out, keep_default_na=False)
        assert list(frame.columns) == ['param', 'peak_scaled_voltage', 'peak_voltage_V', 'condition_estimate', 'error']
        assert frame['param'].tolist() == [3, 5, 7, 9]
        assert frame['peak_scaled_voltage'].is_monotonic_increasing

        out_ratio = Path(tmp) / 'ratio.csv'
        assert _run('sweep', '--scenario', REFERENCE, '--sweep', 'ratio=2,5,10', '--out', str(out_ratio)) == EXIT_OK
        assert pd.read_csv(out_ratio)['param'].tolist() == [2.0, 5.0, 10.0]

        out_q = Path(tmp) / 'q.csv'
        assert _run('sweep', '--scenario', REFERENCE, '--sweep', 'q=0.1,0.6', '--out', str(out_q)) == EXIT_OK
        assert list(pd.read_csv(out_q).columns) == ['q', 'rf_freq_MHz', 'e_perp_V_per_m', 'y_nm', 'xi_nm']

        assert _run('sweep', '--scenario', REFERENCE, '--sweep', 'bogus', '--out', str(out)) == EXIT_INPUT_ERROR


def test_equilibrium():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'eq.csv'
        assert _run('equilibrium', '--n', '3', '--out', str(out)) == EXIT_OK
        frame = pd.read_csv(out)
        assert frame['scaled_position'].tolist() == pytest.approx([-1.0772, 0.0, 1.0772], abs=1e-4)
        report = json.loads(out.with_suffix('.json').read_text(encoding='utf-8'))
        assert 'spacing' in report['outputs']

        assert _run('equilibrium', '--n', '0', '--out', str(out)) == EXIT_INPUT_ERROR


def test_input_errors():
    with tempfile.TemporaryDirectory() as tmp:
        out = str(Path(tmp) / 'x.csv')
        assert _run('solve', '--scenario', str(Path(tmp) / 'missing.env'), '--out', out) == EXIT_INPUT_ERROR
        assert _run('solve', '--scenario', REFERENCE, '--target', '7', '--out', out) == EXIT_INPUT_ERROR
        assert _run('solve', '--scenario', REFERENCE, '--target', '2,2', '--out', out) == EXIT_INPUT_ERROR

        bad = Path(tmp) / 'bad.env'
        bad.write_text(Path(REFERENCE).read_text(encoding='utf-8').replace('n_sections=3', 'n_sections=2'),
                       encoding='utf-8')
        assert _run('solve', '--scenario', str(bad), '--out', out) == EXIT_INPUT_ERROR
        assert not Path(out).exists()


def test_numerical_failure_exit_code():
    """r 远大于 d 时距离因子全部舍入为1，矩阵奇异"""
    with tempfile.TemporaryDirectory() as tmp:
        singular = Path(tmp) / 'singular.env'
        singular.write_text(Path(REFERENCE).read_text(encoding='utf-8').replace('r_um=15', 'r_um=1e9'),
                            encoding='utf-8')
        out = Path(tmp) / 'x.csv'
        assert _run('solve', '--scenario', str(singular), '--out', str(out)) == EXIT_NUMERICAL_FAILURE
        assert not out.exists()


def test_usage_errors():
    assert main(['--version']) == 0
    assert main([]) == 2
    assert main(['solve', '--scenario', REFERENCE]) == 2


def test_noop_target_override_is_byte_identical():
    """--target 与配置中的目标相同时，输出与不覆盖完全一致"""
    ions51 = str(settings.SCENARIO_DIR / 'ions51.env')
    with tempfile.TemporaryDirectory() as tmp:
        plain, overridden = Path(tmp) / 'plain.csv', Path(tmp) / 'overridden.csv'
        assert _run('solve', '--scenario', ions51, '--out', str(plain)) == EXIT_OK
        assert _run('solve', '--scenario', ions51, '--target', '26', '--out', str(overridden)) == EXIT_OK
        assert plain.read_bytes() == overridden.read_bytes()
        assert plain.with_suffix('.json').read_bytes() == overridden.with_suffix('.json').read_bytes()


def test_equilibrium_long_string():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'eq150.csv'
        assert _run('equilibrium', '--n', '150', '--out', str(out)) == EXIT_OK
        report = json.loads(out.with_suffix('.json').read_text(encoding='utf-8'))
        assert report['diagnostics']['gradient_norm'] < 1e-10
        assert len(pd.read_csv(out)) == 150


def test_equilibrium_with_scenario():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / 'eq10.csv'
        assert _run('equilibrium', '--scenario', IONS10, '--out', str(out)) == EXIT_OK
        assert len(pd.read_csv(out)) == 10
        report = json.loads(out.with_suffix('.json').read_text(encoding='utf-8'))
        assert report['scenario']['n_ions'] == 10
        comparison = report['outputs']['exact_positions']
        assert set(comparison) == {'uniform_peak_scaled_voltage', 'exact_peak_scaled_voltage', 'relative_difference'}
        assert comparison['relative_difference'] >= 0
        assert 'spacing' in report['outputs']

        # 既无 --n 也无 --scenario
        assert _run('equilibrium', '--out', str(out)) == EXIT_INPUT_ERROR


def test_unwritable_output_is_input_error():
    with tempfile.TemporaryDirectory() as tmp:
        # 输出路径是已存在的目录
        assert _run('solve', '--scenario', REFERENCE, '--out', tmp) == EXIT_INPUT_ERROR

        blocker = Path(tmp) / 'file.txt'
        blocker.write_text('x', encoding='utf-8')
        assert _run('solve', '--scenario', REFERENCE, '--out', str(blocker / 'x.csv')) == EXIT_INPUT_ERROR


if __name__ == '__main__':
    for name, func in list(globals().items()):
        if name.startswith('test_') and callable(func):
            func()
            print(f"✓ {name}")
