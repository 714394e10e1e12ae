# -*- coding: utf-8 -*-
"""
补偿电压求解

调制指数可写成补偿电压的线性函数

    kappa_i = (k d / V) * sum_j m_ij U_j

于是给定目标 kappa_i = kappa * e_i，缩放电压 U/V 满足

    m . (U/V) = (kappa / (k d)) e

N_s = N_i 时直接 LU 求解；N_s > N_i 时取最小二范数解（电压最小）。
求解后再用正向模型重新计算每个离子的 kappa_i，作为选择性校验。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from scenario_model import Scenario, unit_weights, with_overrides
from services.exceptions import AddressingError, DomainError, NumericalFailureError, ScenarioConfigError
from services.fields import build_distance_factors
from services.numerics import SolveDiagnostics, solve_min_norm, solve_square

logger = logging.getLogger(__name__)

# 正向模型与目标的允许偏差（相对 kappa）
SELECTIVITY_TOLERANCE = 1e-10

SWEEP_COLUMNS = ['param', 'peak_scaled_voltage', 'peak_voltage_V', 'condition_estimate', 'error']


@dataclass(frozen=True)
class VoltageSolution:
    """补偿电压解"""
    scaled_voltages: np.ndarray
    voltages: np.ndarray
    peak_abs_voltage: float
    diagnostics: SolveDiagnostics
    achieved_kappa: np.ndarray
    target_kappa: np.ndarray
    method: str = 'square'

    @property
    def peak_scaled_voltage(self) -> float:
        return float(np.max(np.abs(self.scaled_voltages)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'electrode': np.arange(1, self.voltages.shape[0] + 1),
            'scaled_voltage': self.scaled_voltages,
            'voltage_V': self.voltages,
        })

    def to_dict(self) -> Dict:
        return {
            'scaled_voltages': self.scaled_voltages.tolist(),
            'voltages_V': self.voltages.tolist(),
            'peak_abs_voltage_V': self.peak_abs_voltage,
            'residual': self.diagnostics.residual_inf_norm,
            'condition_estimate': self.diagnostics.condition_estimate,
            'achieved_kappa': self.achieved_kappa.tolist(),
            'method': self.method,
        }


def forward_kappa(scenario: Scenario, scaled_voltages, ion_positions: Optional[np.ndarray] = None) -> np.ndarray:
    """正向模型：kappa_i = k d * sum_j m_ij (U_j / V)"""
    factors = build_distance_factors(scenario.geometry, ion_positions)
    return scenario.laser.k * scenario.geometry.d * (factors.m @ np.asarray(scaled_voltages, dtype=float))


def solve_for_weights(scenario: Scenario, weights, ion_positions: Optional[np.ndarray] = None) -> VoltageSolution:
    """
    按任意权重向量求解

    Args:
        scenario: 场景（使用其中的 kappa、k、几何和 V）
        weights: 长度为 N_i 的权重 e_i
        ion_positions: 可选的实际离子轴向坐标（米），默认等间距
    """
    geometry = scenario.geometry
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if weights.shape[0] != geometry.n_ions:
        raise DomainError(f"权重个数 {weights.shape[0]} 与离子数 {geometry.n_ions} 不一致", value=weights.shape[0])
    if not np.all(np.isfinite(weights)):
        raise DomainError("权重含有非有限值")

    kappa = scenario.target.kappa
    k = scenario.laser.k
    factors = build_distance_factors(geometry, ion_positions)
    rhs = (kappa / (k * geometry.d)) * weights

    if geometry.n_sections == geometry.n_ions:
        scaled, diagnostics = solve_square(factors.m, rhs)
        method = 'square'
    else:
        scaled, diagnostics = solve_min_norm(factors.m, rhs)
        method = 'min_norm'

    target = kappa * weights
    achieved = k * geometry.d * (factors.m @ scaled)
    mismatch = float(np.max(np.abs(achieved - target)))
    tolerance = SELECTIVITY_TOLERANCE * kappa * max(1.0, float(np.max(np.abs(weights))))
    if mismatch > tolerance:
        raise NumericalFailureError(
            f"正向模型 kappa 偏差 {mismatch:.3e} 超过 {tolerance:.3e}（条件数 {diagnostics.condition_estimate:.3e}）",
            step='selectivity',
            detail=diagnostics.condition_estimate,
        )

    voltages = scaled * scenario.drive.amplitude_V
    solution = VoltageSolution(
        scaled_voltages=scaled,
        voltages=voltages,
        peak_abs_voltage=float(np.max(np.abs(voltages))),
        diagnostics=diagnostics,
        achieved_kappa=achieved,
        target_kappa=target,
        method=method,
    )
    logger.info(
        f"求解完成 N_i={geometry.n_ions} N_s={geometry.n_sections} "
        f"峰值电压={solution.peak_abs_voltage:.4g} V 条件数={diagnostics.condition_estimate:.3e}"
    )
    return solution


def solve_addressing(scenario: Scenario) -> VoltageSolution:
    """按场景中的目标求解补偿电压"""
    return solve_for_weights(scenario, scenario.target.weights_array)


def solve_pair(scenario: Scenario, l1: int, l2: int) -> VoltageSolution:
    """同时调制离子 l1 和 l2（编号从1开始），其余离子留在节点线上"""
    if l1 == l2:
        raise ScenarioConfigError("离子对的两个编号必须不同", key='target', value=(l1, l2))
    weights = unit_weights([l1, l2], scenario.geometry.n_ions)
    return solve_for_weights(scenario, weights)


def solve_weighted(scenario: Scenario, weights: Sequence[float]) -> VoltageSolution:
    """按逐离子权重求解：目标 kappa_i = kappa * weights_i"""
    return solve_for_weights(scenario, weights)


def solve_target(scenario: Scenario) -> VoltageSolution:
    """单个离子 / 离子对 / 任意权重分别走对应的求解入口"""
    weights = scenario.target.weights_array
    active = np.flatnonzero(weights)
    if active.size == 1 and weights[active[0]] == 1.0:
        return solve_addressing(scenario)
    if active.size == 2 and np.all(weights[active] == 1.0):
        return solve_pair(scenario, int(active[0]) + 1, int(active[1]) + 1)
    return solve_weighted(scenario, weights)


def solve_all_targets(scenario: Scenario) -> pd.DataFrame:
    """
    依次单独寻址每个离子

    Returns:
        DataFrame，列 electrode, target_1, ..., target_N，第 l 列为寻址离子 l 的 U/V
    """
    n_ions = scenario.geometry.n_ions
    columns = {'electrode': np.arange(1, scenario.geometry.n_sections + 1)}
    for ion in range(1, n_ions + 1):
        solution = solve_for_weights(scenario, unit_weights([ion], n_ions))
        columns[f'target_{ion}'] = solution.scaled_voltages
    return pd.DataFrame(columns)


def center_ion(n_ions: int) -> int:
    """中心离子编号（偶数个离子取中心左侧）"""
    return (n_ions + 1) // 2


def _sweep_row(param, build) -> Dict:
    try:
        scenario = build()
        solution = solve_addressing(scenario)
        return {
            'param': param,
            'peak_scaled_voltage': solution.peak_scaled_voltage,
            'peak_voltage_V': solution.peak_abs_voltage,
            'condition_estimate': solution.diagnostics.condition_estimate,
            'error': '',
        }
    except AddressingError as e:
        logger.warning(f"扫描点 {param} 失败: {e}")
        return {
            'param': param,
            'peak_scaled_voltage': np.nan,
            'peak_voltage_V': np.nan,
            'condition_estimate': np.nan,
            'error': str(e),
        }


def conditioning_sweep(scenario: Scenario, ratios: Optional[Iterable[float]] = None,
                       ion_counts: Optional[Iterable[int]] = None, workers: int = 1) -> pd.DataFrame:
    """
    条件数扫描

    - ratios: r/d 取值；保持 kappa、k、d 不变，只改变 r
    - ion_counts: 离子数 N；N_s - N_i 保持不变，目标改为中心离子

    单行失败只记录在 error 列，不中断扫描。输出行顺序与输入顺序一致。
    """
    if (ratios is None) == (ion_counts is None):
        raise DomainError("ratios 与 ion_counts 必须且只能给出一个")

    d_um = scenario.geometry.d * 1e6
    extra_sections = scenario.geometry.n_sections - scenario.geometry.n_ions
    tasks = []

    if ratios is not None:
        for ratio in ratios:
            tasks.append((float(ratio), lambda ratio=ratio: with_overrides(scenario, r_um=float(ratio) * d_um)))
    else:
        for n in ion_counts:
            n = int(n)
            tasks.append((n, lambda n=n: with_overrides(
                scenario, n_ions=n, n_sections=n + extra_sections, target=str(center_ion(n)),
            )))

    if not tasks:
        raise DomainError("扫描列表为空")

    if workers > 1 and len(tasks) > 1:
        # map 按输入顺序返回结果
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows: List[Dict] = list(executor.map(lambda t: _sweep_row(*t), tasks))
    else:
        rows = [_sweep_row(*t) for t in tasks]

    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def parse_sweep_spec(spec: str) -> Tuple[str, List[float]]:
    """
    解析扫描描述

    ratio=2,5,10 | n=3..51 | n=3..51:2 | n=3,10,51 | q=0.1,0.3,0.6
    """
    kind, sep, body = (spec or '').partition('=')
    kind = kind.strip().lower()
    body = body.strip()
    if not sep or kind not in ('ratio', 'n', 'q') or not body:
        raise ScenarioConfigError("扫描描述应为 ratio=... / n=... / q=...", key='sweep', value=spec)

    try:
        if kind == 'n' and '..' in body:
            span, _, step_text = body.partition(':')
            start_text, _, stop_text = span.partition('..')
            start, stop = int(start_text), int(stop_text)
            step = int(step_text) if step_text else 1
            if step < 1 or stop < start:
                raise ValueError(body)
            values = list(range(start, stop + 1, step))
        elif kind == 'n':
            values = [int(v) for v in body.split(',') if v.strip()]
        else:
            values = [float(v) for v in body.split(',') if v.strip()]
    except ValueError:
        raise ScenarioConfigError("无法解析扫描取值", key='sweep', value=spec)

    if not values:
        raise ScenarioConfigError("扫描取值为空", key='sweep', value=spec)
    if kind != 'n' and not all(np.isfinite(v) and v > 0 for v in values):
        raise ScenarioConfigError("扫描取值必须为正数", key='sweep', value=spec)
    return kind, values
