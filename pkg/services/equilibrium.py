# -*- coding: utf-8 -*-
"""
离子串平衡位置

谐振轴向势阱中 N 个离子的无量纲势能

    V(u) = sum_i u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|

长度单位 l 满足 l^3 = Q^2 / (4 π ε0 m ω_z^2)。有序构型内 Hessian 对角占优且正定，
阻尼 Newton 从单位间距的初值出发即可收敛。

用途：定量检查"等间距"近似在串中心和两端的偏差，并用精确位置重新求解补偿电压作对比。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np
import pandas as pd
from scipy.linalg import solve as dense_solve

from scenario_model import Scenario
from services.addressing import VoltageSolution, solve_addressing, solve_for_weights
from services.exceptions import DomainError, NumericalFailureError

logger = logging.getLogger(__name__)

MAX_IONS = 200
GRADIENT_TOLERANCE = 1e-12
# 梯度到达舍入下限后线搜索无法再下降，低于此值即视为收敛
ACCEPT_TOLERANCE = 1e-10
MAX_ITERATIONS = 200
MIN_STEP = 1e-12


@dataclass(frozen=True)
class EquilibriumString:
    """平衡位置（无量纲，升序）"""
    scaled_positions: np.ndarray
    n: int
    gradient_norm: float = 0.0
    iterations: int = 0

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.scaled_positions)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'ion': np.arange(1, self.n + 1),
            'scaled_position': self.scaled_positions,
        })


@dataclass(frozen=True)
class SpacingReport:
    """相邻间距相对中心间距的偏差"""
    table: pd.DataFrame
    max_deviation: float

    def to_dict(self) -> Dict:
        return {
            'gaps': self.table['gap'].tolist(),
            'normalized_gaps': self.table['normalized_gap'].tolist(),
            'max_deviation': self.max_deviation,
        }


def potential_energy(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    diff = np.abs(u[:, None] - u[None, :])
    upper = diff[np.triu_indices(u.shape[0], k=1)]
    return float(0.5 * np.sum(u ** 2) + np.sum(1.0 / upper))


def potential_gradient(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    delta = u[:, None] - u[None, :]
    dist3 = np.abs(delta) ** 3
    np.fill_diagonal(dist3, np.inf)
    return u - np.sum(delta / dist3, axis=1)


def potential_hessian(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    dist3 = np.abs(u[:, None] - u[None, :]) ** 3
    np.fill_diagonal(dist3, np.inf)
    coupling = 2.0 / dist3
    hessian = -coupling
    hessian[np.diag_indices_from(hessian)] = 1.0 + np.sum(coupling, axis=1)
    return hessian


def central_gap_index(n: int) -> int:
    """中心间距在 gaps 数组中的下标（奇数个离子取中心离子右侧的间距）"""
    return (n - 1) // 2


def _damped_step(u: np.ndarray, step: np.ndarray, energy: float, grad_norm: float):
    """
    阻尼 Newton 步：保持离子顺序，且能量或梯度至少有一项下降

    Returns:
        (u, grad, grad_norm, energy)；步长缩到 MIN_STEP 仍无下降时返回 None
    """
    t = 1.0
    while t >= MIN_STEP:
        candidate = u + t * step
        if np.all(np.diff(candidate) > 0):
            cand_grad = potential_gradient(candidate)
            cand_norm = float(np.max(np.abs(cand_grad)))
            cand_energy = potential_energy(candidate)
            if cand_energy < energy or cand_norm < grad_norm:
                return candidate, cand_grad, cand_norm, cand_energy
        t *= 0.5
    return None


def equilibrium_positions(n: int) -> EquilibriumString:
    """
    计算 n 个离子的平衡位置

    Raises:
        DomainError: n 不在 1..200 内
        NumericalFailureError: 200 次迭代内未收敛
    """
    if int(n) != n or not 1 <= n <= MAX_IONS:
        raise DomainError(f"离子数必须在 1..{MAX_IONS} 之间，实际 {n}", value=n)
    n = int(n)
    if n == 1:
        return EquilibriumString(scaled_positions=np.zeros(1), n=1)

    u = np.arange(n, dtype=float) - 0.5 * (n - 1)
    grad = potential_gradient(u)
    grad_norm = float(np.max(np.abs(grad)))
    energy = potential_energy(u)
    iteration = 0

    while grad_norm >= GRADIENT_TOLERANCE:
        if iteration >= MAX_ITERATIONS:
            raise NumericalFailureError(
                f"平衡位置在 {MAX_ITERATIONS} 次迭代内未收敛，梯度范数 {grad_norm:.3e}",
                step=iteration,
                detail=grad_norm,
            )
        iteration += 1
        step = -dense_solve(potential_hessian(u), grad, assume_a='pos')

        accepted = _damped_step(u, step, energy, grad_norm)
        if accepted is None:
            if grad_norm < ACCEPT_TOLERANCE:
                # 大 N 时梯度的舍入下限高于 GRADIENT_TOLERANCE
                logger.debug(f"n={n} 线搜索停滞于梯度范数 {grad_norm:.3e}，按收敛处理")
                break
            raise NumericalFailureError(
                f"线搜索失败（第 {iteration} 次迭代），梯度范数 {grad_norm:.3e}",
                step=iteration,
                detail=grad_norm,
            )
        u, grad, grad_norm, energy = accepted

    # 对称化，消除舍入造成的微小不对称
    u = 0.5 * (u - u[::-1])
    grad_norm = float(np.max(np.abs(potential_gradient(u))))
    logger.debug(f"平衡位置 n={n} 迭代 {iteration} 次，梯度范数 {grad_norm:.3e}")
    return EquilibriumString(scaled_positions=u, n=n, gradient_norm=grad_norm, iterations=iteration)


def spacing_deviation(n: Union[int, EquilibriumString]) -> SpacingReport:
    """
    相邻间距 / 中心间距，以及与 1 的最大偏差

    Args:
        n: 离子数，或已经算好的 EquilibriumString（避免重复求解）
    """
    string = n if isinstance(n, EquilibriumString) else None
    count = string.n if string is not None else n
    if int(count) != count or count < 3:
        raise DomainError(f"间距分析至少需要3个离子，实际 {count}", value=count)
    if string is None:
        string = equilibrium_positions(count)
    gaps = string.gaps
    normalized = gaps / gaps[central_gap_index(string.n)]
    table = pd.DataFrame({
        'pair': [f"{i}-{i + 1}" for i in range(1, string.n)],
        'gap': gaps,
        'normalized_gap': normalized,
    })
    return SpacingReport(table=table, max_deviation=float(np.max(np.abs(normalized - 1.0))))


def exact_ion_positions(scenario: Scenario) -> np.ndarray:
    """
    精确平衡位置换算到阱坐标（米）

    中心间距缩放为 d，串中心对准 (N+1) d / 2，电极仍位于 j d。
    """
    geometry = scenario.geometry
    string = equilibrium_positions(geometry.n_ions)
    if string.n == 1:
        return np.array([geometry.center])
    scale = geometry.d / string.gaps[central_gap_index(string.n)]
    return geometry.center + string.scaled_positions * scale


def solve_with_exact_positions(scenario: Scenario) -> VoltageSolution:
    """用精确平衡位置重建距离因子矩阵后求解（仅 N_s = N_i）"""
    geometry = scenario.geometry
    if geometry.n_sections != geometry.n_ions:
        raise DomainError(
            f"精确位置求解只支持 N_s = N_i，实际 N_s={geometry.n_sections} N_i={geometry.n_ions}",
            value=geometry.n_sections,
        )
    return solve_for_weights(scenario, scenario.target.weights_array, ion_positions=exact_ion_positions(scenario))


def compare_exact_positions(scenario: Scenario) -> Dict:
    """等间距近似与精确位置两种解的峰值对比"""
    uniform = solve_addressing(scenario)
    exact = solve_with_exact_positions(scenario)
    relative = 0.0
    if uniform.peak_scaled_voltage > 0:
        relative = abs(exact.peak_scaled_voltage - uniform.peak_scaled_voltage) / uniform.peak_scaled_voltage
    return {
        'uniform_peak_scaled_voltage': uniform.peak_scaled_voltage,
        'exact_peak_scaled_voltage': exact.peak_scaled_voltage,
        'relative_difference': relative,
    }
