# -*- coding: utf-8 -*-
"""
微运动链

垂直场 E_i -> 赝势位移 y_i -> 微运动幅度 xi_i -> 调制指数 kappa_i -> 边带 Rabi 比 J1(kappa_i)

    y   = 8 Q E / (m q^2 Ω_rf^2)
    xi  = y q / 2 = 2 E r^2 / V
    κ   = k xi          （k 平行于位移方向）
    Ω_m / Ω_0 = J1(κ)

位移与场均带符号，κ 的符号表示推离方向；J1 为奇函数，Rabi 比同号。
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd

from scenario_model import Scenario, q_value, with_overrides
from services.addressing import VoltageSolution
from services.exceptions import DomainError, NumericalFailureError
from services.fields import axial_field_at_ions, perpendicular_field_at_ions
from services.numerics import bessel_j1, bessel_j1_array, bessel_j1_inverse

logger = logging.getLogger(__name__)

# 两种 xi 表达式之间允许的相对偏差
BRANCH_TOLERANCE = 1e-12
# 物理链与线性形式 kappa 之间允许的相对偏差
CHAIN_TOLERANCE = 1e-10

Q_SWEEP_COLUMNS = ['q', 'rf_freq_MHz', 'e_perp_V_per_m', 'y_nm', 'xi_nm']


@dataclass(frozen=True)
class MotionReport:
    """逐离子运动报告"""
    e_perp: np.ndarray
    displacement_y: np.ndarray
    micromotion_amp: np.ndarray
    kappa: np.ndarray
    rabi_ratio: np.ndarray
    q: float
    axial_field: Optional[np.ndarray] = None
    axial_displacement: Optional[np.ndarray] = None

    @property
    def n_ions(self) -> int:
        return self.e_perp.shape[0]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'ion': np.arange(1, self.n_ions + 1),
            'e_perp_V_per_m': self.e_perp,
            'y_nm': self.displacement_y * 1e9,
            'xi_nm': self.micromotion_amp * 1e9,
            'kappa': self.kappa,
            'rabi_ratio': self.rabi_ratio,
        })
        if self.axial_field is not None:
            frame['ez_V_per_m'] = self.axial_field
            frame['z_disp_nm'] = self.axial_displacement * 1e9
        return frame

    def to_dict(self) -> Dict:
        data = {
            'q': self.q,
            'e_perp_V_per_m': self.e_perp.tolist(),
            'y_m': self.displacement_y.tolist(),
            'xi_m': self.micromotion_amp.tolist(),
            'kappa': self.kappa.tolist(),
            'rabi_ratio': self.rabi_ratio.tolist(),
        }
        if self.axial_field is not None:
            data['ez_V_per_m'] = self.axial_field.tolist()
            data['z_disp_m'] = self.axial_displacement.tolist()
        return data


def q_parameter(scenario: Scenario) -> float:
    """Mathieu 参数 q = 2 Q V / (m r^2 Ω_rf^2)"""
    return q_value(scenario.species, scenario.drive, scenario.geometry)


def displacement(scenario: Scenario, e_perp):
    """垂直场引起的离轴位移 y = 8 Q E / (m q^2 Ω_rf^2)"""
    q = q_parameter(scenario)
    species = scenario.species
    return 8.0 * species.charge * np.asarray(e_perp, dtype=float) / (species.mass * q ** 2 * scenario.drive.omega_rf ** 2)


def _check_branches(xi, xi_field):
    scale = np.maximum(np.abs(xi), np.abs(xi_field))
    bad = np.abs(xi - xi_field) > BRANCH_TOLERANCE * scale
    if np.any(bad):
        worst = float(np.max(np.abs(xi - xi_field)[bad] / scale[bad]))
        raise NumericalFailureError(
            f"微运动幅度两种表达式不一致，相对偏差 {worst:.3e}",
            step='micromotion_branches',
            detail=worst,
        )


def micromotion_amplitude(scenario: Scenario, y, e_perp=None):
    """
    微运动幅度 xi = y q / 2

    Args:
        y: 位移（米）
        e_perp: 可选，产生该位移的垂直场；给出时与 xi = 2 E r^2 / V 交叉校验
    """
    q = q_parameter(scenario)
    xi = np.asarray(y, dtype=float) * q / 2.0
    if e_perp is not None:
        xi_field = 2.0 * np.asarray(e_perp, dtype=float) * scenario.geometry.r ** 2 / scenario.drive.amplitude_V
        _check_branches(np.atleast_1d(xi), np.atleast_1d(xi_field))
    return xi


def modulation_index(scenario: Scenario, xi):
    """调制指数 kappa = k xi"""
    return scenario.laser.k * np.asarray(xi, dtype=float)


def rabi_ratio(kappa):
    """第一微运动边带与载波的 Rabi 频率比 J1(kappa)"""
    if np.ndim(kappa) == 0:
        return bessel_j1(kappa)
    return bessel_j1_array(np.asarray(kappa, dtype=float))


def kappa_for_ratio(target_ratio: float) -> float:
    """给定 Rabi 比的最小正调制指数"""
    return bessel_j1_inverse(target_ratio)


def motion_report(scenario: Scenario, solution: VoltageSolution) -> MotionReport:
    """由补偿电压解计算完整的逐离子运动链"""
    geometry = scenario.geometry
    voltages = solution.voltages
    if voltages.shape[0] != geometry.n_sections:
        raise DomainError(f"电压个数 {voltages.shape[0]} 与电极数 {geometry.n_sections} 不一致", value=voltages.shape[0])

    e_perp = perpendicular_field_at_ions(geometry, voltages)
    y = displacement(scenario, e_perp)
    xi = micromotion_amplitude(scenario, y, e_perp=e_perp)
    kappa = modulation_index(scenario, xi)

    # 物理链 (E -> xi -> kappa) 与线性形式 (m . U/V) 必须一致
    if solution.achieved_kappa.shape == kappa.shape:
        scale = max(float(np.max(np.abs(solution.achieved_kappa))), float(np.max(np.abs(kappa))))
        deviation = float(np.max(np.abs(kappa - solution.achieved_kappa)))
        if deviation > CHAIN_TOLERANCE * scale:
            raise NumericalFailureError(
                f"物理链 kappa 与线性形式不一致，偏差 {deviation:.3e}",
                step='chain',
                detail=deviation,
            )

    axial_field = axial_displacement = None
    if scenario.axial_secular_freq is not None:
        axial_field = axial_field_at_ions(geometry, voltages)
        species = scenario.species
        axial_displacement = species.charge * axial_field / (species.mass * scenario.axial_secular_freq ** 2)

    report = MotionReport(
        e_perp=e_perp,
        displacement_y=y,
        micromotion_amp=xi,
        kappa=kappa,
        rabi_ratio=rabi_ratio(kappa),
        q=q_parameter(scenario),
        axial_field=axial_field,
        axial_displacement=axial_displacement,
    )
    peak = int(np.argmax(np.abs(y)))
    logger.info(f"运动链: 离子 {peak + 1} 位移 {y[peak] * 1e9:.4g} nm, kappa={kappa[peak]:.4g}")
    return report


def rf_frequency_for_q(scenario: Scenario, q: float) -> float:
    """保持 V 不变，达到给定 q 所需的 rf 角频率"""
    species = scenario.species
    return math.sqrt(2.0 * species.charge * scenario.drive.amplitude_V / (species.mass * scenario.geometry.r ** 2 * q))


def q_sweep(scenario: Scenario, q_values: Iterable[float]) -> pd.DataFrame:
    """
    固定目标 kappa 与 V，通过调节 Ω_rf 改变 q，记录被寻址离子所需的场和位移

    所需场 E = kappa V / (2 k r^2) 与 q 无关，位移 y = 2 kappa / (k q) 随 q 增大而减小。
    """
    kappa = scenario.target.kappa
    rows = []
    for q in q_values:
        q = float(q)
        if not q > 0:
            raise DomainError(f"q 必须为正数，实际 {q}", value=q)
        omega = rf_frequency_for_q(scenario, q)
        tuned = with_overrides(scenario, rf_freq_MHz=omega / (2.0 * math.pi) / 1e6)
        e_field = kappa * tuned.drive.amplitude_V / (2.0 * tuned.laser.k * tuned.geometry.r ** 2)
        y = float(displacement(tuned, e_field))
        xi = float(micromotion_amplitude(tuned, y, e_perp=e_field))
        rows.append({
            'q': q_parameter(tuned),
            'rf_freq_MHz': omega / (2.0 * math.pi) / 1e6,
            'e_perp_V_per_m': e_field,
            'y_nm': y * 1e9,
            'xi_nm': xi * 1e9,
        })
    return pd.DataFrame(rows, columns=Q_SWEEP_COLUMNS)
