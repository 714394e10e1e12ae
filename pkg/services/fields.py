# -*- coding: utf-8 -*-
"""
分段接地杆的静电模型

每个补偿电极近似为半径 d/2 的导体球，电压 U_j 时在距离 dist 处的场强为
U_j d / (2 dist^2)。离子 i 处的场分解为平行于阱轴的分量和把离子推离
rf 节点线的垂直分量，垂直分量写成 m_ij * U_j d / (2 r^2)。
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from scenario_model import TrapGeometry
from services.exceptions import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistanceFactorMatrix:
    """相对距离因子矩阵 m_ij，大小 n_ions x n_sections"""
    m: np.ndarray
    ratio: float

    @property
    def shape(self) -> Tuple[int, int]:
        return self.m.shape


@dataclass(frozen=True)
class FieldProfile:
    """沿阱轴采样的垂直场分量"""
    z: np.ndarray
    e_perp: np.ndarray
    voltages: np.ndarray

    @property
    def samples(self) -> List[Tuple[float, float]]:
        return list(zip(self.z.tolist(), self.e_perp.tolist()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'z_um': self.z * 1e6, 'e_perp_V_per_m': self.e_perp})


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def _check_voltages(geometry: TrapGeometry, voltages) -> np.ndarray:
    voltages = np.asarray(voltages, dtype=float).reshape(-1)
    if voltages.shape[0] != geometry.n_sections:
        raise DomainError(
            f"电压个数 {voltages.shape[0]} 与电极数 {geometry.n_sections} 不一致",
            value=voltages.shape[0],
        )
    return voltages


def _axial_offsets(geometry: TrapGeometry, ion_positions: Optional[np.ndarray]) -> np.ndarray:
    """离子与电极的轴向距离 z_i - z_j（米）"""
    if ion_positions is None:
        ions = np.arange(1, geometry.n_ions + 1)
        sections = np.arange(1, geometry.n_sections + 1)
        # 用整数差保证矩阵严格 Toeplitz
        return (ions[:, None] - sections[None, :]) * geometry.d
    ion_positions = np.asarray(ion_positions, dtype=float).reshape(-1)
    if ion_positions.shape[0] != geometry.n_ions:
        raise DomainError(
            f"离子位置个数 {ion_positions.shape[0]} 与离子数 {geometry.n_ions} 不一致",
            value=ion_positions.shape[0],
        )
    return ion_positions[:, None] - geometry.electrode_positions()[None, :]


def electrode_field_magnitude(U: float, d: float, dist: float) -> float:
    """单个球形电极在距离 dist 处的场强大小 U d / (2 dist^2)"""
    if not dist > 0:
        raise DomainError(f"距离必须为正数，实际 {dist}", value=dist)
    if not d > 0:
        raise DomainError(f"电极长度必须为正数，实际 {d}", value=d)
    return U * d / (2.0 * dist ** 2)


def build_distance_factors(geometry: TrapGeometry, ion_positions: Optional[np.ndarray] = None) -> DistanceFactorMatrix:
    """
    构造相对距离因子 m_ij = (1 + [(z_i - z_j)/r]^2)^(-3/2)

    Args:
        geometry: 阱几何
        ion_positions: 可选的实际离子轴向坐标（米）；默认离子 i 位于 i*d
    """
    if ion_positions is None:
        ions = np.arange(1, geometry.n_ions + 1)
        sections = np.arange(1, geometry.n_sections + 1)
        scaled = (ions[:, None] - sections[None, :]) * geometry.ratio
    else:
        scaled = _axial_offsets(geometry, ion_positions) / geometry.r
    m = (1.0 + scaled ** 2) ** -1.5
    return DistanceFactorMatrix(m=_readonly(m), ratio=geometry.ratio)


def perpendicular_field_at_ions(geometry: TrapGeometry, voltages, ion_positions: Optional[np.ndarray] = None) -> np.ndarray:
    """各离子处的垂直场 E_i = sum_j m_ij U_j d / (2 r^2)"""
    voltages = _check_voltages(geometry, voltages)
    factors = build_distance_factors(geometry, ion_positions)
    return factors.m @ voltages * (geometry.d / (2.0 * geometry.r ** 2))


def perpendicular_field_profile(geometry: TrapGeometry, voltages, z_min: float, z_max: float, n_samples: int) -> FieldProfile:
    """
    在均匀网格上采样 E_perp(z) = sum_j U_j d r / (2 (r^2 + (z - j d)^2)^(3/2))
    """
    voltages = _check_voltages(geometry, voltages)
    if not (np.isfinite(z_min) and np.isfinite(z_max) and z_min < z_max):
        raise DomainError(f"无效的采样区间 [{z_min}, {z_max}]", value=(z_min, z_max))
    if int(n_samples) != n_samples or n_samples < 2:
        raise DomainError(f"采样点数至少为2，实际 {n_samples}", value=n_samples)

    z = np.linspace(z_min, z_max, int(n_samples))
    offsets = z[:, None] - geometry.electrode_positions()[None, :]
    kernel = geometry.d * geometry.r / (2.0 * (geometry.r ** 2 + offsets ** 2) ** 1.5)
    e_perp = kernel @ voltages
    return FieldProfile(z=_readonly(z), e_perp=_readonly(e_perp), voltages=_readonly(voltages.copy()))


def axial_field_at_ions(geometry: TrapGeometry, voltages, ion_positions: Optional[np.ndarray] = None) -> np.ndarray:
    """
    各离子处的轴向场（带符号）

        E_z,i = sum_j U_j d (z_i - z_j) / (2 (r^2 + (z_i - z_j)^2)^(3/2))

    均匀间距时 z_i - z_j = (i - j) d。正对电极 (i = j) 的贡献为零。
    """
    voltages = _check_voltages(geometry, voltages)
    offsets = _axial_offsets(geometry, ion_positions)
    kernel = geometry.d * offsets / (2.0 * (geometry.r ** 2 + offsets ** 2) ** 1.5)
    return kernel @ voltages
