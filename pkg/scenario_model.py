# -*- coding: utf-8 -*-
"""
场景模型定义

配置文件使用实验室单位（amu、V、MHz、µm、nm），内部全部换算为 SI 单位。
下游模块只接收通过校验的 Scenario 对象。

配置格式（与 config.env 相同的 key=value 文本，# 开头为注释）：

    mass_amu=9.012
    charge_e=1
    rf_amplitude_V=2.5
    rf_freq_MHz=246
    r_um=15
    d_um=3
    n_ions=3
    n_sections=3
    wavelength_nm=313
    kappa=0.2
    target=2
    # 可选
    axial_freq_MHz=5
    label=Be+ 三离子参考场景

target 可写成 "2"、"1,3"（离子编号从1开始）或 "1:1,2:2"（编号:权重）。
可用 rabi_ratio 代替 kappa：取 J1(kappa) = rabi_ratio 的最小正根。
"""

import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from scipy import constants

from services.exceptions import DomainError, ScenarioConfigError
from services.numerics import bessel_j1_inverse

logger = logging.getLogger(__name__)

AMU = constants.physical_constants['atomic mass constant'][0]
ELEMENTARY_CHARGE = constants.e

# 超过稳定区边界（q ≈ 0.908）后赝势近似不再成立
Q_PARAMETER_LIMIT = 0.9

REQUIRED_KEYS = (
    'mass_amu', 'charge_e', 'rf_amplitude_V', 'rf_freq_MHz', 'r_um', 'd_um',
    'n_ions', 'n_sections', 'wavelength_nm', 'target',
)
OPTIONAL_KEYS = ('kappa', 'rabi_ratio', 'axial_freq_MHz', 'label')
KNOWN_KEYS = REQUIRED_KEYS + OPTIONAL_KEYS


def _require_positive(key: str, value: float):
    if not (math.isfinite(value) and value > 0):
        raise ScenarioConfigError("必须为正数", key=key, value=value)


@dataclass(frozen=True)
class IonSpecies:
    """离子种类：质量 (kg)、电荷 (C)"""
    mass: float
    charge: float

    def __post_init__(self):
        _require_positive('species.mass', self.mass)
        _require_positive('species.charge', self.charge)


@dataclass(frozen=True)
class RfDrive:
    """射频驱动：幅度 V (伏)、角频率 Ω_rf (rad/s)"""
    amplitude_V: float
    omega_rf: float

    def __post_init__(self):
        _require_positive('drive.amplitude_V', self.amplitude_V)
        _require_positive('drive.omega_rf', self.omega_rf)


@dataclass(frozen=True)
class TrapGeometry:
    """
    阱几何

    离子 i 与电极 j 的轴向坐标分别为 i*d 和 j*d（均从1开始编号），
    离子 i 正对电极 i。
    """
    r: float
    d: float
    n_sections: int
    n_ions: int

    def __post_init__(self):
        _require_positive('geometry.r', self.r)
        _require_positive('geometry.d', self.d)
        if self.n_ions < 1:
            raise ScenarioConfigError("离子数至少为1", key='n_ions', value=self.n_ions)
        if self.n_sections < self.n_ions:
            raise ScenarioConfigError(
                f"n_sections < n_ions ({self.n_sections} < {self.n_ions})",
                key='n_sections', value=self.n_sections,
            )

    @property
    def ratio(self) -> float:
        """d/r"""
        return self.d / self.r

    def ion_positions(self) -> np.ndarray:
        return self.d * np.arange(1, self.n_ions + 1, dtype=float)

    def electrode_positions(self) -> np.ndarray:
        return self.d * np.arange(1, self.n_sections + 1, dtype=float)

    @property
    def center(self) -> float:
        """离子串中心的轴向坐标"""
        return 0.5 * (self.n_ions + 1) * self.d


@dataclass(frozen=True)
class LaserCoupling:
    """激光波矢（或 Raman 波矢差）大小 k (rad/m)，假定平行于垂直位移方向"""
    k: float

    def __post_init__(self):
        _require_positive('laser.k', self.k)


@dataclass(frozen=True)
class ModulationTarget:
    """调制目标：每个离子的权重 e_i 与全局调制指数 kappa"""
    weights: Tuple[float, ...]
    kappa: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ScenarioConfigError("必须为非负数", key='kappa', value=self.kappa)
        if not all(math.isfinite(w) for w in self.weights):
            raise ScenarioConfigError("权重含有非有限值", key='target', value=self.weights)
        if not any(w != 0 for w in self.weights):
            raise ScenarioConfigError("至少需要一个非零权重", key='target', value=self.weights)

    @property
    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @classmethod
    def single(cls, ion: int, n_ions: int, kappa: float) -> 'ModulationTarget':
        """只调制离子 ion（从1开始）"""
        return cls(weights=unit_weights([ion], n_ions), kappa=kappa)


@dataclass(frozen=True)
class Scenario:
    """完整问题描述"""
    species: IonSpecies
    drive: RfDrive
    geometry: TrapGeometry
    laser: LaserCoupling
    target: ModulationTarget
    axial_secular_freq: Optional[float] = None
    label: str = field(default='', compare=False)

    def __post_init__(self):
        if len(self.target.weights) != self.geometry.n_ions:
            raise ScenarioConfigError(
                f"权重个数 {len(self.target.weights)} 与离子数 {self.geometry.n_ions} 不一致",
                key='target', value=self.target.weights,
            )
        if self.axial_secular_freq is not None:
            _require_positive('axial_secular_freq', self.axial_secular_freq)
        q = self.q
        if q >= Q_PARAMETER_LIMIT:
            raise ScenarioConfigError(
                f"pseudopotential invalid: q={q:.4g} >= {Q_PARAMETER_LIMIT}",
                key='q', value=q,
            )

    @property
    def q(self) -> float:
        return q_value(self.species, self.drive, self.geometry)


def q_value(species: IonSpecies, drive: RfDrive, geometry: TrapGeometry) -> float:
    """q = 2 Q V / (m r^2 Ω_rf^2)"""
    return 2.0 * species.charge * drive.amplitude_V / (species.mass * geometry.r ** 2 * drive.omega_rf ** 2)


def wavevector_from_wavelength(wavelength: float) -> float:
    """波长 (m) -> 波矢大小 2π/λ (rad/m)"""
    wavelength = float(wavelength)
    if not (math.isfinite(wavelength) and wavelength > 0):
        raise DomainError(f"波长必须为正数，实际 {wavelength}", value=wavelength)
    return 2.0 * math.pi / wavelength


def unit_weights(ions, n_ions: int) -> Tuple[float, ...]:
    weights = [0.0] * n_ions
    for ion in ions:
        if not 1 <= ion <= n_ions:
            raise ScenarioConfigError(f"离子编号超出范围 1..{n_ions}", key='target', value=ion)
        weights[ion - 1] = 1.0
    return tuple(weights)


def parse_target(spec: Union[str, int], n_ions: int) -> Tuple[float, ...]:
    """
    解析目标描述

    Args:
        spec: "2" | "1,3" | "1:1,2:2"（编号从1开始）
        n_ions: 离子数

    Returns:
        长度为 n_ions 的权重元组
    """
    text = str(spec).strip()
    if not text:
        raise ScenarioConfigError("目标为空", key='target', value=spec)

    weights = [0.0] * n_ions
    seen = set()
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        index_text, _, weight_text = item.partition(':')
        try:
            index = int(index_text)
            weight = float(weight_text) if weight_text else 1.0
        except ValueError:
            raise ScenarioConfigError(f"无法解析目标项 '{item}'", key='target', value=spec)
        if not 1 <= index <= n_ions:
            raise ScenarioConfigError(f"离子编号 {index} 超出范围 1..{n_ions}", key='target', value=spec)
        if index in seen:
            raise ScenarioConfigError(f"离子编号 {index} 重复", key='target', value=spec)
        if not math.isfinite(weight):
            raise ScenarioConfigError(f"权重非有限值 '{item}'", key='target', value=spec)
        seen.add(index)
        weights[index - 1] = weight

    if not any(w != 0 for w in weights):
        raise ScenarioConfigError("至少需要一个非零权重", key='target', value=spec)
    return tuple(weights)


def format_target(weights) -> str:
    """权重元组 -> "编号:权重" 文本（只输出非零项）"""
    return ','.join(f"{i}:{w!r}" for i, w in enumerate(weights, start=1) if w != 0)


def _parse_float(raw: Mapping[str, Any], key: str) -> float:
    value = raw.get(key)
    if value is None or (isinstance(value, str) and not value.strip()):
        raise ScenarioConfigError("缺少必需的键", key=key, value=value)
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ScenarioConfigError("不是有效数值", key=key, value=value)
    if not math.isfinite(number):
        raise ScenarioConfigError("不是有限数值", key=key, value=value)
    return number


def _parse_positive(raw: Mapping[str, Any], key: str) -> float:
    number = _parse_float(raw, key)
    if number <= 0:
        raise ScenarioConfigError("必须为正数", key=key, value=raw.get(key))
    return number


def _parse_count(raw: Mapping[str, Any], key: str) -> int:
    number = _parse_float(raw, key)
    if number != int(number):
        raise ScenarioConfigError("必须为整数", key=key, value=raw.get(key))
    if number < 1:
        raise ScenarioConfigError("必须为正整数", key=key, value=raw.get(key))
    return int(number)


def _parse_kappa(raw: Mapping[str, Any]) -> float:
    """kappa 直接给出，或由 rabi_ratio 反解 J1(kappa) = rabi_ratio"""
    has_kappa = raw.get('kappa') not in (None, '')
    has_ratio = raw.get('rabi_ratio') not in (None, '')
    if has_kappa == has_ratio:
        raise ScenarioConfigError("kappa 与 rabi_ratio 必须且只能给出一个", key='kappa', value=raw.get('kappa'))
    if has_kappa:
        kappa = _parse_float(raw, 'kappa')
        if kappa < 0:
            raise ScenarioConfigError("必须为非负数", key='kappa', value=raw.get('kappa'))
        return kappa
    ratio = _parse_float(raw, 'rabi_ratio')
    try:
        return bessel_j1_inverse(ratio)
    except DomainError as e:
        raise ScenarioConfigError(str(e), key='rabi_ratio', value=raw.get('rabi_ratio'))


def scenario_from_mapping(raw: Mapping[str, Any]) -> Scenario:
    """
    从键值映射（实验室单位）构造并校验 Scenario

    Args:
        raw: 键名见模块文档；值可以是字符串或数字
    """
    unknown = sorted(set(raw) - set(KNOWN_KEYS))
    if unknown:
        raise ScenarioConfigError("未知的配置键", key=unknown[0], value=raw[unknown[0]])
    for key in REQUIRED_KEYS:
        if raw.get(key) is None:
            raise ScenarioConfigError("缺少必需的键", key=key, value=None)

    mass_amu = _parse_positive(raw, 'mass_amu')
    charge_e = _parse_count(raw, 'charge_e')
    amplitude = _parse_positive(raw, 'rf_amplitude_V')
    rf_freq_mhz = _parse_positive(raw, 'rf_freq_MHz')
    r_um = _parse_positive(raw, 'r_um')
    d_um = _parse_positive(raw, 'd_um')
    n_ions = _parse_count(raw, 'n_ions')
    n_sections = _parse_count(raw, 'n_sections')
    wavelength_nm = _parse_positive(raw, 'wavelength_nm')

    if n_sections < n_ions:
        raise ScenarioConfigError(f"n_sections < n_ions ({n_sections} < {n_ions})", key='n_sections', value=raw.get('n_sections'))

    kappa = _parse_kappa(raw)

    axial = None
    if raw.get('axial_freq_MHz') not in (None, ''):
        axial = 2.0 * math.pi * _parse_positive(raw, 'axial_freq_MHz') * 1e6

    species = IonSpecies(mass=mass_amu * AMU, charge=charge_e * ELEMENTARY_CHARGE)
    drive = RfDrive(amplitude_V=amplitude, omega_rf=2.0 * math.pi * rf_freq_mhz * 1e6)
    geometry = TrapGeometry(r=r_um * 1e-6, d=d_um * 1e-6, n_sections=n_sections, n_ions=n_ions)
    laser = LaserCoupling(k=wavevector_from_wavelength(wavelength_nm * 1e-9))
    target = ModulationTarget(weights=parse_target(raw['target'], n_ions), kappa=kappa)

    scenario = Scenario(
        species=species,
        drive=drive,
        geometry=geometry,
        laser=laser,
        target=target,
        axial_secular_freq=axial,
        label=str(raw.get('label') or ''),
    )
    logger.debug(f"场景加载完成: N_i={n_ions} N_s={n_sections} q={scenario.q:.4g}")
    return scenario


def load_scenario(config_text: str) -> Scenario:
    """解析 key=value 配置文本并返回校验后的 Scenario"""
    raw = dotenv_values(stream=io.StringIO(config_text))
    for key, value in raw.items():
        if value is None:
            raise ScenarioConfigError("缺少 '=' 或取值", key=key, value=None)
    return scenario_from_mapping(raw)


def load_scenario_file(path: Union[str, Path]) -> Scenario:
    """读取场景配置文件"""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ScenarioConfigError(f"无法读取场景文件: {e}", key='scenario', value=str(path))
    return load_scenario(text)


def to_lab_dict(scenario: Scenario) -> Dict[str, Any]:
    """Scenario -> 实验室单位键值（用于回显与重写配置）"""
    lab = {
        'mass_amu': scenario.species.mass / AMU,
        'charge_e': int(round(scenario.species.charge / ELEMENTARY_CHARGE)),
        'rf_amplitude_V': scenario.drive.amplitude_V,
        'rf_freq_MHz': scenario.drive.omega_rf / (2.0 * math.pi) / 1e6,
        'r_um': scenario.geometry.r * 1e6,
        'd_um': scenario.geometry.d * 1e6,
        'n_ions': scenario.geometry.n_ions,
        'n_sections': scenario.geometry.n_sections,
        'wavelength_nm': 2.0 * math.pi / scenario.laser.k * 1e9,
        'kappa': scenario.target.kappa,
        'target': format_target(scenario.target.weights),
    }
    if scenario.axial_secular_freq is not None:
        lab['axial_freq_MHz'] = scenario.axial_secular_freq / (2.0 * math.pi) / 1e6
    if scenario.label:
        lab['label'] = scenario.label
    return lab


def dump_scenario(scenario: Scenario) -> str:
    """Scenario -> 配置文本（load_scenario 的逆操作）"""
    lines = []
    for key, value in to_lab_dict(scenario).items():
        lines.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    return '\n'.join(lines) + '\n'


def with_overrides(scenario: Scenario, **changes) -> Scenario:
    """
    返回修改了部分字段的新场景（实验室单位键名），重新执行全部校验

    例如 with_overrides(s, r_um=30.0) 或 with_overrides(s, n_ions=5, n_sections=5, target='3')

    只换算被修改的字段，其余字段保留原来的 SI 数值（不经过实验室单位往返），
    因此不修改任何字段时得到逐位相同的场景。
    """
    unknown = sorted(set(changes) - set(KNOWN_KEYS))
    if unknown:
        raise ScenarioConfigError("未知的配置键", key=unknown[0], value=changes[unknown[0]])
    if 'kappa' in changes and 'rabi_ratio' in changes:
        raise ScenarioConfigError("kappa 与 rabi_ratio 必须且只能给出一个", key='kappa', value=changes['kappa'])

    species = scenario.species
    if 'mass_amu' in changes:
        species = replace(species, mass=_parse_positive(changes, 'mass_amu') * AMU)
    if 'charge_e' in changes:
        species = replace(species, charge=_parse_count(changes, 'charge_e') * ELEMENTARY_CHARGE)

    drive = scenario.drive
    if 'rf_amplitude_V' in changes:
        drive = replace(drive, amplitude_V=_parse_positive(changes, 'rf_amplitude_V'))
    if 'rf_freq_MHz' in changes:
        drive = replace(drive, omega_rf=2.0 * math.pi * _parse_positive(changes, 'rf_freq_MHz') * 1e6)

    geometry_changes = {}
    if 'r_um' in changes:
        geometry_changes['r'] = _parse_positive(changes, 'r_um') * 1e-6
    if 'd_um' in changes:
        geometry_changes['d'] = _parse_positive(changes, 'd_um') * 1e-6
    if 'n_ions' in changes:
        geometry_changes['n_ions'] = _parse_count(changes, 'n_ions')
    if 'n_sections' in changes:
        geometry_changes['n_sections'] = _parse_count(changes, 'n_sections')
    geometry = replace(scenario.geometry, **geometry_changes) if geometry_changes else scenario.geometry

    laser = scenario.laser
    if 'wavelength_nm' in changes:
        laser = LaserCoupling(k=wavevector_from_wavelength(_parse_positive(changes, 'wavelength_nm') * 1e-9))

    target = scenario.target
    if 'kappa' in changes or 'rabi_ratio' in changes:
        target = replace(target, kappa=_parse_kappa(changes))
    if 'target' in changes:
        target = replace(target, weights=parse_target(changes['target'], geometry.n_ions))
    elif geometry.n_ions != scenario.geometry.n_ions:
        target = replace(target, weights=parse_target(format_target(target.weights), geometry.n_ions))

    axial = scenario.axial_secular_freq
    if 'axial_freq_MHz' in changes:
        axial = None
        if changes['axial_freq_MHz'] not in (None, ''):
            axial = 2.0 * math.pi * _parse_positive(changes, 'axial_freq_MHz') * 1e6

    label = str(changes['label'] or '') if 'label' in changes else scenario.label

    # replace 会重新执行 __post_init__ 中的全部校验
    return replace(
        scenario,
        species=species,
        drive=drive,
        geometry=geometry,
        laser=laser,
        target=target,
        axial_secular_freq=axial,
        label=label,
    )
