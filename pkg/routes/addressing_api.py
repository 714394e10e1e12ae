# -*- coding: utf-8 -*-
"""
寻址求解 API 路由

API列表：
- POST /api/solve            求解补偿电压
- POST /api/motion           逐离子运动链
- POST /api/profile          垂直场沿阱轴分布
- POST /api/sweep            条件数 / q 参数扫描
- GET  /api/equilibrium/<n>  离子串平衡位置
- POST /api/exact-positions  精确平衡位置与等间距两种解的对比
- GET  /api/health           健康检查

请求体（POST）：
    {
        "scenario": {"mass_amu": 9.012, ..., "target": "2"},   // 或
        "config": "mass_amu=9.012\\n...",
        "target": "1,3"                                          // 可选，覆盖场景目标
    }

返回：
    {"success": true, ...} 或 {"success": false, "error": "..."}
"""

import logging
from functools import wraps

from flask import Blueprint, jsonify, request

import settings
from scenario_model import Scenario, load_scenario, scenario_from_mapping, to_lab_dict, with_overrides
from services.addressing import conditioning_sweep, parse_sweep_spec, solve_all_targets, solve_target
from services.equilibrium import compare_exact_positions, equilibrium_positions, spacing_deviation
from services.exceptions import DomainError, NumericalFailureError, ScenarioConfigError
from services.fields import perpendicular_field_profile
from services.micromotion import motion_report, q_sweep
from services.reports import to_jsonable

logger = logging.getLogger(__name__)

# 创建Blueprint
addressing_bp = Blueprint('addressing', __name__, url_prefix='/api')


def api_errors(view):
    """把求解器异常映射为 JSON 错误响应"""
    @wraps(view)
    def wrapper(*args, **kwargs):
        try:
            return view(*args, **kwargs)
        except (ScenarioConfigError, DomainError) as e:
            logger.info(f"请求参数错误: {e}")
            return jsonify({'success': False, 'error': str(e)}), 400
        except NumericalFailureError as e:
            logger.warning(f"数值失败: {e}")
            return jsonify({'success': False, 'error': str(e), 'step': to_jsonable(e.step)}), 422
    return wrapper


def scenario_from_request() -> Scenario:
    """从请求体解析场景（scenario 键值或 config 文本），并应用可选的 target 覆盖"""
    data = request.get_json(silent=True) or {}
    if isinstance(data.get('scenario'), dict):
        scenario = scenario_from_mapping(data['scenario'])
    elif isinstance(data.get('config'), str):
        scenario = load_scenario(data['config'])
    else:
        raise ScenarioConfigError("请求体需要 scenario 对象或 config 文本", key='scenario', value=None)

    target = data.get('target')
    if target not in (None, '') and str(target).strip().lower() != 'all':
        scenario = with_overrides(scenario, target=str(target))
    return scenario


@addressing_bp.route('/health', methods=['GET'])
def health():
    return jsonify({'success': True, 'tool': settings.TOOL_NAME, 'version': settings.VERSION})


@addressing_bp.route('/solve', methods=['POST'])
@api_errors
def solve():
    """
    求解补偿电压

    target 为 "all" 时返回全部单离子解
    """
    scenario = scenario_from_request()
    data = request.get_json(silent=True) or {}
    if str(data.get('target', '')).strip().lower() == 'all':
        table = solve_all_targets(scenario)
        return jsonify(to_jsonable({'success': True, 'scenario': to_lab_dict(scenario),
                               'allTargets': table.to_dict(orient='list')}))

    solution = solve_target(scenario)
    return jsonify(to_jsonable({'success': True, 'scenario': to_lab_dict(scenario), 'solution': solution.to_dict()}))


@addressing_bp.route('/motion', methods=['POST'])
@api_errors
def motion():
    scenario = scenario_from_request()
    solution = solve_target(scenario)
    report = motion_report(scenario, solution)
    return jsonify(to_jsonable({
        'success': True,
        'scenario': to_lab_dict(scenario),
        'solution': solution.to_dict(),
        'motion': report.to_dict(),
    }))


@addressing_bp.route('/profile', methods=['POST'])
@api_errors
def profile():
    """
    请求体额外字段：
        span_um: 采样总宽度（默认 (N+1) d）
        samples: 采样点数（默认 2000）
    """
    scenario = scenario_from_request()
    data = request.get_json(silent=True) or {}
    geometry = scenario.geometry
    try:
        span = float(data['span_um']) * 1e-6 if data.get('span_um') is not None else (geometry.n_ions + 1) * geometry.d
        samples = int(data.get('samples', 2000))
    except (TypeError, ValueError):
        raise ScenarioConfigError("span_um / samples 不是有效数值", key='span_um', value=data.get('span_um'))

    solution = solve_target(scenario)
    field_profile = perpendicular_field_profile(
        geometry, solution.voltages, geometry.center - span / 2.0, geometry.center + span / 2.0, samples,
    )
    return jsonify(to_jsonable({
        'success': True,
        'z_um': field_profile.z * 1e6,
        'e_perp_V_per_m': field_profile.e_perp,
        'voltages_V': solution.voltages,
    }))


@addressing_bp.route('/sweep', methods=['POST'])
@api_errors
def sweep():
    """请求体额外字段 sweep: "ratio=2,5,10" | "n=3..51:2" | "q=0.1,0.6" """
    scenario = scenario_from_request()
    data = request.get_json(silent=True) or {}
    kind, values = parse_sweep_spec(data.get('sweep', ''))
    if kind == 'q':
        table = q_sweep(scenario, values)
    elif kind == 'ratio':
        table = conditioning_sweep(scenario, ratios=values, workers=settings.SWEEP_WORKERS)
    else:
        table = conditioning_sweep(scenario, ion_counts=values, workers=settings.SWEEP_WORKERS)
    return jsonify(to_jsonable({'success': True, 'table': table.to_dict(orient='records')}))


@addressing_bp.route('/equilibrium/<int:n>', methods=['GET'])
@api_errors
def equilibrium(n):
    string = equilibrium_positions(n)
    result = {
        'success': True,
        'n': string.n,
        'scaledPositions': string.scaled_positions,
        'gradientNorm': string.gradient_norm,
    }
    if string.n >= 3:
        result['spacing'] = spacing_deviation(string).to_dict()
    return jsonify(to_jsonable(result))


@addressing_bp.route('/exact-positions', methods=['POST'])
@api_errors
def exact_positions():
    """等间距近似与精确平衡位置两种解的峰值对比（要求 n_sections = n_ions）"""
    scenario = scenario_from_request()
    return jsonify(to_jsonable({
        'success': True,
        'scenario': to_lab_dict(scenario),
        'comparison': compare_exact_positions(scenario),
    }))
