#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
命令行入口

子命令：
    solve        求解补偿电压（CSV + JSON）
    profile      求解后沿阱轴采样垂直场
    motion       逐离子运动链（位移、微运动幅度、调制指数、Rabi 比）
    sweep        条件数扫描（ratio= / n=）或 q 参数扫描（q=）
    equilibrium  离子串精确平衡位置

退出码：0 成功，2 输入错误，3 数值失败

示例：
    python cli.py solve --scenario config/scenarios/reference_3ions.env --target 2 --out out/solve.csv
    python cli.py sweep --scenario config/scenarios/reference_3ions.env --sweep n=3..51:2 --out out/sweep.csv
    python cli.py equilibrium --n 51 --out out/eq51.csv
    python cli.py equilibrium --scenario config/scenarios/ions10.env --out out/eq10.csv
"""

import argparse
import sys
from typing import List, Optional

import numpy as np

import settings
from log_utils import log_message, setup_logging
from scenario_model import Scenario, load_scenario_file, with_overrides
from services.addressing import (
    VoltageSolution, conditioning_sweep, parse_sweep_spec, solve_all_targets, solve_target,
)
from services.equilibrium import compare_exact_positions, equilibrium_positions, spacing_deviation
from services.exceptions import DomainError, NumericalFailureError, ScenarioConfigError
from services.fields import perpendicular_field_profile
from services.micromotion import motion_report, q_sweep
from services.reports import RunReport, json_path_for, write_csv, write_report

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3

DEFAULT_SAMPLES = 2000


def _load(args) -> Scenario:
    scenario = load_scenario_file(args.scenario)
    target = getattr(args, 'target', None)
    if target and target.strip().lower() != 'all':
        scenario = with_overrides(scenario, target=target)
    return scenario


def _print_solution(solution: VoltageSolution):
    print(f"峰值电压: {solution.peak_abs_voltage:.6g} V (|U/V| 最大 {solution.peak_scaled_voltage:.6g})")
    print(f"条件数估计: {solution.diagnostics.condition_estimate:.6g}")


def cmd_solve(args) -> int:
    scenario = _load(args)
    report = RunReport.for_scenario('solve', scenario)

    if args.target and args.target.strip().lower() == 'all':
        table = solve_all_targets(scenario)
        write_csv(table, args.out)
        report.outputs['all_targets'] = table.to_dict(orient='list')
        write_report(report, json_path_for(args.out))
        log_message(f"全部目标求解完成，写入 {args.out}", "SUCCESS")
        return EXIT_OK

    solution = solve_target(scenario)
    write_csv(solution.to_frame(), args.out)
    report.outputs['solution'] = solution.to_dict()
    report.diagnostics = solution.diagnostics.to_dict()
    write_report(report, json_path_for(args.out))
    _print_solution(solution)
    log_message(f"求解完成，写入 {args.out}", "SUCCESS")
    return EXIT_OK


def cmd_profile(args) -> int:
    scenario = _load(args)
    geometry = scenario.geometry
    span = args.span * 1e-6 if args.span is not None else (geometry.n_ions + 1) * geometry.d
    if not span > 0:
        raise DomainError(f"采样宽度必须为正数，实际 {args.span}", value=args.span)

    solution = solve_target(scenario)
    profile = perpendicular_field_profile(
        geometry, solution.voltages,
        geometry.center - span / 2.0, geometry.center + span / 2.0,
        args.samples,
    )
    write_csv(profile.to_frame(), args.out)

    report = RunReport.for_scenario('profile', scenario)
    report.outputs['voltages_V'] = solution.voltages
    report.outputs['ion_positions_um'] = geometry.ion_positions() * 1e6
    report.outputs['max_abs_e_perp_V_per_m'] = float(np.max(np.abs(profile.e_perp)))
    report.diagnostics = solution.diagnostics.to_dict()
    write_report(report, json_path_for(args.out))
    _print_solution(solution)
    log_message(f"场分布写入 {args.out}（{args.samples} 点）", "SUCCESS")
    return EXIT_OK


def cmd_motion(args) -> int:
    scenario = _load(args)
    solution = solve_target(scenario)
    motion = motion_report(scenario, solution)
    write_csv(motion.to_frame(), args.out)

    report = RunReport.for_scenario('motion', scenario)
    report.outputs['solution'] = solution.to_dict()
    report.outputs['motion'] = motion.to_dict()
    report.diagnostics = solution.diagnostics.to_dict()
    write_report(report, json_path_for(args.out))

    peak = int(np.argmax(np.abs(motion.displacement_y)))
    print(f"q = {motion.q:.6g}")
    print(f"离子 {peak + 1}: y = {motion.displacement_y[peak] * 1e9:.6g} nm, "
          f"kappa = {motion.kappa[peak]:.6g}, J1(kappa) = {motion.rabi_ratio[peak]:.6g}")
    log_message(f"运动报告写入 {args.out}", "SUCCESS")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load(args)
    kind, values = parse_sweep_spec(args.sweep)
    workers = args.workers or settings.SWEEP_WORKERS

    if kind == 'q':
        table = q_sweep(scenario, values)
    elif kind == 'ratio':
        table = conditioning_sweep(scenario, ratios=values, workers=workers)
    else:
        table = conditioning_sweep(scenario, ion_counts=values, workers=workers)

    write_csv(table, args.out)
    report = RunReport.for_scenario('sweep', scenario)
    report.outputs['sweep'] = args.sweep
    report.outputs['table'] = table.to_dict(orient='list')
    write_report(report, json_path_for(args.out))

    if 'error' in table.columns:
        failed = int((table['error'] != '').sum())
        if failed:
            log_message(f"扫描中 {failed} 个点失败，详见 error 列", "WARNING")
    log_message(f"扫描完成（{len(table)} 行），写入 {args.out}", "SUCCESS")
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    scenario = load_scenario_file(args.scenario) if args.scenario else None
    n = args.n
    if n is None:
        if scenario is None:
            raise ScenarioConfigError("需要 --n 或 --scenario", key='n', value=None)
        n = scenario.geometry.n_ions

    string = equilibrium_positions(n)
    comparison = compare_exact_positions(scenario) if scenario is not None else None
    write_csv(string.to_frame(), args.out)

    report = RunReport.for_scenario('equilibrium', scenario) if scenario else RunReport(command='equilibrium')
    report.outputs['n'] = string.n
    report.outputs['scaled_positions'] = string.scaled_positions
    report.diagnostics = {'gradient_norm': string.gradient_norm, 'iterations': string.iterations}
    if string.n >= 3:
        spacing = spacing_deviation(string)
        report.outputs['spacing'] = spacing.to_dict()
        print(f"间距最大偏差: {spacing.max_deviation:.6g}")
    if comparison is not None:
        report.outputs['exact_positions'] = comparison
        print(f"精确位置与等间距的峰值电压相对差: {comparison['relative_difference']:.6g}")
    write_report(report, json_path_for(args.out))
    log_message(f"平衡位置写入 {args.out}", "SUCCESS")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='cli.py', description='微运动寻址补偿电压求解器')
    parser.add_argument('--version', action='version', version=f'{settings.TOOL_NAME} {settings.VERSION}')
    parser.add_argument('--quiet', action='store_true', help='不写日志文件')
    subparsers = parser.add_subparsers(dest='command', required=True)

    def scenario_command(name, help_text, handler):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('--scenario', required=True, help='场景配置文件路径')
        sub.add_argument('--target', help='覆盖配置中的目标，例如 2、1,3、1:1,2:2')
        sub.add_argument('--out', required=True, help='CSV 输出路径（同名 .json 为报告）')
        sub.set_defaults(handler=handler)
        return sub

    scenario_command('solve', '求解补偿电压（--target all 输出全部单离子解）', cmd_solve)

    profile = scenario_command('profile', '垂直场沿阱轴分布', cmd_profile)
    profile.add_argument('--span', type=float, help='采样总宽度 (µm)，以串中心为中心')
    profile.add_argument('--samples', type=int, default=DEFAULT_SAMPLES, help='采样点数')

    scenario_command('motion', '逐离子运动链', cmd_motion)

    sweep = scenario_command('sweep', '参数扫描', cmd_sweep)
    sweep.add_argument('--sweep', required=True, help='ratio=2,5,10 | n=3..51[:step] | q=0.1,0.6')
    sweep.add_argument('--workers', type=int, help='并发计算的行数')

    equilibrium = subparsers.add_parser('equilibrium', help='离子串平衡位置')
    equilibrium.add_argument('--n', type=int, help='离子数 (1..200)；给出 --scenario 时默认取其离子数')
    equilibrium.add_argument('--scenario', help='可选场景文件：额外对比精确位置与等间距两种解')
    equilibrium.add_argument('--out', required=True, help='CSV 输出路径')
    equilibrium.set_defaults(handler=cmd_equilibrium)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 的用法错误为 2，--version / --help 为 0
        return int(e.code or 0)

    setup_logging(log_to_file=False if args.quiet else None)

    try:
        return args.handler(args)
    except (ScenarioConfigError, DomainError) as e:
        log_message(f"输入错误: {e}", "INFO")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NumericalFailureError as e:
        log_message(f"数值失败: {e}", "INFO")
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE
    except OSError as e:
        # 输出路径不可写（目录、无权限等）
        log_message(f"输出失败: {e}", "INFO")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
