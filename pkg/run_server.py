#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
服务器启动脚本
支持开发和生产环境
"""

import argparse
import os
import subprocess
import sys
from pathlib import Path

import settings


def run_development(port: int):
    """运行开发服务器"""
    print("启动开发服务器...")
    os.environ['FLASK_DEBUG'] = '1'

    from app import create_app
    create_app().run(
        host='0.0.0.0',
        port=port,
        debug=True,
        threaded=True
    )


def run_production():
    """运行生产服务器（使用Gunicorn）"""
    print("启动生产服务器...")

    # 检查是否安装了Gunicorn
    try:
        import gunicorn  # noqa: F401
    except ImportError:
        print("错误: Gunicorn未安装")
        print("请运行: pip install gunicorn")
        sys.exit(1)

    sys.exit(subprocess.call(['gunicorn', '-c', 'gunicorn_config.py', 'app:create_app()']))


def check_environment() -> bool:
    """检查环境配置"""
    print("检查环境配置...")
    ok = True

    python_version = sys.version_info
    print(f"✓ Python版本: {python_version.major}.{python_version.minor}.{python_version.micro}")
    if python_version < (3, 8):
        print("⚠ 警告: 建议使用Python 3.8或更高版本")

    env_file = settings.BASE_DIR / 'config.env'
    if env_file.exists():
        print("✓ 找到config.env文件")
    else:
        print("⚠ 警告: 未找到config.env文件，使用默认配置")

    log_dir = Path(settings.LOG_DIR)
    log_dir.mkdir(parents=True, exist_ok=True)
    print(f"✓ 日志目录: {log_dir}")

    scenarios = sorted(settings.SCENARIO_DIR.glob('*.env'))
    if scenarios:
        print(f"✓ 场景配置: {len(scenarios)} 个")
    else:
        print(f"⚠ 警告: {settings.SCENARIO_DIR} 下没有场景配置")

    # 逐个加载场景，尽早发现配置错误
    from scenario_model import load_scenario_file
    from services.exceptions import ScenarioConfigError
    for path in scenarios:
        try:
            scenario = load_scenario_file(path)
            print(f"  ✓ {path.name}: N_i={scenario.geometry.n_ions} q={scenario.q:.4g}")
        except ScenarioConfigError as e:
            print(f"  ✗ {path.name}: {e}")
            ok = False

    print("\n环境检查完成！")
    return ok


def main():
    """主函数"""
    parser = argparse.ArgumentParser(description='寻址求解器服务器启动脚本')
    parser.add_argument(
        '--mode',
        choices=['dev', 'prod', 'check'],
        default='dev',
        help='运行模式: dev(开发), prod(生产), check(检查环境)'
    )
    parser.add_argument(
        '--port',
        type=int,
        default=settings.API_PORT,
        help='服务器端口（仅开发模式）'
    )

    args = parser.parse_args()

    # 设置工作目录
    os.chdir(Path(__file__).parent)

    if args.mode == 'check':
        sys.exit(0 if check_environment() else 1)
    elif args.mode == 'dev':
        check_environment()
        run_development(args.port)
    elif args.mode == 'prod':
        check_environment()
        run_production()


if __name__ == '__main__':
    main()
