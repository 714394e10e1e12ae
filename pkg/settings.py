# -*- coding: utf-8 -*-
"""
进程级配置

加载顺序：config.env 文件 -> 环境变量（优先级更高）
"""

import os
from pathlib import Path

from dotenv import load_dotenv

TOOL_NAME = 'micromotion-addressing'
VERSION = '1.0.0'

BASE_DIR = Path(__file__).resolve().parent

# override=False：已存在的环境变量不会被 config.env 覆盖
load_dotenv(BASE_DIR / 'config.env', override=False)


def _env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    try:
        return int(value) if value else default
    except ValueError:
        return default


LOG_DIR = os.getenv('LOG_DIR', str(BASE_DIR / 'logs'))
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()
LOG_TO_FILE = _env_bool('LOG_TO_FILE', True)

# 扫描时并发计算的行数（1 = 串行）
SWEEP_WORKERS = max(1, _env_int('SWEEP_WORKERS', 4))

CORS_ORIGINS = [o.strip() for o in os.getenv('CORS_ORIGINS', 'http://localhost:5173').split(',') if o.strip()]
API_PORT = _env_int('API_PORT', 5010)

SCENARIO_DIR = BASE_DIR / 'config' / 'scenarios'
