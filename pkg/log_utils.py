# -*- coding: utf-8 -*-
"""
日志系统

主日志写入 logs/solver.log（自动轮转），控制台只显示重要信息。
"""

import logging
import os
from logging.handlers import RotatingFileHandler

import settings

_initialized = False


# 自定义控制台过滤器：只显示重要信息
class ConsoleFilter(logging.Filter):
    def filter(self, record):
        # 只显示WARNING以上，或者包含✓的成功日志
        if record.levelno >= logging.WARNING:
            return True
        if '✓' in record.getMessage():
            return True
        return False


def setup_logging(log_to_file=None, level=None):
    """
    设置日志系统

    Args:
        log_to_file: 是否写日志文件（默认读取 settings.LOG_TO_FILE）
        level: 日志级别（默认读取 settings.LOG_LEVEL）

    Returns:
        主日志 logger
    """
    global _initialized

    # 挂在包的公共前缀上，services.* 的 logger 都会继承这里的 handler
    main_logger = logging.getLogger('main')
    services_logger = logging.getLogger('services')

    if _initialized:
        return main_logger

    level = getattr(logging, (level or settings.LOG_LEVEL), logging.INFO)
    log_to_file = settings.LOG_TO_FILE if log_to_file is None else log_to_file

    main_formatter = logging.Formatter('[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s')
    handlers = []

    if log_to_file:
        os.makedirs(settings.LOG_DIR, exist_ok=True)
        # 主日志文件：最多保留5个文件，每个10MB
        main_handler = RotatingFileHandler(
            os.path.join(settings.LOG_DIR, 'solver.log'),
            maxBytes=10 * 1024 * 1024,
            backupCount=5,
            encoding='utf-8'
        )
        main_handler.setLevel(level)
        main_handler.setFormatter(main_formatter)
        handlers.append(main_handler)

    # 控制台输出走 stderr，不污染 CLI 的标准输出
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(main_formatter)
    console_handler.addFilter(ConsoleFilter())
    handlers.append(console_handler)

    for lg in (main_logger, services_logger):
        lg.setLevel(level)
        lg.propagate = False
        for handler in handlers:
            lg.addHandler(handler)

    _initialized = True
    return main_logger


def log_message(message, level="INFO"):
    """统一的日志输出函数

    Args:
        message: 日志消息
        level: 日志级别 (INFO, DEBUG, WARNING, ERROR, SUCCESS)
    """
    main_logger = logging.getLogger('main')

    if level == "DEBUG":
        main_logger.debug(message)
    elif level == "INFO":
        main_logger.info(message)
    elif level == "WARNING" or level == "WARN":
        main_logger.warning(message)
    elif level == "ERROR":
        main_logger.error(message)
    elif level == "SUCCESS":
        main_logger.info(f"✓ {message}")
    else:
        main_logger.info(message)
