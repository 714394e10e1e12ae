# -*- coding: utf-8 -*-
"""
求解器异常定义

所有异常都携带结构化属性，CLI 和 HTTP 层据此映射退出码/状态码：
- ScenarioConfigError   -> 退出码 2 / HTTP 400
- DomainError           -> 退出码 2 / HTTP 400
- NumericalFailureError -> 退出码 3 / HTTP 422
"""

from typing import Any, Optional


class AddressingError(Exception):
    """求解器异常基类"""


class ScenarioConfigError(AddressingError):
    """场景配置错误（缺失键、非法取值、不满足约束）"""

    def __init__(self, message: str, key: Optional[str] = None, value: Any = None):
        self.key = key
        self.value = value
        if key is not None:
            message = f"{key}={value!r}: {message}"
        super().__init__(message)


class NumericalFailureError(AddressingError):
    """数值失败：奇异矩阵、秩亏、不收敛、内部一致性校验失败"""

    def __init__(self, message: str, step: Any = None, detail: Optional[float] = None):
        self.step = step
        self.detail = detail
        super().__init__(message)


class DomainError(AddressingError, ValueError):
    """参数超出函数定义域"""

    def __init__(self, message: str, value: Any = None):
        self.value = value
        super().__init__(message)
