# -*- coding: utf-8 -*-
"""
路由模块 - 寻址求解API路由
"""
from .addressing_api import addressing_bp

__all__ = ['addressing_bp']
