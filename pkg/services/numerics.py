# -*- coding: utf-8 -*-
"""
数值内核

不含任何物理含义，只提供：
- 带部分主元的 LU 直接求解（方阵）
- 最小二范数解（欠定，行满秩）
- 1-范数条件数估计
- 一阶 Bessel 函数 J1 的幂级数求值及其反函数
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import qr, solve_triangular
from scipy.optimize import bisect

from services.exceptions import DomainError, NumericalFailureError

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps

# 级数只在 |x| <= 12 内保证精度
BESSEL_J1_MAX_ARG = 12.0
# J1 第一个极大值位置与取值
J1_ARGMAX = 1.8412
J1_RATIO_LIMIT = 0.5817


@dataclass(frozen=True)
class SolveDiagnostics:
    """线性求解诊断信息"""
    residual_inf_norm: float
    condition_estimate: float

    def to_dict(self):
        return {
            'residual': self.residual_inf_norm,
            'condition_estimate': self.condition_estimate,
        }


@dataclass(frozen=True)
class LUFactors:
    """PA = LU 分解结果（L 单位下三角与 U 合并存储）"""
    lu: np.ndarray
    perm: np.ndarray

    def solve(self, b: np.ndarray) -> np.ndarray:
        rhs = np.asarray(b, dtype=float)[self.perm]
        y = solve_triangular(self.lu, rhs, lower=True, unit_diagonal=True, check_finite=False)
        return solve_triangular(self.lu, y, lower=False, check_finite=False)


def as_dense_matrix(A) -> np.ndarray:
    """转换为二维浮点矩阵并检查元素有限"""
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2:
        raise DomainError(f"矩阵必须是二维的，实际维度 {A.ndim}", value=A.shape)
    if not np.all(np.isfinite(A)):
        raise DomainError("矩阵含有非有限元素")
    return A


def _as_vector(b, length: int) -> np.ndarray:
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != length:
        raise DomainError(f"右端向量长度 {b.shape[0]} 与矩阵行数 {length} 不匹配", value=b.shape[0])
    if not np.all(np.isfinite(b)):
        raise DomainError("右端向量含有非有限元素")
    return b


def lu_factor_pivoted(A) -> LUFactors:
    """
    带部分主元的 LU 分解

    主元绝对值低于 eps * ||A||_inf 时视为奇异，报告出错的消元步（从1开始）。
    """
    a = as_dense_matrix(A)
    n, cols = a.shape
    if n != cols:
        raise DomainError(f"需要方阵，实际为 {n}x{cols}", value=a.shape)

    norm_inf = np.linalg.norm(a, np.inf)
    tol = EPS * norm_inf
    perm = np.arange(n)

    for k in range(n):
        # 选列主元
        p = k + int(np.argmax(np.abs(a[k:, k])))
        pivot = abs(a[p, k])
        if pivot <= tol:
            raise NumericalFailureError(
                f"矩阵在工作精度下奇异：第 {k + 1} 步主元 {pivot:.3e} <= {tol:.3e}",
                step=k + 1,
                detail=float(pivot),
            )
        if p != k:
            a[[k, p], :] = a[[p, k], :]
            perm[[k, p]] = perm[[p, k]]

        # 消元
        a[k + 1:, k] /= a[k, k]
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])

    return LUFactors(lu=a, perm=perm)


def _inverse_one_norm(solve, n: int) -> float:
    inverse = solve(np.eye(n))
    return float(np.linalg.norm(inverse, 1))


def solve_square(A, b) -> Tuple[np.ndarray, SolveDiagnostics]:
    """
    求解方阵线性方程组 A x = b

    Returns:
        (x, SolveDiagnostics)，残差为 ||A x - b||_inf，条件数为 ||A||_1 * ||A^-1||_1
    """
    A = as_dense_matrix(A)
    b = _as_vector(b, A.shape[0])

    factors = lu_factor_pivoted(A)
    x = factors.solve(b)

    residual = float(np.linalg.norm(A @ x - b, np.inf))
    condition = float(np.linalg.norm(A, 1)) * _inverse_one_norm(factors.solve, A.shape[0])
    diagnostics = SolveDiagnostics(residual_inf_norm=residual, condition_estimate=max(1.0, condition))

    logger.debug(f"方阵求解 n={A.shape[0]} 残差={residual:.3e} 条件数={condition:.3e}")
    return x, diagnostics


def solve_min_norm(A, b) -> Tuple[np.ndarray, SolveDiagnostics]:
    """
    求欠定方程组 A x = b 的最小二范数解（A 行数 <= 列数，行满秩）

    对 A^T 做 QR 分解：A^T = Q R，于是 R^T y = b，x = Q y。
    """
    A = as_dense_matrix(A)
    rows, cols = A.shape
    if rows > cols:
        raise DomainError(f"最小范数解要求行数 <= 列数，实际为 {rows}x{cols}", value=A.shape)
    b = _as_vector(b, rows)

    q, r = qr(A.T, mode='economic', check_finite=False)
    diag = np.abs(np.diag(r))
    tol = max(rows, cols) * EPS * float(np.linalg.norm(A))
    bad = np.nonzero(diag <= tol)[0]
    if bad.size:
        step = int(bad[0]) + 1
        raise NumericalFailureError(
            f"矩阵行秩亏：第 {step} 个 R 对角元 {diag[step - 1]:.3e} <= {tol:.3e}",
            step=step,
            detail=float(diag[step - 1]),
        )

    y = solve_triangular(r, b, trans='T', lower=False, check_finite=False)
    x = q @ y

    residual = float(np.linalg.norm(A @ x - b, np.inf))
    r_inv = solve_triangular(r, np.eye(rows), lower=False, check_finite=False)
    condition = float(np.linalg.norm(r, 1) * np.linalg.norm(r_inv, 1))
    diagnostics = SolveDiagnostics(residual_inf_norm=residual, condition_estimate=max(1.0, condition))

    logger.debug(f"最小范数求解 {rows}x{cols} 残差={residual:.3e} 条件数={condition:.3e}")
    return x, diagnostics


def bessel_j1(x: float) -> float:
    """
    一阶 Bessel 函数 J1(x)，升幂级数

        J1(x) = sum_k (-1)^k / (k! (k+1)!) * (x/2)^(2k+1)

    相邻项比值递推，直到项的相对大小低于 1e-16。
    """
    x = float(x)
    if not math.isfinite(x) or abs(x) > BESSEL_J1_MAX_ARG:
        raise DomainError(f"bessel_j1 仅支持 |x| <= {BESSEL_J1_MAX_ARG}，实际 x={x}", value=x)

    half = x / 2.0
    half_sq = half * half
    term = half
    total = term
    k = 0
    while term != 0.0 and abs(term) > 1e-16 * abs(total):
        k += 1
        term *= -half_sq / (k * (k + 1))
        total += term
    return total


bessel_j1_array = np.vectorize(bessel_j1, otypes=[float])


def bessel_j1_inverse(ratio: float, xtol: float = 1e-12) -> float:
    """
    求 J1(x) = ratio 的最小正根（二分法，区间 [0, 1.8412]）

    Args:
        ratio: 目标值，0 < ratio < 0.5817
    """
    ratio = float(ratio)
    if not (0.0 < ratio < J1_RATIO_LIMIT):
        raise DomainError(f"目标值 {ratio} 超出 (0, {J1_RATIO_LIMIT}) 范围（J1 最大值约 0.58187）", value=ratio)
    return float(bisect(lambda t: bessel_j1(t) - ratio, 0.0, J1_ARGMAX, xtol=xtol))
