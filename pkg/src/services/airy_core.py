"""
Airy函数核心
Ai、Bi 及其导数的求值(未缩放与指数缩放)、基本解对以及阈值 κ0
"""

import logging
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import optimize, special

from models.airy import AiryQuad, PairQuad, ScaledAiryQuad
from models.errors import AiryRangeError

logger = logging.getLogger(__name__)

# 超过该值 Bi 的未缩放值开始失去意义，应改用缩放接口
UNSCALED_LIMIT = 25.0
SCALED_LIMIT = 1e4

# x = 0 处的闭式值
AI0 = 3.0 ** (-2.0 / 3.0) / special.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / special.gamma(1.0 / 3.0)
BI0 = 3.0 ** (-1.0 / 6.0) / special.gamma(2.0 / 3.0)
BIP0 = 3.0 ** (1.0 / 6.0) / special.gamma(1.0 / 3.0)

KAPPA0_BRACKET = (-2.0, -1.0)


def _as_output(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def _checked(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Airy argument must be finite")
    return arr


def airy_eval(x) -> AiryQuad:
    """未缩放的 Ai, Bi, Ai', Bi'，x 可为标量或数组"""
    arr = _checked(x)
    if np.any(arr > UNSCALED_LIMIT):
        raise AiryRangeError(
            f"unscaled Airy values requested at x={float(np.max(arr)):.6g} > {UNSCALED_LIMIT}; "
            "use airy_eval_scaled"
        )
    ai, aip, bi, bip = special.airy(arr)
    return AiryQuad(
        x=_as_output(arr),
        ai=_as_output(ai),
        bi=_as_output(bi),
        aip=_as_output(aip),
        bip=_as_output(bip),
    )


def airy_eval_scaled(x) -> ScaledAiryQuad:
    """指数缩放的 Airy 值

    x > 0 时 Ai, Ai' 乘以 exp(ζ)，Bi, Bi' 乘以 exp(-ζ)，ζ = (2/3)x^(3/2)；
    x <= 0 时返回未缩放值且 log_scale = 0。
    """
    arr = _checked(x)
    if np.any(np.abs(arr) > SCALED_LIMIT):
        raise AiryRangeError(f"|x| exceeds {SCALED_LIMIT} in scaled Airy evaluation")

    flat = np.atleast_1d(arr)
    ai = np.empty_like(flat)
    aip = np.empty_like(flat)
    bi = np.empty_like(flat)
    bip = np.empty_like(flat)
    log_scale = np.zeros_like(flat)

    positive = flat > 0
    if np.any(positive):
        xp = flat[positive]
        ai[positive], aip[positive], bi[positive], bip[positive] = special.airye(xp)
        log_scale[positive] = (2.0 / 3.0) * xp * np.sqrt(xp)
    if np.any(~positive):
        ai[~positive], aip[~positive], bi[~positive], bip[~positive] = special.airy(flat[~positive])

    shape = arr.shape
    return ScaledAiryQuad(
        x=_as_output(arr),
        ai_s=_as_output(ai.reshape(shape)),
        bi_s=_as_output(bi.reshape(shape)),
        aip_s=_as_output(aip.reshape(shape)),
        bip_s=_as_output(bip.reshape(shape)),
        log_scale=_as_output(log_scale.reshape(shape)),
    )


def fundamental_pair(x) -> PairQuad:
    """y'' = x·y 的基本解对

    U(0)=1, U'(0)=0；V(0)=0, V'(0)=1。Wronskian 恒为 1，但 x 较大时 U、V 随 exp(ζ)
    增长，U·V' - U'·V 的舍入误差与 |U·V'| 同量级，只能按相对值核对。
    """
    q = airy_eval(x)
    return PairQuad(
        x=q.x,
        u=np.pi * (BIP0 * q.ai - AIP0 * q.bi),
        v=np.pi * (AI0 * q.bi - BI0 * q.ai),
        up=np.pi * (BIP0 * q.aip - AIP0 * q.bip),
        vp=np.pi * (AI0 * q.bip - BI0 * q.aip),
    )


def locate_kappa0(bracket: Tuple[float, float] = KAPPA0_BRACKET) -> float:
    """在给定区间内求 V' 的零点并返回其相反数

    V'(-κ) 是 e=0 时上升半坡传播矩阵的 (1,1) 元，其最大负零点对应
    能带0的上边缘恰好到达 e=0。
    """
    lo, hi = bracket
    f_lo = fundamental_pair(lo).vp
    f_hi = fundamental_pair(hi).vp
    if f_lo * f_hi > 0:
        raise ValueError(f"bracket {bracket} does not enclose a zero of V'")
    root = optimize.brentq(
        lambda t: fundamental_pair(t).vp, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200
    )
    return -float(root)


@lru_cache(maxsize=None)
def kappa0() -> float:
    """公式有效的阈值 κ0 ≈ 1.515"""
    value = locate_kappa0()
    logger.debug(f"kappa0 located at {value:.15f}")
    return value
