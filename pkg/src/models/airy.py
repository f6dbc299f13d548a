"""
Airy函数相关值类型
字段既可以是标量也可以是同形状的 numpy 数组
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

FloatOrArray = Union[float, np.ndarray]


@dataclass(frozen=True)
class AiryQuad:
    """Ai, Bi 及其导数在 x 处的值"""
    x: FloatOrArray
    ai: FloatOrArray
    bi: FloatOrArray
    aip: FloatOrArray
    bip: FloatOrArray

    def wronskian(self) -> FloatOrArray:
        """W{Ai, Bi} = Ai·Bi' - Ai'·Bi，理论值 1/π"""
        return self.ai * self.bip - self.aip * self.bi


@dataclass(frozen=True)
class ScaledAiryQuad:
    """指数缩放后的Airy值

    真值为 Ai = ai_s·exp(-log_scale)，Bi = bi_s·exp(log_scale)，导数同理。
    x <= 0 时 log_scale 为 0。
    """
    x: FloatOrArray
    ai_s: FloatOrArray
    bi_s: FloatOrArray
    aip_s: FloatOrArray
    bip_s: FloatOrArray
    log_scale: FloatOrArray

    def unscaled(self) -> AiryQuad:
        down = np.exp(-np.asarray(self.log_scale, dtype=float))
        up = np.exp(np.asarray(self.log_scale, dtype=float))
        return AiryQuad(
            x=self.x,
            ai=self.ai_s * down,
            bi=self.bi_s * up,
            aip=self.aip_s * down,
            bip=self.bip_s * up,
        )


@dataclass(frozen=True)
class PairQuad:
    """基本解对 U(0)=1,U'(0)=0 与 V(0)=0,V'(0)=1"""
    x: FloatOrArray
    u: FloatOrArray
    v: FloatOrArray
    up: FloatOrArray
    vp: FloatOrArray

    def wronskian(self) -> FloatOrArray:
        """U·V' - U'·V，理论值 1"""
        return self.u * self.vp - self.up * self.v
