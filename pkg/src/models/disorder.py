"""
随机扰动实验模型
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .lattice import Lattice


class DisorderConfig(BaseModel):
    """势阱深度 V_n = V0(1 + δ·ω_n)，ω_n 在 [0, 1) 上均匀分布"""
    model_config = ConfigDict(frozen=True)

    lattice: Lattice
    delta: float = Field(..., ge=0, description="扰动幅度")
    n_sites: int = Field(..., ge=1, description="原子数")
    samples: int = Field(..., ge=1, description="样本数")
    seed: int = Field(..., ge=0, lt=2 ** 64, description="随机种子")

    @property
    def max_depth_ratio(self) -> float:
        return 1.0 + self.delta


@dataclass(frozen=True)
class EmpiricalIds:
    """样本平均的经验 IDS 曲线"""
    energies: np.ndarray
    ids_mean: np.ndarray
    ids_stderr: np.ndarray
    ground_state: Optional[np.ndarray] = None


class LifshitzFit(BaseModel):
    """ln(-ln IDS) 对 ln(E - E0) 的线性拟合"""
    model_config = ConfigDict(frozen=True)

    e0_hat: float = Field(..., description="谱底估计")
    window: Tuple[float, float] = Field(..., description="拟合能量窗口")
    exponent: float = Field(..., description="斜率")
    stderr: float = Field(..., ge=0, description="斜率标准误差")
    intercept: float = Field(..., description="截距")
    r_squared: float = Field(..., description="决定系数")
    power_law_r_squared: float = Field(..., description="幂律模型 ln IDS 对 ln(E - E0) 的决定系数")
    points: int = Field(..., ge=0, description="参与拟合的点数")
    model_mismatch: bool = Field(..., description="数据与双对数线性模型不符")
