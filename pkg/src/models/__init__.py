"""
数据模型包
包含晶格、传播矩阵、谱表、随机实验与参考解的模型定义
"""

from .airy import AiryQuad, ScaledAiryQuad, PairQuad
from .lattice import Lattice, Mat2, Band, BandTable, kappa_from_physical
from .spectral import Gap, EdgeCoefficient, SpectralTable
from .finite import FiniteSpectrum, ConvergenceReport
from .disorder import DisorderConfig, EmpiricalIds, LifshitzFit
from .oracle import FdProblem, FdResult
from .run import RunConfig

__all__ = [
    "AiryQuad",
    "ScaledAiryQuad",
    "PairQuad",
    "Lattice",
    "Mat2",
    "Band",
    "BandTable",
    "kappa_from_physical",
    "Gap",
    "EdgeCoefficient",
    "SpectralTable",
    "FiniteSpectrum",
    "ConvergenceReport",
    "DisorderConfig",
    "EmpiricalIds",
    "LifshitzFit",
    "FdProblem",
    "FdResult",
    "RunConfig",
]
