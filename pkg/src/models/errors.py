"""
异常定义
所有数值服务抛出的异常都继承自 SawtoothError
"""

from typing import Optional


class SawtoothError(Exception):
    """锯齿晶格谱计算的基础异常"""


class ConfigurationError(SawtoothError, ValueError):
    """参数组合无效"""


class AiryRangeError(SawtoothError, OverflowError):
    """未缩放Airy函数超出可表示范围"""


class PropagatorOverflowError(SawtoothError, OverflowError):
    """传播矩阵指数因子溢出"""


class BandScanError(SawtoothError):
    """带边扫描无法分离根"""


class OutOfBandError(SawtoothError, ValueError):
    """能量不在允许带内"""


class EdgeGuardError(SawtoothError, ValueError):
    """能量距离带边过近"""


class TableCoverageError(SawtoothError, ValueError):
    """能量超出能带表覆盖范围"""


class ExtrapolationError(SawtoothError):
    """外推不收敛"""


class CountMismatchError(SawtoothError):
    """有限晶格本征值计数与节点计数不一致"""

    def __init__(
        self,
        message: str,
        band: Optional[int] = None,
        gap: Optional[int] = None,
        found: Optional[int] = None,
        expected: Optional[int] = None,
    ):
        super().__init__(message)
        self.band = band
        self.gap = gap
        self.found = found
        self.expected = expected


class OracleError(SawtoothError):
    """参考解未收敛或输入超出范围"""


class CalibrationError(SawtoothError):
    """传递矩阵计数与有限差分计数偏差过大"""


class FitError(SawtoothError, ValueError):
    """拟合窗口内有效点不足"""
