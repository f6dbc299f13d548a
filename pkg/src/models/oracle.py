"""
有限差分参考问题模型
"""

from dataclasses import dataclass
from typing import Callable, Literal, Tuple

import numpy as np

from .errors import OracleError

Boundary = Literal["dirichlet", "periodic", "antiperiodic"]


@dataclass(frozen=True)
class FdProblem:
    """-kinetic·ψ'' + potential(x)·ψ = λψ 在 [x_min, x_max] 上的离散问题"""
    potential: Callable[[np.ndarray], np.ndarray]
    x_min: float
    x_max: float
    points: int
    boundary: Boundary = "dirichlet"
    count: int = 10
    kinetic: float = 1.0

    def __post_init__(self):
        if self.x_max <= self.x_min:
            raise OracleError(f"empty interval [{self.x_min}, {self.x_max}]")
        if self.points < 3:
            raise OracleError("at least 3 grid points are required")

    def grid(self, points: int) -> Tuple[np.ndarray, float]:
        """内部网格点与步长

        dirichlet 为两端之间的 points 个内点；周期型为 [x_min, x_max) 上的 points 个点。
        """
        length = self.x_max - self.x_min
        if self.boundary == "dirichlet":
            h = length / (points + 1)
            x = self.x_min + h * np.arange(1, points + 1)
        else:
            h = length / points
            x = self.x_min + h * np.arange(points)
        return x, h


@dataclass(frozen=True)
class FdResult:
    """外推后的本征值与误差估计"""
    eigenvalues: np.ndarray
    error_estimate: np.ndarray
    converged: bool
