"""
有限晶格模型
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd


@dataclass(frozen=True)
class FiniteSpectrum:
    """2N+1 个原子的有限晶格在 e<0 的束缚态

    labels 与 eigenvalues 一一对应：带内能级为能带序号，带隙内的表面态为 "gap<p>"。
    """
    n_half: int
    kappa: float
    eigenvalues: np.ndarray
    per_band_counts: Dict[int, int] = field(default_factory=dict)
    per_gap_counts: Dict[int, int] = field(default_factory=dict)
    labels: Tuple[str, ...] = ()

    @property
    def n_atoms(self) -> int:
        return 2 * self.n_half + 1

    @property
    def surface_states(self) -> int:
        return sum(self.per_gap_counts.values())


@dataclass
class ConvergenceReport:
    """计数函数 I_N 与 IDS 的收敛性报告"""
    kappa: float
    frame: pd.DataFrame
    decay_exponent: float
    worst_energies: List[float] = field(default_factory=list)

    def to_csv(self) -> str:
        return self.frame.to_csv(index=False, float_format="%.17g")
