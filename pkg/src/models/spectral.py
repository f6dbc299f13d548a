"""
谱函数相关模型
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Tuple, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

TABLE_COLUMNS = ["E", "e", "p", "phi", "ids", "dos", "flag"]


@dataclass(frozen=True)
class Gap:
    """带隙标记，below 为下方能带序号，-1 表示谱底以下"""
    below: int


class EdgeCoefficient(BaseModel):
    """带边平方根奇异性的系数

    IDS ≈ ids(edge) ± k·√δ，DOS ≈ r/√δ，极限下 r = k/2。
    """
    model_config = ConfigDict(frozen=True)

    p: int = Field(..., ge=0, description="能带序号")
    side: Literal["lower", "upper"] = Field(..., description="带边位置")
    edge: float = Field(..., description="带边能量(无量纲)")
    k_value: float = Field(..., description="IDS平方根系数")
    r_value: float = Field(..., description="DOS逆平方根系数")
    window: float = Field(..., gt=0, description="外推窗口")


@dataclass
class SpectralTable:
    """谱表，列为 E, e, p, phi, ids, dos, flag"""
    frame: pd.DataFrame
    kappa: float
    unit: Literal["dimensionless", "eV"] = "dimensionless"

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        """写出CSV；path 为空时返回文本"""
        text = self.frame.to_csv(index=False, float_format="%.17g", na_rep="")
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def plateaus(self) -> List[Tuple[int, float]]:
        """带隙行上的 (下方能带, IDS) 取值"""
        gaps = self.frame[self.frame["flag"] == "gap"]
        return [(int(row.p), float(row.ids)) for row in gaps.itertuples()]

    def __len__(self) -> int:
        return len(self.frame)
