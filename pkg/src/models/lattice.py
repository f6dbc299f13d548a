"""
晶格与传播矩阵模型
"""

from dataclasses import dataclass, field
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import constants

from .airy import FloatOrArray
from .errors import ConfigurationError

# ħ²/(2 m_e)，单位 eV·Å²
HBAR2_OVER_2ME = constants.hbar ** 2 / (2.0 * constants.m_e) / (constants.e * constants.angstrom ** 2)

KAPPA_MATCH_TOLERANCE = 1e-9


def kappa_from_physical(mass: float, v0: float, l0: float) -> float:
    """κ = (2 m L0² V0 / ħ²)^(1/3)

    mass 以电子质量为单位，v0 单位 eV，l0 单位 Å。
    """
    if mass <= 0 or v0 <= 0 or l0 <= 0:
        raise ConfigurationError(f"physical parameters must be positive: mass={mass}, v0={v0}, l0={l0}")
    return float(np.cbrt(mass * v0 * l0 ** 2 / HBAR2_OVER_2ME))


class Lattice(BaseModel):
    """周期锯齿势晶格

    kappa 为唯一的无量纲参数；v0/l0/mass 可选，用于换算到 eV 与 Å。
    """
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(..., gt=0, description="无量纲强度参数")
    v0: Optional[float] = Field(default=None, gt=0, description="势阱深度(eV)")
    l0: Optional[float] = Field(default=None, gt=0, description="半周期(Å)")
    mass: Optional[float] = Field(default=None, gt=0, description="粒子质量(电子质量)")
    source: Literal["kappa", "physical", "preset"] = Field(default="kappa", description="kappa来源")

    @model_validator(mode="before")
    @classmethod
    def _fill_kappa(cls, data):
        if isinstance(data, dict) and data.get("kappa") is None:
            physical = [data.get(key) for key in ("mass", "v0", "l0")]
            if any(value is None for value in physical):
                raise ConfigurationError("either kappa or all of mass, v0, l0 are required")
            data = dict(data)
            data["kappa"] = kappa_from_physical(*physical)
            data["source"] = "physical"
        return data

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.source != "preset" and self.has_physical:
            expected = kappa_from_physical(self.mass, self.v0, self.l0)
            if abs(expected - self.kappa) > KAPPA_MATCH_TOLERANCE * max(1.0, expected):
                raise ConfigurationError(
                    f"kappa={self.kappa} inconsistent with physical parameters (kappa={expected})"
                )
        return self

    @property
    def has_physical(self) -> bool:
        return self.mass is not None and self.v0 is not None and self.l0 is not None

    @property
    def formula_valid(self) -> bool:
        """κ ≥ κ0 时能带0完全位于阱内，IDS/DOS公式有效"""
        from services.airy_core import kappa0

        return self.kappa >= kappa0()

    @property
    def energy_scale(self) -> float:
        """无量纲能量到 eV 的换算因子"""
        if self.v0 is None:
            raise ConfigurationError("v0 is required for eV conversion")
        return self.v0

    def recomputed_kappa(self) -> Optional[float]:
        """由物理参数复算的 κ(预设值固定时用于提示)"""
        if not self.has_physical:
            return None
        return kappa_from_physical(self.mass, self.v0, self.l0)


@dataclass(frozen=True)
class Mat2:
    """2x2 矩阵 [[a, b], [c, d]]，元素可为同形状数组"""
    a: FloatOrArray
    b: FloatOrArray
    c: FloatOrArray
    d: FloatOrArray

    def det(self) -> FloatOrArray:
        return self.a * self.d - self.b * self.c

    def trace(self) -> FloatOrArray:
        return self.a + self.d

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            a=self.a * other.a + self.b * other.c,
            b=self.a * other.b + self.b * other.d,
            c=self.c * other.a + self.d * other.c,
            d=self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Mat2":
        """逆矩阵，按 det 归一"""
        det = self.det()
        return Mat2(a=self.d / det, b=-self.b / det, c=-self.c / det, d=self.a / det)

    def mirrored(self) -> "Mat2":
        """J·M·J，J = diag(1, -1)"""
        return Mat2(a=self.a, b=-self.b, c=-self.c, d=self.d)

    def apply(self, first: FloatOrArray, second: FloatOrArray) -> Tuple[FloatOrArray, FloatOrArray]:
        return self.a * first + self.b * second, self.c * first + self.d * second


EdgeKind = Literal["periodic", "antiperiodic"]


@dataclass(frozen=True)
class Band:
    """第 p 个允许带 [e_min, e_max]"""
    p: int
    e_min: float
    e_max: float
    lower_kind: EdgeKind = "periodic"
    upper_kind: EdgeKind = "antiperiodic"

    @property
    def width(self) -> float:
        return self.e_max - self.e_min

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.e_min + self.e_max)


@dataclass(frozen=True)
class BandTable:
    """某个 κ 下能量上限 e_ceiling 以下的全部能带"""
    kappa: float
    bands: Tuple[Band, ...]
    e_ceiling: float
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        flat = np.array([value for band in self.bands for value in (band.e_min, band.e_max)], dtype=float)
        object.__setattr__(self, "edges", flat)

    @property
    def coverage_top(self) -> float:
        """能带表可以回答的最高能量"""
        if not self.bands:
            return self.e_ceiling
        return max(self.e_ceiling, self.bands[-1].e_max)

    def band(self, p: int) -> Band:
        if p < 0 or p >= len(self.bands):
            raise IndexError(f"band {p} not in table (bands 0..{len(self.bands) - 1})")
        return self.bands[p]

    def __len__(self) -> int:
        return len(self.bands)
