"""
命令行运行配置
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .errors import ConfigurationError


class RunConfig(BaseModel):
    """一次命令行运行的完整参数，可序列化为 JSON"""
    command: Literal["bands", "ids", "dos", "spectrum", "convergence", "lifshitz"]
    kappa: Optional[float] = Field(default=None, gt=0, description="直接给定的 κ")
    v0_ev: Optional[float] = Field(default=None, gt=0, description="势阱深度(eV)")
    l0_angstrom: Optional[float] = Field(default=None, gt=0, description="半周期(Å)")
    mass_ratio: Optional[float] = Field(default=None, gt=0, description="质量(电子质量)")
    preset: Optional[Literal["hydrogen", "carbon"]] = Field(default=None, description="预设")
    unit: Literal["dimensionless", "eV"] = Field(default="dimensionless", description="能量单位")
    e_min: Optional[float] = Field(default=None, description="能量下限")
    e_max: Optional[float] = Field(default=None, description="能量上限")
    points: Optional[int] = Field(default=None, gt=1, description="采样点数")
    max_band: Optional[int] = Field(default=None, ge=0, description="列出的最高能带序号")
    edge_margin: Optional[float] = Field(default=None, gt=0, description="带边保护边距")
    n_half: Optional[int] = Field(default=None, ge=0, description="有限晶格 N")
    n_list: Optional[list[int]] = Field(default=None, description="收敛性检验的 N 列表")
    delta: Optional[float] = Field(default=None, ge=0, description="扰动幅度")
    n_sites: Optional[int] = Field(default=None, ge=1, description="原子数")
    samples: Optional[int] = Field(default=None, ge=1, description="样本数")
    seed: Optional[int] = Field(default=None, ge=0, description="随机种子")
    strict: bool = Field(default=False, description="有效性警告视为错误")
    out: Optional[str] = Field(default=None, description="输出路径")

    @model_validator(mode="after")
    def _check_source(self):
        physical = [self.v0_ev, self.l0_angstrom, self.mass_ratio]
        sources = [
            self.kappa is not None,
            any(value is not None for value in physical),
            self.preset is not None,
        ]
        if sum(sources) != 1:
            raise ConfigurationError("give exactly one of --kappa, the physical triple, or --preset")
        if sources[1] and (self.v0_ev is None or self.l0_angstrom is None):
            raise ConfigurationError("--v0-ev and --l0-angstrom are both required")
        if self.unit == "eV" and sources[0]:
            raise ConfigurationError("--unit eV needs physical parameters or a preset")
        return self
