"""
应用程序配置管理
数值参数、并发参数与日志参数均可通过环境变量或 .env 覆盖
"""

from pydantic_settings import BaseSettings
from pydantic import Field, validator
from typing import Optional, Dict, Any
from pathlib import Path


class NumericsSettings(BaseSettings):
    """周期晶格数值配置"""
    edge_guard: float = Field(default=1e-12, description="带边保护距离(无量纲能量)")
    root_xtol: float = Field(default=1e-15, description="求根绝对容差")
    scan_step: float = Field(default=1e-3, description="带边扫描最大步长")
    max_scan_halvings: int = Field(default=6, description="扫描步长最多减半次数")
    radicand_tolerance: float = Field(default=1e-12, description="相位根号内负值容差")
    derivative_step: float = Field(default=1e-4, description="数值求导的Richardson步长")
    edge_window: float = Field(default=1e-4, description="带边系数外推窗口")

    class Config:
        env_prefix = "NUMERICS_"


class TabulationSettings(BaseSettings):
    """谱表输出配置"""
    default_points: int = Field(default=2000, description="默认采样点数")
    edge_margin: float = Field(default=1e-9, description="默认带边保护边距")
    max_workers: int = Field(default=4, description="并发计算线程数")

    class Config:
        env_prefix = "TABLE_"


class FiniteLatticeSettings(BaseSettings):
    """有限晶格配置"""
    nodes_per_level: int = Field(default=8, description="每个预期能级的扫描节点数")
    max_refinements: int = Field(default=4, description="计数不符时的最大加密次数")
    convergence_grid_points: int = Field(default=1000, description="收敛性检验的能量网格点数")
    max_workers: int = Field(default=4, description="逐带求根线程数")

    class Config:
        env_prefix = "FINITE_"


class DisorderSettings(BaseSettings):
    """随机扰动实验配置"""
    delta: float = Field(default=0.3, description="势阱深度扰动幅度")
    n_sites: int = Field(default=401, description="晶格原子数")
    samples: int = Field(default=100, description="样本数")
    seed: int = Field(default=20240611, description="随机种子")
    grid_points: int = Field(default=200, description="能量网格点数")
    chunk_size: int = Field(default=10, description="每个线程任务处理的样本数")
    max_workers: int = Field(default=4, description="并发线程数")
    calibrate: bool = Field(default=True, description="是否与有限差分结果交叉校验")
    calibration_sites: int = Field(default=11, description="校验使用的原子数")
    calibration_points: int = Field(default=12, description="校验使用的能量点数")
    min_fit_points: int = Field(default=8, description="拟合所需最少点数")
    min_r_squared: float = Field(default=0.9, description="双对数模型的最小决定系数")
    max_relative_stderr: float = Field(default=0.05, description="斜率的最大相对标准误差")

    class Config:
        env_prefix = "DISORDER_"


class OracleSettings(BaseSettings):
    """参考解(有限差分与高精度Airy)配置"""
    points_per_period: int = Field(default=2000, description="每个周期的网格点数")
    padding: float = Field(default=10.0, description="有限晶格两侧的零势区长度(单位L0)")
    tolerance: float = Field(default=1e-6, description="外推精度目标")
    max_count: int = Field(default=50, description="单次求解的最大本征值个数")
    guard_digits: int = Field(default=10, description="级数求和的保护位数")
    max_terms: int = Field(default=2000, description="级数最大项数")

    class Config:
        env_prefix = "ORACLE_"


class LoggingSettings(BaseSettings):
    """日志配置"""
    level: str = Field(default="INFO", description="日志级别")
    format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="日志格式"
    )
    file: Optional[str] = Field(default=None, description="日志文件路径")
    log_dir: str = Field(default="./logs", description="运行日志目录")

    @validator("level")
    def validate_level(cls, v):
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in allowed:
            raise ValueError(f"Log level must be one of {allowed}")
        return v.upper()

    class Config:
        env_prefix = "LOG_"


class Settings(BaseSettings):
    """应用程序主配置"""

    # 基本信息
    app_name: str = Field(default="Sawtooth Spectra", description="应用名称")
    app_version: str = Field(default="1.0.0", description="应用版本")
    presets_file: str = Field(
        default=str(Path(__file__).parent / "presets.yaml"),
        description="晶格预设文件"
    )

    # 各组件配置
    numerics: NumericsSettings = NumericsSettings()
    table: TabulationSettings = TabulationSettings()
    finite: FiniteLatticeSettings = FiniteLatticeSettings()
    disorder: DisorderSettings = DisorderSettings()
    oracle: OracleSettings = OracleSettings()
    logging: LoggingSettings = LoggingSettings()

    def get_disorder_defaults(self) -> Dict[str, Any]:
        """获取随机实验默认参数"""
        return {
            "delta": self.disorder.delta,
            "n_sites": self.disorder.n_sites,
            "samples": self.disorder.samples,
            "seed": self.disorder.seed,
        }

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False


# 全局设置实例
settings = Settings()
