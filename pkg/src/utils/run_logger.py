"""
运行日志系统
记录每次谱计算运行的参数、能带表、本征值计数、收敛性与拟合结果
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import structlog

from config.settings import settings


class RunLogger:
    """谱计算运行日志记录器

    摘要日志写入 runs.log，逐项细节写入 runs_detailed.log；
    结构化事件通过 structlog 以 key=value 形式落到同一组 handler。
    """

    def __init__(self, logs_dir: Optional[str] = None):
        self.logs_dir = Path(logs_dir or settings.logging.log_dir)
        self.logs_dir.mkdir(parents=True, exist_ok=True)

        self.run_log_file = self.logs_dir / "runs.log"
        self.detailed_log_file = self.logs_dir / "runs_detailed.log"

        self.logger = self._setup_logger("Spectra_Runs", self.run_log_file, logging.INFO)
        self.detailed_logger = self._setup_logger("Spectra_Detailed", self.detailed_log_file, logging.DEBUG)
        self.events = structlog.wrap_logger(
            self.detailed_logger,
            processors=[
                structlog.stdlib.add_log_level,
                structlog.processors.KeyValueRenderer(key_order=["event"], sort_keys=True),
            ],
        )

    def _setup_logger(self, name: str, path: Path, level: int) -> logging.Logger:
        logger = logging.getLogger(name)
        logger.setLevel(level)

        # 避免重复添加handler
        if not any(getattr(handler, "baseFilename", None) == str(path.resolve()) for handler in logger.handlers):
            file_handler = logging.FileHandler(path, encoding="utf-8")
            file_handler.setLevel(level)
            formatter = logging.Formatter(settings.logging.format, datefmt="%Y-%m-%d %H:%M:%S")
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        return logger

    def log_run_start(self, command: str, params: Dict[str, Any]):
        """记录运行开始"""
        self.logger.info(f"=== 运行开始: {command} ===")
        fields = {k: v for k, v in params.items() if v is not None and k != "command"}
        self.events.info("run_start", command=command, **fields)

    def log_band_table(self, kappa: float, bands: Sequence[Any]):
        """记录能带表"""
        self.logger.info(f"能带表: kappa={kappa}, 共{len(bands)}个能带")
        for band in bands:
            self.detailed_logger.debug(f"  p={band.p}: [{band.e_min:.15g}, {band.e_max:.15g}]")

    def log_spectrum(self, n_half: int, per_band: Dict[int, int], per_gap: Dict[int, int]):
        """记录有限晶格能级计数"""
        self.logger.info(f"有限晶格 N={n_half}: 带内能级 {per_band}, 带隙能级 {per_gap}")
        self.events.info("spectrum", n_half=n_half, levels=sum(per_band.values()) + sum(per_gap.values()))

    def log_convergence(self, rows: Sequence[Dict[str, Any]], exponent: float):
        """记录收敛性结果"""
        self.logger.info(f"收敛性检验: {len(rows)}个N值, 衰减指数={exponent:.3f}")
        for row in rows:
            self.events.info("convergence_row", **row)

    def log_fit(self, summary: Dict[str, Any]):
        """记录尾部拟合"""
        self.logger.info(
            f"尾部拟合: 指数={summary['exponent']:.4f}±{summary['stderr']:.4f}, "
            f"r²={summary['r_squared']:.4f}, 模型不符={summary['model_mismatch']}"
        )
        self.events.info("lifshitz_fit", **{k: v for k, v in summary.items() if k != "window"})

    def log_validity_warning(self, kappa: float, threshold: float):
        """记录公式有效性警告"""
        self.logger.warning(f"kappa={kappa} 低于阈值 {threshold:.6f}，IDS/DOS 公式未经验证")

    def log_error(self, error_msg: str, stage: str = "unknown"):
        """记录错误"""
        self.logger.error(f"运行错误 [{stage}]: {error_msg}")
        self.detailed_logger.error(f"运行错误详情 [{stage}]: {error_msg}")

    def log_run_end(self, command: str, elapsed: float):
        """记录运行结束"""
        self.logger.info(f"=== 运行结束: {command}, 耗时={elapsed:.2f}秒 ===")


_run_logger: Optional[RunLogger] = None


def get_run_logger() -> RunLogger:
    """获取全局运行日志实例"""
    global _run_logger
    if _run_logger is None:
        _run_logger = RunLogger()
    return _run_logger
