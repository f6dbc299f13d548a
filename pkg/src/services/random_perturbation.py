"""
随机扰动服务
随机势阱深度的有限晶格：经验 IDS、谱底估计与 Lifshitz 尾部拟合
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from config.settings import settings
from models.disorder import DisorderConfig, EmpiricalIds, LifshitzFit
from models.errors import CalibrationError, FitError
from models.lattice import Lattice

from .finite_lattice import E_TOP, level_count
from .lattice_model import band_edges
from .oracle import fd_level_count, finite_lattice_problem

logger = logging.getLogger(__name__)

GROUND_STATE_STEPS = 60


def _draw_ratios(seed: int, sample_index: int, n_sites: int, delta: float) -> np.ndarray:
    rng = np.random.default_rng([seed, sample_index])
    return 1.0 + delta * rng.random(n_sites)


def depth_ratios(config: DisorderConfig, sample_index: int) -> np.ndarray:
    """第 sample_index 个样本的 D_n = 1 + δ·ω_n"""
    return _draw_ratios(config.seed, sample_index, config.n_sites, config.delta)


def sample_depths(config: DisorderConfig, sample_index: int) -> np.ndarray:
    """势阱深度 V_n = V0·(1 + δ·ω_n)；未给 V0 时以 V0 = 1 计"""
    v0 = config.lattice.v0 if config.lattice.v0 is not None else 1.0
    return v0 * depth_ratios(config, sample_index)


def _all_ratios(config: DisorderConfig) -> np.ndarray:
    return np.stack([depth_ratios(config, index) for index in range(config.samples)])


def _band_zero(kappa: float) -> Tuple[float, float]:
    band = band_edges(Lattice(kappa=kappa), 0.0).band(0)
    return band.e_min, band.e_max


def tail_window(config: DisorderConfig) -> Tuple[float, float]:
    """尾部能量窗口

    下端为所有阱取最深 (1+δ) 时周期晶格的谱底，上端为未扰动晶格能带0的中点。
    """
    kappa = config.lattice.kappa
    deepest = config.max_depth_ratio
    floor = deepest * _band_zero(kappa * np.cbrt(deepest))[0]
    bottom, top = _band_zero(kappa)
    return floor, 0.5 * (bottom + top)


def _chunked_counts(energies: np.ndarray, kappa: float, ratios: np.ndarray) -> np.ndarray:
    chunk = max(1, settings.disorder.chunk_size)
    starts = list(range(0, len(ratios), chunk))
    with ThreadPoolExecutor(max_workers=settings.disorder.max_workers) as executor:
        futures = [
            executor.submit(level_count, energies[i:i + chunk] if energies.ndim == 2 else energies,
                            kappa, ratios[i:i + chunk])
            for i in starts
        ]
        # 按样本序号拼接，结果与线程调度无关
        return np.concatenate([future.result() for future in futures], axis=0)


def calibrate_against_oracle(config: DisorderConfig, grid: np.ndarray) -> int:
    """小尺寸样本上传递矩阵计数与有限差分计数的最大偏差

    偏差超过 1 个能级时抛出 CalibrationError。
    """
    sites = settings.disorder.calibration_sites
    ratios = _draw_ratios(config.seed, 0, sites, config.delta)
    picks = np.unique(np.linspace(0, len(grid) - 1, settings.disorder.calibration_points).astype(int))
    energies = np.asarray(grid, dtype=float)[picks]

    transfer = level_count(energies, config.lattice.kappa, ratios)
    problem = finite_lattice_problem(config.lattice, sites, count=1, depth_ratios=ratios)
    reference = fd_level_count(problem, energies)
    disagreement = int(np.max(np.abs(transfer - reference)))
    logger.info(f"calibration at {sites} sites: max count disagreement {disagreement}")
    if disagreement > 1:
        raise CalibrationError(
            f"transfer-matrix and finite-difference counts differ by {disagreement} levels at {sites} sites"
        )
    return disagreement


def empirical_ids(config: DisorderConfig, grid, calibrate: Optional[bool] = None) -> EmpiricalIds:
    """样本平均的经验 IDS 及其标准误差"""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= -config.max_depth_ratio) or np.any(grid >= 0.0):
        raise ValueError(f"energy grid must lie inside (-{config.max_depth_ratio}, 0)")
    calibrate = settings.disorder.calibrate if calibrate is None else calibrate
    if calibrate:
        calibrate_against_oracle(config, grid)

    counts = _chunked_counts(grid, config.lattice.kappa, _all_ratios(config))
    per_sample = counts / (2.0 * config.n_sites)
    # 整数总数只做一次除法，δ = 0 时与周期计数函数逐位相同
    mean = counts.sum(axis=0) / (config.samples * 2 * config.n_sites)
    if config.samples > 1:
        stderr = per_sample.std(axis=0, ddof=1) / np.sqrt(config.samples)
    else:
        stderr = np.zeros_like(mean)
    return EmpiricalIds(energies=grid, ids_mean=mean, ids_stderr=stderr)


def ground_state_energies(config: DisorderConfig) -> np.ndarray:
    """每个样本的最低能级(对计数函数二分)"""
    ratios = _all_ratios(config)
    lower = np.full((config.samples, 1), -config.max_depth_ratio)
    upper = np.full((config.samples, 1), E_TOP)
    for _ in range(GROUND_STATE_STEPS):
        middle = 0.5 * (lower + upper)
        counts = _chunked_counts(middle, config.lattice.kappa, ratios)
        occupied = counts >= 1
        upper = np.where(occupied, middle, upper)
        lower = np.where(occupied, lower, middle)
    return (0.5 * (lower + upper))[:, 0]


def lifshitz_fit(e_grid, ids_values, e0_hat: float, min_points: Optional[int] = None) -> LifshitzFit:
    """在 0 < IDS < 1/2 且 e > e0_hat 的点上拟合 ln(-ln IDS) 对 ln(e - e0_hat)"""
    min_points = settings.disorder.min_fit_points if min_points is None else min_points
    e_grid = np.asarray(e_grid, dtype=float)
    ids_values = np.asarray(ids_values, dtype=float)
    mask = (e_grid > e0_hat) & (ids_values > 0.0) & (ids_values < 0.5)
    points = int(np.count_nonzero(mask))
    if points < min_points:
        raise FitError(f"only {points} usable points in the tail window, need {min_points}")

    x = np.log(e_grid[mask] - e0_hat)
    y = np.log(-np.log(ids_values[mask]))
    result = stats.linregress(x, y)
    r_squared = float(result.rvalue ** 2)
    # 周期带边是幂律 IDS ~ (e - e0)^a，双对数模型应比它解释得更好
    power_law = stats.linregress(x, np.log(ids_values[mask]))
    power_r_squared = float(power_law.rvalue ** 2)
    mismatch = (
        r_squared < settings.disorder.min_r_squared
        or result.stderr > settings.disorder.max_relative_stderr * abs(result.slope)
        or power_r_squared > r_squared
    )
    return LifshitzFit(
        e0_hat=e0_hat,
        window=(float(e_grid[mask].min()), float(e_grid[mask].max())),
        exponent=float(result.slope),
        stderr=float(result.stderr),
        intercept=float(result.intercept),
        r_squared=r_squared,
        power_law_r_squared=power_r_squared,
        points=points,
        model_mismatch=bool(mismatch),
    )


def sample_tail(config: DisorderConfig, grid_points: Optional[int] = None,
                calibrate: Optional[bool] = None) -> EmpiricalIds:
    """尾部窗口上的经验 IDS，附带每个样本的最低能级"""
    grid_points = settings.disorder.grid_points if grid_points is None else grid_points
    floor, top = tail_window(config)
    grid = np.linspace(floor, top, grid_points)
    curve = empirical_ids(config, grid, calibrate=calibrate)
    return EmpiricalIds(
        energies=curve.energies,
        ids_mean=curve.ids_mean,
        ids_stderr=curve.ids_stderr,
        ground_state=ground_state_energies(config),
    )


def floor_estimate(curve: EmpiricalIds) -> float:
    """谱底估计：所有样本最低能级再减一个网格步长"""
    if curve.ground_state is None:
        raise ValueError("ground state energies are required for the spectral floor estimate")
    step = curve.energies[1] - curve.energies[0]
    return float(curve.ground_state.min() - step)


def run_lifshitz(config: DisorderConfig, grid_points: Optional[int] = None,
                 calibrate: Optional[bool] = None) -> Tuple[EmpiricalIds, LifshitzFit]:
    """完整的尾部实验：经验 IDS、谱底估计与拟合"""
    curve = sample_tail(config, grid_points, calibrate)
    e0_hat = floor_estimate(curve)
    logger.info(
        f"lifshitz run: delta={config.delta}, n_sites={config.n_sites}, samples={config.samples}, "
        f"e0_hat={e0_hat:.8f}"
    )
    return curve, lifshitz_fit(curve.energies, curve.ids_mean, e0_hat)


def curve_frame(curve: EmpiricalIds, lattice: Lattice, unit: str = "dimensionless") -> pd.DataFrame:
    """列 E, e, ids_mean, ids_stderr；E 为所选单位下的能量"""
    scale = lattice.energy_scale if unit == "eV" else 1.0
    return pd.DataFrame(
        {
            "E": curve.energies * scale,
            "e": curve.energies,
            "ids_mean": curve.ids_mean,
            "ids_stderr": curve.ids_stderr,
        }
    )


def fit_summary(config: DisorderConfig, fit: LifshitzFit) -> Dict[str, Any]:
    """拟合结果的 JSON 摘要"""
    return {
        "e0_hat": fit.e0_hat,
        "window": list(fit.window),
        "exponent": fit.exponent,
        "stderr": fit.stderr,
        "r_squared": fit.r_squared,
        "power_law_r_squared": fit.power_law_r_squared,
        "points": fit.points,
        "model_mismatch": fit.model_mismatch,
        "samples": config.samples,
        "seed": config.seed,
        "delta": config.delta,
        "n_sites": config.n_sites,
        "kappa": config.lattice.kappa,
    }
