"""
谱密度服务
能带定位、IDS 闭式公式、态密度、带边系数、渐近式与谱表输出
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from config.settings import settings
from models.errors import EdgeGuardError, ExtrapolationError, OutOfBandError, TableCoverageError
from models.lattice import Band, BandTable, Lattice
from models.spectral import TABLE_COLUMNS, EdgeCoefficient, Gap, SpectralTable

from .airy_core import airy_eval, airy_eval_scaled
from .lattice_model import band_edges, discriminant, half_slope_derivative, half_slope_propagator

logger = logging.getLogger(__name__)

# 带积分替换 e = edge ± t² 时 t 的下限
INTEGRAL_T_FLOOR = 2e-6


def build_table(lattice: Lattice, e_ceiling: float = 0.0) -> BandTable:
    """计算能带表，默认覆盖到连续谱阈值 e = 0"""
    return band_edges(lattice, e_ceiling)


def _locate(e: np.ndarray, table: BandTable) -> Tuple[np.ndarray, np.ndarray]:
    """返回 (序号, 是否在带内)；带内为能带序号，带隙为下方能带序号"""
    if np.any(e < -1.0) or np.any(e > table.coverage_top):
        raise TableCoverageError(
            f"energy outside band table coverage [-1, {table.coverage_top:.6g}]"
        )
    edges = table.edges
    idx = np.searchsorted(edges, e, side="right")
    in_band = idx % 2 == 1
    # 能带取闭区间，上边缘本身计入能带
    on_upper = (idx % 2 == 0) & (idx > 0)
    on_upper &= e == edges[np.maximum(idx - 1, 0)]
    in_band |= on_upper
    ordinal = np.where(in_band, (idx - 1) // 2, idx // 2 - 1)
    return ordinal, in_band


def band_index(e: float, table: BandTable):
    """能量所在能带序号，带隙返回 Gap(下方能带序号)"""
    ordinal, in_band = _locate(np.atleast_1d(np.asarray(e, dtype=float)), table)
    if in_band[0]:
        return int(ordinal[0])
    return Gap(int(ordinal[0]))


def _phase_parts(e, lattice: Lattice) -> Tuple[np.ndarray, np.ndarray]:
    """返回 (-bc, ad)，带内两者均非负"""
    r = half_slope_propagator(e, True, lattice)
    return -(r.b * r.c), r.a * r.d


def phi(e, lattice: Lattice):
    """带内相位 Φ = 2·arctan√(-bc/(ad))，取值 [0, π]，等于 arccos(Δ/2)"""
    minus_bc, ad = _phase_parts(e, lattice)
    tolerance = settings.numerics.radicand_tolerance
    if np.any(minus_bc < -tolerance) or np.any(ad < -tolerance):
        raise OutOfBandError("phase requested outside an allowed band")
    value = 2.0 * np.arctan2(np.sqrt(np.clip(minus_bc, 0.0, None)), np.sqrt(np.clip(ad, 0.0, None)))
    return float(value) if np.ndim(value) == 0 else value


def phi_from_discriminant(e, lattice: Lattice):
    """arccos(Δ/2)，用于交叉验证"""
    value = np.arccos(np.clip(np.asarray(discriminant(e, lattice)) / 2.0, -1.0, 1.0))
    return float(value) if np.ndim(value) == 0 else value


def _edge_distance(e: np.ndarray, table: BandTable) -> np.ndarray:
    edges = table.edges
    if edges.size == 0:
        return np.full_like(e, np.inf)
    return np.min(np.abs(e[..., None] - edges), axis=-1)


def phi_prime(e, lattice: Lattice, table: Optional[BandTable] = None):
    """dΦ/de = -(b'c + bc')/√(-bc·ad)"""
    e_arr = np.asarray(e, dtype=float)
    if table is not None and np.any(_edge_distance(np.atleast_1d(e_arr), table) < settings.numerics.edge_guard):
        raise EdgeGuardError("phase derivative requested within the edge guard")
    r = half_slope_propagator(e_arr, True, lattice)
    dr = half_slope_derivative(e_arr, lattice)
    radicand = -(r.b * r.c) * (r.a * r.d)
    if np.any(radicand <= 0.0):
        raise OutOfBandError("phase derivative requested outside a band interior")
    value = -(dr.b * r.c + r.b * dr.c) / np.sqrt(radicand)
    return float(value) if np.ndim(value) == 0 else value


def phi_prime_numeric(e: float, lattice: Lattice, table: BandTable) -> float:
    """中心差分 + Richardson 外推的 dΦ/de"""
    distance = float(_edge_distance(np.atleast_1d(float(e)), table)[0])
    h = min(settings.numerics.derivative_step, distance / 4.0)
    if h <= settings.numerics.edge_guard:
        raise EdgeGuardError(f"e={e} is too close to a band edge for numerical differentiation")

    def central(step):
        return (phi(e + step, lattice) - phi(e - step, lattice)) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def _band_phase(e: np.ndarray, p: np.ndarray, lattice: Lattice, table: BandTable) -> np.ndarray:
    """带内相位；距带边不足保护距离时取带边值(周期边 0，反周期边 π)

    深能带宽度可能低于双精度分辨率，此时整条带都按带边处理。
    """
    guard = settings.numerics.edge_guard
    lower = table.edges[2 * p]
    upper = table.edges[2 * p + 1]
    near_lower = np.abs(e - lower) <= guard
    near_upper = (np.abs(e - upper) <= guard) & ~near_lower
    even = p % 2 == 0
    result = np.empty_like(e)
    result[near_lower] = np.where(even[near_lower], 0.0, np.pi)
    result[near_upper] = np.where(even[near_upper], np.pi, 0.0)
    interior = ~(near_lower | near_upper)
    if np.any(interior):
        result[interior] = phi(e[interior], lattice)
    return result


def ids(e, lattice: Lattice, table: BandTable):
    """积分态密度(每 2L0 长度的态数)

    带隙内为 (p+1)/2；带 p 内偶数带为 p/2 + Φ/(2π)，奇数带为 p/2 + 1/2 - Φ/(2π)。
    """
    e_arr = np.atleast_1d(np.asarray(e, dtype=float))
    ordinal, in_band = _locate(e_arr, table)
    result = (ordinal + 1) / 2.0
    if np.any(in_band):
        p = ordinal[in_band]
        theta = _band_phase(e_arr[in_band], p, lattice, table)
        result[in_band] = np.where(
            p % 2 == 0,
            p / 2.0 + theta / (2.0 * np.pi),
            p / 2.0 + 0.5 - theta / (2.0 * np.pi),
        )
    return float(result[0]) if np.ndim(e) == 0 else result


def ids_per_length(e, lattice: Lattice, table: BandTable):
    """每 Å 的态数，需要 l0"""
    if lattice.l0 is None:
        raise ValueError("l0 is required for a per-length IDS")
    return ids(e, lattice, table) / (2.0 * lattice.l0)


def dos(e, lattice: Lattice, table: BandTable):
    """态密度 dI/de，带隙内为 0；距离带边小于保护距离时报错"""
    e_arr = np.atleast_1d(np.asarray(e, dtype=float))
    if np.any(_edge_distance(e_arr, table) < settings.numerics.edge_guard):
        raise EdgeGuardError("density of states requested within the edge guard")
    ordinal, in_band = _locate(e_arr, table)
    result = np.zeros_like(e_arr)
    if np.any(in_band):
        p = ordinal[in_band]
        sign = np.where(p % 2 == 0, 1.0, -1.0)
        result[in_band] = sign * np.atleast_1d(phi_prime(e_arr[in_band], lattice)) / (2.0 * np.pi)
    return float(result[0]) if np.ndim(e) == 0 else result


def band_integral(band: Band, lattice: Lattice, table: BandTable) -> float:
    """∫ dos de 在一个能带上的值，理论值 1/2

    两半分别替换 e = e_min + t² 与 e = e_max - t²，消去边缘奇异性。
    """
    half = np.sqrt(band.width / 2.0)

    def lower(t):
        t = max(t, INTEGRAL_T_FLOOR)
        return 2.0 * t * dos(band.e_min + t * t, lattice, table)

    def upper(t):
        t = max(t, INTEGRAL_T_FLOOR)
        return 2.0 * t * dos(band.e_max - t * t, lattice, table)

    low_part, _ = integrate.quad(lower, 0.0, half, epsabs=1e-13, epsrel=1e-11, limit=200)
    high_part, _ = integrate.quad(upper, 0.0, half, epsabs=1e-13, epsrel=1e-11, limit=200)
    return low_part + high_part


def _edge_window(band: Band, window: Optional[float]) -> float:
    base = settings.numerics.edge_window if window is None else window
    return min(base, band.width / 100.0)


def edge_coefficient(
    band_p: int,
    side: Literal["lower", "upper"],
    lattice: Lattice,
    table: BandTable,
    window: Optional[float] = None,
) -> EdgeCoefficient:
    """带边平方根系数 k 与 r

    在 δ = d, d/2, d/4 处取 |IDS - IDS(edge)|/√δ 与 DOS·√δ，按 δ 做两级
    Richardson 外推；两级结果偏差过大或 r/k 偏离 1/2 超过 2% 时报错。
    """
    band = table.band(band_p)
    d = _edge_window(band, window)
    if side == "lower":
        edge, direction, plateau = band.e_min, 1.0, band_p / 2.0
    else:
        edge, direction, plateau = band.e_max, -1.0, (band_p + 1) / 2.0

    deltas = np.array([d, d / 2.0, d / 4.0])
    energies = edge + direction * deltas
    k_samples = np.abs(np.asarray(ids(energies, lattice, table)) - plateau) / np.sqrt(deltas)
    r_samples = np.asarray(dos(energies, lattice, table)) * np.sqrt(deltas)

    def extrapolate(samples: np.ndarray) -> Tuple[float, float]:
        first = 2.0 * samples[1] - samples[0]
        second = 2.0 * samples[2] - samples[1]
        return (4.0 * second - first) / 3.0, abs(second - first)

    k_value, k_drift = extrapolate(k_samples)
    r_value, r_drift = extrapolate(r_samples)
    if not np.isfinite(k_value) or k_drift > 1e-3 * abs(k_value) or r_drift > 1e-3 * abs(r_value):
        raise ExtrapolationError(
            f"edge coefficient of band {band_p} ({side}) did not converge: drift k={k_drift:.3g}, r={r_drift:.3g}"
        )
    if abs(r_value / k_value - 0.5) > 0.01:
        raise ExtrapolationError(
            f"edge coefficients of band {band_p} ({side}) violate r = k/2: k={k_value}, r={r_value}"
        )
    return EdgeCoefficient(p=band_p, side=side, edge=edge, k_value=k_value, r_value=r_value, window=d)


def edge_exponent(
    band_p: int,
    side: Literal["lower", "upper"],
    lattice: Lattice,
    table: BandTable,
    quantity: Literal["ids", "dos"] = "dos",
    window: Tuple[float, float] = (1e-6, 1e-3),
    points: int = 25,
) -> float:
    """带边附近 |IDS 增量| 或 DOS 对距离的双对数斜率"""
    band = table.band(band_p)
    lo, hi = window
    hi = min(hi, band.width / 4.0)
    if hi <= lo:
        raise ValueError(f"band {band_p} is narrower than the requested window")
    deltas = np.geomspace(lo, hi, points)
    if side == "lower":
        energies, plateau = band.e_min + deltas, band_p / 2.0
    else:
        energies, plateau = band.e_max - deltas, (band_p + 1) / 2.0
    if quantity == "ids":
        values = np.abs(np.asarray(ids(energies, lattice, table)) - plateau)
    else:
        values = np.asarray(dos(energies, lattice, table))
    slope, _ = np.polyfit(np.log(deltas), np.log(values), 1)
    return float(slope)


def _top_ratios(e, lattice: Lattice) -> Tuple[np.ndarray, np.ndarray]:
    """τ0 = Ai/Bi 与 τ1 = Ai'/Bi' 在 t1 = -κe 处的值"""
    t1 = -lattice.kappa * np.asarray(e, dtype=float)
    q = airy_eval_scaled(t1)
    damping = np.exp(-2.0 * np.asarray(q.log_scale, dtype=float))
    if np.any(np.abs(q.bi_s) < 1e-300) or np.any(np.abs(q.bip_s) < 1e-300):
        raise ValueError("Bi or Bi' vanishes at the top of the slope")
    return q.ai_s / q.bi_s * damping, q.aip_s / q.bip_s * damping


def phi_asymptotic(e, lattice: Lattice):
    """大 κ 下 tan(Φ/2) 的近似

    阱底处用 Ai、Bi 的振荡渐近式，φ = ζ + π/4，ζ = (2/3)(κ(1+e))^(3/2)：
    tan²(Φ/2) ≈ -(sinφ - τ0cosφ)(cosφ + τ1sinφ) / ((cosφ + τ0sinφ)(sinφ - τ1cosφ))。
    """
    if not np.all(np.asarray(np.abs(discriminant(e, lattice))) <= 2.0):
        raise OutOfBandError("asymptotic phase requested outside a band")
    tau0, tau1 = _top_ratios(e, lattice)
    zeta = (2.0 / 3.0) * (lattice.kappa * (1.0 + np.asarray(e, dtype=float))) ** 1.5
    angle = zeta + np.pi / 4.0
    s, c = np.sin(angle), np.cos(angle)
    numerator = (s - tau0 * c) * (c + tau1 * s)
    denominator = (c + tau0 * s) * (s - tau1 * c)
    radicand = -numerator / denominator
    if np.any(radicand < 0.0):
        raise OutOfBandError("asymptotic radicand is negative; the energy lies outside the asymptotic band")
    value = np.sqrt(radicand)
    return float(value) if np.ndim(value) == 0 else value


def literal_asymptotic_ratio(e, lattice: Lattice):
    """简化比值 (τ0 - 1/τ1 - 2cosζ)/(τ1 - 1/τ0 + 2cosζ) 的原始值，符号不作保证"""
    tau0, tau1 = _top_ratios(e, lattice)
    zeta = (2.0 / 3.0) * (lattice.kappa * (1.0 + np.asarray(e, dtype=float))) ** 1.5
    value = (tau0 - 1.0 / tau1 - 2.0 * np.cos(zeta)) / (tau1 - 1.0 / tau0 + 2.0 * np.cos(zeta))
    return float(value) if np.ndim(value) == 0 else value


def _segments(table: BandTable, e_lo: float, e_hi: float) -> List[Tuple[str, int, float, float]]:
    """把 [e_lo, e_hi] 切成能带段与带隙段"""
    pieces = []
    cursor = e_lo
    below = -1
    for band in table.bands:
        if band.e_max < e_lo:
            below = band.p
            continue
        if band.e_min > e_hi:
            break
        if band.e_min > cursor:
            pieces.append(("gap", below, cursor, band.e_min))
        start, stop = max(band.e_min, e_lo), min(band.e_max, e_hi)
        pieces.append(("band", band.p, start, stop))
        cursor = stop
        below = band.p
    if cursor < e_hi:
        pieces.append(("gap", below, cursor, e_hi))
    return pieces


def _segment_rows(kind: str, p: int, lo: float, hi: float, count: int, lattice: Lattice,
                  table: BandTable, edge_margin: float) -> List[dict]:
    if kind == "gap":
        energies = np.linspace(lo, hi, count + 2)[1:-1]
        plateau = (p + 1) / 2.0
        return [
            {"e": float(e), "p": p, "phi": np.nan, "ids": plateau, "dos": 0.0, "flag": "gap"}
            for e in energies
        ]

    # Chebyshev 节点在带边加密，且不落在带边上
    j = np.arange(count)
    energies = 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(np.pi * (j + 0.5) / count)
    energies = np.concatenate([[lo], energies, [hi]])
    distance = _edge_distance(energies, table)
    guarded = distance < max(edge_margin, settings.numerics.edge_guard)
    ids_values = np.asarray(ids(energies, lattice, table))
    phases = _band_phase(energies, np.full(len(energies), p), lattice, table)
    dos_values = np.full_like(energies, np.nan)
    if np.any(~guarded):
        dos_values[~guarded] = dos(energies[~guarded], lattice, table)
    return [
        {
            "e": float(energies[i]),
            "p": p,
            "phi": float(phases[i]),
            "ids": float(ids_values[i]),
            "dos": float(dos_values[i]),
            "flag": "edge-guard" if guarded[i] else "band",
        }
        for i in range(len(energies))
    ]


def tabulate(
    lattice: Lattice,
    e_range: Tuple[float, float],
    n_points: Optional[int] = None,
    edge_margin: Optional[float] = None,
    unit: Literal["dimensionless", "eV"] = "dimensionless",
    table: Optional[BandTable] = None,
) -> SpectralTable:
    """按能带分段采样 IDS 与 DOS，行按能量升序排列"""
    e_lo, e_hi = e_range
    if not -1.0 <= e_lo < e_hi:
        raise ValueError(f"invalid energy range {e_range}")
    n_points = settings.table.default_points if n_points is None else n_points
    edge_margin = settings.table.edge_margin if edge_margin is None else edge_margin
    if unit == "eV" and lattice.v0 is None:
        raise ValueError("eV output requires v0")
    if table is None or table.coverage_top < e_hi:
        table = band_edges(lattice, e_hi)

    pieces = _segments(table, e_lo, e_hi)
    total = e_hi - e_lo
    counts = [
        max(4 if kind == "band" else 2, int(round(n_points * (hi - lo) / total)))
        for kind, _, lo, hi in pieces
    ]

    with ThreadPoolExecutor(max_workers=settings.table.max_workers) as executor:
        futures = [
            executor.submit(_segment_rows, kind, p, lo, hi, count, lattice, table, edge_margin)
            for (kind, p, lo, hi), count in zip(pieces, counts)
        ]
        rows = [row for future in futures for row in future.result()]

    frame = pd.DataFrame(rows).sort_values("e", kind="mergesort").reset_index(drop=True)
    scale = lattice.energy_scale if unit == "eV" else 1.0
    frame["E"] = frame["e"] * scale
    frame["dos"] = frame["dos"] / scale
    frame = frame[TABLE_COLUMNS]
    logger.info(f"tabulated {len(frame)} rows over [{e_lo}, {e_hi}] for kappa={lattice.kappa}")
    return SpectralTable(frame=frame, kappa=lattice.kappa, unit=unit)
