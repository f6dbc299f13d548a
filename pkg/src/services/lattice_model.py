"""
周期锯齿晶格模型
势能、半坡传播矩阵、单胞单值矩阵、判别式与能带扫描

坐标约定：s = x/L0，e = E/V0，方程 ψ_ss = κ³(|s| - 1 - e)ψ。
上升半坡 s∈[0,1] 上令 t = κ(s - 1 - e)，则 ψ_tt = tψ，端点
t0 = -κ(1+e)，t1 = -κe；传播矩阵作用于 (ψ, dψ/dt)。
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from config.settings import settings
from models.errors import BandScanError, PropagatorOverflowError
from models.lattice import Band, BandTable, Lattice, Mat2, kappa_from_physical

from .airy_core import airy_eval_scaled

logger = logging.getLogger(__name__)

# exp 的安全上限
MAX_EXPONENT = 700.0

# e 非常接近 -1 时 t0 → 0，扫描下端留出的余量
SCAN_FLOOR_OFFSET = 1e-10

# 带宽低于该倍数的机器精度时视为退化能带
RESOLUTION_ULPS = 64

# 扫描上限最多加倍次数
MAX_WIDENINGS = 8

__all__ = [
    "kappa_from_physical",
    "potential",
    "airy_segment_propagator",
    "half_slope_propagator",
    "half_slope_derivative",
    "monodromy",
    "discriminant",
    "discriminant_derivative",
    "spectrum_indicator",
    "product_indicator",
    "band_index_formula",
    "band_edges",
    "leading_bands",
]


def potential(x, lattice: Lattice):
    """周期锯齿势 V(x) = V0(-1 + |x|/L0)，周期 2L0

    lattice 带有物理参数时 x 以 Å 计、返回 eV；否则为无量纲。
    """
    l0 = lattice.l0 if lattice.l0 is not None else 1.0
    v0 = lattice.v0 if lattice.v0 is not None else 1.0
    s = np.asarray(x, dtype=float) / l0
    r = np.mod(s + 1.0, 2.0) - 1.0
    value = v0 * (np.abs(r) - 1.0)
    return float(value) if np.ndim(value) == 0 else value


def airy_segment_propagator(t_a, t_b) -> Mat2:
    """沿 Airy 变量从 t_a 到 t_b 的传播矩阵 W(t_b)W(t_a)^-1

    作用于 (ψ, dψ/dt)，行列式为 1。使用缩放 Airy 值，指数因子合并后再求幂。
    """
    qa = airy_eval_scaled(t_a)
    qb = airy_eval_scaled(t_b)
    growth = np.asarray(qb.log_scale, dtype=float) - np.asarray(qa.log_scale, dtype=float)
    if np.any(np.abs(growth) > MAX_EXPONENT):
        raise PropagatorOverflowError(
            f"propagator exponent {float(np.max(np.abs(growth))):.1f} exceeds {MAX_EXPONENT}"
        )
    up = np.exp(growth)
    down = np.exp(-growth)

    a = np.pi * (qb.ai_s * qa.bip_s * down - qb.bi_s * qa.aip_s * up)
    b = np.pi * (qb.bi_s * qa.ai_s * up - qb.ai_s * qa.bi_s * down)
    c = np.pi * (qb.aip_s * qa.bip_s * down - qb.bip_s * qa.aip_s * up)
    d = np.pi * (qb.bip_s * qa.ai_s * up - qb.aip_s * qa.bi_s * down)
    return Mat2(a=a, b=b, c=c, d=d)


def _slope_arguments(e, kappa: float) -> Tuple[np.ndarray, np.ndarray]:
    e = np.asarray(e, dtype=float)
    return -kappa * (1.0 + e), -kappa * e


def half_slope_propagator(e, rising: bool, lattice: Lattice) -> Mat2:
    """半坡传播矩阵

    上升半坡 R 从阱底 s=0 走到 s=1；下降半坡 F 从 s=-1 走到阱底，
    由镜像关系 F = J·R^-1·J 得到，J = diag(1, -1)。
    """
    t0, t1 = _slope_arguments(e, lattice.kappa)
    rise = airy_segment_propagator(t0, t1)
    if rising:
        return rise
    return Mat2(a=rise.d, b=rise.b, c=rise.c, d=rise.a)


def half_slope_derivative(e, lattice: Lattice) -> Mat2:
    """dR/de = -κ(A(t1)R - R·A(t0))，A(t) = [[0, 1], [t, 0]]"""
    kappa = lattice.kappa
    t0, t1 = _slope_arguments(e, kappa)
    r = half_slope_propagator(e, True, lattice)
    return Mat2(
        a=-kappa * (r.c - t0 * r.b),
        b=-kappa * (r.d - r.a),
        c=-kappa * (t1 * r.a - t0 * r.d),
        d=-kappa * (t1 * r.b - r.c),
    )


def monodromy(e, lattice: Lattice) -> Mat2:
    """一个周期(s 从 -1 到 1)的单值矩阵 M = R·F"""
    return half_slope_propagator(e, True, lattice) @ half_slope_propagator(e, False, lattice)


def discriminant(e, lattice: Lattice):
    """Δ(e) = tr M = 2(ad + bc) = 2 + 4bc"""
    r = half_slope_propagator(e, True, lattice)
    return 2.0 + 4.0 * r.b * r.c


def discriminant_derivative(e, lattice: Lattice):
    """dΔ/de = 4(b'c + bc')"""
    r = half_slope_propagator(e, True, lattice)
    dr = half_slope_derivative(e, lattice)
    return 4.0 * (dr.b * r.c + r.b * dr.c)


def spectrum_indicator(e, lattice: Lattice):
    """|Δ(e)| <= 2"""
    return np.abs(discriminant(e, lattice)) <= 2.0


def product_indicator(e, lattice: Lattice):
    """乘积判据 a·b·c·d <= 0，与 |Δ| <= 2 等价(Δ² - 4 = 16abcd)"""
    r = half_slope_propagator(e, True, lattice)
    return (r.b * r.c) * (r.a * r.d) <= 0.0


def band_index_formula(e, kappa: float):
    """p(e) = floor((4/(3π))·κ^(3/2)·(1+e)^(3/2))，仅对 e >= -1 定义"""
    e = np.asarray(e, dtype=float)
    if np.any(e < -1.0):
        raise ValueError("band index formula is defined for e >= -1")
    value = np.floor(4.0 / (3.0 * np.pi) * kappa ** 1.5 * (1.0 + e) ** 1.5).astype(int)
    return int(value) if np.ndim(value) == 0 else value


def _level_spacing(kappa: float, e_top: float) -> float:
    """由 p 公式估计的相邻能级间距(取扫描区间顶端，为最小值)"""
    slope = 2.0 / np.pi * kappa ** 1.5 * np.sqrt(1.0 + e_top)
    return 1.0 / slope


def _factor_roots(factor: np.ndarray, grid: np.ndarray, evaluate, xtol: float) -> List[float]:
    roots = []
    signs = np.sign(factor)
    exact = np.nonzero(signs == 0)[0]
    roots.extend(float(grid[i]) for i in exact)
    brackets = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    for i in brackets:
        roots.append(float(optimize.brentq(evaluate, grid[i], grid[i + 1], xtol=xtol, maxiter=200)))
    return roots


def _expected_kind(position: int) -> str:
    p, is_upper = divmod(position, 2)
    if (p % 2 == 0) != bool(is_upper):
        return "periodic"
    return "antiperiodic"


def _scan_edges(lattice: Lattice, e_lo: float, e_hi: float, step: float) -> List[Tuple[float, str]]:
    xtol = settings.numerics.root_xtol
    count = max(int(np.ceil((e_hi - e_lo) / step)), 2) + 1
    grid = np.linspace(e_lo, e_hi, count)
    rise = half_slope_propagator(grid, True, lattice)

    def entry(name):
        return lambda value: float(getattr(half_slope_propagator(value, True, lattice), name))

    edges = []
    for name, kind in (("b", "periodic"), ("c", "periodic"), ("a", "antiperiodic"), ("d", "antiperiodic")):
        for root in _factor_roots(getattr(rise, name), grid, entry(name), xtol):
            edges.append((root, kind))
    edges.sort(key=lambda item: item[0])
    return edges


def _resolution(e: float) -> float:
    """双精度下可分辨的最小能量间隔"""
    return RESOLUTION_ULPS * np.finfo(float).eps * max(1.0, abs(e))


def _repair_order(edges: List[Tuple[float, str]]) -> List[Tuple[float, str]]:
    """深能带宽度低于双精度分辨率时，两条带边的数值顺序可能颠倒，按交替规则换回"""
    repaired = list(edges)
    for position in range(len(repaired) - 1):
        here, there = repaired[position], repaired[position + 1]
        if here[1] == _expected_kind(position) or there[1] != _expected_kind(position):
            continue
        if there[0] - here[0] <= _resolution(here[0]):
            repaired[position], repaired[position + 1] = there, here
    return repaired


def _pair_edges(lattice: Lattice, edges: List[Tuple[float, str]]) -> Optional[List[Band]]:
    """按 P,A,A,P,P,A... 的交替顺序配对，不符合时返回 None"""
    if len(edges) % 2:
        return None
    edges = _repair_order(edges)
    for position, (_, kind) in enumerate(edges):
        if kind != _expected_kind(position):
            return None
    bands = []
    for p in range(len(edges) // 2):
        lower, upper = edges[2 * p], edges[2 * p + 1]
        e_min, e_max = min(lower[0], upper[0]), max(lower[0], upper[0])
        midpoint = 0.5 * (e_min + e_max)
        if e_max - e_min > _resolution(midpoint) and abs(float(discriminant(midpoint, lattice))) >= 2.0:
            return None
        bands.append(Band(p=p, e_min=e_min, e_max=e_max, lower_kind=lower[1], upper_kind=upper[1]))
    return bands


def band_edges(lattice: Lattice, e_ceiling: float, step: Optional[float] = None) -> BandTable:
    """e_ceiling 以下全部能带的边缘

    对传播矩阵四个元素分别扫描变号并用 brentq 细化：b、c 的根是周期边
    (Δ=2)，a、d 的根是反周期边(Δ=-2)。配对失败时步长减半重试。
    跨过 e_ceiling 的能带总是完整给出；小 κ 下它的上边可以远高于
    e_ceiling，扫描上限逐次加倍直到该能带闭合。
    """
    if e_ceiling <= -1.0:
        raise ValueError("e_ceiling must exceed the well bottom e = -1")

    kappa = lattice.kappa
    e_lo = -1.0 + SCAN_FLOOR_OFFSET
    if step is None:
        step = min(settings.numerics.scan_step, _level_spacing(kappa, e_ceiling) / 4.0)

    for attempt in range(settings.numerics.max_scan_halvings + 1):
        margin = 4.0 * _level_spacing(kappa, e_ceiling + 1.0)
        for _ in range(MAX_WIDENINGS):
            e_hi = e_ceiling + margin
            scan_step = min(step, _level_spacing(kappa, e_hi) / 4.0)
            edges = _scan_edges(lattice, e_lo, e_hi, scan_step)
            below = [item for item in edges if item[0] <= e_ceiling]
            keep = len(below) + (len(below) % 2)
            if keep <= len(edges):
                break
            margin *= 2.0
        else:
            raise BandScanError(f"band straddling e={e_ceiling} does not close below e={e_hi:g} for kappa={kappa}")

        bands = _pair_edges(lattice, edges[:keep])
        if bands is not None:
            logger.debug(
                f"kappa={kappa}: {len(bands)} bands below {e_ceiling} (step={scan_step:.3g}, attempt {attempt})"
            )
            return BandTable(kappa=kappa, bands=tuple(bands), e_ceiling=e_ceiling)
        logger.debug(f"kappa={kappa}: edge pairing failed at step={scan_step:.3g}, halving")
        step /= 2.0

    raise BandScanError(f"could not isolate band edges below e={e_ceiling} for kappa={kappa}")


def leading_bands(lattice: Lattice, max_band: int, step: Optional[float] = None) -> BandTable:
    """能带 p = 0..max_band，不论它们位于 e = 0 之上还是之下"""
    if max_band < 0:
        raise ValueError("max_band must be non-negative")

    kappa = lattice.kappa
    # p 公式反解得到的初始上限
    ceiling = (3.0 * np.pi * (max_band + 1) / (4.0 * kappa ** 1.5)) ** (2.0 / 3.0) - 1.0
    ceiling = max(ceiling, -0.5)
    for _ in range(MAX_WIDENINGS):
        table = band_edges(lattice, ceiling, step)
        if len(table.bands) > max_band:
            bands = table.bands[:max_band + 1]
            return BandTable(kappa=kappa, bands=bands, e_ceiling=bands[-1].e_max)
        ceiling = ceiling + 1.0 + abs(ceiling)

    raise BandScanError(f"could not reach band {max_band} for kappa={kappa}")
