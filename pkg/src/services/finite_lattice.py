"""
有限晶格服务
2N+1 个势阱(两侧 V=0)的束缚态：久期函数、Sturm 节点计数、本征值与收敛性
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize, stats

from config.settings import settings
from models.errors import CountMismatchError
from models.finite import ConvergenceReport, FiniteSpectrum
from models.lattice import BandTable, Lattice, Mat2

from .lattice_model import airy_segment_propagator, band_edges, half_slope_propagator
from .spectral_density import ids

logger = logging.getLogger(__name__)

Pairing = Literal["decaying", "literal"]

# 连续谱阈值下方的上限
E_TOP = -1e-12


def boundary_vectors(e: float, kappa: float) -> Tuple[np.ndarray, np.ndarray]:
    """外区指数解 exp(∓k·s) 在 (ψ, dψ/ds) 中的方向，k = κ^(3/2)·√(-e)

    返回 (左, 右) = ((1, -k), (1, k))。
    """
    if e >= 0:
        raise ValueError("boundary vectors exist only for e < 0")
    k = kappa ** 1.5 * np.sqrt(-e)
    return np.array([1.0, -k]), np.array([1.0, k])


def _secular_parts(e, n_half: int, lattice: Lattice, pairing: Pairing) -> Dict[str, np.ndarray]:
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if np.any(e >= 0):
        raise ValueError("the secular function is defined for e < 0")
    kappa = lattice.kappa
    n = 2 * n_half + 1

    r = half_slope_propagator(e, True, lattice)
    m_t = r @ Mat2(a=r.d, b=r.b, c=r.c, d=r.a)
    # (ψ, dψ/dt) → (ψ, dψ/ds)
    m11, m12, m21, m22 = m_t.a, m_t.b / kappa, m_t.c * kappa, m_t.d

    k = kappa ** 1.5 * np.sqrt(-e)
    u0 = np.ones_like(e)
    # 左侧外区 exp(k·s) 在 -∞ 衰减；literal 取字面的 (1, -k)
    u1 = k if pairing == "decaying" else -k
    x_term = k * (m11 * u0 + m12 * u1) + (m21 * u0 + m22 * u1)
    y_term = k * u0 + u1

    bc = r.b * r.c
    ad = r.a * r.d
    in_band = (bc <= 0.0) & (ad >= 0.0)

    theta = 2.0 * np.arctan2(np.sqrt(np.clip(-bc, 0.0, None)), np.sqrt(np.clip(ad, 0.0, None)))
    sin_theta = 2.0 * np.sqrt(np.clip(-bc * ad, 0.0, None))
    big_a = x_term - y_term * np.cos(theta)
    big_b = y_term * sin_theta
    g_band = big_a * np.sin(n * theta) + big_b * np.cos(n * theta)

    sigma = np.where(bc > 0.0, 1.0, -1.0)
    gamma = np.where(
        sigma > 0.0,
        2.0 * np.arcsinh(np.sqrt(np.clip(bc, 0.0, None))),
        2.0 * np.arcsinh(np.sqrt(np.clip(-ad, 0.0, None))),
    )
    grow_n = -np.expm1(-2.0 * n * gamma)
    grow_prev = np.exp(-gamma) * -np.expm1(-2.0 * (n - 1) * gamma)
    g_gap = grow_n * x_term - sigma * grow_prev * y_term

    return {
        "e": e,
        "n": n,
        "in_band": in_band,
        "theta": theta,
        "sin_theta": sin_theta,
        "g_band": g_band,
        "gamma": gamma,
        "sigma": sigma,
        "g_gap": g_gap,
        "x_term": x_term,
        "y_term": y_term,
    }


def secular_function(e, n_half: int, lattice: Lattice, pairing: Pairing = "decaying"):
    """久期函数 f(e) = ⟨w, M^(2N+1) v⟩ 的 (符号, ln|f|)

    带内 f = (A·sin nθ + B·cos nθ)/sinθ；带隙内按 exp(nγ) 提出公因子避免溢出。
    """
    parts = _secular_parts(e, n_half, lattice, pairing)
    n = parts["n"]
    with np.errstate(divide="ignore"):
        band_log = np.log(np.abs(parts["g_band"])) - np.log(parts["sin_theta"])
        gap_log = (
            n * parts["gamma"]
            + np.log(np.abs(parts["g_gap"]))
            - np.log(2.0 * np.sinh(parts["gamma"]))
        )
    # 带边 sinθ = 0 时取 Chebyshev 极限 n·X - (n-1)·Y·(±1)
    edge = parts["in_band"] & (parts["sin_theta"] == 0.0)
    if np.any(edge):
        sign_edge = np.where(parts["theta"][edge] > np.pi / 2, -1.0, 1.0)
        limit = sign_edge ** (n - 1) * (
            n * parts["x_term"][edge] - sign_edge * (n - 1) * parts["y_term"][edge]
        )
        parts["g_band"] = parts["g_band"].copy()
        parts["g_band"][edge] = limit
        band_log = band_log.copy()
        with np.errstate(divide="ignore"):
            band_log[edge] = np.log(np.abs(limit))
    sign = np.where(parts["in_band"], np.sign(parts["g_band"]), np.sign(parts["g_gap"]))
    log_abs = np.where(parts["in_band"], band_log, gap_log)
    if np.ndim(e) == 0:
        return float(sign[0]), float(log_abs[0])
    return sign, log_abs


def _segment_function(kind: str, n_half: int, lattice: Lattice, pairing: Pairing):
    key = "g_band" if kind == "band" else "g_gap"

    def evaluate(e):
        return _secular_parts(e, n_half, lattice, pairing)[key]

    return evaluate


def level_count(energies, kappa: float, depth_ratios) -> np.ndarray:
    """能量 e 以下的束缚态个数(Sturm 振荡定理)

    从左侧衰减解出发逐阱传播，每个半坡切成足够短的子段使每段至多一个
    节点，节点数即为 ψ 的变号次数，再加上右侧外区可能的一个零点。
    depth_ratios 形状 (S, n) 或 (n,)，第 j 个阱深为 V0·D_j；
    energies 可广播到 (S, G)。返回形状 (S, G) 或 (G,)。
    """
    ratios = np.asarray(depth_ratios, dtype=float)
    single = ratios.ndim == 1
    ratios = np.atleast_2d(ratios)
    samples, n_wells = ratios.shape
    e = np.asarray(energies, dtype=float)
    if e.ndim <= 1:
        e = np.broadcast_to(np.atleast_1d(e)[None, :], (samples, np.atleast_1d(e).size))
    else:
        e = np.broadcast_to(e, (samples, e.shape[-1]))
    if np.any(e >= 0):
        raise ValueError("level counting is defined for e < 0")
    if np.any(ratios <= 0):
        raise ValueError("depth ratios must be positive")

    omega = np.sqrt(kappa ** 3 * max(float(np.max(ratios)) + float(np.max(e)), 0.0))
    pieces = int(np.floor(omega / np.pi)) + 1
    offsets = np.linspace(0.0, 1.0, pieces + 1)

    k = kappa ** 1.5 * np.sqrt(-e)
    psi = np.ones_like(e)
    dpsi = k.copy()
    zeros = np.zeros(e.shape, dtype=np.int64)

    for j in range(n_wells):
        depth = ratios[:, j:j + 1]
        kap = kappa * np.cbrt(depth)
        e_well = e / depth
        # 下降半坡 r 从 -1 到 0，t = κ_n(-r - 1 - e_n)；上升半坡 r 从 0 到 1
        for orientation, start, stop in ((-1.0, -1.0, 0.0), (1.0, 0.0, 1.0)):
            nodes = start + (stop - start) * offsets
            for i in range(pieces):
                t_a = kap * (orientation * nodes[i] - 1.0 - e_well)
                t_b = kap * (orientation * nodes[i + 1] - 1.0 - e_well)
                step = airy_segment_propagator(t_a, t_b)
                new_psi, new_dt = step.apply(psi, orientation * dpsi / kap)
                new_dpsi = orientation * kap * new_dt
                zeros += (psi * new_psi < 0.0)
                scale = np.hypot(new_psi, new_dt)
                psi = new_psi / scale
                dpsi = new_dpsi / scale

    # 右侧外区 ψ = A·exp(kτ) + B·exp(-kτ)，τ > 0 处有零点当且仅当 -B/A > 1
    grow = 0.5 * (psi + dpsi / k)
    decay = 0.5 * (psi - dpsi / k)
    with np.errstate(divide="ignore", invalid="ignore"):
        exterior = (grow != 0.0) & (-decay / grow > 1.0)
    zeros += exterior
    return zeros[0] if single else zeros


def node_count(e, n_half: int, lattice: Lattice):
    """周期势截断晶格在 e 以下的能级数"""
    counts = level_count(e, lattice.kappa, np.ones(2 * n_half + 1))
    return int(counts[0]) if np.ndim(e) == 0 else counts


def _scan_nodes(lo: float, hi: float, count: int) -> np.ndarray:
    # 久期函数在带边与隙边恒为零，只取内点
    u = np.pi * (np.arange(count) + 0.5) / count
    return 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(u)


def _segment_roots(kind: str, lo: float, hi: float, count: int, n_half: int,
                   lattice: Lattice, pairing: Pairing) -> List[float]:
    evaluate = _segment_function(kind, n_half, lattice, pairing)
    grid = _scan_nodes(lo, hi, count)
    values = evaluate(grid)
    xtol = settings.numerics.root_xtol
    roots = [float(grid[i]) for i in np.nonzero(values == 0.0)[0]]
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        root = optimize.brentq(lambda x: float(evaluate(x)[0]), grid[i], grid[i + 1], xtol=xtol, maxiter=200)
        roots.append(float(root))
    return sorted(roots)


def _bisect_levels(lo: float, hi: float, first: int, last: int, n_half: int, lattice: Lattice) -> List[float]:
    """按计数二分定位第 first..last-1 个能级"""
    targets = np.arange(first, last)
    lower = np.full(targets.shape, lo)
    upper = np.full(targets.shape, hi)
    ratios = np.ones(2 * n_half + 1)
    while np.max(upper - lower) > settings.numerics.root_xtol:
        middle = 0.5 * (lower + upper)
        counts = level_count(middle, lattice.kappa, ratios)
        above = counts > targets
        upper = np.where(above, middle, upper)
        lower = np.where(above, lower, middle)
    return [float(value) for value in 0.5 * (lower + upper)]


def _segments(table: BandTable) -> List[Tuple[str, int, float, float]]:
    pieces = []
    for band in table.bands:
        if band.e_min >= E_TOP:
            break
        pieces.append(("band", band.p, band.e_min, min(band.e_max, E_TOP)))
        if band.e_max >= E_TOP:
            break
        following = table.bands[band.p + 1].e_min if band.p + 1 < len(table.bands) else E_TOP
        stop = min(following, E_TOP)
        if stop > band.e_max:
            pieces.append(("gap", band.p, band.e_max, stop))
    return pieces


def _solve_segment(kind: str, p: int, lo: float, hi: float, first: int, last: int,
                   n_half: int, lattice: Lattice, strict: bool, pairing: Pairing) -> List[float]:
    expected = last - first
    n = 2 * n_half + 1
    count = settings.finite.nodes_per_level * (n + 1) if kind == "band" else settings.finite.nodes_per_level * 4
    roots: List[float] = []
    for _ in range(settings.finite.max_refinements + 1):
        roots = _segment_roots(kind, lo, hi, count, n_half, lattice, pairing) if expected or kind == "band" else []
        if len(roots) == expected:
            return roots
        count *= 2
    label = {"band": p} if kind == "band" else {"gap": p}
    message = f"{kind} {p}: secular scan found {len(roots)} levels, node count gives {expected}"
    if strict:
        raise CountMismatchError(message, found=len(roots), expected=expected, **label)
    logger.warning(f"{message}; locating them by count bisection")
    return _bisect_levels(lo, hi, first, last, n_half, lattice)


def eigenvalues(
    n_half: int,
    lattice: Lattice,
    table: Optional[BandTable] = None,
    strict: bool = False,
    pairing: Pairing = "decaying",
) -> FiniteSpectrum:
    """有限晶格 H_(2N+1) 在 e < 0 的全部本征值

    每个能带与带隙内先扫描久期函数的变号再用 brentq 细化，并与 Sturm
    节点计数逐段核对；strict 时核对失败抛出 CountMismatchError。
    """
    if n_half < 0:
        raise ValueError("N must be non-negative")
    table = table if table is not None else band_edges(lattice, 0.0)
    pieces = _segments(table)
    if not pieces:
        return FiniteSpectrum(n_half=n_half, kappa=lattice.kappa, eigenvalues=np.array([]))

    boundaries = np.array([pieces[0][2]] + [piece[3] for piece in pieces])
    counts = node_count(boundaries, n_half, lattice)
    if counts[0] != 0:
        raise CountMismatchError(
            f"{counts[0]} levels below the bottom of band 0", gap=-1, found=0, expected=int(counts[0])
        )

    with ThreadPoolExecutor(max_workers=settings.finite.max_workers) as executor:
        futures = [
            executor.submit(
                _solve_segment, kind, p, lo, hi, int(counts[i]), int(counts[i + 1]),
                n_half, lattice, strict, pairing,
            )
            for i, (kind, p, lo, hi) in enumerate(pieces)
        ]
        found = [future.result() for future in futures]

    per_band: Dict[int, int] = {}
    per_gap: Dict[int, int] = {}
    levels = []
    for (kind, p, _, _), roots in zip(pieces, found):
        (per_band if kind == "band" else per_gap)[p] = len(roots)
        label = str(p) if kind == "band" else f"gap{p}"
        levels.extend((value, label) for value in roots)
    levels.sort(key=lambda item: item[0])
    values = np.array([value for value, _ in levels])
    logger.info(
        f"N={n_half}, kappa={lattice.kappa}: {len(values)} levels, per band {per_band}, in gaps {per_gap}"
    )
    return FiniteSpectrum(
        n_half=n_half,
        kappa=lattice.kappa,
        eigenvalues=values,
        per_band_counts=per_band,
        per_gap_counts=per_gap,
        labels=tuple(label for _, label in levels),
    )


def counting_function(e, spectrum: FiniteSpectrum):
    """I_N(e) = #{本征值 <= e} / (2(2N+1))"""
    counts = np.searchsorted(spectrum.eigenvalues, np.asarray(e, dtype=float), side="right")
    value = counts / (2.0 * spectrum.n_atoms)
    return float(value) if np.ndim(value) == 0 else value


def spectrum_frame(spectrum: FiniteSpectrum, lattice: Lattice,
                   unit: Literal["dimensionless", "eV"] = "dimensionless") -> pd.DataFrame:
    """列 index, e, E_unit, band"""
    scale = lattice.energy_scale if unit == "eV" else 1.0
    return pd.DataFrame({
        "index": np.arange(len(spectrum.eigenvalues)),
        "e": spectrum.eigenvalues,
        "E_unit": spectrum.eigenvalues * scale,
        "band": list(spectrum.labels),
    })


def convergence_report(
    lattice: Lattice,
    n_list: Sequence[int],
    grid: Optional[np.ndarray] = None,
    table: Optional[BandTable] = None,
) -> ConvergenceReport:
    """sup/mean |I_N - I| 随 N 的变化以及衰减指数"""
    table = table if table is not None else band_edges(lattice, 0.0)
    if grid is None:
        bottom = table.bands[0].e_min
        grid = np.linspace(max(-1.0, bottom - 0.01), -1e-6, settings.finite.convergence_grid_points)
    grid = np.asarray(grid, dtype=float)
    reference = np.asarray(ids(grid, lattice, table))

    rows = []
    worst = []
    for n_half in n_list:
        spectrum = eigenvalues(n_half, lattice, table)
        error = np.abs(counting_function(grid, spectrum) - reference)
        rows.append({"N": int(n_half), "sup_error": float(error.max()), "mean_error": float(error.mean())})
        worst.append(float(grid[int(np.argmax(error))]))

    frame = pd.DataFrame(rows, columns=["N", "sup_error", "mean_error"])
    usable = frame[(frame["N"] > 0) & (frame["sup_error"] > 0)]
    exponent = float("nan")
    if len(usable) >= 2:
        exponent = float(stats.linregress(np.log(usable["N"]), np.log(usable["sup_error"])).slope)
    logger.info(f"convergence for kappa={lattice.kappa}: decay exponent {exponent:.3f}")
    return ConvergenceReport(kappa=lattice.kappa, frame=frame, decay_exponent=exponent, worst_energies=worst)
