"""
参考解服务
高精度 Airy 级数(mpmath)与有限差分本征值求解，仅用于交叉验证
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import linalg

from config.settings import settings
from models.errors import OracleError
from models.lattice import Lattice
from models.oracle import Boundary, FdProblem, FdResult

logger = logging.getLogger(__name__)

SERIES_LIMIT = 30.0
MAX_DIGITS = 50
BISECTION_STEPS = 200


def _series_sums(x, tol):
    """Maclaurin 级数 f, g 及其导数

    f = Σ t_k，t_k = t_(k-1)·x³/((3k-1)·3k)；g = Σ u_k，u_k = u_(k-1)·x³/(3k·(3k+1))。
    """
    x3 = x ** 3
    f, fp = mpmath.mpf(1), mpmath.mpf(0)
    g, gp = mpmath.mpf(x), mpmath.mpf(1)
    t, u = mpmath.mpf(1), mpmath.mpf(x)
    q, r = x * x / 2, mpmath.mpf(1)
    for k in range(1, settings.oracle.max_terms + 1):
        t = t * x3 / ((3 * k - 1) * 3 * k)
        u = u * x3 / (3 * k * (3 * k + 1))
        if k > 1:
            q = q * x3 / ((3 * k - 3) * (3 * k - 1))
        r = r * x3 / ((3 * k - 2) * 3 * k)
        f += t
        g += u
        fp += q
        gp += r
        if max(abs(t), abs(u), abs(q), abs(r)) < tol * max(abs(f), abs(g), abs(fp), abs(gp), 1):
            return f, g, fp, gp
    raise OracleError(f"Airy series at x={x} did not converge in {settings.oracle.max_terms} terms")


def _airy_series(x: float, digits: int) -> Tuple:
    with mpmath.workdps(digits):
        xm = mpmath.mpf(x)
        c1 = mpmath.mpf(3) ** (mpmath.mpf(-2) / 3) / mpmath.gamma(mpmath.mpf(2) / 3)
        c2 = mpmath.mpf(3) ** (mpmath.mpf(-1) / 3) / mpmath.gamma(mpmath.mpf(1) / 3)
        f, g, fp, gp = _series_sums(xm, mpmath.mpf(10) ** (-digits))
        root3 = mpmath.sqrt(3)
        ai = c1 * f - c2 * g
        bi = root3 * (c1 * f + c2 * g)
        aip = c1 * fp - c2 * gp
        bip = root3 * (c1 * fp + c2 * gp)
        return ai, bi, aip, bip


def reference_airy(x: float, digits: int = 30) -> Tuple:
    """高精度 (Ai, Bi, Ai', Bi')，返回 mpmath.mpf

    按级数相消估计保护位数，分别在两档精度下求和并比较，再用 Wronskian 校验。
    """
    if abs(x) > SERIES_LIMIT:
        raise OracleError(f"|x|={abs(x)} exceeds the series range {SERIES_LIMIT}")
    if digits > MAX_DIGITS or digits < 1:
        raise OracleError(f"digits must be within 1..{MAX_DIGITS}")

    # 负向量级 ~ exp(ζ) 的项相互抵消，ζ = (2/3)|x|^(3/2)
    zeta = 2.0 / 3.0 * abs(x) ** 1.5
    guard = int(2 * zeta / np.log(10)) + settings.oracle.guard_digits
    first = _airy_series(x, digits + guard)
    second = _airy_series(x, digits + guard + 10)

    with mpmath.workdps(digits + guard):
        for low, high in zip(first, second):
            scale = max(abs(high), mpmath.mpf(10) ** (-digits))
            if abs(low - high) > scale * mpmath.mpf(10) ** (-digits):
                raise OracleError(f"Airy series at x={x} is not stable to {digits} digits")
        ai, bi, aip, bip = second
        wronskian = ai * bip - aip * bi
        if abs(wronskian * mpmath.pi - 1) > mpmath.mpf(10) ** (-digits):
            raise OracleError(f"Wronskian check failed at x={x}")

    with mpmath.workdps(digits):
        return tuple(+value for value in second)


def reference_airy_scaled(x: float, digits: int = 30) -> Tuple:
    """指数缩放的高精度值 (Ai·e^ζ, Bi·e^-ζ, Ai'·e^ζ, Bi'·e^-ζ, ζ)，x > 0"""
    if x <= 0:
        raise OracleError("scaled reference values are defined for x > 0")
    with mpmath.workdps(digits + 10):
        xm = mpmath.mpf(x)
        zeta = 2 * xm * mpmath.sqrt(xm) / 3
        up, down = mpmath.exp(zeta), mpmath.exp(-zeta)
        values = (
            mpmath.airyai(xm) * up,
            mpmath.airybi(xm) * down,
            mpmath.airyai(xm, derivative=1) * up,
            mpmath.airybi(xm, derivative=1) * down,
            zeta,
        )
    with mpmath.workdps(digits):
        return tuple(+value for value in values)


def sturm_count(diag: np.ndarray, off: np.ndarray, corner: float, lam) -> np.ndarray:
    """对称(循环)三对角矩阵中小于 lam 的本征值个数

    LDLᵀ 分解的负主元个数。corner 为 (0, n-1) 元，0 时即普通三对角；
    消元时最后一列的填充项单独跟踪。lam 可为数组。
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    n = len(diag)
    if n < 3:
        raise OracleError("at least 3 grid points are required")
    tiny = np.finfo(float).tiny

    def safe(value):
        return np.where(value == 0.0, -tiny, value)

    pivot = safe(diag[0] - lam)
    count = (pivot < 0).astype(np.int64)
    column = np.full_like(lam, corner)
    last = diag[n - 1] - lam
    for i in range(n - 2):
        coupling = off[i]
        last = last - column ** 2 / pivot
        entry = off[n - 2] if i + 1 == n - 2 else 0.0
        column = entry - coupling * column / pivot
        pivot = safe(diag[i + 1] - lam - coupling ** 2 / pivot)
        count += pivot < 0
    last = last - column ** 2 / pivot
    count += last < 0
    return count


def _operator(problem: FdProblem, points: int) -> Tuple[np.ndarray, np.ndarray, float]:
    x, h = problem.grid(points)
    diag = 2.0 * problem.kinetic / h ** 2 + np.asarray(problem.potential(x), dtype=float)
    off = np.full(len(x) - 1, -problem.kinetic / h ** 2)
    corner = {"dirichlet": 0.0, "periodic": -problem.kinetic / h ** 2,
              "antiperiodic": problem.kinetic / h ** 2}[problem.boundary]
    return diag, off, corner


def _lowest(problem: FdProblem, points: int) -> np.ndarray:
    diag, off, corner = _operator(problem, points)
    if problem.boundary == "dirichlet":
        return linalg.eigvalsh_tridiagonal(
            diag, off, select="i", select_range=(0, problem.count - 1), lapack_driver="stebz"
        )

    targets = np.arange(problem.count)
    lower = np.full(problem.count, float(np.min(diag - 2.0 * abs(off[0]))) - 1.0)
    # 上界从势能最大值起加倍，直到覆盖所需个数
    ceiling = float(np.max(problem.potential(problem.grid(points)[0]))) + 1.0
    while sturm_count(diag, off, corner, ceiling)[0] < problem.count:
        ceiling = 2.0 * abs(ceiling) + 1.0
    upper = np.full(problem.count, ceiling)
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (lower + upper)
        above = sturm_count(diag, off, corner, middle) > targets
        upper = np.where(above, middle, upper)
        lower = np.where(above, lower, middle)
        if np.max(upper - lower) < 1e-13 * max(1.0, float(np.max(np.abs(upper)))):
            break
    return 0.5 * (lower + upper)


def _refined(problem: FdProblem, points: int) -> int:
    """步长减半后的网格点数(Dirichlet 为内点，需 2p+1 个)"""
    return 2 * points + 1 if problem.boundary == "dirichlet" else 2 * points


def fd_eigensolve(problem: FdProblem, tolerance: Optional[float] = None) -> FdResult:
    """二阶有限差分的最低 count 个本征值

    在 h、h/2、h/4 三级网格上求解，(h, h/2) 与 (h/2, h/4) 各做一次
    Richardson 外推；返回后者，两者之差作为误差估计。
    """
    if problem.count > settings.oracle.max_count:
        raise OracleError(f"at most {settings.oracle.max_count} eigenvalues per solve")
    tolerance = settings.oracle.tolerance if tolerance is None else tolerance
    sizes = [problem.points]
    for _ in range(2):
        sizes.append(_refined(problem, sizes[-1]))
    coarse, fine, finest = (_lowest(problem, points) for points in sizes)
    first = (4.0 * fine - coarse) / 3.0
    second = (4.0 * finest - fine) / 3.0
    error = np.abs(second - first)
    converged = bool(np.all(error <= tolerance))
    if not converged:
        logger.warning(f"fd extrapolation above tolerance: max error {float(np.max(error)):.3g}")
    return FdResult(eigenvalues=second, error_estimate=error, converged=converged)


def sawtooth_well(depth_ratios: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """以 s=0 为中心、2n 宽的有限锯齿势，外侧为 0"""
    ratios = np.asarray(depth_ratios, dtype=float)
    n = len(ratios)

    def potential(s):
        s = np.asarray(s, dtype=float)
        index = np.floor((s + n) / 2.0).astype(int)
        inside = (index >= 0) & (index < n)
        offset = s - (-n + 2 * np.clip(index, 0, n - 1) + 1)
        value = -ratios[np.clip(index, 0, n - 1)] * (1.0 - np.abs(offset))
        return np.where(inside, value, 0.0)

    return potential


def periodic_cell_problem(lattice: Lattice, boundary: Boundary, count: int,
                          points_per_period: Optional[int] = None) -> FdProblem:
    """单胞 [-1, 1) 上的周期/反周期问题，本征值即 Δ = ±2 的带边"""
    points = settings.oracle.points_per_period if points_per_period is None else points_per_period
    return FdProblem(
        potential=lambda s: np.abs(s) - 1.0,
        x_min=-1.0,
        x_max=1.0,
        points=points,
        boundary=boundary,
        count=count,
        kinetic=lattice.kappa ** -3,
    )


def finite_lattice_problem(lattice: Lattice, n_atoms: int, count: int,
                           depth_ratios: Optional[Sequence[float]] = None,
                           padding: Optional[float] = None,
                           points_per_period: Optional[int] = None) -> FdProblem:
    """2n 宽的有限锯齿链两侧各加 padding 的零势区，Dirichlet 截断"""
    ratios = np.ones(n_atoms) if depth_ratios is None else np.asarray(depth_ratios, dtype=float)
    if len(ratios) != n_atoms:
        raise OracleError("depth_ratios must have one entry per atom")
    padding = settings.oracle.padding if padding is None else padding
    per_period = settings.oracle.points_per_period if points_per_period is None else points_per_period
    half_width = n_atoms + padding
    return FdProblem(
        potential=sawtooth_well(ratios),
        x_min=-half_width,
        x_max=half_width,
        # 步长 2/per_period，整数 s 处的折点落在网格上
        points=int(round(per_period * half_width)) - 1,
        boundary="dirichlet",
        count=count,
        kinetic=lattice.kappa ** -3,
    )


def fd_level_count(problem: FdProblem, energies) -> np.ndarray:
    """离散算子在各能量以下的本征值个数(不外推)"""
    diag, off, corner = _operator(problem, problem.points)
    return sturm_count(diag, off, corner, energies)
