"""
服务层包
包含 Airy 计算、周期晶格、谱密度、有限晶格、随机扰动与参考解服务
"""

from .airy_core import airy_eval, airy_eval_scaled, fundamental_pair, kappa0
from .lattice_model import band_edges, discriminant, half_slope_propagator, monodromy
from .spectral_density import band_index, build_table, dos, ids, phi, tabulate
from .finite_lattice import convergence_report, eigenvalues, level_count
from .random_perturbation import empirical_ids, lifshitz_fit, run_lifshitz
from .oracle import fd_eigensolve, reference_airy

__all__ = [
    "airy_eval",
    "airy_eval_scaled",
    "fundamental_pair",
    "kappa0",
    "band_edges",
    "discriminant",
    "half_slope_propagator",
    "monodromy",
    "band_index",
    "build_table",
    "dos",
    "ids",
    "phi",
    "tabulate",
    "convergence_report",
    "eigenvalues",
    "level_count",
    "empirical_ids",
    "lifshitz_fit",
    "run_lifshitz",
    "fd_eigensolve",
    "reference_airy",
]
