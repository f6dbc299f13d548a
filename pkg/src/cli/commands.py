"""
锯齿晶格谱计算命令行
子命令：bands | ids | dos | spectrum | convergence | lifshitz
"""

import functools
import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import pandas as pd
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from config.settings import settings
from models.disorder import DisorderConfig
from models.errors import ConfigurationError, FitError, SawtoothError
from models.lattice import Lattice
from models.run import RunConfig
from services.airy_core import kappa0
from services.finite_lattice import convergence_report, eigenvalues, spectrum_frame
from services.lattice_model import band_edges, leading_bands
from services.random_perturbation import (
    curve_frame, fit_summary, floor_estimate, lifshitz_fit, sample_tail,
)
from models.spectral import TABLE_COLUMNS
from services.spectral_density import tabulate
from utils.output import write_csv, write_json
from utils.run_logger import get_run_logger

logger = logging.getLogger(__name__)
console = Console(stderr=True)

EXIT_USAGE = 1
EXIT_VALIDITY = 2


class StrictValidityError(click.ClickException):
    """--strict 下 κ < κ0 的有效性警告"""
    exit_code = EXIT_VALIDITY


def load_presets(path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """读取晶格预设"""
    with open(path or settings.presets_file, encoding="utf-8") as handle:
        return yaml.safe_load(handle)


def resolve_lattice(config: RunConfig) -> Lattice:
    """由运行配置构造晶格"""
    if config.preset is not None:
        preset = load_presets()[config.preset]
        return Lattice(
            kappa=preset["kappa"],
            v0=preset["v0_ev"],
            l0=preset["l0_angstrom"],
            mass=preset["mass_ratio"],
            source="preset",
        )
    if config.kappa is not None:
        return Lattice(kappa=config.kappa)
    return Lattice(
        mass=config.mass_ratio if config.mass_ratio is not None else 1.0,
        v0=config.v0_ev,
        l0=config.l0_angstrom,
    )


def lattice_notes(lattice: Lattice, config: RunConfig) -> List[Tuple[str, Any]]:
    """输出文件头部的注释行"""
    notes: List[Tuple[str, Any]] = [("kappa", f"{lattice.kappa:.6g}"), ("source", lattice.source)]
    if config.preset is not None:
        notes.append(("preset", config.preset))
        notes.append(("kappa_recomputed", f"{lattice.recomputed_kappa():.6g}"))
    notes.append(("unit", config.unit))
    return notes


def _check_validity(lattice: Lattice, config: RunConfig):
    if lattice.formula_valid:
        return
    threshold = kappa0()
    get_run_logger().log_validity_warning(lattice.kappa, threshold)
    message = f"kappa={lattice.kappa:g} is below kappa0={threshold:.6f}; IDS/DOS formulas are not validated"
    if config.strict:
        raise StrictValidityError(message)
    console.print(f"[yellow]warning:[/yellow] {message}")


def _emit(frame: pd.DataFrame, config: RunConfig, notes: Sequence[Tuple[str, Any]]):
    text = write_csv(frame, config.out, notes)
    if config.out is None:
        click.echo(text, nl=False)
    else:
        console.print(f"wrote {len(frame)} rows to {config.out}")


def lattice_options(func):
    """各子命令共用的晶格与输出选项"""
    options = [
        click.option("--kappa", type=float, default=None, help="无量纲参数 κ"),
        click.option("--v0-ev", type=float, default=None, help="势阱深度 V0 (eV)"),
        click.option("--l0-angstrom", type=float, default=None, help="半周期 L0 (Å)"),
        click.option("--mass-ratio", type=float, default=None, help="粒子质量(电子质量)"),
        click.option("--preset", type=click.Choice(["hydrogen", "carbon"]), default=None, help="晶格预设"),
        click.option("--unit", type=click.Choice(["dimensionless", "eV"]), default="dimensionless",
                     show_default=True, help="能量单位"),
        click.option("--out", type=click.Path(dir_okay=False), default=None, help="输出文件"),
        click.option("--seed", type=int, default=None, help="随机种子"),
        click.option("--strict", is_flag=True, default=False, help="有效性警告视为错误"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def run_command(name: str):
    """构造 RunConfig、记录运行日志并统一异常"""
    def decorator(func):
        @functools.wraps(func)
        def wrapper(**params):
            try:
                config = RunConfig(command=name, **params)
                lattice = resolve_lattice(config)
            except (ValidationError, ConfigurationError) as exc:
                raise click.UsageError(str(exc))
            run_logger = get_run_logger()
            run_logger.log_run_start(name, config.model_dump())
            started = time.time()
            try:
                result = func(config, lattice)
            except SawtoothError as exc:
                run_logger.log_error(str(exc), stage=name)
                raise
            run_logger.log_run_end(name, time.time() - started)
            return result
        return wrapper
    return decorator


@click.group()
@click.version_option(settings.app_version, prog_name=settings.app_name)
def cli():
    """锯齿势晶格的能带、态密度与 Lifshitz 尾部"""


@cli.command("bands")
@lattice_options
@click.option("--e-max", "--emax", "e_max", type=float, default=0.0, show_default=True, help="能量上限(无量纲)")
@click.option("--max-band", "max_band", type=int, default=None, help="列出能带 0..max_band，忽略 --e-max")
@run_command("bands")
def cmd_bands(config: RunConfig, lattice: Lattice):
    """列出能带边缘，列 p,e_min,e_max[,E_min_eV,E_max_eV]"""
    _check_validity(lattice, config)
    if config.max_band is not None:
        table = leading_bands(lattice, config.max_band)
    else:
        table = band_edges(lattice, config.e_max)
    get_run_logger().log_band_table(lattice.kappa, table.bands)
    frame = pd.DataFrame(
        {
            "p": [band.p for band in table.bands],
            "e_min": [band.e_min for band in table.bands],
            "e_max": [band.e_max for band in table.bands],
        }
    )
    if config.unit == "eV":
        frame["E_min_eV"] = frame["e_min"] * lattice.energy_scale
        frame["E_max_eV"] = frame["e_max"] * lattice.energy_scale
    _emit(frame, config, lattice_notes(lattice, config))

    summary = Table(title=f"bands for kappa={lattice.kappa:g}")
    for column in frame.columns:
        summary.add_column(column)
    for row in frame.itertuples(index=False):
        summary.add_row(str(row[0]), *(f"{value:.10g}" for value in row[1:]))
    console.print(summary)


def _spectral_table(config: RunConfig, lattice: Lattice):
    _check_validity(lattice, config)
    scale = lattice.energy_scale if config.unit == "eV" else 1.0
    e_lo = -1.0 if config.e_min is None else config.e_min / scale
    e_hi = 0.0 if config.e_max is None else config.e_max / scale
    return tabulate(lattice, (e_lo, e_hi), n_points=config.points, unit=config.unit,
                    edge_margin=config.edge_margin)


def _range_options(func):
    func = click.option("--edge-margin", "edge_margin", type=float, default=None, help="带边保护边距")(func)
    func = click.option("--points", type=int, default=None, help="采样点数")(func)
    func = click.option("--e-max", "--emax", "e_max", type=float, default=None,
                        help="能量上限(与 --unit 同单位)")(func)
    func = click.option("--e-min", "--emin", "e_min", type=float, default=None,
                        help="能量下限(与 --unit 同单位)")(func)
    return func


@cli.command("ids")
@lattice_options
@_range_options
@run_command("ids")
def cmd_ids(config: RunConfig, lattice: Lattice):
    """积分态密度表(完整谱表列)"""
    table = _spectral_table(config, lattice)
    _emit(table.frame[TABLE_COLUMNS], config, lattice_notes(lattice, config))


@cli.command("dos")
@lattice_options
@_range_options
@run_command("dos")
def cmd_dos(config: RunConfig, lattice: Lattice):
    """态密度表(完整谱表列)"""
    table = _spectral_table(config, lattice)
    _emit(table.frame[TABLE_COLUMNS], config, lattice_notes(lattice, config))


@cli.command("spectrum")
@lattice_options
@click.option("-N", "n_half", type=int, required=True, help="有限晶格 2N+1 个原子")
@run_command("spectrum")
def cmd_spectrum(config: RunConfig, lattice: Lattice):
    """有限晶格的束缚态"""
    _check_validity(lattice, config)
    spectrum = eigenvalues(config.n_half, lattice, strict=config.strict)
    get_run_logger().log_spectrum(config.n_half, spectrum.per_band_counts, spectrum.per_gap_counts)
    notes = lattice_notes(lattice, config) + [("N", config.n_half)]
    _emit(spectrum_frame(spectrum, lattice, config.unit), config, notes)
    console.print(f"per band: {spectrum.per_band_counts}  in gaps: {spectrum.per_gap_counts}")


def _parse_n_list(value: str) -> List[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected a comma separated list of integers, got {value!r}")


@cli.command("convergence")
@lattice_options
@click.option("--n-list", "--N", "n_list", default="5,10,20,40,80", show_default=True,
              callback=lambda ctx, param, value: _parse_n_list(value), help="N 列表")
@run_command("convergence")
def cmd_convergence(config: RunConfig, lattice: Lattice):
    """I_N 对 IDS 的收敛性"""
    _check_validity(lattice, config)
    report = convergence_report(lattice, config.n_list)
    rows = report.frame.to_dict("records")
    get_run_logger().log_convergence(rows, report.decay_exponent)
    notes = lattice_notes(lattice, config) + [("decay_exponent", f"{report.decay_exponent:.6g}")]
    _emit(report.frame, config, notes)


@cli.command("lifshitz")
@lattice_options
@click.option("--delta", type=float, default=None, help="扰动幅度 δ")
@click.option("--n-sites", "n_sites", type=int, default=None, help="原子数")
@click.option("--samples", type=int, default=None, help="样本数")
@click.option("--points", type=int, default=None, help="能量网格点数")
@run_command("lifshitz")
def cmd_lifshitz(config: RunConfig, lattice: Lattice):
    """随机深度晶格的经验 IDS 与尾部拟合"""
    _check_validity(lattice, config)
    defaults = settings.get_disorder_defaults()
    disorder = DisorderConfig(
        lattice=lattice,
        delta=defaults["delta"] if config.delta is None else config.delta,
        n_sites=defaults["n_sites"] if config.n_sites is None else config.n_sites,
        samples=defaults["samples"] if config.samples is None else config.samples,
        seed=defaults["seed"] if config.seed is None else config.seed,
    )
    curve = sample_tail(disorder, grid_points=config.points)
    e0_hat = floor_estimate(curve)
    try:
        summary = fit_summary(disorder, lifshitz_fit(curve.energies, curve.ids_mean, e0_hat))
    except FitError as exc:
        # 可用点不足时视为模型不符
        logger.warning(f"tail fit unavailable: {exc}")
        summary = {"model_mismatch": True, "error": str(exc), "e0_hat": e0_hat, "delta": disorder.delta,
                   "n_sites": disorder.n_sites, "samples": disorder.samples, "seed": disorder.seed,
                   "kappa": lattice.kappa}
    summary["config"] = json.loads(config.model_dump_json())
    if "exponent" in summary:
        get_run_logger().log_fit(summary)

    notes = lattice_notes(lattice, config) + [("seed", disorder.seed), ("delta", disorder.delta)]
    _emit(curve_frame(curve, lattice, config.unit), config, notes)
    if config.out is not None:
        write_json(summary, Path(config.out).with_suffix(".fit.json"))
    else:
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
    console.print(
        f"exponent={summary.get('exponent', float('nan')):.4f}  "
        f"model_mismatch={summary['model_mismatch']}"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """入口，返回进程退出码：0 正常，1 用法或计算错误，2 严格模式下的有效性警告"""
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="sawtooth-spectra",
                 standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except (SawtoothError, ValueError) as exc:
        console.print(f"[red]error:[/red] {exc}")
        return EXIT_USAGE
    return 0
