#!/usr/bin/env python3
"""
Test suite for the command line interface
"""

import json
import pytest
from pathlib import Path
import sys

# Add project root and src to path
sys.path.insert(0, str(Path(__file__).parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from cli.commands import load_presets, main


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def read_table(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    notes = dict(line[2:].split("=", 1) for line in lines if line.startswith("# "))
    rows = [line for line in lines if not line.startswith("#")]
    return notes, rows


class TestPresets:
    """Test preset loading"""

    def test_known_presets(self):
        presets = load_presets()
        assert presets["carbon"]["kappa"] == 10.682
        assert presets["hydrogen"]["v0_ev"] == 13.6


class TestBandsCommand:
    """Test the bands command"""

    def test_writes_csv(self, workdir):
        assert main(["bands", "--kappa", "2.8", "--out", "bands.csv"]) == 0
        notes, rows = read_table(workdir / "bands.csv")
        assert notes["kappa"] == "2.8"
        assert notes["source"] == "kappa"
        assert rows[0] == "p,e_min,e_max"
        assert len(rows) >= 3

    def test_stdout(self, capsys):
        assert main(["bands", "--kappa", "2.8"]) == 0
        assert "p,e_min,e_max" in capsys.readouterr().out

    def test_carbon_preset_in_ev(self, workdir):
        assert main(["bands", "--preset", "carbon", "--unit", "eV", "--out", "carbon.csv"]) == 0
        notes, rows = read_table(workdir / "carbon.csv")
        assert notes["preset"] == "carbon"
        assert float(notes["kappa_recomputed"]) == pytest.approx(10.685, abs=0.005)
        assert rows[0] == "p,e_min,e_max,E_min_eV,E_max_eV"
        first = rows[1].split(",")
        assert float(first[1]) == pytest.approx(-1.0 + 1.01879297 / 10.682, abs=1e-8)
        assert float(first[3]) == pytest.approx(float(first[1]) * 489.99, rel=1e-9)

    def test_max_band(self, workdir):
        assert main(["bands", "--kappa", "2.8", "--max-band", "5", "--out", "six.csv"]) == 0
        _, rows = read_table(workdir / "six.csv")
        assert len(rows) == 7
        edges = [float(value) for row in rows[1:] for value in row.split(",")[1:]]
        assert edges == sorted(edges)

    def test_preset_max_band(self, workdir):
        assert main(["bands", "--preset", "carbon", "--max-band", "3", "--out", "carbon.csv"]) == 0
        notes, rows = read_table(workdir / "carbon.csv")
        assert notes["kappa"] == "10.682"
        assert len(rows) == 5

    def test_emax_alias(self, workdir):
        assert main(["bands", "--kappa", "2.8", "--emax", "0.5", "--out", "wide.csv"]) == 0
        assert main(["bands", "--kappa", "2.8", "--e-max", "0.5", "--out", "long.csv"]) == 0
        assert (workdir / "wide.csv").read_bytes() == (workdir / "long.csv").read_bytes()

    def test_ev_requires_physical(self):
        assert main(["bands", "--kappa", "2.8", "--unit", "eV"]) == 1

    def test_conflicting_sources(self):
        assert main(["bands", "--kappa", "2.8", "--preset", "carbon"]) == 1

    def test_incomplete_physical(self):
        assert main(["bands", "--v0-ev", "13.6"]) == 1

    def test_below_threshold(self):
        assert main(["bands", "--kappa", "1.2", "--out", "weak.csv"]) == 0
        assert main(["bands", "--kappa", "1.2", "--strict", "--out", "weak.csv"]) == 2

    @pytest.mark.parametrize("kappa", ["0.3", "0.5"])
    def test_shallow_lattice(self, workdir, kappa):
        assert main(["bands", "--kappa", kappa, "--out", "shallow.csv"]) == 0
        _, rows = read_table(workdir / "shallow.csv")
        assert len(rows) >= 2
        assert main(["bands", "--kappa", kappa, "--strict"]) == 2


class TestTableCommands:
    """Test ids and dos tables"""

    def test_ids_deterministic(self, workdir):
        args = ["ids", "--kappa", "2.8", "--points", "200"]
        assert main(args + ["--out", "a.csv"]) == 0
        assert main(args + ["--out", "b.csv"]) == 0
        assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
        _, rows = read_table(workdir / "a.csv")
        assert rows[0] == "E,e,p,phi,ids,dos,flag"

    def test_range_aliases(self, workdir):
        assert main(["ids", "--kappa", "2.8", "--emin", "-0.9", "--emax", "-0.1", "--points", "50", "--out", "a.csv"]) == 0
        assert main(["ids", "--kappa", "2.8", "--e-min", "-0.9", "--e-max", "-0.1", "--points", "50", "--out", "b.csv"]) == 0
        assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
        _, rows = read_table(workdir / "a.csv")
        assert float(rows[1].split(",")[1]) == pytest.approx(-0.9)

    def test_dos_physical(self, workdir):
        args = ["dos", "--v0-ev", "13.6", "--l0-angstrom", "1.0", "--unit", "eV",
                "--e-min", "-13.6", "--e-max", "0", "--points", "100", "--out", "dos.csv"]
        assert main(args) == 0
        notes, rows = read_table(workdir / "dos.csv")
        assert notes["unit"] == "eV"
        assert notes["source"] == "physical"
        assert rows[0] == "E,e,p,phi,ids,dos,flag"


class TestFiniteCommands:
    """Test spectrum and convergence"""

    def test_spectrum(self, workdir):
        assert main(["spectrum", "--kappa", "2.8", "-N", "1", "--out", "levels.csv"]) == 0
        notes, rows = read_table(workdir / "levels.csv")
        assert notes["N"] == "1"
        assert rows[0] == "index,e,E_unit,band"
        assert len(rows) >= 5

    def test_convergence(self, workdir):
        assert main(["convergence", "--kappa", "2.8", "--n-list", "2,4,8", "--out", "conv.csv"]) == 0
        notes, rows = read_table(workdir / "conv.csv")
        assert "decay_exponent" in notes
        assert rows[0] == "N,sup_error,mean_error"
        assert len(rows) == 4

    def test_n_list_alias(self, workdir):
        assert main(["convergence", "--kappa", "2.8", "--N", "2,4", "--out", "conv.csv"]) == 0
        _, rows = read_table(workdir / "conv.csv")
        assert [row.split(",")[0] for row in rows[1:]] == ["2", "4"]

    def test_bad_n_list(self):
        assert main(["convergence", "--kappa", "2.8", "--n-list", "2,x"]) == 1


class TestLifshitzCommand:
    """Test the disorder experiment"""

    def test_small_run(self, workdir):
        args = ["lifshitz", "--kappa", "2.8", "--delta", "0.3", "--n-sites", "21",
                "--samples", "4", "--points", "40", "--seed", "3", "--out", "tail.csv"]
        assert main(args) == 0
        summary = json.loads((workdir / "tail.fit.json").read_text(encoding="utf-8"))
        assert summary["seed"] == 3
        assert summary["config"]["n_sites"] == 21
        assert "model_mismatch" in summary
        notes, rows = read_table(workdir / "tail.csv")
        assert notes["seed"] == "3"
        assert rows[0] == "E,e,ids_mean,ids_stderr"
        first = rows[1].split(",")
        assert first[0] == first[1]

    def test_zero_disorder_flagged(self, workdir):
        args = ["lifshitz", "--kappa", "2.8", "--delta", "0", "--n-sites", "41",
                "--samples", "2", "--points", "60", "--out", "clean.csv"]
        assert main(args) == 0
        summary = json.loads((workdir / "clean.fit.json").read_text(encoding="utf-8"))
        assert summary["model_mismatch"] is True


class TestRunConfig:
    """Test run configuration validation"""

    def test_json_round_trip(self):
        from models.run import RunConfig

        config = RunConfig(command="lifshitz", kappa=2.8, delta=0.3, seed=5, n_list=[2, 4])
        assert RunConfig.model_validate_json(config.model_dump_json()) == config

    def test_requires_one_source(self):
        from models.run import RunConfig

        with pytest.raises(ValueError):
            RunConfig(command="bands")


class TestRunLogger:
    """Test run event logging"""

    def test_command_in_params(self, tmp_path):
        from utils.run_logger import RunLogger

        run_logger = RunLogger(logs_dir=str(tmp_path / "logs"))
        run_logger.log_run_start("bands", {"command": "bands", "kappa": 2.8, "preset": None})
        detail = (tmp_path / "logs" / "runs_detailed.log").read_text(encoding="utf-8")
        assert "event='run_start'" in detail
        assert "command='bands'" in detail
        assert "kappa=2.8" in detail
        assert "preset" not in detail
