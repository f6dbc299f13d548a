#!/usr/bin/env python3
"""
Test suite for integrated density of states, density of states and spectral tables
"""

import pytest
from pathlib import Path
import sys

import numpy as np

# Add project root and src to path
sys.path.insert(0, str(Path(__file__).parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from models.errors import EdgeGuardError, OutOfBandError, TableCoverageError
from models.lattice import Lattice
from models.spectral import TABLE_COLUMNS, Gap
from services.lattice_model import leading_bands
from services.spectral_density import (
    band_index, band_integral, build_table, dos, edge_coefficient, edge_exponent, ids,
    ids_per_length, literal_asymptotic_ratio, phi, phi_asymptotic, phi_from_discriminant,
    phi_prime, phi_prime_numeric, tabulate,
)


@pytest.fixture(scope="module")
def lattice():
    return Lattice(kappa=2.8)


@pytest.fixture(scope="module")
def table(lattice):
    return build_table(lattice, 0.5)


@pytest.fixture(scope="module")
def wide(lattice):
    return leading_bands(lattice, 4)


def interior_points(band, count=9):
    return band.e_min + band.width * np.linspace(0.05, 0.95, count)


class TestBandIndex:
    """Test band location"""

    def test_inside_band(self, table):
        band = table.band(1)
        assert band_index(band.midpoint, table) == 1

    def test_gaps(self, table):
        assert band_index(-0.999, table) == Gap(-1)
        gap_energy = 0.5 * (table.band(0).e_max + table.band(1).e_min)
        assert band_index(gap_energy, table) == Gap(0)

    def test_edges_belong_to_band(self, table):
        band = table.band(1)
        assert band_index(band.e_min, table) == 1
        assert band_index(band.e_max, table) == 1

    def test_out_of_coverage(self, table):
        with pytest.raises(TableCoverageError):
            band_index(table.coverage_top + 0.5, table)


class TestIds:
    """Test the closed-form integrated density of states"""

    def test_gap_plateaus(self, lattice, table):
        assert ids(-0.999, lattice, table) == 0.0
        for p in range(len(table) - 1):
            gap_energy = 0.5 * (table.band(p).e_max + table.band(p + 1).e_min)
            assert ids(gap_energy, lattice, table) == pytest.approx((p + 1) / 2.0)

    def test_continuous_at_edges(self, lattice, table):
        for band in table.bands:
            assert ids(band.e_min + 1e-10, lattice, table) == pytest.approx(band.p / 2.0, abs=1e-3)
            assert ids(band.e_max - 1e-10, lattice, table) == pytest.approx((band.p + 1) / 2.0, abs=1e-3)

    def test_exact_edges(self, lattice, table):
        band = table.band(2)
        assert ids(band.e_min, lattice, table) == pytest.approx(1.0)
        assert ids(band.e_max, lattice, table) == pytest.approx(1.5)

    def test_monotone(self, lattice, table):
        e = np.linspace(-0.99, 0.45, 4001)
        values = ids(e, lattice, table)
        assert np.all(np.diff(values) >= -1e-12)

    def test_half_state_per_band(self, lattice, table):
        for band in table.bands:
            rise = ids(band.e_max, lattice, table) - ids(band.e_min, lattice, table)
            assert rise == pytest.approx(0.5, abs=1e-9)

    def test_per_length_requires_l0(self, lattice, table):
        with pytest.raises(ValueError):
            ids_per_length(-0.5, lattice, table)

    def test_per_length(self):
        lat = Lattice(mass=1.0, v0=13.6, l0=1.0)
        tab = build_table(lat)
        e = tab.band(0).midpoint
        assert ids_per_length(e, lat, tab) == pytest.approx(ids(e, lat, tab) / 2.0)


class TestPhase:
    """Test the in-band phase and its derivative"""

    def test_matches_arccos(self, lattice, table):
        for band in table.bands:
            e = interior_points(band)
            assert np.allclose(phi(e, lattice), phi_from_discriminant(e, lattice), atol=1e-8)

    def test_outside_band(self, lattice, table):
        gap_energy = 0.5 * (table.band(0).e_max + table.band(1).e_min)
        with pytest.raises(OutOfBandError):
            phi(gap_energy, lattice)

    def test_derivative_matches_numeric(self, lattice, table):
        for band in table.bands:
            for e in band.e_min + band.width * np.linspace(0.3, 0.7, 5):
                analytic = phi_prime(float(e), lattice, table)
                numeric = phi_prime_numeric(float(e), lattice, table)
                assert analytic == pytest.approx(numeric, rel=1e-6)

    def test_derivative_edge_guard(self, lattice, table):
        with pytest.raises(EdgeGuardError):
            phi_prime(table.band(0).e_min, lattice, table)


class TestDos:
    """Test the density of states"""

    def test_positive_in_bands(self, lattice, table):
        for band in table.bands:
            assert np.all(dos(interior_points(band), lattice, table) > 0.0)

    def test_zero_in_gaps(self, lattice, table):
        gap_energy = 0.5 * (table.band(1).e_max + table.band(2).e_min)
        assert dos(gap_energy, lattice, table) == 0.0

    def test_edge_guard(self, lattice, table):
        with pytest.raises(EdgeGuardError):
            dos(table.band(1).e_max, lattice, table)

    @pytest.mark.parametrize("p", [0, 1, 2, 3])
    def test_band_integral_is_half(self, lattice, wide, p):
        assert band_integral(wide.band(p), lattice, wide) == pytest.approx(0.5, abs=1e-6)

    @pytest.mark.parametrize("p", [0, 1, 2])
    def test_matches_ids_derivative(self, lattice, table, p):
        band = table.band(p)
        h = band.width * 1e-4
        energies = band.e_min + band.width * np.linspace(0.1, 0.9, 7)
        slope = (np.asarray(ids(energies + h, lattice, table)) - np.asarray(ids(energies - h, lattice, table))) / (2.0 * h)
        expected = np.asarray(dos(energies, lattice, table))
        assert np.max(np.abs(slope / expected - 1.0)) <= 1e-4


class TestEdgeBehaviour:
    """Test square-root behaviour at band edges"""

    @pytest.mark.parametrize("p,side", [(0, "lower"), (0, "upper"), (1, "lower"), (2, "upper")])
    def test_coefficients(self, lattice, table, p, side):
        coefficient = edge_coefficient(p, side, lattice, table)
        assert coefficient.k_value > 0.0
        assert coefficient.r_value / coefficient.k_value == pytest.approx(0.5, abs=0.01)
        band = table.band(p)
        delta = 1e-9
        if side == "lower":
            increment = ids(band.e_min + delta, lattice, table) - p / 2.0
        else:
            increment = (p + 1) / 2.0 - ids(band.e_max - delta, lattice, table)
        assert increment / np.sqrt(delta) == pytest.approx(coefficient.k_value, rel=1e-3)

    @pytest.mark.parametrize("p", [0, 1, 2, 3, 4])
    @pytest.mark.parametrize("side", ["lower", "upper"])
    def test_exponents(self, lattice, wide, p, side):
        assert edge_exponent(p, side, lattice, wide, quantity="dos") == pytest.approx(-0.5, abs=0.05)
        assert edge_exponent(p, side, lattice, wide, quantity="ids") == pytest.approx(0.5, abs=0.05)

    @pytest.mark.parametrize("p,side", [(0, "lower"), (1, "upper"), (3, "lower")])
    def test_coefficients_stable_under_window_halving(self, lattice, wide, p, side):
        window = min(1e-4, wide.band(p).width / 100.0)
        coarse = edge_coefficient(p, side, lattice, wide, window=window)
        fine = edge_coefficient(p, side, lattice, wide, window=window / 2.0)
        assert fine.window == pytest.approx(window / 2.0)
        assert fine.k_value == pytest.approx(coarse.k_value, rel=0.05)
        assert fine.r_value == pytest.approx(0.5 * fine.k_value, rel=0.02)


class TestAsymptotic:
    """Test the large-kappa approximation of the phase"""

    @pytest.fixture(scope="class")
    def carbon(self):
        lat = Lattice(kappa=10.682)
        return lat, build_table(lat, 0.8)

    @pytest.mark.parametrize("p", [16, 18, 20])
    def test_tracks_exact_phase(self, carbon, p):
        lat, tab = carbon
        band = tab.band(p)
        assert band.e_min > 0.0
        e = band.midpoint
        exact = np.tan(phi(e, lat) / 2.0)
        assert phi_asymptotic(e, lat) == pytest.approx(exact, rel=0.05)

    def test_outside_band(self, carbon):
        lat, tab = carbon
        gap_energy = 0.5 * (tab.band(16).e_max + tab.band(17).e_min)
        with pytest.raises(OutOfBandError):
            phi_asymptotic(gap_energy, lat)

    def test_literal_ratio_is_finite(self, carbon):
        lat, tab = carbon
        assert np.isfinite(literal_asymptotic_ratio(tab.band(18).midpoint, lat))

    def test_error_falls_with_band_index(self, carbon):
        lat, tab = carbon
        errors = []
        for p in (16, 18, 20):
            band = tab.band(p)
            energies = band.e_min + band.width * np.linspace(0.4, 0.6, 3)
            approx = 2.0 * np.arctan(np.asarray(phi_asymptotic(energies, lat)))
            errors.append(np.max(np.abs(approx - np.asarray(phi(energies, lat)))))
        assert errors[0] > errors[1] > errors[2]


class TestTabulate:
    """Test spectral table generation"""

    @pytest.fixture(scope="class")
    def spectral(self, lattice, table):
        return tabulate(lattice, (-1.0, 0.3), n_points=300, table=table)

    def test_columns_and_order(self, spectral):
        assert list(spectral.frame.columns) == TABLE_COLUMNS
        assert spectral.frame["e"].is_monotonic_increasing
        assert set(spectral.frame["flag"]) <= {"band", "gap", "edge-guard"}

    def test_gap_rows(self, spectral):
        gaps = spectral.frame[spectral.frame["flag"] == "gap"]
        assert np.all(gaps["dos"] == 0.0)
        doubled = 2.0 * gaps["ids"].to_numpy()
        assert np.allclose(doubled, np.round(doubled))
        assert (0, 0.5) in spectral.plateaus()

    def test_band_rows(self, spectral):
        bands = spectral.frame[spectral.frame["flag"] == "band"]
        assert np.all(bands["dos"] > 0.0)
        assert np.all((bands["phi"] >= 0.0) & (bands["phi"] <= np.pi))

    def test_ids_monotone(self, spectral):
        assert np.all(np.diff(spectral.frame["ids"].to_numpy()) >= -1e-12)

    def test_csv(self, spectral, tmp_path):
        path = tmp_path / "table.csv"
        text = spectral.to_csv(path)
        assert text.splitlines()[0] == "E,e,p,phi,ids,dos,flag"
        assert path.read_text(encoding="utf-8") == text

    def test_ev_requires_v0(self, lattice):
        with pytest.raises(ValueError):
            tabulate(lattice, (-1.0, 0.0), n_points=50, unit="eV")

    def test_ev_scaling(self):
        lat = Lattice(mass=1.0, v0=13.6, l0=1.0)
        spectral = tabulate(lat, (-1.0, 0.0), n_points=100, unit="eV")
        frame = spectral.frame
        assert np.allclose(frame["E"], frame["e"] * 13.6)
        inside = frame[frame["flag"] == "band"]
        e = float(inside["e"].iloc[len(inside) // 2])
        expected = dos(e, lat, build_table(lat)) / 13.6
        assert float(inside["dos"].iloc[len(inside) // 2]) == pytest.approx(expected, rel=1e-10)

    def test_bad_range(self, lattice):
        with pytest.raises(ValueError):
            tabulate(lattice, (0.0, -0.5))
