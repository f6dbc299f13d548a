#!/usr/bin/env python3
"""
Test suite for reference solutions: high-precision Airy values and finite differences
"""

import pytest
from pathlib import Path
import sys

import mpmath
import numpy as np

# Add project root and src to path
sys.path.insert(0, str(Path(__file__).parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from models.errors import OracleError
from models.lattice import Lattice
from models.oracle import FdProblem
from services.oracle import (
    fd_eigensolve, fd_level_count, finite_lattice_problem, periodic_cell_problem,
    reference_airy, reference_airy_scaled, sawtooth_well, sturm_count,
)


class TestReferenceAiry:
    """Test the multi-precision series"""

    def test_origin(self):
        ai, bi, aip, bip = reference_airy(0.0)
        with mpmath.workdps(30):
            assert abs(ai - mpmath.airyai(0)) < mpmath.mpf(10) ** -28
            assert abs(bip - mpmath.airybi(0, derivative=1)) < mpmath.mpf(10) ** -28

    @pytest.mark.parametrize("x", [-12.5, -3.0, 1.7, 8.0])
    def test_against_mpmath(self, x):
        values = reference_airy(x, digits=25)
        with mpmath.workdps(40):
            expected = (
                mpmath.airyai(x), mpmath.airybi(x),
                mpmath.airyai(x, derivative=1), mpmath.airybi(x, derivative=1),
            )
            for value, target in zip(values, expected):
                assert abs(value - target) <= mpmath.mpf(10) ** -22 * max(1, abs(target))

    def test_wronskian(self):
        ai, bi, aip, bip = reference_airy(-5.0)
        with mpmath.workdps(30):
            assert abs((ai * bip - aip * bi) * mpmath.pi - 1) < mpmath.mpf(10) ** -25

    def test_range_limits(self):
        with pytest.raises(OracleError):
            reference_airy(31.0)
        with pytest.raises(OracleError):
            reference_airy(1.0, digits=80)

    def test_scaled_values(self):
        ai_s, bi_s, aip_s, bip_s, zeta = reference_airy_scaled(4.0)
        with mpmath.workdps(30):
            target = mpmath.airyai(4)
            assert abs(ai_s * mpmath.exp(-zeta) - target) < mpmath.mpf(10) ** -27 * target
        assert float(zeta) == pytest.approx(16.0 / 3.0)
        with pytest.raises(OracleError):
            reference_airy_scaled(-1.0)


class TestSturmCount:
    """Test eigenvalue counting of (cyclic) tridiagonal matrices"""

    def test_laplacian(self):
        diag = np.full(5, 2.0)
        off = np.full(4, -1.0)
        # eigenvalues 2 - 2cos(kπ/6): 0.268, 1, 2, 3, 3.732
        assert list(sturm_count(diag, off, 0.0, [0.1, 1.5, 3.5, 4.0])) == [0, 2, 4, 5]

    @pytest.mark.parametrize("corner", [0.0, -0.7, 0.4])
    def test_against_dense(self, corner):
        rng = np.random.default_rng(11)
        n = 8
        diag = rng.normal(size=n)
        off = rng.normal(size=n - 1)
        dense = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        dense[0, -1] = dense[-1, 0] = corner
        spectrum = np.linalg.eigvalsh(dense)
        lam = np.linspace(spectrum[0] - 1.0, spectrum[-1] + 1.0, 57)
        lam = lam[np.min(np.abs(lam[:, None] - spectrum[None, :]), axis=1) > 1e-8]
        expected = np.sum(spectrum[None, :] < lam[:, None], axis=1)
        assert np.array_equal(sturm_count(diag, off, corner, lam), expected)

    def test_too_small(self):
        with pytest.raises(OracleError):
            sturm_count(np.ones(2), np.ones(1), 0.0, 0.5)


class TestFdEigensolve:
    """Test the extrapolated finite-difference solver on known spectra"""

    def test_harmonic_oscillator(self):
        problem = FdProblem(
            potential=lambda x: 0.5 * x ** 2, x_min=-10.0, x_max=10.0,
            points=4000, boundary="dirichlet", count=5, kinetic=0.5,
        )
        result = fd_eigensolve(problem)
        assert result.converged
        assert np.allclose(result.eigenvalues, np.arange(5) + 0.5, atol=1e-6)

    def test_free_dirichlet_box(self):
        problem = FdProblem(
            potential=lambda x: np.zeros_like(x), x_min=0.0, x_max=np.pi,
            points=500, boundary="dirichlet", count=5,
        )
        result = fd_eigensolve(problem)
        assert result.converged
        assert np.allclose(result.eigenvalues, np.arange(1, 6) ** 2, atol=1e-8)

    def test_error_estimate_bounds_halving(self):
        """Halving h moves the extrapolated values by less than the reported error"""
        def oscillator(points):
            return FdProblem(
                potential=lambda x: 0.5 * x ** 2, x_min=-10.0, x_max=10.0,
                points=points, boundary="dirichlet", count=5, kinetic=0.5,
            )

        coarse = fd_eigensolve(oscillator(1000))
        fine = fd_eigensolve(oscillator(2001))
        # ground level truncation error is close to rounding
        excited = slice(1, None)
        change = np.abs(fine.eigenvalues - coarse.eigenvalues)[excited]
        assert np.all(change <= coarse.error_estimate[excited])
        assert np.all(fine.error_estimate[excited] < coarse.error_estimate[excited])

    def test_free_periodic(self):
        problem = FdProblem(
            potential=lambda x: np.zeros_like(x), x_min=0.0, x_max=2.0 * np.pi,
            points=2000, boundary="periodic", count=5,
        )
        result = fd_eigensolve(problem)
        assert np.allclose(result.eigenvalues, [0.0, 1.0, 1.0, 4.0, 4.0], atol=1e-6)

    def test_free_antiperiodic(self):
        problem = FdProblem(
            potential=lambda x: np.zeros_like(x), x_min=0.0, x_max=2.0 * np.pi,
            points=2000, boundary="antiperiodic", count=4,
        )
        result = fd_eigensolve(problem)
        assert np.allclose(result.eigenvalues, [0.25, 0.25, 2.25, 2.25], atol=1e-6)

    def test_count_limit(self):
        problem = FdProblem(potential=lambda x: x * 0.0, x_min=0.0, x_max=1.0, points=100, count=51)
        with pytest.raises(OracleError):
            fd_eigensolve(problem)

    def test_empty_interval(self):
        with pytest.raises(OracleError):
            FdProblem(potential=lambda x: x, x_min=1.0, x_max=1.0, points=10)

    def test_level_count_on_discrete_operator(self):
        problem = FdProblem(
            potential=lambda x: 0.5 * x ** 2, x_min=-10.0, x_max=10.0,
            points=2000, count=3, kinetic=0.5,
        )
        assert list(fd_level_count(problem, [0.4, 1.0, 2.9])) == [0, 1, 3]


class TestSawtoothProblems:
    """Test potentials and problem builders"""

    def test_well_shape(self):
        well = sawtooth_well([1.0, 0.5, 2.0])
        s = np.array([-4.0, -3.0, -2.0, 0.0, 1.0, 2.0, 3.5])
        assert np.allclose(well(s), [0.0, 0.0, -1.0, -0.5, 0.0, -2.0, 0.0])

    def test_periodic_cell(self):
        problem = periodic_cell_problem(Lattice(kappa=2.0), "antiperiodic", count=3)
        assert problem.kinetic == pytest.approx(0.125)
        assert problem.potential(np.array([0.0]))[0] == pytest.approx(-1.0)

    def test_finite_lattice_ratios(self):
        lattice = Lattice(kappa=2.8)
        with pytest.raises(OracleError):
            finite_lattice_problem(lattice, 3, count=4, depth_ratios=[1.0, 1.0])
        problem = finite_lattice_problem(lattice, 3, count=4, padding=2.0)
        assert (problem.x_min, problem.x_max) == (-5.0, 5.0)

    def test_finite_lattice_kinks_on_grid(self):
        problem = finite_lattice_problem(Lattice(kappa=2.8), 3, count=4, padding=2.0, points_per_period=100)
        x, h = problem.grid(problem.points)
        assert h == pytest.approx(0.02)
        for kink in (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0):
            assert np.min(np.abs(x - kink)) < 1e-12
