import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transduce_opt.dynamics import make_grid, propagate
from transduce_opt.model import (
    DriveWaveform,
    Ensemble,
    GaussianWavepacket,
    Rates,
    SamplingSpec,
    build_static_hamiltonian,
    drive_coupling_matrix,
    sample_ensemble,
)
from transduce_opt.spectra import (
    FloquetAnalysis,
    Spectrum,
    SidebandConvergenceError,
    default_k_max,
    default_omega_grid,
    find_spectrum_peak,
    floquet_eigenstates,
    floquet_spectrum,
    max_superradiance,
    refine_static_peak,
    static_spectrum,
    superradiance_metric,
)

from conftest import bright_mode_amplitude, symmetric


def random_drive(rng, omega0=10.0, nh=5, scale=3.0):
    return DriveWaveform(omega0, rng.uniform(0.5, scale, nh + 1), rng.uniform(-math.pi, math.pi, nh + 1))


def unit(v):
    return v / np.linalg.norm(v)


class TestStaticSpectrum:
    def test_no_drive_no_transduction(self, small_random_ensemble):
        spec = static_spectrum(small_random_ensemble(), 0.0, np.linspace(-20, 20, 101))
        assert np.all(spec.eta == 0)

    def test_flagship_peak(self, flagship_rates):
        spec = static_spectrum(Ensemble.homogeneous(10, flagship_rates), 10.0, [0.0])
        assert spec.eta[0] == pytest.approx(0.25, abs=1e-9)

    def test_single_emitter_unit_cooperativity(self):
        spec = static_spectrum(Ensemble.homogeneous(1, symmetric(1.0)), 1.0, [0.0])
        assert spec.eta[0] == pytest.approx(0.25, abs=1e-9)

    def test_matches_bright_mode_resolvent(self):
        rates = Rates(1.0, 2.0, 3.0, 0.5)
        w = np.linspace(-30, 30, 61)
        spec = static_spectrum(Ensemble.homogeneous(6, rates), 4.0, w)
        ref = np.abs(bright_mode_amplitude(6, rates, 4.0, w)) ** 2
        np.testing.assert_allclose(spec.eta, ref, rtol=1e-10)

    def test_matches_dense_solve(self, small_random_ensemble):
        ens = small_random_ensemble(n=4, broadening=20.0, seed=3)
        h = build_static_hamiltonian(ens) + 7.0 * drive_coupling_matrix(ens)
        l_mu = np.r_[np.ones(4), np.zeros(4)]
        l_opt = np.r_[np.zeros(4), np.ones(4)]
        w = np.array([-13.0, 0.5, 22.0])
        ref = [abs(l_opt @ np.linalg.solve(x * np.eye(8) - h, l_mu)) ** 2 for x in w]
        np.testing.assert_allclose(static_spectrum(ens, 7.0, w).eta, ref, rtol=1e-12)

    def test_large_broadening_is_sum_of_single_emitters(self):
        rates = symmetric(0.1)
        ens = sample_ensemble(3, rates, SamplingSpec(500.0, 0))
        # the reduction holds only for emitters far apart compared with their linewidths
        for d in (ens.delta_mu, ens.delta_opt):
            assert np.min(np.diff(np.sort(d))) > 50
        grid = default_omega_grid(500.0, 5.0, 20001)
        total = static_spectrum(ens, 10.0, grid)
        singles = [Ensemble(1, rates, [dm], [do]) for dm, do in zip(ens.delta_mu, ens.delta_opt)]
        for single in singles:
            peak = refine_static_peak(single, 10.0, grid)
            here = static_spectrum(ens, 10.0, [peak.omega]).eta[0]
            summed = sum(static_spectrum(s, 10.0, [peak.omega]).eta[0] for s in singles)
            assert here == pytest.approx(summed, rel=0.05)
        assert total.eta.max() > 0

    def test_bounded_by_one(self, rng):
        for seed in range(5):
            ens = sample_ensemble(4, Rates(1.0, 1.0, 0.2, 0.2), SamplingSpec(10.0, seed))
            spec = static_spectrum(ens, rng.uniform(0.5, 5), np.linspace(-40, 40, 801))
            assert spec.eta.max() <= 1 + 1e-6

    def test_csv(self, tmp_path, small_random_ensemble):
        spec = static_spectrum(small_random_ensemble(), 2.0, np.linspace(-5, 5, 11))
        spec.to_csv(tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "omega,eta"
        back = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(back[:, 1], spec.eta)


class TestFloquetSpectrum:
    def test_constant_drive_reduces_to_static(self, small_random_ensemble):
        ens = small_random_ensemble(n=4, broadening=10.0)
        w = np.linspace(-30, 30, 121)
        drive = DriveWaveform(10.0, [6.0, 0.0, 0.0], [0.3, 0.0, 0.0])
        ref = static_spectrum(ens, 6.0 * math.cos(0.3), w)
        for k in (None, 2, 7):
            spec = floquet_spectrum(ens, drive, w, k)
            np.testing.assert_allclose(spec.eta, ref.eta, atol=1e-10, rtol=0)

    def test_zero_amplitude_harmonics_reduce_to_static(self, small_random_ensemble):
        ens = small_random_ensemble(n=3)
        w = np.linspace(-10, 10, 41)
        drive = DriveWaveform(10.0, [4.0, 1e-300, 0.0], [0.0, 1.0, 2.0])
        spec = floquet_spectrum(ens, drive, w, 4)
        np.testing.assert_allclose(spec.eta, static_spectrum(ens, 4.0, w).eta, atol=1e-10)

    def test_self_converged(self, rng):
        ens = sample_ensemble(4, symmetric(0.1), SamplingSpec(20.0, 5))
        drive = random_drive(rng)
        w = np.linspace(-40, 40, 41)
        spec = floquet_spectrum(ens, drive, w)
        wider = floquet_spectrum(ens, drive, w, spec.k_max + 2)
        assert np.max(np.abs(wider.eta - spec.eta)) < 1e-8

    def test_sidebands_sum_to_total(self, rng):
        ens = sample_ensemble(3, symmetric(0.5), SamplingSpec(10.0, 1))
        spec = floquet_spectrum(ens, random_drive(rng, nh=3), np.linspace(-20, 20, 21))
        np.testing.assert_allclose(spec.per_sideband.sum(axis=0), spec.eta, rtol=1e-13)
        assert spec.per_sideband.shape == (2 * spec.k_max + 1, 21)
        assert list(spec.orders) == list(range(-spec.k_max, spec.k_max + 1))
        assert spec.eta.max() <= 1 + 1e-6

    def test_matches_time_domain(self, rng):
        ens = sample_ensemble(4, symmetric(0.1), SamplingSpec(20.0, 7))
        drive = random_drive(rng)
        probes = np.array([-15.0, 0.0, 12.0])
        spec = floquet_spectrum(ens, drive, probes)
        for w, eta in zip(probes, spec.eta):
            wp = GaussianWavepacket(w, 0.2)
            td = propagate(ens, drive, wp, make_grid(ens, wp, drive)).efficiency
            assert td == pytest.approx(eta, rel=0.01)

    def test_phase_wrapping_invariance(self, rng):
        ens = sample_ensemble(3, symmetric(0.1), SamplingSpec(15.0, 2))
        drive = random_drive(rng, nh=3)
        wrapped = DriveWaveform(drive.omega0, drive.amplitudes, drive.phases + 2 * np.pi)
        w = np.linspace(-25, 25, 26)
        a = floquet_spectrum(ens, drive, w, 8).eta
        b = floquet_spectrum(ens, wrapped, w, 8).eta
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-14)

    def test_rejects_small_truncation(self, rng, small_random_ensemble):
        with pytest.raises(ValueError, match="k_max"):
            floquet_spectrum(small_random_ensemble(), random_drive(rng, nh=5), [0.0], 3)

    def test_unconverged_truncation_raises(self, rng):
        ens = sample_ensemble(3, symmetric(0.1), SamplingSpec(50.0, 2))
        drive = random_drive(rng, omega0=2.0, nh=2, scale=30.0)
        with pytest.raises(SidebandConvergenceError, match="larger k_max"):
            floquet_spectrum(ens, drive, np.linspace(-60, 60, 9), 2, max_doublings=0)

    def test_default_truncation_spans_broadening(self):
        ens = sample_ensemble(10, symmetric(0.1), SamplingSpec(200.0, 0))
        drive = DriveWaveform(10.0, np.ones(41), np.zeros(41))
        spread = max(np.std(ens.delta_mu), np.std(ens.delta_opt))
        assert default_k_max(ens, drive) == 40 + math.ceil(4 * spread / 10.0)

    def test_csv_has_sideband_columns(self, tmp_path, rng, small_random_ensemble):
        spec = floquet_spectrum(small_random_ensemble(), random_drive(rng, nh=1), np.linspace(-5, 5, 5), 2)
        spec.to_csv(tmp_path / "f.csv")
        head = (tmp_path / "f.csv").read_text().splitlines()[0].split(",")
        k = spec.k_max
        assert head == ["omega", "eta"] + [f"eta_{n}" for n in range(-k, k + 1)]


class TestSuperradianceMetric:
    def test_bright_hybrid_is_one(self):
        ens = Ensemble.homogeneous(5, symmetric(0.1))
        b = np.ones(5) / math.sqrt(5)
        for sign in (1, -1):
            state = np.r_[b, sign * b] / math.sqrt(2)
            assert superradiance_metric(state, ens) == pytest.approx(1.0, abs=1e-12)

    def test_microwave_only_is_zero(self, rng):
        ens = Ensemble.homogeneous(4, symmetric(0.1))
        state = unit(np.r_[rng.normal(size=4) + 1j * rng.normal(size=4), np.zeros(4)])
        assert superradiance_metric(state, ens) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi))
    def test_bounded_and_phase_invariant(self, n, seed, phase):
        r = np.random.default_rng(seed)
        ens = Ensemble.homogeneous(n, Rates(1.0, 0.3, 1.0, 1.0))
        state = unit(r.normal(size=2 * n) + 1j * r.normal(size=2 * n))
        f = superradiance_metric(state, ens)
        assert 0 <= f <= 1 + 1e-9
        assert superradiance_metric(np.exp(1j * phase) * state, ens) == pytest.approx(f, abs=1e-12)

    def test_rejects_unnormalized(self):
        ens = Ensemble.homogeneous(2, Rates())
        with pytest.raises(ValueError, match="unit norm"):
            superradiance_metric(np.ones(4), ens)


class TestFloquetEigenstates:
    def test_constant_drive_eigenvalues(self):
        ens = Ensemble.homogeneous(3, symmetric(0.1))
        period = 2 * math.pi / 10
        analysis = floquet_eigenstates(ens, DriveWaveform.constant(6.5), period)
        energies = np.linalg.eigvals(build_static_hamiltonian(ens) + 6.5 * drive_coupling_matrix(ens))
        expected = np.exp(-1j * energies * period)
        for lam in expected:
            assert np.min(np.abs(analysis.eigenvalues - lam)) < 1e-6

    def test_shapes_and_normalization(self, rng):
        ens = sample_ensemble(4, symmetric(0.1), SamplingSpec(30.0, 3))
        analysis = floquet_eigenstates(ens, random_drive(rng, nh=3))
        assert analysis.eigenvalues.shape == (8,)
        assert analysis.eigenvectors.shape == (8, 8)
        np.testing.assert_allclose(np.linalg.norm(analysis.eigenvectors, axis=0), 1.0, atol=1e-12)
        assert np.abs(analysis.eigenvalues).max() <= 1 + 1e-9
        assert analysis.metrics.min() >= 0 and analysis.metrics.max() <= 1 + 1e-9

    def test_homogeneous_calibration(self):
        ens = Ensemble.homogeneous(10, symmetric(0.1))
        analysis = floquet_eigenstates(ens, DriveWaveform.constant(10.0), 2 * math.pi / 10)
        assert max_superradiance(analysis) == pytest.approx(1.0, abs=1e-8)
        # the two hybridized bright states score 1; every dark state scores 0
        assert np.sum(analysis.metrics > 0.5) == 2
        assert np.sort(analysis.metrics)[:-2].max() < 1e-8

    def test_undriven_homogeneous_is_zero(self):
        ens = Ensemble.homogeneous(4, symmetric(0.1))
        analysis = floquet_eigenstates(ens, DriveWaveform.constant(0.0), 1.0)
        assert max_superradiance(analysis) == pytest.approx(0.0, abs=1e-8)

    def test_broadening_lowers_the_metric(self):
        rates = symmetric(0.1)
        ens = sample_ensemble(10, rates, SamplingSpec(200.0, 0))
        analysis = floquet_eigenstates(ens, DriveWaveform.constant(10.0), 2 * math.pi / 10)
        assert max_superradiance(analysis) < 1.0

    def test_json(self, tmp_path, rng):
        ens = sample_ensemble(2, symmetric(0.1), SamplingSpec(5.0, 3))
        analysis = floquet_eigenstates(ens, random_drive(rng, nh=2))
        analysis.to_json(tmp_path / "a.json")
        doc = json.loads((tmp_path / "a.json").read_text())
        assert "eigenvectors" not in doc and len(doc["eigenvalues"]) == 4
        analysis.to_json(tmp_path / "b.json", include_vectors=True)
        doc = json.loads((tmp_path / "b.json").read_text())
        vec = np.array(doc["eigenvectors"][0])
        np.testing.assert_allclose(vec[:, 0] + 1j * vec[:, 1], analysis.eigenvectors[:, 0])

    def test_quasienergies(self):
        ens = Ensemble.homogeneous(2, symmetric(0.5))
        analysis = floquet_eigenstates(ens, DriveWaveform.constant(1.0), 0.5)
        np.testing.assert_allclose(np.exp(-1j * analysis.quasienergies * 0.5), analysis.eigenvalues, rtol=1e-12)
        assert np.all(analysis.quasienergies.imag <= 1e-12)


class TestPeaks:
    def test_homogeneous_peak_at_zero(self):
        grid = np.linspace(-30, 30, 601)
        spec = static_spectrum(Ensemble.homogeneous(10, symmetric(0.1)), 10.0, grid)
        assert abs(find_spectrum_peak(spec).omega) <= grid[1] - grid[0]

    def test_single_detuned_emitter(self):
        grid = np.linspace(-50, 50, 1001)
        ens = Ensemble(1, symmetric(1.0), [20.0], [20.0])
        peak = find_spectrum_peak(static_spectrum(ens, 0.3, grid))
        assert abs(peak.omega - 20.0) <= grid[1] - grid[0]
        assert not peak.degenerate

    def test_all_zero_is_flagged(self):
        peak = find_spectrum_peak(Spectrum(np.linspace(-1, 1, 5), np.zeros(5)))
        assert peak == (0.0, 0.0, True)

    def test_tie_breaking(self):
        w = np.array([-3.0, -1.0, 0.5, 1.0, 2.0])
        assert find_spectrum_peak(Spectrum(w, np.array([1, 1, 0, 1, 0.0]))).omega == -1.0
        assert find_spectrum_peak(Spectrum(w, np.array([1, 0, 0, 0, 1.0]))).omega == 2.0

    def test_refinement_beats_grid(self):
        ens = Ensemble(1, symmetric(1.0), [20.3], [20.3])
        grid = np.linspace(-50, 50, 101)
        coarse = find_spectrum_peak(static_spectrum(ens, 1.0, grid))
        fine = refine_static_peak(ens, 1.0, grid)
        assert fine.eta >= coarse.eta
        assert abs(fine.omega - 20.3) < 0.05

    def test_default_grid(self):
        g = default_omega_grid(200.0, 5.0)
        assert g.size == 2001 and g[0] == -625.0 and g[-1] == 625.0 and 0.0 in g


def test_analysis_dataclass_roundtrip_fields():
    fa = FloquetAnalysis(np.eye(2), np.ones(2), np.eye(2), np.array([0.0, 0.5]), 1.0)
    assert max_superradiance(fa) == 0.5
