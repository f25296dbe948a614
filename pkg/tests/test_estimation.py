import math

import numpy as np
import pytest

from qwigner import (
    BlochState,
    DetectionModel,
    DomainError,
    FitConvergenceError,
    PauliTallies,
    bloch_from_density,
    bootstrap_errors,
    density_from_bloch,
    derive_rng,
    estimate_wigner_from_tally,
    fit_exponential_decay,
    fit_wmin_line,
    simulate_tomography,
    tomography_from_expectations,
    tomography_linear_inversion,
    wigner_min_analytic,
)
from qwigner.estimation import (
    exact_expectations,
    pauli_tallies_at_time,
    read_tally_csv,
)
from qwigner.qubit import GROUND, MAXIMALLY_MIXED
from qwigner.shots import ShotTally

from conftest import random_bloch

SQRT3 = math.sqrt(3.0)
TWO_PI_SQ = 2.0 * math.pi**2


class TestLinearInversion:
    def test_noiseless_identity_on_measured_state(self, dephasing_run):
        rho, _, _ = dephasing_run[0.0]
        res = tomography_from_expectations(*exact_expectations(rho))
        assert np.abs(res.rho.matrix - rho.matrix).max() < 1e-12
        assert not res.clamped

    def test_zero_expectations_give_flat_state(self):
        res = tomography_from_expectations(0.0, 0.0, 0.0)
        assert np.abs(res.rho.matrix - MAXIMALLY_MIXED.matrix).max() < 1e-12
        assert res.bloch.r == 0.0

    def test_clamping_occurs_for_shot_noise_near_pure(self):
        rho = density_from_bloch(BlochState(math.pi / 2, 0.0, 0.99))
        clamped = 0
        for k in range(120):
            tallies = simulate_tomography(rho, 300, rng=derive_rng(1000, k))
            res = tomography_linear_inversion(tallies)
            if res.clamped:
                clamped += 1
                assert abs(res.bloch.r - 1.0) < 1e-12
        assert 0 < clamped < 120

    def test_entry_error_magnitudes(self):
        tallies = PauliTallies(ShotTally(160, 140), ShotTally(150, 150), ShotTally(150, 150))
        res = tomography_linear_inversion(tallies)
        for err in res.entry_errors.values():
            assert 0.02 < err < 0.04

    def test_clamping_moves_toward_every_physical_state(self):
        rng = np.random.default_rng(33)
        for _ in range(100):
            raw = rng.normal(size=3)
            raw *= rng.uniform(1.01, 1.6) / np.linalg.norm(raw)
            clamped = raw / np.linalg.norm(raw)
            target = random_bloch(rng).vector()
            assert np.linalg.norm(clamped - target) <= np.linalg.norm(raw - target) + 1e-12


class TestSimulateTomography:
    def test_ground_state_z_basis_all_retained(self):
        tallies = simulate_tomography(GROUND, 400, rng=derive_rng(2))
        assert tallies.tally_z.n_retained == 400

    def test_y_eigenstate_conventions(self):
        rho = density_from_bloch(BlochState(math.pi / 2, math.pi / 2, 1.0))
        tallies = simulate_tomography(rho, 3000, rng=derive_rng(3))
        assert tallies.expectation("y") == 1.0
        bound = 4 / math.sqrt(3000)
        assert abs(tallies.expectation("x")) < bound
        assert abs(tallies.expectation("z")) < bound

    def test_large_shot_round_trip(self):
        rng = np.random.default_rng(5)
        rho = density_from_bloch(random_bloch(rng))
        tallies = simulate_tomography(rho, 100_000, rng=derive_rng(4))
        res = tomography_linear_inversion(tallies)
        assert np.abs(res.rho.matrix - rho.matrix).max() < 0.01

    def test_convergence_rate(self):
        rho = density_from_bloch(BlochState(1.2, 0.8, 0.6))
        errs = {}
        for n in (10**2, 10**4, 10**6):
            tallies = simulate_tomography(rho, n, rng=derive_rng(6, n))
            res = tomography_linear_inversion(tallies)
            errs[n] = np.abs(res.rho.matrix - rho.matrix).max()
            assert errs[n] < 2.5 / math.sqrt(n)
        assert errs[10**6] < errs[10**2]

    def test_detection_errors_bias_the_naive_inversion(self):
        det = DetectionModel(eps0=0.1, eps1=0.1)
        tallies = simulate_tomography(GROUND, 50_000, det, rng=derive_rng(7))
        res = tomography_linear_inversion(tallies)
        assert res.bloch.r < 0.9  # distorted, as expected without correction


class TestWignerFromTally:
    def test_balanced(self):
        est = estimate_wigner_from_tally(ShotTally(150, 150))
        assert abs(est.value - 1.0 / TWO_PI_SQ) < 1e-12
        assert abs(est.stderr - (SQRT3 / math.pi**2) * math.sqrt(0.25 / 300)) < 1e-15

    def test_extremes(self):
        assert abs(estimate_wigner_from_tally(ShotTally(300, 0)).value - (1 - SQRT3) / TWO_PI_SQ) < 1e-15
        assert abs(estimate_wigner_from_tally(ShotTally(0, 300)).value - (1 + SQRT3) / TWO_PI_SQ) < 1e-15


class TestExponentialFit:
    def test_noiseless_envelope_recovery(self):
        t = np.linspace(0, 30, 16)
        samples = [(ti, math.exp(-ti / 17.2)) for ti in t]
        fit = fit_exponential_decay(samples, mode="envelope")
        assert abs(fit.parameters["t_decay"] - 17.2) < 1e-6
        assert abs(fit.parameters["amplitude"] - 1.0) < 1e-8

    def test_noiseless_fringe_recovery(self):
        t = np.linspace(0, 25, 40)
        y = 0.5 * np.exp(-t / 17.2) * np.cos(1.51 * t + 0.2) + 0.5
        fit = fit_exponential_decay(list(zip(t, y)), mode="fringe")
        assert abs(fit.parameters["t_decay"] - 17.2) < 1e-6
        assert abs(fit.parameters["omega"] - 1.51) < 1e-8
        assert abs(fit.parameters["offset"] - 0.5) < 1e-9

    def test_constant_samples_flagged(self):
        samples = [(t, 0.7) for t in np.linspace(0, 10, 8)]
        with pytest.raises(FitConvergenceError):
            fit_exponential_decay(samples, mode="envelope")

    def test_too_few_distinct_times(self):
        with pytest.raises(DomainError):
            fit_exponential_decay([(0.0, 1.0), (0.0, 0.9), (1.0, 0.8)])

    def test_scale_equivariance(self):
        rng = np.random.default_rng(9)
        t = np.linspace(0, 20, 12)
        y = 0.8 * np.exp(-t / 6.0) + rng.normal(0, 1e-3, t.size)
        fit1 = fit_exponential_decay(list(zip(t, y)), mode="envelope")
        fit2 = fit_exponential_decay(list(zip(t, 5.0 * y)), mode="envelope")
        assert abs(fit2.parameters["amplitude"] - 5.0 * fit1.parameters["amplitude"]) < 1e-9
        assert abs(fit2.parameters["t_decay"] - fit1.parameters["t_decay"]) < 1e-9

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            fit_exponential_decay([(0, 1), (1, 0.5), (2, 0.2)], mode="power")


class TestWminLineFit:
    def test_exact_points_recover_formula(self):
        points = [(r, wigner_min_analytic(r)) for r in (0.2, 0.5, 0.8)]
        fit = fit_wmin_line(points)
        assert abs(fit.parameters["slope"] + SQRT3 / TWO_PI_SQ) < 1e-12
        assert abs(fit.parameters["intercept"] - 1.0 / TWO_PI_SQ) < 1e-12
        assert abs(fit.parameters["r_zero_crossing"] - 1.0 / SQRT3) < 1e-12

    def test_published_averages_cross_above_critical_radius(self):
        points = [(0.820, -0.018), (0.662, -0.006), (0.436, 0.014)]
        fit = fit_wmin_line(points)
        crossing = fit.parameters["r_zero_crossing"]
        assert 0.577 < crossing < 0.63

    def test_weighted_fit_uses_errors(self):
        points = [(0.2, wigner_min_analytic(0.2), 1e-4), (0.8, wigner_min_analytic(0.8), 1e-4)]
        fit = fit_wmin_line(points)
        assert abs(fit.parameters["r_zero_crossing"] - 1.0 / SQRT3) < 1e-10
        assert fit.stderr["slope"] > 0

    def test_degenerate_r_rejected(self):
        with pytest.raises(DomainError):
            fit_wmin_line([(0.5, -0.01), (0.5, -0.02)])


class TestBootstrap:
    def test_balanced_tally_interval(self):
        tally = ShotTally(150, 150)
        interval = bootstrap_errors(tally, 10_000, lambda t: t.p0_hat, derive_rng(11))
        assert abs(interval.low - 0.443) < 0.01
        assert abs(interval.high - 0.557) < 0.01
        assert interval.point == 0.5

    def test_degenerate_tally(self):
        tally = ShotTally(300, 0)
        interval = bootstrap_errors(tally, 500, lambda t: t.p0_hat, derive_rng(12))
        assert interval.low == interval.high == interval.point == 1.0

    def test_width_shrinks_with_shots(self):
        widths = {}
        for n in (100, 10_000):
            tally = ShotTally(n // 2, n // 2)
            iv = bootstrap_errors(tally, 4000, lambda t: t.p0_hat, derive_rng(13, n))
            widths[n] = iv.high - iv.low
        ratio = widths[100] / widths[10_000]
        assert 6 < ratio < 14

    def test_pauli_tallies_statistic(self):
        tallies = PauliTallies(ShotTally(200, 100), ShotTally(150, 150), ShotTally(160, 140))
        stat = lambda t: tomography_linear_inversion(t).bloch.r
        interval = bootstrap_errors(tallies, 400, stat, derive_rng(14))
        assert interval.low <= interval.point <= interval.high
        assert interval.high - interval.low < 0.3

    def test_minimum_resamples(self):
        with pytest.raises(DomainError):
            bootstrap_errors(ShotTally(5, 5), 50, lambda t: t.p0_hat, derive_rng(15))


class TestTallyInterchange:
    def test_round_trip(self):
        text = (
            "basis,t_ms,xi,chi,n_retained,n_lost\n"
            "x,0,0,0,160,140\n"
            "y,0,0,0,30,270\n"
            "z,0,0,0,150,150\n"
        )
        records = read_tally_csv(text)
        tallies = pauli_tallies_at_time(records, 0.0)
        assert tallies.tally_x.n_retained == 160
        res = tomography_linear_inversion(tallies)
        assert abs(res.bloch.r - bloch_from_density(res.rho).r) < 1e-12

    def test_bad_header(self):
        with pytest.raises(DomainError):
            read_tally_csv("foo,bar\n1,2\n")

    def test_bad_counts(self):
        with pytest.raises(DomainError):
            read_tally_csv("basis,t_ms,xi,chi,n_retained,n_lost\nx,0,0,0,-1,10\n")

    def test_unparseable_field(self):
        with pytest.raises(DomainError):
            read_tally_csv("basis,t_ms,xi,chi,n_retained,n_lost\nx,zero,0,0,10,10\n")

    def test_missing_basis(self):
        text = "basis,t_ms,xi,chi,n_retained,n_lost\nx,0,0,0,10,10\ny,0,0,0,10,10\n"
        with pytest.raises(DomainError):
            pauli_tallies_at_time(read_tally_csv(text), 0.0)
