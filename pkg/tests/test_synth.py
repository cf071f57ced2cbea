import math

import numpy as np
import pytest
import scipy.linalg

from stacz.core import SQRT2, DeviceParams, control_phase, mhz, unitary_exp
from stacz.dynamics import _chain
from stacz.synth import (
    TrajectorySpec,
    Waveform,
    azimuth,
    counter_diabatic_offdiag,
    effective_rabi,
    idle_angle,
    quadrature_phase,
    segment_hamiltonians,
    solve_theta_f,
    synthesize,
    theta_dot_hanning,
    trajectory_samples,
)

REF = DeviceParams.reference(decoherence=False)
THETA_I = idle_angle(REF)


def spec(theta_f=2.36, T=20.0, n=2000):
    return TrajectorySpec(THETA_I, theta_f, T, n)


class TestHanning:
    def test_edges_and_peak(self):
        s = spec()
        assert theta_dot_hanning(0.0, s) == 0.0
        assert theta_dot_hanning(20.0, s) == pytest.approx(0.0, abs=1e-15)
        assert theta_dot_hanning(40.0, s) == pytest.approx(0.0, abs=1e-15)
        assert theta_dot_hanning(10.0, s) == pytest.approx(2 * (2.36 - THETA_I) / 20)

    def test_antisymmetric_halves(self):
        s = spec()
        t = np.linspace(0.1, 19.9, 37)
        np.testing.assert_allclose(theta_dot_hanning(t + 20, s), -theta_dot_hanning(t, s), atol=1e-15)

    def test_round_trip(self):
        samples = trajectory_samples(REF, spec())
        mid = len(samples.t) // 2
        assert samples.theta[mid] == pytest.approx(2.36, abs=1e-9)
        assert samples.theta[-1] == pytest.approx(THETA_I, abs=1e-9)

    def test_rejects_outside(self):
        with pytest.raises(ValueError):
            theta_dot_hanning(40.5, spec())


def test_counter_diabatic_examples():
    assert counter_diabatic_offdiag(0.0) == 0
    assert counter_diabatic_offdiag(0.2) == pytest.approx(0.1)
    peak = theta_dot_hanning(10.0, spec())
    assert peak == pytest.approx(0.228, abs=1e-3)
    assert counter_diabatic_offdiag(peak) == pytest.approx(0.114, abs=1e-3)


def test_effective_rabi_examples():
    g = 0.3
    assert effective_rabi(0.0, g) == pytest.approx(SQRT2 * g)
    assert effective_rabi(2 * SQRT2, 1.0) == pytest.approx(2.0)
    assert effective_rabi(-0.7, g) == effective_rabi(0.7, g)
    assert np.all(effective_rabi(np.linspace(-1, 1, 11), g) >= SQRT2 * g)


class TestAzimuth:
    def test_examples(self):
        g = 0.1
        assert azimuth(0.0, g) == 0
        assert azimuth(2 * SQRT2 * g, g) == pytest.approx(-math.pi / 4)
        assert azimuth(0.3, g) < 0

    def test_rate_matches_derivative(self):
        s = spec()
        t = np.linspace(0.5, 39.5, 79)
        h = 1e-5
        numeric = (azimuth(theta_dot_hanning(t + h, s), REF.g) - azimuth(theta_dot_hanning(t - h, s), REF.g)) / (2 * h)
        samples = trajectory_samples(REF, s)
        analytic = np.interp(t, samples.t, samples.phi_dot)
        np.testing.assert_allclose(analytic, numeric, atol=1e-6)
        assert samples.phi_dot[0] == 0 and abs(samples.phi_dot[-1]) < 1e-15


class TestSpecValidation:
    @pytest.mark.parametrize("args", [(0.0, 1.0, 20), (1.0, 0.5, 20), (0.1, math.pi, 20), (0.1, 1.0, 0.0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            TrajectorySpec(*args)

    def test_rejects_coarse_grid(self):
        with pytest.raises(ValueError):
            TrajectorySpec(0.1, 1.0, 20, 50)


class TestSynthesize:
    def test_flat_waveform(self):
        w = synthesize(REF, spec(theta_f=THETA_I))
        assert w.total_duration == pytest.approx(40.0, rel=1e-13)
        np.testing.assert_allclose(w.omega_qA, REF.omega_qA, atol=1e-9)

    def test_reference_waveform_invariants(self):
        w = synthesize(REF, spec())
        assert w.tau[0] == 0 and np.all(np.diff(w.tau) > 0)
        assert abs(w.omega_qA[0] - REF.omega_qA) < 1e-9
        assert abs(w.omega_qA[-1] - REF.omega_qA) < 1e-9
        assert w.total_duration > 40.0
        assert 50.0 < w.total_duration < 54.0
        # the excursion reaches past resonance, where theta crosses pi/2
        assert w.omega_qA.min() < REF.omega_res

    def test_rescale_factor_range(self):
        s = trajectory_samples(REF, spec())
        assert np.all(s.scale > 0) and np.all(s.scale <= 1)

    def test_idle_angle_must_match(self):
        with pytest.raises(ValueError):
            synthesize(REF, TrajectorySpec(0.05, 2.0, 20.0))

    def test_theta_leaving_range(self, monkeypatch):
        import stacz.synth as synth

        real = synth._hanning_rates

        def overshoot(t, s):
            rate, accel = real(t, s)
            return 2 * rate, 2 * accel

        monkeypatch.setattr(synth, "_hanning_rates", overshoot)
        with pytest.raises(ValueError, match="leaves"):
            trajectory_samples(REF, spec(theta_f=2.5, n=100))

    @pytest.mark.parametrize("n", [500, 2000])
    def test_segment_rescaling_identity(self, n):
        h_base, dt, h_new, dtau = segment_hamiltonians(REF, spec(n=n))
        u_base = unitary_exp(h_base, np.full(len(h_base), dt))
        u_new = unitary_exp(h_new, dtau)
        err = np.linalg.norm(u_base - u_new, ord=2, axis=(1, 2))
        assert err.max() < 1e-10
        np.testing.assert_allclose(h_new[:, 0, 1], SQRT2 * REF.g, rtol=1e-13)

    def test_rescaled_product_matches_reference(self):
        h_base, dt, h_new, dtau = segment_hamiltonians(REF, spec(n=500))
        ref = _chain(np.array([scipy.linalg.expm(-1j * h * dt) for h in h_base]))
        new = _chain(unitary_exp(h_new, dtau))
        assert np.linalg.norm(ref - new, 2) < 1e-8

    def test_continuity_first_order(self):
        jumps = []
        for n in (500, 1000, 2000):
            w = synthesize(REF, spec(n=n))
            jumps.append(np.abs(np.diff(w.omega_qA)).max())
        ratios = np.array(jumps[:-1]) / np.array(jumps[1:])
        np.testing.assert_allclose(ratios, 2.0, rtol=0.05)


def test_dressed_subspace_follows_trajectory_exactly():
    """The rescaled 2x2 evolution returns the idle eigenstate with the adiabatic phase."""
    theta_f = solve_theta_f(REF, 20.0, model="quadrature")
    s = spec(theta_f=theta_f)
    h_base, _, h_new, dtau = segment_hamiltonians(REF, s)
    u = _chain(unitary_exp(h_new, dtau))
    e, v = np.linalg.eigh(h_base[0])
    lower = v[:, np.argmax(np.abs(v[0]))]
    amp = lower.conj() @ u @ lower
    assert abs(amp) > 1 - 1e-9
    samples = trajectory_samples(REF, s)
    assert np.angle(amp) == pytest.approx(control_phase(samples.t, samples.theta, REF.g), abs=2e-3)
    assert np.angle(amp) == pytest.approx(math.pi, abs=1e-5)


class TestSolveThetaF:
    def test_quadrature_model(self):
        theta = solve_theta_f(REF, 20.0, model="quadrature")
        assert theta == pytest.approx(2.36, abs=0.05)
        assert theta == pytest.approx(2.33573, abs=1e-4)  # frozen
        assert quadrature_phase(REF, spec(theta_f=theta)) == pytest.approx(math.pi, abs=1e-6)

    def test_propagated_model(self, theta_f):
        assert theta_f == pytest.approx(2.36, abs=0.05)
        assert theta_f == pytest.approx(2.385374, abs=1e-4)  # frozen

    def test_small_target_stays_near_idle(self):
        theta = solve_theta_f(REF, 20.0, target_phase=0.01)
        assert THETA_I < theta < THETA_I + 0.05

    def test_no_root(self):
        with pytest.raises(ValueError, match="no theta_f"):
            solve_theta_f(REF, 1.0, model="quadrature")

    def test_target_range(self):
        with pytest.raises(ValueError):
            solve_theta_f(REF, 20.0, target_phase=7.0)


def test_phase_linear_in_duration():
    short = quadrature_phase(REF, spec(theta_f=2.0, T=20.0))
    long = quadrature_phase(REF, spec(theta_f=2.0, T=40.0))
    assert long == pytest.approx(2 * short, rel=1e-12)


class TestWaveformIO:
    def test_csv(self, tmp_path):
        w = synthesize(REF, spec(n=200))
        w.to_csv(tmp_path / "w.csv")
        data = np.loadtxt(tmp_path / "w.csv", delimiter=",", skiprows=1)
        header = (tmp_path / "w.csv").read_text().splitlines()[0]
        assert header == "tau_ns,omega_qA_over_2pi_GHz"
        np.testing.assert_allclose(data[:, 1], w.omega_qA / (2 * math.pi), rtol=1e-11)

    def test_json_round_trip(self, tmp_path):
        w = synthesize(REF, spec(n=200))
        w.to_json(tmp_path / "w.json")
        back = Waveform.from_json(tmp_path / "w.json")
        np.testing.assert_allclose(back.segment_omega, w.segment_omega, rtol=1e-14)
        assert back.spec == w.spec and back.params == w.params

    def test_resample(self):
        w = synthesize(REF, spec(n=200))
        for step in (1.0, 0.1):
            grid, omega = w.resample(step)
            assert grid[0] == 0 and grid[-1] <= w.total_duration
            assert np.all(np.diff(grid) == pytest.approx(step))
            assert omega.min() >= w.omega_qA.min() - 1e-12

    def test_rectangle(self):
        w = Waveform.rectangle(mhz(5000.0), 12.0)
        assert w.total_duration == 12.0
        assert Waveform.rectangle(1.0, 0.0).total_duration == 0.0
