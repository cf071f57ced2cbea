import math

import numpy as np
import pytest

from stacz.core import COMPUTATIONAL, TWO_PI, mhz
from stacz.dynamics import virtual_z_compensate
from stacz.experiments import (
    ChevronScan,
    RamseyTrace,
    default_chevron_grids,
    extract_swap_frequency,
    fit_coupling,
    fit_cosine_phase,
    ramsey_phase_scan,
    swap_frequency_model,
    swap_spectroscopy,
)


@pytest.fixture(scope="module")
def full_scan(closed_device):
    return swap_spectroscopy(closed_device)


class TestChevron:
    def test_default_grids(self, closed_device):
        w, t = default_chevron_grids(closed_device)
        assert len(w) == 41 and len(t) == 251
        assert (w[-1] - closed_device.omega_res) / TWO_PI * 1e3 == pytest.approx(60.0)

    def test_resonant_rabi(self, closed_device):
        t = np.linspace(0, 200, 101)
        scan = swap_spectroscopy(closed_device, closed_device.omega_res, t, model="subspace")
        np.testing.assert_allclose(scan.p11[0], np.cos(math.sqrt(2) * closed_device.g * t) ** 2, atol=1e-12)
        full = swap_spectroscopy(closed_device, closed_device.omega_res, t)
        np.testing.assert_allclose(full.p11[0], scan.p11[0], atol=0.05)

    def test_far_detuned(self, closed_device):
        scan = swap_spectroscopy(closed_device, closed_device.omega_res + mhz(1000.0), np.linspace(0, 500, 51))
        assert scan.p11.min() > 0.999

    def test_subspace_symmetry(self, closed_device):
        d = mhz(np.linspace(5, 60, 12))
        t = np.linspace(0, 500, 251)
        plus = swap_spectroscopy(closed_device, closed_device.omega_res + d, t, model="subspace")
        minus = swap_spectroscopy(closed_device, closed_device.omega_res - d, t, model="subspace")
        assert np.abs(plus.p11 - minus.p11).max() < 1e-6

    def test_full_model_symmetry_broken_weakly(self, full_scan):
        # |02> shifts the full-model chevron; the mirror mismatch stays well below the contrast
        p = full_scan.p11
        assert np.abs(p - p[::-1]).max() < 0.5

    def test_threads_agree(self, closed_device):
        w, t = default_chevron_grids(closed_device)
        a = swap_spectroscopy(closed_device, w[::8], t, threads=1)
        b = swap_spectroscopy(closed_device, w[::8], t, threads=3)
        assert np.array_equal(a.p11, b.p11)

    def test_validation(self, closed_device):
        with pytest.raises(ValueError):
            swap_spectroscopy(closed_device, [], [1.0])
        with pytest.raises(ValueError):
            swap_spectroscopy(closed_device, model="lab")
        with pytest.raises(ValueError):
            ChevronScan(np.zeros(2), np.zeros(3), np.zeros((3, 2)))

    def test_csv(self, tmp_path, closed_device):
        scan = swap_spectroscopy(closed_device, closed_device.omega_res + mhz(np.array([-10.0, 10.0])),
                                 np.linspace(0, 10, 6))
        scan.to_csv(tmp_path / "c.csv")
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0] == "omega_qA_GHz,t_ns,P11" and len(lines) == 13


class TestSwapFrequency:
    def test_synthetic_cosine(self):
        t = np.linspace(0, 500, 251)
        f = extract_swap_frequency(np.cos(TWO_PI * 0.026 * t), t)
        bin_width = 1 / (4 * 251 * 2.0)
        assert abs(f / TWO_PI - 0.026) < 0.5 * bin_width

    def test_resonant_trace(self, closed_device):
        t = np.linspace(0, 500, 251)
        scan = swap_spectroscopy(closed_device, closed_device.omega_res, t, model="subspace")
        f = extract_swap_frequency(scan.p11[0], t)
        assert f / TWO_PI * 1e3 == pytest.approx(2 * math.sqrt(2) * 9.19, abs=0.05)

    def test_detuned_columns(self, closed_device):
        t = np.linspace(0, 500, 251)
        bin_width = TWO_PI / (4 * 251 * 2.0)
        for d in mhz(np.array([-40.0, 15.0, 55.0])):
            scan = swap_spectroscopy(closed_device, closed_device.omega_res + d, t, model="subspace")
            assert abs(extract_swap_frequency(scan.p11[0], t) - math.sqrt(8 * closed_device.g**2 + d**2)) < bin_width

    @pytest.mark.parametrize(
        "p, t",
        [(np.ones(64), np.arange(64.0)), (np.cos(np.arange(16.0)), np.arange(16.0)),
         (np.cos(np.arange(64.0)), np.arange(64.0) ** 1.1)],
    )
    def test_rejects(self, p, t):
        with pytest.raises(ValueError):
            extract_swap_frequency(p, t)


class TestFitCoupling:
    def test_closed_loop_full(self, full_scan, closed_device):
        fit = fit_coupling(full_scan)
        assert abs(fit.g / closed_device.g - 1) < 0.01
        assert abs(fit.omega_res - closed_device.omega_res) / TWO_PI * 1e3 < 0.5

    def test_closed_loop_subspace(self, closed_device):
        fit = fit_coupling(swap_spectroscopy(closed_device, model="subspace"))
        assert fit.g == pytest.approx(closed_device.g, rel=1e-3)
        assert abs(fit.omega_res - closed_device.omega_res) < mhz(0.01)
        assert fit.residual < mhz(0.05)

    def test_single_column(self, closed_device):
        with pytest.raises(ValueError):
            fit_coupling(swap_spectroscopy(closed_device, closed_device.omega_res))

    def test_not_bracketing(self, closed_device):
        w = closed_device.omega_res + mhz(np.linspace(10, 60, 6))
        with pytest.raises(ValueError, match="bracket"):
            fit_coupling(swap_spectroscopy(closed_device, w))

    def test_model_vertex(self):
        w = np.linspace(-1, 1, 201)
        assert w[np.argmin(swap_frequency_model(w, 0.05, 0.2))] == pytest.approx(0.2)


class TestRamsey:
    def test_bare(self, closed_device):
        tr = ramsey_phase_scan(closed_device, None, 0)
        np.testing.assert_allclose(tr.p1, (1 + np.cos(tr.phase)) / 2, atol=1e-12)
        assert fit_cosine_phase(tr) == pytest.approx(0.0, abs=1e-12)

    def test_controlled_pi(self, device, cz_waveform, cz_result):
        phi0 = fit_cosine_phase(ramsey_phase_scan(device, cz_waveform, 0))
        phi1 = fit_cosine_phase(ramsey_phase_scan(device, cz_waveform, 1))
        diff = np.angle(np.exp(1j * (phi1 - phi0)))
        assert abs(abs(diff) - math.pi) < 0.02
        block = np.asarray(virtual_z_compensate(cz_result))[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]
        assert abs(np.angle(np.exp(1j * (diff - np.angle(block[3, 3]))))) < 0.02

    def test_uncompensated_offset(self, device, cz_waveform, cz_result):
        phi0 = fit_cosine_phase(ramsey_phase_scan(device, cz_waveform, 0, compensate=False))
        assert abs(np.angle(np.exp(1j * (phi0 - cz_result.phase_A)))) < 0.02

    def test_control_state(self, device):
        with pytest.raises(ValueError):
            ramsey_phase_scan(device, None, 2)

    def test_csv(self, tmp_path, device):
        ramsey_phase_scan(device, None, 1).to_csv(tmp_path / "r.csv")
        assert (tmp_path / "r.csv").read_text().startswith("phase_rad,P1\n")


class TestCosineFit:
    phase = np.linspace(0, TWO_PI, 36, endpoint=False)

    @pytest.mark.parametrize("shift", [0.0, 1.2, -2.9])
    def test_exact(self, shift):
        assert fit_cosine_phase(RamseyTrace(self.phase, np.cos(self.phase - shift), 0)) == pytest.approx(shift)

    def test_noisy(self):
        rng = np.random.default_rng(5)
        p = 0.4 * np.cos(self.phase - 2.5) + 0.5 + 0.01 * rng.standard_normal(self.phase.size)
        assert fit_cosine_phase(RamseyTrace(self.phase, p, 0)) == pytest.approx(2.5, abs=0.05)

    def test_rejects(self):
        with pytest.raises(ValueError, match="contrast"):
            fit_cosine_phase(RamseyTrace(self.phase, 0.5 + 0.01 * np.cos(self.phase), 0))
        with pytest.raises(ValueError):
            fit_cosine_phase(RamseyTrace(self.phase[:6], np.cos(self.phase[:6]), 0))
        with pytest.raises(ValueError):
            fit_cosine_phase(RamseyTrace(self.phase / 2, np.cos(self.phase), 0))
