"""Process tomography of the simulated gate, with and without decoherence."""
import numpy as np

from stacz import DeviceParams, TrajectorySpec, solve_theta_f, synthesize
from stacz.dynamics import gate_channel
from stacz.tomography import PAULI_LABELS, ideal_cz_chi, process_fidelity, process_tomography, project_physical

params = DeviceParams.reference()
wave = synthesize(params, TrajectorySpec.for_device(params, solve_theta_f(params.closed(), 20.0)))

for decoherence in (False, True):
    chi = process_tomography(gate_channel(wave, params, decoherence=decoherence))
    print(f"decoherence={decoherence!s:5}  F_P = {process_fidelity(chi, ideal_cz_chi()):.5f}")

# Finite statistics: 1000 shots per measurement setting, then a physical projection.
rng = np.random.default_rng(7)
noisy = process_tomography(gate_channel(wave, params), shots=1000, rng=rng)
print(f"1000 shots: F_P = {process_fidelity(noisy, ideal_cz_chi()):.4f}, "
      f"min eigenvalue {np.linalg.eigvalsh(np.asarray(noisy)).min():+.4f}")
phys = project_physical(noisy)
print(f"projected:  F_P = {process_fidelity(phys, ideal_cz_chi()):.4f}, "
      f"min eigenvalue {np.linalg.eigvalsh(np.asarray(phys)).min():+.1e}")

ideal = np.abs(np.asarray(ideal_cz_chi()))
print("nonzero entries of the ideal CZ chi:", ", ".join(
    f"({PAULI_LABELS[m]},{PAULI_LABELS[n]})" for m, n in zip(*np.nonzero(ideal > 1e-9)) if m <= n))
