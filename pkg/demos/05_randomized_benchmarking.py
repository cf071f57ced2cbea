"""Reference and interleaved randomized benchmarking of the simulated gate.

Sequences of random two-qubit Cliffords are followed by the inverting
Clifford.  The CZ inside each Clifford is the simulated open-system gate,
so the decay rate reflects its error.  Interleaving an extra CZ isolates it.
"""
from stacz import DeviceParams, TrajectorySpec, solve_theta_f, synthesize
from stacz import benchmarking as rb
from stacz.dynamics import gate_channel
import numpy as np

params = DeviceParams.reference()
wave = synthesize(params, TrajectorySpec.for_device(params, solve_theta_f(params.closed(), 20.0)))
cz = gate_channel(wave, params, decoherence=True)
print(f"direct average gate fidelity of the CZ: {cz.average_gate_fidelity(np.diag([1, 1, 1, -1])):.5f}")

group = rb.build_clifford_group()
n_sq, n_cz = group.average_gate_counts()
print(f"{len(group)} Cliffords, on average {n_sq:.3f} single-qubit gates and {n_cz:.2f} CZ each")

noise = rb.GateNoise(cz=cz)
lengths = [1, 5, 10, 20, 40, 80]
ref = rb.rb_reference(group, noise, lengths, 20, seed=1, threads=4)
inter = rb.rb_interleaved(group, noise, cz, lengths, 20, seed=2, threads=4)
_, _, p_ref = rb.fit_power_law(ref)
_, _, p_cz = rb.fit_power_law(inter)

print("\n  m   reference   interleaved")
for m, a, b in zip(lengths, ref.mean, inter.mean):
    print(f"{m:3d}   {a:.4f}      {b:.4f}")
print(f"\np_ref = {p_ref:.5f}, p_CZ = {p_cz:.5f}")
print(f"interleaved estimate F_g = {rb.interleaved_fidelity(p_cz, p_ref):.5f}")
