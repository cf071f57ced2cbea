"""Design the detuning pulse for a controlled-Z gate and inspect it.

The gate steers |11> through the avoided crossing with |20> along a
Hanning-shaped polar-angle trajectory.  The counter-diabatic correction is
absorbed by rescaling each segment's duration, so the only control is the
frequency of qubit A.
"""

from stacz import DeviceParams, TWO_PI, TrajectorySpec, solve_theta_f, synthesize
from stacz.dynamics import conditional_phase, propagate_unitary

params = DeviceParams.reference()
print(f"idle: omega_A/2pi = {params.omega_qA / TWO_PI:.3f} GHz, crossing at {params.omega_res / TWO_PI:.3f} GHz")

# Pick the turning angle that accumulates a pi conditional phase in 2T = 40 ns.
theta_f = solve_theta_f(params.closed(), 20.0)
spec = TrajectorySpec.for_device(params, theta_f)
wave = synthesize(params, spec)
print(f"theta_i = {spec.theta_i:.4f} rad, theta_f = {theta_f:.4f} rad")
print(f"reference duration 40 ns, rescaled duration {wave.total_duration:.2f} ns")

# The deepest excursion sits at the midpoint of the pulse.
lowest = wave.omega_qA.min() / TWO_PI
print(f"closest approach: omega_A/2pi = {lowest:.4f} GHz "
      f"({(lowest - params.omega_res / TWO_PI) * 1e3:+.1f} MHz from resonance)")

result = propagate_unitary(wave, params.closed())
print(f"conditional phase {conditional_phase(result.unitary):.5f} rad, leakage {result.leakage:.1e}")

# A coarse textual picture of the pulse.
grid, omega = wave.resample(4.0)
for t, w in zip(grid, omega):
    f = w / TWO_PI
    bar = int(round((params.omega_qA / TWO_PI - f) * 100))
    print(f"{t:6.1f} ns  {f:.4f} GHz  " + "#" * bar)

wave.to_csv("waveform.csv")
print("saved waveform.csv")
