"""A tour of the channel toolkit.

Builds the standard qubit channels, checks that they are trace preserving,
shows depolarizing(3/4) erasing a state, and confirms that the thermal-qubit
Lindblad dynamics over one interval is exactly a generalized amplitude
damping channel followed by free rotation.
"""

import numpy as np

from dissipative_qml import channels, lindblad, qrl
from dissipative_qml.qcore import random_density, trace_distance

rng = np.random.default_rng(7)
rho = random_density(2, rng)
print("input state\n", np.round(rho, 4))

for name in ("amplitude_damping", "phase_damping", "depolarizing"):
    ch = channels.channel_by_name(name, p=0.3)
    print(f"{name:18s} completeness error {channels.completeness_error(ch):.1e}  output diag",
          np.round(np.diag(ch(rho)).real, 4))

print("\ndepolarizing(3/4) sends every state to I/2:")
print(np.round(channels.depolarizing(0.75)(rho), 12))

params = qrl.QrlParams(gamma0_tilde=0.5, T_tilde=0.3, tau_tilde=1.0)
model = lindblad.thermal_qubit_model(0.5, 0.3, eigenbasis=params.eigenbasis)
gap = trace_distance(qrl.qrl_channel(params)(rho), lindblad.evolve(model, rho, 1.0))
print(f"\nGAD + rotation vs Liouvillian exponential: trace distance {gap:.1e}")
gamma, q = channels.gad_parameters(params.gad)
print(f"damping probability {gamma:.4f}, excited bath weight {q:.4f}")
