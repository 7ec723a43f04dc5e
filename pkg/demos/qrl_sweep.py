"""Does a dissipative environment help a reinforcement-learning qubit agent?

Sweeps the environment interaction time for three bath settings and prints
the asymptotic fidelity F_a with its standard error. Uses a reduced ensemble
so it finishes in a few seconds; pass ``full`` for N=1000, K=500.
"""

import sys

from dissipative_qml import qrl

full = sys.argv[1:] == ["full"]
params = qrl.QrlParams(n_realizations=1000 if full else 200, n_iterations=500 if full else 200)
rows = qrl.sweep_tau(params, qrl.default_tau_grid(9))
print(f"{'tau':>6} " + " ".join(f"{f'G0={g},T={t}':>22}" for g, t in qrl.SWEEP_CONFIGS))
for i in range(9):
    cells = [rows[i + 9 * c] for c in range(3)]
    print(f"{cells[0]['tau_tilde']:6.2f} " + " ".join(f"{r['F_a']:14.4f} +- {r['F_a_stderr']:.4f}" for r in cells))
print("\nNear tau = 2*pi the weakly coupled cold bath keeps the agent close to the target.")
