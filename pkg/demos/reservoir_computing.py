"""Noisy quantum reservoir computing on a synthetic regression task.

Encodes product states, runs them through a random circuit with per-gate
noise, reads out single-qubit Pauli expectations and fits a ridge readout.
Prints test MSE for each noise kind and strength.
"""

from dissipative_qml import qrc

ds = qrc.synthetic_dataset(n_qubits=4, n_samples=60, data_seed=0)
rows = qrc.run_experiment(ds, qrc.default_noise_grid())
print(f"{'noise':18s} {'p':>6} {'train MSE':>11} {'test MSE':>11}")
for r in rows:
    print(f"{r['noise_kind']:18s} {r['p']:6.3f} {r['mse_train']:11.3e} {r['mse_test']:11.3e}")
