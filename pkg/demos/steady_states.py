"""Steady states of two qubits sharing a reservoir.

A collective thermal (or squeezed) bath has a multi-dimensional space of
steady states, so where the system ends up depends on where it starts.
The singlet never decays; the other states relax toward the bath state.
"""

import numpy as np

from dissipative_qml import lindblad
from dissipative_qml.qcore import basis_state, projector

for nbar in (0.0, 0.5):
    model = lindblad.two_qubit_thermal_model(nbar)
    smap = lindblad.steady_state_map(model)
    print(f"thermal bath nbar={nbar}: {len(lindblad.steady_states(model))} independent steady states, "
          f"CP={smap.is_completely_positive()}")
    for label, idx in (("|00>", 0), ("|01>", 1), ("|11>", 3)):
        final = smap(projector(basis_state(idx, 4)))
        s = lindblad.singlet()
        print(f"  {label} -> singlet population {abs(np.real(s.conj() @ final @ s)):.3f}")
    print("  slowest Liouvillian eigenvalues", np.round(lindblad.liouvillian_spectrum(model)[:6], 4))

sq = lindblad.steady_state_map(lindblad.squeezed_reservoir_model(0.3, 0.0))
print(f"\nsqueezed bath r=0.3: Kraus rank of the asymptotic map {len(sq.to_kraus().kraus_ops)}")
