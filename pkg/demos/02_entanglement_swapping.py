"""
Entangling two qubits that never met.

Pairs (1,4) and (2,3) each start in a Bell state.  A Bell measurement on
qubits 1 and 2 projects qubits 3 and 4 onto a Bell state too, fixed by the
two input pairs and the measurement result.
"""
import numpy as np

from qtelesim import core, swap
from qtelesim.rng import RngStream
from qtelesim.teleport import BellOutcome

print("pair (3,4) as a function of the outcome, for each pair14 (rows) / pair23 (cols)")
print("       " + "   ".join(f"{b.name:>4}" for b in BellOutcome))
for a in BellOutcome:
    row = []
    for b in BellOutcome:
        t = swap.swap_table(a, b)
        row.append("".join(t[k].name for k in BellOutcome))
    print(f"  {a.name}   " + "   ".join(row))

r = swap.swap("A", "D", RngStream(3))
rho3 = core.reduced_density(r.pair34_state, (0,)).matrix
print(f"\nsampled run with pairs A, D: outcome {r.outcome.name} (p = {r.probability:.12f})")
print(f"  pair (3,4) is Phi_{r.bell_label.name} with fidelity {r.bell_fidelity:.12f}")
print(f"  reduced state of qubit 3:\n{np.round(rho3, 12)}")

print("\nreading swapping as teleportation of either qubit:",
      all(swap.swap_as_teleport_check(a, b) for a in BellOutcome for b in BellOutcome))
