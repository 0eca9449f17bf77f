"""
Teleporting one qubit with a shared singlet.

Alice holds an unknown qubit a|0> + b|1> and half of the singlet Phi_A; Bob
holds the other half.  A Bell measurement on Alice's two qubits gives one of
four equally likely results.  Two classical bits tell Bob which of
I, sigma_z, -sigma_x, -i sigma_y to apply, after which his qubit is the input.
"""
import numpy as np

from qtelesim import core, teleport
from qtelesim.rng import RngStream
from qtelesim.teleport import BellOutcome, QubitState

state = QubitState.normalized(0.6, 0.8j)
print(f"input  a = {state.a:.4f}, b = {state.b:.4f}\n")

# Regroup |in>_1 |Phi_A>_23 in the Bell basis of qubits 1, 2.
dec = teleport.bell_decompose(state)
print(f"global phase pulled out of the regrouping: {dec.global_phase:+.0f}")
for k in BellOutcome:
    amps = dec.branches[k].amps
    print(f"  |Phi_{k.name}>_12 x ({amps[0]:+.2f}|0> {amps[1]:+.2f}|1>)_3 / 2")

# Before the bits arrive, Bob's qubit is maximally mixed whatever the input.
rho = teleport.bob_premessage_density(state).matrix
print(f"\nBob's qubit before the message:\n{np.round(rho, 12)}\n")

# A few sampled runs.
NAMES = {"A": "I", "B": "sigma_z", "C": "-sigma_x", "D": "-i sigma_y"}
base = RngStream(7)
for i in range(6):
    r = teleport.teleport(state, base.substream(i))
    print(f"run {i}: outcome {r.outcome.name}, bits {r.bits}, "
          f"Bob applies {NAMES[r.outcome.name]:<10} fidelity {r.fidelity:.12f}")

# Alice's qubits end up in the measured Bell state, so no copy of |in> is left.
r = teleport.teleport(state, outcome="C")
print(f"\nAlice after outcome C: fidelity with Phi_C = "
      f"{core.fidelity(r.alice_state, teleport.bell_state('C')):.12f}")
