"""
Quantum scissors: teleport an optical mode and cut it at one photon.

One photon enters BS2 with vacuum in the other port.  One BS2 output is mixed
with the input mode on BS1, the other goes to Bob.  A single count at D1 or
D2 (with nothing at the other detector) leaves Bob's mode in c0|0> + c1|1>,
with a phase flip needed after a D2 count.  Each success pattern has
probability (|c0|^2 + |c1|^2)/4.
"""
import numpy as np

from qtelesim import scissors
from qtelesim.rng import RngStream
from qtelesim.scissors import FockVector

inp = FockVector([1, 1, 1])  # (|0> + |1> + |2>)/sqrt(3)
print(f"input amplitudes {np.round(inp.amps, 4)}")

probs = scissors.herald_probabilities(inp)
for pattern in sorted(probs):
    if probs[pattern] > 1e-15:
        print(f"  P(D1={pattern.n1}, D2={pattern.n2}) = {probs[pattern]:.12f}")
print(f"success probability {scissors.success_probability(inp):.12f} (expected 2/3 / 2 = 1/3)")

for pattern in scissors.SUCCESS_PATTERNS:
    r = scissors.conditional_output(inp, pattern)
    print(f"\npattern {pattern}: Bob's raw mode {np.round(r.output.amps, 4)}"
          f"  phase flip needed: {r.needs_phase_flip}")
    print(f"  after correction {np.round(r.corrected().amps, 4)}")

# For a qubit input the device is plain teleportation that works half the time.
qubit = FockVector([0.6, 0.8j])
base = RngStream(2)
n = 20_000
hits = sum(scissors.scissors_run(qubit, rng=base.substream(i)).success for i in range(n))
print(f"\nqubit input: {hits} successes in {n} runs ({hits / n:.4f})")
