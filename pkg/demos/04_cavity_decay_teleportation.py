"""
Teleporting an atomic state through photons leaking out of two cavities.

Alice maps her atom c|g> + c'|e> onto her cavity as c|0> + i c'|1>.  Bob
prepares (|e,0> + i|g,1>)/sqrt(2).  Both cavities leak into a 50-50 beam
splitter with detectors D1 and D2.  Exactly one click heralds success; Bob
then applies a detector-dependent phase to his atom.  Times are in units of
1/kappa; none of this is a prediction in physical units.
"""
import numpy as np

from qtelesim import cavity
from qtelesim.cavity import AtomQubit, CavityParams
from qtelesim.rng import RngStream

inp = AtomQubit.normalized(1, 1j)
print(f"Alice after mapping:  {np.round(cavity.map_atom_to_cavity(inp).amps, 4)}  (|g0>,|g1>,|e0>,|e1>)")
print(f"Bob after preparing:  {np.round(cavity.prepare_bob_entangled().amps, 4)}")

for T in (0.1, 1.0, 10.0):
    params = CavityParams(T=T)
    summary = cavity.run_protocol(inp, params, 2000, RngStream(5))
    p, _, f = cavity.single_click_oracle(inp, params)
    print(f"\nkappa T = {T:>4}: success {summary.success_rate:.4f} (exact {p:.4f}), "
          f"mean conditional fidelity {summary.mean_fidelity:.6f} (exact {f:.6f})")
    print(f"  clicks per trajectory {summary.click_counts}, "
          f"heralds with photons left: {summary.misheralded}")

# One trajectory in detail.
rec = cavity.evolve_heralded(cavity.joint_initial_state(inp), CavityParams(), RngStream(5).substream(1))
print(f"\none trajectory: clicks {rec.clicks}")
bob, ok = cavity.herald_and_correct(rec)
if ok:
    print(f"Bob's corrected atom: c = {bob.c:.6f}, c' = {bob.c_e:.6f}")
