#!/usr/bin/env python3
"""Walk through the two-round entangling protocol with perfect detectors.

Two detuned three-level atoms are excited, their cavity outputs meet on a
beam splitter, and one click per round heralds a maximally entangled pair.
This script follows the quantum state through both rounds for a handful of
trajectories and shows that the click-time phase is exactly correctable.
"""

import numpy as np

from photonbeat import bkprotocol as bk

params = bk.BKParams(kappa_eff=1.0, delta=0.8, gamma_r=1.0)
print(f"detuning delta = {params.delta} kappa_eff\n")

samples = bk.sample_protocol(params, n_traj=2000, seed=42, detectors="ideal")
print(f"success fraction (expect ~1/2): {samples.success.mean():.3f}")

space = bk.ATOM_SPACE
qubit_idx = [space.flat_index((a, b)) for a in (0, 1) for b in (0, 1)]

print("\n  t1      t2      clicks   F(raw)   F(corrected)")
shown = 0
for i in np.nonzero(samples.success)[0]:
    outcome = bk.ClickOutcome(samples.t1[i], samples.t2[i], int(samples.m[i]))
    amp = samples.final_states[i][qubit_idx]
    psi = bk.StateVector(amp / np.linalg.norm(amp), bk.QUBIT_SPACE)
    target = bk.bell_state(outcome.m)
    f_raw = abs(target.overlap(psi)) ** 2
    f_fix = abs(target.overlap(bk.phase_correction(psi, outcome, params.delta))) ** 2
    print(
        f"  {outcome.t1:6.3f}  {outcome.t2:6.3f}  "
        f"{samples.first_label[i]},{samples.second_label[i]}  "
        f"{f_raw:7.4f}  {f_fix:12.10f}"
    )
    shown += 1
    if shown == 8:
        break

print(
    "\nThe raw fidelity wanders with the click times; a z-rotation by "
    "-delta*(t1-t2) on the first qubit restores unit fidelity every time."
)
