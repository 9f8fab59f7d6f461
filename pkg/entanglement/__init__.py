"""
Entanglement of lossy parametric down-conversion states.

Modules:
- spin_algebra: Clebsch-Gordan coefficients and total-spin projectors.
- pdc_probability: photon-counting distribution after loss.
- block_decomposition: symmetric block states from populations.
- ppt_geometry: PPT polytopes per photon-number block.
- entropy_solver: relative entropy of entanglement.
- oracle_sim: brute-force truncated Fock-space cross-check.
"""
