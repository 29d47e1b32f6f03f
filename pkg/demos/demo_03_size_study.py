"""
A small size study
==================

Rejection rates of both tests under linear AR(1) nulls. The paper-scale
study uses 1000 replications and B = 1000; this one is sized to run in
about a minute. The bundled ``table1.toy.cfg`` runs the desk-scale version
through ``tarboot mc``.
"""

from tarboot import ARParams, ExperimentDesign, RngSeed, run_size_experiment

designs = [
    ExperimentDesign(ARParams(0.0, (phi,)), n=50, mc_reps=100, bootstrap_B=199,
                     n_sim=1000, seed=RngSeed(2024))
    for phi in (0.0, 0.5, 0.9)
]
table = run_size_experiment(designs)
print(table.to_text())

###############################################################################
# Per-replicate results stay available for further analysis.

out = table.outcomes[-1]
print("first five bootstrap p-values at phi1=0.9:", out.p_boot[:5].round(3))
