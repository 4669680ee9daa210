"""Pair densities, information measures and entanglement for helium Se states.

For the lowest singlet and triplet resonances the radial pair density shows an
antinode or a node on r1 = r2.  The bound-state part prints rho(0), Shannon and
Fisher values of rho(r), and the one-electron entanglement of each state.

    python3 demos/densities_and_entanglement.py
"""

import numpy as np

from heliumci import (
    BSplineBasis,
    SlaterIntegralCache,
    assemble_and_diagonalize,
    build_config_basis,
    default_pairs,
    diagonal_symmetry_diagnostic,
    feshbach_spectrum,
    fisher_information,
    linear_entropy,
    make_exponential_knots,
    pair_density,
    reduced_density_matrix,
    scaled_origin_density,
    shannon_entropy,
    slater_rank,
    solve_orbitals,
    state_density,
    von_neumann_entropy,
)

orbitals = solve_orbitals(BSplineBasis(make_exponential_knots(0.1, 150.0, 20, 7)), 2.0, range(5))
cache = SlaterIntegralCache(orbitals)
grid = np.concatenate([[0.0], np.geomspace(1e-2, 30.0, 59)])

for L, S, name in ((0, 0, "1Se"), (0, 1, "3Se")):
    cfg = build_config_basis(L, S, 1, default_pairs(L, 1, 4), orbitals)
    bound = assemble_and_diagonalize(cfg, orbitals, cache, 4)
    print(f"\n{name} bound states")
    print("  energy      rho(0)    Shannon   Fisher    S_L       S_VN     rank")
    for s in bound:
        d = state_density(s, orbitals)
        rdm = reduced_density_matrix(s)
        print(f"  {s.energy:.6f}  {scaled_origin_density(s, orbitals):.5f}  {shannon_entropy(d):.5f}  "
              f"{fisher_information(d):8.4f}  {linear_entropy(rdm):.6f}  {von_neumann_entropy(rdm):.6f}  {slater_rank(rdm)}")

    res = [s for s in feshbach_spectrum(L, S, 1, orbitals, l_max=4, cache=cache) if s.resonance]
    print(f"{name} resonances: diagonal of the pair density")
    for s in res[:4]:
        print(f"  {s.energy:.6f}  {diagonal_symmetry_diagnostic(pair_density(s, orbitals, grid))}")
