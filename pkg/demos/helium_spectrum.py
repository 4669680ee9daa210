"""Helium 1Se: from hydrogenic B-spline orbitals to the CI ground state.

Builds He+ orbitals on the default basis, then grows the angular expansion
l_max = 0..4 and prints the lowest eigenvalue at each step.  The Q-projected
block (1s removed) then gives the lowest doubly excited states.

    python3 demos/helium_spectrum.py
"""

from heliumci import (
    BSplineBasis,
    SlaterIntegralCache,
    assemble_and_diagonalize,
    build_config_basis,
    default_pairs,
    feshbach_spectrum,
    make_exponential_knots,
    solve_orbitals,
)

basis = BSplineBasis(make_exponential_knots(0.1, 150.0, 20, 7))
orbitals = solve_orbitals(basis, 2.0, range(5))
print("He+ s levels:", ", ".join(f"{e:.6f}" for e in orbitals.energies(0)[:4]))

cache = SlaterIntegralCache(orbitals)
for l_max in range(5):
    cfg = build_config_basis(0, 0, 1, default_pairs(0, 1, l_max), orbitals)
    ground = assemble_and_diagonalize(cfg, orbitals, cache, 1)[0]
    print(f"l_max = {l_max}: {len(cfg):5d} configurations, E0 = {ground.energy:.7f}")

print("dominant configurations:", ground.dominant(4))

resonances = [s for s in feshbach_spectrum(0, 0, 1, orbitals, l_max=4, cache=cache) if s.resonance]
print(f"{len(resonances)} Q-projected 1Se states below the N=2 threshold; lowest five:")
for s in resonances[:5]:
    print(f"  {s.energy:.7f}  {s.dominant(2)}")
