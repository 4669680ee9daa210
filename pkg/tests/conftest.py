"""Shared helium fixtures.  Full CI blocks are computed once per session."""

from __future__ import annotations

import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from heliumci import (  # noqa: E402
    BSplineBasis,
    SlaterIntegralCache,
    assemble_and_diagonalize,
    build_config_basis,
    default_pairs,
    feshbach_spectrum,
    make_exponential_knots,
    solve_orbitals,
)

# default basis: k = 7, 25 retained splines, exponential knots
ORDER, SPLINES, DELTA, BOX = 7, 25, 0.1, 150.0


def default_basis(box: float = BOX, delta: float = DELTA) -> BSplineBasis:
    return BSplineBasis(make_exponential_knots(delta, box, SPLINES - ORDER + 2, ORDER))


@lru_cache(maxsize=None)
def helium_orbitals(l_max: int = 4):
    return solve_orbitals(default_basis(), 2.0, range(l_max + 1))


@lru_cache(maxsize=None)
def helium_cache():
    return SlaterIntegralCache(helium_orbitals())


@lru_cache(maxsize=None)
def bound_states(block: str, l_max: int = 4, n_states: int = 10):
    L, S, par = {"1Se": (0, 0, 1), "3Se": (0, 1, 1), "1Po": (1, 0, -1), "3Po": (1, 1, -1),
                 "1De": (2, 0, 1), "3De": (2, 1, 1)}[block]
    orb = helium_orbitals()
    basis = build_config_basis(L, S, par, default_pairs(L, par, l_max), orb)
    return tuple(assemble_and_diagonalize(basis, orb, helium_cache(), n_states))


@lru_cache(maxsize=None)
def resonance_states(block: str):
    L, S, par = {"1Se": (0, 0, 1), "3Se": (0, 1, 1), "1Po": (1, 0, -1), "3Po": (1, 1, -1),
                 "1De": (2, 0, 1), "3De": (2, 1, 1)}[block]
    states = feshbach_spectrum(L, S, par, helium_orbitals(), l_max=4, cache=helium_cache())
    return tuple(s for s in states if s.resonance)


@pytest.fixture(scope="session")
def orbitals():
    return helium_orbitals()


@pytest.fixture(scope="session")
def cache():
    return helium_cache()
