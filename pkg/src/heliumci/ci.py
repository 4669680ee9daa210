"""LS-coupled two-electron configuration interaction.

A configuration couples two orbitals (l_a, n_a) and (l_b, n_b) to total L and
S.  The spatial part is the antisymmetrized combination

    |{ab}> = N [ |ab; L> + eps |ba; L> ],   eps = (-1)^(l_a + l_b + L + S),

with N = 1/sqrt(2) for distinct orbitals.  Equivalent electrons (a = b) keep
the single product |aa; L>, which exists only for L + S even; writing it as
N = 1/2, eps = 1 lets one formula cover all four cases.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import sqrt
from pathlib import Path

import numpy as np
from scipy import linalg

from .angular import wigner_3j, wigner_6j
from .hydrogenic import OrbitalSet
from .slater import SlaterIntegralCache

L_LETTERS = "SPDFGHIK"
l_letters = "spdfghik"


def block_label(L: int, S: int, parity: int) -> str:
    """Spectroscopic label such as '1Se' or '3Po'."""
    return f"{2 * S + 1}{L_LETTERS[L]}{'e' if parity > 0 else 'o'}"


def parse_block(label: str) -> tuple[int, int, int]:
    """Inverse of ``block_label``: '1Se' -> (L=0, S=0, parity=+1)."""
    label = label.strip()
    if len(label) != 3 or label[0] not in "13" or label[1].upper() not in L_LETTERS or label[2] not in "eo":
        raise ValueError(f"bad symmetry block label {label!r}")
    S = (int(label[0]) - 1) // 2
    L = L_LETTERS.index(label[1].upper())
    return L, S, 1 if label[2] == "e" else -1


def parse_pair(pair) -> tuple[int, int]:
    """'sp' or (0, 1) -> (0, 1) with l_a <= l_b."""
    if isinstance(pair, str):
        if len(pair) != 2:
            raise ValueError(f"bad angular pair {pair!r}")
        la, lb = (l_letters.index(ch.lower()) for ch in pair)
    else:
        la, lb = (int(x) for x in pair)
    return (la, lb) if la <= lb else (lb, la)


def default_pairs(L: int, parity: int, l_max: int) -> list[tuple[int, int]]:
    """All (l_a <= l_b <= l_max) compatible with L and parity, ordered by l_a."""
    out = []
    for la in range(l_max + 1):
        for lb in range(la, l_max + 1):
            if abs(la - lb) <= L <= la + lb and (-1) ** (la + lb) == parity:
                out.append((la, lb))
    return out


@dataclass(frozen=True)
class Configuration:
    """Two orbitals (l, index within l) coupled to L, S."""

    la: int
    ia: int
    lb: int
    ib: int
    L: int
    S: int

    def __post_init__(self):
        if (self.la, self.ia) > (self.lb, self.ib):
            raise ValueError("configuration must be stored in canonical order")
        if not abs(self.la - self.lb) <= self.L <= self.la + self.lb:
            raise ValueError("triangle rule violated")
        if self.equivalent and (self.L + self.S) % 2:
            raise ValueError("equivalent electrons need L + S even")

    @property
    def na(self) -> int:
        return self.la + 1 + self.ia

    @property
    def nb(self) -> int:
        return self.lb + 1 + self.ib

    @property
    def parity(self) -> int:
        return (-1) ** (self.la + self.lb)

    @property
    def equivalent(self) -> bool:
        return self.la == self.lb and self.ia == self.ib

    @property
    def norm(self) -> float:
        return 0.5 if self.equivalent else 1.0 / sqrt(2.0)

    @property
    def exchange_sign(self) -> int:
        if self.equivalent:
            return 1
        return (-1) ** (self.la + self.lb + self.L + self.S)

    @property
    def label(self) -> str:
        return f"{self.na}{l_letters[self.la]}{self.nb}{l_letters[self.lb]}"

    @property
    def quadruple(self) -> tuple[int, int, int, int]:
        return (self.na, self.la, self.nb, self.lb)


@dataclass
class ConfigurationBasis:
    L: int
    S: int
    parity: int
    configurations: list[Configuration]
    n_max: dict[int, int]
    q_projected: bool = False

    def __len__(self) -> int:
        return len(self.configurations)

    @property
    def label(self) -> str:
        return block_label(self.L, self.S, self.parity)

    def pair_groups(self) -> dict[tuple[int, int], np.ndarray]:
        """Positions of the configurations of each (l_a, l_b) pair type."""
        groups: dict[tuple[int, int], list[int]] = {}
        for i, c in enumerate(self.configurations):
            groups.setdefault((c.la, c.lb), []).append(i)
        return {k: np.array(v) for k, v in groups.items()}

    def counts(self) -> dict[str, int]:
        return {f"{l_letters[a]}{l_letters[b]}": len(v) for (a, b), v in self.pair_groups().items()}


def build_config_basis(
    L: int,
    S: int,
    parity: int,
    angular_pairs,
    orbital_set: OrbitalSet,
    q_projected: bool = False,
    n_max: dict[int, int] | int | None = None,
) -> ConfigurationBasis:
    """Enumerate all configurations of a symmetry block.

    ``n_max`` limits the number of orbitals used per l (a dict, a single int
    for every l, or None for all orbitals of ``orbital_set``).  With
    ``q_projected`` every configuration that uses the lowest s orbital is
    left out.
    """
    if S not in (0, 1):
        raise ValueError("two electrons couple to S = 0 or 1")
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    pairs = [parse_pair(p) for p in angular_pairs]
    counts = {}
    for l in {l for p in pairs for l in p}:
        if l not in orbital_set.by_l:
            raise ValueError(f"orbital set has no l = {l} orbitals")
        avail = len(orbital_set[l])
        if n_max is None:
            counts[l] = avail
        elif isinstance(n_max, int):
            counts[l] = min(avail, n_max)
        else:
            counts[l] = min(avail, int(n_max.get(l, avail)))
    configs: list[Configuration] = []
    seen = set()
    for la, lb in pairs:
        if (la, lb) in seen:
            continue
        seen.add((la, lb))
        if not abs(la - lb) <= L <= la + lb:
            raise ValueError(f"pair {l_letters[la]}{l_letters[lb]} cannot couple to L = {L}")
        if (-1) ** (la + lb) != parity:
            raise ValueError(f"pair {l_letters[la]}{l_letters[lb]} has the wrong parity")
        for ia in range(counts[la]):
            start = ia if la == lb else 0
            for ib in range(start, counts[lb]):
                if la == lb and ia == ib and (L + S) % 2:
                    continue
                if q_projected and ((la == 0 and ia == 0) or (lb == 0 and ib == 0)):
                    continue
                configs.append(Configuration(la, ia, lb, ib, L, S))
    if not configs:
        raise ValueError("empty configuration basis")
    return ConfigurationBasis(L, S, parity, configs, counts, q_projected)


def q_project(basis: ConfigurationBasis) -> ConfigurationBasis:
    """Drop configurations containing the lowest s orbital (idempotent)."""
    keep = [c for c in basis.configurations if not ((c.la == 0 and c.ia == 0) or (c.lb == 0 and c.ib == 0))]
    if not keep:
        raise ValueError("empty configuration basis")
    return ConfigurationBasis(basis.L, basis.S, basis.parity, keep, dict(basis.n_max), True)


def coulomb_angular(la: int, lb: int, lc: int, ld: int, L: int, k: int) -> float:
    """Angular factor multiplying R^k(ab, cd) in <ab; L | 1/r12 | cd; L>."""
    if (la + lc + k) % 2 or (lb + ld + k) % 2:
        return 0.0
    w = wigner_3j(la, lc, k, 0, 0, 0) * wigner_3j(lb, ld, k, 0, 0, 0)
    if w == 0.0:
        return 0.0
    six = wigner_6j(la, k, lc, ld, L, lb)
    return (-1) ** ((L - k) % 2) * sqrt((2 * la + 1) * (2 * lb + 1) * (2 * lc + 1) * (2 * ld + 1)) * w * six


def multipoles(la: int, lb: int, lc: int, ld: int) -> range:
    """k values allowed by the triangle rules of both radial pairs."""
    kmin = max(abs(la - lc), abs(lb - ld))
    kmax = min(la + lc, lb + ld)
    return range(kmin, kmax + 1)


def coulomb_nonantisym(cache: SlaterIntegralCache, a, b, c, d, L: int) -> float:
    """<ab; L | 1/r12 | cd; L> for orbitals given as (l, index)."""
    total = 0.0
    for k in multipoles(a[0], b[0], c[0], d[0]):
        ang = coulomb_angular(a[0], b[0], c[0], d[0], L, k)
        if ang != 0.0:
            total += ang * cache.rk(k, a, b, c, d)
    return total


def coulomb_element(cache: SlaterIntegralCache, cfg_i: Configuration, cfg_j: Configuration) -> float:
    """Matrix element of 1/r12 between two antisymmetrized configurations."""
    if (cfg_i.L, cfg_i.S, cfg_i.parity) != (cfg_j.L, cfg_j.S, cfg_j.parity):
        raise ValueError("configurations belong to different symmetry blocks")
    L = cfg_i.L
    a, b = (cfg_i.la, cfg_i.ia), (cfg_i.lb, cfg_i.ib)
    c, d = (cfg_j.la, cfg_j.ia), (cfg_j.lb, cfg_j.ib)
    e1, e2 = cfg_i.exchange_sign, cfg_j.exchange_sign
    val = (
        coulomb_nonantisym(cache, a, b, c, d, L)
        + e2 * coulomb_nonantisym(cache, a, b, d, c, L)
        + e1 * coulomb_nonantisym(cache, b, a, c, d, L)
        + e1 * e2 * coulomb_nonantisym(cache, b, a, d, c, L)
    )
    return cfg_i.norm * cfg_j.norm * val


def _coulomb_tensor(cache: SlaterIntegralCache, la, lb, lc, ld, L) -> np.ndarray | None:
    """sum_k A_k R^k(ab, cd) as a 4-index array, or None if all terms vanish."""
    out = None
    for k in multipoles(la, lb, lc, ld):
        ang = coulomb_angular(la, lb, lc, ld, L, k)
        if ang == 0.0:
            continue
        blk = ang * cache.rk_block(k, la, lb, lc, ld)
        out = blk if out is None else out + blk
    return out


def coulomb_matrix(basis: ConfigurationBasis, cache: SlaterIntegralCache) -> np.ndarray:
    """Full 1/r12 matrix over the configuration basis, assembled block-wise.

    With phi = (-1)^(la+lb+lc+ld), X(ba, dc) = phi X(ab, cd) and
    X(ba, cd) = phi X(ab, dc), so each element needs one direct and one
    exchange tensor entry.
    """
    cfgs = basis.configurations
    n = len(cfgs)
    V = np.zeros((n, n))
    groups = basis.pair_groups()
    idx = {key: (np.array([cfgs[i].ia for i in pos]), np.array([cfgs[i].ib for i in pos]),
                 np.array([cfgs[i].norm for i in pos]), np.array([cfgs[i].exchange_sign for i in pos], float))
           for key, pos in groups.items()}
    keys = list(groups)
    L = basis.L
    for x, t1 in enumerate(keys):
        la, lb = t1
        ia, ib, na_, ea = idx[t1]
        for t2 in keys[x:]:
            lc, ld = t2
            ic, id_, nc_, ec = idx[t2]
            phi = (-1) ** (la + lb + lc + ld)
            block = np.zeros((ia.size, ic.size))
            direct = _coulomb_tensor(cache, la, lb, lc, ld, L)
            if direct is not None:
                D = direct[ia[:, None], ib[:, None], ic[None, :], id_[None, :]]
                block += (1.0 + phi * np.outer(ea, ec)) * D
            exch = _coulomb_tensor(cache, la, lb, ld, lc, L)
            if exch is not None:
                E = exch[ia[:, None], ib[:, None], id_[None, :], ic[None, :]]
                block += (ec[None, :] + phi * ea[:, None]) * E
            block *= np.outer(na_, nc_)
            V[np.ix_(groups[t1], groups[t2])] = block
            if t2 != t1:
                V[np.ix_(groups[t2], groups[t1])] = block.T
    return 0.5 * (V + V.T)


def one_body_diagonal(basis: ConfigurationBasis, orbital_set: OrbitalSet) -> np.ndarray:
    return np.array([orbital_set[c.la][c.ia].energy + orbital_set[c.lb][c.ib].energy for c in basis.configurations])


def hamiltonian_matrix(basis: ConfigurationBasis, orbital_set: OrbitalSet, cache: SlaterIntegralCache) -> np.ndarray:
    H = coulomb_matrix(basis, cache)
    H[np.diag_indices_from(H)] += one_body_diagonal(basis, orbital_set)
    return H


@dataclass
class CIState:
    energy: float
    coefficients: np.ndarray
    basis: ConfigurationBasis = field(repr=False)
    index: int = 0
    resonance: bool = True

    @property
    def block(self) -> str:
        return self.basis.label

    def dominant(self, count: int = 3) -> list[tuple[str, float]]:
        order = np.argsort(-np.abs(self.coefficients), kind="stable")[:count]
        return [(self.basis.configurations[i].label, float(self.coefficients[i])) for i in order]


def _sign_convention(C: np.ndarray) -> np.ndarray:
    # largest-magnitude coefficient of every column made positive
    idx = np.argmax(np.abs(C), axis=0)
    signs = np.sign(C[idx, np.arange(C.shape[1])])
    signs[signs == 0] = 1.0
    return C * signs


def diagonalize(H: np.ndarray, basis: ConfigurationBasis, n_states: int | None = None) -> list[CIState]:
    E, C = linalg.eigh(H)
    C = _sign_convention(C)
    m = E.size if n_states is None else min(n_states, E.size)
    return [CIState(float(E[i]), C[:, i].copy(), basis, i) for i in range(m)]


def assemble_and_diagonalize(
    basis: ConfigurationBasis,
    orbital_set: OrbitalSet,
    cache: SlaterIntegralCache | None = None,
    n_states: int | None = None,
) -> list[CIState]:
    """Build H over the configuration basis and return states ascending in energy."""
    if cache is None:
        cache = SlaterIntegralCache(orbital_set)
    return diagonalize(hamiltonian_matrix(basis, orbital_set, cache), basis, n_states)


def feshbach_spectrum(
    L: int,
    S: int,
    parity: int,
    orbital_set: OrbitalSet,
    angular_pairs=None,
    l_max: int = 4,
    n_max=None,
    cache: SlaterIntegralCache | None = None,
    n_states: int | None = None,
) -> list[CIState]:
    """Eigenstates of QHQ with Q removing every configuration that holds 1s.

    States below the N = 2 threshold of the ion (-Z^2/8) are marked as
    resonances, the rest as pseudostates (``resonance=False``).
    """
    pairs = angular_pairs if angular_pairs is not None else default_pairs(L, parity, l_max)
    basis = build_config_basis(L, S, parity, pairs, orbital_set, True, n_max)
    states = assemble_and_diagonalize(basis, orbital_set, cache, n_states)
    threshold = -orbital_set.Z**2 / 8.0
    for s in states:
        s.resonance = s.energy < threshold
    return states


def write_spectrum_csv(path, states: list[CIState], labels: list[str] | None = None) -> None:
    """CSV with columns block, index, energy_hartree, label."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "index", "energy_hartree", "label"])
        for i, s in enumerate(states):
            lab = labels[i] if labels is not None and i < len(labels) else ""
            if not lab and s.basis.q_projected and not s.resonance:
                lab = "pseudostate"
            w.writerow([s.block, i + 1, f"{s.energy:.10f}", lab])


def write_coefficients(path, state: CIState, threshold: float = 0.0) -> None:
    """Text dump, one line per configuration: 'n_a l_a n_b l_b  coefficient'."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# block {state.block} energy {state.energy:.10f}\n")
        for cfg, c in zip(state.basis.configurations, state.coefficients):
            if abs(c) >= threshold:
                na, la, nb, lb = cfg.quadruple
                fh.write(f"{na} {la} {nb} {lb} {c: .12e}\n")


def read_coefficients(path) -> dict[tuple[int, int, int, int], float]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            *q, c = line.split()
            out[tuple(int(x) for x in q)] = float(c)
    return out
