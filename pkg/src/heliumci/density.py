"""Two-electron radial pair densities and one-particle densities of CI states.

The angle-resolved pair density is the expectation value of

    G(r1, r2, theta) = sum_k (2k+1)/4 P_k(cos theta) [...]

between configurations.  Integrating over cos(theta) leaves only k = 0, and
because the k = 0 angular factor is a Kronecker delta in (l_a, l_c) and
(l_b, l_d) the radial density collapses to a sum over coupling channels
(l1, l2) of squared amplitudes

    rho(r1, r2) = sum_{l1 l2} f_{l1 l2}(r1, r2)^2,
    f_{l1 l2}(r1, r2) = sum_ab M^{l1 l2}_ab U_a(r1) U_b(r2).

The M matrices are built by ``channel_amplitudes``; the one-body density
matrix and the entanglement module both start from them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import pi
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_legendre

from .ci import CIState, Configuration, coulomb_angular, multipoles
from .hydrogenic import OrbitalSet

NODE_FRACTION = 1e-3
ANTINODE_FRACTION = 0.5


def channel_amplitudes(state: CIState) -> dict[tuple[int, int], np.ndarray]:
    """Ordered-pair amplitude matrices M^{l1 l2}[a, b] of a CI state.

    A configuration with coefficient C adds C N to M^{la lb}[a, b] and
    C N eps to M^{lb la}[b, a]; the result satisfies sum |M|^2 = 1 for a
    normalized state.
    """
    basis = state.basis
    sizes = basis.n_max
    M: dict[tuple[int, int], np.ndarray] = {}
    for cfg, c in zip(basis.configurations, state.coefficients):
        if c == 0.0:
            continue
        for key in ((cfg.la, cfg.lb), (cfg.lb, cfg.la)):
            if key not in M:
                M[key] = np.zeros((sizes[key[0]], sizes[key[1]]))
        M[(cfg.la, cfg.lb)][cfg.ia, cfg.ib] += c * cfg.norm
        M[(cfg.lb, cfg.la)][cfg.ib, cfg.ia] += c * cfg.norm * cfg.exchange_sign
    return M


def one_body_matrices(state: CIState) -> dict[int, np.ndarray]:
    """D^l[n, n'] with P(r) = sum_l sum_nn' D^l U_n(r) U_n'(r); trace sums to 1."""
    D: dict[int, np.ndarray] = {}
    for (l1, _), m in sorted(channel_amplitudes(state).items()):
        D[l1] = D.get(l1, 0.0) + m @ m.T
    return D


def _g_angular(la, lb, lc, ld, L, k) -> float:
    # (2k+1)/4 times the Coulomb-type angular factor of multipole k
    return 0.25 * (2 * k + 1) * coulomb_angular(la, lb, lc, ld, L, k)


def g_matrix_element(
    orbitals: OrbitalSet, cfg_i: Configuration, cfg_j: Configuration, r1, r2, theta
) -> np.ndarray:
    """Antisymmetrized <i| G(r1, r2, theta) |j> on broadcastable arrays."""
    if (cfg_i.L, cfg_i.S, cfg_i.parity) != (cfg_j.L, cfg_j.S, cfg_j.parity):
        raise ValueError("configurations belong to different symmetry blocks")
    basis = orbitals.basis
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    x = np.cos(np.asarray(theta, dtype=float))
    L = cfg_i.L
    flat1, flat2 = np.ravel(r1), np.ravel(r2)

    def U(orb, r):
        l, i = orb
        return orbitals[l][i](basis, r)

    def nonantisym(a, b, c, d):
        R = (U(a, flat1) * U(b, flat2) * U(c, flat1) * U(d, flat2)
             + U(a, flat2) * U(b, flat1) * U(c, flat2) * U(d, flat1)).reshape(np.shape(r1))
        total = 0.0
        for k in multipoles(a[0], b[0], c[0], d[0]):
            f = _g_angular(a[0], b[0], c[0], d[0], L, k)
            if f != 0.0:
                total = total + f * eval_legendre(k, x)
        return R * total

    a, b = (cfg_i.la, cfg_i.ia), (cfg_i.lb, cfg_i.ib)
    c, d = (cfg_j.la, cfg_j.ia), (cfg_j.lb, cfg_j.ib)
    e1, e2 = cfg_i.exchange_sign, cfg_j.exchange_sign
    val = (nonantisym(a, b, c, d) + e2 * nonantisym(a, b, d, c)
           + e1 * nonantisym(b, a, c, d) + e1 * e2 * nonantisym(b, a, d, c))
    return cfg_i.norm * cfg_j.norm * val


@dataclass
class PairDensityGrid:
    r1: np.ndarray
    r2: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Matrix CSV (r1 rows, r2 columns) plus a JSON sidecar."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r1\\r2"] + [f"{v:.10e}" for v in self.r2])
            for r, row in zip(self.r1, self.values):
                w.writerow([f"{r:.10e}"] + [f"{v:.10e}" for v in row])
        with open(path.with_suffix(".json"), "w") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class RadialDensity:
    """rho(r) per unit volume, normalized as 4 pi int rho r^2 dr = 1."""

    r: np.ndarray
    values: np.ndarray
    derivative: np.ndarray | None = None
    at_origin: float | None = None
    electrons: int = 2
    weights: np.ndarray | None = None  # quadrature weights when r is a Gauss rule

    @property
    def scaled_origin(self) -> float | None:
        """Density at the nucleus normalized to the electron count."""
        return None if self.at_origin is None else self.electrons * self.at_origin

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "rho"])
            for r, v in zip(self.r, self.values):
                w.writerow([f"{r:.10e}", f"{v:.10e}"])


def exponential_grid(r_max: float, points: int = 400, r_min: float = 1e-3) -> np.ndarray:
    """Default plotting grid: 0 followed by geometric points up to r_max."""
    return np.concatenate([[0.0], np.geomspace(r_min, r_max, points - 1)])


def _orbital_values(orbitals: OrbitalSet, l: int, count: int, r: np.ndarray, deriv: int = 0) -> np.ndarray:
    return orbitals.coefficients(l, count) @ orbitals.basis.matrix(r, deriv).T


def pair_density(state: CIState, orbitals: OrbitalSet, r1=None, r2=None) -> PairDensityGrid:
    """rho(r1, r2) on a tensor grid via the k = 0 channel reduction."""
    if r1 is None:
        r1 = exponential_grid(min(orbitals.basis.box, 40.0))
    r1 = np.asarray(r1, dtype=float)
    r2 = r1 if r2 is None else np.asarray(r2, dtype=float)
    vals = np.zeros((r1.size, r2.size))
    cache1: dict[int, np.ndarray] = {}
    cache2: dict[int, np.ndarray] = {}
    for (l1, l2), m in sorted(channel_amplitudes(state).items()):
        if l1 not in cache1:
            cache1[l1] = _orbital_values(orbitals, l1, m.shape[0], r1)
        if l2 not in cache2:
            cache2[l2] = _orbital_values(orbitals, l2, m.shape[1], r2)
        f = cache1[l1].T @ m @ cache2[l2]
        vals += f * f
    meta = {"block": state.block, "energy_hartree": round(state.energy, 10), "index": state.index}
    return PairDensityGrid(r1, r2, vals, meta)


def pair_density_theta(state: CIState, orbitals: OrbitalSet, r1, r2, points: int = 16, tol: float = 0.0) -> np.ndarray:
    """rho(r1, r2) from explicit Gauss quadrature over cos(theta) of the full G sum.

    Slow reference path: sums every configuration pair with |C_i C_j| > tol.
    """
    x, w = leggauss(points)
    theta = np.arccos(x)
    R1, R2 = np.meshgrid(np.asarray(r1, float), np.asarray(r2, float), indexing="ij")
    cfgs = state.basis.configurations
    C = state.coefficients
    active = [i for i in range(len(cfgs)) if abs(C[i]) > 0]
    out = np.zeros(R1.shape)
    for i in active:
        for j in active:
            cc = C[i] * C[j]
            if abs(cc) <= tol:
                continue
            g = g_matrix_element(orbitals, cfgs[i], cfgs[j], R1[..., None], R2[..., None], theta[None, None, :])
            out += cc * (g @ w)
    return out


def pair_density_norm(state: CIState, orbitals: OrbitalSet) -> float:
    """int int rho(r1, r2) dr1 dr2 on the basis quadrature."""
    q = orbitals.basis.quadrature
    total = 0.0
    for (l1, l2), m in channel_amplitudes(state).items():
        u1 = orbitals.quad_values(l1, m.shape[0])
        u2 = orbitals.quad_values(l2, m.shape[1])
        f = u1.T @ m @ u2
        total += float(q.weights @ (f * f) @ q.weights)
    return total


def radial_probability(state: CIState, orbitals: OrbitalSet, r, deriv: bool = False):
    """P(r) = int rho(r, r2) dr2 (and optionally dP/dr)."""
    r = np.asarray(r, dtype=float)
    P = np.zeros(r.size)
    dP = np.zeros(r.size)
    for l, D in one_body_matrices(state).items():
        u = _orbital_values(orbitals, l, D.shape[0], r)
        P += np.einsum("ix,ij,jx->x", u, D, u)
        if deriv:
            du = _orbital_values(orbitals, l, D.shape[0], r, 1)
            dP += 2.0 * np.einsum("ix,ij,jx->x", du, D, u)
    return (P, dP) if deriv else P


def density_at_origin(state: CIState, orbitals: OrbitalSet) -> float:
    """rho(0) = sum_nn' D^0 U_n'(0) U_n''(0) / 4 pi (only s orbitals reach r = 0)."""
    D = one_body_matrices(state).get(0)
    if D is None:
        return 0.0
    du0 = _orbital_values(orbitals, 0, D.shape[0], np.array([0.0]), 1)[:, 0]
    return float(du0 @ D @ du0) / (4 * pi)


def one_particle_density(state: CIState, orbitals: OrbitalSet, r=None, electrons: int = 2) -> RadialDensity:
    """Unit-normalized rho(r) = P(r) / (4 pi r^2) with its radial derivative."""
    if r is None:
        r = exponential_grid(min(orbitals.basis.box, 40.0))
    r = np.asarray(r, dtype=float)
    rho0 = density_at_origin(state, orbitals)
    rr = np.where(r > 0, r, 1.0)
    P, dP = radial_probability(state, orbitals, r, deriv=True)
    rho = np.where(r > 0, P / (4 * pi * rr**2), rho0)
    drho = np.where(r > 0, (dP * rr - 2 * P) / (4 * pi * rr**3), np.nan)
    return RadialDensity(r, rho, drho, rho0, electrons)


def diagonal_symmetry_diagnostic(density: PairDensityGrid, band: float = 0.3) -> str:
    """'node', 'antinode' or 'neither' from the r1 = r2 line of a square grid.

    The diagonal maximum is compared with the largest off-diagonal value in
    the band |ln r1 - ln r2| <= ``band`` around it.  A flat grid carries no
    structure and is reported as 'neither'.
    """
    if density.r1.shape != density.r2.shape or not np.allclose(density.r1, density.r2):
        raise ValueError("diagnostic needs the same grid on both axes")
    vals = np.asarray(density.values, dtype=float)
    scale = np.abs(vals).max()
    if scale == 0.0 or np.ptp(vals) <= 1e-12 * scale:
        return "neither"
    r = np.asarray(density.r1, dtype=float)
    positive = r[r > 0]
    floor = positive.min() if positive.size else 1.0
    lr = np.log(np.maximum(r, floor))
    near = np.abs(lr[:, None] - lr[None, :]) <= band
    np.fill_diagonal(near, False)
    if not near.any():
        return "neither"
    peak = vals[near].max()
    diag = np.abs(np.diag(vals)).max()
    if peak <= 0:
        return "neither"
    if diag < NODE_FRACTION * peak:
        return "node"
    if diag > ANTINODE_FRACTION * peak:
        return "antinode"
    return "neither"


def scaled_origin_density(state: CIState, orbitals: OrbitalSet, electrons: int = 2) -> float:
    return electrons * density_at_origin(state, orbitals)


__all__ = [
    "PairDensityGrid",
    "RadialDensity",
    "channel_amplitudes",
    "one_body_matrices",
    "g_matrix_element",
    "pair_density",
    "pair_density_theta",
    "pair_density_norm",
    "radial_probability",
    "density_at_origin",
    "one_particle_density",
    "diagonal_symmetry_diagnostic",
    "exponential_grid",
    "scaled_origin_density",
]
