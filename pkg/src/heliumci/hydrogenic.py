"""Hydrogenic radial orbitals on a B-spline basis, plus analytic references."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import factorial
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.special import eval_genlaguerre

from .bsplines import BSplineBasis


@dataclass(frozen=True)
class RadialOrbital:
    """U_nl(r) = r R_nl(r) expanded in the retained B-splines."""

    n: int
    l: int
    energy: float
    coefficients: np.ndarray

    def __call__(self, basis: BSplineBasis, r, deriv: int = 0) -> np.ndarray:
        return basis.expand(self.coefficients, r, deriv)

    @property
    def label(self) -> str:
        return f"{self.n}{'spdfghik'[self.l] if self.l < 8 else f'[l={self.l}]'}"


@dataclass
class OrbitalSet:
    """Per-l lists of orbitals for one nuclear charge and basis."""

    Z: float
    basis: BSplineBasis
    by_l: dict[int, list[RadialOrbital]] = field(default_factory=dict)

    def __getitem__(self, l: int) -> list[RadialOrbital]:
        return self.by_l[l]

    @property
    def l_values(self) -> list[int]:
        return sorted(self.by_l)

    def energies(self, l: int) -> np.ndarray:
        return np.array([o.energy for o in self.by_l[l]])

    def coefficients(self, l: int, count: int | None = None) -> np.ndarray:
        """Coefficient matrix (count, basis.size) for angular momentum l."""
        orbs = self.by_l[l] if count is None else self.by_l[l][:count]
        return np.array([o.coefficients for o in orbs])

    def quad_values(self, l: int, count: int | None = None) -> np.ndarray:
        """U_nl at the basis quadrature nodes, shape (count, nq)."""
        return self.coefficients(l, count) @ self.basis.quad_values

    def to_csv(self, path, r=None, n_max: int | None = None) -> None:
        """Write r and U_nl(r) columns, one column per orbital."""
        if r is None:
            r = np.linspace(0.0, self.basis.box, 401)
        r = np.asarray(r, dtype=float)
        cols, names = [r], ["r"]
        for l in self.l_values:
            orbs = self.by_l[l] if n_max is None else self.by_l[l][:n_max]
            for o in orbs:
                cols.append(o(self.basis, r))
                names.append(f"U_{o.label}")
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in np.column_stack(cols):
                w.writerow([f"{v:.12e}" for v in row])


def assemble_radial_matrices(basis: BSplineBasis, Z: float, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Hamiltonian and overlap matrices of the radial equation for one l."""
    if l < 0:
        raise ValueError("l must be non-negative")
    q = basis.quadrature
    r = q.nodes
    B = basis.quad_values
    dB = basis.quad_derivatives
    w = q.weights
    S = (B * w) @ B.T
    T = 0.5 * (dB * w) @ dB.T
    pot = -Z / r + 0.5 * l * (l + 1) / r**2
    V = (B * (w * pot)) @ B.T
    H = T + V
    # exact symmetry; quadrature products already symmetric up to rounding
    H = 0.5 * (H + H.T)
    S = 0.5 * (S + S.T)
    return H, S


def solve_generalized_eig(H: np.ndarray, S: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """All eigenpairs of H c = E S c, ascending, S-orthonormal vectors."""
    try:
        linalg.cholesky(S, lower=True)
    except linalg.LinAlgError as exc:
        raise ValueError("overlap matrix is not positive definite") from exc
    E, C = linalg.eigh(H, S)
    return [(float(E[i]), _fix_sign(C[:, i])) for i in range(E.size)]


def _fix_sign(c: np.ndarray) -> np.ndarray:
    # first significant coefficient positive, so U > 0 near the origin
    idx = np.flatnonzero(np.abs(c) > 1e-8 * np.abs(c).max())
    return -c if idx.size and c[idx[0]] < 0 else c


def solve_orbitals(basis: BSplineBasis, Z: float, l_values) -> OrbitalSet:
    """Diagonalize every requested l block and return the full orbital set."""
    out = OrbitalSet(Z=Z, basis=basis)
    for l in l_values:
        H, S = assemble_radial_matrices(basis, Z, l)
        pairs = solve_generalized_eig(H, S)
        out.by_l[l] = [RadialOrbital(l + 1 + i, l, e, c) for i, (e, c) in enumerate(pairs)]
    return out


def analytic_hydrogen_energy(n: int, Z: float = 1.0) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return -Z * Z / (2.0 * n * n)


def analytic_hydrogen_radial(n: int, l: int, Z: float, r) -> np.ndarray:
    """Normalized R_nl(r) with the modern associated Laguerre convention."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= l < n:
        raise ValueError("need 0 <= l < n")
    r = np.asarray(r, dtype=float)
    rho = 2.0 * Z * r / n
    norm = np.sqrt((2.0 * Z / n) ** 3 * factorial(n - l - 1) / (2.0 * n * factorial(n + l)))
    return norm * np.exp(-rho / 2) * rho**l * eval_genlaguerre(n - l - 1, 2 * l + 1, rho)


def analytic_hydrogen_radial_derivative(n: int, l: int, Z: float, r) -> np.ndarray:
    """dR_nl/dr from the Laguerre derivative identity."""
    r = np.asarray(r, dtype=float)
    rho = 2.0 * Z * r / n
    norm = np.sqrt((2.0 * Z / n) ** 3 * factorial(n - l - 1) / (2.0 * n * factorial(n + l)))
    p = n - l - 1
    lag = eval_genlaguerre(p, 2 * l + 1, rho)
    dlag = -eval_genlaguerre(p - 1, 2 * l + 2, rho) if p >= 1 else np.zeros_like(rho)
    if l == 0:
        drho_l = np.zeros_like(rho)
        rho_l = np.ones_like(rho)
    else:
        drho_l = l * rho ** (l - 1)
        rho_l = rho**l
    e = np.exp(-rho / 2)
    d = norm * e * (drho_l * lag + rho_l * dlag - 0.5 * rho_l * lag)
    return d * (2.0 * Z / n)


def expectation_kinetic_potential(basis: BSplineBasis, orbital: RadialOrbital, Z: float):
    """(<T>, <V>) for an orbital, V including the centrifugal term."""
    q = basis.quadrature
    u = orbital.coefficients @ basis.quad_values
    du = orbital.coefficients @ basis.quad_derivatives
    r = q.nodes
    t = 0.5 * np.sum(q.weights * du * du)
    l = orbital.l
    # centrifugal energy is kinetic in the virial balance
    t += 0.5 * l * (l + 1) * np.sum(q.weights * u * u / r**2)
    v = -Z * np.sum(q.weights * u * u / r)
    return float(t), float(v)
