"""Radial Slater integrals R^k via a B-spline Poisson solve.

For a product density rho_bd = U_b U_d the function

    Y^k(r) = r * int r_<^k / r_>^(k+1) rho_bd(r') dr'

solves Y'' - k(k+1) Y / r^2 = -(2k+1) rho_bd / r.  Its zero-boundary part is
expanded in B-splines (Galerkin system T^k c = (2k+1) u) and the homogeneous
piece r^(k+1) Q^k / L^(2k+1) fixes the value at the box edge.  Then

    R^k(ab, cd) = int U_a U_c Y^k_bd / r dr.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bsplines import BSplineBasis, KnotSequence
from .hydrogenic import OrbitalSet


def refined_basis(
    basis: BSplineBasis, refine: int = 1, order: int | None = None, origin_refine: int | None = None
) -> BSplineBasis:
    """Basis on the same box with every breakpoint interval split ``refine`` times.

    Used for the Poisson solve: Y^k of a product of two orbitals carries more
    structure than a single orbital, so a finer space keeps the Galerkin
    error well below the orbital error.  The source term carries a 1/r
    factor, so the first interval [0, r_1] usually needs a finer split of
    its own (``origin_refine``, default ``refine``).  ``refine=1`` with the
    orbital order returns an equivalent basis.
    """
    if refine < 1:
        raise ValueError("refine must be >= 1")
    origin_refine = refine if origin_refine is None else int(origin_refine)
    if origin_refine < 1:
        raise ValueError("origin_refine must be >= 1")
    order = basis.order if order is None else int(order)
    bp = basis.knot_sequence.breakpoints
    if refine == 1 and origin_refine == 1 and order == basis.order:
        return basis
    pieces = []
    for j, (a, b) in enumerate(zip(bp[:-1], bp[1:])):
        m = origin_refine if j == 0 else refine
        pieces.append(a + (b - a) * np.arange(m) / m)
    fine = np.append(np.concatenate(pieces), bp[-1])
    ks = KnotSequence(fine, order, basis.knot_sequence.kind)
    return BSplineBasis(ks, max(order + 3, basis.quad_points))


def poisson_matrix(basis: BSplineBasis, k: int) -> np.ndarray:
    """T^k_ij = int B_i' B_j' + k(k+1) int B_i B_j / r^2."""
    q = basis.quadrature
    B, dB, w, r = basis.quad_values, basis.quad_derivatives, q.weights, q.nodes
    T = (dB * w) @ dB.T + k * (k + 1) * (B * (w / r**2)) @ B.T
    return 0.5 * (T + T.T)


@dataclass(frozen=True)
class YkFunction:
    """Y^k(r) = sum_i c_i B_i(r) + r^(k+1) Q / L^(2k+1)."""

    k: int
    coefficients: np.ndarray
    moment: float
    basis: BSplineBasis

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        L = self.basis.box
        return self.basis.expand(self.coefficients, r) + r ** (self.k + 1) * self.moment / L ** (2 * self.k + 1)


def solve_yk(
    k: int, U_b: np.ndarray, U_d: np.ndarray, basis: BSplineBasis, poisson: BSplineBasis | None = None
) -> YkFunction:
    """Poisson solution for the density U_b U_d given as coefficients in ``basis``.

    The zero-boundary part is expanded in ``poisson`` (default: ``basis``).
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    poisson = basis if poisson is None else poisson
    q = poisson.quadrature
    on_nodes = basis.matrix(q.nodes).T
    ub = np.asarray(U_b) @ on_nodes
    ud = np.asarray(U_d) @ on_nodes
    rho = ub * ud * q.weights
    rhs = (2 * k + 1) * (poisson.quad_values @ (rho / q.nodes))
    T = poisson_matrix(poisson, k)
    try:
        c = linalg.cho_solve(linalg.cho_factor(T), rhs)
    except linalg.LinAlgError as exc:
        raise ValueError(f"T^{k} is singular") from exc
    moment = float(np.sum(rho * q.nodes**k))
    return YkFunction(k, c, moment, poisson)


class SlaterIntegralCache:
    """Slater integrals between orbitals of one OrbitalSet.

    Orbitals are addressed as (l, i) with i the 0-based index inside the l
    list (principal number n = l + 1 + i).  Pair densities projected on the
    Poisson basis and its factorizations are stored per l pair and per k, so
    whole 4-index blocks come out of one tensor contraction.

    ``poisson_refine``, ``poisson_order`` and ``poisson_origin_refine`` select
    the Poisson basis (see ``refined_basis``); 1, the orbital order and 1
    solve on the orbital basis itself.
    """

    def __init__(
        self,
        orbitals: OrbitalSet,
        n_max: dict[int, int] | None = None,
        poisson_refine: int = 8,
        poisson_order: int | None = 11,
        poisson_origin_refine: int | None = 32,
    ):
        self.orbitals = orbitals
        self.basis = orbitals.basis
        self.poisson = refined_basis(self.basis, poisson_refine, poisson_order, poisson_origin_refine)
        self.n_max = {l: len(orbitals[l]) for l in orbitals.l_values}
        if n_max:
            for l, n in n_max.items():
                if l in self.n_max:
                    self.n_max[l] = min(self.n_max[l], int(n))
        q = self.poisson.quadrature
        self._w = q.weights
        self._r = q.nodes
        on_nodes = self.basis.matrix(q.nodes).T
        self._U = {l: orbitals.coefficients(l, self.n_max[l]) @ on_nodes for l in self.n_max}
        self._chol: dict[int, tuple] = {}
        self._P: dict[tuple[int, int], np.ndarray] = {}
        self._W: dict[tuple[int, int, int], np.ndarray] = {}
        self._Q: dict[tuple[int, int, int], np.ndarray] = {}
        self._scalar: dict[tuple, float] = {}

    @property
    def box(self) -> float:
        return self.basis.box

    def values(self, l: int) -> np.ndarray:
        """Orbital values on the Poisson quadrature nodes."""
        return self._U[l]

    def _factor(self, k: int):
        if k not in self._chol:
            self._chol[k] = linalg.cho_factor(poisson_matrix(self.poisson, k))
        return self._chol[k]

    def pair_source(self, l1: int, l2: int) -> np.ndarray:
        """P[a, c, i] = int B_i U_a U_c / r, shape (n1, n2, nb)."""
        key = (l1, l2)
        if key not in self._P:
            if (l2, l1) in self._P:
                self._P[key] = self._P[(l2, l1)].transpose(1, 0, 2)
            else:
                Ua, Uc = self._U[l1], self._U[l2]
                g = (self.poisson.quad_values * (self._w / self._r)).T  # (nq, nb)
                self._P[key] = np.einsum("aq,cq,qi->aci", Ua, Uc, g, optimize=True)
        return self._P[key]

    def pair_moment(self, k: int, l1: int, l2: int) -> np.ndarray:
        """Q^k[a, c] = int U_a r^k U_c."""
        key = (k, l1, l2)
        if key not in self._Q:
            self._Q[key] = (self._U[l1] * (self._w * self._r**k)) @ self._U[l2].T
        return self._Q[key]

    def pair_potential(self, k: int, l1: int, l2: int) -> np.ndarray:
        """W[b, d, :] = (T^k)^-1 P[b, d, :] (zero-boundary part of Y^k / (2k+1))."""
        key = (k, l1, l2)
        if key not in self._W:
            P = self.pair_source(l1, l2)
            n1, n2, nb = P.shape
            sol = linalg.cho_solve(self._factor(k), P.reshape(-1, nb).T)
            self._W[key] = sol.T.reshape(n1, n2, nb)
        return self._W[key]

    def rk_block(self, k: int, la: int, lb: int, lc: int, ld: int) -> np.ndarray:
        """R^k(ab, cd) for every orbital quartet of the given l values.

        Returned array is indexed [a, b, c, d].
        """
        P = self.pair_source(la, lc)
        W = self.pair_potential(k, lb, ld)
        out = (2 * k + 1) * np.einsum("acx,bdx->abcd", P, W, optimize=True)
        box = self.box ** (2 * k + 1)
        out += np.einsum("ac,bd->abcd", self.pair_moment(k, la, lc), self.pair_moment(k, lb, ld)) / box
        return out

    def rk(self, k: int, a: tuple[int, int], b: tuple[int, int], c: tuple[int, int], d: tuple[int, int]) -> float:
        """Single R^k(ab, cd); orbitals given as (l, index)."""
        key = _canonical(k, a, b, c, d)
        if key not in self._scalar:
            k_, a_, b_, c_, d_ = key
            P = self.pair_source(a_[0], c_[0])[a_[1], c_[1]]
            W = self.pair_potential(k_, b_[0], d_[0])[b_[1], d_[1]]
            val = (2 * k_ + 1) * float(P @ W)
            val += (
                self.pair_moment(k_, a_[0], c_[0])[a_[1], c_[1]]
                * self.pair_moment(k_, b_[0], d_[0])[b_[1], d_[1]]
                / self.box ** (2 * k_ + 1)
            )
            self._scalar[key] = float(val)
        return self._scalar[key]


def _canonical(k, a, b, c, d):
    """Smallest of the equivalent index orders for R^k(ab, cd).

    R^k is unchanged by a<->c, b<->d (real orbitals) and by swapping the
    electron pairs (ac)<->(bd).
    """
    cands = []
    for p, q in (((a, c), (b, d)), ((b, d), (a, c))):
        for x in (p, p[::-1]):
            for y in (q, q[::-1]):
                cands.append((x[0], y[0], x[1], y[1]))
    return (k, *min(cands))


def slater_Rk(cache: SlaterIntegralCache, k: int, a, b, c, d) -> float:
    """R^k(ab, cd) = int int U_a(1) U_b(2) r_<^k / r_>^(k+1) U_c(1) U_d(2)."""
    return cache.rk(k, a, b, c, d)
