"""Independent reference implementations used only by the test-suite."""

from __future__ import annotations

from math import factorial, sqrt

import numpy as np
from numpy.polynomial.legendre import leggauss


class DirectSlater:
    """R^k by 2-D Gauss quadrature over the two triangles r2 < r1 and r1 < r2.

    R^k = int A(r) r^-(k+1) lo_B(r) dr + int B(r) r^-(k+1) lo_A(r) dr with
    A = U_a U_c, B = U_b U_d and lo_F(r) = int_0^r t^k F(t) dt.  The inner
    integral over [r_j, r] uses its own Gauss rule, so every piece is a
    polynomial (inner) or smooth (outer) and no Poisson solve is involved.
    """

    def __init__(self, basis, points=24):
        self.basis = basis
        bp = basis.knot_sequence.breakpoints
        x, w = leggauss(points)
        a, b = bp[:-1, None], bp[1:, None]
        self.r = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
        self.w = (0.5 * (b - a) * w).ravel()
        left = np.repeat(bp[:-1], points)
        # inner nodes on [left, r] for every outer node
        self.t = left[:, None] + 0.5 * (self.r - left)[:, None] * (x + 1)[None, :]
        self.tw = 0.5 * (self.r - left)[:, None] * w[None, :]
        self.interval = np.repeat(np.arange(bp.size - 1), points)
        self.points = points
        self._B = basis.matrix(self.r)
        self._Bt = basis.matrix(self.t.ravel())

    def _lo(self, fb, fd, fb_t, fd_t, k):
        full = np.add.reduceat(self.w * self.r**k * fb * fd, np.arange(0, self.r.size, self.points))
        cum = np.concatenate([[0.0], np.cumsum(full)])[self.interval]
        part = np.sum(self.tw * self.t**k * (fb_t * fd_t).reshape(self.t.shape), axis=1)
        return cum + part

    def values(self, coef):
        return self._B @ coef, self._Bt @ coef

    def rk(self, k, ca, cb, cc, cd):
        (a, a_t), (b, b_t), (c, c_t), (d, d_t) = (self.values(x) for x in (ca, cb, cc, cd))
        lo_bd = self._lo(b, d, b_t, d_t, k)
        lo_ac = self._lo(a, c, a_t, c_t, k)
        rk1 = self.r ** (-k - 1)
        return float(np.sum(self.w * rk1 * (a * c * lo_bd + b * d * lo_ac)))

    def yk(self, k, cb, cd, radii):
        """Y^k(r) = r [r^-(k+1) int_0^r t^k rho + r^k int_r^L t^-(k+1) rho], rho = U_b U_d.

        Each radius is handled with Gauss rules on [r_j, r], [r, r_j+1] plus
        whole intervals; accurate for r at or beyond the first non-zero breakpoint.
        """
        bp = self.basis.knot_sequence.breakpoints
        x, w = leggauss(self.points)
        out = []
        for r in np.atleast_1d(radii):
            lo = hi = 0.0
            for a, b in zip(bp[:-1], bp[1:]):
                for (p, q), into_lo in (((a, min(b, r)), True), ((max(a, r), b), False)):
                    if q <= p:
                        continue
                    t = 0.5 * (q - p) * x + 0.5 * (p + q)
                    rho = self.basis.expand(cb, t) * self.basis.expand(cd, t)
                    if into_lo:
                        lo += 0.5 * (q - p) * np.sum(w * t**k * rho)
                    else:
                        hi += 0.5 * (q - p) * np.sum(w * t ** (-k - 1) * rho)
            out.append(r * (lo / r ** (k + 1) + hi * r**k))
        return np.array(out)


def direct_rk(basis, k, ca, cb, cc, cd, points=24):
    """Convenience wrapper around DirectSlater for a single quartet."""
    return DirectSlater(basis, points).rk(k, ca, cb, cc, cd)


def _ladder_cg(tj1: int, tj2: int) -> dict:
    """Clebsch-Gordan table for doubled j1, j2 built with lowering operators.

    Returns {(2J, 2m1, 2m2): <j1 m1 j2 m2 | J M>} using Condon-Shortley phases.
    """
    j1, j2 = tj1 / 2, tj2 / 2
    states = [(a, b) for a in range(-tj1, tj1 + 1, 2) for b in range(-tj2, tj2 + 1, 2)]
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)

    def lower(vec):
        out = np.zeros(dim)
        for (a, b), i in index.items():
            if vec[i] == 0:
                continue
            ma, mb = a / 2, b / 2
            if a > -tj1:
                out[index[(a - 2, b)]] += vec[i] * sqrt(j1 * (j1 + 1) - ma * (ma - 1))
            if b > -tj2:
                out[index[(a, b - 2)]] += vec[i] * sqrt(j2 * (j2 + 1) - mb * (mb - 1))
        return out

    table = {}
    found = {}  # (2J, 2M) -> vector
    for tJ in range(tj1 + tj2, abs(tj1 - tj2) - 1, -2):
        # top state: orthogonal to all higher-J states with M = J
        sub = [i for (a, b), i in index.items() if a + b == tJ]
        vec = np.zeros(dim)
        basis = [found[(tJp, tJ)] for tJp in range(tj1 + tj2, tJ, -2)]
        mat = np.array([[v[i] for i in sub] for v in basis]) if basis else np.zeros((0, len(sub)))
        _, _, vt = np.linalg.svd(np.vstack([mat, np.zeros((1, len(sub)))]))
        null = vt[-1] if basis else np.array([1.0])
        for c, i in zip(null, sub):
            vec[i] = c
        vec /= np.linalg.norm(vec)
        if vec[index[(tj1, tJ - tj1)]] < 0:
            vec = -vec
        found[(tJ, tJ)] = vec
        for tM in range(tJ - 2, -tJ - 1, -2):
            v = lower(found[(tJ, tM + 2)])
            found[(tJ, tM)] = v / np.linalg.norm(v)
    for (tJ, tM), vec in found.items():
        for (a, b), i in index.items():
            if a + b == tM:
                table[(tJ, a, b)] = vec[i]
    return table


_CG_CACHE: dict = {}


def ladder_3j(j1, j2, j3, m1, m2, m3) -> float:
    """3j symbol from the ladder-operator Clebsch-Gordan table."""
    t = [int(round(2 * v)) for v in (j1, j2, j3, m1, m2, m3)]
    tj1, tj2, tj3, tm1, tm2, tm3 = t
    if tm1 + tm2 + tm3 != 0 or not (abs(tj1 - tj2) <= tj3 <= tj1 + tj2) or (tj1 + tj2 + tj3) % 2:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0.0
    if (tj1, tj2) not in _CG_CACHE:
        _CG_CACHE[(tj1, tj2)] = _ladder_cg(tj1, tj2)
    cg = _CG_CACHE[(tj1, tj2)][(tj3, tm1, tm2)]
    phase = (-1) ** ((tj1 - tj2 - tm3) // 2)
    return phase * cg / sqrt(tj3 + 1)


def three_j_table(tmax: int) -> np.ndarray:
    """Dense array T[2j1, 2j2, 2j3, 2m1+2j1, 2m2+2j2] of ladder 3j values (m3 implied)."""
    n = tmax + 1
    T = np.zeros((n, n, n, 2 * n, 2 * n))
    for tj1 in range(n):
        for tj2 in range(n):
            for tj3 in range(abs(tj1 - tj2), min(tj1 + tj2, tmax) + 1, 2):
                for tm1 in range(-tj1, tj1 + 1, 2):
                    for tm2 in range(-tj2, tj2 + 1, 2):
                        tm3 = -tm1 - tm2
                        if abs(tm3) > tj3:
                            continue
                        T[tj1, tj2, tj3, tm1 + tj1, tm2 + tj2] = ladder_3j(
                            tj1 / 2, tj2 / 2, tj3 / 2, tm1 / 2, tm2 / 2, tm3 / 2)
    return T


def contracted_6j(t6, table: np.ndarray) -> float:
    """6j symbol (doubled arguments) as a sum over projections of four 3j symbols."""
    a, b, c, d, e, f = t6

    def tj(x, y, z, mx, my, mz):
        # mx, my, mz are doubled; vectorized over arrays
        ok = (mx + my + mz == 0) & (np.abs(mx) <= x) & (np.abs(my) <= y) & (np.abs(mz) <= z)
        vals = np.where(ok, table[x, y, z, np.clip(mx + x, 0, 2 * x), np.clip(my + y, 0, 2 * y)], 0.0)
        return vals

    m1, m2, m5 = np.meshgrid(np.arange(-a, a + 1, 2), np.arange(-b, b + 1, 2), np.arange(-e, e + 1, 2), indexing="ij")
    m3 = -m1 - m2
    m6 = m5 - m1
    m4 = m6 - m2
    ok = (np.abs(m3) <= c) & (np.abs(m6) <= f) & (np.abs(m4) <= d)
    if not ok.any():
        return 0.0
    m1, m2, m3, m4, m5, m6 = (x[ok] for x in (m1, m2, m3, m4, m5, m6))
    expo = (a - m1 + b - m2 + c - m3 + d - m4 + e - m5 + f - m6) // 2
    ph = np.where(expo % 2 == 0, 1.0, -1.0)
    val = (
        tj(a, b, c, -m1, -m2, -m3)
        * tj(a, e, f, m1, -m5, m6)
        * tj(d, b, f, m4, m2, -m6)
        * tj(d, e, c, -m4, m5, m3)
    )
    return float(np.sum(ph * val))


def naive_bspline(t, i, k, x):
    """B_{i,k}(x) by the textbook recursion on half-open intervals (right end closed)."""
    t = np.asarray(t, dtype=float)
    if k == 1:
        if t[i] <= x < t[i + 1]:
            return 1.0
        # close the last non-empty interval at the right end of the box
        if x == t[-1] and t[i] < t[i + 1] == t[-1]:
            return 1.0
        return 0.0
    out = 0.0
    if t[i + k - 1] > t[i]:
        out += (x - t[i]) / (t[i + k - 1] - t[i]) * naive_bspline(t, i, k - 1, x)
    if t[i + k] > t[i + 1]:
        out += (t[i + k] - x) / (t[i + k] - t[i + 1]) * naive_bspline(t, i + 1, k - 1, x)
    return out


def ladder_cg(l1, m1, l2, m2, L, M) -> float:
    """<l1 m1 l2 m2 | L M> for integer arguments from the ladder table."""
    if m1 + m2 != M or abs(m1) > l1 or abs(m2) > l2 or not abs(l1 - l2) <= L <= l1 + l2 or abs(M) > L:
        return 0.0
    key = (2 * l1, 2 * l2)
    if key not in _CG_CACHE:
        _CG_CACHE[key] = _ladder_cg(*key)
    return float(_CG_CACHE[key][(2 * L, 2 * m1, 2 * m2)])


def gaunt(l, m, k, q, lp, mp) -> float:
    """<l m | C^k_q | l' m'> in the uncoupled basis."""
    if m != q + mp:
        return 0.0
    pre = (-1) ** (m % 2) * sqrt((2 * l + 1) * (2 * lp + 1))
    return pre * ladder_3j(l, k, lp, 0, 0, 0) * ladder_3j(l, k, lp, -m, q, mp)


def uncoupled_ci_matrix(configs, energies, rk):
    """Two-electron Hamiltonian by brute force over magnetic substates (M = 0).

    ``configs`` holds (la, ia, lb, ib, L, S) tuples, ``energies[(l, i)]`` the
    orbital energies and ``rk(k, a, b, c, d)`` the radial integrals.  Every
    configuration is written as an explicit vector over product states
    (a ma)(b mb), (anti)symmetrized with the exchange operator P12 and
    normalized numerically.
    """
    vecs = []
    for la, ia, lb, ib, L, S in configs:
        v = {}
        for ma in range(-la, la + 1):
            mb = -ma
            cg = ladder_cg(la, ma, lb, mb, L, 0)
            if abs(mb) > lb or cg == 0.0:
                continue
            sign = 1.0 if S == 0 else -1.0
            x = ((la, ia, ma), (lb, ib, mb))
            v[x] = v.get(x, 0.0) + cg
            y = (x[1], x[0])
            v[y] = v.get(y, 0.0) + sign * cg
        nrm = sqrt(sum(c * c for c in v.values()))
        vecs.append({key: c / nrm for key, c in v.items() if c != 0.0})

    def element(x, y):
        (la, ia, ma), (lb, ib, mb) = x
        (lc, ic, mc), (ld, id_, md) = y
        if ma + mb != mc + md:
            return 0.0
        q = ma - mc
        tot = 0.0
        for k in range(max(abs(la - lc), abs(lb - ld)), min(la + lc, lb + ld) + 1):
            ang = (-1) ** (q % 2) * gaunt(la, ma, k, q, lc, mc) * gaunt(lb, mb, k, -q, ld, md)
            if ang != 0.0:
                tot += ang * rk(k, (la, ia), (lb, ib), (lc, ic), (ld, id_))
        if x == y:
            tot += energies[(la, ia)] + energies[(lb, ib)]
        return tot

    n = len(vecs)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            H[i, j] = H[j, i] = sum(ci * cj * element(x, y) for x, ci in vecs[i].items() for y, cj in vecs[j].items())
    return H
