"""B-spline radial basis on a finite box [0, L].

Knot sequences, Cox-de Boor evaluation of the k non-zero splines at a point,
their derivatives, and a per-interval Gauss-Legendre rule that the matrix
assembly routines integrate with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss

KINDS = ("linear", "exponential", "exponential-linear")


@dataclass(frozen=True)
class KnotSequence:
    """Breakpoints plus order; knots carry multiplicity k at both ends."""

    breakpoints: np.ndarray
    order: int
    kind: str = "linear"

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if int(self.order) < 1:
            raise ValueError("order must be >= 1")
        if self.kind not in KINDS:
            raise ValueError(f"unknown knot sequence kind {self.kind!r}")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "order", int(self.order))

    @cached_property
    def knots(self) -> np.ndarray:
        k = self.order
        bp = self.breakpoints
        t = np.concatenate([np.full(k - 1, bp[0]), bp, np.full(k - 1, bp[-1])])
        t.setflags(write=False)
        return t

    @property
    def intervals(self) -> int:
        return self.breakpoints.size - 1

    @property
    def n_splines(self) -> int:
        """Total count n = l + k - 1 before boundary removal."""
        return self.intervals + self.order - 1

    @property
    def r_min(self) -> float:
        return float(self.breakpoints[0])

    @property
    def r_max(self) -> float:
        return float(self.breakpoints[-1])


def make_linear_knots(r_min: float, r_max: float, segments: int, k: int) -> KnotSequence:
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if not r_min < r_max:
        raise ValueError("r_min must be smaller than r_max")
    j = np.arange(segments + 1)
    bp = r_min + (r_max - r_min) / segments * j
    bp[-1] = r_max
    return KnotSequence(bp, k, "linear")


def make_exponential_knots(delta: float, L: float, segments: int, k: int) -> KnotSequence:
    """Exponentially spaced breakpoints delta*exp(alpha*j), j = 0..segments, prefixed by 0.

    ``segments`` counts the exponential intervals between delta and L; the
    extra interval [0, delta] makes the box start at the origin.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if delta >= L:
        raise ValueError("delta must be smaller than L")
    if segments < 1:
        raise ValueError("segments must be >= 1")
    alpha = np.log(L / delta) / segments
    bp = delta * np.exp(alpha * np.arange(segments + 1))
    bp[-1] = L
    return KnotSequence(np.concatenate([[0.0], bp]), k, "exponential")


def make_exponential_linear_knots(
    delta: float, r_junction: float, L: float, segments: int, k: int
) -> KnotSequence:
    """Exponential sequence from delta up to r_junction, then equal steps to L.

    The linear step is the last exponential step (continuous spacing), then
    rounded so the grid lands on L.
    """
    if not 0 < delta < r_junction < L:
        raise ValueError("need 0 < delta < r_junction < L")
    expo = make_exponential_knots(delta, r_junction, segments, k).breakpoints
    h = expo[-1] - expo[-2]
    m = max(1, int(np.ceil((L - r_junction) / h - 1e-9)))
    lin = r_junction + (L - r_junction) * np.arange(1, m + 1) / m
    lin[-1] = L
    return KnotSequence(np.concatenate([expo, lin]), k, "exponential-linear")


def gauss_legendre(points: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``points``-point Gauss-Legendre rule on [a, b]."""
    if points < 1:
        raise ValueError("points must be >= 1")
    if not a < b:
        raise ValueError("need a < b")
    x, w = leggauss(points)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes on every breakpoint interval, flattened."""

    nodes: np.ndarray
    weights: np.ndarray
    points_per_interval: int
    interval: np.ndarray  # interval index of each node

    @classmethod
    def on_breakpoints(cls, breakpoints: np.ndarray, points: int) -> QuadratureRule:
        x, w = leggauss(points)
        a = np.asarray(breakpoints[:-1])
        b = np.asarray(breakpoints[1:])
        half = 0.5 * (b - a)
        nodes = (half[:, None] * x[None, :] + 0.5 * (a + b)[:, None]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        interval = np.repeat(np.arange(a.size), points)
        for arr in (nodes, weights, interval):
            arr.setflags(write=False)
        return cls(nodes, weights, points, interval)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate sampled values; the node axis is the last one."""
        return values @ self.weights


def _find_interval(t: np.ndarray, k: int, x: np.ndarray) -> np.ndarray:
    """Index ``left`` with t[left] <= x < t[left+1] (0-based), right end closed."""
    n = t.size - k
    left = np.searchsorted(t, x, side="right") - 1
    return np.clip(left, k - 1, n - 1)


def _bsplvb(t: np.ndarray, order: int, x: np.ndarray, left: np.ndarray) -> np.ndarray:
    """Values of the ``order`` splines non-zero on [t[left], t[left+1]).

    Column j holds B_{left-order+1+j}.  Vectorized over points.
    """
    x = np.atleast_1d(x)
    vals = np.ones((x.size, 1))
    for j in range(1, order):
        # splines of order j+1 from those of order j
        new = np.zeros((x.size, j + 1))
        for r in range(j):
            i = left - j + 1 + r  # index of the order-j spline in column r
            tl = t[i]
            tr = t[i + j]
            denom = tr - tl
            safe = np.where(denom > 0, denom, 1.0)
            term = np.where(denom > 0, vals[:, r] / safe, 0.0)
            new[:, r] += (tr - x) * term
            new[:, r + 1] += (x - tl) * term
        vals = new
    return vals


def _lift_derivative(t: np.ndarray, j: int, left: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """From values of order j-1 splines, the derivative of the order-j ones."""
    npts = vals.shape[0]
    out = np.zeros((npts, j))
    for r in range(j):
        i = left - j + 1 + r  # order-j spline index
        acc = np.zeros(npts)
        if r - 1 >= 0:  # B^{j-1}_i sits in column r-1 of the order j-1 block
            d = t[i + j - 1] - t[i]
            acc += np.where(d > 0, vals[:, r - 1] / np.where(d > 0, d, 1.0), 0.0)
        if r < j - 1:
            d = t[i + j] - t[i + 1]
            acc -= np.where(d > 0, vals[:, r] / np.where(d > 0, d, 1.0), 0.0)
        out[:, r] = (j - 1) * acc
    return out


@dataclass(frozen=True)
class BSplineBasis:
    """B-splines of a knot sequence with the first and last one removed.

    Removing the two boundary splines enforces U(0) = U(L) = 0 on every
    expansion.  Indices in the public API refer to the *retained* set unless a
    function says otherwise.
    """

    knot_sequence: KnotSequence
    quad_points: int = field(default=0)

    def __post_init__(self):
        if self.quad_points <= 0:
            object.__setattr__(self, "quad_points", self.knot_sequence.order + 3)

    @property
    def order(self) -> int:
        return self.knot_sequence.order

    @property
    def knots(self) -> np.ndarray:
        return self.knot_sequence.knots

    @property
    def box(self) -> float:
        return self.knot_sequence.r_max

    @property
    def size(self) -> int:
        """Number of retained splines."""
        return self.knot_sequence.n_splines - 2

    @cached_property
    def quadrature(self) -> QuadratureRule:
        return QuadratureRule.on_breakpoints(self.knot_sequence.breakpoints, self.quad_points)

    def full_matrix(self, x, deriv: int = 0) -> np.ndarray:
        """Dense (npts, n) matrix of all splines (or a derivative) at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.order
        n = self.knot_sequence.n_splines
        left, vals = eval_spline_derivatives(self, x, deriv, _checked=False)
        out = np.zeros((x.size, n))
        cols = left[:, None] - k + 1 + np.arange(k)[None, :]
        np.put_along_axis(out, cols, vals[..., deriv], axis=1)
        return out

    def matrix(self, x, deriv: int = 0) -> np.ndarray:
        """Dense (npts, size) matrix of the retained splines at ``x``."""
        return self.full_matrix(x, deriv)[:, 1:-1]

    @cached_property
    def quad_values(self) -> np.ndarray:
        """Retained splines at the quadrature nodes, shape (size, nq)."""
        m = self.matrix(self.quadrature.nodes).T.copy()
        m.setflags(write=False)
        return m

    @cached_property
    def quad_derivatives(self) -> np.ndarray:
        m = self.matrix(self.quadrature.nodes, deriv=1).T.copy()
        m.setflags(write=False)
        return m

    def expand(self, coefficients: np.ndarray, x, deriv: int = 0) -> np.ndarray:
        """Evaluate sum_i c_i B_i^(deriv)(x); coefficients may be (..., size)."""
        return np.asarray(coefficients) @ self.matrix(x, deriv).T


def eval_splines(basis: BSplineBasis, x):
    """Return ``(left, values)``: the k splines non-zero at each x.

    ``values[..., j]`` is B_{left-k+1+j} in the full (unreduced) numbering,
    so the row sums equal one on [0, L].
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    t = basis.knots
    if np.any(xa < t[0]) or np.any(xa > t[-1]):
        raise ValueError("x outside the box")
    k = basis.order
    left = _find_interval(t, k, xa)
    vals = _bsplvb(t, k, xa, left)
    if np.ndim(x) == 0:
        return int(left[0]), vals[0]
    return left, vals


def eval_spline_derivatives(basis: BSplineBasis, x, max_order: int, _checked: bool = True):
    """``(left, d)`` with ``d[..., j, m]`` the m-th derivative of B_{left-k+1+j}."""
    k = basis.order
    if max_order >= k:
        raise ValueError("max_order must be smaller than the spline order")
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    t = basis.knots
    if _checked and (np.any(xa < t[0]) or np.any(xa > t[-1])):
        raise ValueError("x outside the box")
    left = _find_interval(t, k, xa)
    out = np.zeros((xa.size, k, max_order + 1))
    out[:, :, 0] = _bsplvb(t, k, xa, left)
    for m in range(1, max_order + 1):
        vals = _bsplvb(t, k - m, xa, left)
        for j in range(k - m + 1, k + 1):
            vals = _lift_derivative(t, j, left, vals)
        out[:, :, m] = vals
    if np.ndim(x) == 0:
        return int(left[0]), out[0]
    return left, out
