"""Shannon entropy and Fisher information of spherically averaged densities."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import pi
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

from .ci import CIState
from .density import RadialDensity, density_at_origin, radial_probability
from .hydrogenic import OrbitalSet, analytic_hydrogen_radial, analytic_hydrogen_radial_derivative

CUTOFF = 1e-14
NORM_TOL = 1e-4


@dataclass
class MeasureRecord:
    block: str
    state: int
    energy: float
    shannon: float
    fisher: float
    dropped_mass: float = 0.0
    K: int | None = None
    T: int | None = None
    A: int | None = None
    n2: int | None = None


def _panel_rule(edges: np.ndarray, points: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(points)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def _integrands(state: CIState, orbitals: OrbitalSet, r: np.ndarray):
    P, dP = radial_probability(state, orbitals, r, deriv=True)
    rho = P / (4 * pi * r**2)
    drho = (dP * r - 2 * P) / (4 * pi * r**3)
    return rho, drho


def _panel_measures(rho, drho, r, w) -> np.ndarray:
    # Shannon and Fisher contributions of each panel, shape (panels, 2)
    radial = 4 * pi * rho * r**2
    keep = (radial > CUTOFF) & (rho >= CUTOFF)
    safe = np.where(keep, rho, 1.0)
    sh = np.where(keep, -radial * np.log(safe), 0.0)
    fi = np.where(keep, 4 * pi * drho**2 / safe * r**2, 0.0)
    return np.stack([(w * sh).sum(axis=-1), (w * fi).sum(axis=-1)], axis=-1)


def state_density(
    state: CIState,
    orbitals: OrbitalSet,
    refine: int = 4,
    points: int = 16,
    electrons: int = 2,
    tol: float = 1e-10,
    max_depth: int = 12,
) -> RadialDensity:
    """rho(r) on an adaptive Gauss rule for the Shannon and Fisher integrals.

    Panels start from the basis breakpoints split ``refine`` times.  A panel
    is bisected while its Shannon or Fisher contribution changes by more
    than ``tol`` between one panel and its two halves.  Excited states need
    this near the dips of rho left by orbital nodes, where rho'^2 / rho is
    sharply peaked.
    """
    bp = orbitals.basis.knot_sequence.breakpoints
    frac = np.arange(refine) / refine
    edges = np.append((bp[:-1, None] + np.diff(bp)[:, None] * frac[None, :]).ravel(), bp[-1])
    x, wx = leggauss(points)
    done: list[tuple[float, float]] = []
    todo = np.stack([edges[:-1], edges[1:]], axis=1)
    for depth in range(max_depth + 1):
        if todo.size == 0:
            break
        a, b = todo[:, :1], todo[:, 1:]
        mid = 0.5 * (a + b)

        def measure(lo, hi):
            r = 0.5 * (hi - lo) * x + 0.5 * (lo + hi)
            w = 0.5 * (hi - lo) * wx
            rho, drho = _integrands(state, orbitals, r.ravel())
            return _panel_measures(rho.reshape(r.shape), drho.reshape(r.shape), r, w)

        whole = measure(a, b)
        halves = measure(a, mid) + measure(mid, b)
        ok = np.all(np.abs(whole - halves) <= tol, axis=1) | (depth == max_depth)
        done.extend(map(tuple, todo[ok]))
        todo = np.concatenate([np.hstack([a, mid]), np.hstack([mid, b])])[np.tile(~ok, 2)]
    done.sort()
    lo, hi = np.array(done).T
    r = (0.5 * (hi - lo)[:, None] * x + 0.5 * (lo + hi)[:, None]).ravel()
    w = (0.5 * (hi - lo)[:, None] * wx).ravel()
    rho, drho = _integrands(state, orbitals, r)
    return RadialDensity(r, rho, drho, density_at_origin(state, orbitals), electrons, weights=w)


def hydrogen_density(n: int, l: int, Z: float = 1.0, r_max: float | None = None, panels: int = 200, points: int = 16) -> RadialDensity:
    """Analytic rho = R_nl^2 / 4 pi on a geometric Gauss rule."""
    if r_max is None:
        r_max = (60.0 * n * n + 40.0) / Z
    edges = np.concatenate([[0.0], np.geomspace(1e-4 / Z, r_max, panels)])
    r, w = _panel_rule(edges, points)
    R = analytic_hydrogen_radial(n, l, Z, r)
    dR = analytic_hydrogen_radial_derivative(n, l, Z, r)
    rho = R * R / (4 * pi)
    drho = 2 * R * dR / (4 * pi)
    origin = float(analytic_hydrogen_radial(n, l, Z, 0.0) ** 2 / (4 * pi))
    return RadialDensity(r, rho, drho, origin, 1, weights=w)


def _weights(density: RadialDensity) -> np.ndarray:
    if density.weights is not None:
        return density.weights
    # trapezoid on the sample grid when no quadrature rule is attached
    r = density.r
    w = np.zeros_like(r)
    h = np.diff(r)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def normalization(density: RadialDensity) -> float:
    return float(4 * pi * np.sum(_weights(density) * density.values * density.r**2))


def _check_norm(density: RadialDensity) -> float:
    norm = normalization(density)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"density is not normalized (4 pi int rho r^2 dr = {norm:.6g})")
    return norm


def shannon_entropy(density: RadialDensity, with_dropped: bool = False):
    """S = -4 pi int rho ln rho r^2 dr in nats.

    Points where 4 pi rho r^2 <= 1e-14 are skipped; the probability mass they
    carry is returned as the second item when ``with_dropped`` is set.
    """
    _check_norm(density)
    w = _weights(density)
    r, rho = density.r, density.values
    radial = 4 * pi * rho * r**2
    keep = (radial > CUTOFF) & (rho > 0)
    S = -float(np.sum(w[keep] * radial[keep] * np.log(rho[keep])))
    dropped = float(np.sum(w[~keep] * np.abs(radial[~keep])))
    return (S, dropped) if with_dropped else S


def fisher_information(density: RadialDensity, with_dropped: bool = False):
    """I = 4 pi int rho'^2 / rho r^2 dr, dropping points with rho < 1e-14."""
    _check_norm(density)
    if density.derivative is None:
        raise ValueError("Fisher information needs the density derivative")
    w = _weights(density)
    r, rho, d = density.r, density.values, density.derivative
    keep = (rho >= CUTOFF) & np.isfinite(d)
    I = float(4 * pi * np.sum(w[keep] * d[keep] ** 2 / rho[keep] * r[keep] ** 2))
    dropped = float(4 * pi * np.sum(w[~keep] * np.abs(rho[~keep]) * r[~keep] ** 2))
    return (I, dropped) if with_dropped else I


def tabulate_series(states: list[CIState], orbitals: OrbitalSet, labels=None) -> list[MeasureRecord]:
    """Shannon and Fisher values for every state, with optional label metadata.

    ``labels`` may be a list aligned with ``states`` holding objects with
    K, T, A, n2 attributes (or None entries).
    """
    out = []
    for i, s in enumerate(states):
        dens = state_density(s, orbitals)
        S, drop_s = shannon_entropy(dens, with_dropped=True)
        I, drop_i = fisher_information(dens, with_dropped=True)
        rec = MeasureRecord(s.block, i + 1, s.energy, S, I, max(drop_s, drop_i))
        lab = labels[i] if labels is not None and i < len(labels) else None
        if lab is not None:
            rec.K, rec.T, rec.A, rec.n2 = lab.K, lab.T, lab.A, lab.n2
        out.append(rec)
    return out


def write_measures_csv(path, records: list[MeasureRecord]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "state", "energy", "shannon", "fisher", "K", "T", "A", "n2"])
        for r in records:
            w.writerow([r.block, r.state, f"{r.energy:.10f}", f"{r.shannon:.10f}", f"{r.fisher:.10f}",
                        _blank(r.K), _blank(r.T), _blank(r.A), _blank(r.n2)])


def _blank(v) -> str:
    return "" if v is None else str(v)
