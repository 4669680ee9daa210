"""One-electron reduced density matrix and entanglement measures of CI states.

The RDM lives on spatial orbitals (n l) at the reduced level (no M_L sums).
A CI state is first rewritten as ordered-product amplitudes
C~[(l1, a), (l2, b)] (see ``density.channel_amplitudes``), then

    rho = C~ C~^T,   normalized to unit trace.

Slater rank convention: a spatially symmetric (singlet) state has one
determinant per natural orbital, an antisymmetric (triplet) one has one
determinant per degenerate eigenvalue pair.  Both are "pairs" of the
spin-orbital RDM, so {1s^2} and {1s2s} both have rank 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ci import CIState
from .density import channel_amplitudes

EIG_FLOOR = 1e-14
NEG_TOL = 1e-10


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """rho over the orbital index list ``index`` of (l, i) pairs; unit trace."""

    matrix: np.ndarray
    index: tuple[tuple[int, int], ...]
    S: int = 0

    @property
    def l_values(self) -> list[int]:
        return sorted({l for l, _ in self.index})

    def block(self, l: int) -> np.ndarray:
        """Diagonal l block."""
        sel = [j for j, (ll, _) in enumerate(self.index) if ll == l]
        return self.matrix[np.ix_(sel, sel)]

    @property
    def blocks(self) -> dict[int, np.ndarray]:
        return {l: self.block(l) for l in self.l_values}

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def eigenvalues(self) -> np.ndarray:
        """Descending eigenvalues; raises if clearly negative."""
        if self.matrix.size == 0:
            return np.zeros(0)
        w = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))[::-1]
        if w[-1] < -NEG_TOL:
            raise ValueError(f"RDM has a negative eigenvalue {w[-1]:.3e}")
        return np.clip(w, 0.0, None)


@dataclass(frozen=True)
class EntanglementReport:
    block: str
    state: int
    energy: float
    linear: float
    von_neumann: float
    slater_rank: int
    degenerate: bool = False
    K: int | None = None
    T: int | None = None
    A: int | None = None
    n2: int | None = None


def rdm_from_amplitudes(amplitudes: dict[tuple[int, int], np.ndarray], S: int = 0) -> ReducedDensityMatrix:
    """rho = C~ C~^T from ordered-pair blocks M^{l1 l2}[a, b]."""
    if not amplitudes:
        raise ValueError("no amplitudes: CI coefficients or configuration metadata missing")
    sizes: dict[int, int] = {}
    for (l1, l2), m in amplitudes.items():
        sizes[l1] = max(sizes.get(l1, 0), m.shape[0])
        sizes[l2] = max(sizes.get(l2, 0), m.shape[1])
    offsets, index, pos = {}, [], 0
    for l in sorted(sizes):
        offsets[l] = pos
        index.extend((l, i) for i in range(sizes[l]))
        pos += sizes[l]
    A = np.zeros((pos, pos))
    for (l1, l2), m in amplitudes.items():
        o1, o2 = offsets[l1], offsets[l2]
        A[o1:o1 + m.shape[0], o2:o2 + m.shape[1]] += m
    rho = A @ A.T
    rho = 0.5 * (rho + rho.T)
    tr = np.trace(rho)
    if tr <= 0:
        raise ValueError("state has zero norm")
    return ReducedDensityMatrix(rho / tr, tuple(index), S)


def reduced_density_matrix(state: CIState) -> ReducedDensityMatrix:
    basis = getattr(state, "basis", None)
    if basis is None or getattr(state, "coefficients", None) is None:
        raise ValueError("state lacks CI coefficients or configuration metadata")
    if len(state.coefficients) != len(basis.configurations):
        raise ValueError("coefficient vector does not match the configuration list")
    return rdm_from_amplitudes(channel_amplitudes(state), basis.S)


def linear_entropy(rdm: ReducedDensityMatrix) -> float:
    """1 - Tr rho^2."""
    m = rdm.matrix
    return float(1.0 - np.sum(m * m.T))


def von_neumann_entropy(rdm: ReducedDensityMatrix) -> float:
    """-sum lambda log2 lambda over eigenvalues above the floor, in bits."""
    w = rdm.eigenvalues()
    w = w[w > EIG_FLOOR]
    return float(-np.sum(w * np.log2(w)))


def _rank_from_eigenvalues(w: np.ndarray, S: int, threshold: float) -> int:
    count = int(np.sum(w > threshold))
    # triplet spatial eigenvalues come in degenerate pairs
    return (count + 1) // 2 if S == 1 else count


def slater_rank(state_or_rdm, threshold: float = 1e-6) -> int:
    """Number of Slater determinants (eigenvalue pairs) above ``threshold``.

    Returns 0 when the threshold exceeds the largest eigenvalue.
    """
    rdm = state_or_rdm if isinstance(state_or_rdm, ReducedDensityMatrix) else reduced_density_matrix(state_or_rdm)
    return _rank_from_eigenvalues(rdm.eigenvalues(), rdm.S, threshold)


def entanglement_report(state: CIState, index: int = 1, label=None, threshold: float = 1e-6) -> EntanglementReport:
    rdm = reduced_density_matrix(state)
    rank = slater_rank(rdm, threshold)
    kw = {}
    if label is not None:
        kw = dict(K=label.K, T=label.T, A=label.A, n2=label.n2)
    return EntanglementReport(
        state.block, index, state.energy, linear_entropy(rdm), von_neumann_entropy(rdm), rank, rank == 0, **kw
    )


def tabulate_entanglement(states: list[CIState], labels=None, threshold: float = 1e-6) -> list[EntanglementReport]:
    out = []
    for i, s in enumerate(states):
        lab = labels[i] if labels is not None and i < len(labels) else None
        out.append(entanglement_report(s, i + 1, lab, threshold))
    return out


def write_entanglement_csv(path, reports: list[EntanglementReport]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "state", "energy", "S_L", "S_VN", "slater_rank", "K", "T", "A", "n2"])
        for r in reports:
            w.writerow([r.block, r.state, f"{r.energy:.10f}", f"{r.linear:.10f}", f"{r.von_neumann:.10f}",
                        r.slater_rank, *("" if v is None else v for v in (r.K, r.T, r.A, r.n2))])
