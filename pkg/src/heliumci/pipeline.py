"""Configuration-driven runs: orbitals, spectra, resonances, densities, measures, entanglement.

Every stage writes CSV files under the output directory.  Output depends
only on the configuration: numbers are written with fixed formats, files
are produced in block order and JSON sidecars use sorted keys.
"""

from __future__ import annotations

import configparser
import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .bsplines import KINDS, BSplineBasis, make_exponential_knots, make_exponential_linear_knots, make_linear_knots
from .ci import (
    CIState,
    assemble_and_diagonalize,
    build_config_basis,
    default_pairs,
    feshbach_spectrum,
    l_letters,
    parse_block,
    write_spectrum_csv,
)
from .density import (
    diagonal_symmetry_diagnostic,
    exponential_grid,
    pair_density,
    pair_density_norm,
    scaled_origin_density,
)
from .entanglement import tabulate_entanglement, write_entanglement_csv
from .hydrogenic import OrbitalSet, analytic_hydrogen_energy, solve_orbitals
from .information import tabulate_series, write_measures_csv
from .slater import SlaterIntegralCache

log = logging.getLogger(__name__)

STAGES = ("orbitals", "spectrum", "resonances", "density", "measures", "entanglement", "delta-demo")
# stages each stage needs before it can run
_REQUIRES = {
    "orbitals": (),
    "spectrum": ("orbitals",),
    "resonances": ("orbitals",),
    "density": ("spectrum", "resonances"),
    "measures": ("spectrum", "resonances"),
    "entanglement": ("spectrum", "resonances"),
    "delta-demo": (),
}


class StageError(RuntimeError):
    """Failure inside a pipeline stage; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    Z: float = 2.0
    order: int = 7
    splines: int = 25
    kind: str = "exponential"
    delta: float = 0.1
    box: float = 150.0
    junction: float = 20.0
    blocks: list[str] = field(default_factory=lambda: ["1Se", "3Se", "1Po", "3Po", "1De", "3De"])
    l_max: int = 4
    n_max: dict[int, int] = field(default_factory=dict)
    q_projected: bool = True
    bound_states: int = 5
    density_points: int = 100
    density_r_max: float = 40.0
    density_r_min: float = 1e-3
    delta_a: float = 1.0
    delta_a0: float = 1.0
    delta_k_min: float = 1e-3
    delta_k_max: float = 10.0
    delta_points: int = 2000
    out: Path = Path("out")
    labels: Path | None = None
    workers: int = 1
    svg: bool = True

    def validate(self) -> "RunConfig":
        """Raise ValueError naming the first inconsistent setting."""
        if self.Z <= 0:
            raise ValueError(f"Z must be positive, got {self.Z}")
        if self.order < 2:
            raise ValueError(f"spline order must be >= 2, got {self.order}")
        if self.kind not in KINDS:
            raise ValueError(f"basis kind must be one of {', '.join(KINDS)}, got {self.kind!r}")
        if self.splines < 2:
            raise ValueError(f"need at least 2 retained splines, got {self.splines}")
        if self._segments() < 1:
            raise ValueError(f"{self.splines} splines of order {self.order} leave no knot interval")
        if not 0 < self.delta < self.box:
            raise ValueError(f"need 0 < delta < box, got delta={self.delta}, box={self.box}")
        if self.kind == "exponential-linear" and not self.delta < self.junction < self.box:
            raise ValueError(f"junction {self.junction} must lie between delta and box")
        if self.l_max < 0:
            raise ValueError("l_max must be non-negative")
        for b in self.blocks:
            L, S, parity = parse_block(b)
            if L > self.l_max:
                raise ValueError(f"block {b} needs l_max >= {L}, got {self.l_max}")
            if not default_pairs(L, parity, self.l_max):
                raise ValueError(f"block {b} has no orbital pairs with l <= {self.l_max}")
        if len(set(self.blocks)) != len(self.blocks):
            raise ValueError("duplicate symmetry block")
        for l, n in self.n_max.items():
            if not 0 <= l <= self.l_max:
                raise ValueError(f"n_max given for l={l} outside 0..l_max")
            if not 1 <= n <= self.splines:
                raise ValueError(f"n_max for l={l} must be in 1..{self.splines}, got {n}")
        if self.bound_states < 0:
            raise ValueError("bound_states must be non-negative")
        if self.density_points < 3 or not 0 < self.density_r_min < self.density_r_max:
            raise ValueError("density grid needs points >= 3 and 0 < r_min < r_max")
        if self.delta_a0 == 0:
            raise ValueError("double-delta a0 must be non-zero")
        if not 0 < self.delta_k_min < self.delta_k_max or self.delta_points < 2:
            raise ValueError("double-delta k grid needs 0 < k_min < k_max and points >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.labels is not None and not Path(self.labels).is_file():
            raise ValueError(f"label table {self.labels} not found")
        return self

    def _segments(self) -> int:
        if self.kind == "linear":
            return self.splines - self.order + 3
        # exponential kinds prepend r = 0, adding one interval
        return self.splines - self.order + 2

    def basis(self) -> BSplineBasis:
        seg = self._segments()
        if self.kind == "linear":
            ks = make_linear_knots(0.0, self.box, seg, self.order)
        elif self.kind == "exponential":
            ks = make_exponential_knots(self.delta, self.box, seg, self.order)
        else:
            ks = make_exponential_linear_knots(self.delta, self.junction, self.box, seg, self.order)
        return BSplineBasis(ks)


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.replace(";", ",").split(",") if t.strip()]


def _parse_n_max(text: str) -> dict[int, int]:
    out = {}
    for item in _split(text):
        key, _, val = item.partition(":")
        key = key.strip().lower()
        l = l_letters.index(key) if key in l_letters else int(key)
        out[l] = int(val)
    return out


def default_config_path() -> Path:
    return Path(str(resources.files("heliumci") / "data" / "default.ini"))


def default_labels_path() -> Path:
    return Path(str(resources.files("heliumci") / "data" / "labels.csv"))


def load_config(path=None, **overrides) -> RunConfig:
    """Read an INI file (bundled default when ``path`` is None) into a RunConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(default_config_path()) as fh:
        cp.read_file(fh)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ValueError(f"config file {path} not found")
        with open(path) as fh:
            cp.read_file(fh)
    g = cp.get
    cfg = RunConfig(
        Z=cp.getfloat("system", "Z"),
        order=cp.getint("basis", "order"),
        splines=cp.getint("basis", "splines"),
        kind=g("basis", "kind").strip(),
        delta=cp.getfloat("basis", "delta"),
        box=cp.getfloat("basis", "box"),
        junction=cp.getfloat("basis", "junction"),
        blocks=_split(g("ci", "blocks")),
        l_max=cp.getint("ci", "l_max"),
        n_max=_parse_n_max(g("ci", "n_max")),
        q_projected=cp.getboolean("ci", "q_projected"),
        bound_states=cp.getint("ci", "bound_states"),
        density_points=cp.getint("density", "points"),
        density_r_max=cp.getfloat("density", "r_max"),
        density_r_min=cp.getfloat("density", "r_min"),
        delta_a=cp.getfloat("delta", "a"),
        delta_a0=cp.getfloat("delta", "a0"),
        delta_k_min=cp.getfloat("delta", "k_min"),
        delta_k_max=cp.getfloat("delta", "k_max"),
        delta_points=cp.getint("delta", "points"),
        out=Path(g("output", "out").strip() or "out"),
        labels=Path(g("output", "labels").strip()) if g("output", "labels").strip() else None,
        workers=cp.getint("output", "workers"),
        svg=cp.getboolean("output", "svg"),
    )
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if cfg.labels is not None:
        cfg.labels = Path(cfg.labels)
    cfg.out = Path(cfg.out)
    return cfg.validate()


# ---------------------------------------------------------------------------
# resonance labels


@dataclass(frozen=True)
class KTLabel:
    """Herrick-Lin label n1(K,T)^A_n2 of one resonance."""

    K: int
    T: int
    A: int
    n1: int
    n2: int
    block: str
    series: str = ""
    energy_ref: float | None = None

    def __post_init__(self):
        L = parse_block(self.block)[0]
        if self.A not in (-1, 0, 1):
            raise ValueError(f"A must be -1, 0 or +1, got {self.A}")
        if self.T < 0 or self.T > min(L, self.n1 - 1):
            raise ValueError(f"T={self.T} outside 0..min(L, n1-1) for {self.block}, n1={self.n1}")
        if abs(self.K) > self.n1 - 1 - self.T:
            raise ValueError(f"|K|={abs(self.K)} exceeds n1-1-T={self.n1 - 1 - self.T}")

    @property
    def text(self) -> str:
        sign = {1: "+", -1: "-", 0: "0"}[self.A]
        return f"{self.n1}({self.K},{self.T}){sign}_{self.n2}"


def load_label_table(path=None) -> dict[str, list[KTLabel]]:
    """Label rows grouped by block, each group sorted by reference energy."""
    path = default_labels_path() if path is None else Path(path)
    out: dict[str, list[KTLabel]] = {}
    with open(path) as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in rows:
            ref = row.get("energy_ref", "").strip()
            lab = KTLabel(int(row["K"]), int(row["T"]), int(row["A"]), int(row["n1"]), int(row["n2"]),
                          row["block"].strip(), row.get("series", "").strip(), float(ref) if ref else None)
            out.setdefault(lab.block, []).append(lab)
    for labs in out.values():
        labs.sort(key=lambda x: (x.energy_ref if x.energy_ref is not None else np.inf, x.series, x.n2))
    return out


@dataclass
class LabeledState:
    state: CIState
    label: KTLabel | None = None
    deviation: float | None = None
    ambiguous: bool = False


def attach_labels(states: list[CIState], labels: list[KTLabel] | None) -> list[LabeledState]:
    """Assign labels of one block to computed resonances.

    With reference energies the assignment is the one-to-one matching that
    minimizes the total |E - E_ref|; it keeps energy order inside each series.
    Without them labels go onto the lowest states in energy order.  A match is
    flagged ambiguous when another series' reference lies closer to the state
    than four times its own deviation.
    """
    out = [LabeledState(s) for s in states]
    if not labels:
        return out
    if len(labels) > len(states):
        raise ValueError(f"{len(labels)} labels for only {len(states)} states")
    E = np.array([s.energy for s in states])
    if all(l.energy_ref is not None for l in labels):
        ref = np.array([l.energy_ref for l in labels])
        rows, cols = linear_sum_assignment(np.abs(ref[:, None] - E[None, :]))
    else:
        rows = np.arange(len(labels))
        cols = np.argsort(E, kind="stable")[: len(labels)]
    for i, j in zip(rows, cols):
        lab = labels[i]
        item = out[j]
        item.label = lab
        if lab.energy_ref is not None:
            dev = E[j] - lab.energy_ref
            item.deviation = float(dev)
            others = [abs(E[j] - m.energy_ref) for m in labels if m.series != lab.series]
            item.ambiguous = bool(others) and min(others) < 4 * abs(dev)
    return out


def check_node_labels(labeled: list[LabeledState], orbitals: OrbitalSet, grid=None) -> list[tuple[KTLabel, str, bool]]:
    """Diagonal node/antinode diagnostic against A = -1 / +1 labels (A = 0 skipped)."""
    out = []
    for item in labeled:
        lab = item.label
        if lab is None or lab.A == 0:
            continue
        verdict = diagonal_symmetry_diagnostic(pair_density(item.state, orbitals, grid))
        out.append((lab, verdict, verdict == ("node" if lab.A < 0 else "antinode")))
    return out


# ---------------------------------------------------------------------------
# double delta well


def double_delta_transmission(k, a: float = 1.0, a0: float = 1.0):
    """Transmission amplitude t and coefficients T, R for two attractive delta wells at +-a.

    t = a0^2 k^2 / (a0^2 k^2 - 2 i a0 k + exp(4 i a k) - 1).  R comes from the
    independent reflection amplitude, so T + R = 1 is a real check.
    """
    k = np.asarray(k, dtype=float)
    if a0 == 0:
        raise ValueError("a0 must be non-zero")
    if np.any(~np.isfinite(k)) or np.any(k <= 0):
        raise ValueError("wavenumber must be positive (k = 0 is rejected)")
    ph = np.exp(4j * a * k)
    den = a0**2 * k**2 - 2j * a0 * k + ph - 1
    t = a0**2 * k**2 / den
    r = np.exp(-2j * a * k) * (1j * a0 * k * (ph + 1) - ph + 1) / den
    T = np.abs(t) ** 2
    R = np.abs(r) ** 2
    if t.ndim == 0:
        return complex(t), float(T), float(R)
    return t, T, R


def local_maxima(y: np.ndarray) -> np.ndarray:
    """Indices of strict interior local maxima."""
    y = np.asarray(y)
    return np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])) + 1


# ---------------------------------------------------------------------------
# plot grids


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10f}"
    return str(v)


def write_scatter_csv(path, rows: list[dict], columns: list[str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def svg_scatter(path, series: dict[str, tuple[np.ndarray, np.ndarray]], xlabel: str, ylabel: str,
                lines: bool = False) -> None:
    """Minimal SVG scatter/line plot; one colour per series."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    W, H, m = 480, 360, 50
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()]) if series else np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x):
        return m + (x - x0) / (x1 - x0) * (W - 2 * m)

    def py(y):
        return H - m - (y - y0) / (y1 - y0) * (H - 2 * m)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
             f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" fill="none" stroke="black"/>',
             f'<text x="{W / 2:.0f}" y="{H - 12}" text-anchor="middle">{xlabel}</text>',
             f'<text x="14" y="{H / 2:.0f}" transform="rotate(-90 14 {H / 2:.0f})" text-anchor="middle">{ylabel}</text>',
             f'<text x="{m}" y="{H - m + 14}">{x0:.4g}</text>',
             f'<text x="{W - m}" y="{H - m + 14}" text-anchor="end">{x1:.4g}</text>',
             f'<text x="{m - 4}" y="{H - m}" text-anchor="end">{y0:.4g}</text>',
             f'<text x="{m - 4}" y="{m + 8}" text-anchor="end">{y1:.4g}</text>']
    for i, (name, (x, y)) in enumerate(series.items()):
        c = colors[i % len(colors)]
        pts = [(px(a), py(b)) for a, b in zip(x, y)]
        if lines:
            parts.append('<polyline fill="none" stroke="%s" points="%s"/>' % (c, " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)))
        else:
            parts.extend(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3" fill="{c}"/>' for a, b in pts)
        parts.append(f'<text x="{W - m + 4}" y="{m + 14 * (i + 1)}" fill="{c}">{name}</text>')
    parts.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(parts) + "\n")


def svg_heatmap(path, values: np.ndarray, max_cells: int = 60) -> None:
    """Grey-scale heatmap of a matrix (downsampled to at most max_cells per side)."""
    v = np.asarray(values, float)
    step = max(1, int(np.ceil(max(v.shape) / max_cells)))
    v = v[::step, ::step]
    top = v.max() if v.max() > 0 else 1.0
    n1, n2 = v.shape
    cell = 6
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{n2 * cell}" height="{n1 * cell}">']
    for i in range(n1):
        for j in range(n2):
            g = int(round(255 * (1 - v[i, j] / top)))
            parts.append(f'<rect x="{j * cell}" y="{(n1 - 1 - i) * cell}" width="{cell}" height="{cell}" fill="rgb({g},{g},{g})"/>')
    parts.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(parts) + "\n")


def export_plot_grids(artifacts: "PipelineResult", out=None, svg: bool = True) -> list[Path]:
    """Energy-vs-measure scatter grids per block (CSV, optional SVG)."""
    out = Path(out) if out is not None else artifacts.config.out
    plots = out / "plots"
    written = []
    by_block: dict[str, list[dict]] = {}
    for rec in artifacts.measures.get("resonance", []):
        by_block.setdefault(rec.block, []).append({"kind": "measures", "rec": rec})
    for rec in artifacts.entanglement.get("resonance", []):
        by_block.setdefault(rec.block, []).append({"kind": "entanglement", "rec": rec})
    for block in artifacts.blocks:
        items = by_block.get(block, [])
        for quantity, kind, attr in (("shannon", "measures", "shannon"), ("fisher", "measures", "fisher"),
                                     ("linear_entropy", "entanglement", "linear"),
                                     ("von_neumann", "entanglement", "von_neumann")):
            recs = [it["rec"] for it in items if it["kind"] == kind]
            if not recs:
                continue
            rows = []
            for r in recs:
                lab = artifacts.label_of(block, r.state)
                rows.append({"series": lab.series if lab else "", "label": lab.text if lab else "",
                             "energy": r.energy, quantity: getattr(r, attr)})
            p = plots / f"{quantity}_{block}.csv"
            write_scatter_csv(p, rows, ["series", "label", "energy", quantity])
            written.append(p)
            if svg:
                groups: dict[str, list] = {}
                for row in rows:
                    groups.setdefault(row["series"] or "unlabeled", []).append((row["energy"], row[quantity]))
                series = {k: (np.array([a for a, _ in v]), np.array([b for _, b in v])) for k, v in sorted(groups.items())}
                p = plots / f"{quantity}_{block}.svg"
                svg_scatter(p, series, "energy (hartree)", quantity)
                written.append(p)
    if svg:
        for name, grid in artifacts.heatmaps:
            p = plots / f"{name}.svg"
            svg_heatmap(p, grid.values)
            written.append(p)
    return written


# ---------------------------------------------------------------------------
# orchestration


@dataclass
class PipelineResult:
    config: RunConfig
    orbitals: OrbitalSet | None = None
    bound: dict[str, list[CIState]] = field(default_factory=dict)
    resonances: dict[str, list[LabeledState]] = field(default_factory=dict)
    measures: dict[str, list] = field(default_factory=dict)
    entanglement: dict[str, list] = field(default_factory=dict)
    density_rows: list[dict] = field(default_factory=list)
    heatmaps: list = field(default_factory=list)
    files: list[Path] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)

    @property
    def blocks(self) -> list[str]:
        return list(self.config.blocks)

    def label_of(self, block: str, state_number: int) -> KTLabel | None:
        items = [it for it in self.resonances.get(block, []) if it.state.resonance]
        if 1 <= state_number <= len(items):
            return items[state_number - 1].label
        return None


def _resolve(stages) -> list[str]:
    want = set(STAGES if stages is None or "all" in stages else stages)
    for s in list(want):
        if s not in STAGES:
            raise ValueError(f"unknown stage {s!r}")
    changed = True
    while changed:
        changed = False
        for s in list(want):
            for dep in _REQUIRES[s]:
                if dep not in want:
                    want.add(dep)
                    changed = True
    return [s for s in STAGES if s in want]


def _run_stage(name, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
        raise StageError(name, f"{type(exc).__name__}: {exc}") from exc


def _map_blocks(cfg: RunConfig, fn):
    if cfg.workers > 1 and len(cfg.blocks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(fn, cfg.blocks))
    else:
        results = [fn(b) for b in cfg.blocks]
    return dict(zip(cfg.blocks, results))


def _write_orbitals(res: PipelineResult) -> None:
    cfg, orb = res.config, res.orbitals
    p = cfg.out / "orbital_energies.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l", "n", "energy", "exact", "error"])
        for l in orb.l_values:
            for o in orb[l]:
                exact = analytic_hydrogen_energy(o.n, cfg.Z)
                w.writerow([l, o.n, f"{o.energy:.12e}", f"{exact:.12e}", f"{o.energy - exact:.3e}"])
    res.files.append(p)
    p = cfg.out / "orbitals.csv"
    orb.to_csv(p, np.linspace(0.0, min(cfg.box, 60.0), 301), n_max=5)
    res.files.append(p)


def run_pipeline(config: RunConfig, stages=None) -> PipelineResult:
    """Run the requested stages (with their prerequisites) and write CSV output."""
    cfg = config.validate()
    order = _resolve(stages)
    res = PipelineResult(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)

    physics = [s for s in order if s != "delta-demo"]
    if physics and not cfg.blocks and physics != ["orbitals"]:
        msg = "no symmetry blocks requested; nothing to compute beyond orbitals"
        res.notices.append(msg)
        log.warning(msg)
        physics = ["orbitals"]

    cache = None
    if "orbitals" in physics:
        def orbitals_stage():
            basis = cfg.basis()
            res.orbitals = solve_orbitals(basis, cfg.Z, range(cfg.l_max + 1))
            _write_orbitals(res)
        _run_stage("orbitals", orbitals_stage)
        cache_n = {l: cfg.n_max.get(l, cfg.splines) for l in range(cfg.l_max + 1)}
        cache = SlaterIntegralCache(res.orbitals, n_max=cache_n)

    n_max = cfg.n_max or None

    if "spectrum" in physics:
        def spectrum_stage():
            def one(block):
                L, S, par = parse_block(block)
                basis = build_config_basis(L, S, par, default_pairs(L, par, cfg.l_max), res.orbitals, False, n_max)
                states = assemble_and_diagonalize(basis, res.orbitals, cache)
                bound = [s for s in states if s.energy < -cfg.Z**2 / 2]
                for s in bound:
                    s.resonance = False
                return basis, bound
            out = _map_blocks(cfg, one)
            with open(cfg.out / "config_counts.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["block", "pair", "configurations"])
                for block, (basis, _) in out.items():
                    for pair, n in basis.counts().items():
                        w.writerow([block, pair, n])
                    w.writerow([block, "total", len(basis)])
            res.files.append(cfg.out / "config_counts.csv")
            for block, (_, bound) in out.items():
                res.bound[block] = bound
                p = cfg.out / f"spectrum_{block}.csv"
                write_spectrum_csv(p, bound)
                res.files.append(p)
        _run_stage("spectrum", spectrum_stage)

    if "resonances" in physics and cfg.q_projected:
        def resonance_stage():
            table = load_label_table(cfg.labels)

            def one(block):
                L, S, par = parse_block(block)
                states = feshbach_spectrum(L, S, par, res.orbitals, l_max=cfg.l_max, n_max=n_max, cache=cache)
                reso = [s for s in states if s.resonance]
                labs = table.get(block)
                if labs and len(labs) > len(reso):
                    # small bases resolve fewer resonances: keep the lowest references
                    res.notices.append(f"{block}: {len(reso)} resonances for {len(labs)} labels; "
                                       f"highest {len(labs) - len(reso)} labels unused")
                    labs = labs[: len(reso)]
                return attach_labels(reso, labs)
            out = _map_blocks(cfg, one)
            for block, labeled in out.items():
                res.resonances[block] = labeled
                p = cfg.out / f"resonances_{block}.csv"
                _write_resonance_csv(p, labeled)
                res.files.append(p)
        _run_stage("resonances", resonance_stage)
    elif "resonances" in physics:
        res.notices.append("q_projected is off; resonance stages skipped")

    analysis = {"bound": {b: s[: cfg.bound_states] for b, s in res.bound.items()},
                "resonance": {b: [it.state for it in items] for b, items in res.resonances.items()}}

    def labels_for(kind, block):
        if kind != "resonance":
            return None
        return [it.label for it in res.resonances[block]]

    if "density" in physics:
        _run_stage("density", _density_stage, res, analysis, labels_for)
    if "measures" in physics:
        def measures_stage():
            for kind, blocks in analysis.items():
                recs = []
                for block, states in blocks.items():
                    recs.extend(tabulate_series(states, res.orbitals, labels_for(kind, block)))
                res.measures[kind] = recs
                p = cfg.out / f"measures_{kind}.csv"
                write_measures_csv(p, recs)
                res.files.append(p)
        _run_stage("measures", measures_stage)
    if "entanglement" in physics:
        def entanglement_stage():
            for kind, blocks in analysis.items():
                recs = []
                for block, states in blocks.items():
                    recs.extend(tabulate_entanglement(states, labels_for(kind, block)))
                res.entanglement[kind] = recs
                p = cfg.out / f"entanglement_{kind}.csv"
                write_entanglement_csv(p, recs)
                res.files.append(p)
        _run_stage("entanglement", entanglement_stage)
    if "delta-demo" in order:
        _run_stage("delta-demo", _delta_stage, res)
    if res.measures or res.entanglement or res.heatmaps:
        res.files.extend(_run_stage("plots", export_plot_grids, res, cfg.out, cfg.svg))
    return res


def _write_resonance_csv(path, labeled: list[LabeledState]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "index", "energy_hartree", "label", "series", "K", "T", "A", "n1", "n2",
                    "energy_ref", "deviation", "ambiguous"])
        for i, it in enumerate(labeled):
            lab = it.label
            cells = [it.state.block, i + 1, f"{it.state.energy:.10f}"]
            if lab is None:
                cells += ["", "", "", "", "", "", "", "", "", ""]
            else:
                cells += [lab.text, lab.series, lab.K, lab.T, lab.A, lab.n1, lab.n2,
                          "" if lab.energy_ref is None else f"{lab.energy_ref:.7f}",
                          "" if it.deviation is None else f"{it.deviation:.3e}", int(it.ambiguous)]
            w.writerow(cells)


def _density_stage(res: PipelineResult, analysis, labels_for) -> None:
    cfg = res.config
    grid = exponential_grid(cfg.density_r_max, cfg.density_points, cfg.density_r_min)
    rows = []
    for kind, blocks in analysis.items():
        for block, states in blocks.items():
            labs = labels_for(kind, block)
            for i, s in enumerate(states):
                lab = labs[i] if labs else None
                pd = pair_density(s, res.orbitals, grid)
                verdict = diagonal_symmetry_diagnostic(pd)
                row = {"block": block, "kind": kind, "state": i + 1, "energy": s.energy,
                       "pair_norm": pair_density_norm(s, res.orbitals),
                       "rho0_scaled": scaled_origin_density(s, res.orbitals),
                       "diagnostic": verdict, "label": lab.text if lab else "",
                       "A": lab.A if lab else None,
                       "agrees": "" if lab is None or lab.A == 0 else int(verdict == ("node" if lab.A < 0 else "antinode"))}
                rows.append(row)
                if kind == "bound" or lab is not None:
                    name = f"pair_{block}_{kind}_{i + 1:02d}"
                    p = cfg.out / "density" / f"{name}.csv"
                    pd.to_csv(p)
                    res.files.extend([p, p.with_suffix(".json")])
                    if i < 2:
                        res.heatmaps.append((name, pd))
    res.density_rows = rows
    p = cfg.out / "density_summary.csv"
    write_scatter_csv(p, rows, ["block", "kind", "state", "energy", "pair_norm", "rho0_scaled",
                                "diagnostic", "label", "A", "agrees"])
    res.files.append(p)


def _delta_stage(res: PipelineResult) -> None:
    cfg = res.config
    k = np.linspace(cfg.delta_k_min, cfg.delta_k_max, cfg.delta_points)
    t, T, R = double_delta_transmission(k, cfg.delta_a, cfg.delta_a0)
    p = cfg.out / "delta_transmission.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "energy", "re_t", "im_t", "T", "R"])
        for row in zip(k, 0.5 * k**2, t.real, t.imag, T, R):
            w.writerow([f"{v:.12e}" for v in row])
    res.files.append(p)
    if cfg.svg:
        p = cfg.out / "plots" / "delta_transmission.svg"
        svg_scatter(p, {"T": (k, T)}, "k", "T", lines=True)
        res.files.append(p)
