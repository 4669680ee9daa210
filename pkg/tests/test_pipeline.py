import csv
import filecmp
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from heliumci.cli import main
from heliumci.pipeline import (
    KTLabel,
    RunConfig,
    StageError,
    attach_labels,
    check_node_labels,
    double_delta_transmission,
    load_config,
    load_label_table,
    local_maxima,
    run_pipeline,
)

from conftest import resonance_states

SMALL = """\
[basis]
splines = 15
box = 60.0
[ci]
blocks = 1Se, 3Se, 1Po
l_max = 1
bound_states = 2
[density]
points = 30
[delta]
points = 200
"""


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "small.ini"
    p.write_text(SMALL)
    return p


@pytest.fixture(scope="module")
def small_run(small_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("run1")
    assert main(["all", "--config", str(small_config), "--out", str(out)]) == 0
    return out


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- configuration ----------------------------------------------------------------

def test_default_config_matches_dataclass():
    cfg = load_config()
    ref = RunConfig()
    for name in ("Z", "order", "splines", "kind", "delta", "box", "blocks", "l_max", "q_projected", "density_points"):
        assert getattr(cfg, name) == getattr(ref, name)
    assert cfg.basis().size == 25


def test_config_file_and_overrides(small_config, tmp_path):
    cfg = load_config(small_config, out=tmp_path, blocks=["1Se"])
    assert cfg.splines == 15 and cfg.box == 60.0 and cfg.l_max == 1
    assert cfg.blocks == ["1Se"] and cfg.out == tmp_path
    assert cfg.basis().size == 15


def test_n_max_parsing(tmp_path):
    p = tmp_path / "n.ini"
    p.write_text("[ci]\nn_max = s:10, p:8, 2:5\n")
    assert load_config(p).n_max == {0: 10, 1: 8, 2: 5}


@pytest.mark.parametrize("override,message", [
    (dict(Z=0.0), "Z must be positive"),
    (dict(order=1), "spline order"),
    (dict(kind="cubic"), "basis kind"),
    (dict(splines=5), "leave no knot interval"),
    (dict(delta=200.0), "delta < box"),
    (dict(kind="exponential-linear", junction=500.0), "junction"),
    (dict(blocks=["1De"], l_max=1), "needs l_max >= 2"),
    (dict(blocks=["1Se", "1Se"]), "duplicate"),
    (dict(blocks=["1Xe"]), "block"),
    (dict(n_max={7: 3}), "outside 0..l_max"),
    (dict(n_max={0: 99}), "must be in 1..25"),
    (dict(density_points=2), "density grid"),
    (dict(delta_a0=0.0), "a0 must be non-zero"),
    (dict(delta_k_min=0.0), "k grid"),
    (dict(workers=0), "workers"),
    (dict(labels=Path("/nonexistent/labels.csv")), "not found"),
])
def test_config_validation(override, message):
    with pytest.raises(ValueError, match=message):
        load_config(**override)


def test_missing_config_file():
    with pytest.raises(ValueError, match="not found"):
        load_config("/nonexistent/run.ini")


# -- labels ------------------------------------------------------------------------

def test_label_invariants():
    lab = KTLabel(1, 0, 1, 2, 3, "1Se", "a", -0.59)
    assert lab.text == "2(1,0)+_3"
    assert KTLabel(0, 1, -1, 2, 2, "3Po").text == "2(0,1)-_2"
    with pytest.raises(ValueError):
        KTLabel(1, 0, 2, 2, 2, "1Se")
    with pytest.raises(ValueError):
        KTLabel(0, 1, 1, 2, 2, "1Se")  # T > L
    with pytest.raises(ValueError):
        KTLabel(2, 0, 1, 2, 2, "1Se")  # |K| > n1 - 1 - T


def test_bundled_label_table():
    table = load_label_table()
    assert set(table) == {"1Se", "3Se", "1Po", "3Po", "1De", "3De"}
    se = table["1Se"]
    assert len(se) == 10
    assert sorted({l.series for l in se}) == ["a", "b"] and sum(l.series == "a" for l in se) == 5
    assert all(l.A == -1 for l in table["3Se"])
    for labs in table.values():
        refs = [l.energy_ref for l in labs]
        assert refs == sorted(refs)


def test_singlet_s_labels_map_onto_lowest_ten():
    states = list(resonance_states("1Se"))
    labeled = attach_labels(states, load_label_table()["1Se"])
    got = [i for i, it in enumerate(labeled) if it.label is not None]
    assert got == list(range(10))
    assert all(abs(it.deviation) < 1e-5 and not it.ambiguous for it in labeled[:10])
    # energy order inside each series is kept
    for series in "ab":
        E = [it.state.energy for it in labeled if it.label and it.label.series == series]
        assert E == sorted(E)


def test_empty_label_table_passes_through():
    states = list(resonance_states("3Se"))[:3]
    assert all(it.label is None for it in attach_labels(states, []))
    assert all(it.label is None for it in attach_labels(states, None))


def test_more_labels_than_states_rejected():
    states = list(resonance_states("1Se"))[:3]
    with pytest.raises(ValueError, match="labels for only"):
        attach_labels(states, load_label_table()["1Se"])


def test_labels_without_reference_energies():
    states = list(resonance_states("1Se"))[:4]
    labs = [KTLabel(1, 0, 1, 2, n, "1Se") for n in (2, 3)]
    out = attach_labels(states, labs)
    assert [it.label.n2 if it.label else None for it in out] == [2, 3, None, None]


def test_triplet_node_labels(orbitals):
    labeled = attach_labels(list(resonance_states("3Se")), load_label_table()["3Se"])
    checks = check_node_labels(labeled, orbitals, np.concatenate([[0.0], np.geomspace(1e-2, 40, 59)]))
    assert checks and all(ok for _, verdict, ok in checks)


# -- double delta ------------------------------------------------------------------

def _matched_t(k, a, a0):
    # solve the four matching conditions for (r, A, B, t) directly:
    # psi = e^{ikx} + r e^{-ikx} | A e^{ikx} + B e^{-ikx} | t e^{ikx},
    # continuous, with psi'(+) - psi'(-) - g psi = 0 at x = -a and x = +a
    g = -2.0 / a0
    p, m = np.exp(1j * k * a), np.exp(-1j * k * a)
    ik = 1j * k
    M = np.array([
        [p, -m, -p, 0],
        [ik * p - g * p, ik * m, -ik * p, 0],
        [0, p, m, -p],
        [0, -ik * p, ik * m, ik * p - g * p],
    ], complex)
    rhs = np.array([-m, ik * m + g * m, 0, 0], complex)
    return np.linalg.solve(M, rhs)[3]


def test_transmission_matches_matching_conditions():
    for k in (0.01, 0.3, 1.0, 2.7, 9.5):
        for a, a0 in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.7)):
            t, _, _ = double_delta_transmission(k, a, a0)
            assert abs(t - _matched_t(k, a, a0)) < 1e-12 * max(1.0, abs(t))


def test_unitarity_over_six_decades():
    k = np.concatenate([np.geomspace(1e-3, 1e3, 1000), np.random.default_rng(4).uniform(1e-3, 1e3, 1000)])
    _, T, R = double_delta_transmission(k, 1.0, 1.0)
    assert np.max(np.abs(T + R - 1)) < 1e-12


def test_high_energy_transparency():
    assert double_delta_transmission(1e4)[1] == pytest.approx(1.0, abs=1e-6)


def test_resonance_peaks():
    k = np.linspace(1e-3, 10, 4000)
    T = double_delta_transmission(k)[1]
    assert len(local_maxima(T)) >= 3


def test_transmission_rejects():
    with pytest.raises(ValueError):
        double_delta_transmission(0.0)
    with pytest.raises(ValueError):
        double_delta_transmission(np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        double_delta_transmission(1.0, a0=0.0)


def test_scalar_and_array_returns():
    t, T, R = double_delta_transmission(1.0)
    assert isinstance(t, complex) and isinstance(T, float)
    t, T, R = double_delta_transmission(np.array([1.0, 2.0]))
    assert t.shape == T.shape == (2,)


# -- orchestration and CLI -------------------------------------------------------------

def test_cli_all_writes_expected_files(small_run):
    names = {p.name for p in small_run.iterdir()}
    for block in ("1Se", "3Se", "1Po"):
        assert f"spectrum_{block}.csv" in names and f"resonances_{block}.csv" in names
    for name in ("orbital_energies.csv", "orbitals.csv", "config_counts.csv", "density_summary.csv",
                 "measures_bound.csv", "measures_resonance.csv", "entanglement_bound.csv",
                 "entanglement_resonance.csv", "delta_transmission.csv"):
        assert name in names


def test_spectrum_csv_content(small_run):
    rows = _rows(small_run / "spectrum_1Se.csv")
    E = [float(r["energy_hartree"]) for r in rows]
    assert E == sorted(E) and E[-1] < -2.0 and abs(E[0] + 2.9035) < 1e-2
    counts = {(r["block"], r["pair"]): int(r["configurations"]) for r in _rows(small_run / "config_counts.csv")}
    # s orbitals 15, p orbitals 15: ss pairs 120, pp pairs 120
    assert counts[("1Se", "total")] == 240 and counts[("3Se", "ss")] == 105


def test_pair_density_csv_square_symmetric(small_run):
    files = sorted((small_run / "density").glob("pair_*.csv"))
    assert files
    with open(files[0]) as fh:
        rows = list(csv.reader(fh))
    r2 = np.array(rows[0][1:], float)
    r1 = np.array([row[0] for row in rows[1:]], float)
    vals = np.array([row[1:] for row in rows[1:]], float)
    assert vals.shape == (r1.size, r2.size) and np.array_equal(r1, r2)
    np.testing.assert_allclose(vals, vals.T, atol=1e-10 * vals.max())


def test_density_summary(small_run):
    rows = _rows(small_run / "density_summary.csv")
    assert all(abs(float(r["pair_norm"]) - 1) < 1e-6 for r in rows)
    kinds = {r["kind"] for r in rows}
    assert kinds == {"bound", "resonance"}


def test_measure_csv_round_trip(small_run):
    rows = _rows(small_run / "measures_resonance.csv")
    assert rows and all(np.isfinite(float(r["shannon"])) and float(r["fisher"]) > 0 for r in rows)
    for r in rows:
        assert f"{float(r['shannon']):.10f}" == r["shannon"]


def test_plot_grid_one_row_per_resonance(small_run):
    n = len(_rows(small_run / "resonances_1Se.csv"))
    for q in ("shannon", "fisher", "linear_entropy", "von_neumann"):
        assert len(_rows(small_run / "plots" / f"{q}_1Se.csv")) == n


def test_svg_files_parse(small_run):
    svgs = list((small_run / "plots").glob("*.svg"))
    assert any(p.name.startswith("pair_") for p in svgs)
    for p in svgs:
        assert ET.parse(p).getroot().tag.endswith("svg")


def test_delta_csv(small_run):
    rows = _rows(small_run / "delta_transmission.csv")
    assert len(rows) == 200
    assert all(abs(float(r["T"]) + float(r["R"]) - 1) < 1e-11 for r in rows)


def test_determinism(small_config, small_run, tmp_path):
    assert main(["all", "--config", str(small_config), "--out", str(tmp_path)]) == 0
    a = sorted(p.relative_to(small_run) for p in small_run.rglob("*.csv"))
    b = sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*.csv"))
    assert a == b
    _, mismatch, errors = filecmp.cmpfiles(small_run, tmp_path, [str(p) for p in a], shallow=False)
    assert mismatch == [] and errors == []


def test_threaded_blocks_identical(small_config, small_run, tmp_path):
    cfg = load_config(small_config, out=tmp_path, workers=3)
    run_pipeline(cfg, ["resonances"])
    for block in ("1Se", "3Se", "1Po"):
        name = f"resonances_{block}.csv"
        assert filecmp.cmp(small_run / name, tmp_path / name, shallow=False)


def test_single_stage_subcommand(tmp_path, capsys, small_config):
    assert main(["delta-demo", "--config", str(small_config), "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out.split()
    assert str(tmp_path / "delta_transmission.csv") in printed
    assert not (tmp_path / "spectrum_1Se.csv").exists()


def test_empty_block_list_notice(tmp_path, capsys):
    cfg = tmp_path / "empty.ini"
    cfg.write_text("[basis]\nsplines = 12\n[ci]\nblocks =\n")
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "notice: no symmetry blocks" in capsys.readouterr().err
    assert not list((tmp_path / "o").glob("spectrum_*.csv"))


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[ci]\nblocks = 1De\nl_max = 1\n")
    assert main(["spectrum", "--config", str(cfg)]) == 2
    assert "[config]" in capsys.readouterr().err


def test_stage_error_is_tagged(tmp_path, capsys, small_config):
    labels = tmp_path / "labels.csv"
    labels.write_text("block,series,K,T,A,n1,n2,energy_ref\n1Se,a,1,0,5,2,2,-0.77\n")
    code = main(["resonances", "--config", str(small_config), "--out", str(tmp_path / "o"), "--labels", str(labels)])
    assert code == 1
    assert "[resonances]" in capsys.readouterr().err


def test_stage_error_type():
    err = StageError("density", "boom")
    assert str(err) == "[density] boom" and err.stage == "density"


def test_unknown_stage_rejected(tmp_path):
    with pytest.raises(ValueError):
        run_pipeline(load_config(out=tmp_path), ["nonsense"])
