import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrabi import analytic, cli, eigen, gfunction
from qrabi.config import RunConfig
from qrabi.model import ModelParams, Sector, build_sector_hamiltonian


def run_cli(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def read_csv(path):
    text = path.read_text(encoding="utf-8")
    body = "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))
    rows = list(csv.reader(io.StringIO(body)))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def embedded_config(path) -> RunConfig:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        d = json.loads(text)["config"]
        return RunConfig.from_text("\n".join(
            f"{k} = {','.join(map(str, v)) if isinstance(v, list) else ('' if v is None else v)}"
            for k, v in d.items()))
    if path.suffix == ".svg":
        block = text.split("<![CDATA[", 1)[1].split("]]>", 1)[0]
        return RunConfig.from_text(block)
    return RunConfig.from_text("\n".join(line[2:] for line in text.splitlines()
                                        if line.startswith("# ") and "=" in line))


configs = st.builds(
    RunConfig,
    command=st.sampled_from(["spectrum", "gfunction", "husimi", "stats"]),
    g=st.floats(0, 5, allow_nan=False),
    delta=st.floats(0, 1),
    delta_list=st.none() | st.lists(st.floats(0, 1), min_size=1, max_size=4).map(tuple),
    dim=st.none() | st.integers(2, 10 ** 5),
    sector=st.sampled_from(["plus", "minus"]),
    allow_unconverged=st.booleans(),
    n=st.lists(st.integers(0, 50), min_size=1, max_size=3).map(tuple),
    mu=st.floats(0, 0.999),
    out=st.text("abc_/-", min_size=1, max_size=10),
)


@settings(max_examples=100, deadline=None)
@given(configs)
def test_config_round_trip(cfg):
    assert RunConfig.from_text(cfg.to_text()) == cfg


def test_config_errors():
    with pytest.raises(ValueError, match="unknown key"):
        RunConfig.from_text("colour = red\n")
    with pytest.raises(ValueError, match="expected"):
        RunConfig.from_text("g 0.5\n")
    with pytest.raises(ValueError, match="boolean"):
        RunConfig.from_text("allow_unconverged = maybe\n")


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("g = 0.5\ndelta = 0.3\nlevels = 4\n")
    code, out = run_cli(tmp_path, "spectrum", "--config", str(cfg), "--levels", "3")
    assert code == 0
    saved = RunConfig.load(out / "run.cfg")
    assert saved.g == 0.5 and saved.levels == 3 and saved.delta_list is None
    header, rows = read_csv(out / "energies.csv")
    assert header == ["delta", "level_index", "energy"]
    assert len(rows) == 200 * 3


def test_spectrum_default_sweep_shape(tmp_path):
    code, out = run_cli(tmp_path, "spectrum")
    assert code == 0
    _, rows = read_csv(out / "energies.csv")
    assert len(rows) == 200 * 11
    deltas = sorted({r[0] for r in rows})
    assert len(deltas) == 200 and deltas[0] == 0.0 and deltas[-1] < 1.0
    meta = json.loads((out / "spectrum_meta.json").read_text())
    assert all(r["converged_levels"] == 11 for r in meta["runs"])


def test_spectrum_degenerate_and_single_delta(tmp_path):
    code, out = run_cli(tmp_path, "spectrum", "--delta", "0", "--levels", "11")
    assert code == 0
    _, rows = read_csv(out / "energies.csv")
    assert len(rows) == 11 and {r[0] for r in rows} == {0.0}
    e = np.array([r[2] for r in rows])
    np.testing.assert_allclose(e, analytic.degenerate_spectrum(ModelParams(), 11), atol=1e-8)


def test_spectrum_rejects_delta_one(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "spectrum", "--delta", "1")
    assert code == 2
    assert "continuous" in capsys.readouterr().err


def test_gfunction_roots_match_spectrum(tmp_path):
    code, out = run_cli(tmp_path, "gfunction", "--delta", "0.5", "--k-max", "8")
    assert code == 0
    doc = json.loads((out / "roots.json").read_text())
    energies = np.array(doc["runs"][0]["energies"])
    p = ModelParams(delta=0.5)
    ref = eigen.eigenvalues(build_sector_hamiltonian(p, Sector.PLUS, 400), (0, energies.size))
    np.testing.assert_allclose(energies[:10], ref[:10], atol=1e-6)
    # sampled points keep clear of the poles x = k
    _, rows = read_csv(out / "gfunction.csv")
    xs = np.array([r[1] for r in rows])
    assert np.min(np.abs(xs - np.rint(xs))) >= gfunction.POLE_EPS * (1 - 1e-9)
    assert all(math.isfinite(r[2]) for r in rows)


def test_gfunction_rejections(tmp_path, capsys):
    assert run_cli(tmp_path, "gfunction", "--delta", "1")[0] == 2
    assert run_cli(tmp_path, "gfunction", "--delta", "0.95", "--g", "2")[0] == 2
    err = capsys.readouterr().err
    assert "delta < 1" in err and "g_tilde" in err


def test_husimi_vacuum(tmp_path):
    code, out = run_cli(tmp_path, "husimi", "--mode", "vacuum", "--grid", "33")
    assert code == 0
    header, rows = read_csv(out / "q.csv")
    assert header == ["x", "y", "Q"]
    peak = max(rows, key=lambda r: r[2])
    assert peak[:2] == [0.0, 0.0]
    assert peak[2] == pytest.approx(1 / math.pi, rel=1e-15)
    svg_text = (out / "q.svg").read_text()
    assert svg_text.startswith('<?xml version="1.0"') and 'version="1.1"' in svg_text


def test_husimi_modes(tmp_path):
    code, out = run_cli(tmp_path, "husimi", "--grid", "24", name="deg")
    assert code == 0
    assert {p.name for p in out.iterdir()} >= {"q_n0.csv", "q_n5.svg", "q_n10.csv", "husimi.json"}
    code, out = run_cli(tmp_path, "husimi", "--mode", "relativistic", "--x", "0.5", "--mu", "0.6",
                        "--grid", "24", name="rel")
    assert code == 0
    doc = json.loads((out / "husimi.json").read_text())
    assert doc["panels"][0]["norm_estimate"] > 0.9
    code, out = run_cli(tmp_path, "husimi", "--mode", "ground", "--delta-list", "0.5", "--grid", "24",
                        name="gs")
    assert code == 0
    doc = json.loads((out / "husimi.json").read_text())
    p = ModelParams(delta=0.5)
    e0 = min(eigen.eigenvalues(build_sector_hamiltonian(p, s, 200), (0, 1))[0] for s in Sector)
    assert doc["panels"][0]["energy"] == pytest.approx(e0, abs=1e-10)


def test_husimi_small_window_rejected(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "husimi", "--mode", "vacuum", "--window", "2,3,2,3")
    assert code == 2
    assert "enlarge" in capsys.readouterr().err


def test_stats_outputs(tmp_path, capsys):
    code, out = run_cli(tmp_path, "stats", "--delta-list", "0,0.5,0.9999", "--dim", "3000")
    assert code == 0
    assert "0.9999" in capsys.readouterr().err
    doc = json.loads((out / "interweave_report.json").read_text())
    runs = {r["delta"]: r for r in doc["runs"]}
    assert runs[0.9999]["status"] == "unconverged" and runs[0.9999]["required_dim"] > 3000
    assert runs[0.0]["s1_median"] == pytest.approx(2.0, abs=1e-8)
    assert runs[0.5]["pole_spacing"] == 1.0
    _, rows = read_csv(out / "spacing_k1.csv")
    assert {r[0] for r in rows} == {0.0, 0.5}
    code, out = run_cli(tmp_path, "stats", "--delta-list", "0.9999", "--dim", "3000",
                        "--allow-unconverged", name="forced")
    assert code == 0
    doc = json.loads((out / "interweave_report.json").read_text())
    assert doc["runs"][0]["certified"] is False


def test_stats_none_converged(tmp_path):
    assert run_cli(tmp_path, "stats", "--delta-list", "0.9999", "--dim", "500")[0] == 2


def test_outputs_deterministic_and_carry_config(tmp_path):
    argsets = [
        ("spectrum", "--delta-list", "0,0.3", "--levels", "4"),
        ("gfunction", "--delta", "0.5", "--k-max", "3"),
        ("husimi", "--mode", "relativistic", "--x", "0.3", "--grid", "16"),
        ("stats", "--delta-list", "0.5", "--dim", "1000"),
    ]
    for i, args in enumerate(argsets):
        c1, a = run_cli(tmp_path, *args, name=f"r{i}")
        first = {p.name: p.read_bytes() for p in a.iterdir()}
        c2, _ = run_cli(tmp_path, *args, name=f"r{i}")
        assert c1 == c2 == 0
        second = {p.name: p.read_bytes() for p in a.iterdir()}
        assert first == second
        saved = RunConfig.load(a / "run.cfg")
        for name in first:
            if name != "run.cfg":
                assert embedded_config(a / name) == saved, name


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["spectrum", "--delta", "0", "--out", str(blocker / "sub")]) == 2
    assert "cannot" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "qrabi", "husimi", "--mode", "vacuum", "--grid", "9",
                          "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "m" / "q.csv").exists()
