"""End-to-end CLI pipelines: solve, sweep, verify, exit codes, determinism."""
import math
from pathlib import Path

import numpy as np
import pytest

from triality import dual_residual
from triality.cli import main
from triality.config import parse_config
from triality.errors import ConfigError
from triality.fields import read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(args):
    return main([str(a) for a in args])


def read_roots_csv(path):
    """roots.csv rows as (floats..., label string)."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(tuple(float(v) for v in parts[:-1]) + (parts[-1],))
    return header, rows


def test_solve_fold_instance(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["solve", CONFIGS / "doublewell_1d.cfg", "--out", out]) == 0
    text = capsys.readouterr().out
    assert "global_min" in text and "degenerate" in text
    header, roots = read_roots_csv(out / "roots.csv")
    assert header == ["x", "y", "tau_sq", "k", "zeta", "residual", "label"]
    assert {r[-1] for r in roots} == {"global_min", "degenerate"}
    # report lists 1/3 and -2/3 with branch-1 energy -5/6 * length
    lines = (out / "energy_report.csv").read_text().splitlines()
    assert lines[0] == "tau_sq,zeta,label,primal,dual,gap"
    b1, b2 = (line.split(",") for line in lines[1:3])
    assert float(b1[1]) == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert float(b1[3]) == pytest.approx(-5.0 / 6.0, abs=1e-10)
    assert b1[2] == "global_min"
    assert float(b2[1]) == pytest.approx(-2.0 / 3.0, abs=1e-10)
    assert (out / "fields_u_1.csv").exists() and (out / "fields_u_2.csv").exists()


def test_solve_supercritical_rect_single_branch(tmp_path):
    out = tmp_path / "o"
    assert run(["solve", CONFIGS / "log_rect_const.cfg", "--out", out]) == 0
    files = sorted(p.name for p in out.glob("fields_u_*.csv"))
    assert files == ["fields_u_1.csv"]  # exactly one branch emitted
    report = (out / "report.txt").read_text()
    assert "duality-gap check: OK" in report


def test_solve_stream_partial_branches(tmp_path):
    out = tmp_path / "o"
    assert run(["solve", CONFIGS / "doublewell_rect_stream.cfg", "--out", out]) == 0
    report = (out / "report.txt").read_text()
    assert "partial branches" in report
    assert "reconstruction skipped" in report  # zeta varies: field not integrable


def test_roots_csv_round_trip_revalidates(tmp_path):
    out = tmp_path / "o"
    assert run(["solve", CONFIGS / "log_1d_sub.cfg", "--out", out]) == 0
    spec = parse_config(CONFIGS / "log_1d_sub.cfg")
    _, rows = read_roots_csv(out / "roots.csv")
    assert len(rows) == 5 * 3
    for x, y, tau_sq, k, zeta, resid, _label in rows:
        d = dual_residual(spec.energy, spec.measure, zeta, tau_sq)
        assert abs(d) <= 1e-10 * max(1.0, tau_sq)


def test_solve_byte_identical_reruns(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["solve", CONFIGS / "doublewell_rect_stream.cfg", "--out", out1, "--serial"]) == 0
    assert run(["solve", CONFIGS / "doublewell_rect_stream.cfg", "--out", out2]) == 0
    for name in ("roots.csv", "energy_report.csv", "report.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    out3 = tmp_path / "c"
    assert run(["solve", CONFIGS / "log_1d_sub.cfg", "--out", out3]) == 0
    assert run(["solve", CONFIGS / "log_1d_sub.cfg", "--out", out3]) == 0
    ref = tmp_path / "d"
    assert run(["solve", CONFIGS / "log_1d_sub.cfg", "--out", ref]) == 0
    assert (out3 / "fields_u_1.csv").read_bytes() == (ref / "fields_u_1.csv").read_bytes()


def test_sweep_transition_and_rows(tmp_path):
    out = tmp_path / "s"
    eta = 4.0 * math.exp(-2.0)
    assert run(["sweep", CONFIGS / "log_1d_sub.cfg", "--tau-min", 0, "--tau-max",
                2 * eta, "--steps", 101, "--out", out]) == 0
    header, rows = read_csv(out / "sweep.csv")
    assert header[:5] == ["tau", "root_count", "zeta1", "zeta2", "zeta3"]
    assert rows.shape[0] == 101
    taus, counts = rows[:, 0], rows[:, 1]
    step = (taus[1] - taus[0]) * (1.0 + 1e-12)
    three = taus[counts == 3]
    one = taus[(counts == 1) & (taus > 0)]
    assert abs(three.max() - eta) <= step
    assert abs(one.min() - eta) <= step
    header, hh = read_csv(out / "hcurve.csv")
    assert header == ["zeta", "h_derived", "h_paper45"]
    # both convention curves peak at zeta_c = -2 with eta and eta/2
    zc_rows = hh[np.abs(hh[:, 0] + 2.0) < 5e-3]
    assert abs(zc_rows[:, 1].max() - eta) < 1e-3
    assert abs(zc_rows[:, 2].max() - eta / 2.0) < 1e-3
    # figure curves: W double well with wells at |gamma| = exp(-1), depth -exp(-2)
    header, wc = read_csv(out / "wcurve.csv")
    assert header == ["gamma", "W", "dW"]
    assert wc[:, 1].min() == pytest.approx(-math.exp(-2.0), abs=1e-5)
    header, gc = read_csv(out / "gcurve.csv")
    assert header == ["gamma", "G_tau_lo", "G_tau_fold", "G_tau_hi"]
    i = np.argmin(np.abs(gc[:, 0] - 1.0))
    assert gc[i, 3] == pytest.approx(wc[i, 1] - gc[i, 0] * 2 * eta, abs=1e-12)
    header, gd = read_csv(out / "gdcurve.csv")
    assert header == ["zeta", "Gd_tau_lo", "Gd_tau_fold", "Gd_tau_hi"]
    assert not np.any(gd[:, 0] == 0.0)


def test_generic_measure_override_end_to_end(tmp_path):
    # log model with a shifted measure has no closed-form dual geometry:
    # the scan fallback must still carry solve and verify to exit 0
    cfg = tmp_path / "g.cfg"
    cfg.write_text(
        "model = log_neohookean\nmeasure_b = -0.5\ngeometry = interval\n"
        "length = 1\nn = 5\nfixed_edges = left\nloading = constant_tau\n"
        "tau_x = 0.6\noracle_starts = 20\noracle_seed = 7\n")
    out = tmp_path / "o"
    assert run(["solve", cfg, "--out", out]) == 0
    report = (out / "report.txt").read_text()
    assert "duality-gap check: OK" in report
    assert run(["verify", cfg]) == 0


def test_interval_fixed_right_end(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text(
        "model = double_well\ngeometry = interval\nlength = 1\nn = 9\n"
        "fixed_edges = right\nloading = constant_tau\ntau_x = 1.0\n"
        "oracle_starts = 10\noracle_seed = 5\n")
    out = tmp_path / "o"
    assert run(["solve", cfg, "--out", out]) == 0
    _, rows = read_csv(out / "fields_u_1.csv")
    u = rows[:, 2]
    assert u[-1] == 0.0          # anchored at the fixed right end
    assert abs(u[0]) > 0.1       # linear ramp toward the traction end
    assert run(["verify", cfg]) == 0


def test_sweep_two_rows(tmp_path):
    out = tmp_path / "s"
    assert run(["sweep", CONFIGS / "doublewell_1d.cfg", "--tau-min", 0.1,
                "--tau-max", 0.9, "--steps", 2, "--out", out]) == 0
    _, rows = read_csv(out / "sweep.csv")
    assert rows.shape[0] == 2


def test_verify_shipped_configs_pass(capsys):
    for name in ("doublewell_1d.cfg", "log_1d_super.cfg"):
        assert run(["verify", CONFIGS / name]) == 0
    # the stream instance exercises the SKIP paths: oracle (non-constant
    # load) and reconstruction (field not integrable)
    assert run(["verify", CONFIGS / "doublewell_rect_stream.cfg"]) == 0
    out = capsys.readouterr().out
    assert "SKIP oracle" in out and "SKIP curl/path" in out


def test_verify_paper_eq45_fails_duality_gap(capsys):
    code = run(["verify", CONFIGS / "log_1d_sub.cfg", "--residual-convention", "paper-eq45"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL duality-gap" in out


def test_missing_fixed_edge_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(
        "model = double_well\ngeometry = rectangle\nnx = 5\nny = 5\n"
        "fixed_edges =\nloading = constant_tau\ntau_x = 1.0\n")
    assert run(["solve", cfg, "--out", tmp_path / "o"]) == 2
    err = capsys.readouterr().err
    assert "mixed boundary conditions" in err


def test_unknown_key_and_corrupt_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model = double_well\nwibble = 3\n")
    assert run(["verify", cfg]) == 2
    assert "wibble" in capsys.readouterr().err
    cfg.write_text("model double_well\n")
    assert run(["verify", cfg]) == 2
    assert run(["solve", tmp_path / "missing.cfg"]) == 2


def test_config_validation_details(tmp_path):
    base = ("model = log_neohookean\ngeometry = interval\nlength = 1\nn = 5\n"
            "loading = constant_tau\ntau_x = 1.0\n")
    cfg = tmp_path / "c.cfg"
    cfg.write_text(base + "c2 = -1\n")
    with pytest.raises(ConfigError, match="c2"):
        parse_config(cfg)
    cfg.write_text(base.replace("n = 5", "n = 1"))
    with pytest.raises(ConfigError, match="'n'"):
        parse_config(cfg)
    cfg.write_text(base + "fixed_edges = left,right\n")
    with pytest.raises(ConfigError, match="fixed"):
        parse_config(cfg)
    cfg.write_text(base.replace("tau_x = 1.0", "tau_x = 1.0\ntau_y = 1.0"))
    with pytest.raises(ConfigError, match="tau_y"):
        parse_config(cfg)


def test_cdt_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CDT_SEED", "777")
    from triality.cli import _load_spec
    import argparse
    args = argparse.Namespace(config=str(CONFIGS / "doublewell_1d.cfg"), tol=None)
    assert _load_spec(args).oracle.seed == 777
    monkeypatch.setenv("CDT_SEED", "not-a-number")
    assert run(["verify", CONFIGS / "doublewell_1d.cfg"]) == 2
