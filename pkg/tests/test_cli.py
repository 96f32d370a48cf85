import json

import numpy as np
import pytest

from flushlab import scenarios
from flushlab.cli import main
from flushlab.scenarios import MARKER, ConfigError, parse_config, run_scenario

LP = """[scenario]
name = lp-small
kind = lp-suite
seed = 0

[analysis]
samples = 10
"""


@pytest.fixture
def lp_config(tmp_path):
    p = tmp_path / "lp.ini"
    p.write_text(LP)
    return p


def _body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_config_errors_reported_together(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nkind = nonsense\n\n[solver]\nepsilon = 2\nbogus = 1\n[extra]\n")
    assert main(["--out", str(tmp_path), "run", str(p)]) == 2
    err = capsys.readouterr().err
    for needle in ("name", "kind", "epsilon", "bogus", "extra"):
        assert needle in err


def test_parse_config_collects_every_problem():
    with pytest.raises(ConfigError) as exc:
        parse_config("[scenario]\nkind = nonsense\n[solver]\nepsilon = 2\nbogus = 1\n")
    assert len(exc.value.problems) >= 4


def test_empty_and_missing_config(tmp_path):
    p = tmp_path / "empty.ini"
    p.write_text("")
    assert main(["--out", str(tmp_path), "run", str(p)]) == 2
    assert main(["--out", str(tmp_path), "run", str(tmp_path / "nope.ini")]) == 2


def test_usage_errors_exit_two():
    assert main([]) == 2
    assert main(["frobnicate"]) == 2


def test_run_writes_csv_png_summary(tmp_path, lp_config):
    assert main(["--out", str(tmp_path), "run", str(lp_config)]) == 0
    sc = scenarios.load_config(lp_config)
    out = sc.out_dir(tmp_path)
    assert (out / "inequalities.csv").exists()
    assert (out / "inequalities.png").stat().st_size > 0
    rec = json.loads((out / "summary.json").read_text())
    assert rec["passed"] and rec["hash"] == sc.digest
    assert not (out / MARKER).exists()
    head = (out / "inequalities.csv").read_text().splitlines()[0]
    assert head.startswith("# scenario=lp-small") and f"hash={sc.digest}" in head


def test_rerun_is_byte_identical(tmp_path, lp_config):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--out", str(a), "run", "--no-plots", str(lp_config)]) == 0
    assert main(["--out", str(b), "run", "--no-plots", str(lp_config)]) == 0
    sc = scenarios.load_config(lp_config)
    assert (sc.out_dir(a) / "inequalities.csv").read_bytes() == (sc.out_dir(b) / "inequalities.csv").read_bytes()


def test_output_root_from_environment(tmp_path, lp_config, monkeypatch):
    monkeypatch.setenv("FLUSHLAB_OUT", str(tmp_path / "env"))
    assert main(["run", "--no-plots", str(lp_config)]) == 0
    assert list((tmp_path / "env").rglob("inequalities.csv"))


def test_partial_run_marker_left_on_failure(tmp_path, lp_config, monkeypatch):
    def boom(sc, out):
        raise RuntimeError("solver exploded")

    monkeypatch.setitem(scenarios.RUNNERS, "lp-suite", boom)
    sc = scenarios.load_config(lp_config)
    with pytest.raises(RuntimeError):
        run_scenario(sc, tmp_path)
    marker = sc.out_dir(tmp_path) / MARKER
    assert marker.exists() and "solver exploded" in marker.read_text()


def test_fit_verb(tmp_path, capsys):
    p = tmp_path / "pts.csv"
    x = np.logspace(0, 2, 10)
    p.write_text("x,y\n" + "\n".join(f"{float(a)!r},{float(3 * a ** -1.5)!r}" for a in x) + "\n")
    assert main(["fit", str(p), "x", "y"]) == 0
    assert "exponent -1.5" in capsys.readouterr().out
    assert main(["fit", str(p), "x", "missing"]) == 2


def test_export_plots(tmp_path, lp_config, capsys):
    assert main(["--out", str(tmp_path), "run", "--no-plots", str(lp_config)]) == 0
    pngs = list(tmp_path.rglob("*.png"))
    assert not pngs
    assert main(["export-plots", str(tmp_path)]) == 0
    assert list(tmp_path.rglob("inequalities.png"))
    assert main(["export-plots", str(tmp_path / "nowhere")]) == 2


def test_suite_subset_writes_report(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "suite", "--only", "3"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]  3" in out
    rep = json.loads((tmp_path / "acceptance_report.json").read_text())
    assert rep["total"] == 1 and rep["passed"] == 1
