import csv
import json
import math
import subprocess
import sys

import pytest

from circlelab.cli import COMMANDS, OUTDIR_ENV, main


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--outdir", str(out)])
    doc = json.loads((out / "results.json").read_text()) if (out / "results.json").exists() else None
    return code, doc, out


def test_all_commands_registered():
    assert set(COMMANDS) == {"gamma-max", "group", "perturbation", "plancherel", "symmetrize", "decompose",
                             "cap-interaction", "smallcap", "search", "compare"}


def test_gamma_max(tmp_path):
    code, doc, out = run(tmp_path, "gamma-max")
    assert code == 0 and doc["passed"]
    assert abs(doc["results"]["max"] - 2.5) < 1e-9
    assert all(abs(a - math.pi / 4) < 1e-6 for a in doc["results"]["argmax"])
    rows = list(csv.reader(open(out / "argmax.csv")))
    assert rows[0] == ["index", "angle"] and len(rows) == 7


def test_group(tmp_path):
    code, doc, _ = run(tmp_path, "group")
    assert code == 0
    assert doc["results"] == {"order": 1440, "image_order": 720, "kernel_order": 2, "distinct_terms": 20}


def test_perturbation_reports_targets(tmp_path):
    code, doc, _ = run(tmp_path, "perturbation")
    res = doc["results"]
    assert res["targets"] == {"w_ratio": 0.875, "g_ratio": 0.1875, "psi_prime": 0.6875}
    assert abs(res["w_ratio"] - 0.875) < 1e-3
    assert abs(res["g_ratio"] - 0.1875) < 1e-6
    assert abs(res["psi_prime"] - 0.6875) < 2e-3
    assert code == 0


def test_smallcap(tmp_path):
    code, doc, out = run(tmp_path, "smallcap")
    assert code == 0
    gaps = [row[1] for row in doc["results"]["rows"]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert (out / "smallcap.csv").exists()


def test_search_reports_constant_comparison(tmp_path):
    code, doc, out = run(tmp_path, "search", "--grid-half", "30")
    assert code == 0
    res = doc["results"]
    assert "starts_beating_constant" in res and res["symmetry_residual"] < 1e-4
    assert (out / "extremizer.csv").exists() and (out / "history.csv").exists()


def test_compare_verdict_stable_under_refinement(tmp_path):
    a, doc_a, _ = run(tmp_path, "compare", name="a")
    b, doc_b, _ = run(tmp_path, "compare", "--grid-scale", "2", name="b")
    assert a == b == 0
    assert doc_a["passed"] == doc_b["passed"]
    assert doc_b["config"]["grid_scale"] == 2


def test_bit_for_bit_repeat(tmp_path):
    _, a, _ = run(tmp_path, "symmetrize", "--trials", "3", name="a")
    _, b, _ = run(tmp_path, "symmetrize", "--trials", "3", name="b")
    a.pop("seconds"), b.pop("seconds")
    a["config"].pop("outdir"), b["config"].pop("outdir")
    assert a == b


def test_config_file_with_dotted_keys(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\ngrid.x = 30\nsearch.max_iter = 300\nsearch.starts = 2\n")
    code, doc, _ = run(tmp_path, "search", "--config", str(cfg))
    assert code == 0
    assert doc["config"]["grid_half"] == 30.0 and doc["config"]["max_iter"] == 300
    assert len(doc["results"]["runs"]) == 2


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("trials = 5\n")
    code, doc, _ = run(tmp_path, "symmetrize", "--config", str(cfg), "--trials", "2")
    assert doc["config"]["trials"] == 2


def test_env_overrides_outdir(tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv(OUTDIR_ENV, str(target))
    assert main(["group", "--outdir", str(tmp_path / "ignored")]) == 0
    assert (target / "results.json").exists()
    assert not (tmp_path / "ignored").exists()


@pytest.mark.parametrize(
    "args, flag",
    [
        (["search", "--grid-half", "-1"], "--grid-half"),
        (["cap-interaction", "--radius", "0.3"], "--radius"),
        (["search", "--n", "7"], "--n"),
        (["search", "--starts", "0"], "--starts"),
    ],
)
def test_usage_errors_name_the_flag(tmp_path, capsys, args, flag):
    assert main([*args, "--outdir", str(tmp_path)]) == 2
    assert flag in capsys.readouterr().err


def test_unknown_flag(tmp_path, capsys):
    assert main(["group", "--bogus", "1"]) == 2
    assert "--bogus" in capsys.readouterr().err


def test_missing_command(capsys):
    assert main([]) == 2


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["group", "--config", str(cfg), "--outdir", str(tmp_path)]) == 2
    assert "--config" in capsys.readouterr().err


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("just words\n")
    assert main(["group", "--config", str(cfg)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert main(["group", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "circlelab", "group", "--outdir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "PASS" in proc.stdout


def test_decompose_from_csv(tmp_path):
    from circlelab import Cap

    src = tmp_path / "f.csv"
    Cap(2.0, 0.125).indicator(1024).to_csv(src)
    code, doc, out = run(tmp_path, "decompose", "--input", str(src))
    assert code == 0
    assert doc["results"]["steps"] == 1 and doc["results"]["parseval_gap"] < 1e-8
    trace = json.loads((out / "trace.json").read_text())
    assert len(trace["steps"]) == 1
