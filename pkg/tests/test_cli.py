import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from mclt import analysis
from mclt.cli import main
from mclt.distributions import SolitonParams, robust_soliton


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_dist_csv_matches_library(tmp_path):
    out = tmp_path / "pmf.csv"
    assert main(["dist", "--kind", "robust", "--k", "30", "--c", "0.1",
                 "--delta", "0.1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 30
    dist = robust_soliton(SolitonParams(30, 0.1, 0.1))
    for row in rows:
        d = int(row["degree"])
        assert float(row["pmf"]) == pytest.approx(dist.pmf[d - 1], rel=1e-9)
        assert float(row["cdf"]) == pytest.approx(dist.cdf[d - 1], rel=1e-9)


def test_dist_plot(tmp_path):
    out = tmp_path / "pmf.csv"
    png = tmp_path / "pmf.png"
    main(["dist", "--kind", "starter", "--k", "30", "--out", str(out),
          "--plot", str(png)])
    assert png.stat().st_size > 0


def test_encode_decode_roundtrip(tmp_path, np_rng):
    data = np_rng.integers(0, 256, size=4321, dtype=np.uint8).tobytes()
    src = tmp_path / "src.bin"
    src.write_bytes(data)
    pkts = tmp_path / "pkts"
    assert main(["encode", "--in", str(src), "--k", "64", "--dist", "robust",
                 "--c", "0.2", "--delta", "0.5", "--packets", "120",
                 "--seed", "9", "--out", str(pkts)]) == 0
    assert len(list(pkts.glob("*.mclt"))) == 120
    out = tmp_path / "back.bin"
    assert main(["decode", "--in", str(pkts), "--out", str(out), "--dist",
                 "robust", "--c", "0.2", "--delta", "0.5"]) == 0
    assert out.read_bytes() == data  # manifest length trims the padding


def test_decode_reports_failure(tmp_path):
    src = tmp_path / "src.bin"
    src.write_bytes(bytes(1000))
    pkts = tmp_path / "pkts"
    main(["encode", "--in", str(src), "--k", "50", "--dist", "robust",
          "--c", "0.2", "--delta", "0.5", "--packets", "10", "--seed", "1",
          "--out", str(pkts)])
    rc = main(["decode", "--in", str(pkts), "--out", str(tmp_path / "x.bin"),
               "--dist", "robust", "--c", "0.2", "--delta", "0.5"])
    assert rc == 1


def test_analyze_release_csv(tmp_path):
    out = tmp_path / "release.csv"
    assert main(["analyze", "release", "--k", "20", "--dist", "ideal",
                 "--degrees", "1,2,5", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert {r["degree"] for r in rows} == {"1", "2", "5"}
    assert len(rows) == 3 * 20
    for row in rows:
        expect = analysis.release_probability(int(row["degree"]), int(row["L"]), 20)
        assert float(row["q"]) == pytest.approx(expect, rel=1e-9, abs=1e-12)


def test_analyze_domination_stdout(capsys):
    assert main(["analyze", "domination", "--k", "10"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "degree,u_threshold"
    assert out[1] == "1,5"  # (k+1)/2 = 5.5 -> u <= 5


def test_analyze_utility_stdout(capsys):
    assert main(["analyze", "utility", "--k", "4", "--d", "2", "--u", "2"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    values = {int(r.split(",")[0]): float(r.split(",")[1]) for r in rows}
    assert values[1] == pytest.approx(2 / 3, abs=1e-9)


def test_analyze_identity_passes(capsys):
    assert main(["analyze", "identity", "--k", "30", "--c", "0.1",
                 "--delta", "0.1"]) == 0


def test_session_run_report_fields(tmp_path):
    out = tmp_path / "report.json"
    assert main(["session", "run", "--k", "100", "--scheme", "starter+closer",
                 "--c", "0.1", "--delta", "0.1", "--erasure", "0.25",
                 "--seed", "5", "--report", "json", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert set(report) >= {"received", "per_config", "final_unsolved", "success"}
    assert report["success"] is True


def test_optimize_json_fields(tmp_path):
    out = tmp_path / "opt.json"
    assert main(["optimize", "--k", "2", "--configs", "2", "--restarts", "8",
                 "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert set(payload) >= {"P", "Q", "value", "restarts", "best_restart"}
    assert payload["value"] == pytest.approx(1.0, abs=1e-6)


def test_sim_run_outputs(tmp_path, capsys):
    out = tmp_path / "results"
    assert main(["sim", "run", "--scheme", "robust", "--k", "100",
                 "--trials", "80", "--seed", "3", "--grid", "0:0.5:0.1",
                 "--out", str(out)]) == 0
    for name in ("summary.json", "success_rate.csv", "error_rate.csv",
                 "meta.json", "success_rate.png", "error_rate.png"):
        assert (out / name).exists(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trials"] == 80
    printed = json.loads(capsys.readouterr().out)
    assert printed["mean_overhead"] == summary["mean_overhead"]


def test_sim_config_file_flags_override(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("scheme = starter\nk = 100\ntrials = 50\nseed = 2\n"
                   "grid = 0:0.4:0.2\n# comment line\n")
    out = tmp_path / "res"
    assert main(["sim", "run", "--config", str(cfg), "--trials", "25",
                 "--out", str(out), "--no-figures"]) == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["spec"]["trials"] == 25  # flag wins
    assert meta["spec"]["scheme"] == "starter"  # from file
    assert meta["spec"]["k"] == 100


def test_sim_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    with pytest.raises(SystemExit):
        main(["sim", "run", "--config", str(cfg), "--out", str(tmp_path / "r")])


def test_sim_compare_outputs(tmp_path, capsys):
    out = tmp_path / "cmp"
    assert main(["sim", "compare", "--schemes", "starter,starter+closer",
                 "--k", "100", "--trials", "120", "--seed", "6",
                 "--grid", "0:0.5:0.25", "--out", str(out)]) == 0
    report = json.loads((out / "comparison.json").read_text())
    assert report["ordering"][0] == "starter+closer"
    assert (out / "comparison_success_rate.png").exists()
    assert (out / "comparison_error_rate.png").exists()
    assert (out / "starter" / "summary.json").exists()
    assert (out / "starter_closer" / "summary.json").exists()


def test_console_script_entrypoint():
    proc = subprocess.run([sys.executable, "-m", "mclt.cli", "dist", "--kind",
                           "ideal", "--k", "5", "--out", "/dev/null"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run(["mclt", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sim" in proc.stdout
