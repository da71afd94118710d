import json
import subprocess
import sys
from pathlib import Path

import pytest

from flightlab.cli import (EXIT_CONFIG, EXIT_DATA, EXIT_FAIL, EXIT_OK, CampaignConfig,
                           OutputDir, loglog_svg, main, read_flights_csv)
from flightlab.errors import ConfigError, UsageError


def _files(root: Path) -> set:
    return {p.relative_to(root) for p in root.rglob("*") if p.is_file()}


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _koch_campaign(work, name="c.json", **over):
    assert main(["generate", "koch", "--iterations", "4", "--out", "geo", "--name", "k.json"]) == 0
    cfg = {"boundary": "geo/k.json", "seed": 5, "output_dir": "run",
           "engine": {"engine": "wos", "n_flights": 3000},
           "start": {"mode": "whitney-uniform", "eps": 2.0 ** -7}}
    cfg.update(over)
    (work / name).write_text(json.dumps(cfg))
    return work / name


def test_unknown_subcommand_exits_2_with_usage(capsys):
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert "usage" in capsys.readouterr().err
    assert main([]) == EXIT_CONFIG


def test_module_entry_point_exit_code(work):
    p = subprocess.run([sys.executable, "-m", "flightlab", "frobnicate"], capture_output=True,
                       text=True)
    assert p.returncode == 2 and "usage" in p.stderr


def test_verify_line2d(work, capsys):
    assert main(["verify", "--preset", "line2d", "--flights", "1e6", "--seed", "7",
                 "--out", "v"]) == EXIT_OK
    assert "ALL PASS" in capsys.readouterr().out
    obj = json.loads((work / "v" / "line2d_verdicts.json").read_text())
    assert obj["seed"] == 7 and all(v["passed"] for v in obj["verdicts"])


def test_flights_twice_byte_identical(work):
    c = _koch_campaign(work)
    assert main(["flights", "--config", str(c), "--name", "a.csv"]) == EXIT_OK
    assert main(["flights", "--config", str(c), "--name", "b.csv", "--workers", "4"]) == EXIT_OK
    a = (work / "run" / "a.csv").read_bytes()
    b = (work / "run" / "b.csv").read_bytes()
    assert a == b
    header, recs = read_flights_csv(work / "run" / "a.csv")
    assert header["seed"] == 5 and header["config"]["engine"]["n_flights"] == 3000
    assert len(recs) == 3000
    first = a.split(b"\n")[1].decode()
    assert first == "flight_id,worker,n,r,start_side,end_side,censored"


def test_flag_overrides_config(work):
    c = _koch_campaign(work)
    assert main(["flights", "--config", str(c), "--flights", "100", "--seed", "9"]) == EXIT_OK
    header, recs = read_flights_csv(work / "run" / "flights.csv")
    assert len(recs) == 100 and header["seed"] == 9


def test_pipeline_fit_and_report(work):
    c = _koch_campaign(work)
    assert main(["flights", "--config", str(c), "--flights", "20000",
                 "--eps", str(2.0 ** -9)]) == EXIT_OK
    rc = main(["fit", "--flights", "run/flights.csv", "--out", "run", "--d", "1.2619",
               "--tol", "0.5", "--svg"])
    assert rc in (EXIT_OK, EXIT_FAIL)
    fit = json.loads((work / "run" / "fit.json").read_text())
    assert fit["seed"] == 5 and "survival" in fit["fits"]
    csv = (work / "run" / "hist_survival.csv").read_text().splitlines()
    assert csv[0].startswith("# ") and csv[1] == "bin_lo,bin_hi,count,density,ccdf"
    assert (work / "run" / "survival.svg").read_text().startswith("<svg")
    assert main(["report", "run/fit.json", "--out", "run"]) == rc


def test_generate_dimension_whitney_outputs(work):
    assert main(["generate", "saw", "--steps", "300", "--attempts", "3000", "--seed", "1",
                 "--out", "o"]) == EXIT_OK
    assert main(["dimension", "--boundary", "o/boundary.json", "--j-max", "9", "--out", "o"]) == 0
    est = json.loads((work / "o" / "dimension.json").read_text())
    assert 1.0 < est["estimate"]["d"] < 2.0
    assert main(["whitney", "--boundary", "o/boundary.json", "--max-depth", "8",
                 "--dump-cubes", "--out", "o"]) == EXIT_OK
    rows = (work / "o" / "whitney.csv").read_text().splitlines()
    assert rows[0].startswith("# ") and rows[1] == "level,t,count"
    assert json.loads((work / "o" / "whitney_cubes.json").read_text())["config"]["params"]


def test_nothing_written_outside_output_dir(work):
    c = _koch_campaign(work)
    before = _files(work)
    main(["flights", "--config", str(c), "--flights", "2000"])
    main(["fit", "--flights", "run/flights.csv", "--out", "run"])
    main(["verify", "--preset", "line2d", "--flights", "20000", "--out", "run/v"])
    main(["whitney", "--boundary", "geo/k.json", "--max-depth", "6", "--out", "run/w"])
    new = _files(work) - before
    assert new and all(p.parts[0] == "run" for p in new)


def test_output_names_cannot_escape(work):
    out = OutputDir(work / "o")
    with pytest.raises(UsageError):
        out.path("../x.csv")
    c = _koch_campaign(work)
    assert main(["flights", "--config", str(c), "--flights", "10",
                 "--name", "../../evil.csv"]) == EXIT_CONFIG
    assert not (work.parent / "evil.csv").exists()


def test_missing_seed_exits_2(work):
    c = _koch_campaign(work, seed=None)
    assert main(["flights", "--config", str(c)]) == EXIT_CONFIG
    with pytest.raises(ConfigError):
        CampaignConfig.from_dict({"boundary": {"generator": "line", "d_e": 2}, "seed": None,
                                  "start": {"mode": "height", "eps": 1.0}})


def test_missing_files_exit_2(work):
    assert main(["flights", "--config", "nope.json"]) == EXIT_CONFIG
    c = _koch_campaign(work, boundary="geo/missing.json")
    assert main(["flights", "--config", str(c)]) == EXIT_CONFIG


def test_insufficient_data_exits_3(work):
    c = _koch_campaign(work)
    assert main(["flights", "--config", str(c), "--flights", "50"]) == EXIT_OK
    assert main(["fit", "--flights", "run/flights.csv", "--out", "run", "--d", "1.26"]) == EXIT_DATA


def test_report_without_verdicts_exits_3(work):
    (work / "empty.json").write_text("{}")
    assert main(["report", "empty.json", "--out", "r"]) == EXIT_DATA


def test_loglog_svg_is_standalone():
    svg = loglog_svg([1, 10, 100], [1, 0.1, 0.01], slope=-1.0, intercept=0.0, title="t")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "<line" in svg or "<path" in svg
