import csv
import json

import pytest

from fcpm.cli import EXIT_CONFIG, EXIT_OK, main
from fcpm.experiments import (
    SUMMARY_COLUMNS,
    ConfigError,
    averages_from_records,
    build_config,
    compare,
    load_config,
    load_report,
)


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    cfg = write_cfg(out, "scenario = single_frac_richardson\nvariant = gmres_direct\n"
                         "grid = 4x4\nn_steps = 1\n")
    code = main(["run", str(cfg), "--out", str(out / "a")])
    return out, code


def test_config_parsing(tmp_path):
    p = write_cfg(tmp_path, "scenario = refinement  # ladder\ngrid = 8x8, 16\nF = 0.1; 0.5\n")
    cfg = load_config(p)
    assert cfg.grids == ((8, 8), (16, 16))
    assert cfg.F == (0.1, 0.5)
    assert cfg.variant == "gmres_amg"
    cfg = load_config(p, variant="gmres_direct", grid="4x4")
    assert cfg.variant == "gmres_direct" and cfg.grids == ((4, 4),)


@pytest.mark.parametrize("text", [
    "scenario = nope\n",
    "scenario = refinement\nvariant = cg\n",
    "scenario = refinement\ngrid = 8x7\n",
    "scenario = refinement\ncolour = blue\n",
    "scenario = refinement\nF = a,b\n",
    "variant = gmres_direct\n",
    "scenario = refinement\nrestart = 900\n",
])
def test_bad_configs_exit_2(tmp_path, text, capsys):
    p = write_cfg(tmp_path, text)
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_unknown_scenario_flag(tmp_path):
    assert main(["run", "--scenario", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.cfg")]) == EXIT_CONFIG


def test_sweep_writes_3x6_summary(sweep_dir):
    out, code = sweep_dir
    assert code == EXIT_OK
    with open(out / "a" / "summary.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SUMMARY_COLUMNS
    body = rows[1:]
    assert len(body) == 18
    assert len({r[2] for r in body}) == 3 and len({r[3] for r in body}) == 6


def test_report_averages_recomputable(sweep_dir):
    out, _ = sweep_dir
    report = load_report(out / "a")
    with open(out / "a" / "summary.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for rec, row in zip(report["points"], rows):
        lin, newton = averages_from_records(rec)
        assert lin == pytest.approx(float(row["avg_linear_iters"]), abs=1e-4)
        assert newton == pytest.approx(float(row["avg_newton_iters"]), abs=1e-4)
    assert (out / "a" / "timing.json").exists()


def test_report_deterministic(sweep_dir, tmp_path):
    out, _ = sweep_dir
    cfg = write_cfg(tmp_path, "scenario = single_frac_richardson\nvariant = gmres_direct\n"
                              "grid = 4x4\nn_steps = 1\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "b")]) == EXIT_OK
    a = (out / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    assert a == b


def test_compare_identical_reports_all_zero(sweep_dir, capsys):
    out, _ = sweep_dir
    assert main(["compare", str(out / "a"), str(out / "a" / "report.json")]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()[2:]
    assert len(lines) == 36
    assert all(float(line.split()[-1]) == 0.0 for line in lines)


def test_compare_missing_file(tmp_path, sweep_dir):
    out, _ = sweep_dir
    assert main(["compare", str(out / "a"), str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_compare_rejects_foreign_json(tmp_path, sweep_dir):
    out, _ = sweep_dir
    bad = tmp_path / "other.json"
    bad.write_text(json.dumps({"hello": 1}))
    assert main(["compare", str(out / "a"), str(bad)]) == EXIT_CONFIG
    with pytest.raises(ConfigError):
        load_report(bad)


def test_compare_no_common_points(sweep_dir):
    out, _ = sweep_dir
    a = load_report(out / "a")
    b = json.loads(json.dumps(a))
    for rec in b["points"]:
        rec["grid"] = "99x99"
    with pytest.raises(ConfigError):
        compare(a, b)


def test_direct_vs_amg_compare(tmp_path, capsys):
    cfgs = {}
    for v in ("gmres_direct", "gmres_amg"):
        p = write_cfg(tmp_path, f"scenario = single_frac_gmres\nvariant = {v}\ngrid = 8x8\n"
                                "n_steps = 1\n", f"{v}.cfg")
        assert main(["run", str(p), "--out", str(tmp_path / v)]) == EXIT_OK
        cfgs[v] = load_report(tmp_path / v)
    line = [l for l in compare(cfgs["gmres_direct"], cfgs["gmres_amg"]).splitlines()
            if "avg_linear_iters" in l][0]
    a, b = float(line.split()[-3]), float(line.split()[-2])
    assert b > a


def test_failed_point_exit_code(tmp_path):
    p = write_cfg(tmp_path, "scenario = single_frac_gmres\ngrid = 8x8\nn_steps = 1\n"
                            "max_newton = 1\n")
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 1
    report = load_report(tmp_path / "o")
    assert report["failed_points"] == 1
    assert report["points"][0]["avg_linear_iters"] is None


def test_export_system(tmp_path):
    from fcpm.block_system import read_system
    stem = tmp_path / "sys"
    assert main(["export-system", "--scenario", "single_frac_gmres", "--grid", "8x8",
                 "--steps", "1", "--out", str(stem)]) == EXIT_OK
    J, rhs = read_system(stem)
    assert J.layout.size == rhs.size
    assert main(["export-system", "--scenario", "biot_column", "--steps", "-1"]) == EXIT_CONFIG


def test_build_config_defaults():
    cfg = build_config({"scenario": "single_frac_richardson"})
    assert len(cfg.points()) == 18
    assert cfg.variant == "richardson_phat"


def test_usage_error_exit_code():
    assert main(["frobnicate"]) == 2
