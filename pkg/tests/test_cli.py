import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from bromimo import __version__, cli
from bromimo.asymptotics import q_function
from bromimo.decoder import Decoder
from bromimo.errors import ConfigParseError, ConfigValidationError
from bromimo.montecarlo import SamplingPath

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def write_json(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


MINIMAL = {"n": 40, "beta": 1.5, "tau": 2.5, "tau_p": 1, "rho_db": 10, "alpha": 0.5, "r": 0.2, "seed": 42}


# ---------------------------------------------------------------------------
# config parsing


def test_minimal_config_gets_defaults():
    loaded = cli.parse_config(DATA / "minimal.json")
    exp = loaded.experiment
    assert exp.trials == 100
    assert exp.decoders == (Decoder.BRO,)
    assert exp.sampling_path is SamplingPath.DIRECT_STATISTICAL
    assert exp.system.m == 600
    assert exp.system.rho == pytest.approx(10.0)
    assert exp.system.seed == 42


def test_full_config_round_trip():
    exp = cli.parse_config(DATA / "small.json").experiment
    assert exp.decoders == (Decoder.BRO, Decoder.LS)
    assert exp.trials == 4
    assert exp.tol == 1e-8 and exp.max_iters == 20000


def test_validation_lists_every_violation(tmp_path):
    bad = dict(MINIMAL, beta=0.4, tau=2, tau_p=3, decoders=[], extra=1)
    with pytest.raises(ConfigValidationError) as err:
        cli.parse_config(write_json(tmp_path, bad))
    v = " | ".join(err.value.violations)
    assert "beta must exceed 1/2" in v
    assert "tau_d" in v
    assert "decoder set must not be empty" in v
    assert "extra: unknown key" in v


@pytest.mark.parametrize(
    "patch,needle",
    [
        ({"beta": 0.4}, "beta"),
        ({"tau_p": 3, "tau": 2}, "tau_d"),
        ({"decoders": []}, "empty"),
        ({"n": 2.5}, "integer"),
        ({"rho_db": "high"}, "number"),
        ({"corr_model": "gaussian"}, "corr_model"),
        ({"sampling_path": "pilot"}, "sampling_path"),
        ({"trials": 0}, "trials"),
        ({"tolerances": {"tol": -1}}, "tol"),
        ({"decoders": ["ML"]}, "unknown decoder"),
    ],
)
def test_single_violations(tmp_path, patch, needle):
    with pytest.raises(ConfigValidationError) as err:
        cli.parse_config(write_json(tmp_path, dict(MINIMAL, **patch)))
    assert needle in str(err.value)


def test_missing_keys_are_reported(tmp_path):
    cfg = dict(MINIMAL)
    del cfg["alpha"], cfg["r"]
    with pytest.raises(ConfigValidationError) as err:
        cli.parse_config(write_json(tmp_path, cfg))
    assert sum("required key missing" in v for v in err.value.violations) == 2


def test_parse_error_has_line_context(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "n": 40,\n  "beta": \n}')
    with pytest.raises(ConfigParseError, match=r"broken.json:4:1"):
        cli.parse_config(p)


def test_config_hash_ignores_key_order(tmp_path):
    a = write_json(tmp_path, MINIMAL, "a.json")
    b = tmp_path / "b.json"
    b.write_text(json.dumps(dict(reversed(list(MINIMAL.items()))), indent=4))
    assert cli.parse_config(a).config_hash == cli.parse_config(b).config_hash
    c = write_json(tmp_path, dict(MINIMAL, seed=43), "c.json")
    assert cli.parse_config(c).config_hash != cli.parse_config(a).config_hash


# ---------------------------------------------------------------------------
# subcommands


def test_predict_matches_golden_file(capsys):
    code, out, _ = run(["predict", "--config", str(DATA / "small.json")], capsys)
    assert code == 0
    assert out == (DATA / "predict_small.golden.csv").read_text()


def test_predict_row_is_self_consistent(capsys):
    _, out, _ = run(["predict", "--config", str(DATA / "small.json")], capsys)
    (row,) = rows_of(out)
    assert list(row) == list(cli.PREDICT_COLUMNS)
    mu = float(row["mu_star"])
    assert float(row["ber_theory"]) == pytest.approx(q_function(mu / 2), rel=1e-10)
    assert row["m"] == "60"


def test_perfect_csi_predicts_lower_mse(capsys):
    args = ["predict", "--config", str(DATA / "small.json")]
    _, a, _ = run(args, capsys)
    _, b, _ = run(args + ["--perfect-csi"], capsys)
    assert float(rows_of(b)[0]["mse_theory"]) < float(rows_of(a)[0]["mse_theory"])


def test_outputs_are_byte_identical(tmp_path, capsys):
    for fmt in ("csv", "json"):
        outs = []
        for k in range(2):
            p = tmp_path / f"sim{k}.{fmt}"
            code, _, _ = run(["simulate", "--config", str(DATA / "small.json"), "--out", str(p), "--format", fmt], capsys)
            assert code == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]
        assert b"\r\n" not in outs[0]


def test_simulate_schema(capsys):
    _, out, _ = run(["simulate", "--config", str(DATA / "small.json")], capsys)
    rows = rows_of(out)
    assert [r["decoder"] for r in rows] == ["BRO", "LS"]
    assert list(rows[0]) == list(cli.SIMULATE_COLUMNS)
    assert rows[0]["n_trials"] == "4"
    assert rows[0]["mse_theory"] == rows[1]["mse_theory"]


def test_json_output_mirrors_columns(capsys):
    _, out, _ = run(["simulate", "--config", str(DATA / "small.json"), "--format", "json", "--trials", "1"], capsys)
    payload = json.loads(out)
    assert payload["schema"] == "bromimo.simulate/1"
    assert payload["columns"] == list(cli.SIMULATE_COLUMNS)
    assert payload["rows"][0]["std_err_mse"] is None  # nan with one trial
    assert payload["rows"][0]["n_trials"] == 1


def test_manifest_is_written(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code, _, _ = run(["predict", "--config", str(DATA / "small.json"), "--out", str(out)], capsys)
    assert code == 0
    man = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert man["tool_version"] == __version__
    assert man["output_paths"] == [str(out)]
    assert man["config_hash"] == cli.parse_config(DATA / "small.json").config_hash
    assert man["started_at"] <= man["finished_at"]
    assert man["schema"] == "bromimo.predict/1"


def test_power_opt_curve_and_summary(capsys):
    code, out, _ = run(["power-opt", "--config", str(DATA / "small.json"), "--grid", "9"], capsys)
    assert code == 0
    rows = rows_of(out)
    curve = [r for r in rows if r["row_type"] == "curve"]
    (summary,) = [r for r in rows if r["row_type"] == "summary"]
    assert len(curve) == 9
    alphas = [float(r["alpha"]) for r in curve]
    mse = [float(r["mse_theory"]) for r in curve]
    mu = [float(r["mu_star"]) for r in curve]
    step = alphas[1] - alphas[0]
    assert abs(float(summary["alpha_star_mse"]) - alphas[mse.index(min(mse))]) <= step
    assert abs(float(summary["alpha_star_ber"]) - alphas[mu.index(max(mu))]) <= step
    assert float(summary["mse_theory"]) <= min(mse)


def test_sweep_rows_and_m_rounding(capsys):
    code, out, _ = run(
        ["sweep", "--config", str(DATA / "small.json"), "--param", "beta", "--values", "0.6,1.01,1.5", "--trials", "2"],
        capsys,
    )
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 3 * 2
    assert [r["m"] for r in rows[::2]] == ["24", "40", "60"]
    assert all(r["error"] == "" for r in rows)


def test_sweep_failed_point_is_one_line(capsys):
    _, out, _ = run(
        ["sweep", "--config", str(DATA / "small.json"), "--param", "beta", "--values", "0.4", "--trials", "1"], capsys
    )
    (row,) = rows_of(out)
    assert "beta" in row["error"] and "\n" not in row["error"]


# ---------------------------------------------------------------------------
# exit codes


def test_exit_codes(tmp_path, capsys):
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert run(["predict", "--config", str(broken)], capsys)[0] == cli.EXIT_PARSE
    assert run(["predict", "--config", str(tmp_path / "missing.json")], capsys)[0] == cli.EXIT_PARSE
    invalid = write_json(tmp_path, dict(MINIMAL, beta=0.4))
    code, _, err = run(["predict", "--config", str(invalid)], capsys)
    assert code == cli.EXIT_VALIDATION and "beta" in err
    assert run(["power-opt", "--config", str(DATA / "small.json"), "--grid", "2"], capsys)[0] == cli.EXIT_VALIDATION
    extreme = write_json(tmp_path, dict(MINIMAL, rho_db=100), "extreme.json")
    assert run(["predict", "--config", str(extreme)], capsys)[0] == cli.EXIT_SOLVER
    unwritable = tmp_path / "no" / "such" / "dir.csv"
    assert run(["predict", "--config", str(DATA / "small.json"), "--out", str(unwritable)], capsys)[0] == cli.EXIT_RUNTIME


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bromimo", "predict", "--config", str(DATA / "small.json"), "--format", "json"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    row = json.loads(proc.stdout)["rows"][0]
    assert math.isclose(row["ber_theory"], q_function(row["mu_star"] / 2), rel_tol=1e-10)
