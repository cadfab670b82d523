"""Command-line front end.

Subcommands ``predict``, ``simulate``, ``power-opt`` and ``sweep`` read a JSON
experiment config and write CSV or JSON rows. Every file written with
``--out`` gets a ``<out>.manifest.json`` sidecar recording the config hash,
tool version and timestamps.

Exit status: 0 ok, 2 config parse error, 3 validation error, 4 solver error,
5 any other runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from bromimo import __version__, asymptotics, montecarlo, power
from bromimo.channel import CorrelationModel, SystemConfig
from bromimo.decoder import DEFAULT_MAX_ITERS, DEFAULT_TOL, Decoder
from bromimo.errors import ConfigParseError, ConfigValidationError, SolverError
from bromimo.montecarlo import ExperimentConfig, SamplingPath, SweepParameter

log = logging.getLogger("bromimo")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_RUNTIME = 5

PERFECT_CSI_RHO_P = 1e12
SCHEMA_VERSION = 1

REQUIRED_KEYS = ("n", "beta", "tau", "tau_p", "rho_db", "alpha", "r")
OPTIONAL_KEYS = ("corr_model", "seed", "trials", "decoders", "sampling_path", "tolerances")

PREDICT_COLUMNS = ("rho_db", "r", "alpha", "beta", "n", "m", "mu_star", "gamma_star", "mse_theory", "ber_theory")
SIMULATE_COLUMNS = (
    "decoder", "rho_db", "r", "alpha", "beta", "n", "m",
    "mean_mse", "std_err_mse", "mean_ber", "std_err_ber", "n_trials", "n_nonconverged",
    "mu_star", "gamma_star", "mse_theory", "ber_theory",
)
POWER_COLUMNS = ("row_type", "alpha", "mu_star", "mse_theory", "ber_theory", "alpha_star_mse", "alpha_star_ber")
SWEEP_COLUMNS = ("parameter", "value") + SIMULATE_COLUMNS + ("error",)


# ---------------------------------------------------------------------------
# config


@dataclass
class LoadedConfig:
    experiment: ExperimentConfig
    raw: dict = field(repr=False)

    @property
    def config_hash(self):
        return config_hash(self.raw)


def config_hash(raw):
    """SHA-256 of the canonical JSON form; independent of key order."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _number(raw, key, problems, kind=float):
    val = raw[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        problems.append(f"{key}: expected a number, got {val!r}")
        return None
    if kind is int:
        if isinstance(val, float) and not val.is_integer():
            problems.append(f"{key}: expected an integer, got {val!r}")
            return None
        return int(val)
    return float(val)


def build_experiment(raw):
    """Validate a config mapping and build an :class:`ExperimentConfig`.

    Every violation is collected before raising :class:`ConfigValidationError`.
    """
    if not isinstance(raw, dict):
        raise ConfigParseError("top-level config must be a JSON object")
    problems = []
    unknown = sorted(set(raw) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    problems += [f"{k}: unknown key" for k in unknown]
    missing = [k for k in REQUIRED_KEYS if k not in raw]
    problems += [f"{k}: required key missing" for k in missing]

    vals = {}
    for key in REQUIRED_KEYS:
        if key in raw:
            vals[key] = _number(raw, key, problems, int if key == "n" else float)
    seed = _number(raw, "seed", problems, int) if "seed" in raw else 0
    trials = _number(raw, "trials", problems, int) if "trials" in raw else 100

    corr_model = raw.get("corr_model", CorrelationModel.SQUARED_EXPONENTIAL.value)
    try:
        corr_model = CorrelationModel(str(corr_model).lower())
    except ValueError:
        problems.append(f"corr_model: must be one of {[c.value for c in CorrelationModel]}, got {corr_model!r}")
        corr_model = None

    decoders = raw.get("decoders", [Decoder.BRO.value])
    parsed_decoders = []
    if not isinstance(decoders, list):
        problems.append(f"decoders: expected a list, got {decoders!r}")
    else:
        if not decoders:
            problems.append("decoders: decoder set must not be empty")
        for d in decoders:
            try:
                parsed_decoders.append(Decoder(str(d).upper()))
            except ValueError:
                problems.append(f"decoders: unknown decoder {d!r}")

    path = raw.get("sampling_path", SamplingPath.DIRECT_STATISTICAL.value)
    try:
        path = SamplingPath(str(path).lower())
    except ValueError:
        problems.append(f"sampling_path: must be one of {[p.value for p in SamplingPath]}, got {path!r}")
        path = None

    tol, max_iters = DEFAULT_TOL, DEFAULT_MAX_ITERS
    tols = raw.get("tolerances", {})
    if not isinstance(tols, dict):
        problems.append(f"tolerances: expected an object, got {tols!r}")
    else:
        extra = sorted(set(tols) - {"tol", "max_iters"})
        problems += [f"tolerances.{k}: unknown key" for k in extra]
        if "tol" in tols:
            tol = _number(tols, "tol", problems)
            if tol is not None and not tol > 0:
                problems.append(f"tolerances.tol: must be positive, got {tol!r}")
        if "max_iters" in tols:
            max_iters = _number(tols, "max_iters", problems, int)
            if max_iters is not None and max_iters < 1:
                problems.append(f"tolerances.max_iters: must be >= 1, got {max_iters!r}")

    if trials is not None and trials < 1:
        problems.append(f"trials: must be a positive integer, got {trials!r}")

    system = None
    if not missing and all(v is not None for v in vals.values()) and corr_model is not None and seed is not None:
        try:
            system = SystemConfig(
                n=vals["n"],
                beta=vals["beta"],
                tau=vals["tau"],
                tau_p=vals["tau_p"],
                rho=10.0 ** (vals["rho_db"] / 10.0),
                alpha=vals["alpha"],
                corr_model=corr_model,
                r=vals["r"],
                seed=seed,
            )
        except ConfigValidationError as exc:
            problems += exc.violations
    if problems:
        raise ConfigValidationError(problems)
    return ExperimentConfig(
        system=system,
        trials=trials,
        decoders=tuple(parsed_decoders),
        sampling_path=path,
        tol=tol,
        max_iters=max_iters,
    )


def parse_config(path):
    """Read and validate a JSON experiment config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"{path}: cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return LoadedConfig(experiment=build_experiment(raw), raw=raw)


# ---------------------------------------------------------------------------
# rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".12g")
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        return None if math.isnan(v) else float(format(v, ".12g"))
    return v


def render(rows, columns, fmt, schema):
    """Serialize rows (dicts) to CSV or JSON text with a fixed column order."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
        return buf.getvalue()
    payload = {
        "schema": f"bromimo.{schema}/{SCHEMA_VERSION}",
        "columns": list(columns),
        "rows": [{c: _json_value(row.get(c)) for c in columns} for row in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def _point_columns(system: SystemConfig):
    return {
        "rho_db": system.rho_db,
        "r": system.r,
        "alpha": system.alpha,
        "beta": system.beta_realized,
        "n": system.n,
        "m": system.m,
    }


def _theory_columns(sol):
    if sol is None:
        return {}
    return {"mu_star": sol.mu_star, "gamma_star": sol.gamma_star, "mse_theory": sol.mse, "ber_theory": sol.ber}


def predict_rows(exp: ExperimentConfig, perfect_csi=False):
    system = exp.system
    if perfect_csi:
        system = replace(system, rho_p_override=PERFECT_CSI_RHO_P)
    sol = montecarlo.theory_for(system)
    return [{**_point_columns(system), **_theory_columns(sol)}]


def aggregate_rows(res: montecarlo.AggregateResult):
    rows = []
    for dec, st in res.decoders.items():
        rows.append(
            {
                "decoder": dec.value,
                **_point_columns(res.system),
                "mean_mse": st.mean_mse,
                "std_err_mse": st.std_err_mse,
                "mean_ber": st.mean_ber,
                "std_err_ber": st.std_err_ber,
                "n_trials": st.n_trials,
                "n_nonconverged": st.n_nonconverged,
                **_theory_columns(res.theory),
            }
        )
    return rows


def simulate_rows(exp: ExperimentConfig):
    return aggregate_rows(montecarlo.run_experiment(exp))


def power_rows(exp: ExperimentConfig, objective, grid):
    curve = power.optimize_alpha(exp.system, objective, grid)
    rows = [
        {"row_type": "curve", "alpha": float(a), "mu_star": float(mu), "mse_theory": float(mse), "ber_theory": float(ber)}
        for a, mu, mse, ber in zip(curve.alphas, curve.mu_values, curve.mse_values, curve.ber_values)
    ]
    if power.Objective(objective) is power.Objective.MSE:
        alpha, mu = curve.alpha_star_mse, curve.mu_star_mse
    else:
        alpha, mu = curve.alpha_star_ber, curve.mu_star_ber
    rows.append(
        {
            "row_type": "summary",
            "alpha": alpha,
            "mu_star": mu,
            "mse_theory": curve.mse_star,
            "ber_theory": curve.ber_star,
            "alpha_star_mse": curve.alpha_star_mse,
            "alpha_star_ber": curve.alpha_star_ber,
        }
    )
    return rows


def sweep_rows(exp: ExperimentConfig, parameter, values):
    parameter = SweepParameter(parameter)
    rows = []
    for point in montecarlo.sweep(exp, parameter, values):
        base = {"parameter": parameter.value, "value": point.value}
        if point.result is None:
            # keep one row per line in CSV output
            rows.append({**base, "error": " ".join(point.error.split())})
            continue
        rows += [{**base, **row, "error": ""} for row in aggregate_rows(point.result)]
    return rows


# ---------------------------------------------------------------------------
# entry point


def _parse_values(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigValidationError([f"--values: {exc}"]) from exc
    if not vals:
        raise ConfigValidationError(["--values: at least one value is required"])
    return vals


def build_parser():
    parser = argparse.ArgumentParser(prog="bromimo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("predict", help="large-system MSE/BER prediction")
    common(p)
    p.add_argument("--perfect-csi", action="store_true", help=f"use rho_p = {PERFECT_CSI_RHO_P:g}")

    p = sub.add_parser("simulate", help="Monte Carlo simulation with theory columns")
    common(p)
    p.add_argument("--trials", type=int, help="override the config's trial count")

    p = sub.add_parser("power-opt", help="optimal data power fraction")
    common(p)
    p.add_argument("--objective", choices=("mse", "ber"), default="mse")
    p.add_argument("--grid", type=int, default=power.DEFAULT_GRID)

    p = sub.add_parser("sweep", help="simulate over a parameter grid")
    common(p)
    p.add_argument("--param", required=True, choices=[s.value for s in SweepParameter])
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--trials", type=int, help="override the config's trial count")
    return parser


def write_manifest(out_path, loaded: LoadedConfig, command, schema, started_at):
    manifest = {
        "config_hash": loaded.config_hash,
        "tool_version": __version__,
        "command": command,
        "schema": f"bromimo.{schema}/{SCHEMA_VERSION}",
        "started_at": started_at,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "output_paths": [str(out_path)],
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    started_at = datetime.now(timezone.utc).isoformat()
    try:
        loaded = parse_config(args.config)
        exp = loaded.experiment
        trials = getattr(args, "trials", None)
        if trials is not None:
            exp = replace(exp, trials=trials)
        if args.command == "predict":
            rows, columns = predict_rows(exp, args.perfect_csi), PREDICT_COLUMNS
        elif args.command == "simulate":
            rows, columns = simulate_rows(exp), SIMULATE_COLUMNS
        elif args.command == "power-opt":
            if args.grid < 3:
                raise ConfigValidationError([f"--grid: must be >= 3, got {args.grid}"])
            rows, columns = power_rows(exp, args.objective, args.grid), POWER_COLUMNS
        else:
            rows, columns = sweep_rows(exp, args.param, _parse_values(args.values)), SWEEP_COLUMNS
        text = render(rows, columns, args.format, args.command)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8", newline="\n")
            write_manifest(args.out, loaded, args.command, args.command, started_at)
            log.info("wrote %s", args.out)
        else:
            sys.stdout.write(text)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as exc:  # noqa: BLE001 - mapped to an exit status
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
