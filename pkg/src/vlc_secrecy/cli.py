"""Command-line driver: parameter sweeps, verification runs and Monte Carlo.

Subcommands::

    vlc-secrecy params  [--config cfg.json]
    vlc-secrecy sweep   [--config cfg.json] [--sweep-var lambda|radius|cth]
                        [--from X --to Y --steps N] [--trials N] [--verify]
    vlc-secrecy verify  [--config cfg.json]
    vlc-secrecy mc      [--config cfg.json] [--trials N] [--seed S]

Exit status: 0 on success, 1 when a verification tolerance is violated,
2 on a configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, DegenerateRegion, VlcSecrecyError
from .monte_carlo import McConfig, simulate
from .secrecy_analytics import (
    asc,
    asc_given_k,
    asc_quad,
    bound_coefficients,
    poisson_weights,
    sop,
    sop_given_k,
    sop_quad,
)
from .special_functions import adaptive_quad
from .vlc_model import BoundKind, SystemParams, snr_law

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

CSV_HEADER = (
    "sweep_var", "value",
    "sop_upper_cf", "sop_lower_cf", "asc_upper_cf", "asc_lower_cf",
    "sop_upper_mc", "sop_upper_mc_se", "sop_lower_mc", "sop_lower_mc_se",
    "asc_upper_mc", "asc_upper_mc_se", "asc_lower_mc", "asc_lower_mc_se",
    "seed",
)

SWEEP_FIELDS = {"lambda": "eve_intensity", "radius": "room_radius", "cth": "target_rate"}
SYSTEM_FIELDS = {f.name for f in dataclasses.fields(SystemParams)}
TWIN_TOL = 1e-6

DEFAULT_SWEEP = {"var": "lambda", "from": 0.01, "to": 0.2, "steps": 20, "values": None}
DEFAULT_MC = {"enabled": False, "trials": 1_000_000, "seed": 12345, "workers": 1, "include_empty": True}
DEFAULT_OUTPUT = {"path": None, "format": "csv"}
DEFAULT_VERIFY = {
    "radii": [3.0, 5.0, 8.0],
    "cth": [0.1, 0.5, 1.0, 2.0, 4.0],
    "k": [1, 2, 3, 5, 8],
    "lambdas": [0.01, 0.05, 0.1, 0.2],
    "oracle_tol": 1e-6,
    "mc_sigmas": 3.0,
    "mc": True,
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    eps_override: Optional[float]
    sweep_var: str
    grid: tuple
    mc_enabled: bool
    mc: McConfig
    include_empty: bool
    out_path: Optional[str]
    out_format: str
    verify: dict = field(default_factory=dict)


def _section(raw: dict, name: str, defaults: dict) -> dict:
    got = raw.get(name, {})
    if got is None:
        got = {}
    if not isinstance(got, dict):
        raise ConfigError(name, "must be a JSON object")
    unknown = sorted(set(got) - set(defaults))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown key")
    merged = dict(defaults)
    merged.update(got)
    return merged


def _number(value, where: str, *, integer: bool = False, positive: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(where, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(where, "must be finite")
    if positive and value <= 0:
        raise ConfigError(where, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


def _flag(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(where, f"expected true or false, got {value!r}")
    return value


def _grid(sweep: dict) -> tuple:
    if sweep["values"] is not None:
        values = sweep["values"]
        if not isinstance(values, list):
            raise ConfigError("sweep.values", "must be a list")
        grid = tuple(_number(v, f"sweep.values[{i}]") for i, v in enumerate(values))
    else:
        steps = _number(sweep["steps"], "sweep.steps", integer=True)
        lo = _number(sweep["from"], "sweep.from")
        hi = _number(sweep["to"], "sweep.to")
        if steps < 0:
            raise ConfigError("sweep.steps", "must be >= 0")
        if steps == 1:
            grid = (lo,)
        else:
            grid = tuple(float(v) for v in np.linspace(lo, hi, steps))
    if not grid:
        raise ConfigError("sweep", "the sweep grid is empty")
    return grid


def load_config(raw: dict) -> RunConfig:
    """Validate a JSON configuration document into a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    unknown = sorted(set(raw) - {"system", "sweep", "mc", "output", "verify"})
    if unknown:
        raise ConfigError(unknown[0], "unknown top-level key")

    system = raw.get("system", {}) or {}
    if not isinstance(system, dict):
        raise ConfigError("system", "must be a JSON object")
    kwargs = {}
    eps_override = None
    for key, value in system.items():
        where = f"system.{key}"
        if key == "eps_override":
            eps_override = None if value is None else _number(value, where)
        elif key not in SYSTEM_FIELDS:
            raise ConfigError(where, "unknown key")
        elif key == "c_rf" and value is None:
            kwargs[key] = None
        else:
            kwargs[key] = _number(value, where, integer=(key == "led_count"))
    try:
        params = SystemParams(**kwargs)
    except VlcSecrecyError as exc:
        raise ConfigError("system", str(exc)) from None

    sweep = _section(raw, "sweep", DEFAULT_SWEEP)
    if sweep["var"] not in SWEEP_FIELDS:
        raise ConfigError("sweep.var", f"must be one of {sorted(SWEEP_FIELDS)}, got {sweep['var']!r}")
    grid = _grid(sweep)

    mc = _section(raw, "mc", DEFAULT_MC)
    try:
        mc_cfg = McConfig(
            trials=_number(mc["trials"], "mc.trials", integer=True),
            seed=_number(mc["seed"], "mc.seed", integer=True),
            workers=_number(mc["workers"], "mc.workers", integer=True),
        )
    except VlcSecrecyError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("mc", str(exc)) from None

    out = _section(raw, "output", DEFAULT_OUTPUT)
    if out["format"] not in ("csv", "json"):
        raise ConfigError("output.format", f"must be 'csv' or 'json', got {out['format']!r}")
    if out["path"] is not None and not isinstance(out["path"], str):
        raise ConfigError("output.path", "must be a string")

    ver = _section(raw, "verify", DEFAULT_VERIFY)
    for key in ("radii", "cth", "k", "lambdas"):
        if not isinstance(ver[key], list) or not ver[key]:
            raise ConfigError(f"verify.{key}", "must be a nonempty list")
        ver[key] = [_number(v, f"verify.{key}[{i}]", integer=(key == "k"), positive=(key == "radii"))
                    for i, v in enumerate(ver[key])]
    ver["oracle_tol"] = _number(ver["oracle_tol"], "verify.oracle_tol", positive=True)
    ver["mc_sigmas"] = _number(ver["mc_sigmas"], "verify.mc_sigmas", positive=True)
    ver["mc"] = _flag(ver["mc"], "verify.mc")

    return RunConfig(
        system=params,
        eps_override=eps_override,
        sweep_var=sweep["var"],
        grid=grid,
        mc_enabled=_flag(mc["enabled"], "mc.enabled"),
        mc=mc_cfg,
        include_empty=_flag(mc["include_empty"], "mc.include_empty"),
        out_path=out["path"],
        out_format=out["format"],
        verify=ver,
    )


def read_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None


def apply_overrides(raw: dict, args: argparse.Namespace) -> dict:
    """Fold command-line flags into the raw JSON document (flags win)."""
    raw = json.loads(json.dumps(raw))
    for name in ("sweep", "mc", "output"):
        if raw.get(name) is None:
            raw[name] = {}
        elif not isinstance(raw[name], dict):
            raise ConfigError(name, "must be a JSON object")
    opt = vars(args)
    if opt.get("sweep_var") is not None:
        raw["sweep"]["var"] = opt["sweep_var"]
    for flag, key in (("from_", "from"), ("to", "to"), ("steps", "steps")):
        if opt.get(flag) is not None:
            raw["sweep"][key] = opt[flag]
            raw["sweep"]["values"] = None
    for key in ("seed", "trials", "workers"):
        if opt.get(key) is not None:
            raw["mc"][key] = opt[key]
    if opt.get("trials") is not None:
        raw["mc"]["enabled"] = True
    if opt.get("include_empty") is not None:
        raw["mc"]["include_empty"] = opt["include_empty"]
    if opt.get("out") is not None:
        raw["output"]["path"] = opt["out"]
    if opt.get("format") is not None:
        raw["output"]["format"] = opt["format"]
    return raw


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepRecord:
    sweep_var: str
    value: float
    sop_upper_cf: Optional[float] = None
    sop_lower_cf: Optional[float] = None
    asc_upper_cf: Optional[float] = None
    asc_lower_cf: Optional[float] = None
    sop_upper_mc: Optional[float] = None
    sop_upper_mc_se: Optional[float] = None
    sop_lower_mc: Optional[float] = None
    sop_lower_mc_se: Optional[float] = None
    asc_upper_mc: Optional[float] = None
    asc_upper_mc_se: Optional[float] = None
    asc_lower_mc: Optional[float] = None
    asc_lower_mc_se: Optional[float] = None
    seed: Optional[int] = None
    sop_upper_quad: Optional[float] = None
    sop_lower_quad: Optional[float] = None
    asc_upper_quad: Optional[float] = None
    asc_lower_quad: Optional[float] = None
    error: Optional[str] = None

    def twin_deviation(self) -> Optional[float]:
        """Largest relative closed-form / quadrature gap, ``None`` without twins."""
        gaps = []
        for name in ("sop_upper", "sop_lower", "asc_upper", "asc_lower"):
            cf = getattr(self, f"{name}_cf")
            quad = getattr(self, f"{name}_quad")
            if cf is None or quad is None:
                continue
            floor = 1e-3 if name.startswith("asc") else 1e-300
            gaps.append(abs(cf - quad) / max(abs(quad), floor))
        return max(gaps) if gaps else None


def _point_params(cfg: RunConfig, value: float) -> SystemParams:
    return dataclasses.replace(cfg.system, **{SWEEP_FIELDS[cfg.sweep_var]: value})


def _quad_mixture(twin, coeff, law, mu: float, include_empty: bool) -> float:
    weights, _ = poisson_weights(mu, 1, include_empty)
    return math.fsum(w * twin(coeff, law, k).value for k, w in weights)


def _fill_record(rec: SweepRecord, cfg: RunConfig, params: SystemParams, with_twins: bool):
    law = snr_law(params, cfg.eps_override)
    lam = params.eve_intensity
    for kind in BoundKind:
        coeff = bound_coefficients(kind, params.target_rate)
        name = kind.value
        setattr(rec, f"sop_{name}_cf", sop(coeff, law, lam, include_empty=cfg.include_empty).value)
        setattr(rec, f"asc_{name}_cf", asc(coeff, law, lam, include_empty=cfg.include_empty).value)
        if with_twins:
            mu = params.mean_eavesdroppers
            setattr(rec, f"sop_{name}_quad", min(_quad_mixture(sop_quad, coeff, law, mu, cfg.include_empty), 1.0))
            setattr(rec, f"asc_{name}_quad", _quad_mixture(asc_quad, coeff, law, mu, cfg.include_empty))
    if cfg.mc_enabled:
        est = simulate(params, cfg.mc, cfg.include_empty)
        for key, e in est.items():
            setattr(rec, f"{key}_mc", e.mean)
            setattr(rec, f"{key}_mc_se", e.std_error)
        rec.seed = cfg.mc.seed


def run_sweep(cfg: RunConfig, with_twins: bool = False) -> list[SweepRecord]:
    """One record per grid point, in grid order.

    A failure at one point is stored in ``record.error`` and the sweep moves on.
    """
    records = []
    for value in cfg.grid:
        rec = SweepRecord(cfg.sweep_var, value)
        try:
            _fill_record(rec, cfg, _point_params(cfg, value), with_twins)
        except (VlcSecrecyError, ArithmeticError, ValueError) as exc:
            rec = SweepRecord(cfg.sweep_var, value, error=f"{type(exc).__name__}: {exc}")
        records.append(rec)
    return records


def _csv_field(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow([_csv_field(getattr(rec, name)) for name in CSV_HEADER])
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    """Inverse of :func:`records_to_csv` (quadrature twins are not part of the CSV)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    out = []
    for row in rows[1:]:
        kw = {}
        for name, cell in zip(CSV_HEADER, row):
            if name == "sweep_var":
                kw[name] = cell
            elif cell == "":
                kw[name] = None
            elif name == "seed":
                kw[name] = int(cell)
            else:
                kw[name] = float(cell)
        out.append(SweepRecord(**kw))
    return out


def records_to_json(records: list[SweepRecord]) -> str:
    return json.dumps([dataclasses.asdict(r) for r in records], indent=2) + "\n"


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _rel(cf: float, ref: float, floor: float) -> float:
    return abs(cf - ref) / max(abs(ref), floor)


def _check(name: str, value: float, tol: float, detail: Optional[dict] = None) -> dict:
    entry = {"name": name, "value": value, "tolerance": tol, "pass": bool(value <= tol)}
    if detail:
        entry["detail"] = detail
    return entry


def _failed(name: str, exc: Exception) -> dict:
    return {"name": name, "value": None, "tolerance": None, "pass": False,
            "detail": {"error": f"{type(exc).__name__}: {exc}"}}


def _distribution_checks(cfg: RunConfig, laws: list) -> list[dict]:
    worst_cdf = 0.0
    worst_norm = 0.0
    for law in laws:
        # the unclamped expression, so a wrong normalisation cannot hide
        lo, hi = (law.a * g ** law.c / law.c + law.eps for g in (law.gamma_min, law.gamma_max))
        worst_cdf = max(worst_cdf, abs(lo), abs(hi - 1.0))
        mass = adaptive_quad(lambda u: law.a * np.exp(u * (law.b + 1.0)),
                             math.log(law.gamma_min), math.log(law.gamma_max), 1e-12, vectorized=True).value
        worst_norm = max(worst_norm, abs(mass - 1.0))
    return [_check("cdf_endpoints", worst_cdf, 1e-12), _check("pdf_normalization", worst_norm, 1e-9)]


def _oracle_checks(cfg: RunConfig, laws: list) -> list[dict]:
    ver = cfg.verify
    tol = ver["oracle_tol"]
    worst = {"sop": (0.0, None), "asc": (0.0, None)}
    ordering = 0.0
    for law in laws:
        for cth in ver["cth"]:
            for k in ver["k"]:
                vals = {}
                for kind in BoundKind:
                    coeff = bound_coefficients(kind, cth)
                    where = {"radius": law.radius, "cth": cth, "k": k, "kind": kind.value}
                    s_cf = sop_given_k(coeff, law, k).value
                    s_q = sop_quad(coeff, law, k).value
                    err = _rel(s_cf, s_q, 1e-300)
                    if err > worst["sop"][0] or worst["sop"][1] is None:
                        worst["sop"] = (max(err, worst["sop"][0]), where)
                    try:
                        a_cf = asc_given_k(coeff, law, k).value
                        a_q = asc_quad(coeff, law, k).value
                    except DegenerateRegion:
                        a_cf = a_q = 0.0
                    err = _rel(a_cf, a_q, 1e-3)
                    if err > worst["asc"][0] or worst["asc"][1] is None:
                        worst["asc"] = (max(err, worst["asc"][0]), where)
                    vals[kind] = (s_cf, a_cf)
                up, lo = vals[BoundKind.UPPER], vals[BoundKind.LOWER]
                ordering = max(ordering, lo[0] - up[0], lo[1] - up[1])
    return [
        _check("oracle_sop", worst["sop"][0], tol, {"worst_point": worst["sop"][1]}),
        _check("oracle_asc", worst["asc"][0], tol, {"worst_point": worst["asc"][1]}),
        _check("bound_ordering", max(ordering, 0.0), 1e-12),
    ]


def _mc_checks(cfg: RunConfig) -> list[dict]:
    ver = cfg.verify
    worst = 0.0
    where = None
    for lam in ver["lambdas"]:
        params = dataclasses.replace(cfg.system, eve_intensity=lam)
        law = snr_law(params, cfg.eps_override)
        est = simulate(params, cfg.mc, cfg.include_empty)
        for kind in BoundKind:
            coeff = bound_coefficients(kind, params.target_rate)
            for quantity, fn in (("sop", sop), ("asc", asc)):
                e = est[f"{quantity}_{kind.value}"]
                ref = fn(coeff, law, lam, include_empty=cfg.include_empty).value
                z = abs(e.mean - ref) / e.std_error if e.std_error > 0 else (0.0 if e.mean == ref else math.inf)
                if z >= worst:
                    worst, where = z, {"lambda": lam, "quantity": f"{quantity}_{kind.value}"}
    return [_check("mc_concordance_sigmas", worst, ver["mc_sigmas"],
                   {"worst_point": where, "trials": cfg.mc.trials, "seed": cfg.mc.seed})]


def verify(cfg: RunConfig) -> dict:
    """Run the verification battery and return a JSON-ready report."""
    laws = []
    checks = []
    try:
        for r in cfg.verify["radii"]:
            laws.append(snr_law(dataclasses.replace(cfg.system, room_radius=r), cfg.eps_override))
    except VlcSecrecyError as exc:
        checks.append(_failed("geometry", exc))
    for name, stage in (("distribution", lambda: _distribution_checks(cfg, laws)),
                        ("oracle", lambda: _oracle_checks(cfg, laws)),
                        ("monte_carlo", lambda: _mc_checks(cfg) if cfg.verify["mc"] else [])):
        try:
            checks.extend(stage())
        except (VlcSecrecyError, ArithmeticError, ValueError) as exc:
            checks.append(_failed(name, exc))
    return {
        "status": "PASS" if all(c["pass"] for c in checks) else "FAIL",
        "checks": checks,
    }


def report_summary(report: dict) -> str:
    lines = []
    for c in report["checks"]:
        mark = "PASS" if c["pass"] else "FAIL"
        if c["value"] is None:
            lines.append(f"{mark}  {c['name']}: {c['detail']['error']}")
        else:
            lines.append(f"{mark}  {c['name']}: {c['value']:.3e} (tolerance {c['tolerance']:.1e})")
    lines.append(f"overall: {report['status']}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _bool_arg(text: str) -> bool:
    low = text.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, help="Monte Carlo trials (enables simulation in sweeps)")
    common.add_argument("--workers", type=int)
    common.add_argument("--include-empty", type=_bool_arg, metavar="{true,false}",
                        help="keep the K = 0 atom of the eavesdropper count")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))

    parser = argparse.ArgumentParser(prog="vlc-secrecy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sw = sub.add_parser("sweep", parents=[common], help="sweep lambda, radius or target rate")
    sw.add_argument("--sweep-var", choices=sorted(SWEEP_FIELDS))
    sw.add_argument("--from", dest="from_", type=float)
    sw.add_argument("--to", type=float)
    sw.add_argument("--steps", type=int)
    sw.add_argument("--verify", action="store_true", help="add quadrature twins and check them")
    sub.add_parser("verify", parents=[common], help="run the verification battery")
    sub.add_parser("mc", parents=[common], help="Monte Carlo estimates at the configured point")
    sub.add_parser("params", parents=[common], help="print the derived SNR law")
    return parser


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _params_report(cfg: RunConfig) -> dict:
    p = cfg.system
    law = snr_law(p, cfg.eps_override)
    out = dataclasses.asdict(law)
    out.update({
        "rf_constant": p.rf_constant,
        "noise_power_w": p.noise_power_w,
        "concentrator_gain": p.concentrator_gain,
        "mean_eavesdroppers": p.mean_eavesdroppers,
    })
    return out


def _run(args: argparse.Namespace) -> int:
    cfg = load_config(apply_overrides(read_config(args.config), args))

    if args.command == "params":
        _emit(json.dumps(_params_report(cfg), indent=2) + "\n", cfg.out_path)
        return EXIT_OK

    if args.command == "verify":
        report = verify(cfg)
        _emit(json.dumps(report, indent=2) + "\n", cfg.out_path)
        sys.stderr.write(report_summary(report))
        return EXIT_OK if report["status"] == "PASS" else EXIT_FAIL

    if args.command == "mc":
        cfg = dataclasses.replace(cfg, mc_enabled=True, sweep_var="lambda", grid=(cfg.system.eve_intensity,))
        records = run_sweep(cfg)
    else:
        records = run_sweep(cfg, with_twins=args.verify)

    text = records_to_csv(records) if cfg.out_format == "csv" else records_to_json(records)
    _emit(text, cfg.out_path)
    status = EXIT_OK
    for rec in records:
        if rec.error is not None:
            sys.stderr.write(f"{rec.sweep_var}={rec.value!r}: {rec.error}\n")
            status = EXIT_FAIL
        if args.command == "sweep" and args.verify:
            dev = rec.twin_deviation()
            if dev is not None and dev > TWIN_TOL:
                sys.stderr.write(f"{rec.sweep_var}={rec.value!r}: quadrature twin deviation {dev:.3e}\n")
                status = EXIT_FAIL
    return status


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
