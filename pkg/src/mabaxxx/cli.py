"""Command-line front end.

Every command reads a JSON run configuration, runs one computation or
verification suite and prints a JSON report.  The exit status is 0 when every
check passes, 1 when a check fails and 2 when the configuration is invalid.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bethe import BetheSystem
from .chain_oracle import verify_oracle
from .errors import MabaError, NotOnShell
from .izergin import verify_izergin_properties
from .params import ModelParams, decompose_twist, twist_residuals
from .rational import omega_inverse_check, verify_sum_identities
from .report import CheckRecord, Report, Tally
from .scalar_products import ScalarProducts, diagonal_onshell_check

COMMANDS = ("verify-izergin", "verify-oracle", "verify-appendices", "solve-bethe",
            "scalar-product", "norm", "spectrum-check")

MODEL_FIELDS = ("c", "theta", "kappa_tilde", "kappa", "kappa_plus", "kappa_minus", "rho1")

DEFAULT_MODEL = {
    "c": [1.0, 0.0],
    "theta": [[0.31, 0.12], [-0.54, 0.43], [1.07, -0.28]],
    "kappa_tilde": [1.3, 0.2],
    "kappa": [0.7, -0.4],
    "kappa_plus": [0.9, 0.3],
    "kappa_minus": [1.1, -0.5],
    "rho1": [0.8, 0.6],
}


class ConfigError(Exception):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def parse_complex(value, path) -> complex:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number or [re, im] pair")
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)):
        return complex(value[0], value[1])
    raise ConfigError(path, f"malformed complex literal {json.dumps(value)}; expected [re, im]")


def complex_pair(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def parse_complex_list(value, path) -> list:
    if not isinstance(value, list):
        raise ConfigError(path, "expected a list of [re, im] pairs")
    return [parse_complex(x, f"{path}[{i}]") for i, x in enumerate(value)]


@dataclass
class RunConfig:
    model: dict
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("$", "top level must be an object")
        unknown = set(data) - {"model", "seed", "tolerances", "caps", "inputs"}
        if unknown:
            raise ConfigError(f"$.{sorted(unknown)[0]}", "unknown key")
        model = data.get("model", DEFAULT_MODEL)
        if not isinstance(model, dict):
            raise ConfigError("$.model", "expected an object")
        parsed = {}
        for key in MODEL_FIELDS:
            if key not in model:
                raise ConfigError(f"$.model.{key}", "missing field")
            if key == "theta":
                parsed[key] = parse_complex_list(model[key], "$.model.theta")
                if not parsed[key]:
                    raise ConfigError("$.model.theta", "need at least one site")
            else:
                parsed[key] = parse_complex(model[key], f"$.model.{key}")
        extra = set(model) - set(MODEL_FIELDS) - {"min_gap"}
        if extra:
            raise ConfigError(f"$.model.{sorted(extra)[0]}", "unknown key")
        if "min_gap" in model:
            if not isinstance(model["min_gap"], (int, float)) or isinstance(model["min_gap"], bool):
                raise ConfigError("$.model.min_gap", "expected a number")
            parsed["min_gap"] = float(model["min_gap"])
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0 or seed >= 2 ** 64:
            raise ConfigError("$.seed", "expected an unsigned 64-bit integer")
        out = {}
        for section in ("tolerances", "caps", "inputs"):
            val = data.get(section, {})
            if not isinstance(val, dict):
                raise ConfigError(f"$.{section}", "expected an object")
            out[section] = val
        for key, val in out["tolerances"].items():
            if not isinstance(val, (int, float)) or isinstance(val, bool) or val <= 0:
                raise ConfigError(f"$.tolerances.{key}", "expected a positive number")
        for key, val in out["caps"].items():
            if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                raise ConfigError(f"$.caps.{key}", "expected a non-negative integer")
        cfg = cls(parsed, seed, out["tolerances"], out["caps"], out["inputs"])
        try:
            decompose_twist(cfg.params())
        except (MabaError, ValueError) as exc:
            raise ConfigError("$.model", str(exc)) from None
        return cfg

    def to_dict(self) -> dict:
        model = {}
        for key in MODEL_FIELDS:
            val = self.model[key]
            model[key] = [complex_pair(t) for t in val] if key == "theta" else complex_pair(val)
        if "min_gap" in self.model:
            model["min_gap"] = self.model["min_gap"]
        return {"model": model, "seed": self.seed, "tolerances": dict(self.tolerances),
                "caps": dict(self.caps), "inputs": dict(self.inputs)}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def loads(cls, text) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
        return cls.from_dict(data)

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def params(self) -> ModelParams:
        m = self.model
        return ModelParams(m["c"], tuple(m["theta"]), m["kappa_tilde"], m["kappa"],
                           m["kappa_plus"], m["kappa_minus"], m["rho1"], m.get("min_gap"))

    def tol(self, name, default) -> float:
        return float(self.tolerances.get(name, default))

    def cap(self, name, default) -> int:
        return int(self.caps.get(name, default))


def load_roots(path, label) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(label, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(label, f"invalid JSON in {path} ({exc.msg})") from None
    if isinstance(data, dict) and "roots" in data:
        data = data["roots"]
    return np.array(parse_complex_list(data, label), dtype=complex)


def _z_samples(rng, count, theta):
    span = 1.0 + float(np.max(np.abs(theta)))
    return [complex(rng.normal(), rng.normal()) * span for _ in range(count)]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_pair(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if np.isfinite(obj) else None
    return obj


def _failure(name, message) -> CheckRecord:
    return CheckRecord(name, "precondition", float("inf"), float("inf"), 0.0, False, message)


# -- commands ---------------------------------------------------------------


def cmd_verify_izergin(cfg, args) -> Report:
    return verify_izergin_properties(seed=cfg.seed, max_n=cfg.cap("izergin_max_n", 6),
                                     draws=cfg.cap("izergin_draws", 50), c=cfg.params().c,
                                     threads=args.threads)


def cmd_verify_oracle(cfg, args) -> Report:
    return verify_oracle(cfg.params(), seed=cfg.seed, tolerance=cfg.tol("oracle", 1e-10))


def _solutions(cfg, args, bs=None):
    bs = bs or BetheSystem(cfg.params())
    starts = cfg.caps.get("starts")
    return bs.find_all_solutions(seed=cfg.seed, starts=starts, threads=args.threads)


def cmd_verify_appendices(cfg, args) -> Report:
    params = cfg.params()
    tol = cfg.tol("appendix", 1e-7)
    rng = np.random.default_rng(cfg.seed)
    sp = ScalarProducts(params)
    rep = Report("verify-appendices")
    tw = sp.twist
    t_tw = Tally("twist-decomposition", "twist-factorisation", 1e-12)
    for val in twist_residuals(params, tw).values():
        t_tw.add_error(val, val)
    rep.extend([t_tw.record()])
    N = params.N
    u = rng.normal(size=N) + 1j * rng.normal(size=N)
    v = rng.normal(size=N) + 1j * rng.normal(size=N)
    for k in range(N):
        rep.extend(verify_sum_identities(u, v, k, params.c, theta=sp.theta, tolerance=tol).records)
    rep.extend(omega_inverse_check(sp.theta, params.c, tolerance=tol).records)
    rep.extend(omega_inverse_check(sp.theta, -params.c, tolerance=tol).records)
    sols, coverage = _solutions(cfg, args, sp.bethe)
    rep.data["coverage"] = coverage
    zs = _z_samples(rng, args.z_samples, sp.theta)
    for i, sol in enumerate(sols):
        for r in sp.onshell_izergin_report(sol, zs, tolerance=cfg.tol("onshell", 1e-8)).records:
            r.name = f"solution{i}:{r.name}"
            rep.extend([r])
        for r in sp.appendix_checks(sol, rng=rng, tolerance=tol).records:
            r.name = f"solution{i}:{r.name}"
            rep.extend([r])
    if not sols:
        rep.extend([_failure("solutions", "no certified Bethe solution found")])
    if N >= 2:
        diag = diagonal_onshell_check(sp.theta[:2], params.kappa_tilde, params.kappa, 1, zs,
                                      params.c, seed=cfg.seed)
        rep.extend(diag.records)
    return rep


def cmd_solve_bethe(cfg, args) -> Report:
    bs = BetheSystem(cfg.params())
    sols, coverage = _solutions(cfg, args, bs)
    t = Tally("certified-solutions", "bethe-certification", 1e-8)
    for s in sols:
        t.add_error(s.eigen_residual, s.eigen_residual)
    if not sols:
        t.fail("no solution found")
    rep = Report("solve-bethe", [t.record()])
    rep.data["coverage"] = coverage
    rep.data["solutions"] = [s.to_dict() for s in sols]
    return rep


def cmd_scalar_product(cfg, args) -> Report:
    if not args.u or not args.v:
        raise ConfigError("--u/--v", "both root files are required")
    u = load_roots(args.u, "--u")
    v = load_roots(args.v, "--v")
    sp = ScalarProducts(cfg.params())
    tol = cfg.tol("scalar_product", 1e-7)
    vals = {"oracle": sp.oracle.scalar_product(v, u)}
    if u.size <= 6 and v.size <= 6:
        vals["partition-sum"] = sp.partition_sum(v, u)
    records = []
    try:
        vals["det-jacobian"] = sp.det_jacobian(v, u)
        vals["det-izergin"] = sp.det_izergin(v, u)
    except NotOnShell as exc:
        records.append(_failure("on-shell", f"NotOnShell: {exc}"))
    names = list(vals)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            t = Tally(f"{a}~{b}", "scalar-product", tol)
            t.add(vals[a], vals[b])
            records.append(t.record())
    rep = Report("scalar-product", records)
    rep.data["values"] = vals
    return rep


def cmd_norm(cfg, args) -> Report:
    if not args.u:
        raise ConfigError("--u", "root file is required")
    u = load_roots(args.u, "--u")
    sp = ScalarProducts(cfg.params())
    oracle = sp.oracle.scalar_product(u, u)
    rep = Report("norm")
    rep.data["oracle"] = oracle
    try:
        n = sp.norm_squared(u)
        lim = sp.norm_limit(u, rng=np.random.default_rng(cfg.seed))
    except NotOnShell as exc:
        rep.extend([_failure("on-shell", f"NotOnShell: {exc}")])
        return rep
    t1 = Tally("norm-vs-oracle", "on-shell-norm", cfg.tol("norm", 1e-7))
    t1.add(n, oracle)
    t2 = Tally("norm-vs-limit", "on-shell-norm-limit", cfg.tol("limit", 1e-4))
    t2.add(n, lim)
    rep.extend([t1.record(), t2.record()])
    rep.data["norm_squared"] = n
    return rep


def cmd_spectrum_check(cfg, args) -> Report:
    bs = BetheSystem(cfg.params())
    sols, coverage = _solutions(cfg, args, bs)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tol("spectrum", 1e-8)
    t = Tally("eigenvalue-match", "bethe-spectrum", tol)
    zs = _z_samples(rng, args.z_samples, bs.theta)
    for z in zs:
        spec, _ = bs.oracle.spectrum(z)
        for s in sols:
            L = bs.eigenvalue(z, s.roots)
            k = int(np.argmin(np.abs(spec - L)))
            t.add(L, spec[k])
    if not sols:
        t.fail("no solution found")
    cov = Tally("coverage", "bethe-completeness", 1.0)
    cov.add_error(1 - coverage, 1 - coverage)
    cov.detail = f"{len(sols)} of {2 ** bs.N} eigenvalues explained (informational)"
    rep = Report("spectrum-check", [t.record(), cov.record()])
    rep.data["coverage"] = coverage
    return rep


HANDLERS = {
    "verify-izergin": cmd_verify_izergin,
    "verify-oracle": cmd_verify_oracle,
    "verify-appendices": cmd_verify_appendices,
    "solve-bethe": cmd_solve_bethe,
    "scalar-product": cmd_scalar_product,
    "norm": cmd_norm,
    "spectrum-check": cmd_spectrum_check,
}


def report_dict(report: Report, cfg: RunConfig, wall_time=None) -> dict:
    out = {
        "command": report.command,
        "config_digest": cfg.digest(),
        "pass": report.passed,
        "records": _jsonable([r.to_dict() for r in report.records]),
        "data": _jsonable(report.data),
    }
    if wall_time is not None:
        out["wall_time"] = wall_time
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mabaxxx", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration (default: built-in example)")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--json-out", help="also write the report to this path")
    parser.add_argument("--u", help="JSON list of [re, im] Bethe roots")
    parser.add_argument("--v", help="JSON list of [re, im] parameters")
    parser.add_argument("--z-samples", type=int, default=7)
    parser.add_argument("--no-timing", action="store_true",
                        help="omit the wall_time field (byte-identical reruns)")
    return parser


def load_config(path, seed=None) -> RunConfig:
    if path is None:
        cfg = RunConfig.from_dict({"model": DEFAULT_MODEL})
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
        cfg = RunConfig.loads(text)
    if seed is not None:
        if seed < 0:
            raise ConfigError("--seed", "must be non-negative")
        cfg.seed = seed
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        cfg = load_config(args.config, args.seed)
        start = time.perf_counter()
        report = HANDLERS[args.command](cfg, args)
        elapsed = None if args.no_timing else round(time.perf_counter() - start, 3)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return 2
    except MabaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(report_dict(report, cfg, elapsed), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.json_out:
        Path(args.json_out).write_text(text, encoding="utf-8")
    for rec in report.failures():
        print(f"FAIL {rec.name}: {rec.detail}", file=sys.stderr)
    return 0 if report.passed else 1
