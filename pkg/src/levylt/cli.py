"""Command line entry point: ``levylt <subcommand> [options]``.

Settings are layered defaults < config file (TOML or JSON) < LEVYLT_* env
vars < flags. Exit status: 0 all gates passed, 1 numeric gate failure or a
downstream numerical error, 2 usage/validation error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .exponent import ConvergenceError, DomainError, LevyExponent, verify_conditions
from .quadrature import QuadratureConfig, QuadratureError

SUBCOMMANDS = ("constants", "density", "simulate", "rw", "clt", "audit")
STOCHASTIC = ("simulate", "rw", "clt")
ENV_PREFIX = "LEVYLT_"

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2

IDENTITY_TOL = 1e-8
PARSEVAL_TOL = 1e-5


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    exponent: dict = field(default_factory=lambda: {"family": "brownian"})
    quadrature: dict = field(default_factory=dict)
    t: float = 1.0
    dt: float | None = None
    h_grid: float = 0.1
    paths: int = 100
    limit_paths: int | None = None
    limit_dt: float = 1e-5
    limit_h_grid: float = 0.005
    n: int = 1000
    walks: int = 100
    seed: int | None = None
    threads: int = 1
    op: str = "p"
    s: float = 1.0
    x: list = field(default_factory=lambda: [0.0])
    gamma: float = 1.0
    t_list: list = field(default_factory=lambda: [1e2, 1e3, 1e4])
    radii: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    out: str | None = None
    report: str | None = None
    samples_csv: str | None = None

    def step(self) -> float:
        """dt, defaulting to t / 1e5 capped at 0.05."""
        return self.dt if self.dt is not None else min(self.t / 1e5, 0.05)

    def validate(self) -> list[str]:
        errs = []
        if self.subcommand not in SUBCOMMANDS:
            errs.append(f"subcommand: must be one of {', '.join(SUBCOMMANDS)}")
        try:
            self.exp()
        except (DomainError, TypeError, ValueError) as e:
            errs.append(str(e))
        try:
            self.qcfg()
        except (TypeError, ValueError) as e:
            errs.append(f"quadrature: {e}")
        for name in ("t", "h_grid", "s", "limit_dt", "limit_h_grid"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                errs.append(f"{name}: must be positive, got {v!r}")
        if self.dt is not None and not self.dt > 0:
            errs.append(f"dt: must be positive, got {self.dt!r}")
        for name in ("paths", "n", "walks", "threads"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                errs.append(f"{name}: must be a positive integer, got {v!r}")
        if self.limit_paths is not None and not (isinstance(self.limit_paths, int) and self.limit_paths >= 1):
            errs.append(f"limit_paths: must be a positive integer, got {self.limit_paths!r}")
        if isinstance(self.h_grid, (int, float)) and self.h_grid > 0:
            m = round(1.0 / self.h_grid)
            if self.h_grid > 1 or abs(m * self.h_grid - 1.0) > 1e-9:
                errs.append(f"h_grid: 1/h_grid must be an integer, got {self.h_grid!r}")
        if self.subcommand in STOCHASTIC and self.seed is None:
            errs.append("seed: required for stochastic subcommands")
        if self.seed is not None and not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            errs.append(f"seed: must be a 64-bit non-negative integer, got {self.seed!r}")
        if self.subcommand == "density":
            from .density import OPS

            if self.op not in OPS:
                errs.append(f"op: must be one of {sorted(OPS)}, got {self.op!r}")
        if self.subcommand == "clt" and self.paths < 200:
            errs.append(f"paths: the comparison needs at least 200 samples, got {self.paths}")
        return errs

    def exp(self) -> LevyExponent:
        return LevyExponent.from_dict(self.exponent)

    def qcfg(self) -> QuadratureConfig:
        return QuadratureConfig(**self.quadrature)

    def to_dict(self) -> dict:
        """Config echo for output headers. Worker count and output destinations
        are left out so that outputs are byte-identical under any ``threads``."""
        d = dataclasses.asdict(self)
        for k in ("threads", "out", "report", "samples_csv"):
            del d[k]
        return d


# ---------------------------------------------------------------------------
# config layering

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_INT_FIELDS = {"paths", "limit_paths", "n", "walks", "seed", "threads"}
_FLOAT_FIELDS = {"t", "dt", "h_grid", "limit_dt", "limit_h_grid", "s", "gamma"}
_LIST_FIELDS = {"x", "t_list", "radii"}
_EXP_KEYS = {"family", "beta", "scale", "components"}
_QUAD_KEYS = {f.name for f in dataclasses.fields(QuadratureConfig)}


def load_config_file(path: str) -> dict:
    p = Path(path)
    text = p.read_bytes()
    if p.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    return tomllib.loads(text.decode())


def _coerce(name: str, value):
    if value is None:
        return None
    try:
        if name in _INT_FIELDS:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        if name in _FLOAT_FIELDS:
            return float(value)
        if name in _LIST_FIELDS:
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split()]
            return [float(v) for v in value]
    except (TypeError, ValueError):
        raise UsageError(f"{name}: cannot interpret {value!r}") from None
    return value


def _merge(base: dict, layer: dict):
    for k, v in layer.items():
        k = k.replace("-", "_")
        if v is None:
            continue
        if k in ("exponent", "quadrature") and isinstance(v, dict):
            base[k] = {**base.get(k, {}), **v}
        elif k in _EXP_KEYS:
            exp = dict(base.get("exponent", {}))
            if k == "family" and exp.get("family") != v:
                exp = {}
            exp[k] = v
            base["exponent"] = exp
        elif k in _QUAD_KEYS:
            base.setdefault("quadrature", {})[k] = v
        elif k in _FIELD_TYPES:
            base[k] = v
        else:
            raise UsageError(f"{k}: unknown configuration field")


def _env_layer(environ) -> dict:
    out = {}
    for key, v in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in _FIELD_TYPES or name in _EXP_KEYS or name in _QUAD_KEYS:
            out[name] = v
    return out


def _parse_components(text: str):
    """'1:1.3,0.5:2' -> [(1.0, 1.3), (0.5, 2.0)]."""
    try:
        return [tuple(float(v) for v in part.split(":")) for part in text.split(",") if part]
    except ValueError:
        raise UsageError(f"components: cannot parse {text!r}; expected w:beta,w:beta") from None


def build_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    merged: dict = {"subcommand": args.subcommand}
    if args.config:
        try:
            _merge(merged, load_config_file(args.config))
        except (OSError, ValueError) as e:
            raise UsageError(f"config: {e}") from None
    _merge(merged, _env_layer(environ))
    flags = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config", "func")}
    if isinstance(flags.get("components"), str):
        flags["components"] = _parse_components(flags["components"])
    _merge(merged, flags)
    merged["subcommand"] = args.subcommand
    exp = merged.get("exponent")
    if exp is not None and "family" not in exp:
        exp["family"] = "mixture" if "components" in exp else "stable" if "beta" in exp else "brownian"
    for k in list(merged):
        if k in _FIELD_TYPES:
            merged[k] = _coerce(k, merged[k])
    exp = merged.get("exponent", {})
    for k in ("beta", "scale"):
        if k in exp and isinstance(exp[k], str):
            exp[k] = _coerce("t", exp[k])
    for k, v in list(merged.get("quadrature", {}).items()):
        if isinstance(v, str):
            merged["quadrature"][k] = float(v) if k in ("abs_tol", "rel_tol", "p_truncation") else int(float(v))
    return RunConfig(**merged)


# ---------------------------------------------------------------------------
# output

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def header_lines(cfg: RunConfig) -> list[str]:
    return [f"# levylt {__version__}", "# config: " + json.dumps(cfg.to_dict(), sort_keys=True)]


def write_csv(cfg: RunConfig, columns, rows, path: str | None):
    buf = io.StringIO()
    for line in header_lines(cfg):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    _emit(buf.getvalue(), path)


def _jsonable(o):
    if isinstance(o, dict):
        return {k: _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    return o


def write_json(cfg: RunConfig, payload: dict, path: str | None):
    doc = {"version": __version__, "config": cfg.to_dict(), **payload}
    _emit(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", path)


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# subcommands (each returns an exit status)

def cmd_constants(cfg: RunConfig) -> int:
    from .constants import constants_report

    rep = constants_report(cfg.exp(), cfg.t_list, cfg.qcfg(), cfg.radii)
    write_json(cfg, {"report": dataclasses.asdict(rep)}, cfg.out)
    return EXIT_OK


def cmd_density(cfg: RunConfig) -> int:
    from .density import DensityRequest, evaluate

    rows = []
    for x in cfg.x:
        val, err = evaluate(DensityRequest(cfg.exp(), cfg.s, x, cfg.gamma), cfg.op, cfg.qcfg())
        if cfg.op == "p" and -cfg.qcfg().abs_tol <= val < 0:
            val = 0.0  # quadrature noise; clamped only here, never inside integrals
        rows.append((cfg.s, x, cfg.gamma, val, err))
    write_csv(cfg, ("s", "x", "gamma", "value", "err_estimate"), rows, cfg.out)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    from .simulate import run_paths

    I, a = run_paths(cfg.exp(), cfg.t, cfg.step(), cfg.h_grid, cfg.paths, cfg.seed, cfg.threads)
    write_csv(cfg, ("path_id", "I_value", "alpha_value"),
              ((i, I[i], a[i]) for i in range(len(I))), cfg.out)
    return EXIT_OK


def cmd_rw(cfg: RunConfig) -> int:
    from .simulate import (InvariantViolation, dobrushin_numerator, hamiltonian_double_sum,
                           hamiltonian_increments, random_walk)

    rows, bad = [], 0
    for i in range(cfg.walks):
        w = random_walk(cfg.n, cfg.seed, i)
        h, l2 = hamiltonian_double_sum(w), hamiltonian_increments(w)
        bad += h != l2
        rows.append((i, h, l2, dobrushin_numerator(w)))
    write_csv(cfg, ("walk_id", "H_n", "l2_form", "dobrushin_numerator"), rows, cfg.out)
    if bad:
        print(f"rw: {bad} walks violate the Hamiltonian identity", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_clt(cfg: RunConfig) -> int:
    from .clt import LimitParams, compare_distributions, run_clt

    ss = run_clt(cfg.exp(), cfg.t, cfg.step(), cfg.h_grid, cfg.paths, cfg.seed, cfg.limit_paths,
                 LimitParams(cfg.limit_dt, cfg.limit_h_grid), cfg.threads, cfg=cfg.qcfg())
    rep = compare_distributions(ss)
    meta = {k: v for k, v in ss.meta.items() if k not in ("I", "alpha", "limit_alpha")}
    payload = {"comparison": rep.to_dict(), "meta": meta, "samples": ss.samples,
               "limit_samples": ss.limit_samples, "I_values": ss.meta["I"]}
    write_json(cfg, payload, cfg.report or cfg.out)
    if cfg.samples_csv:
        cols = ("path_id", "statistic", "limit_sample", "I_value", "alpha_value", "limit_alpha")
        m = ss.meta
        cols_data = (ss.samples, ss.limit_samples, m["I"], m["alpha"], m["limit_alpha"])
        n = max(len(c) for c in cols_data)
        rows = ((i, *(c[i] if i < len(c) else None for c in cols_data)) for i in range(n))
        write_csv(cfg, cols, rows, cfg.samples_csv)
    return EXIT_OK if rep.passed else EXIT_GATE


def cmd_audit(cfg: RunConfig) -> int:
    from .constants import c_psi0, c_psi1, identity_213, parseval_pair

    exp, q = cfg.exp(), cfg.qcfg()
    cond = verify_conditions(exp, q)
    val, res = identity_213(exp, q)
    pars = []
    for r in cfg.radii:
        for rp in cfg.radii:
            lhs, rhs = parseval_pair(exp, r, rp, q)
            pars.append({"r": r, "r_prime": rp, "lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)})
    gates = {
        "conditions": cond.passed,
        "identity_213": res <= IDENTITY_TOL,
        "parseval": all(p["residual"] <= PARSEVAL_TOL for p in pars),
    }
    payload = {"c_psi_0": c_psi0(exp, q), "c_psi_1": c_psi1(exp, q), "identity_213_value": val,
               "identity_213_residual": res, "parseval": pars, "conditions": dataclasses.asdict(cond),
               "gates": gates, "passed": all(gates.values())}
    write_json(cfg, payload, cfg.out)
    return EXIT_OK if payload["passed"] else EXIT_GATE


COMMANDS = {
    "constants": cmd_constants, "density": cmd_density, "simulate": cmd_simulate,
    "rw": cmd_rw, "clt": cmd_clt, "audit": cmd_audit,
}


def _add_common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=None, help="TOML or JSON file")
    p.add_argument("--family", default=S, help="brownian | stable | mixture")
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--scale", type=float, default=S)
    p.add_argument("--components", default=S, help="mixture parts as w:beta,w:beta")
    p.add_argument("--abs-tol", type=float, default=S)
    p.add_argument("--rel-tol", type=float, default=S)
    p.add_argument("--p-truncation", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--threads", type=int, default=S)
    p.add_argument("--out", default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="levylt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"levylt {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("constants", help="c_psi0, c_psi1, identities and exact means")
    _add_common(p)
    p.add_argument("--t-list", nargs="+", type=float, default=S)
    p.add_argument("--radii", nargs="+", type=float, default=S)

    p = sub.add_parser("density", help="densities, differences and their time integrals")
    _add_common(p)
    p.add_argument("--op", default=S, help="p | d1 | d2 | u | v | w")
    p.add_argument("--s", type=float, default=S, help="time (t for u, v, w)")
    p.add_argument("--x", nargs="+", type=float, default=S)
    p.add_argument("--gamma", type=float, default=S)

    for name, helptext in (("simulate", "Monte Carlo samples of I and alpha"),
                           ("clt", "statistic vs limit-law comparison")):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--t", type=float, default=S)
        p.add_argument("--dt", type=float, default=S)
        p.add_argument("--h-grid", type=float, default=S)
        p.add_argument("--paths", type=int, default=S)
        if name == "clt":
            p.add_argument("--limit-paths", type=int, default=S)
            p.add_argument("--limit-dt", type=float, default=S)
            p.add_argument("--limit-h-grid", type=float, default=S)
            p.add_argument("--report", default=S)
            p.add_argument("--samples-csv", default=S, help="per-path CSV of both samples")

    p = sub.add_parser("rw", help="lattice walk Hamiltonians")
    _add_common(p)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--walks", type=int, default=S)

    p = sub.add_parser("audit", help="regularity conditions and identity gates")
    _add_common(p)
    p.add_argument("--radii", nargs="+", type=float, default=S)
    return parser


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        cfg = build_config(args, environ)
    except (UsageError, TypeError) as e:
        print(f"levylt: {e}", file=sys.stderr)
        return EXIT_USAGE
    errs = cfg.validate()
    if errs:
        for e in errs:
            print(f"levylt: invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except (QuadratureError, ConvergenceError, DomainError, ValueError, ArithmeticError) as e:
        print(f"levylt {cfg.subcommand}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_GATE


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
