"""``histcalc`` command line: derive, check and eval over ``.lagr`` models.

Exit codes: 0 success, 1 a check failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import fixtures
from .dsl.parser import ParseError, parse_file
from .dsl.printer import pretty_print, to_structured_obj
from .eom import EomIdeal, reduce_mod_eom
from .forms import exterior_derivative
from .gravity import WrongModelError, global_lorentz_charge, local_lorentz_identity
from .identities import NAMES as IDENTITY_NAMES, run_identity
from .variational import (
    NotASymmetryError,
    euler_lagrange,
    momentaB_check,
    noether_current,
    omega,
    polymomenta,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    path: Optional[str] = None
    fixture: Optional[str] = None
    format: str = "text"
    seed: int = 42
    trials: int = 100
    tol: float = 1e-9
    degree_bound: Optional[int] = None
    fields: list = field(default_factory=list)
    identities: list = field(default_factory=list)
    td_gradient: bool = False
    out: Optional[str] = None


class UsageError(Exception):
    pass


def load_model(cfg: RunConfig):
    if cfg.fixture and cfg.path:
        raise UsageError("give either a model file or --fixture, not both")
    if cfg.fixture:
        try:
            return fixtures.load(cfg.fixture)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    if not cfg.path:
        raise UsageError("a model file or --fixture is required")
    p = Path(cfg.path)
    if not p.is_file():
        raise UsageError(f"no such file: {cfg.path}")
    return parse_file(p)


def _label(name, inst) -> str:
    return name + ("[" + ",".join(map(str, inst)) + "]" if inst else "")


def _show(expr, cfg: RunConfig, model) -> str:
    return pretty_print(expr, cfg.format, registry=model)


def _selected(model, cfg: RunConfig) -> list:
    insts = model.instances()
    if cfg.fields:
        unknown = set(cfg.fields) - {n for n, _ in insts}
        if unknown:
            raise UsageError(f"unknown field(s): {', '.join(sorted(unknown))}")
        insts = [(n, i) for n, i in insts if n in cfg.fields]
    return insts


# derive -----------------------------------------------------------------------


def cmd_derive(cfg: RunConfig, model, symmetries) -> tuple:
    coords = model.chart.coords or None
    if cfg.format == "structured":
        doc = {"command": "derive", "model": model.name, "n": model.n, "fields": []}
        doc["lagrangian"] = to_structured_obj(model.lagrangian, {"quantity": "lagrangian"})
        for name, inst in _selected(model, cfg):
            P = model.momentum(name, inst)
            entry = {
                "field": name,
                "slots": list(inst),
                "momentum": to_structured_obj(P, {"quantity": "momentum", "field": _label(name, inst)}),
                "polymomenta": {
                    ",".join(coords[m] if coords else str(m) for m in mu): to_structured_obj(v)
                    for mu, v in polymomenta(P).items()
                },
                "euler_lagrange": to_structured_obj(
                    euler_lagrange(model, name, inst), {"quantity": "euler_lagrange", "field": _label(name, inst)}
                ),
            }
            doc["fields"].append(entry)
        return json.dumps(doc, ensure_ascii=False, indent=1), EXIT_OK
    lines = [f"model {model.name or '<unnamed>'}: n = {model.n}, fields {', '.join(model.registry.fields)}"]
    lines.append(f"L = {_show(model.lagrangian, cfg, model)}")
    for name, inst in _selected(model, cfg):
        lab = _label(name, inst)
        P = model.momentum(name, inst)
        lines.append(f"field {lab}")
        lines.append(f"  momentum P = {_show(P, cfg, model)}")
        poly = polymomenta(P)
        if poly:
            lines.append("  polymomenta:")
            for mu, v in poly.items():
                idx = ",".join(coords[m] if coords else str(m) for m in mu)
                lines.append(f"    P^[{idx}] = {pretty_print(v, cfg.format, coords)}")
        lines.append(f"  EL: {_show(euler_lagrange(model, name, inst), cfg, model)} = 0")
    return "\n".join(lines), EXIT_OK


# check ------------------------------------------------------------------------


@dataclass
class CheckItem:
    name: str
    ok: bool
    detail: str = ""
    certificate: Optional[list] = None
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


def _reduce_item(name, expr, ideal, bound) -> CheckItem:
    t0 = time.perf_counter()
    if not expr:
        return CheckItem(name, True, "identically zero", [], time.perf_counter() - t0)
    rem, cert = reduce_mod_eom(expr, ideal, degree_bound=bound)
    dt = time.perf_counter() - t0
    if rem:
        return CheckItem(name, False, f"no certificate within degree bound ({len(rem)} terms remain)", None, dt)
    return CheckItem(name, True, f"certificate with {len(cert.entries)} multipliers", cert.to_obj(), dt)


def run_checks(model, symmetries, cfg: RunConfig) -> list:
    items = []
    t0 = time.perf_counter()
    mb = momentaB_check(model)
    items.append(CheckItem("momentaB", not mb, "" if not mb else f"{len(mb)} residual terms",
                           seconds=time.perf_counter() - t0))
    ideal = EomIdeal.from_model(model)
    items.append(_reduce_item("d omega mod EOM", exterior_derivative(omega(model), 3), ideal, cfg.degree_bound))
    for sym in symmetries:
        t0 = time.perf_counter()
        try:
            j = noether_current(model, sym, ideal, cfg.degree_bound)
        except NotASymmetryError as exc:
            items.append(CheckItem(f"symmetry {sym.name}", False,
                                   f"not a symmetry ({len(exc.remainder)} terms of delta L - dX survive)",
                                   seconds=time.perf_counter() - t0))
            continue
        items.append(CheckItem(f"symmetry {sym.name}", True, f"current with {len(j)} terms",
                               seconds=time.perf_counter() - t0))
        items.append(_reduce_item(f"d j[{sym.name}] mod EOM", exterior_derivative(j, 3), ideal, cfg.degree_bound))
    try:
        charges = global_lorentz_charge(model)
        local = local_lorentz_identity(model)
    except WrongModelError:
        charges = local = {}
    for (A, B), J in charges.items():
        items.append(_reduce_item(f"d J[{A},{B}] mod EOM", exterior_derivative(J, 3), ideal, cfg.degree_bound))
    for (A, B), expr in local.items():
        items.append(_reduce_item(f"local Lorentz identity [{A},{B}] mod EOM", expr, ideal, cfg.degree_bound))
    for name in IDENTITY_NAMES:
        t0 = time.perf_counter()
        rep = run_identity(name, cfg.trials, cfg.seed, cfg.tol, model=model)
        items.append(CheckItem(f"numeric {name}", rep.ok, rep.line().split(": ", 1)[1],
                               seconds=time.perf_counter() - t0))
    return items


def cmd_check(cfg: RunConfig, model, symmetries) -> tuple:
    items = run_checks(model, symmetries, cfg)
    failed = [i for i in items if not i.ok]
    code = EXIT_FAIL if failed else EXIT_OK
    if cfg.format == "structured":
        doc = {
            "command": "check",
            "model": model.name,
            "seed": cfg.seed,
            "trials": cfg.trials,
            "tol": cfg.tol,
            "items": [
                {"name": i.name, "ok": i.ok, "detail": i.detail, "certificate": i.certificate}
                for i in items
            ],
            "ok": not failed,
        }
        return json.dumps(doc, ensure_ascii=False, indent=1), code
    lines = [i.line() for i in items]
    if failed:
        lines.append(f"{len(failed)} check(s) failed: " + "; ".join(i.name for i in failed))
    else:
        lines.append(f"all {len(items)} checks passed")
    return "\n".join(lines), code


# eval -------------------------------------------------------------------------


def td_gradient_table(model, sizes=(16, 32, 64, 128)) -> list:
    """``(N, h, max|difference|)`` rows for ``q = sin t`` on ``[0, 1]``."""
    from .oracle import discrete_action_gradient

    rows = []
    for N in sizes:
        t = np.linspace(0.0, 1.0, N + 1)
        h = 1.0 / N
        diff = discrete_action_gradient(model, np.sin(t), h)
        rows.append((N, h, float(np.max(np.abs(diff)))))
    return rows


def cmd_eval(cfg: RunConfig, model, symmetries) -> tuple:
    names = cfg.identities or ([] if cfg.td_gradient else list(IDENTITY_NAMES))
    reports = [run_identity(n, cfg.trials, cfg.seed, cfg.tol, model=model) for n in names]
    rows = []
    if cfg.td_gradient:
        try:
            rows = td_gradient_table(model)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    ok = all(r.ok for r in reports)
    if cfg.format == "structured":
        doc = {
            "command": "eval", "model": model.name, "seed": cfg.seed, "trials": cfg.trials, "tol": cfg.tol,
            "identities": [{"name": r.name, "ok": r.ok, "max_deviation": r.max_dev,
                            "symbolic_failures": r.symbolic_failures,
                            "numeric_failures": r.numeric_failures} for r in reports],
            "td_gradient": [{"N": N, "h": h, "max_abs_difference": e} for N, h, e in rows],
        }
        return json.dumps(doc, indent=1), EXIT_OK if ok else EXIT_FAIL
    lines = [r.line() for r in reports]
    if rows:
        lines.append("tD action-gradient cross-check, q = sin t on [0, 1]")
        lines.append(f"{'N':>6} {'h':>10} {'max|diff|':>12} {'ratio':>7}")
        prev = None
        for N, h, e in rows:
            ratio = f"{prev / e:7.2f}" if prev and e else "      -"
            lines.append(f"{N:>6} {h:>10.5f} {e:>12.3e} {ratio}")
            prev = e
    return "\n".join(lines), EXIT_OK if ok else EXIT_FAIL


# entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="histcalc", description="Variational calculus on form-valued histories.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model", nargs="?", help="path to a .lagr model file")
    common.add_argument("--fixture", help=f"built-in model: {', '.join(fixtures.names())}")
    common.add_argument("--format", choices=("text", "latex", "structured"), default="text")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--degree-bound", type=int, default=None,
                        help="multiplier degree bound for on-shell reduction (default: expression degree)")
    common.add_argument("--field", action="append", default=[], dest="fields",
                        help="restrict output to this field (repeatable)")
    common.add_argument("--out", help="write the report to this path instead of stdout")
    sub.add_parser("derive", parents=[common], help="momenta, polymomenta and Euler-Lagrange residuals")
    sub.add_parser("check", parents=[common], help="identities, on-shell conservation and symmetries")
    ev = sub.add_parser("eval", parents=[common], help="numeric-oracle identity checks")
    ev.add_argument("--identity", action="append", default=[], dest="identities",
                    choices=IDENTITY_NAMES)
    ev.add_argument("--tD-gradient", action="store_true", dest="td_gradient",
                    help="finite-difference action-gradient convergence table (n = 1 models)")
    return p


COMMANDS = {"derive": cmd_derive, "check": cmd_check, "eval": cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    cfg = RunConfig(
        command=args.command, path=args.model, fixture=args.fixture, format=args.format,
        seed=args.seed, trials=args.trials, tol=args.tol, degree_bound=args.degree_bound,
        fields=args.fields, identities=getattr(args, "identities", []),
        td_gradient=getattr(args, "td_gradient", False), out=args.out,
    )
    if hasattr(sys.stdout, "reconfigure"):
        sys.stdout.reconfigure(encoding="utf-8")
    if cfg.trials < 1 or cfg.tol <= 0:
        print("histcalc: error: --trials must be positive and --tol > 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        model, symmetries = load_model(cfg)
        text, code = COMMANDS[cfg.command](cfg, model, symmetries)
    except ParseError as exc:
        print(f"histcalc: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"histcalc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        Path(cfg.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
