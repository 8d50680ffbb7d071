"""Command-line front end: problem files, dispatch, report serialization, exit codes."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from . import ordinal
from .errors import BergeCheckError, ProblemIOError, SchemaError
from .harness import (
    HYPOTHESIS_FAILED,
    CONTRADICTION,
    INSTANCE_KINDS,
    THEOREM_IDS,
    PathBudget,
    Tolerances,
    generate_instance,
    verify,
)
from .infcompact import (
    Objective,
    check_function_lsc,
    check_inf_compact,
    check_k_inf_compact,
    check_kn_inf_compact,
    default_lambdas,
)
from .setmap import (
    SetValuedMap,
    check_k_upper_semicompact,
    check_kn_upper_semicompact,
    check_map_lsc,
    check_map_usc,
    graph_sample,
)
from .solver import solve
from .topo import CompactWindow, GridSpace, build_grid, encode_float, exhaustive_paths, generate_paths, merge_reports

SCHEMA_VERSION = 1
CHECK_NAMES = (
    "map_lsc", "map_usc", "k_upper_semicompact", "kn_upper_semicompact",
    "function_lsc", "inf_compact", "k_inf_compact", "kn_inf_compact",
)
DEFAULT_CHECKS = ("map_lsc", "map_usc", "function_lsc", "k_inf_compact")
DEFAULT_PROBES = ("0", "w", "w^2 + 1")
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_WARN = 0, 1, 2, 3


@dataclass
class ProblemFile:
    objective: Objective
    map: SetValuedMap
    tolerances: Tolerances = field(default_factory=Tolerances)
    budget: PathBudget = field(default_factory=PathBudget)
    windows: list[CompactWindow] = field(default_factory=list)
    checks: tuple[str, ...] = DEFAULT_CHECKS
    theorems: tuple[str, ...] = ("maximum-kn",)


# ------------------------------------------------------------------ parsing

def _req(obj: dict, key: str, where: str = "") -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(where + key, "required field is missing")
    return obj[key]


def _space(spec: Any, name: str) -> GridSpace:
    if not isinstance(spec, dict):
        raise SchemaError(name, "must be an object with 'windows' and 'counts'")
    windows = _req(spec, "windows", name + ".")
    counts = _req(spec, "counts", name + ".")
    try:
        return build_grid(windows, counts, closed=bool(spec.get("closed", False)))
    except (TypeError, ValueError) as exc:
        raise SchemaError(name, str(exc)) from exc


def _number(v: Any, name: str) -> float:
    if isinstance(v, str) and v in ("+inf", "-inf", "inf"):
        return math.inf if v != "-inf" else -math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(name, f"expected a number, got {v!r}")
    return float(v)


def _tolerances(spec: dict) -> Tolerances:
    if not isinstance(spec, dict):
        raise SchemaError("tolerances", "must be an object")
    known = {"delta", "eps", "eps_val", "tau", "lambdas"}
    extra = set(spec) - known
    if extra:
        raise SchemaError("tolerances." + sorted(extra)[0], "unknown field")
    kw: dict[str, Any] = {}
    for k in ("delta", "eps", "eps_val", "tau"):
        if spec.get(k) is not None:
            kw[k] = _number(spec[k], "tolerances." + k)
    if "lambdas" in spec and spec["lambdas"] is not None:
        lam = spec["lambdas"]
        if not isinstance(lam, list):
            raise SchemaError("tolerances.lambdas", f"expected a list; wrap the scalar as [{lam!r}]")
        kw["lambdas"] = tuple(_number(v, "tolerances.lambdas") for v in lam)
    return Tolerances(**kw)


def _budget(spec: dict) -> PathBudget:
    if not isinstance(spec, dict):
        raise SchemaError("paths", "must be an object")
    kw = {}
    for k in ("length", "count", "seed", "reach", "selections"):
        if k in spec:
            if not isinstance(spec[k], int) or isinstance(spec[k], bool):
                raise SchemaError("paths." + k, "expected an integer")
            kw[k] = spec[k]
    return PathBudget(**kw)


def _names(spec: Any, allowed: Sequence[str], name: str) -> tuple[str, ...]:
    if isinstance(spec, str) or not isinstance(spec, list):
        raise SchemaError(name, "expected a list of names")
    for s in spec:
        if s not in allowed:
            raise SchemaError(name, f"unknown name {s!r}; choose from {', '.join(allowed)}")
    return tuple(spec)


def problem_from_dict(data: dict) -> ProblemFile:
    if not isinstance(data, dict):
        raise SchemaError("<root>", "problem file must hold a JSON object")
    if "generator" in data:
        g = data["generator"]
        try:
            u, m = generate_instance(_req(g, "kind", "generator."), _req(g, "sizes", "generator."), int(g.get("seed", 0)))
        except ValueError as exc:
            raise SchemaError("generator", str(exc)) from exc
    else:
        x_grid = _space(_req(data, "x_space"), "x_space")
        y_grid = _space(_req(data, "y_space"), "y_space")
        text = _req(data, "objective")
        if not isinstance(text, str):
            raise SchemaError("objective", "expected an expression string")
        u = Objective.parse(text, x_grid.dim, y_grid.dim)
        if "images" in data:
            table = {}
            for row in data["images"]:
                table[tuple(_req(row, "x", "images[]."))] = [tuple(y) for y in _req(row, "y", "images[].")]
            m = SetValuedMap.from_table(x_grid, y_grid, table)
        else:
            cons = data.get("constraints", [])
            if isinstance(cons, str) or not isinstance(cons, list):
                raise SchemaError("constraints", "expected a list of expression strings")
            m = SetValuedMap.from_constraints(x_grid, y_grid, cons)
    windows = []
    for i, box in enumerate(data.get("windows", [])):
        try:
            windows.append(CompactWindow.from_box(m.x_grid, box))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"windows[{i}]", str(exc)) from exc
    return ProblemFile(
        u, m,
        _tolerances(data.get("tolerances", {})),
        _budget(data.get("paths", {})),
        windows,
        _names(data["checks"], CHECK_NAMES, "checks") if "checks" in data else DEFAULT_CHECKS,
        _names(data["theorems"], THEOREM_IDS, "theorems") if "theorems" in data else ("maximum-kn",),
    )


def parse_problem_file(path: str | Path) -> ProblemFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ProblemIOError(f"cannot read problem file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from exc
    return problem_from_dict(data)


# ---------------------------------------------------------------- commands

def run_checks(p: ProblemFile) -> list[dict]:
    tol = p.tolerances.resolve(p.map.x_grid, p.map.y_grid)
    full_w = CompactWindow.full(p.map.x_grid)
    full = graph_sample(p.map, full_w)
    windows = [full_w] + p.windows
    graph_delta = math.hypot(tol.delta, tol.eps)
    b = p.budget
    paths = exhaustive_paths(full_w, tol.delta, max(b.length, 6))
    for x in p.map.x_grid.indices():
        paths += generate_paths(p.map.x_grid, x, b.length, b.count, b.seed, b.reach)
    lambdas = list(tol.lambdas) if tol.lambdas else None
    out = []
    for name in p.checks:
        if name == "map_lsc":
            r = check_map_lsc(p.map, tol.delta, tol.eps)
        elif name == "map_usc":
            r = check_map_usc(p.map, tol.delta, tol.eps)
        elif name == "k_upper_semicompact":
            parts = [check_k_upper_semicompact(p.map, w, tol.delta, tol.eps) for w in windows]
            r = merge_reports(name, parts, {"delta": tol.delta, "eps": tol.eps})
        elif name == "kn_upper_semicompact":
            r = check_kn_upper_semicompact(p.map, paths, tol.eps, b.selections, b.seed)
        elif name == "function_lsc":
            r = check_function_lsc(p.objective, full, graph_delta, tol.eps_val)
        elif name == "inf_compact":
            r = check_inf_compact(p.objective, full, lambdas, graph_delta, tol.eps_val,
                                  eps=tol.eps, x_delta=tol.delta)
        elif name == "k_inf_compact":
            r = check_k_inf_compact(p.objective, p.map, windows, lambdas, graph_delta, tol.eps_val,
                                    eps=tol.eps, x_delta=tol.delta)
        else:  # kn_inf_compact
            lams = lambdas or default_lambdas(p.objective, full)
            parts = [check_kn_inf_compact(p.objective, p.map, paths, lam, tol.eps, b.selections, b.seed,
                                          delta=graph_delta, eps_val=tol.eps_val) for lam in lams]
            r = merge_reports(name, parts, {"eps": tol.eps, "delta": graph_delta, "lambdas": lams})
        out.append(r.to_dict())
    return out


def run_solve(p: ProblemFile) -> list[dict]:
    v, sol = solve(p.objective, p.map, p.tolerances.tau)
    g, yg = p.map.x_grid, p.map.y_grid
    rows = [
        {"x": list(g.coord(x)), "v": encode_float(v[x]), "argmin": [list(yg.coord(y)) for y in sorted(sol[x])]}
        for x in g.indices()
    ]
    return [{"check": "solve", "status": "pass", "tau": p.tolerances.tau, "points": rows}]


def run_verify(p: ProblemFile) -> list[dict]:
    return [verify(t, p.objective, p.map, p.tolerances, p.budget, p.windows).to_dict() for t in p.theorems]


def run_ordinal(probes: Sequence[str], seed: int) -> list[dict]:
    parsed = [ordinal.parse_ordinal(s) for s in probes]
    return [ordinal.counterexample_report(parsed, seed=seed)]


def exit_code(results: Sequence[dict], strict_warn: bool) -> int:
    """Pure function of the statuses and verdicts in ``results``."""
    marks = {r.get("status") or r.get("verdict") for r in results}
    if marks & {"fail", CONTRADICTION}:
        return EXIT_FAIL
    if strict_warn and marks & {"warn", HYPOTHESIS_FAILED}:
        return EXIT_WARN
    return EXIT_OK


# ---------------------------------------------------------------- rendering

def to_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def to_text(doc: dict) -> str:
    lines = [f"bergecheck {doc['command']}  exit={doc['exit_code']}"]
    for r in doc["results"]:
        if "verdict" in r:
            lines.append(f"theorem {r['theorem']:<22} {r['verdict']}")
            for role in ("hypotheses", "conclusions"):
                for c in r[role]:
                    lines.append(f"  {'hypothesis' if role == 'hypotheses' else 'conclusion'}: {c['check']:<26} {c['status']}")
            if r["witness"]:
                lines.append(f"  witness: {r['witness']['reason']} at {_fmt(r['witness']['points'])}")
        elif r["check"] == "solve":
            lines.append(f"{'x':<24} {'v(x)':>12}  argmin")
            for row in r["points"]:
                lines.append(f"{_fmt(row['x']):<24} {_fmt(row['v']):>12}  {_fmt(row['argmin'])}")
        elif r["check"] == "ordinal_counterexample":
            lines.append(f"u(x,y) = 0 for x != ω₁, u(ω₁,y) = 1;  v(ω₁) = {r['v_omega1']}")
            for w in r["witnesses"]:
                lines.append(f"  probe {w['probe']:<12} witness α = {w['witness']:<14} u(α,y) = v(α) = {w['v_witness']}")
            lines.append(f"  {r['level_set']}")
            lines.append(f"  {r['inequality']}")
            kb = r["k_batch"]
            lines.append(f"  K batch: {kb['count']} finite subsets (max size {kb['max_size']}), all compact: {kb['all_compact']}")
        else:
            lines.append(f"check {r['check']:<26} {r['status']}")
            for w in r.get("witnesses", [])[:5]:
                lines.append(f"  witness: {w['reason']} at {_fmt(w['points'])}")
    return "\n".join(lines)


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bergecheck", description="Certify semicontinuity hypotheses and verify maximum theorems on lattices.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("check", "solve", "verify", "ordinal-demo"):
        sp = sub.add_parser(name)
        if name != "ordinal-demo":
            sp.add_argument("--problem", required=True, help="path to a JSON problem file")
        else:
            sp.add_argument("--probe", action="append", help="probe ordinal such as 'w^2 + 1' (repeatable)")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--seed", type=int, default=None, help="override the path/selection seed")
        sp.add_argument("--strict-warn", action="store_true", help="exit 3 when the worst outcome is a warning")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "ordinal-demo":
            results = run_ordinal(args.probe or DEFAULT_PROBES, args.seed or 0)
        else:
            p = parse_problem_file(args.problem)
            if args.seed is not None:
                p.budget = PathBudget(p.budget.length, p.budget.count, args.seed, p.budget.reach, p.budget.selections)
            results = {"check": run_checks, "solve": run_solve, "verify": run_verify}[args.command](p)
    except (BergeCheckError, ValueError, OSError) as exc:
        print(f"bergecheck: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    code = exit_code(results, args.strict_warn)
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "exit_code": code, "results": results}
    print(to_json(doc) if args.format == "json" else to_text(doc))
    return code


if __name__ == "__main__":
    sys.exit(main())
