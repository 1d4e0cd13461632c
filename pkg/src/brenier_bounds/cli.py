"""Command-line entry point: scenario configs, subcommands, serialization, sweeps.

Subcommands: bounds, transport, verify, sweep. Exit codes are a stable
contract: 0 pass, 1 input error, 2 void-bound/solver error, 3 verification
failure. Config files are strict JSON: unknown keys are rejected at every
level so sweep definitions cannot silently misconfigure tolerances.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .bounds import (finite_global_sharp_bound, global_bound, local_bound,
                     mglob_uniformity_check)
from .errors import BrenierBoundsError, InvalidOrder, VoidBound
from .extparam import INF, ExtParam
from .potentials import PotentialSpec
from .transport import default_grid, lipschitz_empirical, radial_map
from .verify import (Scenario, limit_sweep_caffarelli, limit_sweep_D,
                     run_scenario)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VOID = 2
EXIT_VERIFY = 3


class ConfigError(ValueError):
    """Malformed or non-strict configuration."""


def _reject_unknown(block: dict, allowed: set, ctx: str):
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"{ctx}: unknown keys {unknown}")


def _parse_extended(token, ctx: str) -> ExtParam:
    try:
        return ExtParam.parse(token)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def _parse_radius(token, ctx: str) -> float:
    if isinstance(token, str):
        if token.strip().lower() == "inf":
            return math.inf
        try:
            return float(token)
        except ValueError as exc:
            raise ConfigError(f"{ctx}: {exc}") from exc
    return float(token)


def _parse_potential(block: dict, n: int, ctx: str) -> PotentialSpec:
    if not isinstance(block, dict):
        raise ConfigError(f"{ctx}: potential must be an object")
    family = block.get("family")
    if family == "quadratic":
        _reject_unknown(block, {"family", "coefficient", "hess_upper", "hess_lower"}, ctx)
        a = float(block.get("coefficient", 1.0))
        spec = PotentialSpec.quadratic(a, n)
        if "hess_upper" in block or "hess_lower" in block:
            spec = PotentialSpec(n, spec.profile,
                                 hess_upper=block.get("hess_upper", 2.0 * a),
                                 hess_lower=block.get("hess_lower", 2.0 * a))
        return spec
    if family == "tabulated":
        _reject_unknown(block, {"family", "csv", "hess_upper", "hess_lower"}, ctx)
        if "csv" not in block:
            raise ConfigError(f"{ctx}: tabulated potential needs a 'csv' path")
        return PotentialSpec.from_csv(block["csv"], dimension=n,
                                      hess_upper=block.get("hess_upper"),
                                      hess_lower=block.get("hess_lower"))
    if family == "onedim":
        _reject_unknown(block, {"family", "coefficient", "shift",
                                "hess_upper", "hess_lower"}, ctx)
        if n != 1:
            raise ConfigError(f"{ctx}: onedim potentials require n = 1")
        a = float(block.get("coefficient", 1.0))
        s = float(block.get("shift", 0.0))
        return PotentialSpec.one_dim(
            lambda x, a=a, s=s: a * (x - s) ** 2,
            lambda x, a=a, s=s: 2.0 * a * (x - s),
            hess_upper=block.get("hess_upper", 2.0 * a),
            hess_lower=block.get("hess_lower", 2.0 * a))
    raise ConfigError(f"{ctx}: unknown potential family {family!r}")


_SCENARIO_KEYS = {"name", "n", "d", "D", "R", "expected"}
_SOLVER_KEYS = {"grid_points", "grid_min", "grid_max"}
_OUTPUT_KEYS = {"dir", "format"}
_TOP_KEYS = {"scenario", "potentials", "solver", "output"}


@dataclass
class ParsedConfig:
    scenarios: List[Scenario] = field(default_factory=list)
    canonical: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def parse_config(doc: dict, base_dir: Path = Path(".")) -> ParsedConfig:
    """Parse a strict-JSON config document into scenarios."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    if "scenarios" in doc:
        _reject_unknown(doc, {"scenarios"}, "config")
        parts = [parse_config(item, base_dir) for item in doc["scenarios"]]
        return ParsedConfig(
            scenarios=[s for p in parts for s in p.scenarios],
            canonical={"scenarios": [p.canonical for p in parts]},
            output=parts[0].output if parts else {})
    _reject_unknown(doc, _TOP_KEYS, "config")
    scen = doc.get("scenario")
    if not isinstance(scen, dict):
        raise ConfigError("config needs a 'scenario' block")
    _reject_unknown(scen, _SCENARIO_KEYS, "scenario")
    pots = doc.get("potentials", {})
    _reject_unknown(pots, {"V", "W"}, "potentials")
    solver = doc.get("solver", {})
    _reject_unknown(solver, _SOLVER_KEYS, "solver")
    output = doc.get("output", {})
    _reject_unknown(output, _OUTPUT_KEYS, "output")

    n = int(scen.get("n", 1))
    d = _parse_extended(scen.get("d", n), "scenario.d")
    D = _parse_extended(scen.get("D", "inf"), "scenario.D")
    R = _parse_radius(scen.get("R", "inf"), "scenario.R")
    V = _parse_potential(pots.get("V", {"family": "quadratic"}), n, "potentials.V")
    W = _parse_potential(pots.get("W", {"family": "quadratic"}), n, "potentials.W")
    scenario = Scenario(
        name=str(scen.get("name", "scenario")),
        V=V, W=W, n=n, d=d, D=D, R=R,
        expected=scen.get("expected"),
        grid_points=int(solver.get("grid_points", 400)),
        grid_min=solver.get("grid_min"),
        grid_max=solver.get("grid_max"))
    canonical = {
        "scenario": {"name": scenario.name, "n": n, "d": d.label(),
                     "D": D.label(),
                     "R": "inf" if math.isinf(R) else repr(R),
                     **({"expected": scen["expected"]} if scen.get("expected") else {})},
        "potentials": {"V": dict(pots.get("V", {"family": "quadratic"})),
                       "W": dict(pots.get("W", {"family": "quadratic"}))},
        "solver": dict(solver),
        "output": dict(output),
    }
    return ParsedConfig([scenario], canonical, dict(output))


def load_config(path) -> ParsedConfig:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    return parse_config(doc, p.parent)


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n")


def _bounds_csv(path: Path, reports: List[dict]):
    keys = sorted({k for r in reports for k in r["constants"]})
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["regime", "A", "B", "bound"] + keys) + "\n")
        for r in reports:
            row = [r["regime"], repr(r["A"]), repr(r["B"]), repr(r["bound"])]
            row += [repr(r["constants"][k]) if k in r["constants"] else "" for k in keys]
            fh.write(",".join(row) + "\n")


def _applicable_bounds(s: Scenario) -> List[dict]:
    reports = [global_bound(s.V, s.W, s.n, s.d, s.D)]
    if math.isfinite(s.R):
        reports.append(local_bound(s.V, s.W, s.n, s.d, s.D, s.R))
    elif not s.D.is_finite:
        # infinite window, log-concave target: the endpoint/Caffarelli bound
        # survives with the global structural constant (window R -> inf)
        reports.append(local_bound(s.V, s.W, s.n, s.d, s.D, 1e8))
    if s.d.is_finite and s.D.is_finite:
        reports.append(finite_global_sharp_bound(s.V, s.W, s.n, s.d.value, s.D.value))
    return [r.to_dict() for r in reports]


def cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else None
    for s in cfg.scenarios:
        try:
            reports = _applicable_bounds(s)
        except (InvalidOrder,) as exc:
            print(f"error: {s.name}: {exc} (requires d <= D)", file=sys.stderr)
            return EXIT_INPUT
        except (VoidBound, BrenierBoundsError) as exc:
            print(f"error: {s.name}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_VOID
        doc = {"scenario": s.name, "bounds": reports}
        print(json.dumps(doc, indent=2))
        if out_dir:
            if args.format in ("json", "both"):
                _write_json(out_dir / f"{s.name}_bounds.json", doc)
            if args.format in ("csv", "both"):
                _bounds_csv(out_dir / f"{s.name}_bounds.csv", reports)
    return EXIT_OK


def cmd_transport(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else Path(".")
    for s in cfg.scenarios:
        try:
            grid = default_grid(s.d, s.grid_points, s.grid_min, s.grid_max)
            m = radial_map(s.V, s.W, s.d, s.D, s.n, grid)
            window = s.R if math.isfinite(s.R) else s.proxy_radius()
            lip = lipschitz_empirical(m, window)
        except BrenierBoundsError as exc:
            print(f"error: {s.name}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_VOID
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{s.name}_map.csv"
        m.write_csv(csv_path)
        payload = {"scenario": s.name, "lipschitz": lip.value,
                   "argmax_r": lip.argmax_r, "component": lip.component,
                   "window_R": "inf" if math.isinf(s.R) else s.R,
                   "max_residual": float(max(abs(x) for x in m.residuals)),
                   "map_csv": str(csv_path)}
        _write_json(out_dir / f"{s.name}_lipschitz.json", payload)
        print(json.dumps(payload, indent=2))
    return EXIT_OK


def _collect_configs(path: Path) -> List[Path]:
    if path.is_dir():
        return sorted(path.glob("*.json"))
    return [path]


def cmd_verify(args) -> int:
    paths = _collect_configs(Path(args.config))
    scenarios: List[Scenario] = []
    for p in paths:
        scenarios.extend(load_config(p).scenarios)
    if not scenarios:
        print("error: no scenarios found", file=sys.stderr)
        return EXIT_INPUT
    jobs = args.jobs or int(os.environ.get("BRENIER_BOUNDS_JOBS", "1"))
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_scenario, scenarios))
    else:
        reports = [run_scenario(s) for s in scenarios]
    out_dir = Path(args.out) if args.out else None
    all_pass = True
    print(f"{'scenario':<32} {'pass':<6} {'empirical':<14} {'margins':<24} reason")
    for rep in reports:
        all_pass &= rep.passed
        emp = "-" if rep.empirical is None else f"{rep.empirical.value:.6g}"
        margins = ",".join(f"{k}:{v:.3g}" for k, v in sorted(rep.margins.items())) or "-"
        print(f"{rep.scenario:<32} {str(rep.passed):<6} {emp:<14} {margins:<24} {rep.reason}")
        if out_dir:
            _write_json(out_dir / f"{rep.scenario}_report.json", rep.to_dict())
    if out_dir:
        with open(out_dir / "summary.csv", "w", newline="") as fh:
            fh.write("scenario,pass,empirical,residual_max,reason\n")
            for rep in reports:
                emp = "" if rep.empirical is None else repr(rep.empirical.value)
                res = "" if rep.residual_max is None else repr(rep.residual_max)
                fh.write(f"{rep.scenario},{rep.passed},{emp},{res},{rep.reason}\n")
    return EXIT_OK if all_pass else EXIT_VERIFY


_SWEEP_KEYS = {"kind", "n", "n_list", "d", "d_max", "d_list", "D_list", "D_max",
               "R", "R_list", "qV", "qW"}


def cmd_sweep(args) -> int:
    p = Path(args.config)
    try:
        doc = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        block = doc.get("sweep")
        if not isinstance(block, dict):
            raise ConfigError("sweep config needs a 'sweep' block")
        _reject_unknown(doc, {"sweep", "potentials"}, "config")
        _reject_unknown(block, _SWEEP_KEYS, "sweep")
        kind = block.get("kind")
        out_dir = Path(args.out) if args.out else Path(".")
        out_dir.mkdir(parents=True, exist_ok=True)
        pots = doc.get("potentials", {})
        _reject_unknown(pots, {"V", "W"}, "potentials")

        if kind == "uniformity":
            n_list = block.get("n_list", [1, 2, 3])
            d_max = int(block.get("d_max", 50))
            D_max = int(block.get("D_max", d_max))
            rep = mglob_uniformity_check(n_list, range(1, d_max + 1),
                                         range(1, D_max + 1),
                                         qV=float(block.get("qV", 1.0)),
                                         qW=float(block.get("qW", 1.0)))
            with open(out_dir / "uniformity.csv", "w", newline="") as fh:
                fh.write("n,d,D,one_plus_M,pass\n")
                for row in rep.rows:
                    fh.write(f"{row['n']},{row['d']},{row['D']},"
                             f"{repr(row['one_plus_M'])},{row['pass']}\n")
            payload = {"kind": kind, "pass": rep.all_pass,
                       "e2_product": rep.e2_product,
                       "tau_endpoint_value": rep.tau_endpoint_value,
                       "tau_endpoint_target": rep.tau_endpoint_target,
                       "max_one_plus_M": rep.max_one_plus_m,
                       "triples": len(rep.rows)}
        elif kind == "d_limit":
            n = int(block.get("n", 1))
            V = _parse_potential(pots.get("V", {"family": "quadratic"}), n, "V")
            W = _parse_potential(pots.get("W", {"family": "quadratic"}), n, "W")
            rep = limit_sweep_D(V, W, n, float(block.get("d", 1.0)),
                                float(block.get("R", 1.0)),
                                block.get("D_list", [2, 10, 100, 1000]))
            _rows_csv(out_dir / "d_limit.csv", rep.rows)
            payload = rep.to_dict() | {"kind": kind}
        elif kind == "caffarelli_limit":
            n = int(block.get("n", 1))
            V = _parse_potential(pots.get("V", {"family": "quadratic"}), n, "V")
            W = _parse_potential(pots.get("W", {"family": "quadratic"}), n, "W")
            rep = limit_sweep_caffarelli(V, W, n,
                                         block.get("d_list", [1, 10, 100, 1e4, 1e6]),
                                         block.get("R_list", [1, 2, 5, 10]))
            _rows_csv(out_dir / "caffarelli_limit.csv", rep.rows)
            payload = rep.to_dict() | {"kind": kind}
        else:
            raise ConfigError(f"unknown sweep kind {kind!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BrenierBoundsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VOID
    _write_json(out_dir / "sweep_report.json", payload)
    print(json.dumps({k: v for k, v in payload.items() if k != "rows"}, indent=2))
    return EXIT_OK if payload["pass"] else EXIT_VERIFY


def _rows_csv(path: Path, rows: List[dict]):
    if not rows:
        return
    keys = list(rows[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[k]) if isinstance(row[k], float)
                              else str(row[k]) for k in keys) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brenier-bounds",
        description="Lipschitz/Hessian bounds and monotone transport maps for "
                    "densities interpolating between polynomial and log-concave tails")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("bounds", cmd_bounds), ("transport", cmd_transport),
                     ("verify", cmd_verify), ("sweep", cmd_sweep)):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True,
                        help="config file (or directory of configs, verify only)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--format", choices=("json", "csv", "both"), default="json")
        sp.add_argument("--jobs", type=int, default=None,
                        help="parallel scenario workers (env BRENIER_BOUNDS_JOBS)")
        sp.add_argument("--strict", action="store_true", default=True,
                        help="reject unknown config keys (always on)")
        sp.set_defaults(fn=fn)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidOrder as exc:
        print(f"error: {exc} (requires d <= D)", file=sys.stderr)
        return EXIT_INPUT
    except VoidBound as exc:
        print(f"error: VoidBound: {exc}", file=sys.stderr)
        return EXIT_VOID
    except BrenierBoundsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VOID


if __name__ == "__main__":
    sys.exit(main())
