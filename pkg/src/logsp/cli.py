"""
Command line front end.

    logsp solve           --config run.json [--out DIR]
    logsp scan            --config run.json --family nehari|pohozaev --t-min A --t-max B --count K
    logsp check-potential --config run.json
    logsp verify          --config run.json [--out DIR]
    logsp compare         --config run.json

Exit codes: 0 success, 1 configuration or usage error, 2 non-convergence
(or, for verify / check-potential / compare, a failed check).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import grid as _grid
from .energy import ProblemParams, energy
from .kernel import build_kernel_tables
from .manifolds import NoMaximizerError, nehari_fiber, np_fiber
from .potential import BUILTINS, from_config, check_conditions
from .solver import SolveConfig, SolverError, compare_levels, make_seed, minimize, write_result
from .verify import format_report, run_suite

logger = logging.getLogger("logsp")

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class GridSection:
    L: float = 12.0
    n: int = 256


@dataclass
class ProblemSection:
    p: float = 4.0
    b: float = 1.0


@dataclass
class PotentialSection:
    name: str = "well1"
    params: dict = field(default_factory=dict)


@dataclass
class SolverSection:
    seed: dict = field(default_factory=lambda: {"kind": "gaussian", "width": 1.0,
                                                "amplitude": 1.0})
    max_iter: int = 2000
    step0: float = 1.0
    tol_grad: float = 1e-6
    tol_manifold: float = 1e-9
    precondition: bool = True
    interpolation: str = "spectral"


@dataclass
class OutputSection:
    directory: str = "logsp_out"
    formats: list = field(default_factory=lambda: ["csv", "logsp1"])


@dataclass
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    problem: ProblemSection = field(default_factory=ProblemSection)
    potential: PotentialSection = field(default_factory=PotentialSection)
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTION_TYPES = {"grid": GridSection, "problem": ProblemSection,
                  "potential": PotentialSection, "solver": SolverSection,
                  "output": OutputSection}
_SEED_KEYS = {"gaussian": {"kind", "width", "amplitude", "center"}, "file": {"kind", "path"}}


def _section(name: str, raw) -> object:
    cls = _SECTION_TYPES[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown key")
    return cls(**raw)


def parse_config(data: dict) -> RunConfig:
    """Build and validate a RunConfig; errors name the offending key."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key in data:
        if key not in _SECTION_TYPES:
            raise ConfigError(f"{key}: unknown key")
    cfg = RunConfig(**{k: _section(k, v) for k, v in data.items()})
    validate(cfg)
    return cfg


def _num(path: str, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return kind(value)


def validate(cfg: RunConfig) -> None:
    L = _num("grid.L", cfg.grid.L)
    n = _num("grid.n", cfg.grid.n, int)
    try:
        _grid.make_grid(L, n)
    except ValueError as exc:
        key = "grid.n" if "points" in str(exc) else "grid.L"
        raise ConfigError(f"{key}: {exc}") from None
    p = _num("problem.p", cfg.problem.p)
    b = _num("problem.b", cfg.problem.b)
    if p < 3:
        raise ConfigError(f"problem.p: p below supported range (need p >= 3, got {p})")
    if b < 0:
        raise ConfigError(f"problem.b: coupling must be nonnegative, got {b}")
    if cfg.potential.name not in BUILTINS:
        raise ConfigError(f"potential.name: unknown potential {cfg.potential.name!r}")
    if not isinstance(cfg.potential.params, dict):
        raise ConfigError("potential.params: expected an object")
    try:
        from_config(cfg.potential.name, cfg.potential.params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"potential.params: {exc}") from None
    s = cfg.solver
    seed = s.seed
    if not isinstance(seed, dict):
        raise ConfigError("solver.seed: expected an object")
    kind = seed.get("kind", "gaussian")
    if kind not in _SEED_KEYS:
        raise ConfigError(f"solver.seed.kind: unknown seed kind {kind!r}")
    for key in seed:
        if key not in _SEED_KEYS[kind]:
            raise ConfigError(f"solver.seed.{key}: unknown key")
    if kind == "file" and "path" not in seed:
        raise ConfigError("solver.seed.path: required for file seeds")
    if kind == "gaussian" and not _num("solver.seed.width", seed.get("width", 1.0)) > 0:
        raise ConfigError("solver.seed.width: must be positive")
    if _num("solver.max_iter", s.max_iter, int) < 1:
        raise ConfigError("solver.max_iter: must be >= 1")
    for key in ("step0", "tol_grad", "tol_manifold"):
        if not _num(f"solver.{key}", getattr(s, key)) > 0:
            raise ConfigError(f"solver.{key}: must be positive")
    if not isinstance(s.precondition, bool):
        raise ConfigError("solver.precondition: expected true or false")
    if s.interpolation not in ("bilinear", "spectral"):
        raise ConfigError(f"solver.interpolation: unknown method {s.interpolation!r}")
    if not isinstance(cfg.output.directory, str):
        raise ConfigError("output.directory: expected a string")
    for fmt in cfg.output.formats:
        if fmt not in ("csv", "logsp1"):
            raise ConfigError(f"output.formats: unknown format {fmt!r}")


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(data)


def dump_config(cfg: RunConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- assembly


def _build(cfg: RunConfig):
    spec = _grid.make_grid(cfg.grid.L, cfg.grid.n)
    params = ProblemParams(float(cfg.problem.p), float(cfg.problem.b))
    pot = from_config(cfg.potential.name, cfg.potential.params)
    tables = build_kernel_tables(spec)
    s = cfg.solver
    solve_cfg = SolveConfig(seed=dict(s.seed), max_iter=int(s.max_iter), step0=float(s.step0),
                            tol_grad=float(s.tol_grad), tol_manifold=float(s.tol_manifold),
                            precondition=s.precondition, interpolation=s.interpolation)
    return spec, params, pot, tables, solve_cfg


def _out_dir(cfg: RunConfig, override: Optional[str]) -> Path:
    d = Path(override if override is not None else cfg.output.directory)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_solve(cfg: RunConfig, out: Optional[str] = None) -> int:
    spec, params, pot, tables, solve_cfg = _build(cfg)
    try:
        result = minimize(solve_cfg, params, pot, tables)
    except NoMaximizerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    directory = _out_dir(cfg, out)
    paths = write_result(result, directory)
    dump_config(cfg, directory / "effective_config.json")
    print(f"method {result.method}  level {result.level!r}  converged {result.converged}  "
          f"iterations {result.iterations}")
    for pth in paths:
        print(f"wrote {pth}")
    return EXIT_OK if result.converged else EXIT_FAIL


def cmd_scan(cfg: RunConfig, family: str, t_min: float, t_max: float, count: int,
             out: Optional[str] = None) -> int:
    if not (0 < t_min < t_max):
        print("error: need 0 < t-min < t-max", file=sys.stderr)
        return EXIT_USAGE
    if count < 2:
        print("error: count must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    if family not in ("nehari", "pohozaev"):
        print(f"error: unknown family {family!r}", file=sys.stderr)
        return EXIT_USAGE
    spec, params, pot, tables, solve_cfg = _build(cfg)
    u = make_seed(solve_cfg.seed, spec)
    t = np.logspace(np.log10(t_min), np.log10(t_max), count)
    rep = energy(u, params, pot, tables, split=False)
    scan = (nehari_fiber if family == "nehari" else np_fiber)(u, params, pot, tables, t,
                                                              report=rep)
    path = _out_dir(cfg, out) / f"scan_{family}.csv"
    scan.write_csv(path)
    print(f"{family} fiber: {count} points, {scan.sign_changes()} derivative sign change(s)")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check_potential(cfg: RunConfig) -> int:
    spec = _grid.make_grid(cfg.grid.L, cfg.grid.n)
    pot = from_config(cfg.potential.name, cfg.potential.params)
    report = check_conditions(pot, spec, ray_samples=64)
    print(report.format())
    return EXIT_OK if report.all_passed else EXIT_FAIL


def cmd_verify(cfg: RunConfig, out: Optional[str] = None, tables=None) -> int:
    spec, params, pot, built, _ = _build(cfg)
    # the J identity is checked on both builtin wells as well as the configured potential
    extra = [from_config(name) for name in ("well1", "well2") if name != pot.name]
    results = run_suite(params, pot, tables if tables is not None else built, extra)
    text = format_report(results)
    path = _out_dir(cfg, out) / "verify_report.txt"
    path.write_text(text)
    print(text, end="")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_compare(cfg: RunConfig) -> int:
    spec, params, pot, tables, solve_cfg = _build(cfg)
    if pot.is_constant or not pot.V0 < pot.Vinf:
        print("error: compare needs a non-constant potential well", file=sys.stderr)
        return EXIT_USAGE
    try:
        cmp = compare_levels(solve_cfg, params, pot, tables)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"m       {cmp.m_well!r}")
    print(f"m_inf   {cmp.m_limit!r}")
    print(f"margin  {cmp.margin!r}")
    return EXIT_OK if cmp.margin > 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logsp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="FFT worker threads (default: $LOGSP_THREADS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="JSON run configuration")
        if out:
            p.add_argument("--out", default=None, help="output directory (overrides config)")

    common(sub.add_parser("solve", help="minimise over the Nehari or Nehari-Pohozaev manifold"))
    scan = sub.add_parser("scan", help="tabulate a fiber map of the seed")
    common(scan)
    scan.add_argument("--family", choices=["nehari", "pohozaev"], required=True)
    scan.add_argument("--t-min", type=float, required=True)
    scan.add_argument("--t-max", type=float, required=True)
    scan.add_argument("--count", type=int, default=400)
    common(sub.add_parser("check-potential", help="check the well conditions"), out=False)
    common(sub.add_parser("verify", help="run the identity suite"))
    common(sub.add_parser("compare", help="well level against the limit-problem level"),
           out=False)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    if threads is None:
        env = os.environ.get("LOGSP_THREADS")
        threads = int(env) if env else 1
    try:
        _grid.set_fft_workers(threads)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "solve":
        return cmd_solve(cfg, args.out)
    if args.command == "scan":
        return cmd_scan(cfg, args.family, args.t_min, args.t_max, args.count, args.out)
    if args.command == "check-potential":
        return cmd_check_potential(cfg)
    if args.command == "verify":
        return cmd_verify(cfg, args.out)
    if args.command == "compare":
        return cmd_compare(cfg)
    return EXIT_USAGE  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
