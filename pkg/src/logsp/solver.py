"""
Ground states by retraction-based descent on the constraint manifolds.

Each step moves along the preconditioned L^2 gradient, maps the trial state
back onto the manifold (amplitude rescaling for Nehari, dilation for
Nehari-Pohozaev) and accepts it by Armijo backtracking on the projected energy.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.fft as sfft

from . import grid as _grid
from .energy import EnergyReport, ProblemParams, energy, residual_array
from .grid import GridFunction, GridSpec
from .kernel import KernelTables
from .manifolds import NoMaximizerError, nehari_condition, nehari_project, np_project
from .potential import PotentialModel, builtin_constant, check_conditions

logger = logging.getLogger(__name__)


@dataclass
class SolveConfig:
    seed: dict = field(default_factory=lambda: {"kind": "gaussian", "width": 1.0,
                                                "amplitude": 1.0})
    max_iter: int = 2000
    step0: float = 1.0
    tol_grad: float = 1e-6
    tol_manifold: float = 1e-9
    precondition: bool = True
    armijo: float = 1e-4
    max_backtracks: int = 40
    # interpolation used when dilating sampled iterates onto the NP manifold
    interpolation: str = "spectral"

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        for name in ("step0", "tol_grad", "tol_manifold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolveResult:
    state: GridFunction
    report: EnergyReport
    level: float
    residual_history: list[float]
    energy_history: list[float]
    manifold_residual: float
    pohozaev_residual: float
    sign_changed: bool
    converged: bool
    method: str
    iterations: int
    message: str = ""


@dataclass
class LevelComparison:
    m_well: float
    m_limit: float
    margin: float
    well: SolveResult
    limit: SolveResult


class SolverError(RuntimeError):
    pass


def make_seed(seed: dict, spec: GridSpec) -> GridFunction:
    kind = seed.get("kind", "gaussian")
    if kind == "gaussian":
        center = tuple(seed.get("center", (0.0, 0.0)))
        u = _grid.gaussian(spec, float(seed.get("width", 1.0)),
                           float(seed.get("amplitude", 1.0)), center)
    elif kind == "file":
        u = _grid.read_field(seed["path"])
        if u.spec != spec:
            raise ValueError(f"seed file grid {u.spec} does not match {spec}")
    else:
        raise ValueError(f"unknown seed kind {kind!r}")
    if not np.any(u.values != 0):
        raise ValueError("seed is identically zero")
    return u


def precondition_gradient(g: GridFunction | np.ndarray, pot: PotentialModel,
                          spec: Optional[GridSpec] = None) -> GridFunction | np.ndarray:
    """Apply (-Lap + V0)^{-1} in Fourier space."""
    vals = g.values if isinstance(g, GridFunction) else g
    spec = g.spec if isinstance(g, GridFunction) else spec
    KX, KY = spec.wavenumbers()
    w = _grid.fft_workers()
    out = sfft.irfft2(sfft.rfft2(vals, workers=w) / (KX**2 + KY**2 + pot.V0),
                      s=vals.shape, workers=w)
    return GridFunction(spec, out) if isinstance(g, GridFunction) else out


def _sign_changed(values: np.ndarray) -> bool:
    delta = 1e-8 * float(np.max(np.abs(values)))
    return bool(values.min() < -delta and values.max() > delta)


def _descend(u0: GridFunction, project, manifold_value, config: SolveConfig,
             params: ProblemParams, pot: PotentialModel, tables: KernelTables,
             method: str) -> SolveResult:
    spec = tables.spec
    u, rep = project(u0, None)
    res_hist: list[float] = []
    e_hist: list[float] = [rep.I]
    converged = False
    message = "max_iter reached"
    alpha = config.step0
    it = 0
    for it in range(1, config.max_iter + 1):
        g = residual_array(u.values, params, pot, tables)
        unorm_sq = rep.norm_sq
        rel = math.sqrt(_grid.integrate(g * g, spec) / unorm_sq)
        res_hist.append(rel)
        man = abs(manifold_value(rep)) / unorm_sq
        if rel <= config.tol_grad and man <= config.tol_manifold:
            converged = True
            message = "converged"
            break
        d = precondition_gradient(g, pot, spec) if config.precondition else g
        slope = _grid.integrate(g * d, spec)
        alpha = min(config.step0, 2.0 * alpha)
        accepted = False
        for _ in range(config.max_backtracks):
            trial = GridFunction(spec, u.values - alpha * d)
            try:
                cand, crep = project(trial, None)
            except (NoMaximizerError, RuntimeError):
                alpha *= 0.5
                continue
            # rounding-level slack so the test stays meaningful near the optimum
            slack = 1e-14 * (abs(rep.I) + rep.norm_sq)
            if crep.I <= rep.I - config.armijo * alpha * slope + slack:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            message = f"line search failed at iteration {it}"
            logger.info(message)
            break
        u, rep = cand, crep
        e_hist.append(rep.I)
        logger.debug("iter %d  I=%.12g  grad=%.3e  alpha=%.3g", it, rep.I, rel, alpha)

    final = energy(u, params, pot, tables)
    man = abs(manifold_value(final)) / final.norm_sq
    poh = abs(final.P) / (final.norm_sq + abs(final.N0))
    return SolveResult(state=u, report=final, level=final.I, residual_history=res_hist,
                       energy_history=e_hist, manifold_residual=man, pohozaev_residual=poh,
                       sign_changed=_sign_changed(u.values), converged=converged,
                       method=method, iterations=it, message=message)


def minimize_nehari(config: SolveConfig, params: ProblemParams, pot: PotentialModel,
                    tables: KernelTables, seed: Optional[GridFunction] = None) -> SolveResult:
    """Minimise I over the Nehari manifold (p >= 4)."""
    if params.p < 4:
        raise ValueError("Nehari minimisation needs p >= 4")
    u0 = seed if seed is not None else make_seed(config.seed, tables.spec)
    rep0 = energy(u0, params, pot, tables, split=False)
    if not nehari_condition(rep0, params):
        raise NoMaximizerError("seed has no projection onto the Nehari manifold")

    def project(v, rep):
        pr = nehari_project(v, params, pot, tables, report=rep)
        return pr.projected, energy(pr.projected, params, pot, tables, split=False)

    return _descend(u0, project, lambda r: r.Ipair, config, params, pot, tables, "nehari")


def minimize_np(config: SolveConfig, params: ProblemParams, pot: PotentialModel,
                tables: KernelTables, seed: Optional[GridFunction] = None) -> SolveResult:
    """Minimise I over the Nehari-Pohozaev manifold (p >= 3, V satisfying (V2), (V3))."""
    if params.p < 3:
        raise ValueError("Nehari-Pohozaev minimisation needs p >= 3")
    if not pot.is_constant:
        report = check_conditions(pot, tables.spec, ray_samples=64)
        bad = [k for k in ("V2", "V3") if not report.conditions[k].passed]
        if bad:
            raise ValueError(f"potential {pot.name} fails {', '.join(bad)}")
    u0 = seed if seed is not None else make_seed(config.seed, tables.spec)

    def project(v, rep):
        pr = np_project(v, params, pot, tables, report=rep, interpolation=config.interpolation)
        return pr.projected, energy(pr.projected, params, pot, tables, split=False)

    return _descend(u0, project, lambda r: r.J, config, params, pot, tables, "pohozaev")


def minimize(config: SolveConfig, params: ProblemParams, pot: PotentialModel,
             tables: KernelTables, seed: Optional[GridFunction] = None) -> SolveResult:
    """Nehari path for p >= 4, Nehari-Pohozaev path for 3 <= p < 4."""
    if params.p >= 4:
        return minimize_nehari(config, params, pot, tables, seed)
    return minimize_np(config, params, pot, tables, seed)


def solve_limit_problem(config: SolveConfig, params: ProblemParams, Vinf: float,
                        tables: KernelTables, seed: Optional[GridFunction] = None
                        ) -> SolveResult:
    if not Vinf > 0:
        raise ValueError(f"Vinf must be positive, got {Vinf}")
    return minimize(config, params, builtin_constant(Vinf), tables, seed)


def compare_levels(config: SolveConfig, params: ProblemParams, pot: PotentialModel,
                   tables: KernelTables) -> LevelComparison:
    """Ground level in the well against the level of the limit problem."""
    if pot.is_constant or not pot.V0 < pot.Vinf:
        raise ValueError("level comparison needs a non-constant well")
    rep = check_conditions(pot, tables.spec, ray_samples=64)
    if not rep.conditions["V0"].passed:
        raise ValueError(f"potential {pot.name} fails (V0)")
    well = minimize(config, params, pot, tables)
    limit = solve_limit_problem(config, params, pot.Vinf, tables)
    for name, r in (("well", well), ("limit", limit)):
        if not r.converged:
            raise SolverError(f"{name} solve did not converge: {r.message}")
    return LevelComparison(well.level, limit.level, limit.level - well.level, well, limit)


def angular_variance(u: GridFunction, radii: int = 48, angles: int = 64) -> float:
    """Worst standard deviation of u over a circle, relative to max |u|.

    u is read on circles about the origin by cubic-spline interpolation, out
    to the radius where |u| drops below 1e-3 of its peak.
    """
    from scipy import ndimage

    spec = u.spec
    amp = float(np.max(np.abs(u.values)))
    X, Y = spec.mesh()
    r = np.hypot(X, Y)
    live = r[np.abs(u.values) >= 1e-3 * amp]
    rmax = min(float(live.max()), spec.L - 2 * spec.h)
    rr = np.linspace(0.0, rmax, radii)
    th = 2.0 * np.pi * np.arange(angles) / angles
    px = np.outer(rr, np.cos(th))
    py = np.outer(rr, np.sin(th))
    to_idx = lambda z: (z + spec.L) / spec.h - 0.5  # noqa: E731
    vals = ndimage.map_coordinates(u.values, [to_idx(px), to_idx(py)], order=3, mode="nearest")
    return float(np.max(np.std(vals, axis=1)) / amp)


# ---------------------------------------------------------------- output


def write_result(result: SolveResult, directory: str | Path, prefix: str = "solve") -> list[Path]:
    """Level summary CSV, residual history CSV and the final state as LOGSP1."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    summary = out / f"{prefix}_summary.csv"
    history = out / f"{prefix}_residuals.csv"
    state = out / f"{prefix}_state.logsp1"
    cols = ["method", "converged", "iterations", "level", "manifold_residual",
            "pohozaev_residual", "sign_changed"] + EnergyReport.columns()
    vals = [result.method, int(result.converged), result.iterations, repr(result.level),
            repr(result.manifold_residual), repr(result.pohozaev_residual),
            int(result.sign_changed)] + [repr(float(x)) for x in result.report.row()]
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        w.writerow(vals)
    with open(history, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "residual", "energy"])
        for k, r in enumerate(result.residual_history):
            e = result.energy_history[min(k, len(result.energy_history) - 1)]
            w.writerow([k, repr(r), repr(e)])
    _grid.write_field(state, result.state)
    return [summary, history, state]
