"""
Fiber maps and projections onto the Nehari manifold {I'(u)u = 0} and the
Nehari-Pohozaev manifold {J(u) = 0}.

Every fiber value is computed from a single EnergyReport of u plus the exact
scaling laws: amplitude scaling t*u for the Nehari fiber and the dilation
u_t(x) = t^2 u(t x) for the Nehari-Pohozaev fiber.  Only the potential is
resampled along dilations; u itself is never re-convolved.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from . import grid as _grid
from .energy import (EnergyReport, ProblemParams, dilation_energy, dilation_J, energy,
                     weighted_scaled)
from .grid import GridFunction
from .kernel import KernelTables
from .potential import PotentialModel

T_MIN, T_MAX = 1e-8, 1e8


class NoMaximizerError(ValueError):
    """The Nehari fiber has no interior maximum (h_u(t) -> +inf)."""


class BracketError(RuntimeError):
    """No sign change of the fiber derivative inside [1e-8, 1e8]."""


@dataclass
class FiberScan:
    family: str
    t_values: np.ndarray
    I_values: np.ndarray
    derivative_values: np.ndarray

    def __post_init__(self):
        self.t_values = np.asarray(self.t_values, dtype=float)
        self.I_values = np.asarray(self.I_values, dtype=float)
        self.derivative_values = np.asarray(self.derivative_values, dtype=float)
        if not (self.t_values.shape == self.I_values.shape == self.derivative_values.shape):
            raise ValueError("fiber arrays must have equal length")
        if np.any(np.diff(self.t_values) <= 0):
            raise ValueError("t values must be strictly increasing")

    def sign_changes(self) -> int:
        return count_sign_changes(self.derivative_values)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "I", "deriv"])
            for row in zip(self.t_values, self.I_values, self.derivative_values):
                w.writerow([repr(float(x)) for x in row])


@dataclass
class ProjectionResult:
    t_star: float
    projected: GridFunction
    residual: float
    bracket: tuple[float, float]
    iterations: int


def count_sign_changes(values: Sequence[float]) -> int:
    s = np.sign(np.asarray(values, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _require_nonzero(rep: EnergyReport) -> None:
    if not rep.l2_sq > 0:
        raise ValueError("fiber of the zero state is undefined")


def _validate_t(t_values) -> np.ndarray:
    t = np.asarray(t_values, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0):
        raise ValueError("t values must be a nonempty 1-D array of positive reals")
    return t


def _bracket(g: Callable[[float], float]) -> tuple[float, float, float, int]:
    """Expand geometrically from t = 1 until g changes sign (+ below, - above).

    Returns (t_lo, t_hi, t_exact, evaluations); t_exact is NaN unless g vanished
    exactly at a probe.
    """
    t = 1.0
    g1 = g(t)
    evals = 1
    if g1 == 0:
        return t, t, t, evals
    if g1 > 0:
        lo = t
        while True:
            hi = 2.0 * lo
            if hi > T_MAX:
                raise BracketError("fiber derivative stays positive up to t = 1e8")
            gh = g(hi)
            evals += 1
            if gh == 0:
                return hi, hi, hi, evals
            if gh < 0:
                return lo, hi, math.nan, evals
            lo = hi
    hi = t
    while True:
        lo = 0.5 * hi
        if lo < T_MIN:
            raise BracketError("fiber derivative stays negative down to t = 1e-8")
        gl = g(lo)
        evals += 1
        if gl == 0:
            return lo, lo, lo, evals
        if gl > 0:
            return lo, hi, math.nan, evals
        hi = lo


# ---------------------------------------------------------------- Nehari fiber


def nehari_condition(report: EnergyReport, params: ProblemParams) -> bool:
    """Whether t -> I(t u) has an interior maximiser (p >= 4 only)."""
    _require_nonzero(report)
    if params.p < 4:
        raise ValueError("the Nehari fiber analysis needs p >= 4")
    if params.p == 4:
        return report.N0 - params.b * report.lp < 0
    return report.N0 < 0 or params.b > 0


def nehari_fiber(u: GridFunction, params: ProblemParams, pot: PotentialModel,
                 tables: KernelTables, t_values, report: Optional[EnergyReport] = None
                 ) -> FiberScan:
    rep = report if report is not None else energy(u, params, pot, tables, split=False)
    _require_nonzero(rep)
    t = _validate_t(t_values)
    b, p = params.b, params.p
    I = 0.5 * t**2 * rep.norm_sq + 0.25 * t**4 * rep.N0 - b / p * t**p * rep.lp
    d = t * (rep.norm_sq + t**2 * rep.N0 - b * t ** (p - 2.0) * rep.lp)
    return FiberScan("nehari", t, I, d)


def nehari_closed_form_t(report: EnergyReport, params: ProblemParams) -> float:
    """t* = sqrt(||u||^2 / (b|u|_4^4 - N0)) for p = 4."""
    if params.p != 4:
        raise ValueError("closed form only for p = 4")
    denom = params.b * report.lp - report.N0
    if not denom > 0:
        raise NoMaximizerError("b|u|_4^4 - N0(u) must be positive")
    return math.sqrt(report.norm_sq / denom)


def nehari_project(u: GridFunction, params: ProblemParams, pot: PotentialModel,
                   tables: KernelTables, tol: float = 1e-10,
                   report: Optional[EnergyReport] = None) -> ProjectionResult:
    """Scale u onto the Nehari manifold: unique t* with I'(t* u)(t* u) = 0."""
    if params.p < 4:
        raise ValueError("Nehari projection needs p >= 4")
    rep = report if report is not None else energy(u, params, pot, tables, split=False)
    _require_nonzero(rep)
    if not nehari_condition(rep, params):
        raise NoMaximizerError("t -> I(t u) is increasing; no projection onto the Nehari manifold")
    b, p = params.b, params.p
    a, c, e = rep.norm_sq, rep.N0, b * rep.lp

    def g(t):  # h'(t) / t
        return a + t * t * c - e * t ** (p - 2.0)

    def dg(t):
        return 2.0 * t * c - (p - 2.0) * e * t ** (p - 3.0)

    lo, hi, t, its = _bracket(g)
    if math.isnan(t):
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            its += 1
            if gm == 0:
                lo = hi = mid
                break
            if gm > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 4 * np.finfo(float).eps * hi:
                break
        t = 0.5 * (lo + hi)
        slope = dg(t)
        if slope != 0:
            tn = t - g(t) / slope
            if lo <= tn <= hi and abs(g(tn)) <= abs(g(t)):
                t = tn
            its += 1
    res = abs(g(t)) / a
    if res > tol:
        raise RuntimeError(f"Nehari projection residual {res:.3e} above tolerance {tol:.1e}")
    return ProjectionResult(t, _grid.scale(u, t), res, (lo, hi), its)


# ---------------------------------------------------------------- Nehari-Pohozaev fiber


def np_fiber(u: GridFunction, params: ProblemParams, pot: PotentialModel,
             tables: KernelTables, t_values, report: Optional[EnergyReport] = None
             ) -> FiberScan:
    """I(u_t) and J(u_t) along the dilation fiber, J(u_t) = t d/dt I(u_t)."""
    rep = report if report is not None else energy(u, params, pot, tables, split=False)
    _require_nonzero(rep)
    t = _validate_t(t_values)
    I = np.empty_like(t)
    d = np.empty_like(t)
    for k, tk in enumerate(t):
        if tk == 1.0:
            I[k], d[k] = rep.I, rep.J
            continue
        wV, wcal = weighted_scaled(pot, u, tk)
        I[k] = dilation_energy(tk, rep, wV, params)
        d[k] = dilation_J(tk, rep, wcal, params)
    return FiberScan("pohozaev", t, I, d)


def np_project(u: GridFunction, params: ProblemParams, pot: PotentialModel,
               tables: KernelTables, tol: float = 1e-10,
               report: Optional[EnergyReport] = None,
               interpolation: str = "bilinear") -> ProjectionResult:
    """Dilate u onto the Nehari-Pohozaev manifold: unique t* with J(u_t*) = 0.

    The root is located on the closed-form fiber; the returned state is
    dilate(u, t*), exact when u carries a closure and interpolated otherwise.
    """
    if params.p < 3:
        raise ValueError("Nehari-Pohozaev projection needs p >= 3")
    rep = report if report is not None else energy(u, params, pot, tables, split=False)
    _require_nonzero(rep)

    def g(t):  # J(u_t) / t^4
        if t == 1.0:
            return rep.J
        _, wcal = weighted_scaled(pot, u, t)
        return dilation_J(t, rep, wcal, params) / t**4

    lo, hi, t, its = _bracket(g)
    if math.isnan(t):
        t, info = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                  maxiter=200, full_output=True)
        its += info.function_calls
    res = abs(g(t)) * t**4 / rep.norm_sq
    if res > tol:
        raise RuntimeError(f"Nehari-Pohozaev projection residual {res:.3e} above tolerance {tol:.1e}")
    return ProjectionResult(t, _grid.dilate(u, t, method=interpolation), res, (lo, hi), its)


def lemma55_margins(u: GridFunction, params: ProblemParams, pot: PotentialModel,
                    tables: KernelTables, t_values,
                    report: Optional[EnergyReport] = None) -> np.ndarray:
    """I(u) - (1 - t^4)/4 J(u) - I(u_t) for each t; nonnegative under (V2)."""
    rep = report if report is not None else energy(u, params, pot, tables, split=False)
    scan = np_fiber(u, params, pot, tables, t_values, report=rep)
    t = scan.t_values
    return rep.I - (1.0 - t**4) / 4.0 * rep.J - scan.I_values


def lemma55_check(u: GridFunction, params: ProblemParams, pot: PotentialModel,
                  tables: KernelTables, t_values,
                  report: Optional[EnergyReport] = None) -> float:
    """Worst (smallest) margin of the fiber inequality over ``t_values``."""
    return float(np.min(lemma55_margins(u, params, pot, tables, t_values, report)))
