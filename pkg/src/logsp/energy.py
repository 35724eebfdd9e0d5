"""
Scalar functionals of a state: energy I, Nehari pairing I'(u)u, the
Nehari-Pohozaev functional J, the Pohozaev functional P, and the L^2 gradient.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import grid as _grid
from .grid import GridFunction
from .kernel import TWO_PI, KernelTables, convolve_array
from .potential import PotentialModel, builtin_constant

EIGHT_PI = 8.0 * np.pi


@dataclass(frozen=True)
class ProblemParams:
    p: float
    b: float = 0.0

    def __post_init__(self):
        if not self.p > 2:
            raise ValueError(f"exponent p must exceed 2, got {self.p}")
        if not self.b >= 0:
            raise ValueError(f"coupling b must be nonnegative, got {self.b}")


@dataclass(frozen=True)
class EnergyReport:
    I: float
    grad_sq: float
    weighted_V: float
    norm_sq: float
    N0: float
    N1: float
    N2: float
    lp: float
    l2_sq: float
    star_sq: float
    Ipair: float
    J: float
    P: float
    # int (V + (grad V, x)/2) u^2 and int calV u^2, kept for fiber formulas
    weighted_P: float
    weighted_calV: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[float]:
        return [getattr(self, c) for c in self.columns()]

    def as_dict(self) -> dict:
        return asdict(self)


def _check(u: GridFunction, tables: KernelTables) -> None:
    if u.spec != tables.spec:
        raise ValueError(f"grid mismatch: field on {u.spec}, tables built for {tables.spec}")


def _power_term(values: np.ndarray, params: ProblemParams):
    """(|u|^p samples, sign(u)|u|^(p-1) samples); skipped entirely when b = 0."""
    if params.b == 0:
        return None, None
    a = np.abs(values)
    return a**params.p, np.sign(values) * a ** (params.p - 1.0)


def energy(u: GridFunction, params: ProblemParams, pot: PotentialModel,
           tables: KernelTables, split: bool = True) -> EnergyReport:
    """All scalar functionals of ``u``.

    With ``split=False`` the two positive-kernel convolutions are skipped and
    N1, N2 are reported as NaN (used inside the solver's line search).
    """
    _check(u, tables)
    spec, v = u.spec, u.values
    V, R = pot.sample(spec)
    rho = v * v
    w0 = convolve_array(tables, 0, rho)
    h2 = spec.h**2
    N0 = float(h2 * np.sum(w0 * rho)) / TWO_PI
    if split:
        N1 = float(h2 * np.sum(convolve_array(tables, 1, rho) * rho)) / TWO_PI
        N2 = float(h2 * np.sum(convolve_array(tables, 2, rho) * rho)) / TWO_PI
    else:
        N1 = N2 = math.nan
    grad_sq = -_grid.integrate(v * _grid.laplacian(v, spec), spec)
    weighted_V = _grid.integrate(V * rho, spec)
    weighted_P = _grid.integrate((V + 0.5 * R) * rho, spec)
    weighted_calV = _grid.integrate((V - 0.5 * R) * rho, spec)
    l2_sq = _grid.integrate(rho, spec)
    star_sq = _grid.star_norm_sq(u)
    up, _ = _power_term(v, params)
    lp = 0.0 if up is None else _grid.integrate(up, spec)
    b, p = params.b, params.p
    norm_sq = grad_sq + weighted_V
    I = 0.5 * norm_sq + 0.25 * N0 - b / p * lp
    Ipair = norm_sq + N0 - b * lp
    J = (2.0 * grad_sq + weighted_calV + N0 - l2_sq**2 / EIGHT_PI
         - 2.0 * b * (p - 1.0) / p * lp)
    P = weighted_P + N0 + l2_sq**2 / EIGHT_PI - 2.0 * b / p * lp
    return EnergyReport(I, grad_sq, weighted_V, norm_sq, N0, N1, N2, lp, l2_sq, star_sq,
                        Ipair, J, P, weighted_P, weighted_calV)


def residual_array(values: np.ndarray, params: ProblemParams, pot: PotentialModel,
                   tables: KernelTables) -> np.ndarray:
    spec = tables.spec
    V, _ = pot.sample(spec)
    g = -_grid.laplacian(values, spec) + V * values
    g += convolve_array(tables, 0, values * values) * values / TWO_PI
    _, du = _power_term(values, params)
    if du is not None:
        g -= params.b * du
    return g


def residual(u: GridFunction, params: ProblemParams, pot: PotentialModel,
             tables: KernelTables) -> GridFunction:
    """L^2 representative of I'(u):
    -Lap u + V u + (1/2pi)(log|.| * u^2) u - b |u|^(p-2) u."""
    _check(u, tables)
    return GridFunction(u.spec, residual_array(u.values, params, pot, tables))


def limit_energy(u: GridFunction, params: ProblemParams, Vinf: float,
                 tables: KernelTables) -> EnergyReport:
    if not Vinf > 0:
        raise ValueError(f"Vinf must be positive, got {Vinf}")
    return energy(u, params, builtin_constant(Vinf), tables)


def weighted_scaled(pot: PotentialModel, u: GridFunction, t: float) -> tuple[float, float]:
    """(int V(x/t) u^2, int calV(x/t) u^2) by resampling V at scaled nodes."""
    V, R = pot.sample_scaled(u.spec, t)
    rho = u.values**2
    return _grid.integrate(V * rho, u.spec), _grid.integrate((V - 0.5 * R) * rho, u.spec)


def dilation_energy(t: float, rep: EnergyReport, weighted_V_t: float,
                    params: ProblemParams) -> float:
    """I(u_t) from the report of u, with weighted_V_t = int V(x/t) u^2."""
    t4 = t**4
    return (0.5 * t4 * rep.grad_sq + 0.5 * t * t * weighted_V_t + 0.25 * t4 * rep.N0
            - t4 * math.log(t) / EIGHT_PI * rep.l2_sq**2
            - params.b * t ** (2.0 * params.p - 2.0) / params.p * rep.lp)


def dilation_J(t: float, rep: EnergyReport, weighted_calV_t: float,
               params: ProblemParams) -> float:
    """J(u_t) from the report of u, with weighted_calV_t = int calV(x/t) u^2."""
    t4 = t**4
    p, b = params.p, params.b
    return (2.0 * t4 * rep.grad_sq + t * t * weighted_calV_t + t4 * rep.N0
            - t4 * math.log(t) / TWO_PI * rep.l2_sq**2 - t4 * rep.l2_sq**2 / EIGHT_PI
            - 2.0 * b * (p - 1.0) / p * t ** (2.0 * p - 2.0) * rep.lp)


def augmented_phi(s: float, v: GridFunction, params: ProblemParams, pot: PotentialModel,
                  tables: KernelTables, report: EnergyReport | None = None) -> float:
    """phi(s, v) = I(h(s, v)), h(s, v)(x) = e^{2s} v(e^s x), in closed form.

    Only V is resampled (at e^{-s} x); v is never interpolated.
    """
    rep = report if report is not None else energy(v, params, pot, tables)
    if s == 0:
        return rep.I
    t = math.exp(s)
    wV, _ = weighted_scaled(pot, v, t)
    return dilation_energy(t, rep, wV, params)
