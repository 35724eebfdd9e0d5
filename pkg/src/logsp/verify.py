"""
Identity suite: the algebraic and scaling identities every discretisation
choice has to respect, evaluated on fixed-seed fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grid as _grid
from .energy import ProblemParams, augmented_phi, energy, residual
from .fields import random_smooth_field
from .kernel import KernelTables, n_functional
from .manifolds import lemma55_margins
from .potential import PotentialModel, check_conditions

SEED = 20240607


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool


def _rel(a: float, b: float, scale: float | None = None) -> float:
    s = scale if scale is not None else max(abs(a), abs(b))
    return abs(a - b) / s if s > 0 else abs(a - b)


def check_kernel_split(tables: KernelTables, count: int = 20, seed: int = SEED) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        u = random_smooth_field(tables.spec, rng)
        n0, n1, n2 = (n_functional(tables, k, u) for k in (0, 1, 2))
        worst = max(worst, abs(n0 - (n1 - n2)) / (abs(n1) + abs(n2)))
    return worst


def check_j_identity(params: ProblemParams, pots: list[PotentialModel], tables: KernelTables,
                     count: int = 20, seed: int = SEED) -> float:
    """max |J - (2 I'(u)u - P)| over fields, relative to the largest component."""
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for pot in pots:
        for _ in range(count):
            r = energy(random_smooth_field(tables.spec, rng), params, pot, tables, split=False)
            scale = max(abs(r.J), 2 * abs(r.Ipair), abs(r.P), 2 * r.grad_sq, r.weighted_V,
                        abs(r.N0), r.l2_sq**2 / (8 * math.pi), params.b * r.lp)
            worst = max(worst, abs(r.J - (2 * r.Ipair - r.P)) / scale)
    return worst


def check_gradient(params: ProblemParams, pot: PotentialModel, tables: KernelTables,
                   directions: int = 5, eps: float = 1e-4, seed: int = SEED) -> float:
    """Central differences of I along smooth directions against int residual * v."""
    rng = np.random.default_rng(seed + 2)
    u = _grid.gaussian(tables.spec)
    g = residual(u, params, pot, tables).values
    worst = 0.0
    for _ in range(directions):
        v = random_smooth_field(tables.spec, rng).values
        ip = energy(u.with_values(u.values + eps * v), params, pot, tables, split=False).I
        im = energy(u.with_values(u.values - eps * v), params, pot, tables, split=False).I
        fd = (ip - im) / (2 * eps)
        exact = _grid.integrate(g * v, tables.spec)
        worst = max(worst, _rel(fd, exact))
    return worst


def dilation_law_errors(tables: KernelTables, ts=(0.5, 2.0)) -> dict[str, float]:
    """Relative errors of the dilation laws for the analytic Gaussian."""
    u = _grid.gaussian(tables.spec)
    l2 = _grid.lp_norm_p(u, 2)
    g = _grid.h1_seminorm_sq(u)
    lq = {q: _grid.lp_norm_p(u, q) for q in (3, 4)}
    n0 = n_functional(tables, 0, u)
    errs = {"l2": 0.0, "grad": 0.0, "l3": 0.0, "l4": 0.0, "N0": 0.0}
    for t in ts:
        ut = _grid.dilate(u, t)
        errs["l2"] = max(errs["l2"], _rel(_grid.lp_norm_p(ut, 2), t**2 * l2))
        errs["grad"] = max(errs["grad"], _rel(_grid.h1_seminorm_sq(ut), t**4 * g))
        for q in (3, 4):
            errs[f"l{q}"] = max(errs[f"l{q}"], _rel(_grid.lp_norm_p(ut, q), t ** (2 * q - 2) * lq[q]))
        law = t**4 * n0 - t**4 * math.log(t) / (2 * math.pi) * l2**2
        errs["N0"] = max(errs["N0"], _rel(n_functional(tables, 0, ut), law))
    return errs


def check_phi_derivative(params: ProblemParams, pot: PotentialModel, tables: KernelTables,
                         s_values=(-0.5, 0.0, 0.5), ds: float = 1e-5) -> float:
    """d/ds phi(s, v) by central differences against J(h(s, v)) evaluated directly."""
    v = _grid.gaussian(tables.spec)
    rep = energy(v, params, pot, tables, split=False)
    worst = 0.0
    for s in s_values:
        fd = (augmented_phi(s + ds, v, params, pot, tables, rep)
              - augmented_phi(s - ds, v, params, pot, tables, rep)) / (2 * ds)
        J = energy(_grid.dilate(v, math.exp(s)), params, pot, tables, split=False).J
        worst = max(worst, _rel(fd, J))
    return worst


def check_lemma55(params: ProblemParams, pot: PotentialModel, tables: KernelTables,
                  count: int = 5, seed: int = SEED) -> float:
    """Smallest fiber-inequality margin scaled by 1 + |I(u)|, over several fields."""
    rng = np.random.default_rng(seed + 3)
    t = np.logspace(-3, 3, 400)
    fields = [_grid.gaussian(tables.spec)] + [random_smooth_field(tables.spec, rng)
                                              for _ in range(count - 1)]
    worst = math.inf
    for u in fields:
        rep = energy(u, params, pot, tables, split=False)
        m = lemma55_margins(u, params, pot, tables, t, report=rep)
        worst = min(worst, float(m.min()) / (1.0 + abs(rep.I)))
    return worst


def run_suite(params: ProblemParams, pot: PotentialModel, tables: KernelTables,
              extra_pots: list[PotentialModel] | None = None) -> list[CheckResult]:
    out: list[CheckResult] = []

    def add(name, value, tol, passed=None):
        ok = value <= tol if passed is None else passed
        out.append(CheckResult(name, float(value), tol, bool(ok)))

    add("kernel split N0 = N1 - N2", check_kernel_split(tables), 1e-10)
    add("J = 2 I'(u)u - P", check_j_identity(params, [pot] + list(extra_pots or []), tables),
        1e-10)
    add("gradient vs central differences", check_gradient(params, pot, tables), 1e-5)
    for key, err in dilation_law_errors(tables).items():
        add(f"dilation law {key}", err, 1e-5)
    add("d/ds phi = J(h(s, v))", check_phi_derivative(params, pot, tables), 1e-5)
    if pot.is_constant or check_conditions(pot, tables.spec, 64).conditions["V2"].passed:
        m = check_lemma55(params, pot, tables)
        add("fiber inequality margin", m, -1e-8, passed=m >= -1e-8)
    return out


def format_report(results: list[CheckResult]) -> str:
    lines = [f"{'check':<36} {'value':>14} {'tolerance':>11}  status"]
    for r in results:
        lines.append(f"{r.name:<36} {r.value:>14.6e} {r.tolerance:>11.1e}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    lines.append(f"overall: {'PASS' if all(r.passed for r in results) else 'FAIL'}")
    return "\n".join(lines) + "\n"
