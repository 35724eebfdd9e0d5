"""
Potential wells V with their radial derivative (grad V(x), x) supplied analytically,
plus a sampling checker for the well conditions (V0)-(V3).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import GridSpec

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """A potential V together with r * dV/dr = (grad V(x), x).

    ``V0`` is inf V and ``Vinf`` the limit at infinity; both are model data,
    the checker verifies them against samples.
    """

    name: str
    V: Field
    radial_derivative: Field
    V0: float
    Vinf: float
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def calV(self, x, y):
        """V - (grad V, x) / 2."""
        return self.V(x, y) - 0.5 * self.radial_derivative(x, y)

    @property
    def is_constant(self) -> bool:
        return self.name == "constant"

    def sample(self, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
        """(V, (grad V, x)) at the grid nodes, cached per grid."""
        hit = self._cache.get(spec)
        if hit is None:
            X, Y = spec.mesh()
            V = np.broadcast_to(np.asarray(self.V(X, Y), dtype=float), X.shape).copy()
            R = np.broadcast_to(
                np.asarray(self.radial_derivative(X, Y), dtype=float), X.shape
            ).copy()
            V.setflags(write=False)
            R.setflags(write=False)
            hit = self._cache[spec] = (V, R)
        return hit

    def sample_scaled(self, spec: GridSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(V, (grad V, x)) at the nodes divided by t, i.e. V(x / t)."""
        if t == 1.0:
            return self.sample(spec)
        X, Y = spec.mesh()
        X, Y = X / t, Y / t
        V = np.broadcast_to(np.asarray(self.V(X, Y), dtype=float), X.shape)
        R = np.broadcast_to(np.asarray(self.radial_derivative(X, Y), dtype=float), X.shape)
        return V, R


def builtin_well1() -> PotentialModel:
    """V(x) = 1 - 1/(2 + |x|^2)."""

    def V(x, y):
        return 1.0 - 1.0 / (2.0 + x * x + y * y)

    def rad(x, y):
        s = x * x + y * y
        return 2.0 * s / (2.0 + s) ** 2

    return PotentialModel("well1", V, rad, V0=0.5, Vinf=1.0)


def builtin_well2() -> PotentialModel:
    """V(x) = 1 - 1/(2 + log(1 + |x|^2))."""

    def V(x, y):
        return 1.0 - 1.0 / (2.0 + np.log1p(x * x + y * y))

    def rad(x, y):
        s = x * x + y * y
        return 2.0 * s / ((1.0 + s) * (2.0 + np.log1p(s)) ** 2)

    return PotentialModel("well2", V, rad, V0=0.5, Vinf=1.0)


def builtin_constant(c: float = 1.0) -> PotentialModel:
    if not c > 0:
        raise ValueError(f"constant potential must be positive, got {c}")
    c = float(c)

    def V(x, y):
        return np.full(np.broadcast(x, y).shape, c)

    def rad(x, y):
        return np.zeros(np.broadcast(x, y).shape)

    return PotentialModel("constant", V, rad, V0=c, Vinf=c, params={"c": c})


def builtin_bump(height: float = 1.0, base: float = 1.0) -> PotentialModel:
    """base + height * exp(-|x|^2): a bump, not a well.  Kept as a negative fixture."""

    def V(x, y):
        return base + height * np.exp(-(x * x + y * y))

    def rad(x, y):
        s = x * x + y * y
        return -2.0 * height * s * np.exp(-s)

    return PotentialModel("bump", V, rad, V0=base, Vinf=base,
                          params={"height": height, "base": base})


BUILTINS = {
    "well1": builtin_well1,
    "well2": builtin_well2,
    "constant": builtin_constant,
    "bump": builtin_bump,
}


def from_config(name: str, params: Optional[dict] = None) -> PotentialModel:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**(params or {}))


# ---------------------------------------------------------------- checker


@dataclass
class ConditionResult:
    name: str
    passed: bool
    margin: float
    witness: Optional[tuple[float, float]] = None
    note: str = ""


@dataclass
class PotentialReport:
    model: str
    eta: float
    strict_well: bool
    conditions: dict[str, ConditionResult]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def format(self) -> str:
        lines = [f"potential {self.model}: eta = {self.eta:.6g}, strict well = {self.strict_well}"]
        for c in self.conditions.values():
            w = "" if c.witness is None else f" at ({c.witness[0]:.4g}, {c.witness[1]:.4g})"
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"  {c.name:<6} {status}  margin {c.margin:+.6e}{w} {c.note}".rstrip())
        return "\n".join(lines)


# monotonicity / sign tests tolerate rounding at this absolute level
_SLACK = 1e-12


def _witness(X, Y, flat_index) -> tuple[float, float]:
    i = np.unravel_index(flat_index, X.shape)
    return float(X[i]), float(Y[i])


def check_conditions(model: PotentialModel, spec: GridSpec, ray_samples: int = 64,
                     directions: int = 64) -> PotentialReport:
    """Sample (V0)-(V3) and (grad V, x) >= 0 on every node and along rays.

    (V2) is tested as monotonicity of calV(t e) in t over ``ray_samples``
    log-spaced t in [1e-3, 1e3] for each of ``directions`` unit vectors e.
    """
    if ray_samples < 32:
        raise ValueError("ray_samples must be >= 32")
    X, Y = spec.mesh()
    V, R = model.sample(spec)
    V = np.asarray(V)
    R = np.asarray(R)
    Vinf = model.Vinf
    out: dict[str, ConditionResult] = {}

    # (V0): 0 < V0 <= V <= Vinf
    lo = V - model.V0
    hi = Vinf - V
    m_pos = model.V0
    m_lo = float(lo.min())
    m_hi = float(hi.min())
    margin = min(m_pos, m_lo + _SLACK, m_hi + _SLACK)
    witness = None
    note = ""
    if m_hi + _SLACK < 0:
        witness = _witness(X, Y, np.argmin(hi))
        note = "V exceeds its limit at infinity"
    elif m_lo + _SLACK < 0:
        witness = _witness(X, Y, np.argmin(lo))
        note = "V drops below the declared infimum"
    elif m_pos <= 0:
        witness = _witness(X, Y, np.argmin(V))
        note = "infimum not positive"
    out["V0"] = ConditionResult("V0", margin >= 0, margin, witness, note)

    # (V1): |(grad V, x)| <= eta, eta estimated over nodes
    absR = np.abs(R)
    eta = float(absR.max())
    ok = bool(np.isfinite(eta))
    out["V1"] = ConditionResult("V1", ok, eta, None if ok else _witness(X, Y, np.argmax(absR)),
                                f"eta = {eta:.6g}")

    # (V2): t -> calV(t e) nondecreasing along rays
    theta = 2.0 * np.pi * np.arange(directions) / directions
    t = np.logspace(-3, 3, ray_samples)
    RX = np.outer(np.cos(theta), t)
    RY = np.outer(np.sin(theta), t)
    ray_vals = np.broadcast_to(np.asarray(model.calV(RX, RY), dtype=float), RX.shape)
    steps = np.diff(ray_vals, axis=1)
    m2 = float(steps.min())
    ok = m2 >= -_SLACK
    w = None
    if not ok:
        a, b = np.unravel_index(np.argmin(steps), steps.shape)
        w = (float(RX[a, b + 1]), float(RY[a, b + 1]))
    out["V2"] = ConditionResult("V2", ok, m2, w)

    # (V3): V + (grad V, x)/2 <= Vinf, on nodes and rays
    g_nodes = Vinf - (V + 0.5 * R)
    ray_V = np.broadcast_to(np.asarray(model.V(RX, RY), dtype=float), RX.shape)
    ray_R = np.broadcast_to(np.asarray(model.radial_derivative(RX, RY), dtype=float), RX.shape)
    g_rays = Vinf - (ray_V + 0.5 * ray_R)
    m3 = float(min(g_nodes.min(), g_rays.min()))
    ok = m3 >= -_SLACK
    w = None
    if not ok:
        if g_nodes.min() <= g_rays.min():
            w = _witness(X, Y, np.argmin(g_nodes))
        else:
            w = _witness(RX, RY, np.argmin(g_rays))
    out["V3"] = ConditionResult("V3", ok, m3, w)

    # (grad V, x) >= 0 everywhere
    m51 = float(min(R.min(), ray_R.min()))
    ok = m51 >= -_SLACK
    out["radial"] = ConditionResult("radial", ok, m51,
                                    None if ok else _witness(X, Y, np.argmin(R)))

    strict = bool(model.V0 < Vinf)
    return PotentialReport(model.name, eta, strict, out)
