"""Ground-state runs shared by the solver and acceptance tests (each solve runs once)."""

import functools

import logsp as L
from logsp.energy import ProblemParams
from logsp.solver import SolveConfig, minimize, minimize_np

POTENTIALS = {
    "const": lambda: L.builtin_constant(1.0),
    "well1": L.builtin_well1,
    "well2": L.builtin_well2,
}


@functools.lru_cache(maxsize=None)
def tables_for(n, L_=12.0):
    return L.build_kernel_tables(L.make_grid(L_, n))


@functools.lru_cache(maxsize=None)
def solve(pot, p, b, n=256, path="auto", tol_grad=1e-6, width=1.0, amplitude=1.0,
          center=(0.0, 0.0)):
    cfg = SolveConfig(seed={"kind": "gaussian", "width": width, "amplitude": amplitude,
                            "center": center}, tol_grad=tol_grad)
    f = minimize_np if path == "np" else minimize
    return f(cfg, ProblemParams(p, b), POTENTIALS[pot](), tables_for(n))
