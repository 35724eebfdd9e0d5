import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy import integrate as sint
from scipy.special import exp1

import logsp as L
from logsp import grid as G
from logsp.kernel import unit_cell_log_mean

from conftest import smooth_fields

EULER_GAMMA = 0.5772156649015329


def radial_log_potential(r):
    """(log|.| * e^{-|.|^2})(r) = pi log r + (pi/2) E1(r^2), from Newton's theorem."""
    return math.pi * np.log(r) + 0.5 * math.pi * exp1(r * r)


# ---------------------------------------------------------------- tables

def test_unit_cell_constant_by_2d_quadrature():
    # mean of log|x| over [-1/2, 1/2]^2 = 4 * integral over the quarter cell
    val, _ = sint.dblquad(lambda y, x: 0.5 * math.log(x * x + y * y), 0, 0.5, 0, 0.5,
                          epsabs=1e-13, epsrel=1e-13)
    assert abs(4 * val - unit_cell_log_mean()) < 1e-11


def test_k1_at_one_cell(tables, spec):
    assert tables.kernel_at(1, 1, 0) == math.log1p(spec.h)
    assert tables.kernel_at(1, 0, 0) == 0.0


def test_lattice_regularised_cell(spec):
    t = L.build_kernel_tables(spec, "lattice")
    assert t.padded == 2 * spec.n
    assert t.kernel_at(0, 0, 0) == pytest.approx(math.log(0.09375) + unit_cell_log_mean(),
                                                 abs=1e-14)
    assert t.kernel_at(1, 0, 0) == 0.0
    assert t.kernel_at(0, 3, 4) == pytest.approx(math.log(5 * spec.h), abs=1e-14)


@pytest.mark.parametrize("scheme", ["spectral", "lattice"])
def test_split_samplewise(spec, scheme):
    t = L.build_kernel_tables(spec, scheme)
    rng = np.random.default_rng(3)
    idx = rng.integers(0, t.padded, size=(10_000, 2))
    idx[0] = (0, 0)
    dev = max(abs(t.kernel_at(0, i, j) - (t.kernel_at(1, i, j) - t.kernel_at(2, i, j)))
              for i, j in idx)
    assert dev < 1e-13


def test_spectral_k0_matches_log_r_off_origin(tables, spec):
    # the effective kernel is the band-limited projection of the truncated
    # log, so pointwise agreement is only to the ringing level
    for di, dj in [(20, 0), (37, 11), (-60, 45), (100, 100)]:
        r = spec.h * math.hypot(di, dj)
        assert abs(tables.kernel_at(0, di, dj) - math.log(r)) < 5e-3


def test_tables_cached(spec):
    assert L.build_kernel_tables(spec) is L.build_kernel_tables(spec)
    with pytest.raises(ValueError):
        L.build_kernel_tables(L.make_grid(11, 64), "multipole")


def test_tables_are_read_only(tables):
    with pytest.raises(ValueError):
        tables.fourier[0][0, 0] = 1.0


# ---------------------------------------------------------------- convolve

def test_convolve_zero(tables, spec):
    assert not np.any(L.convolve(tables, 0, G.zeros(spec)).values)


@pytest.mark.parametrize("kid", [0, 1, 2])
def test_delta_response(small_tables, small_spec, kid):
    n = small_spec.n
    j = (40, 71)
    rho = np.zeros((n, n))
    rho[j] = 1.0 / small_spec.h**2
    w = L.convolve(small_tables, kid, G.GridFunction(small_spec, rho)).values
    I, Jc = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    expect = np.vectorize(lambda a, b: small_tables.kernel_at(kid, a - j[0], b - j[1]))(I, Jc)
    assert np.max(np.abs(w - expect)) < 1e-12 * max(1.0, np.max(np.abs(expect)))


def test_gaussian_density_radial_oracle(tables, spec):
    rho = L.sample_function(spec, lambda x, y: np.exp(-(x * x + y * y)))
    w = L.convolve(tables, 0, rho).values
    X, Y = spec.mesh()
    r = np.hypot(X, Y)
    bulk = r < 8.0
    ref = radial_log_potential(r[bulk])
    assert np.max(np.abs(w[bulk] - ref)) / np.max(np.abs(ref)) < 1e-5


def test_translation_covariance(tables, spec):
    rho = L.gaussian(spec, width=0.8, center=(-1.0, 0.5))
    shifted = L.gaussian(spec, width=0.8, center=(-1.0 + 5 * spec.h, 0.5 - 3 * spec.h))
    w = L.convolve(tables, 0, rho).values
    ws = L.convolve(tables, 0, shifted).values
    interior = (slice(40, 200), slice(40, 200))
    moved = np.roll(np.roll(w, 5, axis=0), -3, axis=1)
    assert np.max(np.abs(ws[interior] - moved[interior])) < 1e-12


def test_spec_mismatch(tables, small_spec):
    u = L.gaussian(small_spec)
    for call in (lambda: L.convolve(tables, 0, u), lambda: L.n_functional(tables, 0, u),
                 lambda: L.b_form(tables, 1, u, u)):
        with pytest.raises(ValueError):
            call()


def test_deterministic_and_thread_safe(tables, spec):
    fields = smooth_fields(spec, 4)
    serial = [L.n_functional(tables, 0, u) for u in fields]
    with ThreadPoolExecutor(4) as ex:
        parallel = list(ex.map(lambda u: L.n_functional(tables, 0, u), fields))
    assert serial == parallel


def test_fft_worker_count_does_not_change_values(tables, spec):
    u = smooth_fields(spec, 1)[0]
    vals = []
    for w in (1, 4):
        G.set_fft_workers(w)
        vals.append(L.n_functional(tables, 0, u))
    G.set_fft_workers(1)
    assert abs(vals[0] - vals[1]) <= 1e-13 * abs(vals[0])


# ---------------------------------------------------------------- functionals

def test_n_functionals_zero(tables, spec):
    for k in (0, 1, 2):
        assert L.n_functional(tables, k, G.zeros(spec)) == 0.0


def test_n0_of_gaussian_against_radial_oracle(tables, gauss):
    # N0 = (1/2pi) int w rho, w from the closed-form radial potential
    ref, _ = sint.quad(lambda r: radial_log_potential(r) * math.exp(-r * r) * r, 0, np.inf,
                       epsabs=1e-14, epsrel=1e-13, limit=200)
    assert L.n_functional(tables, 0, gauss) == pytest.approx(ref, rel=1e-8)
    # and the closed form (pi/4)(log 2 - gamma)
    assert ref == pytest.approx(math.pi / 4 * (math.log(2) - EULER_GAMMA), rel=1e-10)


def test_split_identity_gaussian(tables, gauss):
    n0, n1, n2 = (L.n_functional(tables, k, gauss) for k in (0, 1, 2))
    assert abs(n0 - (n1 - n2)) <= 1e-10 * (abs(n1) + abs(n2))


def test_split_identity_random_fields(tables, spec):
    for u in smooth_fields(spec, 20, seed=11):
        n0, n1, n2 = (L.n_functional(tables, k, u) for k in (0, 1, 2))
        assert abs(n0 - (n1 - n2)) <= 1e-10 * (abs(n1) + abs(n2))
        assert n1 >= 0 and n2 >= 0


def test_n2_finite_positive(tables, gauss):
    n2 = L.b_form(tables, 2, gauss.with_values(gauss.values**2),
                  gauss.with_values(gauss.values**2))
    assert math.isfinite(n2) and n2 > 0
    # finite ratio against |u|_{8/3}^4
    assert n2 / L.lp_norm_p(gauss, 8 / 3) ** (3 / 2) < 10


def test_b_form_properties(tables, spec):
    f, g, w = smooth_fields(spec, 3, seed=5)
    alpha = -1.7
    for k in (0, 1, 2):
        lhs = L.b_form(tables, k, f.with_values(alpha * f.values + g.values), w)
        rhs = alpha * L.b_form(tables, k, f, w) + L.b_form(tables, k, g, w)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))
        fg, gf = L.b_form(tables, k, f, g), L.b_form(tables, k, g, f)
        assert abs(fg - gf) <= 1e-12 * abs(fg)
        assert L.b_form(tables, k, G.zeros(spec), g) == 0.0
        rho = f.with_values(f.values**2)
        assert L.b_form(tables, k, rho, rho) == pytest.approx(L.n_functional(tables, k, f),
                                                              rel=1e-14)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_n0_dilation_law(tables, gauss, t):
    n0 = L.n_functional(tables, 0, gauss)
    l2 = L.lp_norm_p(gauss, 2)
    law = t**4 * n0 - t**4 * math.log(t) / (2 * math.pi) * l2**2
    assert L.n_functional(tables, 0, L.dilate(gauss, t)) == pytest.approx(law, rel=1e-5)


def test_lattice_scheme_is_a_coarser_cross_check(spec, gauss, tables):
    ref = math.pi / 4 * (math.log(2) - EULER_GAMMA)
    lat = L.build_kernel_tables(spec, "lattice")
    e_lat = abs(L.n_functional(lat, 0, gauss) - ref)
    e_spec = abs(L.n_functional(tables, 0, gauss) - ref)
    assert e_spec < 1e-12 < e_lat < 2e-2
