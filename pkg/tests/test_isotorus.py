import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import finitegap as fg
from finitegap.errors import FiniteGapError

import oracles


E2 = fg.make_band_set([-2.0, 2.0])


# ---------------------------------------------------------------------------
# Dirichlet data


def test_dirichlet_validation(period2_set):
    with pytest.raises(FiniteGapError):
        fg.dirichlet_data(period2_set, [(5.0, 1)])  # outside the gap
    with pytest.raises(FiniteGapError):
        fg.dirichlet_data(period2_set, [(0.0, 2)])  # bad sheet
    with pytest.raises(FiniteGapError):
        fg.dirichlet_data(period2_set, [])  # wrong count


def test_dirichlet_json_round_trip(period2_set):
    dd = fg.dirichlet_data(period2_set, [(0.3, -1)])
    dd2 = fg.DirichletData.from_json(dd.to_json())
    assert dd2.gammas == dd.gammas and dd2.sheets == dd.sheets


def test_dirichlet_from_angles_hits_edges(period2_set):
    dd0 = fg.dirichlet_from_angles(period2_set, [0.0])
    assert dd0.gammas[0] == period2_set.gap(0)[0]
    ddpi = fg.dirichlet_from_angles(period2_set, [np.pi])
    assert ddpi.gammas[0] == period2_set.gap(0)[1]
    ddup = fg.dirichlet_from_angles(period2_set, [np.pi / 2])
    assert ddup.sheets[0] == 1
    dddn = fg.dirichlet_from_angles(period2_set, [3 * np.pi / 2])
    assert dddn.sheets[0] == -1


# ---------------------------------------------------------------------------
# minimal Herglotz functions


def test_free_case_closed_form():
    mh = fg.minimal_herglotz(E2, fg.DirichletData((), ()))
    for z in (3.0, 1j, -2.5 + 0.1j):
        assert complex(mh.m(z)) == pytest.approx(complex(oracles.m_free(z)),
                                                 abs=1e-12)
    mu = fg.torus_measure(mh)
    assert complex(mh.m(3.0)) == pytest.approx(mu.m(3.0), abs=1e-10)


def test_free_measure_is_semicircle():
    mh = fg.minimal_herglotz(E2, fg.DirichletData((), ()))
    mu = fg.torus_measure(mh)
    for x in (-1.5, 0.0, 0.7):
        assert mu.density(x) == pytest.approx(np.sqrt(4 - x * x) / (2 * np.pi),
                                              rel=1e-10)
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_symmetric_measure_even_no_atoms(period2_set):
    dd = fg.dirichlet_data(period2_set, [(0.0, -1)])
    mh = fg.minimal_herglotz(period2_set, dd)
    mu = fg.torus_measure(mh)
    assert len(mu.point_masses) == 0
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-8)
    for t in (1.2, 1.6, 2.0):
        assert mu.density(t) == pytest.approx(mu.density(-t), rel=1e-10)


def test_all_minus_sheets_no_atoms():
    e = fg.make_band_set([-2, -0.5, 0.5, 1, 1.5, 2])
    dd = fg.dirichlet_data(e, [(0.0, -1), (1.2, -1)])
    mh = fg.minimal_herglotz(e, dd)
    mu = fg.torus_measure(mh)
    assert len(mu.point_masses) == 0
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-8)


def test_plus_sheet_gives_atom(period2_set):
    dd = fg.dirichlet_data(period2_set, [(0.0, +1)])
    mh = fg.minimal_herglotz(period2_set, dd)
    mu = fg.torus_measure(mh)
    assert len(mu.point_masses) == 1
    x0, w = mu.point_masses[0]
    assert x0 == 0.0
    # residue 2 c sqrt(|R(0)|); R(0) = 5 for this set
    assert w == pytest.approx(2 * mh.c * np.sqrt(5.0), abs=1e-12)
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-8)


def test_edge_dirichlet_degenerate(period2_set):
    beta = period2_set.gap(0)[0]  # = -1, a band edge
    for sheet in (-1, +1):
        dd = fg.dirichlet_data(period2_set, [(beta, sheet)])
        mh = fg.minimal_herglotz(period2_set, dd)
        mu = fg.torus_measure(mh)
        assert len(mu.point_masses) == 0  # edges never carry mass
        assert mu.total_mass() == pytest.approx(1.0, abs=1e-8)
        # S(gamma) = 0 is the degenerate condition
        assert abs(mh.S(beta)) < 1e-12


def test_m_herglotz_on_upper_half_plane(period2_set):
    rng = np.random.default_rng(12)
    dd = fg.dirichlet_data(period2_set, [(0.4, +1)])
    mh = fg.minimal_herglotz(period2_set, dd)
    for _ in range(300):
        z = complex(rng.uniform(-4, 4), 10 ** rng.uniform(-3, 1))
        assert complex(mh.m(z)).imag > 0


def test_m_matches_quadrature(period2_set):
    dd = fg.dirichlet_data(period2_set, [(0.7, -1)])
    mh = fg.minimal_herglotz(period2_set, dd)
    mu = fg.torus_measure(mh)
    for z in (3.0, 1j, -4.2 + 0.5j):
        assert complex(mh.m(z)) == pytest.approx(mu.m(z), abs=1e-9)


def test_m_asymptotic_normalization(period2_set):
    dd = fg.dirichlet_data(period2_set, [(0.4, +1)])
    mh = fg.minimal_herglotz(period2_set, dd)
    z = 1e5j
    assert abs(complex(z * mh.m(z)) - (-1.0)) < 1e-4


# ---------------------------------------------------------------------------
# torus Jacobi coefficients


def test_period2_coefficients(period2_torus):
    a, b = period2_torus.params.coeffs(100)
    s5 = np.sqrt(5.0)
    hi, lo = (s5 + 1) / 2, (s5 - 1) / 2
    assert np.abs(b).max() < 1e-8
    evens, odds = a[4:100:2], a[5:100:2]
    vals = {round(float(evens.mean()), 6), round(float(odds.mean()), 6)}
    assert vals == {round(hi, 6), round(lo, 6)}
    assert np.abs(evens - evens.mean()).max() < 1e-6
    assert np.abs(odds - odds.mean()).max() < 1e-6


def test_free_torus_point():
    tp = fg.torus_jacobi(E2, fg.DirichletData((), ()), 20)
    a, b = tp.params.coeffs(20)
    assert a == pytest.approx(np.ones(20), abs=1e-9)
    assert np.abs(b).max() < 1e-9


def test_periodicity_from_rational_harmonic(period2_set, period2_torus):
    eq = fg.solve_equilibrium(period2_set)
    p = fg.rational_harmonic_period(eq.harmonic_measures)
    assert p == 2
    a, b = period2_torus.params.coeffs(102)
    n = np.arange(5, 100)
    dev = np.abs(a[n + p - 1] - a[n - 1]) + np.abs(b[n + p - 1] - b[n - 1])
    assert dev.max() < 1e-6


def test_torus_regularity():
    e = fg.make_band_set([-1.9, -0.4, 0.6, 2.2])
    eq = fg.solve_equilibrium(e)
    dd = fg.dirichlet_data(e, [(0.1, +1)])
    tp = fg.torus_jacobi(e, dd, 300)
    a, _ = tp.params.coeffs(300)
    geo = np.exp(np.cumsum(np.log(a)) / np.arange(1, 301))
    assert abs(geo[-1] - eq.capacity) < 1e-2
    # capacity-normalized products stay in a fixed two-sided interval
    prods = np.exp(np.cumsum(np.log(a)) - np.arange(1, 301) * np.log(eq.capacity))
    assert prods.min() > 0.1 and prods.max() < 10.0


def test_szego_normalized_growth_bounded(period2_set, period2_torus):
    # |p_n(z)| e^{-n G(z)} stays in [delta, 1/delta]; delta recorded per point
    eq = fg.solve_equilibrium(period2_set)
    J = period2_torus.jacobi_params(501)
    for z in (3.0, -3.2, 1.5j):
        G = fg.green(eq, z)
        logp = fg.oprl_log_abs(J, 500, z)
        vals = logp - np.arange(501) * G
        delta = np.exp(-np.abs(vals).max())
        assert delta > 1e-3, f"z={z}: normalized growth left [delta, 1/delta]"


def test_jacobi_params_extension(period2_torus):
    J = period2_torus.jacobi_params(10)
    a, b = J.coeffs(40)  # forces tail extension through re-stripping
    s5 = np.sqrt(5.0)
    assert np.abs(np.sort(a[20:22]) - [(s5 - 1) / 2, (s5 + 1) / 2]).max() < 1e-6


# ---------------------------------------------------------------------------
# reflectionless residual


def test_reflectionless_free():
    mh = fg.minimal_herglotz(E2, fg.DirichletData((), ()))
    assert fg.reflectionless_residual(mh) < 1e-10


def test_reflectionless_two_band(period2_set):
    for entry in [(0.0, -1), (0.0, +1), (0.5, +1), (-0.8, -1)]:
        mh = fg.minimal_herglotz(period2_set, fg.dirichlet_data(period2_set, [entry]))
        assert fg.reflectionless_residual(mh) < 1e-8


def test_g00_real_in_gap(period2_set):
    # control: off the bands the same expression is genuinely real
    dd = fg.dirichlet_data(period2_set, [(0.5, -1)])
    mh = fg.minimal_herglotz(period2_set, dd)
    x = 0.1  # in the gap, away from gamma
    g = -1.0 / (complex(mh.m(x)) - complex(mh.m_second_sheet(x)))
    assert abs(g.real) > 1e-3
    assert abs(g.imag) < 1e-12


# ---------------------------------------------------------------------------
# d_m metric


def test_dm_identical_zero():
    J = fg.free_jacobi()
    assert fg.d_m(J, J, 1) == 0.0


def test_dm_constant_difference():
    eps = 1e-3
    J = fg.JacobiParams(np.ones(1), np.zeros(1),
                        fg.jacobi.PeriodicTail([1.0], [0.0]))
    Jp = fg.JacobiParams(np.array([1 + eps]), np.zeros(1),
                         fg.jacobi.PeriodicTail([1 + eps], [0.0]))
    expect = eps / (1 - np.exp(-1.0))
    assert fg.d_m(J, Jp, 3) == pytest.approx(expect, rel=1e-9)


def test_dm_decreasing_for_decaying_difference():
    delta = 0.5 / np.arange(1, 400) ** 1.2
    J = fg.JacobiParams(np.ones(399), np.zeros(399))
    Jp = fg.JacobiParams(np.ones(399), delta)
    vals = [fg.d_m(J, Jp, m) for m in (1, 4, 16, 64)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_dm_metric_axioms():
    rng = np.random.default_rng(21)
    for _ in range(20):
        heads = [fg.JacobiParams(1 + 0.3 * rng.uniform(-1, 1, 50),
                                 0.3 * rng.uniform(-1, 1, 50)) for _ in range(3)]
        J1, J2, J3 = heads
        m = int(rng.integers(1, 5))
        d12 = fg.d_m(J1, J2, m)
        d21 = fg.d_m(J2, J1, m)
        assert d12 == d21  # exact symmetry
        assert d12 <= fg.d_m(J1, J3, m) + fg.d_m(J3, J2, m) + 1e-12


def test_dm_kmax_reported():
    val, kmax = fg.d_m(fg.free_jacobi(), fg.free_jacobi(), 1, return_kmax=True)
    assert val == 0.0 and kmax >= 25


# ---------------------------------------------------------------------------
# dist_to_torus


def test_dist_gapless_is_free_distance():
    J = fg.JacobiParams(np.ones(3), np.array([0.5, 0.0, 0.0]))
    res = fg.dist_to_torus(J, E2, 1)
    assert res.value == pytest.approx(fg.d_m(J, fg.free_jacobi(), 1), abs=1e-14)


def test_dist_self_floor(period2_set, period2_torus):
    res = fg.dist_to_torus(period2_torus.params, period2_set, 3)
    assert res.value < 1e-4
    assert abs(res.dirichlet.gammas[0] - 0.0) < 1e-2


def test_dist_blind_below_m(period2_set, period2_torus):
    # perturb only indices < m; d_m to any torus candidate cannot see it
    m = 6
    a, b = period2_torus.params.coeffs(60)
    b_pert = b.copy()
    b_pert[:m - 1] += 0.3
    J = fg.JacobiParams(a, b, fg.jacobi.ExtendTail(
        period2_torus.params.tail.provider, 60))
    Jp = fg.JacobiParams(a, b_pert, fg.jacobi.ExtendTail(
        period2_torus.params.tail.provider, 60))
    assert abs(fg.d_m(J, Jp, m)) < 1e-10
    d1 = fg.d_m(J, period2_torus.params, m)
    d2 = fg.d_m(Jp, period2_torus.params, m)
    assert abs(d1 - d2) < 1e-10


def test_dist_free_from_two_band_torus(period2_set):
    # free coefficients are never close to the period-2 family
    J = fg.free_jacobi()
    for m in (1, 5):
        res = fg.dist_to_torus(J, period2_set, m, grid_per_gap=8)
        assert res.value > 0.3


def test_dist_two_gap_product_grid():
    e = fg.make_band_set([-2, -1, -0.3, 0.4, 1.1, 2])
    dd = fg.dirichlet_data(e, [(-0.6, -1), (0.7, +1)])
    tp = fg.torus_jacobi(e, dd, 48)
    res = fg.dist_to_torus(tp.params, e, 2, grid_per_gap=6)
    assert res.value < 1e-3
    assert np.abs(np.array(res.dirichlet.gammas) - [-0.6, 0.7]).max() < 0.05
