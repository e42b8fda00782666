import functools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toruslab import estimates as es
from toruslab import spectral
from toruslab.spectral import Field, FourierGrid, TorusGeometry

GEO = TorusGeometry()


@functools.lru_cache(maxsize=None)
def gauss_nodes(n):
    return np.polynomial.legendre.leggauss(n)


def lhs_quadrature(a, b, nodes=600):
    """Gauss-Legendre on [0, 1]; frequency gaps <= 200 are far inside its exact range."""
    x, w = gauss_nodes(nodes)
    t = 0.5 * (x + 1)
    vals = np.abs(np.exp(1j * t[:, None] * np.asarray(a)[None, :]) @ np.asarray(b)) ** 2
    return float(0.5 * np.sum(w * vals))


def test_constants():
    assert float(es.S0) == pytest.approx(131 / 416)
    assert float(es.STRICHARTZ_EXPONENT) == pytest.approx(131 / 832)


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        es.SweepConfig(N_list=(8, 12))
    with pytest.raises(ValueError):
        es.SweepConfig(N_list=(16, 8))
    with pytest.raises(ValueError):
        es.SweepConfig(ensemble_size=0)
    with pytest.raises(ValueError):
        es.SweepConfig(time_interval=(0.0, 2.0))


def test_single_mode_strichartz_ratio():
    g = es.ball_grid(4)
    u = Field.mode(g, (2, 1), 3.0)
    # |u| is constant: ||u||_4 / ||u||_2 = (2 pi)^(2/4 - 2/2) on a unit time window
    assert es.strichartz_ratio(u, 4) == pytest.approx((2 * np.pi) ** -0.5, rel=1e-13)


def test_lp_norm_by_direct_quadrature():
    g = es.ball_grid(3)
    u = spectral.random_phase_field(g, 3, np.random.default_rng(0))
    n = 32
    ts = np.arange(2 * n) / (2 * n)
    direct = np.mean([(2 * np.pi) ** 2 * np.mean(np.abs(spectral.synthesize(spectral.free_flow(u, t), 4)) ** 4)
                      for t in ts]) ** 0.25
    assert es.lp_spacetime_norm(u, 4, n) == pytest.approx(direct, rel=1e-12)


def test_strichartz_rejects_support_outside_ball():
    g = es.ball_grid(8)
    with pytest.raises(ValueError):
        es.strichartz_ratio(Field.mode(g, (8, 1)), 4)


def test_sweep_fit_on_synthetic_ratios():
    cfg = es.SweepConfig(ensemble_size=3)
    res = es.strichartz_sweep(cfg, ratios_fn=lambda N: [0.1 * N ** 0.3, 0.05, 0.01])
    assert res.fitted_exponent == pytest.approx(0.3, abs=1e-6)


def test_small_sweep_is_deterministic_and_threads_agree():
    cfg = es.SweepConfig(N_list=(2, 4), ensemble_size=4, n_time_samples=16)
    a = es.strichartz_sweep(cfg, threads=1).summary()
    b = es.strichartz_sweep(cfg, threads=3).summary()
    assert a == b
    assert all(r["refinement_delta"] < es.REFINEMENT_TOL for r in a["records"])


def test_bilinear_ratio_with_constant_factor():
    g = es.ball_grid(8)
    one = Field.mode(g, (0, 0))
    u2 = spectral.random_phase_field(g, 8, np.random.default_rng(2))
    # u1 == 1: ||u2 flow||_{L^2_t L^2_x} / (||1|| ||u2||) = 1 / (2 pi)
    assert es.bilinear_ratio(one, u2) == pytest.approx(1 / (2 * np.pi), rel=1e-12)


def test_bilinear_sweep_reports_spread():
    cfg = es.SweepConfig(ensemble_size=3, n_time_samples=16)
    res = es.bilinear_sweep(2, [4, 8], cfg)
    assert res.extra["n2_spread"] >= 1.0
    assert [r.N for r in res.records] == [(2, 4), (2, 8)]


def test_write_sweep(tmp_path):
    cfg = es.SweepConfig(ensemble_size=3)
    res = es.strichartz_sweep(cfg, ratios_fn=lambda N: [1.0, 2.0, float(N)])
    es.write_sweep(res, str(tmp_path))
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "N,max_ratio,argmax_seed,refinement_delta"
    assert lines[1].startswith("8,8.0,2,")


# exponential sums

def test_exp_sum_single_term_and_coincident():
    r = es.exp_sum_check([3.7], [0.6 - 0.8j])
    assert r.ratio == 1.0
    r = es.exp_sum_check([2.0, 2.0, 2.0], [1.0, 2.0, 0.5])
    assert r.ratio == pytest.approx(1.0, abs=1e-15)


def test_exp_sum_rhs_grouping():
    # bins: a in (j - 1/2, j + 1/2], ties go to the lower j
    assert es.exp_sum_rhs([0.5, 0.2, 1.2], [1, 1, 1]) == pytest.approx(4 + 1)
    assert es.exp_sum_rhs([0.0, 0.4, 3.0], [1, 2, 3]) == pytest.approx(9 + 9)


def test_exp_sum_closed_form_matches_quadrature():
    for a, b in es.random_exp_sum_instances(25, seed=5):
        assert es.exp_sum_lhs(a, b) == pytest.approx(lhs_quadrature(a, b), rel=1e-10, abs=1e-10)


def test_exp_sum_validation():
    with pytest.raises(ValueError):
        es.exp_sum_check([], [])
    with pytest.raises(ValueError):
        es.exp_sum_check([1.0, 2.0], [1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=12))
def test_property_lhs_nonnegative_and_bounded(terms):
    a = [t[0] for t in terms]
    b = [complex(t[1], t[2]) for t in terms]
    lhs = es.exp_sum_lhs(a, b)
    assert lhs >= -1e-9
    assert lhs <= sum(abs(x) for x in b) ** 2 * (1 + 1e-12) + 1e-12


# quadrilinear orthogonality

def test_quadrilinear_exact_matches_collocation():
    g = FourierGrid(GEO, 16)
    rng = np.random.default_rng(4)
    us = [spectral.smooth_random_field(g, rng, kmax=3) for _ in range(4)]
    assert es.quadrilinear_integral(*us) == pytest.approx(es.quadrilinear_collocation(*us), abs=1e-13)


def test_vanish_configs():
    for f, _ in es.vanish_configs(20, seed=1, violating=True):
        r = es.quadrilinear_vanish_check(*f)
        assert r.predicted_zero and r.ok and r.integral == 0
    for f, v in es.vanish_configs(20, seed=1, violating=False):
        r = es.quadrilinear_vanish_check(*f)
        assert not r.predicted_zero
        assert abs(r.integral - v) <= 1e-12 * abs(v)


def test_dominant_first_component():
    assert es.dominant_first_component([(13, 0), (3, 1), (-2, 0), (1, 1)])
    assert not es.dominant_first_component([(12, 0), (3, 1), (-2, 0), (1, 1)])
    assert es.dominant_first_component([(0, 9), (3, 2), (-2, 0), (1, 1)])


def test_dominant_component_forces_vanishing():
    g = FourierGrid(GEO, 32)
    rng = np.random.default_rng(0)
    small = [spectral.smooth_random_field(g, rng, kmax=2) for _ in range(3)]
    big = Field.mode(g, (9, 1), 1.0)
    r = es.quadrilinear_vanish_check(big, *small)
    assert r.predicted_zero and abs(r.integral) <= 1e-12 * r.norm_product
