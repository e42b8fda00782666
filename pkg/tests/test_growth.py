import numpy as np
import pytest

from toruslab import growth, nls, spectral
from toruslab.spectral import Field, FourierGrid, TorusGeometry

GEO = TorusGeometry()


def series(values, dt=0.1, s=2.0, h1=1.0):
    v = np.asarray(values, dtype=float)
    return growth.GrowthSeries(np.arange(v.size) * dt, v, s, h1_initial=h1)


def test_bound_value():
    assert growth.growth_bound(2) == pytest.approx(416 / 285)
    assert growth.growth_bound(1) == 0


def test_fit_constant_series():
    out = growth.fit_growth_exponent(series(np.full(40, 3.0)))
    assert out["exponent"] == pytest.approx(0, abs=1e-12) and not out["violated"]


@pytest.mark.parametrize("power,violated", [(1.0, False), (2.0, True)])
def test_fit_synthetic_powers(power, violated):
    t = np.arange(100) * 0.5
    out = growth.fit_growth_exponent(growth.GrowthSeries(t, (1 + t) ** power, 2.0))
    assert out["exponent"] == pytest.approx(power, abs=1e-6)
    assert out["violated"] is violated


def test_fit_rejects_bad_series():
    with pytest.raises(ValueError):
        growth.fit_growth_exponent(series(np.ones(5)))
    with pytest.raises(ValueError):
        growth.fit_growth_exponent(series(np.r_[np.ones(20), 0.0]))


def test_increment_constant_series():
    assert growth.increment_check(series(np.full(20, 2.0)), 3, 0.5)["C_min"] == 0


def test_increment_enumeration_oracle():
    k = np.arange(1, 200)
    r = 0.6
    out = growth.increment_check(series(np.sqrt(k)), 1, r)
    # x_k^2 = k: squared increments are 1, so the needed C is k^(-(2 - r)/2), largest at k = 1
    brute = max(1.0 / kk ** ((2 - r) / 2) for kk in k[:-1])
    assert out["C_min"] == pytest.approx(brute) == pytest.approx(1.0)
    assert out["argmax_window"] == 0
    assert min(out["slack"]) == pytest.approx(0.0, abs=1e-12)
    assert out["C_min_unsquared"] == pytest.approx(max((np.sqrt(kk + 1) - np.sqrt(kk)) / np.sqrt(kk) ** (1 - r) for kk in k[:-1]))


def test_increment_default_window():
    assert growth.default_window(series(np.ones(50), dt=0.01, h1=2.0)) == 10  # min(0.1, 1/4)
    assert growth.default_window(series(np.ones(50), dt=0.01, h1=5.0)) == 4  # 1/25
    assert growth.default_window(series(np.ones(50), dt=1.0, h1=5.0)) == 1


def test_increment_rejects_bad_r():
    with pytest.raises(ValueError):
        growth.increment_check(series(np.ones(20)), 1, 1.0)


def test_track_zero_data():
    s = growth.track_growth(Field.zeros(FourierGrid(GEO, 8)), 2.0, 0.5, nls.NLSParams(dt=0.01), 10)
    assert np.all(s.hs_values == 0)


def test_track_plane_wave_constant():
    g = FourierGrid(GEO, 16)
    s = growth.track_growth(Field.mode(g, (3, -2), 0.8), 2.0, 5.0, nls.NLSParams(dt=0.01), 20)
    np.testing.assert_allclose(s.hs_values, s.hs_values[0], rtol=1e-12)
    assert abs(growth.fit_growth_exponent(s)["exponent"]) < 1e-3
    assert s.audits["passed"]


def test_track_smooth_data_audits():
    u0 = spectral.smooth_random_field(FourierGrid(GEO, 16), np.random.default_rng(0), kmax=3)
    s = growth.track_growth(u0, 2.0, 2.0, nls.NLSParams(dt=1e-3), 100)
    assert s.audits["passed"]
    assert s.audits["mass_drift"] <= 1e-10
    assert len(s.times) == 21 and np.all(s.hs_values > 0)
    np.testing.assert_allclose(np.diff(s.times), 0.1)


def test_track_requires_s_at_least_one():
    with pytest.raises(ValueError):
        growth.track_growth(Field.zeros(FourierGrid(GEO, 8)), 0.5, 1.0)


def test_series_csv_roundtrip(tmp_path):
    s = series(np.linspace(1, 2, 12))
    s.to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "t,hs"
    back = growth.GrowthSeries.from_csv(tmp_path / "g.csv", 2.0)
    np.testing.assert_array_equal(back.hs_values, s.hs_values)
    assert growth.fit_growth_exponent(back) == growth.fit_growth_exponent(s)


def test_recurrence_zero_C():
    out = growth.recurrence_bound_check(growth.RecurrenceParams(0.5, 0.0, 1.0, 4.0), 1000)
    assert out["C_prime"] == pytest.approx(2.0) and out["holds"]


@pytest.mark.parametrize("r,C", [(1.0, 2.0), (0.5, 1.0)])
def test_recurrence_documented_cases(r, C):
    out = growth.recurrence_bound_check(growth.RecurrenceParams(r, C, 1.0, 1.0), 100_000)
    assert out["holds"] and not out["overflow"]


def test_recurrence_asymptotic_ratio():
    # y^(r/2) grows like (C r / 2) k, so x_k / k^(1/r) -> (C r / 2)^(1/r)
    r, C = 0.5, 2.0
    y, _ = growth.kernels.recurrence_iterate(1.0, C, r, 100_000)
    assert np.sqrt(y[-1]) / 100_000 ** (1 / r) == pytest.approx((C * r / 2) ** (1 / r), rel=1e-2)


def test_recurrence_monotone_in_C():
    ys = [growth.kernels.recurrence_iterate(1.0, C, 0.5, 500)[0] for C in (0.1, 0.5, 0.5000001, 2.0)]
    for lo, hi in zip(ys, ys[1:]):
        assert np.all(lo <= hi)


def test_recurrence_overflow_reported():
    out = growth.recurrence_bound_check(growth.RecurrenceParams(0.01, 1e6, 1.0, 1e100), 10_000)
    assert out["overflow"] and not out["holds"] and out["k_reached"] < 10_000


def test_recurrence_params_validation():
    with pytest.raises(ValueError):
        growth.RecurrenceParams(0.0, 1.0)
    with pytest.raises(ValueError):
        growth.RecurrenceParams(0.5, -1.0)
    with pytest.raises(ValueError):
        growth.recurrence_bound_check(growth.RecurrenceParams(0.5, 1.0), 5)
