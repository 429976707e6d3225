"""
Tests for synthetic and load-profile demand traces
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pandas as pd
import pytest
from scipy.integrate import trapezoid

from microgrid.demand import (
    SyntheticDemandSpec, LoadProfileSpec, synthetic_periodic, synthetic_trace,
    load_profile_tables, load_profile_trace, weekly_calendar, kappa_study_spec,
)
from utils.constants import SECONDS_PER_DAY
from utils.errors import DemandError

T_D = SECONDS_PER_DAY


def _spec(**overrides):
    params = dict(amplitudes=(0.6, 0.9), fluctuation=(0.2, 0.2), rng_seed=7)
    params.update(overrides)
    return SyntheticDemandSpec(**params)


def test_periodic_examples():
    spec = _spec()
    np.testing.assert_allclose(synthetic_periodic(spec, T_D / 2), [0.6, 0.9])
    np.testing.assert_allclose(synthetic_periodic(spec, 0.0), 0.0, atol=1e-15)
    np.testing.assert_allclose(synthetic_periodic(spec, T_D), 0.0, atol=1e-12)
    np.testing.assert_allclose(synthetic_periodic(spec, T_D / 4), [0.3, 0.45])


def test_periodic_has_exact_period():
    spec = _spec()
    for t in np.linspace(0, T_D, 17):
        np.testing.assert_allclose(synthetic_periodic(spec, t), synthetic_periodic(spec, t + T_D), atol=1e-12)


def test_step_multipliers_take_effect_at_midnight():
    spec = _spec(step_schedule=((2, (2.0, 1.0)),))
    np.testing.assert_allclose(synthetic_periodic(spec, 1.5 * T_D), [0.6, 0.9])
    np.testing.assert_allclose(synthetic_periodic(spec, 2.5 * T_D), [1.2, 0.9])
    np.testing.assert_allclose(synthetic_periodic(spec, 2 * T_D), 0.0, atol=1e-12)


def test_zero_fluctuation_trace_is_periodic_part():
    trace = synthetic_trace(_spec(fluctuation=(0.0, 0.0)), horizon_days=2)
    t = np.linspace(0, 2 * T_D, 1001)
    np.testing.assert_array_equal(trace(t), trace.periodic(t))
    hours = np.arange(49) * T_D / 24
    expected = np.vstack([synthetic_periodic(_spec(), h) for h in hours])
    np.testing.assert_allclose(trace(hours), expected, atol=1e-12)


def test_fluctuating_part_is_scaled_noise():
    trace = synthetic_trace(_spec(fluctuation=(0.2, 0.0)), horizon_days=1)
    hours = np.arange(25) * T_D / 24
    eta = np.random.default_rng(7).standard_normal((25, 2))
    np.testing.assert_allclose(trace.fluctuating(hours)[:, 0], 0.2 * eta[:, 0], atol=1e-12)
    np.testing.assert_allclose(trace.fluctuating(hours)[:, 1], 0.0, atol=1e-15)


def test_trace_is_deterministic_per_seed():
    a = synthetic_trace(_spec(), horizon_days=3)
    b = synthetic_trace(_spec(), horizon_days=3)
    np.testing.assert_array_equal(a.values, b.values)
    c = synthetic_trace(_spec(rng_seed=8), horizon_days=3)
    assert not np.array_equal(a.values, c.values)


def test_trace_interpolates_linearly_between_hours():
    trace = synthetic_trace(_spec(), horizon_days=1)
    hour = T_D / 24
    mid = trace(4.5 * hour)
    np.testing.assert_allclose(mid, 0.5 * (trace.values[4] + trace.values[5]))


def test_fluctuation_statistics():
    n_days = 417
    spec = SyntheticDemandSpec(amplitudes=(0.5,), fluctuation=(0.2,), rng_seed=11)
    trace = synthetic_trace(spec, horizon_days=n_days)
    eta = (trace.values - trace.periodic_values)[:, 0] / 0.2
    assert eta.size >= 10_000
    assert abs(eta.mean()) < 0.05
    assert abs(eta.var() - 1.0) < 0.1


def test_hourly_mean_of_linear_segment():
    trace = synthetic_trace(_spec(), horizon_days=1)
    hour = T_D / 24
    np.testing.assert_allclose(trace.hourly_mean(3 * hour, 4 * hour),
                               0.5 * (trace.values[3] + trace.values[4]))


def test_invalid_synthetic_spec():
    with pytest.raises(DemandError):
        _spec(amplitudes=(-0.1, 0.2))
    with pytest.raises(DemandError):
        _spec(step_schedule=((3, (1.0,)),))
    with pytest.raises(DemandError):
        synthetic_trace(_spec(), horizon_days=0)


def test_weekly_calendar():
    calendar = weekly_calendar(9)
    assert calendar[:7] == ["weekday"] * 5 + ["saturday", "sunday"]
    assert calendar[7] == "weekday"
    assert weekly_calendar(2, start_weekday=5) == ["saturday", "sunday"]


def test_profile_tables_ship_with_repo():
    tables, error = load_profile_tables()
    assert error is None
    assert set(tables) == {"H0", "G1", "G4"}
    for frame in tables.values():
        assert len(frame) == 1440
        assert list(frame.columns) == ["weekday", "saturday", "sunday"]


def test_noiseless_profile_equals_normalized_table():
    tables, _ = load_profile_tables()
    spec = LoadProfileSpec(profiles=("H0",), calendar=("weekday",), noise_fraction=0.0)
    trace = load_profile_trace(spec, horizon_days=1, tables=tables)
    peak = tables["H0"].to_numpy().max()
    np.testing.assert_allclose(trace.values[:1440, 0], tables["H0"]["weekday"].to_numpy() / peak)


def test_saturday_differs_from_weekday():
    tables, _ = load_profile_tables()
    spec = LoadProfileSpec(profiles=("G1",), calendar=("weekday", "saturday"), noise_fraction=0.0)
    trace = load_profile_trace(spec, horizon_days=2, tables=tables)
    minute = T_D / 1440
    t_noon = 12 * 60 * minute
    assert trace(t_noon)[0] != pytest.approx(trace(T_D + t_noon)[0])


def test_weekday_integral_matches_wrapped_trapezoid():
    tables, _ = load_profile_tables()
    spec = LoadProfileSpec(profiles=("H0",), calendar=("weekday",), noise_fraction=0.0,
                           norm_power=1.0, rated_power=1.0)
    trace = load_profile_trace(spec, horizon_days=1, tables=tables)
    t = np.linspace(0, T_D, 20_001)
    integral = trapezoid(trace(t)[:, 0], t)
    raw = tables["H0"]["weekday"].to_numpy()
    peak = tables["H0"].to_numpy().max()
    wrapped = np.append(raw, raw[0]) / peak
    expected = trapezoid(wrapped, dx=T_D / 1440)
    assert integral == pytest.approx(expected, rel=1e-3)


def test_mixed_profile_and_noise_bounds():
    tables, _ = load_profile_tables()
    spec = LoadProfileSpec(profiles=("mixed",), calendar=("weekday",), noise_fraction=0.1, rng_seed=2)
    trace = load_profile_trace(spec, horizon_days=1, tables=tables)
    ratio = trace.values[:, 0] / trace.periodic_values[:, 0]
    assert np.all(ratio >= 0.9 - 1e-12) and np.all(ratio <= 1.1 + 1e-12)
    assert trace.periodic_values.max() <= 1.0 + 1e-12


def test_profile_errors(tmp_path):
    with pytest.raises(DemandError):
        LoadProfileSpec(profiles=("H0",), calendar=("weekday",), noise_fraction=0.2)
    with pytest.raises(DemandError):
        LoadProfileSpec(profiles=("H9",), calendar=("weekday",))
    tables, _ = load_profile_tables()
    spec = LoadProfileSpec(profiles=("H0",), calendar=("weekday",))
    with pytest.raises(DemandError):
        load_profile_trace(spec, horizon_days=2, tables=tables)
    with pytest.raises(DemandError):
        load_profile_trace(spec, horizon_days=1, tables={"H0": tables["H0"]})

    missing, error = load_profile_tables(str(tmp_path))
    assert missing is None and "Missing profile table" in error

    frame = pd.DataFrame({"minute": range(10), "weekday": 1.0, "saturday": 1.0, "sunday": 1.0})
    for name in ("h0", "g1", "g4"):
        frame.to_csv(tmp_path / f"{name}.csv", index=False)
    short, error = load_profile_tables(str(tmp_path))
    assert short is None and "minutes" in error


def test_kappa_study_draws():
    spec = kappa_study_spec(4, seed=5)
    assert all(0.6 <= h <= 0.9 for h in spec.amplitudes)
    assert all(0.0 <= g <= 0.4 for g in spec.fluctuation[:2])
    assert all(0.0 <= g <= 0.1 for g in spec.fluctuation[2:])
    assert kappa_study_spec(4, seed=5) == spec
