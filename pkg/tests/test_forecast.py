"""Differencing, conditional likelihood, model fitting, forecasting, and
warning emission."""

import logging
import math
from datetime import date, datetime, time, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forumpulse import _kernels
from forumpulse.forecast import (
    DegenerateSeries,
    FitError,
    FittedModel,
    ModelOrder,
    aic,
    baserate,
    css_loglik,
    daywise_baserate,
    difference,
    fit,
    forecast,
    format_model,
    generate_warnings,
    grid_search,
    integrate,
    month_dates,
    month_start,
    next_month,
    round_half_away,
    _ar_excess,
)


def ar1_series(alpha, n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    e = rng.normal(scale=scale, size=n)
    y = np.empty(n)
    prev = 0.0
    for t in range(n):
        prev = alpha * prev + e[t]
        y[t] = prev
    return y


def manual_model(order, mu, ar, ma, gamma, n_obs, residuals=None):
    res = np.zeros(n_obs) if residuals is None else np.asarray(residuals, dtype=float)
    k = order.p + order.q + 2 + (1 if gamma is not None else 0)
    return FittedModel(
        order=order,
        mu=mu,
        ar=ar,
        ma=ma,
        gamma=gamma,
        sigma2=1.0,
        loglik=0.0,
        aic=0.0,
        k_params=k,
        n_obs=n_obs,
        residuals=res,
        converged=True,
    )


class TestModelOrder:
    def test_rejects_negative_components(self):
        with pytest.raises(ValueError):
            ModelOrder(-1, 0, 0)
        with pytest.raises(ValueError):
            ModelOrder(0, 0, -2)

    def test_renders_compactly(self):
        assert str(ModelOrder(1, 2, 3)) == "(1,2,3)"

    def test_is_immutable(self):
        order = ModelOrder(1, 0, 0)
        with pytest.raises(Exception):
            order.p = 2


class TestDifferencing:
    def test_first_and_second_differences(self):
        y = np.array([1.0, 4.0, 9.0, 16.0])
        assert difference(y, 1).tolist() == [3.0, 5.0, 7.0]
        assert difference(y, 2).tolist() == [2.0, 2.0]

    def test_zero_order_is_identity(self):
        y = np.array([2.0, -1.0, 5.0])
        assert difference(y, 0).tolist() == y.tolist()

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            difference(np.arange(4.0), -1)
        with pytest.raises(ValueError):
            difference(np.arange(4.0), 4)

    def test_integrate_inverts_difference_exact_case(self):
        y = np.array([1.0, 3.0, 6.0, 10.0, 15.0, 21.0])
        hist = y[:3]
        cont = difference(y, 2)[1:]  # second differences beyond the history
        assert integrate(cont, hist, 2) == pytest.approx(y[3:].tolist(), abs=1e-12)

    @settings(max_examples=80)
    @given(
        values=st.lists(
            st.floats(min_value=-100, max_value=100, allow_nan=False),
            min_size=5,
            max_size=30,
        ),
        d=st.integers(min_value=0, max_value=2),
        cut=st.integers(min_value=3, max_value=27),
    )
    def test_integrate_round_trip(self, values, d, cut):
        y = np.array(values)
        m = min(cut, y.size - 1)
        hist = y[:m]
        cont = difference(y, d)[m - d :]
        if cont.size == 0:
            return
        out = integrate(cont, hist, d)
        assert np.allclose(out, y[m:], atol=1e-9)


class TestConditionalLoglik:
    def test_hand_worked_white_noise_case(self):
        y = np.array([1.0, -1.0, 1.0, -1.0])
        ll, sigma2, e = css_loglik(y, 0.0, [], [])
        assert sigma2 == pytest.approx(1.0)
        assert e.tolist() == y.tolist()
        assert ll == pytest.approx(-2.0 * math.log(2.0 * math.pi) - 2.0, rel=1e-12)

    def test_sigma2_is_mean_squared_residual(self):
        rng = np.random.default_rng(1)
        y = rng.normal(size=50)
        ll, sigma2, e = css_loglik(y, 0.3, [0.2], [0.1])
        assert sigma2 == pytest.approx(float(np.mean(e**2)), rel=1e-12)

    def test_residuals_come_from_shared_kernel(self):
        rng = np.random.default_rng(2)
        y = rng.normal(size=40)
        x = rng.normal(size=40)
        _, _, e = css_loglik(y, 0.1, [0.3], [-0.2], gamma=0.5, x=x)
        want = _kernels.residuals(y, 0.1, np.array([0.3]), np.array([-0.2]), 0.5, x)
        assert np.array_equal(e, want)

    def test_mean_maximizes_constant_model(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=100)
        at_mean, _, _ = css_loglik(y, float(np.mean(y)), [], [])
        off_mean, _, _ = css_loglik(y, float(np.mean(y)) + 0.5, [], [])
        assert at_mean > off_mean

    def test_degenerate_series_raises(self):
        with pytest.raises(DegenerateSeries):
            css_loglik(np.full(10, 2.0), 2.0, [], [])

    def test_bad_inputs_raise(self):
        with pytest.raises(ValueError):
            css_loglik(np.array([]), 0.0, [], [])
        with pytest.raises(ValueError):
            css_loglik(np.array([1.0, np.inf, 2.0]), 0.0, [], [])

    def test_aic_identity(self):
        assert aic(3, -10.0) == 26.0
        assert aic(0, 0.0) == 0.0


class TestFit:
    def test_recovers_ar1_coefficient(self):
        y = ar1_series(0.6, 600, seed=42)
        model = fit(y, ModelOrder(1, 0, 0))
        assert model.converged
        assert model.ar[0] == pytest.approx(0.6, abs=0.08)
        assert model.sigma2 == pytest.approx(1.0, abs=0.2)
        assert model.k_params == 3
        assert model.n_obs == 600
        assert model.gamma is None and not model.has_exog

    def test_recovers_ma1_coefficient(self):
        rng = np.random.default_rng(7)
        e = rng.normal(size=601)
        y = e[1:] + 0.5 * e[:-1]
        model = fit(y, ModelOrder(0, 0, 1))
        assert model.ma[0] == pytest.approx(0.5, abs=0.1)

    def test_recovers_exogenous_coefficient(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=400)
        y = 1.0 + 2.5 * x + rng.normal(scale=0.1, size=400)
        model = fit(y, ModelOrder(0, 0, 0), x=x)
        assert model.has_exog
        assert model.gamma == pytest.approx(2.5, abs=0.05)
        assert model.mu == pytest.approx(1.0, abs=0.05)
        assert model.k_params == 3

    def test_aic_consistent_with_parameter_count(self):
        y = ar1_series(0.4, 200, seed=11)
        model = fit(y, ModelOrder(1, 0, 1))
        assert model.k_params == 4
        assert model.aic == pytest.approx(2 * 4 - 2 * model.loglik, rel=1e-12)

    def test_rejects_too_short_series(self):
        with pytest.raises(ValueError, match="too short"):
            fit(np.arange(5.0), ModelOrder(2, 0, 2))

    def test_warns_on_marginal_length(self, caplog):
        y = ar1_series(0.3, 25, seed=13)
        with caplog.at_level(logging.WARNING, logger="forumpulse.forecast"):
            fit(y, ModelOrder(1, 0, 1))
        assert "estimates may be unstable" in caplog.text

    def test_constant_after_differencing_raises(self):
        with pytest.raises(DegenerateSeries):
            fit(np.arange(30.0), ModelOrder(0, 1, 0))

    def test_misaligned_exog_raises(self):
        with pytest.raises(ValueError):
            fit(np.zeros(20) + np.arange(20) % 3, ModelOrder(0, 0, 0), x=np.zeros(21))

    def test_fitted_ar_is_always_stationary(self):
        # near-unit-root input tempts the optimizer toward the boundary
        y = ar1_series(0.95, 400, seed=17)
        model = fit(y, ModelOrder(1, 0, 0))
        assert _ar_excess(np.array(model.ar)) == 0.0
        assert abs(model.ar[0]) < 1.0 + 1e-9

    def test_fit_error_carries_best_model(self):
        err = FitError("nope", best=None)
        assert err.best is None


class TestGridSearch:
    def test_white_noise_selects_smallest_order(self):
        rng = np.random.default_rng(104)
        y = rng.normal(size=400)
        result = grid_search(y, p_max=2, d_max=1, q_max=2)
        assert result.best.order == ModelOrder(0, 0, 0)

    def test_grid_is_exhaustive(self):
        rng = np.random.default_rng(33)
        y = rng.normal(size=120)
        result = grid_search(y, p_max=2, d_max=1, q_max=2)
        assert len(result.models) + result.failures == 18
        orders = {m.order for m in result.models}
        assert len(orders) == len(result.models)
        assert all(m.order.p <= 2 and m.order.d <= 1 and m.order.q <= 2 for m in result.models)

    def test_best_has_minimum_aic(self):
        y = ar1_series(0.5, 200, seed=35)
        result = grid_search(y, p_max=1, d_max=1, q_max=1)
        assert result.best.aic == min(m.aic for m in result.models)

    def test_all_failures_raise(self):
        with pytest.raises(FitError):
            grid_search(np.ones(30), p_max=1, d_max=1, q_max=1)


class TestForecast:
    def test_ar1_closed_form(self):
        model = manual_model(ModelOrder(1, 0, 0), 0.0, (0.5,), (), None, 3)
        fc = forecast(model, np.array([0.0, 0.0, 4.0]), 3)
        assert fc == pytest.approx([2.0, 1.0, 0.5], abs=1e-12)

    def test_ma1_uses_last_residual_once(self):
        model = manual_model(
            ModelOrder(0, 0, 1), 0.0, (), (0.5,), None, 3, residuals=[0.0, 0.0, 2.0]
        )
        fc = forecast(model, np.array([1.0, 1.0, 1.0]), 2)
        assert fc == pytest.approx([1.0, 0.0], abs=1e-12)

    def test_differenced_drift_integrates_back(self):
        model = manual_model(ModelOrder(0, 1, 0), 0.5, (), (), None, 2)
        fc = forecast(model, np.array([0.0, 1.0, 3.0]), 2)
        assert fc == pytest.approx([3.5, 4.0], abs=1e-12)

    def test_exogenous_term_enters_directly(self):
        model = manual_model(ModelOrder(0, 0, 0), 0.0, (), (), 2.0, 3)
        fc = forecast(model, np.zeros(3), 2, x_future=np.array([1.0, 2.0]))
        assert fc == pytest.approx([2.0, 4.0], abs=1e-12)

    def test_exogenous_model_requires_future_values(self):
        model = manual_model(ModelOrder(0, 0, 0), 0.0, (), (), 2.0, 3)
        with pytest.raises(ValueError):
            forecast(model, np.zeros(3), 2)
        with pytest.raises(ValueError):
            forecast(model, np.zeros(3), 2, x_future=np.array([1.0]))

    def test_bad_horizon_and_history(self):
        model = manual_model(ModelOrder(0, 0, 0), 0.0, (), (), None, 3)
        with pytest.raises(ValueError):
            forecast(model, np.zeros(3), 0)
        with pytest.raises(ValueError):
            forecast(model, np.zeros(4), 1)

    def test_fitted_ar_forecast_decays_to_mean(self):
        y = ar1_series(0.6, 500, seed=19) + 3.0
        model = fit(y, ModelOrder(1, 0, 0))
        fc = forecast(model, y, 10)
        m_inf = model.mu / (1.0 - model.ar[0])
        gaps = np.abs(fc - m_inf)
        assert np.all(np.diff(gaps) <= 1e-12)
        assert gaps[-1] < gaps[0]


class TestWarningEmission:
    DAYS = [date(2017, 7, d) for d in range(1, 5)]

    def test_round_half_away_cases(self):
        assert round_half_away(0.5) == 1
        assert round_half_away(1.5) == 2
        assert round_half_away(2.5) == 3
        assert round_half_away(2.4) == 2
        assert round_half_away(-0.5) == -1
        assert round_half_away(-2.5) == -3
        assert round_half_away(0.0) == 0

    def test_round_mode_counts_and_stamps(self):
        ws = generate_warnings(
            [0.4, 1.6, 2.5, -0.7], self.DAYS, "orgA", "endpoint-malware", "forum1-vader"
        )
        assert ws.n_warnings == 5
        noon = time(12, 0)
        assert all(t.timetz().replace(tzinfo=None) == noon for t in ws.timestamps)
        assert all(t.tzinfo == timezone.utc for t in ws.timestamps)
        by_day = [sum(1 for t in ws.timestamps if t.date() == d) for d in self.DAYS]
        assert by_day == [0, 2, 3, 0]
        assert ws.month == date(2017, 7, 1)
        assert ws.org == "orgA"
        assert ws.event_type == "endpoint-malware"
        assert ws.source_signal == "forum1-vader"

    def test_accumulate_mode_carries_fractions(self):
        days = month_dates(date(2017, 6, 1))
        ws = generate_warnings([0.5] * 30, days, "o", "malicious-email", "s", mode="accumulate")
        assert ws.n_warnings == 15
        # every second day fires, starting with the second
        assert ws.timestamps[0].date() == days[1]
        assert ws.timestamps[-1].date() == days[29]

    def test_accumulate_clips_negatives(self):
        ws = generate_warnings(
            [-5.0, 0.5, 0.6], self.DAYS[:3], "o", "malicious-email", "s", mode="accumulate"
        )
        assert ws.n_warnings == 1
        assert ws.timestamps[0].date() == self.DAYS[2]

    def test_validation(self):
        with pytest.raises(ValueError):
            generate_warnings([1.0], self.DAYS, "o", "e", "s")
        with pytest.raises(ValueError):
            generate_warnings([1.0] * 4, self.DAYS, "o", "e", "s", mode="sideways")


class TestBaselines:
    def test_baserate_accumulates_mean_rate(self):
        history = np.ones(30)
        days = [date(2017, 8, d) for d in range(1, 11)]
        ws = baserate(history, days, "o", "endpoint-malware")
        assert ws.n_warnings == 10
        assert ws.source_signal == "baserate"

    def test_baserate_fractional_rate(self):
        history = np.zeros(40)
        history[::2] = 1.0  # mean 0.5
        days = month_dates(date(2017, 6, 1))
        ws = baserate(history, days, "o", "endpoint-malware")
        assert ws.n_warnings == 15

    def test_baserate_needs_history(self):
        with pytest.raises(ValueError):
            baserate(np.ones(27), [date(2017, 8, 1)], "o", "e")

    def test_daywise_tracks_weekday_pattern(self):
        start = date(2017, 1, 2)  # a Monday
        history = np.zeros(56)
        for i in range(56):
            if (start.weekday() + i) % 7 == 0:
                history[i] = 7.0
        days = month_dates(date(2017, 3, 1))
        ws = daywise_baserate(history, start, days, "o", "endpoint-malware")
        mondays = [d for d in days if d.weekday() == 0]
        assert ws.n_warnings == 7 * len(mondays)
        assert all(t.date().weekday() == 0 for t in ws.timestamps)
        assert ws.source_signal == "daywise-baserate"

    def test_daywise_matches_flat_rate_when_uniform(self):
        history = np.ones(56)
        days = month_dates(date(2017, 3, 1))
        ws = daywise_baserate(history, date(2017, 1, 2), days, "o", "e")
        assert ws.n_warnings == len(days)

    def test_daywise_needs_eight_weeks(self):
        with pytest.raises(ValueError):
            daywise_baserate(np.ones(55), date(2017, 1, 2), [date(2017, 3, 1)], "o", "e")


class TestCalendar:
    def test_month_start_and_next(self):
        assert month_start(date(2017, 7, 19)) == date(2017, 7, 1)
        assert next_month(date(2017, 12, 25)) == date(2018, 1, 1)
        assert next_month(date(2017, 1, 1)) == date(2017, 2, 1)

    def test_month_dates_handles_leap_february(self):
        days = month_dates(date(2016, 2, 10))
        assert len(days) == 29
        assert days[0] == date(2016, 2, 1)
        assert days[-1] == date(2016, 2, 29)


class TestFormatModel:
    def test_lists_every_field(self):
        y = ar1_series(0.5, 120, seed=21)
        model = fit(y, ModelOrder(1, 0, 0))
        text = format_model(model)
        assert "order: (1,0,0)" in text
        assert "gamma: -" in text
        assert f"n_obs: {model.n_obs}" in text
        assert text.endswith("\n")
        assert repr(model.ar[0]) in text
