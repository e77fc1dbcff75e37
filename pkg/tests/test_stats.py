import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovbkit.stats import (
    Dataset,
    Interval,
    RankDeficiencyError,
    StatsError,
    hpdi,
    ols_fit,
    parse_csv_text,
    read_csv,
    scaled_mean_diff,
)


def make_dataset(**columns):
    names = tuple(columns)
    return Dataset(names, np.column_stack([np.asarray(columns[n], float) for n in names]))


class TestDataset:
    def test_rejects_non_finite(self):
        with pytest.raises(StatsError):
            make_dataset(x=[1.0, float("nan")])

    def test_rejects_ragged_rows(self):
        with pytest.raises(StatsError):
            Dataset.from_rows(("a", "b"), [(1.0, 2.0), (3.0,)])

    def test_rejects_duplicate_columns(self):
        with pytest.raises(StatsError):
            Dataset(("a", "a"), np.zeros((2, 2)))

    def test_values_are_immutable(self):
        data = make_dataset(x=[1.0, 2.0])
        with pytest.raises(ValueError):
            data.values[0, 0] = 9.0

    def test_unknown_column(self):
        with pytest.raises(StatsError):
            make_dataset(x=[1.0]).column("y")


class TestCsv:
    def test_round_trip(self, tmp_path):
        data = make_dataset(x=[1.0, 2.5], y=[-3.0, 0.125])
        path = tmp_path / "t.csv"
        path.write_text(data.to_csv())
        loaded = read_csv(path)
        assert loaded.columns == data.columns
        assert (loaded.values == data.values).all()

    def test_quoted_fields(self):
        data = parse_csv_text('"x","y"\n"1","2"\n')
        assert data.columns == ("x", "y")
        assert data.values.tolist() == [[1.0, 2.0]]

    @pytest.mark.parametrize("token", ["nan", "NaN", "inf", "-inf", "Infinity"])
    def test_non_finite_tokens_rejected(self, token):
        with pytest.raises(StatsError):
            parse_csv_text(f"x\n{token}\n")

    def test_errors_carry_line_numbers(self):
        with pytest.raises(StatsError, match="line 3"):
            parse_csv_text("x,y\n1,2\n3\n")
        with pytest.raises(StatsError, match="line 2"):
            parse_csv_text("x\nhello\n")
        with pytest.raises(StatsError, match="header"):
            parse_csv_text("")


class TestOls:
    def test_exact_line(self):
        data = make_dataset(x=[0.0, 1.0, 2.0], y=[1.0, 3.0, 5.0])
        fit = ols_fit(data, "y", ["x"])
        assert fit.intercept == pytest.approx(1.0, abs=1e-12)
        assert fit.coefficients["x"] == pytest.approx(2.0, abs=1e-12)
        assert fit.sigma == pytest.approx(0.0, abs=1e-12)
        assert fit.n == 3

    def test_zero_noise_plane_recovered_to_1e9(self):
        rng = np.random.default_rng(5)
        x1, x2 = rng.normal(size=400), rng.normal(size=400)
        y = 2.0 + 3.0 * x1 - 1.5 * x2
        fit = ols_fit(make_dataset(x1=x1, x2=x2, y=y), "y", ["x1", "x2"])
        assert fit.intercept == pytest.approx(2.0, abs=1e-9)
        assert fit.coefficients["x1"] == pytest.approx(3.0, abs=1e-9)
        assert fit.coefficients["x2"] == pytest.approx(-1.5, abs=1e-9)
        assert fit.sigma < 1e-9

    def test_predictor_order_does_not_matter(self):
        rng = np.random.default_rng(6)
        data = make_dataset(
            a=rng.normal(size=200),
            b=rng.normal(size=200),
            y=rng.normal(size=200),
        )
        forward = ols_fit(data, "y", ["a", "b"])
        backward = ols_fit(data, "y", ["b", "a"])
        for name in ("a", "b"):
            assert forward.coefficients[name] == pytest.approx(backward.coefficients[name])
            assert forward.std_errors[name] == pytest.approx(backward.std_errors[name])
        assert forward.to_json() == backward.to_json()

    def test_agrees_with_statsmodels(self):
        sm = pytest.importorskip("statsmodels.api")
        rng = np.random.default_rng(7)
        x1, x2 = rng.normal(size=300), rng.normal(size=300)
        y = 0.5 + 1.2 * x1 - 0.4 * x2 + rng.normal(size=300)
        fit = ols_fit(make_dataset(x1=x1, x2=x2, y=y), "y", ["x1", "x2"])
        reference = sm.OLS(y, sm.add_constant(np.column_stack([x1, x2]))).fit()
        assert fit.intercept == pytest.approx(reference.params[0], abs=1e-10)
        assert fit.coefficients["x1"] == pytest.approx(reference.params[1], abs=1e-10)
        assert fit.coefficients["x2"] == pytest.approx(reference.params[2], abs=1e-10)
        assert fit.std_errors["x1"] == pytest.approx(reference.bse[1], abs=1e-10)
        assert fit.std_errors["x2"] == pytest.approx(reference.bse[2], abs=1e-10)
        assert fit.sigma == pytest.approx(np.sqrt(reference.mse_resid), abs=1e-10)

    def test_rank_deficiency_detected(self):
        x = np.arange(10.0)
        data = make_dataset(x=x, x2=2 * x, y=x + 1)
        with pytest.raises(RankDeficiencyError):
            ols_fit(data, "y", ["x", "x2"])

    def test_insufficient_rows(self):
        data = make_dataset(x=[1.0, 2.0], y=[1.0, 2.0])
        with pytest.raises(StatsError):
            ols_fit(data, "y", ["x"])

    def test_unknown_column_and_duplicates(self):
        data = make_dataset(x=[1.0, 2.0, 3.0], y=[1.0, 2.0, 3.0])
        with pytest.raises(StatsError):
            ols_fit(data, "y", ["q"])
        with pytest.raises(StatsError):
            ols_fit(data, "y", ["x", "x"])
        with pytest.raises(StatsError):
            ols_fit(data, "y", ["x", "y"])

    def test_json_key_order_is_stable(self):
        data = make_dataset(
            b=[1.0, 2.0, 4.0, 0.5], a=[0.0, 1.0, -1.0, 2.0], y=[1.0, 0.0, 2.0, 1.5]
        )
        payload = json.loads(ols_fit(data, "y", ["b", "a"]).to_json())
        assert list(payload["coefficients"]) == ["a", "b"]
        assert list(payload) == ["n", "intercept", "coefficients", "std_errors", "sigma"]


class TestHpdi:
    def test_all_equal(self):
        assert hpdi([7.0] * 5, 0.5) == Interval(7.0, 7.0, 0.5)

    def test_earliest_narrowest_window(self):
        assert hpdi([1, 2, 3, 4, 100], 0.6) == Interval(1.0, 3.0, 0.6)

    def test_tie_breaks_to_earliest(self):
        assert hpdi(range(10), 0.5) == Interval(0.0, 4.0, 0.5)

    def test_full_mass_is_min_max(self):
        assert hpdi([3.0, -1.0, 10.0], 1.0) == Interval(-1.0, 10.0, 1.0)

    def test_errors(self):
        with pytest.raises(StatsError):
            hpdi([], 0.5)
        with pytest.raises(StatsError):
            hpdi([1.0], 0.0)
        with pytest.raises(StatsError):
            hpdi([1.0], 1.5)

    @settings(max_examples=100)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.floats(0.05, 1.0))
    def test_permutation_invariant(self, samples, mass):
        assert hpdi(samples, mass) == hpdi(list(reversed(samples)), mass)

    @settings(max_examples=100)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.floats(0.05, 1.0))
    def test_window_really_is_narrowest(self, samples, mass):
        import math

        interval = hpdi(samples, mass)
        arr = sorted(samples)
        k = max(1, math.ceil(mass * len(arr) - 1e-9))
        best = min(arr[i + k - 1] - arr[i] for i in range(len(arr) - k + 1))
        assert interval.width == pytest.approx(best)


class TestScaledMeanDiff:
    def test_identical_groups(self):
        values = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0]
        labels = ["a"] * 3 + ["b"] * 3
        assert scaled_mean_diff(values, labels, "a", "b") == 0.0

    def test_hand_computed(self):
        values = [2.0, 3.0, 4.0, 0.0, 1.0, 2.0]
        labels = ["t"] * 3 + ["r"] * 3
        assert scaled_mean_diff(values, labels, "t", "r") == pytest.approx(2.0)
        assert scaled_mean_diff(values, labels, "r", "t") == pytest.approx(-2.0)

    def test_antisymmetry_random(self):
        rng = np.random.default_rng(8)
        values = rng.normal(size=30)
        labels = ["x"] * 15 + ["y"] * 15
        forward = scaled_mean_diff(values, labels, "x", "y")
        assert scaled_mean_diff(values, labels, "y", "x") == pytest.approx(-forward)

    def test_degenerate_groups(self):
        with pytest.raises(StatsError):
            scaled_mean_diff([1.0, 2.0, 3.0], ["a", "a", "b"], "a", "b")
        with pytest.raises(StatsError):
            scaled_mean_diff([1.0, 1.0, 2.0, 3.0], ["a", "a", "b", "b"], "a", "b")
        with pytest.raises(StatsError):
            scaled_mean_diff([1.0, 2.0], ["a", "a"], "a", "zzz")


class TestInterval:
    def test_invariants(self):
        with pytest.raises(StatsError):
            Interval(2.0, 1.0, 0.5)
        with pytest.raises(StatsError):
            Interval(0.0, 1.0, 0.0)

    def test_containment(self):
        outer = Interval(0.0, 10.0, 0.95)
        assert outer.contains(Interval(1.0, 9.0, 0.5))
        assert outer.contains(5.0)
        assert not outer.contains(Interval(-1.0, 5.0, 0.5))
