import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expertmine.analyzer import MetricVector
from expertmine.errors import ConfigError, EmptyMarks, UnknownMetric
from expertmine.squale import (
    HARD,
    SOFT,
    SqualeConfig,
    Threshold,
    component_mark,
    global_mark,
    individual_mark,
    individual_marks,
)

marks = st.floats(min_value=0.0, max_value=3.0, allow_nan=False)
lambdas = st.floats(min_value=1.01, max_value=1000.0, allow_nan=False)


@pytest.mark.parametrize(
    "metric, raw, expected",
    [
        ("cc", 1, 3.0),
        ("cc", 7, 1.0),
        ("hv", 1000, 0.0),
        ("Ca", 30, 1.0),
        ("cc", 20, 0.0),
        ("Ce", 10, 1.0),
        ("hd", 25, 1.5),
        ("hd", 9.99, 3.0),
        ("Ce", 20, 0.0),
    ],
)
def test_individual_mark_examples(metric, raw, expected):
    assert individual_mark(metric, raw) == expected


def test_in_band_values_are_clamped_to_three():
    # 2^((10-6)/2) = 4 at the lower edge of the Ce band
    assert individual_mark("Ce", 6) == 3.0
    assert individual_mark("cc", 2) == 2 ** (5 / 3.5)


def test_unknown_metric_and_non_finite_raw():
    with pytest.raises(UnknownMetric):
        individual_mark("sloc", 10)
    with pytest.raises(ValueError):
        individual_mark("cc", float("nan"))


def test_threshold_validation():
    with pytest.raises(ConfigError):
        Threshold("cc", "cc", 10, 5)
    with pytest.raises(ConfigError):
        Threshold("cc", "nope", 1, 5)
    for bad in (1.0, 0.5, float("inf"), float("nan")):
        with pytest.raises(ConfigError):
            SqualeConfig(bad)


def test_threshold_override_changes_band():
    cfg = SqualeConfig().with_overrides([Threshold("cc", "cc", 1, 30)])
    assert individual_mark("cc", 20, cfg) == pytest.approx(2 ** (-13 / 3.5))
    assert individual_mark("cc", 20) == 0.0


def test_individual_marks_skips_absent_and_unthresholded():
    out = individual_marks({"cc": 7, "hv": None, "sloc": 99})
    assert out == {"cc": 1.0}


def test_global_mark_examples():
    assert global_mark([0.0, 3.0], SqualeConfig(SOFT)) == pytest.approx(-math.log(14 / 27, 3))
    assert global_mark([0.0, 3.0], SqualeConfig(HARD)) < global_mark([0.0, 3.0], SqualeConfig(SOFT))
    assert global_mark({"cc": 2.0, "hv": 2.0}) == 2.0
    with pytest.raises(EmptyMarks):
        global_mark([])


def test_component_mark_pools_files():
    a = MetricVector(cc=7)  # mark 1
    b = MetricVector(cc=1, hv=10)  # marks 3, 3
    pooled = component_mark([a, b], SqualeConfig(SOFT))
    assert pooled == pytest.approx(global_mark([1.0, 3.0, 3.0], SqualeConfig(SOFT)))
    assert component_mark([a, b], metrics=["hv"]) == 3.0
    assert component_mark([]) is None
    assert component_mark([MetricVector(sloc=5)]) is None


@settings(max_examples=300, deadline=None)
@given(st.lists(marks, min_size=1, max_size=20), lambdas)
def test_global_mark_bounds(values, lam):
    gm = global_mark(values, SqualeConfig(lam))
    assert min(values) <= gm <= max(values)
    assert Fraction(gm) <= sum(map(Fraction, values)) / len(values)


@settings(max_examples=200, deadline=None)
@given(marks, lambdas)
def test_global_mark_of_identical_marks_is_exact(m, lam):
    assert global_mark([m] * 7, SqualeConfig(lam)) == m


@settings(max_examples=200, deadline=None)
@given(st.lists(marks, min_size=1, max_size=10), st.data(), lambdas)
def test_global_mark_monotone_in_each_mark(values, data, lam):
    i = data.draw(st.integers(0, len(values) - 1))
    raised = list(values)
    raised[i] = data.draw(st.floats(min_value=values[i], max_value=3.0))
    cfg = SqualeConfig(lam)
    assert global_mark(raised, cfg) >= global_mark(values, cfg)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0, max_value=1000, allow_nan=False), st.floats(min_value=0, max_value=1000, allow_nan=False))
def test_individual_mark_in_range_and_non_increasing(a, b):
    for metric in ("cc", "hv", "hd", "Ca", "Ce"):
        lo, hi = sorted((a, b))
        m_lo, m_hi = individual_mark(metric, lo), individual_mark(metric, hi)
        assert 0.0 <= m_hi <= m_lo <= 3.0
