import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from osusim.cells import (
    ConfigError,
    ControlCell,
    RateCps,
    SimTime,
    cell_transmission_time,
    validate_control_cell,
)


@pytest.mark.parametrize(
    "tcr, ocr, laf, ai, expected",
    [
        (300000, 300000, 0, 0, []),
        (250000, 300000, 0, 0, ["ocr>tcr"]),
        (300000, 100000, 1.5, 300_000, []),
    ],
)
def test_validate_control_cell_examples(tcr, ocr, laf, ai, expected):
    assert validate_control_cell(ControlCell(1, tcr, ocr, laf, ai)) == expected


def test_validate_lists_every_violation():
    problems = validate_control_cell(ControlCell(1, 10.0, 20.0, -1.0, -5))
    assert set(problems) == {"ocr>tcr", "laf<0", "ai<0"}
    assert "laf not finite" in validate_control_cell(ControlCell(1, 10.0, 1.0, math.inf, 0))
    assert "tcr not finite" in validate_control_cell(ControlCell(1, math.nan, 1.0, 0.0, 0))


def test_cell_transmission_time_examples():
    assert 424 / 155e6 * 1e9 == pytest.approx(2735.48, abs=0.01)
    assert cell_transmission_time(424, 155e6) == 2735
    assert cell_transmission_time(424, 424) == 1_000_000_000
    assert cell_transmission_time(8, 8e9) == 1


@pytest.mark.parametrize("bits, bw", [(0, 155e6), (-424, 155e6), (424, 0), (424, -1.0)])
def test_cell_transmission_time_rejects_non_positive(bits, bw):
    with pytest.raises(ConfigError):
        cell_transmission_time(bits, bw)


@given(st.floats(allow_nan=True, allow_infinity=True))
def test_rate_rejects_negative_and_non_finite(x):
    if math.isfinite(x) and x >= 0:
        assert RateCps(x) == x
    else:
        with pytest.raises(ValueError):
            RateCps(x)


@given(st.integers(min_value=-(10**18), max_value=10**18))
def test_simtime_rejects_negative(x):
    if x >= 0:
        assert SimTime(x) == x
    else:
        with pytest.raises(ValueError):
            SimTime(x)


def test_simtime_rejects_fractional_ns():
    with pytest.raises(ValueError):
        SimTime(1.5)
    assert SimTime(2.0) == 2
