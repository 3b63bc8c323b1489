"""Stream determinism, sampling laws, and draw accounting."""

import math

import numpy as np
import pytest
from scipy.stats import kstest

from mlpicard import (
    DrawLedger,
    StreamKey,
    derive_stream,
    single_step_second_moment,
)
from mlpicard.sampler import block_uniforms

KS_CRITICAL_1PCT = 1.628


def test_same_key_replays_identical_sequence():
    key = StreamKey(42, (3, 1, -2))
    a = derive_stream(key).uniforms(100)
    b = derive_stream(key).uniforms(100)
    assert np.array_equal(a, b)


def test_sequential_consumption_matches_one_shot():
    key = StreamKey(7, (1, 2))
    stream = derive_stream(key)
    first = stream.uniforms(3)
    second = stream.uniforms(2)
    assert np.array_equal(
        np.concatenate([first, second]), derive_stream(key).uniforms(5)
    )


def test_uniforms_lie_in_open_interval():
    u = derive_stream(StreamKey(0, (0,))).uniforms(10_000)
    assert np.all(u > 0.0)
    assert np.all(u < 1.0)


def test_distinct_paths_give_distinct_streams():
    # Concatenation ambiguity (1,) vs (1, 0) must not collide: the path
    # length is part of the key material.
    a = derive_stream(StreamKey(0, (1,))).uniforms(4)
    b = derive_stream(StreamKey(0, (1, 0))).uniforms(4)
    c = derive_stream(StreamKey(1, (1,))).uniforms(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_level_branch_paths_are_distinct():
    # The recursion consumes paths theta + (l, i) and theta + (-l, i) for
    # the two telescoped sub-estimates; they must be independent streams.
    theta = (5, 2, 7)
    for level in (1, 2, 3):
        plus = derive_stream(StreamKey(0, theta + (level, 1))).uniforms(8)
        minus = derive_stream(StreamKey(0, theta + (-level, 1))).uniforms(8)
        assert not np.array_equal(plus, minus)


def test_child_key_extends_path():
    key = StreamKey(11, (4,))
    assert key.child(2, -3) == StreamKey(11, (4, 2, -3))


def test_sibling_streams_are_uncorrelated():
    n = 10_000
    a = derive_stream(StreamKey(0, (8, 1))).uniforms(n)
    b = derive_stream(StreamKey(0, (8, 2))).uniforms(n)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.04


def test_time_fraction_law_passes_ks_test():
    n = 100_000
    critical = KS_CRITICAL_1PCT / math.sqrt(n)
    for idx, e in enumerate((0.3, 0.5, 0.7)):
        u = derive_stream(StreamKey(0, (50, idx))).uniforms(n)
        draws = u ** (1.0 / e)
        stat = kstest(draws, lambda b, _e=e: np.asarray(b) ** _e).statistic
        assert stat < critical, f"e={e}: KS {stat:.5f} >= {critical:.5f}"


def test_time_fraction_median_and_mean_at_half_exponent():
    # At e = 1/2 the CDF is sqrt(b): median 0.25, mean e/(e+1) = 1/3.
    n = 100_000
    u = derive_stream(StreamKey(0, (51,))).uniforms(n)
    draws = u**2.0
    assert abs(np.median(draws) - 0.25) < 0.01
    var = 0.5 / 2.5 - (1.0 / 3.0) ** 2
    three_sigma = 3.0 * math.sqrt(var / n)
    assert abs(draws.mean() - 1.0 / 3.0) < three_sigma


def test_time_fraction_rejects_exponent_outside_open_interval():
    stream = derive_stream(StreamKey(0, (0,)))
    for e in (0.0, 1.0, 1.2, -0.3):
        with pytest.raises(ValueError):
            stream.time_fraction(e)


def test_gaussian_moments():
    n = 100_000
    z = derive_stream(StreamKey(0, (52,))).gaussian(n)
    assert abs(z.mean()) < 3.0 / math.sqrt(n)
    assert abs(z.var() - 1.0) < 3.0 * math.sqrt(2.0 / n)


def test_ledger_counts_scalar_draws():
    ledger = DrawLedger()
    stream = derive_stream(StreamKey(0, (1,)))
    stream.gaussian(3, ledger)
    assert ledger.scalar_draws == 3
    stream.uniforms(5, ledger)
    assert ledger.scalar_draws == 8
    stream.time_fraction(0.5, ledger)
    assert ledger.scalar_draws == 9
    other = DrawLedger()
    other.add(4)
    ledger.merge(other)
    assert ledger.scalar_draws == 13


def test_negative_draw_count_rejected():
    with pytest.raises(ValueError):
        derive_stream(StreamKey(0, (1,))).uniforms(-1)


def test_block_uniforms_rows_match_per_stream_draws():
    base = (9, -4)
    suffixes = [(0, -1), (0, -2), (1, 3), (-2, 1)]
    block = block_uniforms(123, base, suffixes, width=5)
    assert block.shape == (4, 5)
    for j, suffix in enumerate(suffixes):
        row = derive_stream(StreamKey(123, base + suffix)).uniforms(5)
        assert np.array_equal(block[j], row)


def test_block_uniforms_ledger_counts_all_cells():
    ledger = DrawLedger()
    block_uniforms(0, (1,), [(0, -1), (0, -2), (0, -3)], width=4,
                   ledger=ledger)
    assert ledger.scalar_draws == 12


def test_second_moment_diagnostic_matches_closed_form():
    # Per gradient coordinate E[U^2] = T/(e(1-e)): 4 at (T, e) = (1, 1/2)
    # and 8 at (2, 1/2).  Exact 3-sigma bands from the fourth moment
    # 3 T^2 / (e^3 (2 - 3e)).
    n = 100_000
    for horizon, expected in ((1.0, 4.0), (2.0, 8.0)):
        diag = single_step_second_moment(horizon, 0.5, 1, n_samples=n)
        assert diag.expected_gradient == expected
        fourth = 3.0 * horizon**2 / (0.5**3 * 0.5)
        sigma = math.sqrt(fourth - expected**2) / math.sqrt(n)
        assert abs(diag.gradient_moments[0] - expected) < 3.0 * sigma
        assert diag.expected_value == horizon**2 / (0.5 * 1.5)
        assert not diag.heavy_tail
        assert diag.samples == n


def test_second_moment_value_coordinate():
    diag = single_step_second_moment(1.0, 0.5, 2, n_samples=200_000)
    # E[U_0^2] = T^2/(e(2-e)) = 4/3; the value weight is bounded so a
    # loose band suffices.
    assert abs(diag.value_moment - 4.0 / 3.0) < 0.02
    assert diag.gradient_moments.shape == (2,)


def test_heavy_tail_flag_tracks_exponent_band():
    # The closed-form moment stays finite as e -> 1 but its Monte Carlo
    # estimate becomes unreliable; the diagnostic flags e outside [0.2, 0.8].
    diag = single_step_second_moment(1.0, 0.95, 1, n_samples=100)
    assert diag.heavy_tail
    assert diag.expected_gradient == pytest.approx(1.0 / (0.95 * 0.05))
    assert not single_step_second_moment(
        1.0, 0.5, 1, n_samples=100).heavy_tail
    assert single_step_second_moment(1.0, 0.1, 1, n_samples=100).heavy_tail


def test_second_moment_input_validation():
    with pytest.raises(ValueError):
        single_step_second_moment(0.0, 0.5, 1)
    with pytest.raises(ValueError):
        single_step_second_moment(1.0, 1.0, 1)
    with pytest.raises(ValueError):
        single_step_second_moment(1.0, 0.5, 0)
    with pytest.raises(ValueError):
        single_step_second_moment(1.0, 0.5, 1, n_samples=0)
