"""Closed-form expectations against independent enumeration and MC oracles."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afsasim.analytic import (
    OptimalSeqConstants,
    expected_idle,
    expected_per_tag_us,
    expected_reserved,
    expected_successful,
    expected_undetected,
    expected_undetected_exact,
    expected_unresolved,
    optimal_seq_len,
    phase_durations_for,
    round_duration,
    slot_profile,
)
from afsasim.estimator import nearest_power_of_two
from afsasim.model import TimingModel

from oracles import enum_slot_stats, enum_undetected, mc_slot_means

SMALL_CELLS = [(k, n) for k in range(0, 5) for n in range(1, 5)]


@pytest.mark.parametrize("tags,slots", SMALL_CELLS)
def test_slot_expectations_match_enumeration(tags, slots):
    reserved, idle, unresolved = enum_slot_stats(tags, slots)
    assert expected_reserved(tags, slots) == pytest.approx(float(reserved), abs=1e-12)
    assert expected_idle(tags, slots) == pytest.approx(float(idle), abs=1e-12)
    assert expected_unresolved(tags, slots) == pytest.approx(float(unresolved), abs=1e-12)


def test_two_tags_two_slots_exact():
    # both outcomes fit in a float exactly: reserved 1, idle 1/2, unresolved 1/2
    assert expected_reserved(2, 2) == 1.0
    assert expected_idle(2, 2) == 0.5
    assert expected_unresolved(2, 2) == 0.5


def test_reference_operating_point_frozen():
    assert expected_reserved(100, 128) == pytest.approx(46.00249422706087, rel=1e-12)
    assert expected_idle(100, 128) == pytest.approx(58.423167668367306, rel=1e-12)
    assert expected_unresolved(100, 128) == pytest.approx(23.574338104571815, rel=1e-12)
    assert expected_undetected(100, 128, 2) == pytest.approx(5.893584526142954, rel=1e-12)
    assert expected_successful(100, 128, 2) == pytest.approx(51.896078753203824, rel=1e-12)


def test_slot_expectations_match_monte_carlo():
    reserved, idle, unresolved = mc_slot_means(100, 128, rounds=200_000, seed=424242)
    assert reserved == pytest.approx(expected_reserved(100, 128), rel=0.005)
    assert idle == pytest.approx(expected_idle(100, 128), rel=0.005)
    assert unresolved == pytest.approx(expected_unresolved(100, 128), rel=0.005)


def test_empty_and_single_populations():
    assert expected_reserved(0, 16) == 0.0
    assert expected_idle(0, 16) == 16.0
    assert expected_unresolved(0, 16) == 0.0
    assert expected_reserved(1, 1) == 1.0
    assert expected_reserved(2, 1) == 0.0
    assert expected_idle(2, 1) == 0.0
    assert expected_unresolved(2, 1) == 1.0


def test_fractional_tags_accepted():
    # the adaptation path evaluates these at real-valued backlog estimates
    mid = expected_unresolved(54.3, 64)
    assert expected_unresolved(54, 64) < mid < expected_unresolved(55, 64)


@pytest.mark.parametrize("bad", [(-1, 4), (2, 0), (2, -3)])
def test_argument_validation(bad):
    tags, slots = bad
    for fn in (expected_reserved, expected_idle, expected_unresolved):
        with pytest.raises(ValueError):
            fn(tags, slots)


@given(tags=st.integers(min_value=0, max_value=2000),
       slots=st.integers(min_value=1, max_value=1024))
def test_slot_kinds_conserve_frame(tags, slots):
    total = (expected_reserved(tags, slots) + expected_idle(tags, slots)
             + expected_unresolved(tags, slots))
    assert total == pytest.approx(slots, rel=1e-9)


def test_unresolved_monotone_in_tags():
    values = [expected_unresolved(k, 64) for k in range(0, 300)]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("tags,slots,bits", [
    (2, 2, 1), (3, 2, 1), (2, 3, 2), (3, 3, 1), (4, 2, 2), (4, 4, 2),
])
def test_exact_undetected_matches_enumeration(tags, slots, bits):
    oracle = enum_undetected(tags, slots, bits)
    assert expected_undetected_exact(tags, slots, bits) == pytest.approx(
        float(oracle), abs=1e-12)


def test_exact_undetected_two_tags_equals_flat_model():
    # with at most two occupants the flat per-slot probability is exact
    for slots in (2, 8, 64):
        for bits in (1, 2, 4):
            assert expected_undetected_exact(2, slots, bits) == pytest.approx(
                expected_undetected(2, slots, bits), rel=1e-12)


def test_flat_model_overestimates_with_crowded_slots():
    # 3+ occupants agree with probability 2**(-2n), not 2**(-n)
    for bits in range(1, 7):
        exact = expected_undetected_exact(100, 64, bits)
        flat = expected_undetected(100, 64, bits)
        assert exact < flat


def test_exact_undetected_frozen_values():
    assert expected_undetected_exact(100, 128, 2) == pytest.approx(
        4.7850694585893185, rel=1e-12)
    assert expected_undetected_exact(100, 64, 2) == pytest.approx(
        4.722722828551212, rel=1e-12)


def test_exact_undetected_edge_cases():
    assert expected_undetected_exact(0, 8, 2) == 0.0
    assert expected_undetected_exact(1, 8, 2) == 0.0
    # one slot, all tags collide there
    assert expected_undetected_exact(3, 1, 2) == pytest.approx(2.0 ** -4, rel=1e-12)
    with pytest.raises(ValueError):
        expected_undetected_exact(2.5, 8, 2)


def test_undetected_same_seq_prob_override():
    base = expected_unresolved(100, 128)
    assert expected_undetected(100, 128, 2, same_seq_prob=0.5) == pytest.approx(
        base * 0.5, rel=1e-12)
    # the doubled variant equals dropping one bit
    assert expected_undetected(100, 128, 3, same_seq_prob=2.0 ** -2) == pytest.approx(
        expected_undetected(100, 128, 2), rel=1e-12)
    with pytest.raises(ValueError):
        expected_undetected(100, 128, 2, same_seq_prob=1.5)
    with pytest.raises(ValueError):
        expected_undetected(100, 128, 0)


def test_slot_profile_bundles_consistently():
    profile = slot_profile(100, 128, 2)
    assert profile.e_reserved == expected_reserved(100, 128)
    assert profile.e_idle == expected_idle(100, 128)
    assert profile.e_unresolved == expected_unresolved(100, 128)
    assert profile.e_undetected == expected_undetected(100, 128, 2)
    assert profile.s_expected == profile.e_reserved + profile.e_undetected


def test_optimal_seq_len_reference_points():
    at_reference = optimal_seq_len(expected_unresolved(100, 128), 128)
    assert at_reference.raw == pytest.approx(1.816, abs=1e-3)
    assert at_reference.rounded == 2
    quarter_load = optimal_seq_len(0.25 * 128, 128)
    assert quarter_load.raw == pytest.approx(2.256, abs=1e-3)
    assert quarter_load.rounded == 2


def test_optimal_seq_len_floor_at_light_load():
    # argument at or below one: raw collapses to zero, usable length to one bit
    choice = optimal_seq_len(0.01, 64)
    assert choice.raw == 0.0
    assert choice.rounded == 1
    assert optimal_seq_len(0.0, 8) == (0.0, 1)


def test_optimal_seq_len_rounds_half_up():
    # log10(arg) == 1 exactly, so raw is exactly 2.5; half-way goes up
    constants = OptimalSeqConstants(log_coeff=2.5, arg_coeff=10.0)
    choice = optimal_seq_len(64.0, 64, constants)
    assert choice.raw == 2.5
    assert choice.rounded == 3


def test_optimal_seq_len_validation():
    with pytest.raises(ValueError):
        optimal_seq_len(-0.1, 64)
    with pytest.raises(ValueError):
        optimal_seq_len(1.0, 0)


def test_chosen_lengths_stay_small_across_loads():
    # frame adaptation keeps load near one, where 2 or 3 bits suffice
    seen = set()
    for tags in range(16, 1025):
        slots = nearest_power_of_two(tags)
        seen.add(optimal_seq_len(expected_unresolved(tags, slots), slots).rounded)
    assert seen == {2, 3}


def test_phase_durations_reference_cell():
    phases = phase_durations_for(51.896078753203824, 128, 2, TimingModel())
    assert phases.t_ad == 200.0
    assert phases.t_r == 12.5 * 128 * 2
    assert phases.t_su == 12.5 * 128
    assert phases.t_d == pytest.approx(320.0 * 51.896078753203824, rel=1e-12)
    assert phases.t_ack == pytest.approx(12.5 * 51.896078753203824, rel=1e-12)


def test_phase_durations_validation():
    with pytest.raises(ValueError):
        phase_durations_for(-0.5, 8, 2)
    with pytest.raises(ValueError):
        phase_durations_for(9, 8, 2)
    with pytest.raises(ValueError):
        phase_durations_for(1, 8, 0)


@given(successes=st.floats(min_value=0, max_value=64),
       bits=st.integers(min_value=1, max_value=16))
@settings(max_examples=50)
def test_round_time_grows_with_successes(successes, bits):
    lighter = phase_durations_for(successes * 0.5, 64, bits).total
    heavier = phase_durations_for(successes, 64, bits).total
    assert lighter <= heavier


def test_round_duration_frozen_values():
    # two tags in four slots: S = 1.5625 and every term is binary-exact
    assert round_duration(2, 4, 2) == 869.53125
    assert round_duration(100, 128, 2) == pytest.approx(22255.446185440273, rel=1e-12)
    assert round_duration(0, 4, 2) == 350.0


def test_expected_per_tag_reference():
    assert expected_per_tag_us(100, 128, 2) == pytest.approx(
        483.78781540824696, rel=1e-12)
    with pytest.raises(ValueError):
        expected_per_tag_us(0, 128, 2)
