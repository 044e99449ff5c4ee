import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wsnmark.trilateration import (
    CoverMedium,
    SensorScenario,
    WatermarkConstraint,
    build_cover_medium,
    reference_scenario,
    speed_of_sound,
    synthesize_scenario,
)


@pytest.mark.parametrize("temp, expected", [(0, 331.4), (36, 353.0), (-10, 325.4)])
def test_speed_of_sound_examples(temp, expected):
    assert speed_of_sound(temp) == pytest.approx(expected, abs=1e-12)


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_speed_of_sound_is_affine(a, b):
    assert speed_of_sound(a) - speed_of_sound(b) == pytest.approx(0.6 * (a - b), abs=1e-9)


def test_collocated_anchors_rejected():
    with pytest.raises(ValueError, match="collocated"):
        SensorScenario(((0, 0), (0, 0), (1, 1)), 36.0, (0.05, 0.05, 0.05))


@pytest.mark.parametrize("times", [(0.0, 0.1, 0.1), (-0.1, 0.1, 0.1), (math.nan, 0.1, 0.1)])
def test_bad_times_rejected(times):
    with pytest.raises(ValueError):
        SensorScenario(((0, 0), (1, 0), (0, 1)), 36.0, times)


def test_build_rejects_non_scenario():
    with pytest.raises(ValueError):
        build_cover_medium({"anchors": []})


def test_cover_medium_shape():
    p = build_cover_medium(synthesize_scenario(1))
    assert p.objective_coefficients == (1.0,) * 7
    assert p.watermark_constraints == ()
    assert len(p.distance_residuals([0.0] * 9)) == 3
    with pytest.raises(ValueError):
        p.with_coefficients([1, 2, 3])


def test_constraint_variables_must_be_error_indices():
    with pytest.raises(ValueError):
        WatermarkConstraint({0, 3}, 0.5)
    with pytest.raises(ValueError):
        WatermarkConstraint({8}, 0.5)
    assert WatermarkConstraint({2, 4}, 0.5).lhs([1, 2, 3, 4, 5, 6, 7]) == 6.0


@pytest.mark.parametrize("seed", range(20))
def test_noise_free_zero_error_point_is_exact(seed):
    # forward-simulated times make (truth, zero errors) satisfy every constraint
    sc = synthesize_scenario(seed, "noise-free")
    p = build_cover_medium(sc)
    point = list(sc.ground_truth) + [0.0] * 7
    assert max(abs(r) for r in p.distance_residuals(point)) <= 1e-12
    assert p.objective([0.0] * 7) == 0.0


def test_synthesis_is_deterministic_and_seed_sensitive():
    assert synthesize_scenario(1) == synthesize_scenario(1)
    assert synthesize_scenario(1) != synthesize_scenario(2)
    sc = synthesize_scenario(1)
    assert all(0.02 <= t <= 0.1 for t in sc.times)
    assert all(0 <= c <= 1 for a in sc.anchors for c in a)


def test_time_interval_override():
    sc = synthesize_scenario(4, time_interval=(0.5, 0.6))
    assert all(0.5 <= t <= 0.6 for t in sc.times)


def test_unknown_mode():
    with pytest.raises(ValueError):
        synthesize_scenario(1, "bogus")


def test_rebuild_is_structurally_identical_and_pure():
    sc = synthesize_scenario(7)
    before = (sc.anchors, sc.times, sc.temperature)
    assert build_cover_medium(sc) == build_cover_medium(sc)
    assert (sc.anchors, sc.times, sc.temperature) == before


def test_reference_times_are_consistent_with_node_at_origin():
    sc = reference_scenario()
    assert sc.temperature == 36.0
    assert sc.times == (0.771625, 0.106793, 0.09282)
    p = build_cover_medium(sc)
    assert max(abs(r) for r in p.distance_residuals([0.0] * 9)) < 1e-9
    # the anchors sit at the ranges the times imply
    v = speed_of_sound(36.0)
    assert np.allclose(np.hypot(*np.array(sc.anchors).T), v * np.array(sc.times))
