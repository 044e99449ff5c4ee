"""Atomic trilateration program used as the cover medium.

A node ``D`` measures the time difference of arrival to three anchors
``A, B, C``. The program searches for its position together with seven
measurement errors, ordered ``eps_t, eps_DA, eps_DB, eps_DC, delta1,
delta2, delta3``; the full decision vector prepends ``x_D, y_D``.

For each anchor ``K`` the distance constraint reads::

    | dist(D, K) - (331.4 + 0.6 (T_c + eps_t)) (t_DK + eps_DK) | <= delta_K
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .bitcodec import BitString

N_ERRORS = 7
N_VARS = 9
POSITION = slice(0, 2)
ERRORS = slice(2, 9)
VARIABLE_NAMES = ("x_D", "y_D", "eps_t", "eps_DA", "eps_DB", "eps_DC",
                  "delta1", "delta2", "delta3")

# position, eps_t, eps_DK, delta_K
DEFAULT_LOWER = (-100.0, -100.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
DEFAULT_UPPER = (100.0, 100.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0)

REFERENCE_TEMPERATURE = 36.0
REFERENCE_TIMES = (0.771625, 0.106793, 0.09282)
SAMPLED_TIME_INTERVAL = (0.02, 0.1)


def speed_of_sound(temperature: float) -> float:
    """Acoustic speed in m/s at ``temperature`` degrees Celsius."""
    return 331.4 + 0.6 * temperature


@dataclass(frozen=True)
class SensorScenario:
    anchors: tuple[tuple[float, float], ...]
    temperature: float
    times: tuple[float, float, float]
    ground_truth: Optional[tuple[float, float]] = None

    def __post_init__(self):
        anchors = tuple((float(x), float(y)) for x, y in self.anchors)
        times = tuple(float(t) for t in self.times)
        if len(anchors) != 3 or len(times) != 3:
            raise ValueError("a scenario has exactly three anchors and three times")
        for i in range(3):
            for j in range(i + 1, 3):
                if anchors[i] == anchors[j]:
                    raise ValueError(f"anchors {'ABC'[i]} and {'ABC'[j]} are collocated")
        if not all(math.isfinite(t) and t > 0 for t in times):
            raise ValueError(f"times must be strictly positive, got {times}")
        if not math.isfinite(self.temperature):
            raise ValueError("temperature must be finite")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "temperature", float(self.temperature))
        if self.ground_truth is not None:
            object.__setattr__(self, "ground_truth", tuple(float(v) for v in self.ground_truth))


@dataclass(frozen=True)
class WatermarkConstraint:
    """``sum(error[i] for i in variables) <= tau`` over 1-based error indices."""

    variables: frozenset[int]
    tau: float
    source_group: Optional[BitString] = None

    def __post_init__(self):
        variables = frozenset(int(v) for v in self.variables)
        if not variables <= set(range(1, N_ERRORS + 1)):
            raise ValueError(f"constraint variables {sorted(variables)} outside 1..{N_ERRORS}")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "tau", float(self.tau))

    def lhs(self, errors) -> float:
        return float(sum(errors[i - 1] for i in sorted(self.variables)))


@dataclass(frozen=True)
class CoverMedium:
    scenario: SensorScenario
    objective_coefficients: tuple[float, ...] = (1.0,) * N_ERRORS
    watermark_constraints: tuple[WatermarkConstraint, ...] = ()
    lower: tuple[float, ...] = DEFAULT_LOWER
    upper: tuple[float, ...] = DEFAULT_UPPER
    _arrays: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.objective_coefficients)
        if len(coeffs) != N_ERRORS:
            raise ValueError(f"expected {N_ERRORS} objective coefficients, got {len(coeffs)}")
        if len(self.lower) != N_VARS or len(self.upper) != N_VARS:
            raise ValueError(f"variable box must have {N_VARS} entries")
        object.__setattr__(self, "objective_coefficients", coeffs)
        object.__setattr__(self, "watermark_constraints", tuple(self.watermark_constraints))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))

    def with_coefficients(self, coefficients) -> "CoverMedium":
        return replace(self, objective_coefficients=tuple(coefficients))

    def with_constraints(self, constraints) -> "CoverMedium":
        return replace(self, watermark_constraints=tuple(constraints))

    def append_constraints(self, constraints) -> "CoverMedium":
        return self.with_constraints(self.watermark_constraints + tuple(constraints))

    def objective(self, errors) -> float:
        return float(sum(c * e for c, e in zip(self.objective_coefficients, errors)))

    def distance_residuals(self, point) -> list[float]:
        """Signed ``dist - predicted`` per anchor at a full 9-vector ``point``."""
        s = self.scenario
        v = speed_of_sound(s.temperature + point[2])
        return [math.hypot(point[0] - ax, point[1] - ay) - v * (t + point[3 + k])
                for k, ((ax, ay), t) in enumerate(zip(s.anchors, s.times))]

    def arrays(self):
        """Cached numpy views used by the solver."""
        if not self._arrays:
            self._arrays.update(
                anchors=np.array(self.scenario.anchors),
                times=np.array(self.scenario.times),
                weights=np.array(self.objective_coefficients),
                lower=np.array(self.lower),
                upper=np.array(self.upper),
            )
        return self._arrays


def build_cover_medium(scenario: SensorScenario) -> CoverMedium:
    if not isinstance(scenario, SensorScenario):
        raise ValueError("build_cover_medium expects a SensorScenario")
    return CoverMedium(scenario)


def reference_scenario() -> SensorScenario:
    """Reference temperature and times with a node at the origin.

    Anchor positions are not part of the reference data. They are placed at 90, 210 and
    330 degrees around the origin at the ranges the times imply, so the
    scenario is consistent with zero measurement error.
    """
    v = speed_of_sound(REFERENCE_TEMPERATURE)
    anchors = tuple((v * t * math.cos(math.radians(a)), v * t * math.sin(math.radians(a)))
                    for t, a in zip(REFERENCE_TIMES, (90.0, 210.0, 330.0)))
    return SensorScenario(anchors, REFERENCE_TEMPERATURE, REFERENCE_TIMES, (0.0, 0.0))


def synthesize_scenario(seed: int, mode: str = "sampled", *,
                        temperature: float = REFERENCE_TEMPERATURE,
                        time_interval=SAMPLED_TIME_INTERVAL) -> SensorScenario:
    """Draw a scenario.

    ``sampled`` draws anchors on the unit square and times uniformly
    on ``time_interval``. ``noise-free`` also draws a ground-truth node on the
    unit square and sets each time to ``dist / V_s`` exactly.
    """
    rng = np.random.default_rng(seed)
    while True:
        anchors = rng.uniform(0.0, 1.0, size=(3, 2))
        if mode == "sampled":
            times = rng.uniform(time_interval[0], time_interval[1], size=3)
            truth = None
        elif mode == "noise-free":
            truth = rng.uniform(0.0, 1.0, size=2)
            v = speed_of_sound(temperature)
            times = np.hypot(*(anchors - truth).T) / v
        else:
            raise ValueError(f"unknown scenario mode {mode!r}")
        if _well_posed(anchors, times):
            break
    return SensorScenario(tuple(map(tuple, anchors)), temperature, tuple(times),
                          None if truth is None else tuple(truth))


def _well_posed(anchors, times) -> bool:
    # reject near-collinear anchor triangles and near-zero ranges
    (ax, ay), (bx, by), (cx, cy) = anchors
    area = abs((bx - ax) * (cy - ay) - (cx - ax) * (by - ay)) / 2
    return area > 0.02 and min(times) > 1e-4
