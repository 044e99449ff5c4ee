"""Embedding, detection and extraction of constraint watermarks.

The watermark lives in the cover medium itself: the sensed value seeds the
LFSR, the resulting 28-bit signal becomes the objective coefficients and
four linear constraints ``sum(selected errors) <= tau_k``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import truncnorm

from .bitcodec import decode_bits, encode_value
from .errors import DetectionError, InfeasibleError, TamperError, UndefinedNormError
from .kolmogorov import SIGNAL_LENGTH, WatermarkPayload, constraint_selections, factors_to_signal
from .lfsr import LfsrKey, generate, recover_seed
from .solver import Solution, SolverConfig, find_feasible, solve
from .trilateration import CoverMedium, SensorScenario, WatermarkConstraint, build_cover_medium

TAU_MEAN = 0.5
TAU_STD = 0.15
TAU_REPAIR_MARGIN = 1e-6
PRESENCE_TOLERANCE = 1e-9
# similarity must exceed the threshold by more than solver resolution
VERDICT_TOLERANCE = 1e-6


def sample_tau(rng: np.random.Generator, size: int = 4) -> np.ndarray:
    """Normal(0.5, 0.15) draws truncated to [0, 1]."""
    a, b = (0.0 - TAU_MEAN) / TAU_STD, (1.0 - TAU_MEAN) / TAU_STD
    return truncnorm.rvs(a, b, loc=TAU_MEAN, scale=TAU_STD, size=size, random_state=rng)


@dataclass(frozen=True)
class EmbeddingRecord:
    payload: WatermarkPayload
    tau_values: tuple[float, ...]
    key: LfsrKey
    base_problem: CoverMedium
    watermarked_problem: CoverMedium
    repaired: bool = False


@dataclass(frozen=True)
class DetectionReport:
    x: tuple[float, ...]
    x_prime: tuple[float, ...]
    x_double_prime: tuple[float, ...]
    n: float
    n_prime: float
    n_double_prime: float
    threshold: float
    similarity: float
    watermark_present: bool
    robust: bool

    def to_dict(self) -> dict:
        return {
            "x": list(self.x),
            "x_prime": list(self.x_prime),
            "x_double_prime": list(self.x_double_prime),
            "N": self.n,
            "N_prime": self.n_prime,
            "N_double_prime": self.n_double_prime,
            "threshold": self.threshold,
            "similarity": self.similarity,
            "watermark_present": self.watermark_present,
            "robust": self.robust,
        }


@functools.lru_cache(maxsize=512)
def cached_solve(problem: CoverMedium, config: SolverConfig) -> Solution:
    # solve is deterministic, so memoizing on (problem, config) is transparent
    return solve(problem, config)


def _watermark_constraints(payload: WatermarkPayload, taus) -> list[WatermarkConstraint]:
    return [WatermarkConstraint(sel.variables, tau, sel.source_group)
            for sel, tau in zip(payload.selections, taus)]


def embed(scenario: SensorScenario, sensed_value: int, key: LfsrKey, rng_seed,
          config: SolverConfig = SolverConfig()) -> EmbeddingRecord:
    """Append the watermark for ``sensed_value`` to the cover medium of ``scenario``.

    Sampled tau values are kept when the watermarked program has a feasible point.
    Otherwise each tau is raised to the constraint's left-hand side at the
    base optimum plus a small margin, which keeps that optimum feasible.
    """
    if not isinstance(scenario, SensorScenario):
        raise ValueError("embed expects a SensorScenario")
    if isinstance(sensed_value, bool) or int(sensed_value) != sensed_value:
        raise ValueError(f"sensed value must be an integer, got {sensed_value!r}")
    sensed_value = int(sensed_value)
    if sensed_value == 0:
        raise ValueError("sensed value 0 gives an all-zero watermark signal")
    seed = encode_value(sensed_value, key.register_length)
    payload = WatermarkPayload.from_signal(generate(seed, key, SIGNAL_LENGTH))
    base = build_cover_medium(scenario).with_coefficients(payload.weight_factors)

    taus = [float(t) for t in sample_tau(np.random.default_rng(rng_seed))]
    marked = base.append_constraints(_watermark_constraints(payload, taus))
    repaired = False
    if find_feasible(marked, config) is None:
        errors = cached_solve(base, config).error_vector
        taus = [max(t, sum(errors[i - 1] for i in sel.variables) + TAU_REPAIR_MARGIN)
                for t, sel in zip(taus, payload.selections)]
        marked = base.append_constraints(_watermark_constraints(payload, taus))
        repaired = True
    return EmbeddingRecord(payload, tuple(taus), key, base, marked, repaired)


def _reference_norm(x_prime: np.ndarray) -> float:
    norm = float(np.sqrt(x_prime @ x_prime))
    if norm == 0.0:
        raise UndefinedNormError("the watermarked error vector is zero")
    return norm


def compute_threshold(x, x_prime) -> float:
    x, x_prime = np.asarray(x, float), np.asarray(x_prime, float)
    return float((x_prime - x) @ x_prime / _reference_norm(x_prime))


def similarity(x, x_prime, x_double_prime) -> float:
    x, x_prime, x_double_prime = (np.asarray(v, float) for v in (x, x_prime, x_double_prime))
    return float((x_double_prime - x) @ x_prime / _reference_norm(x_prime))


def detect(record: EmbeddingRecord, suspect_problem: CoverMedium,
           config: SolverConfig = SolverConfig()) -> DetectionReport:
    vectors = {}
    for name, problem in (("base", record.base_problem),
                          ("watermarked", record.watermarked_problem),
                          ("suspect", suspect_problem)):
        try:
            vectors[name] = cached_solve(problem, config).error_vector
        except InfeasibleError as exc:
            raise DetectionError(f"{name} problem could not be solved: {exc}", name) from exc
    x, xp, xpp = vectors["base"], vectors["watermarked"], vectors["suspect"]
    thr = compute_threshold(x, xp)
    sim = similarity(x, xp, xpp)
    n, n_p, n_pp = (math.sqrt(sum(v * v for v in vec)) for vec in (x, xp, xpp))
    return DetectionReport(
        x, xp, xpp, n, n_p, n_pp, thr, sim,
        watermark_present=abs(n - n_pp) > PRESENCE_TOLERANCE,
        robust=not sim > thr + VERDICT_TOLERANCE,
    )


def extract(problem: CoverMedium, key: LfsrKey) -> int:
    """Recover the sensed value from the objective coefficients.

    Raises :class:`TamperError` when the coefficients are not valid 4-bit
    factors, when the watermark constraints disagree with the selections the
    coefficients imply, or when the signal is not an output of ``key``.
    """
    coefficients = problem.objective_coefficients
    try:
        signal = factors_to_signal(coefficients)
    except ValueError as exc:
        raise TamperError(f"objective coefficients are not watermark factors: {exc}") from exc
    expected = [sel.variables for sel in constraint_selections(signal)]
    found = [c.variables for c in problem.watermark_constraints]
    if found != expected:
        raise TamperError("watermark constraints do not match the selections encoded "
                          "in the objective")
    return decode_bits(recover_seed(signal, key))
