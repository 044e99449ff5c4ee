"""Constraint-based watermarking of a sensor-network trilateration program."""

__version__ = "0.1.0"

from .attacks import ATTACK_KINDS, AttackSpec, apply_attack
from .bitcodec import BitString, decode_bits, encode_value
from .kolmogorov import WatermarkPayload, constraint_selections, factors_to_signal, weight_factors
from .lfsr import REFERENCE_KEY, LfsrKey, generate, recover_seed
from .solver import Solution, SolverConfig, evaluate, solve
from .trilateration import (CoverMedium, SensorScenario, WatermarkConstraint, build_cover_medium,
                            reference_scenario, speed_of_sound, synthesize_scenario)
from .watermarklab import (DetectionReport, EmbeddingRecord, compute_threshold, detect, embed,
                           extract, similarity)
