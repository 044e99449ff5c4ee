"""Multistart local solver for cover-medium programs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InfeasibleError
from .trilateration import N_VARS, CoverMedium, speed_of_sound


@dataclass(frozen=True)
class SolverConfig:
    """Multistart settings.

    ``penalty_initial`` weighs squared violations when screening random
    start candidates. ``outer_iterations`` caps the local re-solves per start;
    each round restarts SLSQP from the previous repaired point and the loop
    stops once the objective stalls below ``inner_tolerance``.
    """

    penalty_initial: float = 10.0
    outer_iterations: int = 2
    inner_tolerance: float = 1e-9
    constraint_tolerance: float = 1e-6
    multistart_count: int = 16
    candidates_per_start: int = 8
    rng_seed: int = 0

    def __post_init__(self):
        if self.inner_tolerance <= 0 or self.constraint_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.penalty_initial <= 0:
            raise ValueError("penalty_initial must be positive")
        if self.multistart_count < 1 or self.candidates_per_start < 1 or self.outer_iterations < 1:
            raise ValueError("multistart_count, candidates_per_start and outer_iterations must be >= 1")


@dataclass(frozen=True)
class Solution:
    position: tuple[float, float]
    error_vector: tuple[float, ...]
    objective_value: float
    feasible: bool
    max_constraint_violation: float

    @property
    def point(self) -> tuple[float, ...]:
        return self.position + self.error_vector


def evaluate(problem: CoverMedium, point) -> tuple[float, list[float]]:
    """Objective and nonnegative violation per constraint at ``point``.

    Violations are ordered: three distance constraints, then watermark
    constraints, then one entry per variable bound.
    """
    point = [float(v) for v in point]
    if len(point) != N_VARS:
        raise ValueError(f"point must have {N_VARS} entries, got {len(point)}")
    errors = point[2:]
    violations = [max(0.0, abs(r) - point[6 + k])
                  for k, r in enumerate(problem.distance_residuals(point))]
    for c in problem.watermark_constraints:
        violations.append(max(0.0, c.lhs(errors) - c.tau))
    for v, lo, hi in zip(point, problem.lower, problem.upper):
        violations.append(max(0.0, lo - v, v - hi))
    return problem.objective(errors), violations


class _Program:
    """numpy callables for one problem."""

    def __init__(self, problem: CoverMedium):
        a = problem.arrays()
        self.problem = problem
        self.anchors = a["anchors"]
        self.times = a["times"]
        self.weights = a["weights"]
        self.lower = a["lower"]
        self.upper = a["upper"]
        self.temperature = problem.scenario.temperature
        cost = np.r_[0.0, 0.0, self.weights]
        # normalized so positive rescaling of the objective is invisible to SLSQP
        scale = float(np.max(np.abs(cost)))
        self.cost = cost / scale if scale > 0 else cost
        rows, rhs = [], []
        for c in problem.watermark_constraints:
            row = np.zeros(N_VARS)
            for i in c.variables:
                row[1 + i] = 1.0
            rows.append(-row)
            rhs.append(-c.tau)
        # linear rows in the form rows @ z - rhs >= 0
        self.rows = np.array(rows).reshape(-1, N_VARS)
        self.rhs = np.array(rhs)
        self.slack_pick = np.zeros((3, N_VARS))
        self.slack_pick[[0, 1, 2], [6, 7, 8]] = 1.0

    def residuals(self, z):
        v = speed_of_sound(self.temperature + z[2])
        d = np.hypot(z[0] - self.anchors[:, 0], z[1] - self.anchors[:, 1])
        return d - v * (self.times + z[3:6])

    def residual_jac(self, z):
        v = speed_of_sound(self.temperature + z[2])
        dx = z[0] - self.anchors[:, 0]
        dy = z[1] - self.anchors[:, 1]
        d = np.maximum(np.hypot(dx, dy), 1e-12)
        jac = np.zeros((3, N_VARS))
        jac[:, 0] = dx / d
        jac[:, 1] = dy / d
        jac[:, 2] = -0.6 * (self.times + z[3:6])
        jac[[0, 1, 2], [3, 4, 5]] = -v
        return jac

    def constraints(self):
        cons = [
            {"type": "ineq", "fun": lambda z: z[6:9] - self.residuals(z),
             "jac": lambda z: self.slack_pick - self.residual_jac(z)},
            {"type": "ineq", "fun": lambda z: z[6:9] + self.residuals(z),
             "jac": lambda z: self.slack_pick + self.residual_jac(z)},
        ]
        if len(self.rhs):
            cons.append({"type": "ineq", "fun": lambda z: self.rows @ z - self.rhs,
                         "jac": lambda z: self.rows})
        return cons

    def max_violation(self, z) -> float:
        return max(evaluate(self.problem, z)[1])

    def complete(self, xy, eps_t):
        """Cheapest error assignment for a fixed position and temperature error,
        ignoring watermark constraints."""
        z = np.zeros(N_VARS)
        z[0:2] = xy
        z[2] = eps_t
        v = speed_of_sound(self.temperature + eps_t)
        d = np.hypot(xy[0] - self.anchors[:, 0], xy[1] - self.anchors[:, 1])
        short = d / v - self.times  # time error that closes the gap exactly
        for k in range(3):
            wk, vk = self.weights[1 + k], self.weights[4 + k]
            if short[k] >= 0 and wk * short[k] <= vk * v * short[k]:
                z[3 + k] = short[k]
            else:
                z[6 + k] = abs(short[k]) * v
        return np.clip(z, self.lower, self.upper)

    def intersection_starts(self):
        """Points where two measured range circles meet (or come closest)."""
        v = speed_of_sound(self.temperature)
        radii = v * self.times
        points = []
        for i in range(3):
            for j in range(i + 1, 3):
                points.extend(_circle_points(self.anchors[i], radii[i], self.anchors[j], radii[j]))
        return [self.complete(p, 0.0) for p in points]

    def merit(self, z, penalty) -> float:
        viol = evaluate(self.problem, z)[1]
        return float(self.cost @ z) + penalty * sum(v * v for v in viol)


def _circle_points(c0, r0, c1, r1):
    gap = c1 - c0
    d = math.hypot(*gap)
    unit = gap / d
    if d >= r0 + r1:
        # disjoint: midpoint of the gap between the circles
        return [c0 + unit * (r0 + (d - r0 - r1) / 2)]
    if d <= abs(r0 - r1):
        # nested: midpoint between the two closest points
        if r0 >= r1:
            return [c0 + unit * (r0 + d + r1) / 2]
        return [c0 + unit * (d - r1 - r0) / 2]
    a = (d * d + r0 * r0 - r1 * r1) / (2 * d)
    h = math.sqrt(max(r0 * r0 - a * a, 0.0))
    mid = c0 + unit * a
    normal = np.array([-unit[1], unit[0]])
    return [mid + h * normal, mid - h * normal]


def _local(program: _Program, z0, config: SolverConfig, cost, max_iter=200):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(lambda z: cost @ z, z0, jac=lambda z: cost, method="SLSQP",
                       bounds=list(zip(program.lower, program.upper)),
                       constraints=program.constraints(),
                       options={"maxiter": max_iter, "ftol": config.inner_tolerance})
    z = np.clip(res.x, program.lower, program.upper)
    # close residual distance gaps left by the local solver through the slacks
    z[6:9] = np.minimum(np.maximum(z[6:9], np.abs(program.residuals(z))), program.upper[6:9])
    return z


def _refine(program: _Program, z, config: SolverConfig):
    previous = math.inf
    for _ in range(config.outer_iterations):
        z = _local(program, z, config, program.cost)
        obj = float(program.cost @ z)
        if program.max_violation(z) <= config.constraint_tolerance and previous - obj <= config.inner_tolerance:
            break
        previous = obj
    return z


def _start_point(program: _Program, config: SolverConfig, index: int):
    rng = np.random.default_rng([config.rng_seed, index])
    best, best_merit = None, math.inf
    for _ in range(config.candidates_per_start):
        draw = rng.uniform(program.lower, program.upper)
        z = program.complete(draw[0:2], draw[2])
        m = program.merit(z, config.penalty_initial)
        if m < best_merit:
            best, best_merit = z, m
    return best


def solve(problem: CoverMedium, config: SolverConfig = SolverConfig()) -> Solution:
    gap = max(lo - hi for lo, hi in zip(problem.lower, problem.upper))
    if gap > 0:
        raise InfeasibleError(f"empty variable box (lower exceeds upper by {gap:.3g})", gap)
    program = _Program(problem)
    tol = config.constraint_tolerance
    best = None  # (objective, index, z)
    best_violation = math.inf
    starts = [_start_point(program, config, i) for i in range(config.multistart_count)]
    starts += program.intersection_starts()
    for index, start in enumerate(starts):
        z = _refine(program, start, config)
        viol = program.max_violation(z)
        best_violation = min(best_violation, viol)
        if viol > tol:
            continue
        obj = float(program.cost @ z)
        if best is None or obj < best[0]:
            best = (obj, index, z)
    if best is None:
        raise InfeasibleError(
            f"no feasible point after {config.multistart_count} starts "
            f"(best violation {best_violation:.3g})", best_violation)
    z = _smallest_errors(program, best[2], config)
    return _solution(problem, z, tol)


def find_feasible(problem: CoverMedium, config: SolverConfig = SolverConfig()):
    """First point satisfying every constraint, or None.

    Uses the same starts as :func:`solve` but a zero objective and stops at
    the first feasible local result, so it is much cheaper than a full solve.
    """
    if any(lo > hi for lo, hi in zip(problem.lower, problem.upper)):
        return None
    program = _Program(problem)
    zero = np.zeros(N_VARS)
    starts = program.intersection_starts()
    starts += [_start_point(program, config, i) for i in range(config.multistart_count)]
    for start in starts:
        if program.max_violation(start) <= config.constraint_tolerance:
            return start
        z = _local(program, start, config, zero)
        if program.max_violation(z) <= config.constraint_tolerance:
            return z
    return None


def _smallest_errors(program: _Program, z, config: SolverConfig):
    """Among points with (numerically) the same objective, pick the one with the
    smallest error vector so degenerate optima resolve the same way every time."""
    f_star = float(program.cost @ z)
    slack = max(config.inner_tolerance, 1e-9 * abs(f_star))
    cap = {"type": "ineq", "fun": lambda u: f_star + slack - program.cost @ u,
           "jac": lambda u: -program.cost}
    pick = np.zeros(N_VARS)
    pick[2:] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(lambda u: 0.5 * np.sum((u * pick) ** 2), z, jac=lambda u: u * pick,
                       method="SLSQP", bounds=list(zip(program.lower, program.upper)),
                       constraints=program.constraints() + [cap],
                       options={"maxiter": 200, "ftol": 1e-14})
    u = np.clip(res.x, program.lower, program.upper)
    u[6:9] = np.minimum(np.maximum(u[6:9], np.abs(program.residuals(u))), program.upper[6:9])
    if (program.max_violation(u) <= config.constraint_tolerance
            and program.cost @ u <= f_star + 2 * slack):
        return u
    return z


def _solution(problem, z, tol) -> Solution:
    point = [float(v) for v in z]
    obj, viol = evaluate(problem, point)
    mv = max(viol)
    return Solution(tuple(point[:2]), tuple(point[2:]), obj, mv <= tol, mv)
