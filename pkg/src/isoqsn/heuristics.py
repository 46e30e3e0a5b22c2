"""Search heuristics over initial states: hill climbing, simulated annealing, genetic search.

All three move through unit-norm complex vectors of length ``2^n`` and score a
candidate by the certified optimal error probability of its final states.
A candidate whose solve fails to certify is discarded and counted.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .discrimination import DEFAULT_TOL, objective_from_amplitudes
from .qstate import SensorUnitary, StateVector
from .symmetry import symmetry_index_of_weights

METHODS = ("HC", "SA", "GA")


@dataclass(frozen=True)
class SearchConfig:
    """Tuning knobs shared by the heuristics.

    Attributes:
        step_size_init: initial neighbor step length.
        step_decrease_rate: factor applied to the step after every iteration.
        cooling_rate: annealing factor for the temperature and its std ratio.
        neighbors_per_element: candidates drawn per amplitude per iteration.
        min_iterations: iterations before the stopping test is consulted.
        improvement_threshold: smallest improvement of the best objective that
            counts as progress.
        sa_patience: consecutive non-improving iterations tolerated by annealing.
        ga_population: population size (even, at least 4).
        ga_mutation_rate: per-amplitude mutation probability.
        ga_align_phase: rotate the second parent's global phase onto the first
            before crossover.
        max_iterations: hard cap on outer iterations or generations.
        solver_tol: certificate tolerance for each objective evaluation.
        seed: seed of the run's random stream.
    """

    step_size_init: float = 0.1
    step_decrease_rate: float = 0.96
    cooling_rate: float = 0.96
    neighbors_per_element: int = 4
    min_iterations: int = 100
    improvement_threshold: float = 1e-6
    sa_patience: int = 5
    ga_population: int = 40
    ga_mutation_rate: float = 0.1
    ga_align_phase: bool = True
    max_iterations: int = 2000
    solver_tol: float = DEFAULT_TOL
    seed: int = 0

    def __post_init__(self):
        for name in ("step_decrease_rate", "cooling_rate", "ga_mutation_rate"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.step_size_init <= 0:
            raise ValueError("step_size_init must be positive")
        if self.ga_population < 4 or self.ga_population % 2:
            raise ValueError("ga_population must be even and at least 4")
        if self.neighbors_per_element < 1 or self.min_iterations < 0 or self.sa_patience < 1:
            raise ValueError("neighbor count, min_iterations and sa_patience must be positive")
        if self.max_iterations < max(self.min_iterations, 1):
            raise ValueError("max_iterations must be at least min_iterations")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass
class RunRecord:
    """One search trajectory.

    ``trajectory`` rows are ``(iteration, p_error, symmetry_index)`` of the
    iterate held at the end of that iteration; row 0 is the starting state.
    """

    method: str
    theta: float
    n: int
    trajectory: list
    final_state: StateVector
    final_p_error: float
    wall_time: float
    seed: int
    evaluations: int = 0
    discarded: int = 0
    config: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.trajectory[-1][0] if self.trajectory else 0

    @property
    def final_symmetry_index(self) -> float:
        return symmetry_index_of_weights(self.final_state.probabilities, self.n)

    def symmetry_slope(self) -> float:
        """Least-squares slope of symmetry index against iteration."""
        t = np.array(self.trajectory, dtype=float)
        if t.shape[0] < 2:
            return 0.0
        return float(np.polyfit(t[:, 0], t[:, 2], 1)[0])

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "theta": self.theta,
            "n": self.n,
            "seed": self.seed,
            "final_p_error": self.final_p_error,
            "wall_time": self.wall_time,
            "evaluations": self.evaluations,
            "discarded": self.discarded,
            "config": self.config,
            "trajectory": [list(row) for row in self.trajectory],
            "final_state": self.final_state.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "p_error", "symmetry_index"])
        for it, p, s in self.trajectory:
            writer.writerow([it, repr(float(p)), repr(float(s))])
        return buf.getvalue()


class _Objective:
    """Counts evaluations; uncertified solves score ``None``."""

    def __init__(self, n: int, theta: float, tol: float):
        self.n = n
        self.theta = theta
        self.tol = tol
        self.evaluations = 0
        self.discarded = 0

    def __call__(self, amps: np.ndarray):
        self.evaluations += 1
        result = objective_from_amplitudes(amps, self.n, self.theta, self.tol)
        if not result.converged:
            self.discarded += 1
            return None
        return result.p_error


def _random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return a / np.linalg.norm(a)


def _neighbor(amps: np.ndarray, i: int, step_size: float, rng: np.random.Generator) -> np.ndarray:
    angle = rng.uniform(0.0, 2.0 * math.pi)
    out = amps.copy()
    out[i] += complex(math.cos(angle), math.sin(angle)) * step_size
    return out / np.linalg.norm(out)


def find_neighbor(x: StateVector, i: int, step_size: float, rng: np.random.Generator) -> StateVector:
    """Push amplitude ``i`` by ``step_size`` in a random complex direction, then renormalize."""
    if not 0 <= i < x.dim:
        raise IndexError(f"element {i} out of range for dimension {x.dim}")
    if step_size < 0:
        raise ValueError("step_size must be non-negative")
    return StateVector(x.n_sensors, _neighbor(x.amps, i, step_size, rng))


def _row(it: int, p: float, amps: np.ndarray, n: int) -> tuple:
    return (it, float(p), symmetry_index_of_weights(np.abs(amps) ** 2, n))


def _check(n: int):
    if n < 2:
        raise ValueError(f"heuristics need n >= 2, got {n}")


def _record(method, u, n, cfg, trajectory, amps, p, start, objective) -> RunRecord:
    return RunRecord(
        method=method,
        theta=u.theta,
        n=n,
        trajectory=trajectory,
        final_state=StateVector(n, amps),
        final_p_error=float(p),
        wall_time=time.perf_counter() - start,
        seed=int(cfg.seed),
        evaluations=objective.evaluations,
        discarded=objective.discarded,
        config=asdict(cfg),
    )


def _initial(objective, dim, rng):
    while True:
        x = _random_state(dim, rng)
        p = objective(x)
        if p is not None:
            return x, p


def hill_climb(u: SensorUnitary, n: int, cfg: SearchConfig = SearchConfig()) -> RunRecord:
    """Greedy element-wise descent with a shrinking step."""
    _check(n)
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    objective = _Objective(n, u.theta, cfg.solver_tol)
    dim = 2**n
    x, best = _initial(objective, dim, rng)
    step = cfg.step_size_init
    trajectory = [_row(0, best, x, n)]
    for it in range(1, cfg.max_iterations + 1):
        previous = best
        for i in range(dim):
            candidates = [_neighbor(x, i, step, rng) for _ in range(cfg.neighbors_per_element)]
            choice = None
            for k, cand in enumerate(candidates):
                value = objective(cand)
                # strict improvement only, so the lowest index wins ties
                if value is not None and value < best:
                    best, choice = value, k
            if choice is not None:
                x = candidates[choice]
        step *= cfg.step_decrease_rate
        trajectory.append(_row(it, best, x, n))
        if it >= cfg.min_iterations and previous - best < cfg.improvement_threshold:
            break
    return _record("HC", u, n, cfg, trajectory, x, best, start, objective)


def acceptance_probability(delta: float, temperature: float) -> float:
    """``min(1, exp(-delta / T))``; a non-positive temperature accepts improvements only."""
    if delta < 0:
        return 1.0
    if temperature <= 0:
        return 0.0
    return math.exp(-delta / temperature)


def next_temperature(temperature: float, recent_std: float, std_ratio: float, cooling_rate: float) -> float:
    return min(temperature * cooling_rate, recent_std * std_ratio)


def simulated_anneal(u: SensorUnitary, n: int, cfg: SearchConfig = SearchConfig(),
                     temperature_log: list | None = None) -> RunRecord:
    """Annealed element-wise search; returns the best state seen.

    ``temperature_log``, if given, receives the temperature used in each iteration.
    """
    _check(n)
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    objective = _Objective(n, u.theta, cfg.solver_tol)
    dim = 2**n
    x, energy = _initial(objective, dim, rng)
    step = cfg.step_size_init

    sample = []
    for k in range(10):
        value = objective(_neighbor(x, k % dim, step, rng))
        if value is not None:
            sample.append(value)
    temperature = float(np.std(sample)) if len(sample) > 1 else 0.0
    std_ratio = 1.0
    recent: list[float] = []

    best_x, best = x, energy
    stale = 0
    trajectory = [_row(0, energy, x, n)]
    for it in range(1, cfg.max_iterations + 1):
        if temperature_log is not None:
            temperature_log.append(temperature)
        previous = best
        for i in range(dim):
            for _ in range(cfg.neighbors_per_element):
                cand = _neighbor(x, i, step, rng)
                value = objective(cand)
                if value is None:
                    continue
                recent.append(value)
                delta = value - energy
                if delta < 0 or rng.random() < acceptance_probability(delta, temperature):
                    x, energy = cand, value
                    if energy < best:
                        best_x, best = x, energy
        step *= cfg.step_decrease_rate
        std_ratio *= cfg.cooling_rate
        recent = recent[-10:]
        recent_std = float(np.std(recent)) if len(recent) > 1 else 0.0
        temperature = next_temperature(temperature, recent_std, std_ratio, cfg.cooling_rate)
        trajectory.append(_row(it, energy, x, n))
        stale = stale + 1 if previous - best < cfg.improvement_threshold else 0
        if it >= cfg.min_iterations and stale >= cfg.sa_patience:
            break
    return _record("SA", u, n, cfg, trajectory, best_x, best, start, objective)


def _rank_weights(size: int) -> np.ndarray:
    """Linear rank selection: the best of ``size`` gets weight ``size``, the worst 1."""
    w = np.arange(size, 0, -1, dtype=float)
    return w / w.sum()


def _crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    dim = a.shape[0]
    lo, hi = sorted(rng.choice(dim + 1, size=2, replace=False))
    c1, c2 = a.copy(), b.copy()
    c1[lo:hi], c2[lo:hi] = b[lo:hi], a[lo:hi]
    return c1, c2


def _normalize(a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    norm = np.linalg.norm(a)
    if norm < 1e-12:
        return _random_state(a.shape[0], rng)
    return a / norm


def _mutate(a: np.ndarray, rate: float, step: float, rng: np.random.Generator) -> np.ndarray:
    hits = rng.random(a.shape[0]) < rate
    if not hits.any():
        return a
    angles = rng.uniform(0.0, 2.0 * math.pi, size=int(hits.sum()))
    out = a.copy()
    out[hits] += np.exp(1j * angles) * step
    return out


def genetic_search(u: SensorUnitary, n: int, cfg: SearchConfig = SearchConfig(),
                   best_log: list | None = None) -> RunRecord:
    """Rank-selection genetic search with two-point crossover and elitist survival.

    ``best_log``, if given, receives the best objective of each generation.
    """
    _check(n)
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    objective = _Objective(n, u.theta, cfg.solver_tol)
    dim = 2**n
    size = cfg.ga_population
    population = [_initial(objective, dim, rng) for _ in range(size)]
    population.sort(key=lambda item: item[1])
    weights = _rank_weights(size)
    step = cfg.step_size_init
    best_x, best = population[0]
    trajectory = [_row(0, best, best_x, n)]
    if best_log is not None:
        best_log.append(best)
    for gen in range(1, cfg.max_iterations + 1):
        previous = best
        children = []
        while len(children) < size:
            i, j = rng.choice(size, size=2, replace=False, p=weights)
            a, b = population[i][0], population[j][0]
            if cfg.ga_align_phase:
                overlap = np.vdot(b, a)
                if abs(overlap) > 0:
                    b = b * (overlap / abs(overlap))
            for child in _crossover(a, b, rng):
                child = _normalize(_mutate(_normalize(child, rng), cfg.ga_mutation_rate, step, rng), rng)
                value = objective(child)
                if value is not None:
                    children.append((child, value))
        merged = population + children[:size]
        # stable sort keeps parents ahead of equal-scoring children
        merged.sort(key=lambda item: item[1])
        population = merged[:size]
        best_x, best = population[0]
        step *= cfg.step_decrease_rate
        trajectory.append(_row(gen, best, best_x, n))
        if best_log is not None:
            best_log.append(best)
        if gen >= cfg.min_iterations and previous - best < cfg.improvement_threshold:
            break
    return _record("GA", u, n, cfg, trajectory, best_x, best, start, objective)


def run_method(method: str, u: SensorUnitary, n: int, cfg: SearchConfig = SearchConfig()) -> RunRecord:
    """Dispatch on ``"HC"``, ``"SA"`` or ``"GA"``."""
    runners = {"HC": hill_climb, "SA": simulated_anneal, "GA": genetic_search}
    try:
        return runners[method.upper()](u, n, cfg)
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None
