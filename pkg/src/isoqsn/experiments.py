"""Experiment drivers: theta sweeps, conjecture and averaging checks, symmetry traces.

Each driver returns plain data (rows or a report dataclass) and, when given an
output directory, writes CSV files as the source of truth.  Figures are
rendered from those rows by :mod:`isoqsn.plotting`.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .closed_form import (
    best_closed_form,
    conjectured_optimum,
    orthogonal_regime_state,
    two_sensor_optimum,
)
from .discrimination import DEFAULT_TOL, objective_result, unambiguous_objective
from .errors import InfeasibleError, NonConvergenceError, RegimeError
from .heuristics import METHODS, RunRecord, SearchConfig, run_method
from .qstate import SensorUnitary, StateVector, bit_table
from .symmetry import SensorPermutation, average_state, permute_state, threshold

CLOSED_FORM_METHODS = ("conjecture", "corollary", "two_sensor", "closed_form")
ALL_METHODS = METHODS + CLOSED_FORM_METHODS
MEASUREMENTS = ("min_error", "unambiguous")
SWEEP_COLUMNS = (
    "n", "theta_deg", "method", "measurement", "seed",
    "p_value", "iterations", "converged", "config_hash", "wall_time_s",
)


def config_hash(obj) -> str:
    """Short SHA-256 of the canonical JSON form of ``obj``."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def default_theta_grid(step: float = 2.0) -> list[float]:
    """``step, 2 step, ...`` strictly inside ``(0, 180)``."""
    count = int(math.ceil(180.0 / step))
    return [round(k * step, 10) for k in range(1, count) if k * step < 180.0]


def expand_theta_grid(grid) -> list[float]:
    """Accept an explicit list or a ``(start, stop, step)`` triple with inclusive stop."""
    if isinstance(grid, dict):
        grid = (grid["start"], grid["stop"], grid["step"])
    if isinstance(grid, tuple) and len(grid) == 3:
        start, stop, step = (float(v) for v in grid)
        if step <= 0:
            raise ValueError("theta step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(count)]
    return [float(t) for t in grid]


def worker_count() -> int:
    """Pool size, capped by ``ISO_THREADS`` when set."""
    cap = os.environ.get("ISO_THREADS")
    cpus = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(int(cap), cpus))
        except ValueError:
            raise ValueError(f"ISO_THREADS must be an integer, got {cap!r}") from None
    return cpus


# ------------------------------------------------------------------- sweeps


@dataclass
class SweepSpec:
    n_values: list
    theta_grid: list
    methods: list
    measurement: str = "min_error"
    seeds: list = field(default_factory=lambda: [0])
    output_dir: str | None = None
    search: dict = field(default_factory=dict)
    plot: bool = True

    def __post_init__(self):
        self.theta_grid = expand_theta_grid(self.theta_grid)
        self.n_values = [int(n) for n in self.n_values]
        self.seeds = [int(s) for s in self.seeds]
        bad = [t for t in self.theta_grid if not 0.0 < t < 180.0]
        if bad:
            raise ValueError(f"theta values must lie in (0, 180): {bad}")
        bad = [n for n in self.n_values if not 2 <= n <= 12]
        if bad:
            raise ValueError(f"n values must lie in [2, 12]: {bad}")
        unknown = [m for m in self.methods if m not in ALL_METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {list(ALL_METHODS)}")
        if self.measurement not in MEASUREMENTS:
            raise ValueError(f"measurement must be one of {MEASUREMENTS}")
        SearchConfig(**self.search)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        data = dict(data)
        grid = data.get("theta_grid")
        if isinstance(grid, list) and len(grid) == 3 and data.pop("theta_range", False):
            data["theta_grid"] = tuple(grid)
        return cls(**data)

    def cells(self):
        for n, theta, method, seed in itertools.product(self.n_values, self.theta_grid, self.methods, self.seeds):
            yield n, theta, method, seed


def _closed_form_state(method: str, n: int, theta: float) -> StateVector | None:
    """State for a closed-form method, or ``None`` when it does not apply at ``theta``."""
    try:
        if method == "conjecture":
            return conjectured_optimum(n, theta).state
        if method == "corollary":
            return orthogonal_regime_state(n, theta).state
        if method == "two_sensor":
            return two_sensor_optimum(theta).state if n == 2 else None
        if method == "closed_form":
            return best_closed_form(n, theta).state
    except RegimeError:
        return None
    raise ValueError(method)


def evaluate_state(psi: StateVector, theta: float, measurement: str, tol: float = DEFAULT_TOL):
    """``(p_value, iterations, converged)`` for the chosen discrimination scheme."""
    u = SensorUnitary(theta)
    if measurement == "unambiguous":
        try:
            res = unambiguous_objective(psi, u, tol)
        except InfeasibleError:
            # dependent final states: no conclusive outcome is ever safe
            return 1.0, 0, True
        return res.p_failure, res.iterations, res.converged
    try:
        res = objective_result(psi, u, tol)
    except NonConvergenceError as exc:
        return exc.result.p_error, exc.result.iterations, False
    return res.p_error, res.iterations, True


def run_cell(args) -> dict | None:
    """One sweep cell; returns a CSV row dict, or ``None`` if the method does not apply."""
    n, theta, method, seed, measurement, search = args
    start = time.perf_counter()
    cell_cfg = {"n": n, "theta_deg": theta, "method": method, "measurement": measurement, "seed": seed}
    if method in METHODS:
        cfg = SearchConfig(**{**search, "seed": seed})
        cell_cfg["search"] = asdict(cfg)
        record = run_method(method, SensorUnitary(theta), n, cfg)
        p_value, _, converged = evaluate_state(record.final_state, theta, measurement, cfg.solver_tol)
        iterations = record.iterations
    else:
        psi = _closed_form_state(method, n, theta)
        if psi is None:
            return None
        p_value, iterations, converged = evaluate_state(psi, theta, measurement)
    return {
        "n": n,
        "theta_deg": theta,
        "method": method,
        "measurement": measurement,
        "seed": seed,
        "p_value": repr(float(p_value)),
        "iterations": iterations,
        "converged": bool(converged),
        "config_hash": config_hash(cell_cfg),
        "wall_time_s": f"{time.perf_counter() - start:.4f}",
    }


def _sort_key(row):
    return row["n"], row["theta_deg"], ALL_METHODS.index(row["method"]), row["seed"]


def write_csv(path: Path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in columns})


def cmd_sweep(spec: SweepSpec, workers: int | None = None) -> list[dict]:
    """Evaluate every ``(n, theta, method, seed)`` cell; write CSV, summary JSON and plots.

    Heuristic cells use the chosen measurement only for the reported value;
    the search itself minimizes the minimum-error objective.
    """
    if spec.output_dir is not None:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
    jobs = [(n, t, m, s, spec.measurement, spec.search) for n, t, m, s in spec.cells()]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, jobs))
    else:
        results = [run_cell(job) for job in jobs]
    rows = sorted((r for r in results if r is not None), key=_sort_key)

    if spec.output_dir is not None:
        out = Path(spec.output_dir)
        write_csv(out / "sweep.csv", rows, SWEEP_COLUMNS)
        summary = {
            "spec": asdict(spec),
            "spec_hash": config_hash({k: v for k, v in asdict(spec).items() if k != "output_dir"}),
            "cells": len(jobs),
            "rows": len(rows),
            "skipped": len(jobs) - len(rows),
            "non_converged": sum(1 for r in rows if not r["converged"]),
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str))
        if spec.plot and rows:
            from .plotting import plot_sweep

            for n in sorted({r["n"] for r in rows}):
                plot_sweep([r for r in rows if r["n"] == n], out / f"sweep_n{n}.svg")
    return rows


# ------------------------------------------------------ conjecture checking


@dataclass
class ConjectureRow:
    theta: float
    heuristic: float
    conjecture: float
    difference: float
    flagged: bool


def conjecture_grid(n: int, points: int = 8) -> list[float]:
    """``points`` angles evenly spaced strictly between 0 and ``T(n)``."""
    t = threshold(n)
    return [round(t * k / (points + 1), 6) for k in range(1, points + 1)]


def cmd_validate_conjecture(n: int, theta_grid=None, seed: int = 0, method: str = "HC",
                            search: dict | None = None, margin: float = 1e-4) -> list[ConjectureRow]:
    """Run a heuristic at each angle and compare against the symmetric closed form.

    A row is flagged when the heuristic beats the closed form by more than ``margin``.
    """
    grid = conjecture_grid(n) if theta_grid is None else expand_theta_grid(theta_grid)
    rows = []
    for theta in grid:
        predicted = conjectured_optimum(n, theta).predicted_error
        cfg = SearchConfig(**{**(search or {}), "seed": seed})
        found = run_method(method, SensorUnitary(theta), n, cfg).final_p_error
        rows.append(ConjectureRow(theta, found, predicted, found - predicted, found < predicted - margin))
    return rows


# -------------------------------------------------------- averaging checks


@dataclass
class AveragingTrial:
    trial: int
    theta: float
    original: float
    averaged_min: float
    averaged_max: float
    permuted_spread: float
    violation: bool


def _random_state(n: int, rng: np.random.Generator) -> StateVector:
    a = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, a / np.linalg.norm(a))


def averaging_trial(psi: StateVector, theta: float, tol: float = DEFAULT_TOL, slack: float = 1e-6,
                    trial: int = 0) -> AveragingTrial:
    """Compare a state with its averages against every relabelled copy of itself."""
    u = SensorUnitary(theta)
    original = objective_result(psi, u, tol).p_error
    permuted, averaged = [], []
    for perm in SensorPermutation.all(psi.n_sensors):
        if perm.pi == tuple(range(psi.n_sensors)):
            continue
        other = permute_state(psi, perm)
        permuted.append(objective_result(other, u, tol).p_error)
        averaged.append(objective_result(average_state(psi, other), u, tol).p_error)
    spread = max(abs(p - original) for p in permuted) if permuted else 0.0
    return AveragingTrial(trial, theta, original, min(averaged), max(averaged), spread,
                          max(averaged) > original + slack)


def cmd_validate_averaging(n: int, trials: int, seed: int = 0, thetas=None,
                           tol: float = DEFAULT_TOL) -> list[AveragingTrial]:
    """Random states versus averages with their sensor-relabelled copies.

    Angles cycle through ``thetas`` (default a single 67.5 degrees).
    """
    if not 2 <= n <= 5:
        raise ValueError("averaging validation supports 2 <= n <= 5")
    rng = np.random.default_rng(seed)
    thetas = [67.5] if thetas is None else list(thetas)
    return [
        averaging_trial(_random_state(n, rng), thetas[k % len(thetas)], tol, trial=k)
        for k in range(trials)
    ]


# ------------------------------------------------------------ symmetry trace


def cmd_symmetry_trace(n: int, theta: float, method: str = "HC", seed: int = 0,
                       search: dict | None = None, output_dir: str | None = None,
                       plot: bool = True) -> RunRecord:
    """Run one heuristic and export its per-iteration objective and symmetry index."""
    cfg = SearchConfig(**{**(search or {}), "seed": seed})
    record = run_method(method, SensorUnitary(theta), n, cfg)
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"trace_{method}_n{n}_t{theta:g}_s{seed}"
        (out / f"{stem}.csv").write_text(record.trajectory_csv())
        write_csv(out / f"{stem}_scatter.csv",
                  [{"symmetry_index": repr(s), "p_error": repr(p)} for _, p, s in record.trajectory],
                  ("symmetry_index", "p_error"))
        (out / f"{stem}.json").write_text(record.to_json())
        if plot:
            from .plotting import plot_trace

            plot_trace(record, out / f"{stem}.svg")
    return record


# ------------------------------------------------------ orthogonality witness


def _pair_phase_matrix(n: int, theta: float) -> np.ndarray:
    """Real matrix ``A`` with ``A w`` stacking (Re, Im) of every pairwise overlap.

    For weights ``w_j = |psi_j|^2``, ``<phi_a|phi_b> = sum_j w_j exp(2i theta (b_j - a_j))``.
    """
    bits = bit_table(n)
    rows = []
    for a, b in itertools.combinations(range(n), 2):
        phase = np.exp(2j * math.radians(theta) * (bits[:, b] - bits[:, a]))
        rows.append(phase.real)
        rows.append(phase.imag)
    return np.array(rows)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.clip(v - css[rho] / (rho + 1), 0.0, None)


def minimize_overlap_energy(n: int, theta: float, start: np.ndarray, iterations: int = 3000) -> np.ndarray:
    """Accelerated projected gradient for ``min ||A w||^2`` over the probability simplex.

    The energy is the sum of squared pairwise overlaps, a convex function of
    the weights, so every start converges to the same minimum value.
    """
    a = _pair_phase_matrix(n, theta)
    lipschitz = 2.0 * np.linalg.norm(a, 2) ** 2
    w = _project_simplex(np.asarray(start, dtype=float))
    y, t = w.copy(), 1.0
    for _ in range(iterations):
        w_next = _project_simplex(y - (2.0 * a.T @ (a @ y)) / lipschitz)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = w_next + ((t - 1.0) / t_next) * (w_next - w)
        w, t = w_next, t_next
    return w


def max_pairwise_overlap(weights: np.ndarray, n: int, theta: float) -> float:
    z = _pair_phase_matrix(n, theta) @ weights
    return float(np.max(np.hypot(z[0::2], z[1::2])))


@dataclass
class WitnessReport:
    n: int
    theta: float
    trials: int
    min_random_overlap: float
    min_optimized_overlap: float
    energy_lower_bound: float

    @property
    def orthogonal_found(self) -> bool:
        return min(self.min_random_overlap, self.min_optimized_overlap) < 1e-3


def orthogonality_witness(n: int, theta: float, trials: int = 200, seed: int = 0,
                          iterations: int = 3000) -> WitnessReport:
    """Search for mutually orthogonal final states at ``theta``.

    Draws random states, records their largest pairwise overlap, then pushes
    each one's coefficient-squares downhill on the total squared overlap.
    ``energy_lower_bound`` is ``sqrt(min energy / pairs)``, a lower bound on
    the largest overlap any state can reach.
    """
    rng = np.random.default_rng(seed)
    pairs = n * (n - 1) // 2
    best_random = best_opt = math.inf
    min_energy = math.inf
    a = _pair_phase_matrix(n, theta)
    for _ in range(trials):
        weights = _random_state(n, rng).probabilities
        best_random = min(best_random, max_pairwise_overlap(weights, n, theta))
        opt = minimize_overlap_energy(n, theta, weights, iterations)
        best_opt = min(best_opt, max_pairwise_overlap(opt, n, theta))
        min_energy = min(min_energy, float(np.sum((a @ opt) ** 2)))
    return WitnessReport(n, theta, trials, best_random, best_opt, math.sqrt(min_energy / pairs))


def threshold_table(ns=range(3, 11)) -> list[tuple[int, float]]:
    return [(n, threshold(n)) for n in ns]


def orthogonal_regime_samples(n: int, count: int = 10) -> list[float]:
    """``count`` evenly spaced angles covering ``[T, 180 - T]`` including both ends."""
    t = threshold(n)
    return list(np.linspace(t, 180.0 - t, count))
