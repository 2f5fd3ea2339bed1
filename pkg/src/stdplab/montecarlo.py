"""Monte-Carlo mismatch analysis of the behavioral circuits.

Each current-mirror branch of the circuit receives an independent
Gaussian threshold-voltage deviation; at the behavioral level a
deviation dVth multiplies that branch's bias current by
``exp(dVth / (n_slope * u_t))``. The deviation spread is specified as
an absolute variation at 3 standard deviations (per-device std =
sigma_vth / 3) and the draw is a plain signed Gaussian centred on zero.

Randomness comes from a counter-based Philox generator so trial sets
are reproducible across platforms; the algorithm identifier is recorded
in every result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .circuit import (BIAS_NAMES, CircuitParams, CircuitTopology, as_topology,
                      simulate_circuit, stdp_window)
from .datasets import Dataset
from .fitting import FitParameter, FitProblem, evaluate_model, fit, nmse

__all__ = [
    "MismatchSpec",
    "MismatchWindowResult",
    "MismatchNmseResult",
    "RNG_ALGORITHM",
    "draw_threshold_shifts",
    "perturbed_params",
    "run_mismatch_window",
    "run_mismatch_nmse",
]

RNG_ALGORITHM = "philox4x64"


@dataclass(frozen=True)
class MismatchSpec:
    """Mismatch study setup: 3-sigma threshold variation, trials, seed."""

    sigma_vth: float
    trials: int
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma_vth > 0.0 and math.isfinite(self.sigma_vth)):
            raise ValueError(f"sigma_vth must be > 0 volts, got {self.sigma_vth!r}")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ValueError(f"trials must be an integer >= 1, got {self.trials!r}")


def draw_threshold_shifts(spec: MismatchSpec, n_branches: int = len(BIAS_NAMES)) -> np.ndarray:
    """(trials, n_branches) signed threshold deviations in volts."""
    rng = np.random.Generator(np.random.Philox(spec.seed))
    return rng.normal(0.0, spec.sigma_vth / 3.0, size=(spec.trials, n_branches))


def perturbed_params(params: CircuitParams, dvth_row) -> CircuitParams:
    """Apply one trial's per-branch threshold shifts to the bias currents."""
    k = params.k
    updates = {name: getattr(params, name) * math.exp(float(dv) / k)
               for name, dv in zip(BIAS_NAMES, dvth_row)}
    return replace(params, **updates)


@dataclass(frozen=True)
class MismatchWindowResult:
    """Per-trial learning windows plus per-dt summary statistics."""

    dt_grid: tuple[float, ...]
    curves: np.ndarray  # (trials, len(dt_grid))
    mean: np.ndarray
    std: np.ndarray
    sign_agreement: np.ndarray  # fraction of trials matching the nominal sign
    nominal: np.ndarray
    rng_algorithm: str = RNG_ALGORITHM


@dataclass(frozen=True)
class MismatchNmseResult:
    """Per-trial dataset errors at fixed (unrefit) parameters."""

    nmse: np.ndarray  # (trials,)
    nominal_nmse: float
    percentiles: dict[str, float]
    refit_nmse: np.ndarray | None = None
    rng_algorithm: str = RNG_ALGORITHM


def run_mismatch_window(params: CircuitParams, spec: MismatchSpec, dt_grid,
                        topology=CircuitTopology.PAIR) -> MismatchWindowResult:
    """Simulate the learning window once per mismatch trial."""
    topology = as_topology(topology)
    dt_grid = tuple(float(dt) for dt in dt_grid)
    shifts = draw_threshold_shifts(spec)
    nominal = np.array([dw for _, dw in stdp_window(topology, params, dt_grid)])
    curves = np.empty((spec.trials, len(dt_grid)))
    for trial in range(spec.trials):
        p = perturbed_params(params, shifts[trial])
        curves[trial] = [dw for _, dw in stdp_window(topology, p, dt_grid)]
    sign = np.sign(nominal)[None, :] * np.sign(curves)
    agreement = np.mean(sign >= 0.0, axis=0)  # zeros never count against a trial
    return MismatchWindowResult(dt_grid=dt_grid, curves=curves,
                                mean=curves.mean(axis=0), std=curves.std(axis=0),
                                sign_agreement=agreement, nominal=nominal)


def _percentiles(values: np.ndarray) -> dict[str, float]:
    qs = (0, 5, 25, 50, 75, 95, 100)
    pct = np.percentile(values, qs)
    return {f"p{q:02d}": float(v) for q, v in zip(qs, pct)}


def run_mismatch_nmse(topology, params: CircuitParams, dataset: Dataset,
                      spec: MismatchSpec, refit: bool = False,
                      refit_budget: int = 2000) -> MismatchNmseResult:
    """Dataset NMSE per mismatch trial at fixed parameters.

    With ``refit=True`` each trial additionally re-tunes the bias
    currents (the unperturbed optimum is always one of the starting
    points, so the refit error can never exceed the unrefit one beyond
    numerical slack).
    """
    topology = as_topology(topology)
    shifts = draw_threshold_shifts(spec)
    model = {
        CircuitTopology.PAIR: "circuit-pair",
        CircuitTopology.TRIPLET_FULL: "circuit-triplet-full",
        CircuitTopology.TRIPLET_MINIMAL_VISUAL: "circuit-triplet-minimal-visual-cortex",
        CircuitTopology.TRIPLET_MINIMAL_HIPPOCAMPAL: "circuit-triplet-minimal-hippocampal",
    }[topology]

    def dataset_nmse(p: CircuitParams) -> float:
        problem = FitProblem(model=model, dataset=dataset)
        values = {name: getattr(p, name) for name in BIAS_NAMES}
        return nmse(evaluate_model(problem, values), dataset)

    nominal = dataset_nmse(params)
    errors = np.empty(spec.trials)
    refit_errors = np.empty(spec.trials) if refit else None
    for trial in range(spec.trials):
        p = perturbed_params(params, shifts[trial])
        errors[trial] = dataset_nmse(p)
        if refit:
            refit_errors[trial] = _refit_trial(model, p, dataset, refit_budget,
                                               seed=spec.seed + trial)
    return MismatchNmseResult(nmse=errors, nominal_nmse=nominal,
                              percentiles=_percentiles(errors),
                              refit_nmse=refit_errors)


def _refit_trial(model: str, start_params: CircuitParams, dataset: Dataset,
                 budget: int, seed: int) -> float:
    """Re-tune the free biases of one perturbed trial.

    The trial's own (unrefit) operating point is evaluated and polished
    directly, so the returned error never exceeds the unrefit error by
    more than unit-transform round-off.
    """
    from scipy import optimize as sp_opt

    base = FitProblem(model=model, dataset=dataset)
    free = []
    for p in base.free:
        v = getattr(start_params, p.name)
        free.append(FitParameter(p.name, min(p.lower, v) if v > 0 else p.lower,
                                 max(p.upper, v), p.log))
    problem = FitProblem(model=model, dataset=dataset, free=tuple(free),
                         fixed=base.fixed)
    d = len(free)

    def objective(u):
        params = problem.params_from_vector([free[i].from_unit(u[i]) for i in range(d)])
        try:
            return nmse(evaluate_model(problem, params), dataset)
        except (ValueError, ArithmeticError):
            return math.inf

    u0 = np.clip([p.to_unit(getattr(start_params, p.name)) for p in free], 0.0, 1.0)
    best = objective(u0)
    res = sp_opt.minimize(objective, u0, method="Nelder-Mead",
                          bounds=[(0.0, 1.0)] * d,
                          options={"maxfev": max(d + 2, budget // 2),
                                   "xatol": 1e-6, "fatol": 1e-12})
    best = min(best, float(res.fun))
    try:
        explored = fit(problem, budget=max(1, budget // 2), seed=seed, n_starts=4)
        best = min(best, explored.nmse)
    except Exception:
        pass
    return best
