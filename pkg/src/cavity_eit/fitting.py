"""Least-squares estimation of physical parameters from spectra.

A FitProblem bundles measured (or synthetic) spectra for any subset of the
three configurations with the subset of parameters to float.  The loss is
a weighted sum of squared transmission residuals evaluated with the
steady-state model (optionally disorder-averaged with a fixed RNG seed,
so the loss surface is deterministic).  Parameters are optimized in
bound-scaled coordinates by a Nelder-Mead simplex; confidence intervals
come from the residual curvature at the optimum.

Free parameters and the spectra they act on:
    g        per-atom coupling (all atoms)   two-level, eit
    omega_c  control Rabi frequency          eit
    gamma_gs ground-state decoherence        eit
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .disorder import DisorderSpec, draw_sample
from .errors import InvalidInputError
from .params import CavityParams, DriveConfig, EnsembleConfig
from .transmission import (CONFIG_EIT, CONFIG_EMPTY, CONFIG_TWO_LEVEL, Spectrum,
                           normalize_configuration, transmission_eq1_grid)

PARAM_AFFECTS = {
    "g": (CONFIG_TWO_LEVEL, CONFIG_EIT),
    "omega_c": (CONFIG_EIT,),
    "gamma_gs": (CONFIG_EIT,),
}


@dataclass(frozen=True)
class FitProblem:
    """Spectra, base parameters, free-parameter bounds and weights.

    Bounds, initial values and returned estimates share the problem's own
    unit scale: an applied value in rad/s equals raw * unit_scale, so a
    problem posed in Hz uses unit_scale = 2*pi.
    """

    data: dict
    cavity: CavityParams
    ensemble: EnsembleConfig
    drive: DriveConfig
    free: dict
    initial: dict | None = None
    weights: dict | None = None
    disorder: DisorderSpec | None = None
    unit_scale: float = 1.0

    def __post_init__(self):
        if not self.data:
            raise InvalidInputError("fit needs at least one spectrum")
        data = {normalize_configuration(k): v for k, v in self.data.items()}
        for name, spectrum in data.items():
            if not isinstance(spectrum, Spectrum):
                raise InvalidInputError("fit data must be Spectrum objects", key=name)
        object.__setattr__(self, "data", data)
        for name, bounds in self.free.items():
            if name not in PARAM_AFFECTS:
                raise InvalidInputError("unknown free parameter", name=name,
                                        allowed=sorted(PARAM_AFFECTS))
            lo, hi = bounds
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise InvalidInputError("bounds must be finite and ordered",
                                        name=name, bounds=bounds)
        if self.weights is not None:
            for name, w in self.weights.items():
                if name not in data:
                    raise InvalidInputError("weights refer to missing spectrum", key=name)
                w = np.asarray(w, dtype=float)
                if w.shape != data[name].delta.shape or np.any(w <= 0):
                    raise InvalidInputError("weights must be positive, one per point",
                                            key=name)
        if self.unit_scale <= 0:
            raise InvalidInputError("unit_scale must be positive",
                                    unit_scale=self.unit_scale)

    def identifiable_split(self):
        """Free parameters split into (identifiable, unidentifiable) by structure."""
        present = set(self.data)
        identifiable, unidentifiable = [], []
        for name in self.free:
            if present & set(PARAM_AFFECTS[name]):
                identifiable.append(name)
            else:
                unidentifiable.append(name)
        return identifiable, unidentifiable


@dataclass(frozen=True)
class FitResult:
    """Estimates (in the problem's units), diagnostics and intervals."""

    estimates: dict
    residual_norm: float
    n_evaluations: int
    converged: bool
    confidence_intervals: dict
    unidentifiable: tuple = ()
    residual_trace: tuple = ()


def _apply_parameters(problem: FitProblem, values: dict):
    ensemble = problem.ensemble
    drive = problem.drive
    if "g" in values:
        g = values["g"] * problem.unit_scale
        ensemble = replace(ensemble, couplings=(g,) * ensemble.n_atoms)
    if "gamma_gs" in values:
        ensemble = replace(ensemble, gamma_gs=values["gamma_gs"] * problem.unit_scale)
    if "omega_c" in values:
        drive = replace(drive, omega_c=values["omega_c"] * problem.unit_scale)
    return ensemble, drive


def _model_values(problem: FitProblem, config: str, deltas, ensemble, drive):
    if config == CONFIG_EMPTY:
        return transmission_eq1_grid(deltas, problem.cavity, None, drive)
    drive_used = replace(drive, omega_c=0.0) if config == CONFIG_TWO_LEVEL else drive
    if problem.disorder is None:
        return transmission_eq1_grid(deltas, problem.cavity, ensemble, drive_used)
    total = np.zeros(len(deltas))
    for i in range(problem.disorder.n_samples):
        cavity_i, ensemble_i = draw_sample(problem.disorder, i, problem.cavity, ensemble)
        total += transmission_eq1_grid(deltas, cavity_i, ensemble_i, drive_used)
    return total / problem.disorder.n_samples


def _residual_vector(problem: FitProblem, values: dict):
    ensemble, drive = _apply_parameters(problem, values)
    parts = []
    for config in sorted(problem.data):
        spectrum = problem.data[config]
        model = _model_values(problem, config, spectrum.delta, ensemble, drive)
        residual = model - spectrum.transmission
        if problem.weights and config in problem.weights:
            residual = residual * np.sqrt(np.asarray(problem.weights[config], dtype=float))
        parts.append(residual)
    return np.concatenate(parts)


def fit(problem: FitProblem, budget: int = 4000, seed: int = 0) -> FitResult:
    """Minimize the weighted residual; deterministic given (problem, budget, seed).

    The seed replaces the disorder seed when averaging is requested, fixing
    one common random-number stream for every model evaluation.  With an
    infeasible initial guess the fit refuses to start; exhausting the
    budget returns converged=False with the best point so far.
    """
    if budget < 1:
        raise InvalidInputError("budget must be positive", budget=budget)
    if problem.disorder is not None:
        problem = replace(problem, disorder=replace(problem.disorder, seed=seed))

    identifiable, unidentifiable = problem.identifiable_split()
    initial = dict(problem.initial or {})
    fixed_values = {}
    for name in problem.free:
        lo, hi = problem.free[name]
        guess = initial.get(name, 0.5 * (lo + hi))
        if not lo <= guess <= hi:
            raise InvalidInputError("initial guess outside bounds", name=name,
                                    guess=guess, bounds=(lo, hi))
        fixed_values[name] = guess

    trace = []

    def loss_for(values):
        residual = _residual_vector(problem, values)
        value = float(residual @ residual)
        trace.append(min(value, trace[-1]) if trace else value)
        return value

    if not identifiable:
        # nothing to optimize: echo the fixed model's residual
        value = loss_for(fixed_values)
        return FitResult(estimates=dict(fixed_values),
                         residual_norm=float(np.sqrt(value)),
                         n_evaluations=1, converged=True,
                         confidence_intervals={name: None for name in problem.free},
                         unidentifiable=tuple(unidentifiable),
                         residual_trace=tuple(trace))

    names = identifiable
    lows = np.array([problem.free[n][0] for n in names])
    highs = np.array([problem.free[n][1] for n in names])
    spans = highs - lows

    def unpack(z):
        values = dict(fixed_values)
        for name, zi, lo, span in zip(names, z, lows, spans):
            values[name] = lo + float(np.clip(zi, 0.0, 1.0)) * span
        return values

    def objective(z):
        return loss_for(unpack(z))

    z0 = np.array([(fixed_values[n] - lo) / span
                   for n, lo, span in zip(names, lows, spans)])
    f0 = objective(z0)
    result = minimize(objective, z0, method="Nelder-Mead",
                      bounds=[(0.0, 1.0)] * len(names),
                      options={"maxfev": budget, "xatol": 1e-6,
                               "fatol": max(1e-8 * max(f0, 1e-12), 1e-300),
                               "initial_simplex": None})
    best_values = unpack(result.x)
    best_loss = float(result.fun)
    converged = bool(result.success)

    intervals = _confidence_intervals(problem, names, best_values, best_loss,
                                      lows, highs)
    for name in unidentifiable:
        intervals[name] = None
    estimates = dict(fixed_values)
    estimates.update({n: best_values[n] for n in names})
    return FitResult(estimates=estimates,
                     residual_norm=float(np.sqrt(best_loss)),
                     n_evaluations=len(trace),
                     converged=converged,
                     confidence_intervals=intervals,
                     unidentifiable=tuple(unidentifiable),
                     residual_trace=tuple(trace))


def _confidence_intervals(problem, names, values, loss, lows, highs):
    """95% intervals from the Gauss-Newton curvature of the residual."""
    base = _residual_vector(problem, values)
    m = base.size
    p = len(names)
    if m <= p:
        return {name: None for name in problem.free}
    jac = np.empty((m, p))
    for j, name in enumerate(names):
        step = max(1e-6 * (highs[j] - lows[j]), 1e-12)
        shifted = dict(values)
        shifted[name] = values[name] + step
        jac[:, j] = (_residual_vector(problem, shifted) - base) / step
    sigma_sq = loss / (m - p)
    try:
        covariance = sigma_sq * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return {name: None for name in problem.free}
    intervals = {name: None for name in problem.free}
    for j, name in enumerate(names):
        var = covariance[j, j]
        if not np.isfinite(var) or var < 0:
            continue
        half = 1.96 * float(np.sqrt(var))
        intervals[name] = (values[name] - half, values[name] + half)
    return intervals
