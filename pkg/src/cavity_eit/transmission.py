"""Steady-state cavity transmission spectra.

The normalized transmission of the driven atom-cavity system is

    T(Delta) = kappa^2 / |(Delta + i kappa) - g^2 N chi(delta_a, delta_2)|^2

with chi the Lambda-medium susceptibility.  T equals 1 for the empty
resonant cavity, reproduces the vacuum-Rabi doublet of N two-level atoms
when the control is off, and opens the transparency window at the
two-photon resonance when it is on.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .params import (CavityParams, DetuningGrid, DriveConfig, EnsembleConfig,
                     atom_probe_detuning, hz_from_rad, two_photon_detuning)
from .susceptibility import chi_grid

CONFIG_EMPTY = "empty"
CONFIG_TWO_LEVEL = "two-level"
CONFIG_EIT = "eit"
CONFIGURATIONS = (CONFIG_EMPTY, CONFIG_TWO_LEVEL, CONFIG_EIT)

# Aliases accepted at boundaries (config files, CLI flags).
_CONFIG_ALIASES = {
    "empty": CONFIG_EMPTY,
    "two-level": CONFIG_TWO_LEVEL,
    "two_level": CONFIG_TWO_LEVEL,
    "2level": CONFIG_TWO_LEVEL,
    "eit": CONFIG_EIT,
    "cavity-eit": CONFIG_EIT,
    "cavity_eit": CONFIG_EIT,
}


def normalize_configuration(name: str) -> str:
    key = str(name).strip().lower()
    if key not in _CONFIG_ALIASES:
        raise InvalidInputError("unknown configuration", configuration=name,
                                allowed=sorted(set(_CONFIG_ALIASES)))
    return _CONFIG_ALIASES[key]


@dataclass(frozen=True)
class SpectrumPoint:
    """One (probe-cavity detuning, normalized transmission) sample."""

    delta: float
    transmission: float


@dataclass(frozen=True)
class Spectrum:
    """Ordered transmission samples plus provenance metadata.

    delta is strictly increasing, in rad/s; transmission is dimensionless
    and non-negative.  meta records at least the model identifier and the
    parameter snapshot; averaged spectra also carry seed, sample count and
    the RNG stream name.
    """

    delta: np.ndarray
    transmission: np.ndarray
    meta: dict

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        transmission = np.asarray(self.transmission, dtype=float)
        if delta.ndim != 1 or transmission.shape != delta.shape:
            raise InvalidInputError("spectrum arrays must be 1-d and equally long",
                                    n_delta=delta.size, n_transmission=transmission.size)
        if delta.size < 1:
            raise InvalidInputError("spectrum must contain at least one point")
        if not np.all(np.diff(delta) > 0):
            raise InvalidInputError("detunings must be strictly increasing")
        if not np.all(np.isfinite(transmission)):
            raise InvalidInputError("transmission values must be finite")
        if np.any(transmission < 0):
            raise InvalidInputError("transmission values must be non-negative")
        if not self.meta:
            raise InvalidInputError("spectrum meta must be populated")
        delta.setflags(write=False)
        transmission.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "transmission", transmission)

    def __len__(self):
        return self.delta.size

    @property
    def delta_hz(self) -> np.ndarray:
        return hz_from_rad(self.delta)

    @property
    def points(self):
        return tuple(SpectrumPoint(float(d), float(t))
                     for d, t in zip(self.delta, self.transmission))

    def value_at(self, delta, tol_factor=1e-9):
        """Transmission at an existing grid node near the given detuning."""
        span = self.delta[-1] - self.delta[0]
        i = int(np.argmin(np.abs(self.delta - delta)))
        if abs(self.delta[i] - delta) > tol_factor * max(span, abs(delta), 1.0):
            raise InvalidInputError("grid does not contain the requested detuning",
                                    requested=float(delta), nearest=float(self.delta[i]))
        return float(self.transmission[i])


def transmission_eq1(delta, cavity: CavityParams, ensemble: EnsembleConfig | None,
                     drive: DriveConfig) -> float:
    """Normalized steady-state transmission at one probe-cavity detuning.

    ensemble=None (or zero atoms) gives the empty-cavity Lorentzian;
    drive.omega_c = 0 gives the two-level spectrum.
    """
    return float(transmission_eq1_grid(delta, cavity, ensemble, drive))


def transmission_eq1_grid(deltas, cavity: CavityParams, ensemble: EnsembleConfig | None,
                          drive: DriveConfig):
    """Vectorized transmission over an array of detunings."""
    deltas = np.asarray(deltas, dtype=float)
    denom = deltas + 1j * cavity.kappa
    if ensemble is not None and ensemble.n_atoms > 0:
        ensemble.check_against(cavity)
        g2n = ensemble.coupling_sum_sq()
        if g2n > 0:
            susceptibility = chi_grid(
                atom_probe_detuning(deltas, cavity),
                two_photon_detuning(deltas, drive),
                drive.omega_c, cavity.gamma, ensemble.gamma_gs,
            )
            denom = denom - g2n * susceptibility
    out = cavity.kappa ** 2 / np.abs(denom) ** 2
    return out if out.shape else float(out)


def sweep(grid: DetuningGrid, configuration: str, cavity: CavityParams,
          ensemble: EnsembleConfig | None, drive: DriveConfig,
          extra_meta: dict | None = None) -> Spectrum:
    """Evaluate one physical configuration over a detuning grid.

    "empty" forces N = 0, "two-level" forces omega_c = 0, "eit" uses the
    parameters as given.
    """
    configuration = normalize_configuration(configuration)
    if configuration == CONFIG_EMPTY:
        ensemble_used = None
        drive_used = drive
    elif configuration == CONFIG_TWO_LEVEL:
        ensemble_used = ensemble
        drive_used = replace(drive, omega_c=0.0)
    else:
        ensemble_used = ensemble
        drive_used = drive
    if configuration != CONFIG_EMPTY and (ensemble is None or ensemble.n_atoms == 0):
        raise InvalidInputError("atomic configurations need at least one atom",
                                configuration=configuration)
    deltas = grid.values()
    values = transmission_eq1_grid(deltas, cavity, ensemble_used, drive_used)
    meta = spectrum_meta("eq1", configuration, cavity, ensemble_used, drive_used)
    if extra_meta:
        meta.update(extra_meta)
    return Spectrum(delta=deltas, transmission=np.asarray(values, dtype=float), meta=meta)


def spectrum_meta(model, configuration, cavity, ensemble, drive) -> dict:
    """Parameter snapshot stored with every spectrum (frequencies in Hz)."""
    meta = {
        "model": model,
        "configuration": configuration,
        "cavity": cavity.as_hz_dict(),
    }
    if ensemble is not None:
        meta["ensemble"] = {
            "n_atoms": ensemble.n_atoms,
            "couplings_hz": [hz_from_rad(g) for g in ensemble.couplings],
            "gamma_gs_hz": hz_from_rad(ensemble.gamma_gs),
            "branching_to_f1": ensemble.branching_to_f1,
        }
    else:
        meta["ensemble"] = {"n_atoms": 0}
    meta["drive"] = {
        "omega_c_hz": hz_from_rad(drive.omega_c),
        "probe_photon_target": drive.probe_photon_target,
        "probe_duration_s": drive.probe_duration,
        "two_photon_detuning_offset_hz": hz_from_rad(drive.two_photon_detuning_offset),
    }
    return meta
