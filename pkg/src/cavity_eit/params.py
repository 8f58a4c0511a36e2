"""Physical parameter types and unit conventions.

All rates and detunings are stored internally as angular frequencies
(rad/s).  Constructors and file formats speak plain Hz; conversion happens
exactly once at the boundary so no factor-2*pi ambiguity can creep into the
formulas.  kappa and gamma are amplitude (field / polarisation) decay
rates: photon energy decays at 2*kappa, excited population at 2*gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi


def rad_from_hz(f):
    """Convert ordinary frequency in Hz to angular frequency in rad/s."""
    return TWO_PI * f


def hz_from_rad(w):
    """Convert angular frequency in rad/s to ordinary frequency in Hz."""
    return w / TWO_PI


def _require(condition, message, **context):
    if not condition:
        raise InvalidInputError(message, **context)


@dataclass(frozen=True)
class CavityParams:
    """Atom-cavity rate triple plus static detuning offsets, all in rad/s.

    g0 is the coupling at a field antinode, kappa the cavity field decay
    rate, gamma the atomic polarisation decay rate.  delta_ac is the bare
    atom-cavity detuning and stark_shift_mean the average light-shift of
    the optical transition; both default to zero (cavity locked onto the
    shifted atomic resonance).
    """

    g0: float
    kappa: float
    gamma: float
    delta_ac: float = 0.0
    stark_shift_mean: float = 0.0

    def __post_init__(self):
        _require(self.g0 > 0, "g0 must be positive", g0=self.g0)
        _require(self.kappa > 0, "kappa must be positive", kappa=self.kappa)
        _require(self.gamma > 0, "gamma must be positive", gamma=self.gamma)
        for name in ("g0", "kappa", "gamma", "delta_ac", "stark_shift_mean"):
            _require(math.isfinite(getattr(self, name)), f"{name} must be finite")

    @classmethod
    def from_hz(cls, g0_hz, kappa_hz, gamma_hz, delta_ac_hz=0.0, stark_shift_mean_hz=0.0):
        return cls(
            g0=rad_from_hz(g0_hz),
            kappa=rad_from_hz(kappa_hz),
            gamma=rad_from_hz(gamma_hz),
            delta_ac=rad_from_hz(delta_ac_hz),
            stark_shift_mean=rad_from_hz(stark_shift_mean_hz),
        )

    @property
    def g0_hz(self):
        return hz_from_rad(self.g0)

    @property
    def kappa_hz(self):
        return hz_from_rad(self.kappa)

    @property
    def gamma_hz(self):
        return hz_from_rad(self.gamma)

    def as_hz_dict(self):
        return {
            "g0_hz": self.g0_hz,
            "kappa_hz": self.kappa_hz,
            "gamma_hz": self.gamma_hz,
            "delta_ac_hz": hz_from_rad(self.delta_ac),
            "stark_shift_mean_hz": hz_from_rad(self.stark_shift_mean),
        }


@dataclass(frozen=True)
class EnsembleConfig:
    """Atom number, per-atom couplings and ground-state properties.

    couplings holds one entry per atom in rad/s.  n_atoms == 0 with an
    empty tuple represents the empty cavity (atoms shelved away from the
    probe transition).  branching_to_f1 is the fraction of excited-state
    decay that returns to the probe-coupled ground state.
    """

    n_atoms: int
    couplings: tuple
    gamma_gs: float = 0.0
    branching_to_f1: float = 0.5

    def __post_init__(self):
        _require(isinstance(self.n_atoms, (int, np.integer)) and self.n_atoms >= 0,
                 "n_atoms must be a non-negative integer", n_atoms=self.n_atoms)
        object.__setattr__(self, "couplings", tuple(float(g) for g in self.couplings))
        _require(len(self.couplings) == self.n_atoms,
                 "couplings must have one entry per atom",
                 n_atoms=self.n_atoms, n_couplings=len(self.couplings))
        _require(all(g >= 0 and math.isfinite(g) for g in self.couplings),
                 "all couplings must be finite and non-negative")
        _require(self.gamma_gs >= 0, "gamma_gs must be non-negative", gamma_gs=self.gamma_gs)
        _require(0.0 <= self.branching_to_f1 <= 1.0,
                 "branching_to_f1 must lie in [0, 1]", branching_to_f1=self.branching_to_f1)

    @classmethod
    def uniform(cls, n_atoms, coupling, gamma_gs=0.0, branching_to_f1=0.5):
        """All atoms share one coupling value."""
        return cls(n_atoms=n_atoms, couplings=(float(coupling),) * n_atoms,
                   gamma_gs=gamma_gs, branching_to_f1=branching_to_f1)

    @classmethod
    def empty(cls, gamma_gs=0.0, branching_to_f1=0.5):
        """No atoms coupled to the probe transition."""
        return cls(n_atoms=0, couplings=(), gamma_gs=gamma_gs,
                   branching_to_f1=branching_to_f1)

    def coupling_sum_sq(self):
        """Sum of g_i^2, the collective weight g^2 N entering the transmission."""
        return float(sum(g * g for g in self.couplings))

    def check_against(self, cavity: CavityParams):
        """Couplings may not exceed the antinode value of the given cavity."""
        _require(all(g <= cavity.g0 * (1 + 1e-12) for g in self.couplings),
                 "per-atom couplings may not exceed g0",
                 g0=cavity.g0, max_coupling=max(self.couplings, default=0.0))


def effective_coupling(ensemble: EnsembleConfig) -> float:
    """Quadratic-mean single-atom coupling g with g^2 = sum_i g_i^2 / N."""
    if ensemble.n_atoms == 0:
        raise InvalidInputError("effective coupling is undefined for an empty ensemble")
    return math.sqrt(ensemble.coupling_sum_sq() / ensemble.n_atoms)


def rabi_from_power(power: float, calibration: float) -> float:
    """Control Rabi frequency from beam power, Omega_c = calibration * sqrt(P).

    calibration carries rad/s per sqrt(watt); the square-root law reflects
    Omega_c being proportional to the field amplitude.
    """
    if power < 0:
        raise InvalidInputError("power must be non-negative", power=power)
    if calibration <= 0:
        raise InvalidInputError("calibration must be positive", calibration=calibration)
    return calibration * math.sqrt(power)


@dataclass(frozen=True)
class DriveConfig:
    """Control and probe drive settings.

    omega_c is the control dipole Rabi frequency in rad/s as it enters the
    susceptibility (the Omega_c^2/4 convention: population oscillates at
    omega_c on resonance).  probe_photon_target sets the probe strength via
    the empty-cavity resonant photon number; probe_duration is the probing
    interval in seconds.  two_photon_detuning_offset shifts the two-photon
    resonance away from zero probe-cavity detuning (a control-laser offset).
    """

    omega_c: float
    probe_photon_target: float = 0.02
    probe_duration: float = 50e-6
    two_photon_detuning_offset: float = 0.0

    def __post_init__(self):
        _require(self.omega_c >= 0, "omega_c must be non-negative", omega_c=self.omega_c)
        _require(self.probe_photon_target > 0, "probe_photon_target must be positive",
                 probe_photon_target=self.probe_photon_target)
        _require(self.probe_duration > 0, "probe_duration must be positive",
                 probe_duration=self.probe_duration)
        _require(math.isfinite(self.two_photon_detuning_offset),
                 "two_photon_detuning_offset must be finite")


@dataclass(frozen=True)
class DetuningGrid:
    """Evenly spaced, strictly increasing probe-cavity detuning grid in rad/s."""

    start: float
    stop: float
    n_points: int

    def __post_init__(self):
        _require(self.start < self.stop, "grid start must be below stop",
                 start=self.start, stop=self.stop)
        _require(isinstance(self.n_points, (int, np.integer)) and self.n_points >= 2,
                 "grid needs at least two points", n_points=self.n_points)

    @classmethod
    def from_hz(cls, start_hz, stop_hz, n_points):
        return cls(rad_from_hz(start_hz), rad_from_hz(stop_hz), int(n_points))

    @classmethod
    def symmetric(cls, half_width, n_points):
        """Grid spanning [-half_width, +half_width]; odd n_points hits zero."""
        return cls(-abs(half_width), abs(half_width), int(n_points))

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n_points)


def atom_probe_detuning(delta, cavity: CavityParams):
    """Probe-atom detuning Delta_a for probe-cavity detuning Delta.

    The cavity is locked near the atomic line; the bare atom-cavity
    detuning and the mean light shift displace the atomic resonance.
    """
    return delta + cavity.delta_ac + cavity.stark_shift_mean

def two_photon_detuning(delta, drive: DriveConfig):
    """Two-photon detuning delta_2; zero at the dark-state resonance.

    Sweeping the probe sweeps delta_2 one-to-one; the offset models a
    control laser parked off its transition.
    """
    return delta + drive.two_photon_detuning_offset
