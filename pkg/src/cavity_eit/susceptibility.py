"""Complex linear susceptibility of a three-level Lambda medium.

chi relates the atomic polarisation to the intracavity field in the
weak-probe limit and is what turns the bare cavity response into the
two-level or transparency spectrum.  Units are 1/(rad/s): multiplied by
g^2 N it has the same dimension as the detunings it is combined with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, SingularityError


@dataclass(frozen=True)
class SusceptibilityInput:
    """Arguments of chi: detunings and rates in rad/s.

    delta_a: probe-atom (single-photon) detuning.
    delta_2: two-photon detuning; zero at the dark-state resonance.
    omega_c: control dipole Rabi frequency.
    gamma:   optical polarisation decay rate (> 0).
    gamma_gs: ground-state decoherence rate (>= 0).
    """

    delta_a: float
    delta_2: float
    omega_c: float
    gamma: float
    gamma_gs: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidInputError("gamma must be positive", gamma=self.gamma)
        if self.gamma_gs < 0:
            raise InvalidInputError("gamma_gs must be non-negative", gamma_gs=self.gamma_gs)
        if self.omega_c < 0:
            raise InvalidInputError("omega_c must be non-negative", omega_c=self.omega_c)


def chi(inp: SusceptibilityInput) -> complex:
    """chi = (delta_2 + i gamma_gs) / [(delta_a + i gamma)(delta_2 + i gamma_gs) - omega_c^2/4].

    With the control off this reduces to the two-level Lorentzian
    1/(delta_a + i gamma); at two-photon resonance with no ground-state
    decoherence the numerator vanishes and the medium is transparent.
    """
    return complex(chi_grid(inp.delta_a, inp.delta_2, inp.omega_c, inp.gamma, inp.gamma_gs))


def chi_grid(delta_a, delta_2, omega_c, gamma, gamma_gs=0.0):
    """Vectorized chi over arrays of detunings (scalars broadcast)."""
    da, d2 = np.broadcast_arrays(np.asarray(delta_a, dtype=float),
                                 np.asarray(delta_2, dtype=float))
    shape = da.shape
    da = np.atleast_1d(da).ravel()
    d2 = np.atleast_1d(d2).ravel()
    numerator = d2 + 1j * gamma_gs
    denominator = (da + 1j * gamma) * numerator - 0.25 * omega_c * omega_c
    singular = denominator == 0
    if np.any(singular):
        # The only removable 0/0 is the control-off case at
        # delta_2 = gamma_gs = 0, where chi has the two-level limit;
        # every other vanishing denominator is a genuine pole.
        removable = singular & (numerator == 0) & (omega_c == 0)
        if np.any(singular & ~removable):
            i = int(np.argwhere(singular & ~removable)[0])
            raise SingularityError(
                "susceptibility denominator vanished",
                delta_a=float(da[i]), delta_2=float(d2[i]),
                omega_c=float(omega_c), gamma=float(gamma), gamma_gs=float(gamma_gs),
            )
        out = np.empty(da.shape, dtype=complex)
        ok = ~singular
        out[ok] = numerator[ok] / denominator[ok]
        out[singular] = 1.0 / (da[singular] + 1j * gamma)
    else:
        out = numerator / denominator
    out = out.reshape(shape)
    return out if shape else complex(out)
