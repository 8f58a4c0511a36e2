"""Figures of merit of transparency spectra.

transparency: height of the transparency window at the two-photon
resonance.  contrast: how much the control beam gains over the control-off
reference at the same point.  The linewidth follows the midpoint
definition: 2 * Delta_ceit where the transparency curve crosses halfway
between its own resonance value and the two-level reference value at
resonance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (InvalidInputError, NoTransparencyError, UndefinedLinewidthError)
from .params import hz_from_rad
from .transmission import Spectrum


@dataclass(frozen=True)
class ScalingFit:
    """Power-law fit y = coefficient * x^exponent in log-log space."""

    exponent: float
    coefficient: float
    residual_norm: float


@dataclass(frozen=True)
class MetricsReport:
    """Transparency, on/off contrast, linewidth and Rabi peaks of one dataset."""

    transparency: float
    contrast: float
    fwhm: float | None
    rabi_peaks: tuple | None
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not -1e-9 <= self.transparency <= 1 + 1e-6:
            raise InvalidInputError("transparency must lie in [0, 1]",
                                    transparency=self.transparency)
        if self.fwhm is not None and not self.fwhm > 0:
            raise InvalidInputError("fwhm must be positive when defined", fwhm=self.fwhm)

    @property
    def fwhm_hz(self):
        return None if self.fwhm is None else hz_from_rad(self.fwhm)

    def to_dict(self):
        return {
            "transparency": self.transparency,
            "contrast": self.contrast,
            "fwhm_hz": self.fwhm_hz,
            "rabi_peaks_hz": (None if self.rabi_peaks is None
                              else [hz_from_rad(p) for p in self.rabi_peaks]),
            "rabi_resolved": self.rabi_peaks is not None,
            "inputs": self.inputs,
        }


def _as_callable(spectrum, label):
    if callable(spectrum):
        return spectrum, None
    if isinstance(spectrum, Spectrum):
        # monotone cubic interpolation avoids spurious extra crossings
        interp = PchipInterpolator(spectrum.delta, spectrum.transmission)
        return (lambda x: float(interp(x))), spectrum
    raise InvalidInputError(f"{label} must be a Spectrum or a callable model")


def _reference_at_zero(two_level, resonance):
    if isinstance(two_level, (int, float, np.floating)):
        return float(two_level)
    fn, _ = _as_callable(two_level, "two-level reference")
    return fn(resonance)


def fwhm_ceit(spectrum_eit, spectrum_2level, resonance: float = 0.0,
              search_limit: float | None = None, rel_tol: float = 1e-9) -> float:
    """Full width of the transparency window, midpoint definition.

    Returns 2 * Delta_ceit where Delta_ceit is the smallest positive
    detuning (relative to the two-photon resonance) at which the
    transparency curve equals [T_eit(res) + T_2level(res)] / 2.  The
    two-level argument may be a Spectrum, a callable, or the reference
    value itself.
    """
    curve, spectrum = _as_callable(spectrum_eit, "transparency spectrum")
    t_eit0 = curve(resonance)
    t_ref0 = _reference_at_zero(spectrum_2level, resonance)
    if not t_eit0 > t_ref0:
        raise NoTransparencyError(
            "transparency does not exceed the two-level reference",
            transparency=t_eit0, reference=t_ref0)
    target = 0.5 * (t_eit0 + t_ref0)

    if spectrum is not None:
        upper = spectrum.delta[-1] - resonance
    elif search_limit is not None:
        upper = search_limit
    else:
        raise InvalidInputError("callable spectra need an explicit search_limit")
    if upper <= 0:
        raise UndefinedLinewidthError("no grid coverage above the resonance point")

    # march outward until the curve first drops below the midpoint
    probes = np.linspace(0.0, upper, 2049)[1:]
    previous = 0.0
    for offset in probes:
        if curve(resonance + offset) - target < 0:
            root = brentq(lambda x: curve(resonance + x) - target,
                          previous, offset, rtol=rel_tol)
            return 2.0 * root
        previous = offset
    raise UndefinedLinewidthError("no midpoint crossing within the searched range",
                                  searched_up_to=float(upper))


def transparency_and_contrast(spectrum_eit, spectrum_2level,
                              resonance: float = 0.0) -> tuple:
    """(T_eit, T_eit - T_2level) at the two-photon resonance point.

    Sampled spectra must contain the resonance point on their grids.
    """
    if isinstance(spectrum_eit, Spectrum):
        t_eit = spectrum_eit.value_at(resonance)
    else:
        fn, _ = _as_callable(spectrum_eit, "transparency spectrum")
        t_eit = fn(resonance)
    if isinstance(spectrum_2level, (int, float, np.floating)):
        t_ref = float(spectrum_2level)
    elif isinstance(spectrum_2level, Spectrum):
        t_ref = spectrum_2level.value_at(resonance)
    else:
        fn, _ = _as_callable(spectrum_2level, "two-level reference")
        t_ref = fn(resonance)
    return t_eit, t_eit - t_ref


def _parabolic_refine(x, y, i):
    if i == 0 or i == len(x) - 1:
        return float(x[i])
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if denom == 0:
        return float(x[i])
    shift = 0.5 * (y[i - 1] - y[i + 1]) / denom
    return float(x[i] + shift * (x[i + 1] - x[i]))


def rabi_peak_positions(spectrum: Spectrum) -> tuple | None:
    """Positions of the two transmission maxima, or None when unresolved.

    Unresolved means the sampled spectrum has a single interior local
    maximum; otherwise the strongest peak on each side of zero detuning is
    refined by three-point parabolic interpolation.
    """
    y = spectrum.transmission
    x = spectrum.delta
    interior = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    if interior.size < 2:
        return None
    negatives = [i for i in interior if x[i] < 0]
    positives = [i for i in interior if x[i] > 0]
    if not negatives or not positives:
        return None
    i_neg = max(negatives, key=lambda i: y[i])
    i_pos = max(positives, key=lambda i: y[i])
    return (_parabolic_refine(x, y, i_neg), _parabolic_refine(x, y, i_pos))


def scaling_fit(family) -> ScalingFit:
    """Least-squares power law through (x, width) pairs in log-log space."""
    pairs = [(float(x), float(w)) for x, w in family]
    if len(pairs) < 3:
        raise InvalidInputError("scaling fit needs at least three family members",
                                n=len(pairs))
    xs = np.array([p[0] for p in pairs])
    ws = np.array([p[1] for p in pairs])
    if np.any(xs <= 0) or np.any(ws <= 0):
        raise InvalidInputError("scaling fit needs positive values")
    log_x, log_w = np.log(xs), np.log(ws)
    (slope, intercept), residuals, *_ = np.polyfit(log_x, log_w, 1, full=True)
    residual_norm = float(np.sqrt(residuals[0])) if residuals.size else 0.0
    return ScalingFit(exponent=float(slope), coefficient=float(np.exp(intercept)),
                      residual_norm=residual_norm)


def compute_metrics(spectrum_eit, spectrum_2level_for_contrast,
                    spectrum_2level_for_fwhm=None, resonance: float = 0.0,
                    inputs: dict | None = None) -> MetricsReport:
    """Bundle the figures of merit of one transparency measurement.

    The contrast reference is what a detector records with the control off
    (finite-probe level, including shelving); the linewidth reference
    defaults to the same but may be given separately when the midpoint
    definition should use the steady-state fit curve instead.
    """
    if spectrum_2level_for_fwhm is None:
        spectrum_2level_for_fwhm = spectrum_2level_for_contrast
    transparency, contrast = transparency_and_contrast(
        spectrum_eit, spectrum_2level_for_contrast, resonance)
    try:
        width = fwhm_ceit(spectrum_eit, spectrum_2level_for_fwhm, resonance)
    except (NoTransparencyError, UndefinedLinewidthError):
        width = None
    peaks = rabi_peak_positions(spectrum_eit) if isinstance(spectrum_eit, Spectrum) else None
    return MetricsReport(transparency=transparency, contrast=contrast, fwhm=width,
                         rabi_peaks=peaks, inputs=dict(inputs or {}))
