"""Monte Carlo averaging over experimental parameter fluctuations.

Atomic motion in the standing-wave trap makes each atom's coupling
fluctuate between probe cycles, and residual light shifts jitter the
atomic resonance.  Both are modeled by drawing per-sample parameters from
bounded distributions and averaging the resulting spectra.  Sample i uses
an independent counter-based RNG stream keyed by (seed, i), so results are
bit-reproducible and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .params import (CavityParams, DetuningGrid, DriveConfig, EnsembleConfig,
                     hz_from_rad, rad_from_hz)
from .transmission import (Spectrum, spectrum_meta, transmission_eq1_grid)

RNG_STREAM = "philox4x64"
STARK_JITTER_BOUND = rad_from_hz(5e6)

_FAMILIES = ("delta", "uniform", "truncnorm")


@dataclass(frozen=True)
class Distribution:
    """Named bounded distribution family.

    delta(v): point mass at v.
    uniform(a, b): uniform on [a, b].
    truncnorm(mu, sigma, lo, hi): normal(mu, sigma) truncated to [lo, hi]
    by rejection.
    """

    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidInputError("unknown distribution family",
                                    family=self.family, allowed=_FAMILIES)
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.family == "delta" and len(params) != 1:
            raise InvalidInputError("delta distribution takes one parameter")
        if self.family == "uniform":
            if len(params) != 2 or not params[0] <= params[1]:
                raise InvalidInputError("uniform needs ordered bounds", params=params)
        if self.family == "truncnorm":
            if len(params) != 4 or not params[2] < params[3]:
                raise InvalidInputError("truncnorm needs (mu, sigma, lo, hi) with lo < hi",
                                        params=params)
            if params[1] < 0:
                raise InvalidInputError("truncnorm sigma must be non-negative", params=params)

    @classmethod
    def point(cls, value):
        return cls("delta", (value,))

    @classmethod
    def uniform(cls, low, high):
        return cls("uniform", (low, high))

    @classmethod
    def truncnorm(cls, mu, sigma, low, high):
        return cls("truncnorm", (mu, sigma, low, high))

    def support(self):
        if self.family == "delta":
            return self.params[0], self.params[0]
        if self.family == "uniform":
            return self.params[0], self.params[1]
        return self.params[2], self.params[3]

    def mean_square(self):
        """Analytic second moment, used as an independent check on sampling."""
        if self.family == "delta":
            return self.params[0] ** 2
        if self.family == "uniform":
            a, b = self.params
            return (a * a + a * b + b * b) / 3.0
        mu, sigma, lo, hi = self.params
        if sigma == 0:
            return mu * mu
        # moments of the truncated normal via the error function
        s2 = math.sqrt(2.0)
        za, zb = (lo - mu) / sigma, (hi - mu) / sigma
        phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        cdf = lambda z: 0.5 * (1 + math.erf(z / s2))
        mass = cdf(zb) - cdf(za)
        mean = mu + sigma * (phi(za) - phi(zb)) / mass
        var = sigma * sigma * (1 + (za * phi(za) - zb * phi(zb)) / mass
                               - ((phi(za) - phi(zb)) / mass) ** 2)
        return var + mean * mean

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family == "delta":
            return np.full(size, self.params[0])
        if self.family == "uniform":
            a, b = self.params
            return rng.uniform(a, b, size=size)
        mu, sigma, lo, hi = self.params
        if sigma == 0:
            value = min(max(mu, lo), hi)
            return np.full(size, value)
        out = np.empty(size)
        filled = 0
        rounds = 0
        while filled < size:
            draw = rng.normal(mu, sigma, size=2 * (size - filled) + 8)
            keep = draw[(draw >= lo) & (draw <= hi)]
            take = min(keep.size, size - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
            rounds += 1
            if rounds > 1000:
                raise InvalidInputError("truncnorm acceptance region has negligible mass",
                                        params=self.params)
        return out

    def spec_string(self):
        return f"{self.family}({', '.join(repr(p) for p in self.params)})"


def parse_distribution(text: str) -> Distribution:
    """Parse 'family(a, b, ...)' as written in config files."""
    text = text.strip()
    if "(" not in text or not text.endswith(")"):
        raise InvalidInputError("distribution must look like family(a, b, ...)", text=text)
    family, _, rest = text.partition("(")
    try:
        params = tuple(float(tok) for tok in rest[:-1].split(",") if tok.strip())
    except ValueError as exc:
        raise InvalidInputError("distribution parameters must be numbers", text=text) from exc
    return Distribution(family.strip().lower(), params)


@dataclass(frozen=True)
class DisorderSpec:
    """Fluctuation model: coupling distribution, Stark jitter, sampling plan.

    coupling_dist describes g/g0 and must live inside [0, 1]; stark_jitter
    describes additive atomic detuning offsets in rad/s and must stay
    within +-2pi*5 MHz.  Identical (seed, spec) always reproduce identical
    averages.
    """

    coupling_dist: Distribution
    stark_jitter: Distribution = Distribution.point(0.0)
    n_samples: int = 256
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.coupling_dist.support()
        if lo < 0 or hi > 1:
            raise InvalidInputError("coupling distribution must live in [0, 1]",
                                    support=(lo, hi))
        lo, hi = self.stark_jitter.support()
        bound = STARK_JITTER_BOUND * (1 + 1e-12)
        if lo < -bound or hi > bound:
            raise InvalidInputError("stark jitter must stay within +-2pi*5 MHz",
                                    support_hz=(hz_from_rad(lo), hz_from_rad(hi)))
        if not (isinstance(self.n_samples, (int, np.integer)) and self.n_samples >= 1):
            raise InvalidInputError("n_samples must be a positive integer",
                                    n_samples=self.n_samples)
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2 ** 64):
            raise InvalidInputError("seed must fit in 64 bits", seed=self.seed)

    def meta(self):
        return {
            "coupling_dist": self.coupling_dist.spec_string(),
            "stark_jitter": self.stark_jitter.spec_string(),
            "n_samples": int(self.n_samples),
            "seed": int(self.seed),
            "rng": RNG_STREAM,
        }


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for one Monte Carlo sample.

    Keying the counter-based generator with (seed, index) makes every
    substream reproducible on any platform and independent of the order in
    which samples are evaluated.
    """
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_sample(disorder: DisorderSpec, index: int, cavity: CavityParams,
                ensemble: EnsembleConfig):
    """Per-sample (cavity, ensemble) with drawn couplings and Stark offset."""
    rng = sample_rng(disorder.seed, index)
    fractions = disorder.coupling_dist.sample(rng, ensemble.n_atoms)
    stark = float(disorder.stark_jitter.sample(rng, 1)[0])
    cavity_i = replace(cavity, stark_shift_mean=cavity.stark_shift_mean + stark)
    ensemble_i = replace(ensemble, couplings=tuple(fractions * cavity.g0))
    return cavity_i, ensemble_i


def averaged_spectrum(grid: DetuningGrid, cavity: CavityParams, ensemble: EnsembleConfig,
                      drive: DriveConfig, disorder: DisorderSpec,
                      configuration: str = "eit",
                      extra_meta: dict | None = None) -> Spectrum:
    """Pointwise mean of the steady-state spectrum over parameter draws."""
    if ensemble.n_atoms < 1:
        raise InvalidInputError("disorder averaging needs at least one atom")
    from .transmission import CONFIG_TWO_LEVEL, normalize_configuration
    configuration = normalize_configuration(configuration)
    if configuration == "empty":
        raise InvalidInputError("the empty cavity has nothing to average over")
    drive_used = replace(drive, omega_c=0.0) if configuration == CONFIG_TWO_LEVEL else drive
    deltas = grid.values()
    total = np.zeros(deltas.shape)
    for i in range(disorder.n_samples):
        cavity_i, ensemble_i = draw_sample(disorder, i, cavity, ensemble)
        total += transmission_eq1_grid(deltas, cavity_i, ensemble_i, drive_used)
    mean = total / disorder.n_samples
    meta = spectrum_meta("eq1-averaged", configuration, cavity, ensemble, drive_used)
    meta["disorder"] = disorder.meta()
    if extra_meta:
        meta.update(extra_meta)
    return Spectrum(delta=deltas, transmission=mean, meta=meta)


def averaged_transmission_at(delta: float, cavity: CavityParams, ensemble: EnsembleConfig,
                             drive: DriveConfig, disorder: DisorderSpec) -> float:
    """Disorder-averaged transmission at a single detuning (same streams)."""
    total = 0.0
    for i in range(disorder.n_samples):
        cavity_i, ensemble_i = draw_sample(disorder, i, cavity, ensemble)
        total += float(transmission_eq1_grid(delta, cavity_i, ensemble_i, drive))
    return total / disorder.n_samples
