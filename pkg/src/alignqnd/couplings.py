"""Atom-light coupling strengths and spontaneous-emission parameters.

All frequencies (detunings, offsets, linewidth) are in MHz.  Only ratios
``gamma / delta`` enter the couplings, so no conversion to angular
frequency is ever needed except for the saturation diagnostic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Literal, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from .polarizability import PolarizabilityTable, TransitionManifold, build_table, rb87_d2

__all__ = [
    "ExperimentParams",
    "CouplingSet",
    "SweepTable",
    "detunings",
    "kappa_vector",
    "kappa_tensor",
    "noise_params",
    "saturation_parameter",
    "coupling_set",
    "sweep_detuning",
    "find_zero",
    "find_zeros",
    "default_params",
]

log = logging.getLogger(__name__)

SATURATION_WARN = 1e-2


@dataclass(frozen=True)
class ExperimentParams:
    """Ensemble and probe settings.

    Attributes
    ----------
    atoms_n, photons_n
        Atom number ``N`` and photon number ``n`` per pulse.
    beam_area
        Probe cross-section in m^2.
    pulse_duration
        Pulse length in seconds (only used by the saturation diagnostic).
    probe_detuning
        Detuning from the lowest excited level, MHz (positive = blue).
    manifold
        Level structure.
    include_upper_in_noise
        If true the noise model's coupling also sums the levels beyond the
        lowest two; by default only the lowest pair enters.
    """

    atoms_n: float
    photons_n: float
    beam_area: float
    pulse_duration: float
    probe_detuning: float
    manifold: TransitionManifold
    include_upper_in_noise: bool = False

    def __post_init__(self):
        if self.atoms_n < 0 or self.photons_n < 0:
            raise ValueError("atom and photon numbers must be non-negative")
        if self.beam_area <= 0 or self.pulse_duration <= 0:
            raise ValueError("beam area and pulse duration must be positive")
        for lv in self.manifold.excited_levels:
            if self.probe_detuning - lv.offset_mhz == 0:
                raise ValueError(f"probe is exactly resonant with F'={lv.f}")

    def with_detuning(self, delta0: float) -> "ExperimentParams":
        return replace(self, probe_detuning=float(delta0))


@dataclass(frozen=True)
class CouplingSet:
    kappa_v: float
    kappa_t: float
    eps_a: float
    eps_p: float
    eps_prime: float
    saturation: float = 0.0

    @property
    def noise_valid(self) -> bool:
        return 0 <= self.eps_a < 1 and 0 <= self.eps_p < 1

    def doubled(self) -> "CouplingSet":
        """Noise parameters for a double-pass or double-cell probe."""
        return replace(self, eps_a=2 * self.eps_a, eps_p=2 * self.eps_p,
                       eps_prime=2 * self.eps_prime)


def default_params(probe_detuning: float = 38.0, **overrides) -> ExperimentParams:
    """Cold rubidium cloud probed on the D2 line (``N = n = 5e7``, 1 mm^2 beam).

    The probe pulse lasts 0.5 us.
    """
    kw = dict(atoms_n=0.5e8, photons_n=0.5e8, beam_area=1e-6, pulse_duration=0.5e-6,
              probe_detuning=probe_detuning, manifold=rb87_d2())
    kw.update(overrides)
    return ExperimentParams(**kw)


def detunings(params: ExperimentParams) -> np.ndarray:
    """Detuning from each excited level, MHz."""
    return np.array([params.probe_detuning - lv.offset_mhz
                     for lv in params.manifold.excited_levels])


@lru_cache(maxsize=64)
def _cached_table(manifold: TransitionManifold) -> PolarizabilityTable:
    return build_table(manifold)


def _table(params: ExperimentParams) -> PolarizabilityTable:
    return _cached_table(params.manifold)


def _weighted_sum(params: ExperimentParams, attr: str, levels: Optional[slice] = None) -> float:
    tab = _table(params)
    d = detunings(params)
    entries = tab.entries
    if levels is not None:
        entries, d = entries[levels], d[levels]
    gamma = params.manifold.gamma
    return float(sum(getattr(e, attr) * e.sigma * gamma / (params.beam_area * dk)
                     for e, dk in zip(entries, d)))


def kappa_vector(params: ExperimentParams) -> float:
    """Vectorial (Faraday) coupling ``sum alpha_V sigma Gamma / (4 A Delta) * sqrt(N n / 2)``."""
    s = _weighted_sum(params, "alpha_v") / 4
    return s * math.sqrt(params.atoms_n * params.photons_n / 2)


def kappa_tensor(params: ExperimentParams, levels: Optional[slice] = None) -> float:
    """Tensorial (Raman) coupling ``sum alpha_T sigma Gamma / (8 A Delta) * sqrt(N n)``."""
    s = _weighted_sum(params, "alpha_t", levels) / 8
    return s * math.sqrt(params.atoms_n * params.photons_n)


def noise_params(params: ExperimentParams, doubled: bool = False) -> Tuple[float, float, float]:
    """Spontaneous-emission parameters ``(eps_a, eps_p, eps_prime)``.

    Uses the two lowest excited levels as the ``Delta_0``, ``Delta_1`` pair.
    The coupling entering the expressions is the tensorial one restricted
    to that pair unless ``include_upper_in_noise`` is set.
    """
    if len(params.manifold.excited_levels) < 2:
        raise ValueError("noise model needs at least two excited levels")
    N, n = params.atoms_n, params.photons_n
    if N == 0 or n == 0:
        return 0.0, 0.0, 0.0
    d0, d1 = (float(d) for d in detunings(params)[:2])
    levels = None if params.include_upper_in_noise else slice(0, 2)
    kappa = kappa_tensor(params, levels)
    gamma = params.manifold.gamma
    diff = 1 / d1 - 1 / d0
    eps_a = kappa * gamma / 2 * math.sqrt(n / N) * diff
    eps_p = kappa * gamma / 2 * math.sqrt(N / n) * diff
    eps_prime = -kappa * gamma / 4 * (1 / d1 + 1 / d0)
    f = 2.0 if doubled else 1.0
    return f * eps_a, f * eps_p, f * eps_prime


def saturation_parameter(params: ExperimentParams) -> float:
    """Off-resonant saturation ``sum 2 Phi sigma / Gamma_rad / (1 + (2 Delta / Gamma)^2)``.

    ``Phi = n / (T A)`` is the photon flux and ``Gamma_rad`` the linewidth in
    rad/s.  Values above 1e-2 are logged as a warning.
    """
    tab = _table(params)
    flux = params.photons_n / (params.pulse_duration * params.beam_area)
    gamma = params.manifold.gamma
    gamma_rad = 2 * math.pi * gamma * 1e6
    s = sum(2 * flux * e.sigma / gamma_rad / (1 + (2 * d / gamma) ** 2)
            for e, d in zip(tab.entries, detunings(params)))
    if s > SATURATION_WARN:
        log.warning("saturation parameter %.3g exceeds %.0e", s, SATURATION_WARN)
    return float(s)


def coupling_set(params: ExperimentParams, doubled: bool = False) -> CouplingSet:
    """Bundle both couplings, noise parameters and saturation for ``params``."""
    try:
        eps = noise_params(params, doubled=doubled)
    except ValueError:
        eps = (0.0, 0.0, 0.0)
    return CouplingSet(kappa_vector(params), kappa_tensor(params), *eps,
                       saturation=saturation_parameter(params))


@dataclass(frozen=True)
class SweepTable:
    """Columns of a detuning sweep; ``masked`` flags rows within ``Gamma/2`` of a level."""

    delta_mhz: np.ndarray
    delta_norm: np.ndarray
    kappa_v: np.ndarray
    kappa_t: np.ndarray
    eps_a: np.ndarray
    eps_p: np.ndarray
    eps_prime: np.ndarray
    masked: np.ndarray

    def __len__(self):
        return len(self.delta_norm)

    def nearest(self, delta_norm: float) -> int:
        return int(np.argmin(np.abs(self.delta_norm - delta_norm)))


def sweep_detuning(params: ExperimentParams, delta_range: Tuple[float, float], steps: int,
                   normalized: bool = True, doubled: bool = False) -> SweepTable:
    """Evaluate couplings on an evenly spaced detuning grid.

    ``delta_range`` is in units of ``Gamma/2`` when ``normalized`` is true,
    otherwise in MHz.  Masked rows carry NaN in every value column.
    """
    lo, hi = map(float, delta_range)
    if steps < 2 or not hi > lo:
        raise ValueError("sweep needs hi > lo and at least two steps")
    half_g = params.manifold.gamma / 2
    grid = np.linspace(lo, hi, steps)
    delta = grid * half_g if normalized else grid
    offsets = np.array([lv.offset_mhz for lv in params.manifold.excited_levels])
    masked = np.any(np.abs(delta[:, None] - offsets[None, :]) < half_g, axis=1)
    cols = np.full((6, steps), np.nan)
    for i, d in enumerate(delta):
        if masked[i]:
            continue
        p = params.with_detuning(d)
        cols[0, i] = kappa_vector(p)
        cols[1, i] = kappa_tensor(p)
        try:
            cols[2:5, i] = noise_params(p, doubled=doubled)
        except ValueError:
            cols[2:5, i] = 0.0
    return SweepTable(delta_mhz=delta, delta_norm=delta / half_g, kappa_v=cols[0],
                      kappa_t=cols[1], eps_a=cols[2], eps_p=cols[3], eps_prime=cols[4],
                      masked=masked)


Which = Literal["vector", "tensor"]


def _coupling_fn(params: ExperimentParams, which: Which):
    if which == "vector":
        fn = kappa_vector
    elif which == "tensor":
        fn = kappa_tensor
    else:
        raise ValueError(f"which must be 'vector' or 'tensor', not {which!r}")
    return lambda d: fn(params.with_detuning(d))


def find_zero(params: ExperimentParams, which: Which, bracket: Tuple[float, float],
              xtol: float = 1e-9) -> float:
    """Detuning (MHz) inside ``bracket`` where the chosen coupling changes sign."""
    f = _coupling_fn(params, which)
    a, b = map(float, bracket)
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError(f"no sign change of kappa_{which[0]} in [{a}, {b}] MHz")
    return float(bisect(f, a, b, xtol=xtol, maxiter=200))


def find_zeros(params: ExperimentParams, which: Which, lo: float, hi: float,
               samples: int = 4000) -> List[float]:
    """All sign changes of a coupling in ``[lo, hi]`` MHz, skipping poles at level positions."""
    offsets = [lv.offset_mhz for lv in params.manifold.excited_levels]
    edges = sorted({lo, hi, *[o for o in offsets if lo < o < hi]})
    f = _coupling_fn(params, which)
    roots = []
    for a, b in zip(edges, edges[1:]):
        pad = 1e-6 * max(1.0, b - a)
        xs = np.linspace(a + pad, b - pad, samples)
        vals = np.array([f(x) for x in xs])
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            roots.append(find_zero(params, which, (xs[i], xs[i + 1])))
    return roots
