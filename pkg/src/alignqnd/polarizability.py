"""Hyperfine polarizabilities and resonant cross-sections.

The vector and tensor polarizabilities are normalized so that the products
``sigma_F' * alpha_F'`` are proportional to the dipole-weighted projector
sums; the alkali sum rule ``sum sigma alpha_T = 0`` then holds for any
complete ``F' = F-1, F, F+1`` multiplet.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .tensor_algebra import HalfInteger, Number, half, wigner6j

__all__ = [
    "ForbiddenTransitionWarning",
    "ExcitedLevel",
    "TransitionManifold",
    "LevelEntry",
    "PolarizabilityTable",
    "alpha_vector",
    "alpha_tensor",
    "sigma_two_level",
    "cross_section",
    "build_table",
    "rb87_d2",
]

log = logging.getLogger(__name__)


class ForbiddenTransitionWarning(UserWarning):
    """Raised (as a warning) when a requested transition has zero strength."""


@dataclass(frozen=True)
class ExcitedLevel:
    f: HalfInteger
    offset_mhz: float

    def __post_init__(self):
        object.__setattr__(self, "f", half(self.f))
        object.__setattr__(self, "offset_mhz", float(self.offset_mhz))


@dataclass(frozen=True)
class TransitionManifold:
    """Ground hyperfine level coupled to a set of excited hyperfine levels.

    Attributes
    ----------
    ground_f, j_ground, j_excited, nuclear_i
        Angular momenta (anything :func:`half` accepts).
    wavelength
        Transition wavelength in metres.
    gamma
        Natural linewidth in MHz; detunings use the same unit.
    excited_levels
        ``(F', offset)`` pairs, offset in MHz from the lowest ``F'``.
    """

    ground_f: HalfInteger
    j_ground: HalfInteger
    j_excited: HalfInteger
    nuclear_i: HalfInteger
    wavelength: float
    gamma: float
    excited_levels: Tuple[ExcitedLevel, ...]

    def __post_init__(self):
        for name in ("ground_f", "j_ground", "j_excited", "nuclear_i"):
            object.__setattr__(self, name, half(getattr(self, name)))
        levels = tuple(
            lv if isinstance(lv, ExcitedLevel) else ExcitedLevel(half(lv[0]), float(lv[1]))
            for lv in self.excited_levels
        )
        object.__setattr__(self, "excited_levels", levels)
        if not levels:
            raise ValueError("manifold needs at least one excited level")
        if self.gamma <= 0 or self.wavelength <= 0:
            raise ValueError("gamma and wavelength must be positive")
        offsets = [lv.offset_mhz for lv in levels]
        if any(b < a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("excited level offsets must be non-decreasing")
        F = self.ground_f.twice
        for lv in levels:
            fp = lv.f.twice
            if abs(fp - F) > 2 or (fp - F) % 2:
                raise ValueError(f"F'={lv.f} is not dipole-coupled to F={self.ground_f}")
            if not abs(self.j_excited.twice - self.nuclear_i.twice) <= fp <= (
                self.j_excited.twice + self.nuclear_i.twice
            ):
                raise ValueError(f"F'={lv.f} cannot be built from J'={self.j_excited}, I={self.nuclear_i}")

    @property
    def f_values(self) -> List[HalfInteger]:
        return [lv.f for lv in self.excited_levels]

    def level(self, f_excited: Number) -> ExcitedLevel:
        fe = half(f_excited)
        for lv in self.excited_levels:
            if lv.f == fe:
                return lv
        raise KeyError(f"no excited level F'={fe}")


def _branch(F: HalfInteger, Fp: HalfInteger) -> int:
    d = Fp.twice - F.twice
    if d not in (-2, 0, 2):
        raise ValueError(f"F'={Fp} must be one of F-1, F, F+1 for F={F}")
    return d // 2


def alpha_vector(F: Number, Fp: Number, J: Number, Jp: Number) -> float:
    """Vector polarizability of the ``F -> F'`` component."""
    F, Fp, J, Jp = half(F), half(Fp), half(J), half(Jp)
    b = _branch(F, Fp)
    f = F.value
    if f == 0:
        raise ValueError("vector polarizability needs F >= 1/2")
    pref = 3 * (Jp.twice + 1) / (2 * (Fp.twice + 1) * (J.twice + 1))
    if b == -1:
        return -pref * (2 * f - 1) / f
    if b == 0:
        return -pref * (2 * f + 1) / (f * (f + 1))
    return pref * (2 * f + 3) / (f + 1)


def alpha_tensor(F: Number, Fp: Number, J: Number, Jp: Number) -> float:
    """Tensor polarizability of the ``F -> F'`` component."""
    F, Fp, J, Jp = half(F), half(Fp), half(J), half(Jp)
    b = _branch(F, Fp)
    f = F.value
    if f == 0:
        raise ValueError("tensor polarizability needs F >= 1/2")
    pref = -3 * (f + 1) * (Jp.twice + 1) / (2 * (Fp.twice + 1) * (J.twice + 1))
    if b == -1:
        return pref / f
    if b == 0:
        return -pref * (2 * f + 1) / (f * (f + 1))
    return pref / (f + 1)


def sigma_two_level(wavelength: float) -> float:
    """Resonant cross-section ``3 lambda^2 / 2 pi`` of a closed two-level line (m^2)."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return 3 * wavelength ** 2 / (2 * math.pi)


def cross_section(F: Number, Fp: Number, J: Number, Jp: Number, I: Number,
                  wavelength: float) -> float:
    """Resonant cross-section ``F -> F'`` for an isotropic ground state, in m^2.

    Forbidden transitions return 0 and emit :class:`ForbiddenTransitionWarning`.
    """
    F, Fp, J, Jp, I = half(F), half(Fp), half(J), half(Jp), half(I)
    s6 = wigner6j(Jp, 1, J, F, I, Fp)
    if s6 == 0.0:
        warnings.warn(f"transition F={F} -> F'={Fp} is forbidden", ForbiddenTransitionWarning,
                      stacklevel=2)
        return 0.0
    return sigma_two_level(wavelength) * 2 * (J.twice + 1) * (Fp.twice + 1) / 3 * s6 ** 2


@dataclass(frozen=True)
class LevelEntry:
    f_excited: HalfInteger
    offset_mhz: float
    alpha_v: float
    alpha_t: float
    sigma: float


@dataclass(frozen=True)
class PolarizabilityTable:
    manifold: TransitionManifold
    entries: Tuple[LevelEntry, ...]
    flags: Tuple[str, ...] = field(default=())

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def sum_rule_residual(self) -> float:
        """``|sum sigma alpha_T|`` relative to ``sum |sigma alpha_T|``."""
        terms = [e.sigma * e.alpha_t for e in self.entries]
        scale = sum(abs(t) for t in terms)
        return abs(sum(terms)) / scale if scale else 0.0

    def sum_rule_holds(self, tol: float = 1e-12) -> bool:
        return self.sum_rule_residual() <= tol


def build_table(manifold: TransitionManifold) -> PolarizabilityTable:
    """Evaluate ``alpha_V``, ``alpha_T`` and ``sigma`` for every excited level."""
    m = manifold
    entries = []
    flags = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ForbiddenTransitionWarning)
        for lv in m.excited_levels:
            sigma = cross_section(m.ground_f, lv.f, m.j_ground, m.j_excited, m.nuclear_i,
                                  m.wavelength)
            entries.append(LevelEntry(
                f_excited=lv.f,
                offset_mhz=lv.offset_mhz,
                alpha_v=alpha_vector(m.ground_f, lv.f, m.j_ground, m.j_excited),
                alpha_t=alpha_tensor(m.ground_f, lv.f, m.j_ground, m.j_excited),
                sigma=sigma,
            ))
    for w in caught:
        flags.append(str(w.message))
        log.warning("%s", w.message)
    table = PolarizabilityTable(manifold=m, entries=tuple(entries), flags=tuple(flags))
    if not table.sum_rule_holds(1e-12):
        flags.append(f"tensor sum rule violated (relative residual {table.sum_rule_residual():.3g})")
        table = PolarizabilityTable(manifold=m, entries=tuple(entries), flags=tuple(flags))
    return table


def rb87_d2(gamma: float = 5.76,
            offsets: Sequence[float] = (0.0, 72.0, 229.0)) -> TransitionManifold:
    """Rubidium-87 D2 line from the ``F = 1`` ground level.

    Default offsets place ``F' = 1`` 72 MHz and ``F' = 2`` 229 MHz above ``F' = 0``.
    """
    if len(offsets) != 3:
        raise ValueError("expected offsets for F' = 0, 1, 2")
    levels = tuple(ExcitedLevel(HalfInteger(2 * k), float(o)) for k, o in enumerate(offsets))
    return TransitionManifold(
        ground_f=HalfInteger(2), j_ground=half("1/2"), j_excited=half("3/2"),
        nuclear_i=half("3/2"), wavelength=780.24e-9, gamma=gamma, excited_levels=levels,
    )
