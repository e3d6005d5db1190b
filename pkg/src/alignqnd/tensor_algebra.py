"""Angular-momentum algebra: Wigner symbols, spin matrices and irreducible tensors.

Half-integers are carried as doubled integers so that triangle and parity
rules are decided exactly; floating point enters only in the final symbol
values.

Basis ordering for all matrices is ``m = F, F-1, ..., -F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple, Union

import numpy as np

__all__ = [
    "HalfInteger",
    "half",
    "wigner3j",
    "wigner6j",
    "clebsch_gordan",
    "SpinSpace",
    "build_spin_space",
    "commutator_expansion",
    "verify_commutator_identity",
]


@dataclass(frozen=True, order=True)
class HalfInteger:
    """An exact member of {..., -1/2, 0, 1/2, 1, ...}, stored as ``2j``."""

    twice: int

    @property
    def value(self) -> float:
        return self.twice / 2

    @property
    def is_integer(self) -> bool:
        return self.twice % 2 == 0

    def __add__(self, other):
        return HalfInteger(self.twice + half(other).twice)

    __radd__ = __add__

    def __sub__(self, other):
        return HalfInteger(self.twice - half(other).twice)

    def __rsub__(self, other):
        return HalfInteger(half(other).twice - self.twice)

    def __neg__(self):
        return HalfInteger(-self.twice)

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return str(self.twice // 2) if self.is_integer else f"{self.twice}/2"

    def __repr__(self) -> str:
        return f"HalfInteger({self})"


Number = Union[HalfInteger, int, float, Fraction, str]


def half(x: Number) -> HalfInteger:
    """Coerce ``x`` (int, float, Fraction, ``"3/2"`` or HalfInteger) to a HalfInteger."""
    if isinstance(x, HalfInteger):
        return x
    if isinstance(x, str):
        x = Fraction(x.strip())
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not angular momenta")
    twice = 2 * Fraction(x) if not isinstance(x, float) else Fraction(2 * x)
    if twice.denominator != 1:
        raise ValueError(f"{x!r} is not a multiple of 1/2")
    return HalfInteger(int(twice))


@lru_cache(maxsize=None)
def _fact(n: int) -> float:
    return float(math.factorial(n))


def _triangle(a: int, b: int, c: int) -> bool:
    """Triangle rule on doubled values, including integer perimeter."""
    return (
        a >= 0 and b >= 0 and c >= 0
        and abs(a - b) <= c <= a + b
        and (a + b + c) % 2 == 0
    )


def _delta(a: int, b: int, c: int) -> float:
    # doubled arguments; triangle already checked
    return (
        _fact((a + b - c) // 2) * _fact((a - b + c) // 2) * _fact((-a + b + c) // 2)
        / _fact((a + b + c) // 2 + 1)
    )


def _m_ok(j: int, m: int) -> bool:
    return abs(m) <= j and (j - m) % 2 == 0


def wigner3j(j1: Number, j2: Number, j3: Number,
             m1: Number, m2: Number, m3: Number) -> float:
    """Wigner 3-j symbol by the Racah sum; zero for forbidden couplings."""
    j1, j2, j3, m1, m2, m3 = (half(v).twice for v in (j1, j2, j3, m1, m2, m3))
    if m1 + m2 + m3 != 0 or not _triangle(j1, j2, j3):
        return 0.0
    if not (_m_ok(j1, m1) and _m_ok(j2, m2) and _m_ok(j3, m3)):
        return 0.0
    # everything below in ordinary (undoubled) integers
    a = (j1 + j2 - j3) // 2
    b = (j1 - m1) // 2
    c = (j2 + m2) // 2
    d = (j3 - j2 + m1) // 2
    e = (j3 - j1 - m2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    total = 0.0
    for k in range(kmin, kmax + 1):
        term = 1.0 / (_fact(k) * _fact(d + k) * _fact(e + k)
                      * _fact(a - k) * _fact(b - k) * _fact(c - k))
        total += -term if k % 2 else term
    pref = math.sqrt(
        _delta(j1, j2, j3)
        * _fact((j1 + m1) // 2) * _fact((j1 - m1) // 2)
        * _fact((j2 + m2) // 2) * _fact((j2 - m2) // 2)
        * _fact((j3 + m3) // 2) * _fact((j3 - m3) // 2)
    )
    sign = -1.0 if ((j1 - j2 - m3) // 2) % 2 else 1.0
    return sign * pref * total


def wigner6j(j1: Number, j2: Number, j3: Number,
             j4: Number, j5: Number, j6: Number) -> float:
    """Wigner 6-j symbol ``{j1 j2 j3; j4 j5 j6}`` by the Racah sum."""
    j1, j2, j3, j4, j5, j6 = (half(v).twice for v in (j1, j2, j3, j4, j5, j6))
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle(*t) for t in triads):
        return 0.0
    a = [sum(t) // 2 for t in triads]
    b = [(j1 + j2 + j4 + j5) // 2, (j2 + j3 + j5 + j6) // 2, (j3 + j1 + j6 + j4) // 2]
    total = 0.0
    for t in range(max(a), min(b) + 1):
        term = _fact(t + 1) / (
            _fact(t - a[0]) * _fact(t - a[1]) * _fact(t - a[2]) * _fact(t - a[3])
            * _fact(b[0] - t) * _fact(b[1] - t) * _fact(b[2] - t)
        )
        total += -term if t % 2 else term
    pref = math.sqrt(math.prod(_delta(*t) for t in triads))
    return pref * total


def clebsch_gordan(j1: Number, m1: Number, j2: Number, m2: Number,
                   J: Number, M: Number) -> float:
    """Condon-Shortley coefficient ``<j1 m1; j2 m2 | J M>``."""
    j1, m1, j2, m2, J, M = (half(v) for v in (j1, m1, j2, m2, J, M))
    phase = (j1.twice - j2.twice + M.twice) // 2
    if (j1.twice - j2.twice + M.twice) % 2:
        return 0.0
    sign = -1.0 if phase % 2 else 1.0
    return sign * math.sqrt(J.twice + 1) * wigner3j(j1, j2, J, m1, m2, -M)


@dataclass(frozen=True)
class SpinSpace:
    """Matrices of the spin components and irreducible tensors for one ``F``.

    ``tensor_ops[(k, q)]`` follows the phase that gives, for ``F = 1``,
    ``T^1_0 = F_z/sqrt(2)``, ``T^1_{+-1} = +-F_{+-}/2`` and ``T^2_{+-2} = F_{+-}^2/2``.
    """

    f: HalfInteger
    fx: np.ndarray = field(repr=False)
    fy: np.ndarray = field(repr=False)
    fz: np.ndarray = field(repr=False)
    tensor_ops: Dict[Tuple[int, int], np.ndarray] = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.f.twice + 1

    @property
    def m_values(self) -> np.ndarray:
        return (self.f.twice - 2 * np.arange(self.dimension)) / 2

    @property
    def fplus(self) -> np.ndarray:
        return self.fx + 1j * self.fy

    @property
    def fminus(self) -> np.ndarray:
        return self.fx - 1j * self.fy

    def T(self, k: int, q: int) -> np.ndarray:
        try:
            return self.tensor_ops[(k, q)]
        except KeyError:
            raise ValueError(f"no tensor operator T^{k}_{q} for F={self.f}") from None


def build_spin_space(f: Number) -> SpinSpace:
    """Build spin matrices and all ``T^k_q`` (``0 <= k <= 2F``) for spin ``f``."""
    f = half(f)
    if f.twice < 1:
        raise ValueError("tensor operators of rank >= 1 need F >= 1/2")
    dim = f.twice + 1
    m2 = f.twice - 2 * np.arange(dim)  # doubled m values, descending
    F = f.value
    m = m2 / 2
    fz = np.diag(m).astype(complex)
    fp = np.zeros((dim, dim), dtype=complex)
    # F_+ |m> = sqrt(F(F+1) - m(m+1)) |m+1>; |m+1> sits one row above |m>
    for col in range(1, dim):
        fp[col - 1, col] = math.sqrt(F * (F + 1) - m[col] * (m[col] + 1))
    fm = fp.conj().T
    fx = (fp + fm) / 2
    fy = (fp - fm) / 2j

    ops = {}
    for k in range(0, f.twice + 1):
        for q in range(-k, k + 1):
            T = np.zeros((dim, dim), dtype=complex)
            for a in range(dim):
                for b in range(dim):
                    if m2[a] - m2[b] != 2 * q:
                        continue
                    # (-1)^(F - m) with m the row (bra-side) projection
                    sign = -1.0 if ((f.twice - m2[a]) // 2) % 2 else 1.0
                    T[a, b] = sign * clebsch_gordan(
                        f, HalfInteger(int(m2[a])), f, HalfInteger(int(-m2[b])), k, q)
            T.setflags(write=False)
            ops[(k, q)] = T
    for mat in (fx, fy, fz):
        mat.setflags(write=False)
    return SpinSpace(f=f, fx=fx, fy=fy, fz=fz, tensor_ops=ops)


def commutator_expansion(space: SpinSpace, k1: int, q1: int, k2: int, q2: int) -> np.ndarray:
    """Right-hand side of the closed-form ``[T^k1_q1, T^k2_q2]`` expansion.

    Sum over ``K`` of ``(-1)^(K+2F) sqrt((2k1+1)(2k2+1)) {k1 k2 K; F F F}
    <k1 k2 q1 q2 | K Q> (1 - (-1)^(k1+k2+K)) T^K_Q`` with ``Q = q1 + q2``.
    With the phase convention of :class:`SpinSpace` the formula holds
    with no extra sign.
    """
    f = space.f
    Q = q1 + q2
    out = np.zeros((space.dimension, space.dimension), dtype=complex)
    for K in range(abs(k1 - k2), min(k1 + k2, f.twice) + 1):
        if abs(Q) > K or (k1 + k2 + K) % 2 == 0:
            continue
        coeff = (
            (-1) ** (K + f.twice)
            * math.sqrt((2 * k1 + 1) * (2 * k2 + 1))
            * wigner6j(k1, k2, K, f, f, f)
            * clebsch_gordan(k1, q1, k2, q2, K, Q)
            * 2.0
        )
        out += coeff * space.tensor_ops[(K, Q)]
    return out


def verify_commutator_identity(space: SpinSpace, k1: int, q1: int, k2: int, q2: int) -> float:
    """Max-norm gap between the matrix commutator and :func:`commutator_expansion`."""
    if max(k1, k2) > space.f.twice:
        raise ValueError("tensor rank exceeds 2F")
    A = space.T(k1, q1)
    B = space.T(k2, q2)
    direct = A @ B - B @ A
    return float(np.max(np.abs(direct - commutator_expansion(space, k1, q1, k2, q2))))
