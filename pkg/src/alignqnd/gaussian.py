"""Gaussian states over labelled quadratures.

Conventions: vacuum variance 1 and ``[x, p] = 2i``, so each mode contributes
a symplectic block ``sign * [[0, 2], [-2, 0]]``.  Quadrature labels come in
consecutive ``(x, p)`` pairs and both members of a pair carry the same sign.
A negative sign marks an oppositely oriented ensemble; it only matters for
:func:`signed_form` and the checks built on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "ModeLabel",
    "GaussianState",
    "LinearChannel",
    "mode_pair",
    "signed_form",
    "vacuum_state",
    "apply_channel",
    "condition_on_homodyne",
    "epr_variance",
    "check_symplectic",
    "is_physical",
]


@dataclass(frozen=True)
class ModeLabel:
    name: str
    symplectic_sign: int = 1

    def __post_init__(self):
        if self.symplectic_sign not in (1, -1):
            raise ValueError("symplectic_sign must be +1 or -1")


def mode_pair(x: str, p: str, sign: int = 1) -> Tuple[ModeLabel, ModeLabel]:
    return ModeLabel(x, sign), ModeLabel(p, sign)


def _check_labels(labels: Sequence[ModeLabel]) -> Tuple[ModeLabel, ...]:
    labels = tuple(labels)
    names = [lb.name for lb in labels]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate labels in {names}")
    if len(labels) % 2:
        raise ValueError("quadratures must come in (x, p) pairs")
    for a, b in zip(labels[::2], labels[1::2]):
        if a.symplectic_sign != b.symplectic_sign:
            raise ValueError(f"pair ({a.name}, {b.name}) has mixed signs")
    return labels


def signed_form(labels: Sequence[ModeLabel]) -> np.ndarray:
    """Block-diagonal ``Omega`` with blocks ``sign * [[0, 2], [-2, 0]]``."""
    labels = _check_labels(labels)
    n = len(labels)
    omega = np.zeros((n, n))
    for i in range(0, n, 2):
        s = labels[i].symplectic_sign
        omega[i, i + 1] = 2 * s
        omega[i + 1, i] = -2 * s
    return omega


@dataclass(frozen=True)
class GaussianState:
    labels: Tuple[ModeLabel, ...]
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        labels = _check_labels(self.labels)
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        n = len(labels)
        if mean.shape != (n,) or cov.shape != (n, n):
            raise ValueError("mean/cov shape does not match labels")
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
            raise ValueError("covariance must be symmetric")
        cov = (cov + cov.T) / 2
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(lb.name for lb in self.labels)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no quadrature {name!r} in state") from None

    def variance(self, name: str) -> float:
        i = self.index(name)
        return float(self.cov[i, i])

    def covariance(self, a: str, b: str) -> float:
        return float(self.cov[self.index(a), self.index(b)])

    def combination_variance(self, weights: Mapping[str, float]) -> float:
        """Variance of ``sum_k w_k q_k``."""
        w = np.zeros(len(self.labels))
        for name, c in weights.items():
            w[self.index(name)] += c
        return float(w @ self.cov @ w)


def vacuum_state(labels: Sequence[ModeLabel], mean: Optional[Sequence[float]] = None) -> GaussianState:
    """Coherent state (identity covariance); vacuum when ``mean`` is omitted."""
    labels = _check_labels(labels)
    n = len(labels)
    return GaussianState(labels, np.zeros(n) if mean is None else mean, np.eye(n))


@dataclass(frozen=True)
class LinearChannel:
    """Affine Gaussian channel ``cov -> M cov M^T + noise`` on named quadratures.

    ``noise_injections`` records ``(target, damping, weight)`` triples for
    provenance; their effect is already folded into ``matrix`` and ``noise``.
    """

    labels: Tuple[ModeLabel, ...]
    matrix: np.ndarray
    noise: Optional[np.ndarray] = None
    noise_injections: Tuple[Tuple[str, float, float], ...] = field(default=())

    def __post_init__(self):
        labels = _check_labels(self.labels)
        n = len(labels)
        m = np.array(self.matrix, dtype=float)
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match {n} labels")
        noise = np.zeros((n, n)) if self.noise is None else np.array(self.noise, dtype=float)
        if noise.shape != (n, n):
            raise ValueError("noise covariance shape mismatch")
        m.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "noise", noise)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(lb.name for lb in self.labels)

    @property
    def is_noiseless(self) -> bool:
        return not np.any(self.noise)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def then(self, other: "LinearChannel") -> "LinearChannel":
        """Channel applying ``self`` first and ``other`` second (same labels)."""
        if other.names != self.names:
            raise ValueError("cannot compose channels on different labels")
        M2 = other.matrix
        return LinearChannel(
            self.labels, M2 @ self.matrix, M2 @ self.noise @ M2.T + other.noise,
            self.noise_injections + other.noise_injections,
        )

    def with_injection(self, target: str, eps: float) -> "LinearChannel":
        """Append a loss of strength ``eps`` on ``target`` after the current map."""
        if not 0 <= eps < 1:
            raise ValueError(f"loss eps must lie in [0, 1), got {eps}")
        i = self.index(target)
        d = np.ones(len(self.labels))
        d[i] = np.sqrt(1 - eps)
        D = np.diag(d)
        added = np.zeros_like(self.noise)
        added[i, i] = eps
        return LinearChannel(
            self.labels, D @ self.matrix, D @ self.noise @ D + added,
            self.noise_injections + ((target, float(d[i]), float(np.sqrt(eps))),),
        )

    @classmethod
    def identity(cls, labels: Sequence[ModeLabel]) -> "LinearChannel":
        labels = tuple(labels)
        return cls(labels, np.eye(len(labels)))

    @classmethod
    def from_rules(cls, labels: Sequence[ModeLabel],
                   rules: Mapping[str, Mapping[str, float]]) -> "LinearChannel":
        """Identity map plus ``rules[out][inp]`` added coefficients."""
        ch = cls.identity(labels)
        m = ch.matrix.copy()
        for out, row in rules.items():
            i = ch.index(out)
            for inp, c in row.items():
                m[i, ch.index(inp)] += c
        return cls(ch.labels, m)


def _embed(state: GaussianState, channel: LinearChannel) -> Tuple[np.ndarray, np.ndarray]:
    n = len(state.labels)
    try:
        idx = [state.index(nm) for nm in channel.names]
    except KeyError as exc:
        raise ValueError(f"channel acts on a quadrature missing from the state: {exc}") from None
    for nm, lb in zip(channel.names, channel.labels):
        if state.labels[state.index(nm)] != lb:
            raise ValueError(f"symplectic sign of {nm} differs between state and channel")
    M = np.eye(n)
    N = np.zeros((n, n))
    M[np.ix_(idx, idx)] = channel.matrix
    N[np.ix_(idx, idx)] = channel.noise
    return M, N


def apply_channel(state: GaussianState, channel: LinearChannel) -> GaussianState:
    """Propagate ``state`` through ``channel``; untouched quadratures pass unchanged."""
    M, N = _embed(state, channel)
    return GaussianState(state.labels, M @ state.mean, M @ state.cov @ M.T + N)


def condition_on_homodyne(state: GaussianState, measured: str,
                          outcome: float = 0.0) -> GaussianState:
    """Condition on a homodyne result for ``measured`` and drop its mode.

    The covariance update is the Schur complement ``cov - c c^T / v``;
    the mean shifts by ``c (outcome - <q>) / v``.
    """
    k = state.index(measured)
    v = state.cov[k, k]
    if not v > 0:
        raise ValueError(f"cannot condition on {measured!r}: variance {v} is not positive")
    c = state.cov[:, k]
    cov = state.cov - np.outer(c, c) / v
    mean = state.mean + c * (outcome - state.mean[k]) / v
    pair = {k, k ^ 1}  # partner quadrature of the measured mode
    keep = [i for i in range(len(state.labels)) if i not in pair]
    return GaussianState(tuple(state.labels[i] for i in keep), mean[keep], cov[np.ix_(keep, keep)])


def epr_variance(state: GaussianState, pair_a: Tuple[str, str], pair_b: Tuple[str, str]) -> float:
    """``Var(x_a + x_b) + Var(p_a + p_b)``; below 4 witnesses entanglement."""
    (xa, pa), (xb, pb) = pair_a, pair_b
    return (state.combination_variance({xa: 1, xb: 1})
            + state.combination_variance({pa: 1, pb: 1}))


def check_symplectic(channel: LinearChannel, omega: Optional[np.ndarray] = None) -> float:
    """Max-norm of ``M Omega M^T - Omega``; zero for commutator-preserving maps."""
    if omega is None:
        omega = signed_form(channel.labels)
    M = channel.matrix
    if M.shape != omega.shape:
        raise ValueError("form and channel dimensions differ")
    return float(np.max(np.abs(M @ omega @ M.T - omega)))


def is_physical(state: GaussianState, tol: float = 1e-10) -> bool:
    """Uncertainty principle ``cov + i Omega / 2 >= 0`` up to ``tol``."""
    h = state.cov + 0.5j * signed_form(state.labels)
    return bool(np.linalg.eigvalsh(h).min() >= -tol)


def relabel(labels: Iterable[ModeLabel], mapping: Dict[str, str]) -> Tuple[ModeLabel, ...]:
    return tuple(ModeLabel(mapping.get(lb.name, lb.name), lb.symplectic_sign) for lb in labels)
