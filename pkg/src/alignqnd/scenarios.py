"""Input-output maps for each probing geometry and their squeezing figures.

Quadrature labels used throughout:

* ``atom.x`` / ``atom.p`` for a single ensemble, ``atom_a.*`` / ``atom_b.*``
  for two oppositely oriented ensembles (``atom_b`` carries sign -1);
* ``light.sx`` / ``light.sy`` for the probe (``light2.*`` for a second pulse);
  the vectorial geometry uses ``light.sy`` / ``light.sz`` instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from .couplings import CouplingSet
from .gaussian import (
    GaussianState,
    LinearChannel,
    ModeLabel,
    apply_channel,
    condition_on_homodyne,
    epr_variance,
    mode_pair,
    vacuum_state,
)

__all__ = [
    "GEOMETRIES",
    "ScenarioConfig",
    "ScenarioResult",
    "build_vectorial",
    "build_tensorial_single",
    "single_pass",
    "build_mixed_single",
    "build_double_pass",
    "compose_double_pass",
    "search_double_pass_compositions",
    "build_double_cell",
    "add_noise",
    "rotate_frame",
    "to_db",
    "run_scenario",
]

Geometry = Literal[
    "vectorial_single_pass",
    "tensorial_single_pass",
    "mixed_single_pass",
    "double_pass",
    "double_cell",
    "double_cell_two_pulse",
]
GEOMETRIES: Tuple[str, ...] = Geometry.__args__  # type: ignore[attr-defined]

ATOM = mode_pair("atom.x", "atom.p")
LIGHT = mode_pair("light.sx", "light.sy")
ATOM_A = mode_pair("atom_a.x", "atom_a.p", 1)
ATOM_B = mode_pair("atom_b.x", "atom_b.p", -1)
LIGHT2 = mode_pair("light2.sx", "light2.sy")
TENSOR_LABELS = ATOM + LIGHT


def build_vectorial(kappa_v: float) -> LinearChannel:
    """Faraday QND map: ``x += k s_z``, ``s_y += k p``; ``p`` and ``s_z`` unchanged."""
    labels = ATOM + mode_pair("light.sy", "light.sz")
    return LinearChannel.from_rules(labels, {
        "atom.x": {"light.sz": kappa_v},
        "light.sy": {"atom.p": kappa_v},
    })


def single_pass(kappa_t: float, kappa_v: float = 0.0, photons_n: float = 1.0,
                atoms_n: float = 1.0, orientation: int = 1, helicity: int = 1,
                atom: Tuple[str, str] = ("atom.x", "atom.p"),
                light: Tuple[str, str] = ("light.sx", "light.sy")) -> Dict[str, Dict[str, float]]:
    """First-order coefficients of one pass as ``{output: {input: coeff}}``.

    ``orientation`` flips the sign of the atomic mean spin and ``helicity``
    the sense of the coupling (set to -1 on a reflected pass).  The default
    ``(+1, +1)`` is the plain single-pass geometry.
    """
    o, h = orientation, helicity
    if kappa_v and (photons_n <= 0 or atoms_n <= 0):
        raise ValueError("photon and atom numbers must be positive")
    e_atom = kappa_v * math.sqrt(2 * photons_n / atoms_n) if kappa_v else 0.0
    e_light = kappa_v * math.sqrt(2 * atoms_n / photons_n) if kappa_v else 0.0
    x, p = atom
    sx, sy = light
    return {
        x: {sy: o * kappa_t, p: -h * e_atom},
        p: {sx: -o * kappa_t, x: h * e_atom},
        sx: {p: h * kappa_t, sy: -o * e_light},
        sy: {x: -h * kappa_t, sx: o * e_light},
    }


def build_tensorial_single(kappa_t: float) -> LinearChannel:
    """Thin-medium tensorial map: ``x += k s_y``, ``p -= k s_x``, ``s_x += k p``, ``s_y -= k x``.

    First order only; it preserves commutators up to ``O(k^2)``.
    """
    return LinearChannel.from_rules(TENSOR_LABELS, single_pass(kappa_t))


def build_mixed_single(kappa_v: float, kappa_t: float, photons_n: float,
                       atoms_n: float) -> LinearChannel:
    """Single pass with both couplings, including light-shift and Faraday terms."""
    if photons_n <= 0 or atoms_n <= 0:
        raise ValueError("photon and atom numbers must be positive")
    return LinearChannel.from_rules(
        TENSOR_LABELS, single_pass(kappa_t, kappa_v, photons_n, atoms_n))


def build_double_pass(kappa_t: float) -> LinearChannel:
    """Net double-pass map: ``x`` conserved, ``p -> -p + 2k s_x``, ``s_y -> s_y - 2k x``.

    The output frame has ``p`` reflected; undoing that reflection leaves a
    symplectic QND map.
    """
    m = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 2 * kappa_t, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [-2 * kappa_t, 0.0, 0.0, 1.0],
    ])
    return LinearChannel(TENSOR_LABELS, m)


# Optics between and after the two passes that reproduce the net map.
HALF_WAVE_PLATE = np.diag([1.0, 1.0, 1.0, -1.0])
FINAL_FRAME = np.diag([1.0, -1.0, 1.0, -1.0])


def compose_double_pass(kappa_t: float, kappa_v: float = 0.0, photons_n: float = 1.0,
                        atoms_n: float = 1.0) -> LinearChannel:
    """Chain two first-order passes into a double pass.

    The return pass is reflected (``helicity = -1``) and preceded by a
    half-wave plate flipping ``s_y``; a final frame change flips ``p`` and
    ``s_y``.  To first order this reproduces :func:`build_double_pass` and
    all ``kappa_v`` terms cancel.
    """
    p1 = LinearChannel.from_rules(
        TENSOR_LABELS, single_pass(kappa_t, kappa_v, photons_n, atoms_n)).matrix
    p2 = LinearChannel.from_rules(
        TENSOR_LABELS, single_pass(kappa_t, kappa_v, photons_n, atoms_n, helicity=-1)).matrix
    return LinearChannel(TENSOR_LABELS, FINAL_FRAME @ p2 @ HALF_WAVE_PLATE @ p1)


def _signed_perms_2x2() -> List[np.ndarray]:
    out = []
    for perm in (np.eye(2), np.eye(2)[::-1]):
        for signs in itertools.product((1.0, -1.0), repeat=2):
            out.append(np.diag(signs) @ perm)
    return out


def search_double_pass_compositions(kappa: float = 1e-4, atol: float = 1e-7) -> List[dict]:
    """Exhaustive search for optics turning two passes into the net double-pass map.

    Tries every signed permutation of the light pair between passes, both
    pass helicities on the return, and every signed permutation of the
    atomic and light pairs afterwards.  Returns the matches to first order.
    """
    target = build_double_pass(kappa).matrix
    p1 = build_tensorial_single(kappa).matrix
    hits = []
    perms = _signed_perms_2x2()
    for helicity in (1, -1):
        p2 = LinearChannel.from_rules(TENSOR_LABELS, single_pass(kappa, helicity=helicity)).matrix
        for w in perms:
            mid = p2 @ block_diag(np.eye(2), w) @ p1
            for da, dl in itertools.product(perms, perms):
                if np.allclose(block_diag(da, dl) @ mid, target, atol=atol, rtol=0):
                    hits.append({"helicity": helicity, "between": w,
                                 "final_atom": da, "final_light": dl})
    return hits


def _double_cell_block(kappa_t: float) -> np.ndarray:
    """Exact collective map on ``(xa, pa, xb, pb, sx, sy)`` for one pulse."""
    k, k2 = kappa_t, kappa_t ** 2 / 2
    m = np.eye(6)
    m[0] += [-k2, 0, -k2, 0, 0, k]
    m[1] += [0, -k2, 0, -k2, -k, 0]
    m[2] += [k2, 0, k2, 0, 0, -k]
    m[3] += [0, k2, 0, k2, k, 0]
    m[4] += [0, k, 0, k, 0, 0]
    m[5] += [-k, 0, -k, 0, 0, 0]
    return m


def _light_shift(theta: float) -> np.ndarray:
    """Rotation of one atomic pair by the vectorial light shift."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def build_double_cell(kappa_t: float, pulses: int = 1, kappa_v: float = 0.0,
                      photons_n: float = 1.0, atoms_n: float = 1.0,
                      compensate_light_shift: bool = True) -> LinearChannel:
    """Probe passing simultaneously through two oppositely oriented ensembles.

    The map is the exact solution of the collective problem, so it is
    symplectic under the signed form at every ``kappa_t``.  With two pulses
    a fresh light pair ``light2.*`` probes the same atoms.  An uncompensated
    ``kappa_v`` adds the light-shift rotation of each atomic pair (the
    Faraday terms cancel between the ensembles).
    """
    if pulses not in (1, 2):
        raise ValueError("pulses must be 1 or 2")
    labels = ATOM_A + ATOM_B + LIGHT + (LIGHT2 if pulses == 2 else ())
    n = len(labels)
    total = np.eye(n)
    theta = 0.0
    if kappa_v and not compensate_light_shift:
        theta = kappa_v * math.sqrt(2 * photons_n / atoms_n)
    m6 = _double_cell_block(kappa_t)
    for k in range(pulses):
        idx = [0, 1, 2, 3, 4 + 2 * k, 5 + 2 * k]
        step = np.eye(n)
        step[np.ix_(idx, idx)] = m6
        if theta:
            rot = np.eye(n)
            rot[:4, :4] = block_diag(_light_shift(theta), _light_shift(theta))
            step = rot @ step
        total = step @ total
    return LinearChannel(labels, total)


def _pairs(labels: Sequence[ModeLabel], prefix: str) -> List[Tuple[int, int]]:
    return [(i, i + 1) for i in range(0, len(labels), 2) if labels[i].name.startswith(prefix)]


def add_noise(channel: LinearChannel, eps_a: float, eps_p: float, eps_prime: float,
              doubled: bool = False) -> LinearChannel:
    """Add spontaneous-emission losses and contamination to a lossless map.

    Diagonal entries of atomic rows are damped by ``sqrt(1 - eps_a)`` and
    light rows by ``sqrt(1 - eps_p)``, with fresh vacuum of weight ``eps``
    on the same quadratures.  Contamination couples each atomic pair to
    each light pair: atoms pick up ``eps'/sqrt(2)`` of the light, light
    picks up ``eps'`` of the atoms.  ``doubled`` doubles all three inputs.
    """
    f = 2.0 if doubled else 1.0
    eps_a, eps_p, eps_prime = f * eps_a, f * eps_p, f * eps_prime
    for name, e in (("eps_a", eps_a), ("eps_p", eps_p)):
        if not 0 <= e < 1:
            raise ValueError(f"{name} = {e} outside [0, 1)")
    labels = channel.labels
    m = channel.matrix.copy()
    noise = channel.noise.copy()
    atoms = _pairs(labels, "atom")
    lights = _pairs(labels, "light")
    injections = []
    for pairs, e in ((atoms, eps_a), (lights, eps_p)):
        for pair in pairs:
            for i in pair:
                d = math.sqrt(1 - e)
                m[i, i] *= d
                noise[i, i] += e
                injections.append((labels[i].name, d, math.sqrt(e)))
    if eps_prime:
        for (ax, ap), (lx, ly) in itertools.product(atoms, lights):
            m[ax, lx] += eps_prime / math.sqrt(2)
            m[ap, ly] += eps_prime / math.sqrt(2)
            m[lx, ax] += eps_prime
            m[ly, ap] += eps_prime
    return LinearChannel(labels, m, noise, channel.noise_injections + tuple(injections))


def _rotation(labels: Sequence[ModeLabel], phase: float, prefix: str) -> np.ndarray:
    c, s = math.cos(phase), math.sin(phase)
    r = np.eye(len(labels))
    for i, j in _pairs(labels, prefix):
        r[np.ix_([i, j], [i, j])] = [[c, s], [-s, c]]
    return r


def rotate_frame(obj: Union[LinearChannel, GaussianState], phase: float,
                 prefix: str = "atom"):
    """Rotate atomic pairs by ``phase``: ``x -> x cos + p sin``, ``p -> p cos - x sin``.

    A state is transformed directly; a channel is conjugated, giving the
    same dynamics expressed in the rotated frame.
    """
    if not isinstance(obj, (GaussianState, LinearChannel)):
        raise TypeError(f"cannot rotate {type(obj).__name__}")
    if not math.isfinite(phase):
        raise ValueError("phase must be finite")
    r = _rotation(obj.labels, phase, prefix)
    if isinstance(obj, GaussianState):
        return GaussianState(obj.labels, r @ obj.mean, r @ obj.cov @ r.T)
    return LinearChannel(obj.labels, r @ obj.matrix @ r.T, r @ obj.noise @ r.T,
                         obj.noise_injections)


def to_db(variance: float, reference: float = 1.0) -> float:
    return 10 * math.log10(variance / reference)


@dataclass(frozen=True)
class ScenarioConfig:
    """Which geometry to evaluate and with which couplings.

    ``larmor_phase`` is the accumulated ``2 Omega t`` of the rotating frame;
    ``photons_n`` and ``atoms_n`` only enter through their ratio.
    """

    geometry: str
    coupling: CouplingSet
    include_noise: bool = False
    larmor_phase: float = 0.0
    compensate_light_shift: bool = True
    photons_n: float = 1.0
    atoms_n: float = 1.0

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}; choose from {GEOMETRIES}")
        if self.include_noise and not self.coupling.noise_valid:
            raise ValueError("noise requested but eps_a/eps_p are not in [0, 1)")


@dataclass(frozen=True)
class ScenarioResult:
    geometry: str
    output_state: GaussianState
    conditional_variances: Dict[str, float]
    squeezing_db: Dict[str, float]
    epr: Optional[float] = None
    extras: Dict[str, float] = field(default_factory=dict)


def _channel_for(cfg: ScenarioConfig) -> LinearChannel:
    c = cfg.coupling
    g = cfg.geometry
    if g == "vectorial_single_pass":
        return build_vectorial(c.kappa_v)
    if g == "tensorial_single_pass":
        return build_tensorial_single(c.kappa_t)
    if g == "mixed_single_pass":
        return build_mixed_single(c.kappa_v, c.kappa_t, cfg.photons_n, cfg.atoms_n)
    if g == "double_pass":
        return build_double_pass(c.kappa_t)
    return build_double_cell(c.kappa_t, 2 if g == "double_cell_two_pulse" else 1, c.kappa_v,
                             cfg.photons_n, cfg.atoms_n, cfg.compensate_light_shift)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Propagate vacuum through the configured geometry and condition on the probe."""
    ch = _channel_for(cfg)
    double = cfg.geometry.startswith("double")
    if cfg.include_noise:
        c = cfg.coupling
        ch = add_noise(ch, c.eps_a, c.eps_p, c.eps_prime, doubled=double)
    if cfg.larmor_phase:
        ch = rotate_frame(ch, cfg.larmor_phase)
    out = apply_channel(vacuum_state(ch.labels), ch)
    cv: Dict[str, float] = {}
    db: Dict[str, float] = {}
    extras: Dict[str, float] = {}
    epr = None
    g = cfg.geometry
    k = cfg.coupling.kappa_t
    if g in ("vectorial_single_pass", "tensorial_single_pass", "mixed_single_pass", "double_pass"):
        cond = condition_on_homodyne(out, "light.sy")
        cv["x|sy"] = cond.variance("atom.x")
        cv["p|sy"] = cond.variance("atom.p")
        if g != "vectorial_single_pass":
            cond_p = condition_on_homodyne(out, "light.sx")
            cv["p|sx"] = cond_p.variance("atom.p")
        if g == "double_pass":
            extras["series_1_minus_4k2"] = 1 - 4 * k ** 2
            extras["series_db"] = to_db(1 - 4 * k ** 2) if 4 * k ** 2 < 1 else float("-inf")
        db = {q: to_db(v) for q, v in cv.items()}
    elif g == "double_cell":
        cond = condition_on_homodyne(out, "light.sy")
        cv["xa+xb|sy"] = cond.combination_variance({"atom_a.x": 1, "atom_b.x": 1})
        cv["pa+pb|sy"] = cond.combination_variance({"atom_a.p": 1, "atom_b.p": 1})
        epr = epr_variance(cond, ("atom_a.x", "atom_a.p"), ("atom_b.x", "atom_b.p"))
        db = {q: to_db(v, 2.0) for q, v in cv.items()}
        db["epr"] = to_db(epr, 4.0)
    else:
        cond = condition_on_homodyne(condition_on_homodyne(out, "light.sy"), "light2.sx")
        cv["xa+xb|sy,sx2"] = cond.combination_variance({"atom_a.x": 1, "atom_b.x": 1})
        cv["pa+pb|sy,sx2"] = cond.combination_variance({"atom_a.p": 1, "atom_b.p": 1})
        epr = epr_variance(cond, ("atom_a.x", "atom_a.p"), ("atom_b.x", "atom_b.p"))
        db = {q: to_db(v, 2.0) for q, v in cv.items()}
        db["epr"] = to_db(epr, 4.0)
    return ScenarioResult(g, out, cv, db, epr, extras)
