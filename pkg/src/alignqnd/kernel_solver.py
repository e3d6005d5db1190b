"""Exact thick-medium solutions of the tensorial interaction.

Within one pass a pair of quadratures, an atomic one ``q(z)`` and a light
one ``r(t)``, obeys ``d_t q = g_a r`` and ``d_z r = g_l q`` on the unit
square.  This Goursat problem is solved by the Riemann function
``R(xi) = sum_k (c xi)^k / (k!)^2`` with ``c = g_a g_l``, which is
``J0(2 kappa sqrt(xi))`` for the passive pass (``c < 0``) and
``I0(2 kappa sqrt(xi))`` for the active one.

Collective second moments are obtained by pulling the weight of a
collective output back onto the delta-correlated inputs (the adjoint of
the input-output map) and taking inner products with Gauss-Legendre
quadrature; the kernels are entire, so this converges spectrally.

:func:`pde_oracle` is an independent second-order grid discretization
of the same equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

__all__ = [
    "NumericalError",
    "bessel_j",
    "riemann",
    "riemann_derivative",
    "GoursatPass",
    "KernelSolution",
    "single_pass_kernels",
    "collective_output_variance",
    "double_pass_moments",
    "exact_double_pass_conditional_variance",
    "GridSolution",
    "pde_oracle",
    "grid_double_pass_conditional_variance",
]


class NumericalError(RuntimeError):
    """Quadrature or grid computation failed its own accuracy checks."""


# ---------------------------------------------------------------- Bessel

_SERIES_LIMIT = 8.0


def _bessel_series(order: int, x: float) -> float:
    h = x / 2
    term = h ** order / math.factorial(order)
    total = term
    k = 0
    while abs(term) > 1e-18 * max(abs(total), 1e-300) or k < 3:
        k += 1
        term *= -h * h / (k * (k + order))
        total += term
        if k > 200:
            break
    return total


def _bessel_miller(order: int, x: float) -> float:
    # backward recurrence normalized by J0 + 2 (J2 + J4 + ...) = 1
    start = 2 * ((int(x) + 20 + int(12 * math.sqrt(x))) // 2)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    want = 0.0
    for n in range(start, 0, -1):
        j_prev = 2 * n / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        m = n - 1
        if m == order:
            want = j_cur
        if m % 2 == 0 and m > 0:
            norm += 2 * j_cur
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            want *= 1e-250
    norm += j_cur
    return want / norm


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind ``J0`` or ``J1`` for real ``x``.

    Ascending series for ``|x| <= 8``, normalized Miller recurrence beyond.
    """
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are provided")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("argument must be finite")
    sign = -1.0 if (x < 0 and order == 1) else 1.0
    ax = abs(x)
    if ax == 0.0:
        return 1.0 if order == 0 else 0.0
    val = _bessel_series(order, ax) if ax <= _SERIES_LIMIT else _bessel_miller(order, ax)
    return sign * val


# --------------------------------------------------------------- kernels

_FACT = np.array([math.factorial(k) for k in range(60)], dtype=float)


def _series(c: float, xi, shift: int) -> np.ndarray:
    """``sum_k (c xi)^k / (k! (k + shift)!)`` evaluated on arrays."""
    u = c * np.asarray(xi, dtype=float)
    out = np.zeros_like(u)
    term = np.ones_like(u) / _FACT[shift]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, 200):
            out += term
            term = term * u / (k * (k + shift))
            if not np.all(np.isfinite(out)):
                break
            if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(out), 1e-300)):
                out += term
                return out
    raise NumericalError("Riemann series did not converge; coupling too large")


def riemann(c: float, xi) -> np.ndarray:
    """Riemann function ``R(xi)`` of the pass with coupling product ``c``."""
    return _series(c, xi, 0)


def riemann_derivative(c: float, xi) -> np.ndarray:
    """``dR/dxi``."""
    return c * _series(c, xi, 1)


WeightFn = Callable[[np.ndarray], np.ndarray]


def _gl(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def zero_fn(s):
    return np.zeros_like(np.asarray(s, dtype=float))


def one_fn(s):
    return np.ones_like(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class GoursatPass:
    """One pass of light through the medium for a single quadrature pair."""

    g_atom: float
    g_light: float
    nodes: int = 40

    @property
    def c(self) -> float:
        return self.g_atom * self.g_light

    def pullback(self, w: WeightFn, v: WeightFn) -> Tuple[WeightFn, WeightFn]:
        """Input weights of the output combination ``int w q_out dz + int v r_out dt``."""
        xg, wg = _gl(self.nodes)
        c, ga, gl = self.c, self.g_atom, self.g_light

        def w_in(zp):
            zp = np.asarray(zp, dtype=float)[..., None]
            span = 1 - zp
            z = zp + span * xg
            vol = (w(z) * riemann_derivative(c, z - zp) * span * wg).sum(-1)
            cross = (v(xg) * riemann(c, span * xg) * wg).sum(-1)
            return w(zp[..., 0]) + vol + gl * cross

        def v_in(tp):
            tp = np.asarray(tp, dtype=float)[..., None]
            span = 1 - tp
            t = tp + span * xg
            vol = (v(t) * riemann_derivative(c, t - tp) * span * wg).sum(-1)
            cross = (w(xg) * riemann(c, xg * span) * wg).sum(-1)
            return v(tp[..., 0]) + vol + ga * cross

        return w_in, v_in


def _inner(a: WeightFn, b: WeightFn, nodes: int) -> float:
    xg, wg = _gl(nodes)
    return float((a(xg) * b(xg) * wg).sum())


@dataclass(frozen=True)
class KernelSolution:
    """Collapsed single-pass kernels (passive pass) as functions on ``[0, 1]``.

    ``atom_kernel(z')`` is the weight of ``x_in(z')`` in the collective
    ``x_out`` and ``field_kernel(t)`` the weight of ``s_y,in(t)``; the
    ``p``/``s_x`` pair has the same kernels with the field sign reversed,
    and the field outputs follow by exchanging ``z`` and ``t``.
    """

    kappa_t: float
    atom_kernel: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    field_kernel: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    @property
    def c_self(self) -> float:
        """Overlap of collective ``x_out`` with collective ``x_in``: ``J1(2k)/k``."""
        k = self.kappa_t
        return 1.0 if k == 0 else bessel_j(1, 2 * k) / k

    @property
    def c_cross(self) -> float:
        """Overlap of collective ``x_out`` with collective ``s_y,in``: ``(1 - J0(2k))/k``."""
        k = self.kappa_t
        return 0.0 if k == 0 else (1 - bessel_j(0, 2 * k)) / k


def single_pass_kernels(kappa_t: float) -> KernelSolution:
    c = -kappa_t ** 2

    def atom_kernel(z):
        return riemann(c, 1 - np.asarray(z, dtype=float))

    def field_kernel(t):
        s = 1 - np.asarray(t, dtype=float)
        # kappa * int_0^1 R(z s) dz, integrated term by term
        return kappa_t * _series(c, s, 1)

    return KernelSolution(kappa_t, atom_kernel, field_kernel)


def _pair_moments(pass_: GoursatPass, nodes: int) -> Dict[str, float]:
    qa, qb = pass_.pullback(one_fn, zero_fn)
    ra, rb = pass_.pullback(zero_fn, one_fn)
    ip = lambda f, g: _inner(f, g, nodes)  # noqa: E731
    return {
        "var_q": ip(qa, qa) + ip(qb, qb),
        "var_r": ip(ra, ra) + ip(rb, rb),
        "cov_qr": ip(qa, ra) + ip(qb, rb),
        "q_on_q": ip(qa, one_fn),
        "q_on_r": ip(qb, one_fn),
        "r_on_q": ip(ra, one_fn),
        "r_on_r": ip(rb, one_fn),
        "_weights": (qa, qb, ra, rb),
    }


def collective_output_variance(kappa_t: float, nodes: int = 40,
                               tol: float = 1e-11) -> Dict[str, float]:
    """Second moments of the collective single-pass outputs from vacuum inputs.

    Keys: ``var_x``, ``var_p``, ``var_sx``, ``var_sy``, ``cov_x_sy``,
    ``cov_p_sx``, the input-output overlaps ``x_on_x``, ``x_on_sy``,
    ``sy_on_x``, ``p_on_p``, ``p_on_sx``, ``sx_on_p`` and ``comm_xp``, the
    collective ``[x_out, p_out]`` in units of ``2i`` (1 when preserved).
    The calculation is repeated with more nodes and must agree to ``tol``.
    """
    if not math.isfinite(kappa_t):
        raise ValueError("kappa_t must be finite")

    def run(n):
        xp = _pair_moments(GoursatPass(kappa_t, -kappa_t, n), n)
        pp = _pair_moments(GoursatPass(-kappa_t, kappa_t, n), n)
        qa_x, qb_x = xp["_weights"][:2]
        qa_p, qb_p = pp["_weights"][:2]
        # [x_out, p_out] = 2i (<w_x, w_p> - <v_x(sy), v_p(sx)>) since [sy, sx] = -2i
        comm = _inner(qa_x, qa_p, n) - _inner(qb_x, qb_p, n)
        return {
            "var_x": xp["var_q"], "var_sy": xp["var_r"], "cov_x_sy": xp["cov_qr"],
            "var_p": pp["var_q"], "var_sx": pp["var_r"], "cov_p_sx": pp["cov_qr"],
            "x_on_x": xp["q_on_q"], "x_on_sy": xp["q_on_r"], "sy_on_x": xp["r_on_q"],
            "sy_on_sy": xp["r_on_r"],
            "p_on_p": pp["q_on_q"], "p_on_sx": pp["q_on_r"], "sx_on_p": pp["r_on_q"],
            "sx_on_sx": pp["r_on_r"],
            "comm_xp": comm,
        }

    coarse, fine = run(nodes), run(nodes + 20)
    gap = max(abs(coarse[k] - fine[k]) for k in fine)
    if gap > tol:
        raise NumericalError(f"quadrature not converged (refinement changed moments by {gap:.2e})")
    return fine


def double_pass_moments(kappa_t: float, nodes: int = 40) -> Dict[str, float]:
    """Collective moments after the double pass, from exact kernels.

    The return pass runs through the atoms in reverse (``u = 1 - z``) with
    reversed helicity, which makes it the active (``I0``-type) pass; a
    half-wave plate flips ``s_y`` between passes.  Returned keys: ``var_x``,
    ``var_sy``, ``cov_x_sy``, ``var_p``, ``var_sx``, ``cov_p_sx`` and the
    conditional variances ``x|sy`` and ``p|sx``.
    """
    k = kappa_t
    out = {}
    for q, r, first, second, flip in (
        ("x", "sy", (k, -k), (k, k), -1.0),
        ("p", "sx", (-k, k), (-k, -k), 1.0),
    ):
        p1 = GoursatPass(*first, nodes)
        p2 = GoursatPass(*second, nodes)

        def through(w2, v2, p1=p1, p2=p2, flip=flip):
            a2, l2 = p2.pullback(w2, v2)
            w1 = lambda z: a2(1 - np.asarray(z, dtype=float))  # noqa: E731
            v1 = lambda t: flip * l2(t)  # noqa: E731
            return p1.pullback(w1, v1)

        Q = through(one_fn, zero_fn)
        R = through(zero_fn, one_fn)
        ip = lambda f, g: _inner(f, g, nodes)  # noqa: E731
        vq = ip(Q[0], Q[0]) + ip(Q[1], Q[1])
        vr = ip(R[0], R[0]) + ip(R[1], R[1])
        cqr = ip(Q[0], R[0]) + ip(Q[1], R[1])
        out[f"var_{q}"], out[f"var_{r}"], out[f"cov_{q}_{r}"] = vq, vr, cqr
        out[f"{q}|{r}"] = vq - cqr ** 2 / vr
    return out


def exact_double_pass_conditional_variance(kappa_t: float, nodes: int = 40) -> float:
    """``Var(x | s_y)`` after the double pass, with all orders in ``kappa_t``."""
    if not 0 <= abs(kappa_t) <= 0.6:
        raise ValueError("exact double-pass variance is validated for |kappa_t| <= 0.6")
    if kappa_t == 0:
        return 1.0
    return double_pass_moments(kappa_t, nodes)["x|sy"]


# ------------------------------------------------------------ grid oracle

MAX_CELL_COUPLING = 0.25


def _cell(g: float, active: bool) -> Tuple[float, float]:
    # Cayley (trapezoidal) update of one z-t cell, second order in g
    h = g * g / 4
    if active:
        if h >= 1:
            raise NumericalError("cell coupling too large for the active update")
        return (1 + h) / (1 - h), g / (1 - h)
    return (1 - h) / (1 + h), g / (1 + h)


def _grid_pullback(wa: np.ndarray, wl: np.ndarray, g_atom: float, g_light: float
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """Adjoint sweep of one pass on an ``nz x nt`` grid of discrete modes."""
    nz, nt = len(wa), len(wl)
    kappa = math.sqrt(abs(g_atom * g_light))
    g = kappa / math.sqrt(nz * nt)
    if g > MAX_CELL_COUPLING:
        raise NumericalError(f"cell coupling {g:.3g} exceeds {MAX_CELL_COUPLING}; refine the grid")
    c, s = _cell(g, g_atom * g_light > 0)
    sa = s if g_atom >= 0 else -s
    sl = s if g_light >= 0 else -s
    a = np.array(wa, dtype=float)
    b = np.array(wl, dtype=float)
    # forward cell: a' = c a + sa b, b' = c b + sl a; sweep anti-diagonals backwards
    for d in range(nz + nt - 2, -1, -1):
        i = np.arange(max(0, d - nt + 1), min(nz, d + 1))
        j = d - i
        A, B = a[i], b[j]
        a[i] = c * A + sl * B
        b[j] = sa * A + c * B
    return a, b


@dataclass(frozen=True)
class GridSolution:
    """Collective moments from the grid discretization.

    ``atom_weights[name]`` / ``light_weights[name]`` hold the input weights
    (per grid cell) of the collective output ``name``.
    """

    nz: int
    nt: int
    kappa_t: float
    moments: Dict[str, float]
    atom_weights: Dict[str, np.ndarray] = field(repr=False)
    light_weights: Dict[str, np.ndarray] = field(repr=False)


def _check_grid(nz: int, nt: int):
    if nz < 64 or nt < 64:
        raise ValueError("grid too coarse: nz and nt must be at least 64")


def pde_oracle(kappa_t: float, nz: int = 512, nt: int = 512) -> GridSolution:
    """Single-pass collective moments by direct discretization of the local equations."""
    _check_grid(nz, nt)
    k = kappa_t
    ones_z, zeros_z = np.ones(nz) / math.sqrt(nz), np.zeros(nz)
    ones_t, zeros_t = np.ones(nt) / math.sqrt(nt), np.zeros(nt)
    aw, lw, mom = {}, {}, {}
    for q, r, ga, gl in (("x", "sy", k, -k), ("p", "sx", -k, k)):
        aw[q], lw[q] = _grid_pullback(ones_z, zeros_t, ga, gl)
        aw[r], lw[r] = _grid_pullback(zeros_z, ones_t, ga, gl)
        mom[f"var_{q}"] = float(aw[q] @ aw[q] + lw[q] @ lw[q])
        mom[f"var_{r}"] = float(aw[r] @ aw[r] + lw[r] @ lw[r])
        mom[f"cov_{q}_{r}"] = float(aw[q] @ aw[r] + lw[q] @ lw[r])
        mom[f"{q}_on_{q}"] = float(aw[q] @ ones_z)
        mom[f"{q}_on_{r}"] = float(lw[q] @ ones_t)
        mom[f"{r}_on_{q}"] = float(aw[r] @ ones_z)
        mom[f"{r}_on_{r}"] = float(lw[r] @ ones_t)
    mom["comm_xp"] = float(aw["x"] @ aw["p"] - lw["x"] @ lw["p"])
    return GridSolution(nz, nt, k, mom, aw, lw)


def grid_double_pass_conditional_variance(kappa_t: float, nz: int = 512, nt: int = 512) -> float:
    """Grid counterpart of :func:`exact_double_pass_conditional_variance`."""
    _check_grid(nz, nt)
    k = kappa_t

    def through(wa2, wl2):
        a2, b2 = _grid_pullback(wa2, wl2, k, k)
        return _grid_pullback(a2[::-1], -b2, k, -k)

    X = through(np.ones(nz) / math.sqrt(nz), np.zeros(nt))
    Y = through(np.zeros(nz), np.ones(nt) / math.sqrt(nt))
    v = lambda P, Q: float(P[0] @ Q[0] + P[1] @ Q[1])  # noqa: E731
    return v(X, X) - v(X, Y) ** 2 / v(Y, Y)
