import logging
import math

import numpy as np
import pytest

from alignqnd.couplings import (
    ExperimentParams,
    coupling_set,
    default_params,
    find_zero,
    find_zeros,
    kappa_tensor,
    kappa_vector,
    noise_params,
    saturation_parameter,
    sweep_detuning,
)
from alignqnd.polarizability import ExcitedLevel, TransitionManifold, build_table, rb87_d2


@pytest.fixture
def params():
    return default_params()


def test_operating_point_values(params):
    # regression values from this implementation at 38 MHz, see notes ledger
    c = coupling_set(params)
    assert c.kappa_t == pytest.approx(-0.430921204, rel=1e-8)
    assert c.kappa_v == pytest.approx(0.0192597165, rel=1e-8)
    assert c.eps_a == pytest.approx(0.0706263262, rel=1e-8)
    assert c.noise_valid


def test_kappa_from_table_by_hand(params):
    tab = build_table(params.manifold)
    d = np.array([38.0, 38.0 - 72.0, 38.0 - 229.0])
    g, A, N, n = 5.76, 1e-6, 0.5e8, 0.5e8
    kv = sum(e.alpha_v * e.sigma * g / (4 * A * dk) for e, dk in zip(tab, d)) * math.sqrt(N * n / 2)
    kt = sum(e.alpha_t * e.sigma * g / (8 * A * dk) for e, dk in zip(tab, d)) * math.sqrt(N * n)
    assert kappa_vector(params) == pytest.approx(kv, rel=1e-14)
    assert kappa_tensor(params) == pytest.approx(kt, rel=1e-14)


@pytest.mark.parametrize("scale", [0.25, 4.0, 9.0])
def test_couplings_scale_as_sqrt_nN(params, scale):
    p = default_params(atoms_n=params.atoms_n * scale)
    assert kappa_vector(p) / kappa_vector(params) == pytest.approx(math.sqrt(scale), rel=1e-13)
    assert kappa_tensor(p) / kappa_tensor(params) == pytest.approx(math.sqrt(scale), rel=1e-13)


def test_zero_photons_gives_zero_couplings():
    p = default_params(photons_n=0.0)
    assert kappa_vector(p) == 0.0 and kappa_tensor(p) == 0.0
    assert noise_params(p) == (0.0, 0.0, 0.0)


def test_eps_ratio_is_photon_atom_ratio():
    p = default_params(atoms_n=2e8, photons_n=5e7)
    ea, ep, _ = noise_params(p)
    assert ea / ep == pytest.approx(p.photons_n / p.atoms_n, rel=1e-13)


def test_doubled_noise(params):
    single, double = coupling_set(params), coupling_set(params, doubled=True)
    assert double.eps_a == pytest.approx(2 * single.eps_a)
    assert double.eps_prime == pytest.approx(2 * single.eps_prime)
    assert single.doubled() == double
    assert double.eps_a == pytest.approx(0.14, rel=0.2)


def test_degenerate_pair_has_no_differential_noise():
    m = TransitionManifold("1", "1/2", "3/2", "3/2", 780.24e-9, 5.76,
                           (ExcitedLevel(0, 0.0), ExcitedLevel(1, 0.0), ExcitedLevel(2, 229.0)))
    p = default_params(manifold=m)
    ea, ep, eprime = noise_params(p)
    assert ea == 0.0 and ep == 0.0
    assert eprime != 0.0


def test_noise_needs_two_levels():
    m = TransitionManifold("1", "1/2", "3/2", "3/2", 780.24e-9, 5.76, (ExcitedLevel(1, 0.0),))
    with pytest.raises(ValueError):
        noise_params(default_params(manifold=m))


def test_exact_resonance_rejected():
    with pytest.raises(ValueError, match="resonant"):
        default_params(72.0)


def test_far_detuned_limit_is_vectorial():
    ratios = [abs(kappa_tensor(default_params(d)) / kappa_vector(default_params(d)))
              for d in (2e4, 2e5, 2e6)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 1e-3


def test_find_zero_is_fixed_point(params):
    z = find_zero(params, "vector", (30.0, 40.0))
    assert abs(kappa_vector(params.with_detuning(z))) < 1e-8
    assert find_zero(params, "vector", (z - 1, z + 1)) == pytest.approx(z, abs=1e-8)
    with pytest.raises(ValueError, match="no sign change"):
        find_zero(params, "vector", (40.0, 50.0))
    with pytest.raises(ValueError):
        find_zero(params, "scalar", (30.0, 40.0))


def test_toy_symmetric_manifold_zero_at_midpoint():
    # two identical F'=2 levels: the vectorial coupling vanishes halfway between them
    m = TransitionManifold("1", "1/2", "3/2", "3/2", 780.24e-9, 5.76,
                           (ExcitedLevel(2, 0.0), ExcitedLevel(2, 100.0)))
    p = default_params(probe_detuning=10.0, manifold=m)
    assert find_zeros(p, "vector", 1.0, 99.0) == [pytest.approx(50.0, abs=1e-7)]
    assert find_zeros(p, "tensor", 1.0, 99.0) == [pytest.approx(50.0, abs=1e-7)]


def test_rb87_zero_crossings(params):
    # regression values of this model; the quoted crossings differ, see xfails below
    assert find_zeros(params, "vector", 1.0, 600.0) == pytest.approx([35.7250455, 461.5249545],
                                                                     abs=1e-6)
    assert find_zeros(params, "tensor", 1.0, 600.0) == pytest.approx([503.4503817], abs=1e-6)


@pytest.mark.xfail(strict=True, reason="level data place the vectorial zero at 35.7 MHz")
def test_quoted_vectorial_zero_within_5_percent(params):
    z = find_zeros(params, "vector", 1.0, 72.0)[0]
    assert abs(z - 38.0) / 38.0 < 0.05 and abs(z / 2.88 - 13.2) / 13.2 < 0.05


@pytest.mark.xfail(strict=True, reason="no tensorial zero below 503 MHz in this model")
def test_quoted_tensorial_zero_near_222(params):
    zs = find_zeros(params, "tensor", 100.0, 300.0)
    assert zs and abs(zs[0] - 222.0) / 222.0 < 0.05


@pytest.mark.xfail(strict=True, reason="kappa_V at 222 MHz evaluates to -0.94")
def test_quoted_vectorial_coupling_at_222(params):
    assert kappa_vector(params.with_detuning(222.0)) == pytest.approx(0.03, rel=0.2)


def test_saturation_small_at_operating_point(params, caplog):
    with caplog.at_level(logging.WARNING):
        s = saturation_parameter(params)
    assert 0 < s < 1e-2
    assert not caplog.records
    close = default_params(probe_detuning=1.0, pulse_duration=0.05e-6)
    with caplog.at_level(logging.WARNING):
        assert saturation_parameter(close) > 1e-2
    assert any("saturation" in r.message for r in caplog.records)


def test_sweep_masks_and_is_deterministic(params):
    a = sweep_detuning(params, (5, 100), 500)
    b = sweep_detuning(params, (5, 100), 500)
    for name in ("kappa_v", "kappa_t", "eps_a", "eps_p", "eps_prime"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert len(a) == 500
    offs = np.array([0.0, 72.0, 229.0])
    near = np.min(np.abs(a.delta_mhz[:, None] - offs), axis=1) < 5.76 / 2
    np.testing.assert_array_equal(a.masked, near)
    assert np.all(np.isnan(a.kappa_v[a.masked]))
    assert np.all(np.isfinite(a.kappa_v[~a.masked]))
    row = a.nearest(13.2)
    assert a.delta_mhz[row] == pytest.approx(13.2 * 2.88, abs=0.3)


def test_sweep_mhz_units(params):
    t = sweep_detuning(params, (30.0, 40.0), 11, normalized=False)
    np.testing.assert_allclose(t.delta_mhz, np.linspace(30, 40, 11))
    assert t.kappa_v[8] == pytest.approx(kappa_vector(params), rel=1e-14)
    with pytest.raises(ValueError):
        sweep_detuning(params, (40.0, 30.0), 11)


def test_sweep_kappa_v_minimum_location(params):
    t = sweep_detuning(params, (5, 100), 500)
    assert t.delta_norm[np.nanargmin(np.abs(t.kappa_v))] == pytest.approx(12.42, abs=0.1)


@pytest.mark.xfail(strict=True, reason="kappa_V minimum sits at 12.42, kappa_T has no zero in range")
def test_sweep_quoted_minima(params):
    t = sweep_detuning(params, (5, 100), 500)
    assert np.nanargmin(np.abs(t.kappa_v)) == t.nearest(13.2)
    assert np.nanargmin(np.abs(t.kappa_t)) == t.nearest(77.0)


def test_params_validation():
    with pytest.raises(ValueError):
        ExperimentParams(-1, 1, 1e-6, 1e-6, 38.0, rb87_d2())
    with pytest.raises(ValueError):
        ExperimentParams(1, 1, 0.0, 1e-6, 38.0, rb87_d2())
