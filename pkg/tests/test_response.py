import numpy as np
import pytest

from optomag.errors import ConfigurationError
from optomag.lattice import (
    SiteKind,
    apply_gauge_transform,
    build_ab_ring,
    build_conversion_lattice,
    build_modulated_link_lattice,
    build_synthetic_ladder,
    landau_laser_phases,
)
from optomag.response import (
    ConversionModel,
    ab_flux_scan,
    build_dynamical_matrix,
    detuning_sweep,
    ladder_response,
    response_map,
    transmission,
)

from oracles import static_steady_state


def conv(n=4, flux=0.6, g=0.2, J=0.13, **kw):
    g = g * np.exp(1j * landau_laser_phases(n, n, flux))
    return ConversionModel(build_conversion_lattice(n, n, g, J), **kw)


def test_three_site_dynamical_matrix():
    g = 0.2 * np.exp(0.4j)
    m = ConversionModel(build_conversion_lattice(1, 2, [g, 0.1], 0.13), 0.3, 0.01, 0.001)
    D = build_dynamical_matrix(m).matrix
    np.testing.assert_allclose(np.diag(D), [1.3 - 0.005j, 1.0 - 0.0005j, 1.3 - 0.005j])
    assert D[0, 1] == pytest.approx(-g)
    assert D[1, 0] == pytest.approx(-np.conj(g))
    assert D[2, 1] == pytest.approx(-0.1)
    assert D[0, 2] == 0


def test_single_site_on_resonance():
    kappa = 0.01
    m = ConversionModel(build_conversion_lattice(1, 1, 0.2, 0.1), 0.3, kappa, 0.001)
    r = response_map(m, 1.3, 0)
    assert r.amplitudes[0] == pytest.approx(2 / np.sqrt(kappa))
    assert transmission(m, 1.3, 0)[0] == pytest.approx(-1.0)


def test_decoupled_mechanics():
    m = conv(g=0.0)
    r = response_map(m, 1.25, 0)
    mech = m.graph.kind_mask(SiteKind.MECHANICAL)
    assert np.all(r.amplitudes[mech] == 0)


def test_probe_must_be_optical():
    m = conv()
    with pytest.raises(ConfigurationError):
        response_map(m, 1.2, 1)


def test_missing_damping():
    with pytest.raises(ConfigurationError):
        build_dynamical_matrix(conv(Gamma=None))


def test_wrong_scheme():
    with pytest.raises(ConfigurationError):
        ConversionModel(build_modulated_link_lattice(1, 3))


def test_omega_consistency():
    with pytest.raises(ConfigurationError):
        conv(Omega=5.0)


@pytest.mark.parametrize("phi", [0.3, 1.1, -2.0])
def test_onsager(phi):
    mp, mm = conv(flux=phi), conv(flux=-phi)
    opt = np.flatnonzero(mp.graph.optical_mask)
    for dp in (1.2, 1.27, 1.33):
        Tp = np.array([transmission(mp, dp, l) for l in opt])
        Tm = np.array([transmission(mm, dp, l) for l in opt])
        np.testing.assert_allclose(Tp[:, opt], Tm[:, opt].T, atol=1e-10)


def test_passivity():
    m = conv(flux=0.9)
    for dp in np.linspace(1.0, 1.6, 13):
        for l in np.flatnonzero(m.graph.optical_mask)[:5]:
            assert np.sum(np.abs(transmission(m, dp, l)) ** 2) <= 1 + 1e-10


def test_linearity():
    m = conv()
    a = response_map(m, 1.26, 0, 1.0).amplitudes
    b = response_map(m, 1.26, 0, 2.5 - 0.7j).amplitudes
    np.testing.assert_allclose(b, (2.5 - 0.7j) * a, atol=1e-12)


def test_gauge_invariant_intensity():
    # a gauge transform rephases every mode; intensities are unchanged
    rng = np.random.default_rng(3)
    m = conv(flux=0.8)
    ph = m.graph.phase_field()
    xi = rng.uniform(-np.pi, np.pi, m.size)
    m1 = ConversionModel(m.graph.with_phases(apply_gauge_transform(ph, xi)), 0.3, 0.01, 0.001)
    np.testing.assert_allclose(response_map(m1, 1.27, 0).intensity, response_map(m, 1.27, 0).intensity, atol=1e-9, rtol=1e-9)


def test_matches_time_domain():
    kappa, Gamma = 0.3, 0.2
    n = 2
    g = 0.2 * np.exp(1j * landau_laser_phases(n, n, 0.9))
    m = ConversionModel(build_conversion_lattice(n, n, g, 0.13), 0.3, kappa, Gamma)
    D = build_dynamical_matrix(m).matrix
    for dp in (1.1, 1.3):
        expect = static_steady_state(D, dp, 0, kappa)
        np.testing.assert_allclose(response_map(m, dp, 0).amplitudes, expect, atol=1e-6)


def test_detuning_sweep_rows():
    m = conv()
    dps = [1.2, 1.3]
    sweep = detuning_sweep(m, dps, 0, threads=2)
    assert sweep.shape == (2, m.size)
    np.testing.assert_allclose(sweep[1], response_map(m, 1.3, 0).intensity)


def _ring_model(f):
    return ConversionModel(build_ab_ring(0.01, 0.001, f), 0.1, 0.01, 0.001)


def test_ab_periodicity_and_cosine():
    ring = build_ab_ring(0.01, 0.001, 0.0)
    fl = np.linspace(0, 4 * np.pi, 65)
    scan = ab_flux_scan(_ring_model, 1.103, ring.ports["input"], ring.ports["output"], fl, threads=2)
    np.testing.assert_allclose(scan.raw[:32], scan.raw[32:64], rtol=1e-10)
    assert scan.transmission_intensity.max() == pytest.approx(1.0)
    X = np.column_stack([np.ones_like(fl), np.cos(fl), np.sin(fl)])
    coef, *_ = np.linalg.lstsq(X, scan.transmission_intensity, rcond=None)
    resid = scan.transmission_intensity - X @ coef
    assert np.sqrt(np.mean(resid**2)) < 0.05


def test_ab_flux_half_quantum_suppresses():
    ring = build_ab_ring(0.01, 0.001, 0.0)
    s = ab_flux_scan(_ring_model, 1.103, ring.ports["input"], ring.ports["output"], [0.0, np.pi])
    assert s.raw[1] < 0.1 * s.raw[0]


def test_ladder_no_coupling():
    m = ConversionModel(build_synthetic_ladder(20, 0.0, 0.0, 0.05, 0.05), 0.0, 0.01, 0.001)
    assert ladder_response(m, 1.0, 0).efficiency == 0.0


def test_ladder_dispersion_matching():
    # equal bands line up for dphi = 0; a synthetic flux shifts the phonon
    # band in momentum and spoils the conversion
    def eff(dphi):
        m = ConversionModel(build_synthetic_ladder(40, dphi, 0.01, 0.05, 0.05), 0.0, 0.01, 0.001)
        return ladder_response(m, 1.0, 0).efficiency

    assert eff(0.0) > 2 * eff(1.0)
    assert eff(0.0) > 2 * eff(-1.0)


def test_ladder_wrong_scheme():
    with pytest.raises(ConfigurationError):
        ladder_response(conv(), 1.2)
