"""Acceptance criteria, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL: ...`` line with the
measured numbers before asserting.  Expected values are fixed below and
were derived independently of the code under test (closed forms, the
time-domain oracles in ``oracles.py``, or numbers quoted in the source
text).  Run with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from optomag import analysis, floquet, hofstadter, pert, response
from optomag.cli import build_model, main, resolve_probe
from optomag.config import preset
from optomag.lattice import (
    SiteKind,
    apply_gauge_transform,
    build_conversion_lattice,
    build_modulated_link_lattice,
    landau_gauge_phases,
    landau_laser_phases,
)

from oracles import modulated_steady_state, static_steady_state

J_EFF_REF = 0.108  # quoted effective hopping for the modulated-link example
KAPPA = 0.01
R_CYC_REF = math.sqrt(3 / (2 * math.pi / 8))  # n = 1 orbit at flux 2 pi / 8: 1.954
BETA_REF, N_C_REF = 1e4, 1e3  # quoted order-of-magnitude device numbers


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")


# ---------------------------------------------------------------------------
# 1


def test_01_effective_coupling(capsys):
    t0 = time.perf_counter()
    jeff = pert.jeff_modulated(0.3, 0.3, 0.3, -0.5, 0.5)

    def model_at(Om):
        return floquet.ModulatedLinkModel(build_modulated_link_lattice(1, 3, 0.5, 0.3), Om, 0.3, 0.0, KAPPA)

    split = floquet.resonant_splitting(model_at, 0, 2, 1.0, 0.5, M=8)
    rows = pert.convergence_table((0.1, 0.05, 0.025))
    ratios = [rows[k].rel_err / rows[k + 1].rel_err for k in range(2)]
    elapsed = time.perf_counter() - t0
    dev = split.splitting / (2 * J_EFF_REF) - 1
    checks = {
        "closed form": abs(jeff - J_EFF_REF) < 1e-15,
        "splitting 15%": abs(dev) <= 0.15,
        "O(eps^2)": min(ratios) >= 3,
        "runtime": elapsed < 1.0,
    }
    ok = all(checks.values())
    report(
        capsys,
        1,
        ok,
        f"j_eff={jeff:.15f}; 3-site min splitting {split.splitting:.5f} at Omega={split.Omega:.4f} "
        f"vs 2*0.108=0.216 ({dev:+.1%}); error ratios {ratios[0]:.2f}, {ratios[1]:.2f}; {elapsed:.2f} s; "
        + ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()),
    )
    assert ok


# ---------------------------------------------------------------------------
# 2 and 3(b) share the 12x12 Floquet decompositions


FLUX_P = range(8)


@pytest.fixture(scope="module")
def fig2_floquet():
    t0 = time.perf_counter()
    cfg = preset("fig2")
    out = {}
    for p in FLUX_P:
        phi = 2 * math.pi * p / 8
        model = build_model(cfg, phi)
        F = floquet.build_floquet_hamiltonian(model, cfg.run["M"])
        F.eig  # noqa: B018  (cache the decomposition)
        out[p] = (model, F)
    return cfg, out, time.perf_counter() - t0


def test_02_butterfly_oracle(capsys, fig2_floquet):
    t0 = time.perf_counter()
    cfg, runs, setup = fig2_floquet
    grid = cfg.omega_grid()
    hof_site = hofstadter.central_site(10)
    matched, total, per_flux = 0, 0, []
    for p in FLUX_P:
        phi = 2 * math.pi * p / 8
        model, F = runs[p]
        site = resolve_probe(cfg, model.graph)
        w0 = model.graph.sites[site].omega
        curve = floquet.floquet_ldos(model, site, grid + w0, F.M, method="eigen", operator=F)
        peaks = analysis.ldos_peaks(curve) - w0
        spec = hofstadter.spectrum(
            hofstadter.build_hofstadter_hamiltonian(hofstadter.HofstadterModel.landau(10, J_EFF_REF, phi))
        )
        ref = analysis.ldos_peaks(hofstadter.ldos(spec, hof_site, grid, KAPPA))
        frac = analysis.matched_fraction(peaks, ref, KAPPA)
        per_flux.append(frac)
        matched += round(frac * len(peaks))
        total += len(peaks)
    elapsed = time.perf_counter() - t0 + setup
    pooled = matched / total if total else 0.0
    ok = pooled >= 0.9 and elapsed < 600
    report(
        capsys,
        2,
        ok,
        f"matched peak fraction {pooled:.2f} over {total} peaks (need >= 0.90); per flux "
        + " ".join(f"{f:.2f}" for f in per_flux)
        + f"; {elapsed:.0f} s including decompositions",
    )
    assert ok


# ---------------------------------------------------------------------------
# 3


def test_03_sum_rule(capsys, fig2_floquet):
    s = hofstadter.spectrum(
        hofstadter.build_hofstadter_hamiltonian(hofstadter.HofstadterModel.landau(10, J_EFF_REF, 2 * math.pi / 8))
    )
    grid = np.arange(-0.5 - 200 * KAPPA, 0.5 + 200 * KAPPA, KAPPA / 10)
    dev_a = analysis.ldos_sum_rule_check(hofstadter.ldos(s, hofstadter.central_site(10), grid, KAPPA))
    cfg, runs, _ = fig2_floquet
    model, F = runs[1]
    site = resolve_probe(cfg, model.graph)
    w0 = model.graph.sites[site].omega
    wide = w0 + np.arange(-10.0, 10.0, KAPPA / 10)
    dev_b = analysis.ldos_sum_rule_check(floquet.floquet_ldos(model, site, wide, F.M, method="eigen", operator=F))
    ok = dev_a <= 0.01 and dev_b <= 0.01
    report(capsys, 3, ok, f"static Hofstadter deviation {dev_a:.2e}; Floquet (flux 2pi/8, M=8) deviation {dev_b:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 4


def test_04_gauge_invariance(capsys):
    rng = np.random.default_rng(2024)
    worst_ldos, worst_int = 0.0, 0.0
    for n in range(4, 11):
        ph = landau_gauge_phases(n, n, 2 * math.pi / 8 + 0.1 * n)
        s0 = hofstadter.spectrum(hofstadter.build_hofstadter_hamiltonian(hofstadter.HofstadterModel(n, J_EFF_REF, ph)))
        grid = np.linspace(-0.5, 0.5, 401)
        rho0 = np.array([hofstadter.ldos(s0, j, grid, KAPPA).rho for j in range(n * n)])
        g = 0.2 * np.exp(1j * landau_laser_phases(n, n, 2 * math.pi / 8))
        m0 = response.ConversionModel(build_conversion_lattice(n, n, g, 0.13), 0.3, KAPPA, 0.001)
        probes = np.flatnonzero(m0.graph.optical_mask)[[0, -1]]
        int0 = [response.response_map(m0, dp, l).intensity for l in probes for dp in (1.26, 1.278)]
        fields = m0.graph.phase_field()
        for _ in range(20):
            xi = rng.uniform(-np.pi, np.pi, n * n)
            s1 = hofstadter.spectrum(
                hofstadter.build_hofstadter_hamiltonian(hofstadter.HofstadterModel(n, J_EFF_REF, apply_gauge_transform(ph, xi)))
            )
            rho1 = np.array([hofstadter.ldos(s1, j, grid, KAPPA).rho for j in range(n * n)])
            worst_ldos = max(worst_ldos, float(np.max(np.abs(rho1 - rho0))))
            chi = rng.uniform(-np.pi, np.pi, m0.size)
            m1 = response.ConversionModel(m0.graph.with_phases(apply_gauge_transform(fields, chi)), 0.3, KAPPA, 0.001)
            int1 = [response.response_map(m1, dp, l).intensity for l in probes for dp in (1.26, 1.278)]
            worst_int = max(worst_int, max(float(np.max(np.abs(a - b))) for a, b in zip(int0, int1)))
    ok = worst_ldos <= 1e-10 and worst_int <= 1e-10
    report(capsys, 4, ok, f"n=4..10, 20 draws each: max LDOS change {worst_ldos:.1e}, max intensity change {worst_int:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 5


def test_05_onsager(capsys):
    n = 4
    worst = 0.0
    for phi in (0.3, 2 * math.pi / 8, 1.1, 2.0, -2.7):
        def model(f):
            g = 0.2 * np.exp(1j * landau_laser_phases(n, n, f))
            return response.ConversionModel(build_conversion_lattice(n, n, g, 0.13), 0.3, KAPPA, 0.001)

        mp, mm = model(phi), model(-phi)
        opt = np.flatnonzero(mp.graph.optical_mask)
        for dp in (1.2, 1.26, 1.278, 1.33):
            Tp = np.array([response.transmission(mp, dp, l) for l in opt])[:, opt]
            Tm = np.array([response.transmission(mm, dp, l) for l in opt])[:, opt]
            worst = max(worst, float(np.max(np.abs(Tp - Tm.T))))
    ok = worst <= 1e-10
    report(capsys, 5, ok, f"max |t(j,l;phi) - t(l,j;-phi)| = {worst:.1e} over 5 fluxes, 4 detunings, all optical pairs")
    assert ok


# ---------------------------------------------------------------------------
# 6


def test_06_time_domain(capsys):
    # 2x2 optical plaquette: rows A-I-B joined vertically, Fig. 2 couplings,
    # larger loss so that transients die within the integration window
    kappa = 0.2
    g = build_modulated_link_lattice(2, 3, 0.5, 0.3, j_vertical=J_EFF_REF)
    m = floquet.modulated_link_model(g, 2 * math.pi / 8, kappa=kappa)
    iface = np.flatnonzero(g.kind_mask(SiteKind.INTERFACE))
    worst_f = 0.0
    for omega, probe in ((0.05, 0), (0.4, 2)):
        c = modulated_steady_state(
            m.static_hamiltonian(), iface, m.mod_amp[iface], m.mod_phase[iface], m.Omega, kappa, omega, probe, samples=32
        )
        G = floquet.floquet_greens(m, omega, probe, 12)
        for mm in range(-12, 13):
            worst_f = max(worst_f, float(np.max(np.abs(c[mm + 15] - 1j * np.sqrt(kappa) * G.at(mm)))))
    gc = 0.2 * np.exp(1j * landau_laser_phases(2, 2, 2 * math.pi / 8))
    mc = response.ConversionModel(build_conversion_lattice(2, 2, gc, 0.13), 0.3, 0.3, 0.2)
    D = response.build_dynamical_matrix(mc).matrix
    worst_c = 0.0
    for dp in (1.1, 1.278):
        ref = static_steady_state(D, dp, 0, 0.3)
        worst_c = max(worst_c, float(np.max(np.abs(response.response_map(mc, dp, 0).amplitudes - ref))))
    ok = worst_f <= 1e-6 and worst_c <= 1e-6
    report(capsys, 6, ok, f"modulated-link max deviation {worst_f:.1e} (sidebands -12..12); conversion {worst_c:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 7


def test_07_cyclotron_ring(capsys):
    t0 = time.perf_counter()
    cfg = preset("fig3a")
    model = build_model(cfg, cfg.fluxes()[0])
    probe = resolve_probe(cfg, model.graph)
    resp = response.response_map(model, cfg.detunings()[0], probe)
    r = analysis.ring_radius(model.graph, resp)
    elapsed = time.perf_counter() - t0
    ok = abs(r - R_CYC_REF) <= 0.5 and elapsed < 300
    report(capsys, 7, ok, f"ring radius {r:.3f} vs {R_CYC_REF:.3f} +- 0.5 ({elapsed:.1f} s)")
    assert ok


# ---------------------------------------------------------------------------
# 8


def test_08_edge_chirality(capsys):
    ratios = {}
    for sign in (1, -1):
        cfg = preset("fig3b", {"flux": {"fraction": sign * 0.125}})
        model = build_model(cfg, cfg.fluxes()[0])
        probe = resolve_probe(cfg, model.graph)
        fwd, bwd = analysis.edge_arcs(model.graph, probe, 5)
        resp = response.response_map(model, cfg.detunings()[0], probe)
        ratios[sign] = analysis.edge_chirality_metric(resp, fwd, bwd).ratio
    product = ratios[1] * ratios[-1]
    ok = ratios[1] > 10 and abs(product - 1) <= 0.2
    report(capsys, 8, ok, f"ratio(+phi)={ratios[1]:.2f}, ratio(-phi)={ratios[-1]:.4f}, product {product:.4f}")
    assert ok


# ---------------------------------------------------------------------------
# 9


def test_09_aharonov_bohm(capsys):
    cfg = preset("fig3d")
    fl = np.asarray(cfg.fluxes())
    g0 = build_model(cfg, 0.0).graph
    scan = response.ab_flux_scan(
        lambda f: build_model(cfg, f), cfg.detunings()[0], g0.ports["input"], g0.ports["output"], fl
    )
    shifted = response.ab_flux_scan(
        lambda f: build_model(cfg, f), cfg.detunings()[0], g0.ports["input"], g0.ports["output"], fl + 2 * math.pi
    )
    period = float(np.max(np.abs(shifted.raw - scan.raw)) / scan.raw.max())
    X = np.column_stack([np.ones_like(fl), np.cos(fl), np.sin(fl)])
    coef, *_ = np.linalg.lstsq(X, scan.transmission_intensity, rcond=None)
    resid = float(np.max(np.abs(scan.transmission_intensity - X @ coef)))
    ok = period <= 1e-10 and resid <= 0.05
    report(capsys, 9, ok, f"2pi-periodicity {period:.1e}; max cosine-fit residual {resid:.1e} (normalized, 128 points)")
    assert ok


# ---------------------------------------------------------------------------
# 10


def test_10_design_estimates(capsys):
    g0 = 220e3 / 9e9  # g0 / Omega0
    Gamma = 1 / 2e5  # mechanical quality factor 2e5
    n_c = analysis.required_photon_number(g0, 0.3, Gamma)
    beta = analysis.drive_amplitude(g0, n_c, Gamma)
    dev_b, dev_n = beta / BETA_REF - 1, n_c / N_C_REF - 1
    ok = abs(dev_b) <= 0.25 and abs(dev_n) <= 0.25
    report(capsys, 10, ok, f"beta={beta:.0f} ({dev_b:+.1%} vs 1e4), n_c={n_c:.0f} ({dev_n:+.1%} vs 1e3); tolerance 25%")
    assert ok


# ---------------------------------------------------------------------------
# 11

DET_CONFIGS = {
    "butterfly_hofstadter": (
        "butterfly",
        """scheme = "hofstadter"
[lattice]
rows = 8
cols = 8
[physics]
j_eff = 0.108
kappa = 0.01
[flux]
steps = 16
[probe]
omega_min = -0.5
omega_max = 0.5
omega_steps = 501
""",
    ),
    "butterfly_floquet": (
        "butterfly",
        """scheme = "modulated_link"
[lattice]
rows = 3
cols = 5
[physics]
J = 0.3
J_vertical = 0.108
g0beta = 0.3
Omega = 1.0
omega_step = 0.5
kappa = 0.01
[flux]
steps = 8
[probe]
omega_min = -0.5
omega_max = 0.5
omega_steps = 1001
[run]
M = 4
""",
    ),
    "transport_conversion": (
        "transport",
        """scheme = "conversion"
[lattice]
rows = 10
cols = 10
[physics]
J = 0.13
g = 0.2
delta = 0.3
kappa = 0.01
Gamma = 0.001
[flux]
fraction = 0.125
[probe]
site = [5, 5]
detuning_start = 1.2
detuning_stop = 1.35
detuning_steps = 16
""",
    ),
    "transport_floquet": (
        "transport",
        """scheme = "modulated_link"
[lattice]
rows = 2
cols = 5
[physics]
J = 0.3
J_vertical = 0.108
g0beta = 0.3
Omega = 1.0
omega_step = 0.5
kappa = 0.01
[flux]
fraction = 0.125
[probe]
site = [0, 0]
detuning_start = -0.3
detuning_stop = 0.3
detuning_steps = 9
[run]
M = 4
""",
    ),
}


def test_11_determinism(capsys, tmp_path):
    import json

    mismatched = []
    for name, (command, text) in DET_CONFIGS.items():
        cfg = tmp_path / f"{name}.toml"
        cfg.write_text(text)
        sums = {}
        for t in (1, 2, 8):
            out = tmp_path / f"{name}_{t}"
            assert main([command, "--config", str(cfg), "--out", str(out), "--threads", str(t)]) == 0
            sums[t] = json.loads((out / "manifest.json").read_text())["outputs"]
            sums[t]["analysis.csv"] = (out / "analysis.csv").read_bytes() if (out / "analysis.csv").exists() else b""
        if not sums[1] == sums[2] == sums[8]:
            mismatched.append(name)
    ok = not mismatched
    report(
        capsys,
        11,
        ok,
        f"{len(DET_CONFIGS)} reduced butterfly/transport runs at 1, 2, 8 threads: "
        + ("all outputs byte-identical" if ok else f"differences in {', '.join(mismatched)}"),
    )
    assert ok
