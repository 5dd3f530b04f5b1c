"""Fast invariant suite behind ``optomag validate``.

Each check returns ``(name, passed, detail)``; the suite is deterministic
(fixed seeds) and runs in a few seconds.
"""

from __future__ import annotations

import numpy as np

from . import analysis, floquet, hofstadter, pert, response
from .lattice import (
    apply_gauge_transform,
    build_ab_ring,
    build_conversion_lattice,
    build_modulated_link_lattice,
    landau_gauge_phases,
    landau_laser_phases,
    plaquette_fluxes,
    build_square_lattice,
)


def _check(name, value, limit, fmt="{:.2e}"):
    return name, bool(value <= limit), f"{fmt.format(value)} <= {fmt.format(limit)}"


def check_gauge_closure(rng):
    g = build_square_lattice(4, 4)
    ph = landau_gauge_phases(4, 4, 0.7)
    f0 = plaquette_fluxes(g, ph).values()
    worst = 0.0
    for _ in range(5):
        f1 = plaquette_fluxes(g, apply_gauge_transform(ph, rng.uniform(-np.pi, np.pi, 16))).values()
        worst = max(worst, np.max(np.abs(np.angle(np.exp(1j * (f1 - f0))))))
    return _check("gauge closure of plaquette fluxes", worst, 1e-12)


def check_hofstadter(rng):
    n, j, kappa = 6, 0.108, 0.01
    out = []
    ph = landau_gauge_phases(n, n, 2 * np.pi / 5)
    spec = hofstadter.spectrum(hofstadter.build_hofstadter_hamiltonian(hofstadter.HofstadterModel(n, j, ph, kappa=kappa)))
    xi = rng.uniform(-np.pi, np.pi, n * n)
    spec_g = hofstadter.spectrum(
        hofstadter.build_hofstadter_hamiltonian(hofstadter.HofstadterModel(n, j, apply_gauge_transform(ph, xi), kappa=kappa))
    )
    grid = hofstadter.default_grid(spec.eigenvalues, kappa)
    site = hofstadter.central_site(n)
    r0 = hofstadter.ldos(spec, site, grid, kappa).rho
    r1 = hofstadter.ldos(spec_g, site, grid, kappa).rho
    out.append(_check("Hofstadter LDOS gauge invariance", np.max(np.abs(r1 - r0)), 1e-10))
    out.append(_check("Hofstadter particle-hole symmetry", np.max(np.abs(np.sort(spec.eigenvalues) + np.sort(spec.eigenvalues)[::-1])), 1e-12))
    wide = np.arange(-0.5 - 200 * kappa, 0.5 + 200 * kappa, kappa / 10)
    dev = analysis.ldos_sum_rule_check(hofstadter.ldos(spec, site, wide, kappa))
    out.append(_check("Hofstadter LDOS sum rule", dev, 0.01))
    return out


def check_floquet():
    g = build_modulated_link_lattice(2, 3, 0.5, 0.3, j_vertical=0.108)
    out = []
    bare = floquet.ModulatedLinkModel(g, 1.0, 0.0, 0.0, 0.05)
    G = floquet.floquet_greens(bare, 0.3, 0, 4)
    H0 = bare.static_hamiltonian()
    static = np.linalg.solve((0.3 + 0.025j) * np.eye(g.size) - H0, np.eye(g.size)[:, 0])
    err = max(np.max(np.abs(G.at(0) - static)), np.max(np.abs(np.delete(G.values, G.M, axis=0))))
    out.append(_check("Floquet undriven reduction", err, 1e-12))
    model = floquet.modulated_link_model(g, 0.9, kappa=0.05)
    grid = np.linspace(-0.6, 0.6, 241)
    a = floquet.floquet_ldos(model, 0, grid, 6, method="resolvent").rho
    b = floquet.floquet_ldos(model, 0, grid, 6, method="eigen").rho
    out.append(_check("Floquet resolvent vs eigen sum", np.max(np.abs(a - b)), 1e-8))
    return out


def check_conversion():
    n, phis = 4, (0.3, 1.1, -2.0)
    out = []
    worst_ons, worst_pass = 0.0, 0.0
    for phi in phis:
        def model(f):
            g = 0.2 * np.exp(1j * landau_laser_phases(n, n, f))
            return response.ConversionModel(build_conversion_lattice(n, n, g, 0.13), 0.3, 0.01, 0.001)
        mp, mm = model(phi), model(-phi)
        opt = np.flatnonzero(mp.graph.optical_mask)
        Tp = np.array([response.transmission(mp, 1.25, l) for l in opt])
        Tm = np.array([response.transmission(mm, 1.25, l) for l in opt])
        worst_ons = max(worst_ons, np.max(np.abs(Tp[:, opt] - Tm[:, opt].T)))
        worst_pass = max(worst_pass, np.max(np.sum(np.abs(Tp) ** 2, axis=1)) - 1)
    out.append(_check("Onsager reciprocity", worst_ons, 1e-10))
    out.append(_check("passivity excess", max(worst_pass, 0.0), 1e-10))
    ring = build_ab_ring(0.01, 0.001, 0.0)
    fl = np.linspace(0, 2 * np.pi, 9)
    scan = response.ab_flux_scan(
        lambda f: response.ConversionModel(build_ab_ring(0.01, 0.001, f), 0.1, 0.01, 0.001),
        1.103, ring.ports["input"], ring.ports["output"], np.concatenate([fl, fl + 2 * np.pi]),
    )
    out.append(_check("AB flux periodicity", np.max(np.abs(scan.raw[:9] - scan.raw[9:])) / scan.raw.max(), 1e-10))
    return out


def run_checks(seed: int = 7):
    rng = np.random.default_rng(seed)
    results = [check_gauge_closure(rng)]
    results += check_hofstadter(rng)
    results += check_floquet()
    results += check_conversion()
    table = pert.convergence_table()
    ratios = [table[k].rel_err / table[k + 1].rel_err for k in range(len(table) - 1)]
    results.append(("Schrieffer-Wolff O(eps^2) convergence", bool(min(ratios) >= 3), f"error ratios {', '.join(f'{r:.2f}' for r in ratios)} >= 3"))
    jeff = pert.jeff_modulated(0.3, 0.3, 0.3, -0.5, 0.5)
    results.append(("j_eff at reference parameters", bool(abs(jeff - 0.108) < 1e-12), f"{jeff:.12f}"))
    return results, table
