"""Command-line front end: ``optomag <command> --config FILE | --preset NAME``.

Commands: butterfly, ldos, transport, abscan, ladder, validate.
Exit codes: 0 success, 1 validation failure, 2 usage/config error, 3 solver error.
The worker count is taken from ``--threads``, then ``OPTOMAG_THREADS``, then
``run.threads`` in the config, then the number of CPUs.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, analysis, floquet, hofstadter, response
from .config import PRESETS, ExperimentConfig, merge, parse_config, preset, validate
from .errors import ConfigError, OptomagError, SolverError
from .lattice import (
    SiteKind,
    build_ab_ring,
    build_conversion_lattice,
    build_modulated_link_lattice,
    build_square_lattice,
    build_synthetic_ladder,
    landau_gauge_phases,
    landau_laser_phases,
)
from .output import (
    append_csv_rows,
    read_phase_file,
    sha256_file,
    write_csv,
    write_json,
    write_lattice_csv,
    write_pgm,
)

THREADS_ENV = "OPTOMAG_THREADS"
COMMANDS = ("butterfly", "ldos", "transport", "abscan", "ladder", "validate")
_COMMAND_SCHEMES = {
    "butterfly": ("hofstadter", "modulated_link"),
    "ldos": ("hofstadter", "modulated_link"),
    "transport": ("conversion", "modulated_link"),
    "abscan": ("ab_ring",),
    "ladder": ("ladder",),
}


class UsageError(OptomagError):
    pass


# ---------------------------------------------------------------------------
# model construction


def _phase_file(cfg: ExperimentConfig):
    path = cfg.flux.get("phase_file")
    return read_phase_file(path) if path else None


def build_graph(cfg: ExperimentConfig, flux: float):
    """Lattice (with its phases) for one flux value."""
    p, lat = cfg.physics, cfg.lattice
    phases = _phase_file(cfg)
    if cfg.scheme == "hofstadter":
        g = build_square_lattice(lat["rows"], lat["cols"], p["j_eff"])
        return g.with_phases(phases or landau_gauge_phases(lat["rows"], lat["cols"], flux))
    if cfg.scheme == "modulated_link":
        return build_modulated_link_lattice(
            lat["rows"], lat["cols"], p["omega_step"], p["J"], j_vertical=p.get("J_vertical")
        )
    if cfg.scheme == "conversion":
        g = p["g"] * np.exp(1j * landau_laser_phases(lat["rows"], lat["cols"], flux))
        graph = build_conversion_lattice(lat["rows"], lat["cols"], g, p["J"])
        return graph.with_phases(phases) if phases is not None else graph
    if cfg.scheme == "ab_ring":
        return build_ab_ring(p["g"], p["J"], flux)
    return build_synthetic_ladder(lat["cols"], flux, p["g"], p["J"], p["K"])


def build_model(cfg: ExperimentConfig, flux: float):
    p = cfg.physics
    graph = build_graph(cfg, flux)
    if cfg.scheme == "hofstadter":
        lat = cfg.lattice
        if lat["rows"] != lat["cols"]:
            raise ConfigError([("lattice", "the ideal model needs rows == cols")])
        return hofstadter.HofstadterModel(lat["rows"], p["j_eff"], graph.phase_field(), kappa=p["kappa"])
    if cfg.scheme == "modulated_link":
        if _phase_file(cfg) is not None:
            raise ConfigError([("flux.phase_file", "not supported for the modulated-link scheme")])
        return floquet.modulated_link_model(graph, flux, Omega=p["Omega"], g0beta=p["g0beta"], kappa=p["kappa"])
    return response.ConversionModel(graph, p["delta"], p["kappa"], p["Gamma"], p.get("Omega0", 1.0))


def resolve_probe(cfg: ExperimentConfig, graph) -> int:
    """Probe site id: explicit ``[row, col]`` position or the central optical site."""
    if cfg.scheme == "ab_ring":
        return graph.ports["input"]
    site = cfg.probe.get("site", "center")
    if site != "center":
        try:
            sid = graph.site_at(*site)
        except KeyError:
            raise ConfigError([("probe.site", f"no site at position {site}")]) from None
        if graph.sites[sid].kind in (SiteKind.MECHANICAL, SiteKind.INTERFACE):
            raise ConfigError([("probe.site", "probe must address an optical A/B site")])
        return sid
    cand = [s for s in graph.sites if s.kind in (SiteKind.OPTICAL_A, SiteKind.OPTICAL_B)]
    rows = sorted({s.pos[0] for s in cand})
    row = rows[len(rows) // 2]
    in_row = sorted((s for s in cand if s.pos[0] == row), key=lambda s: s.pos[1])
    return in_row[len(in_row) // 2].id


# ---------------------------------------------------------------------------
# helpers


def resolve_threads(cli_value: int | None, cfg: ExperimentConfig | None) -> int:
    if cli_value is not None:
        n = cli_value
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    elif cfg is not None and cfg.run.get("threads"):
        n = cfg.run["threads"]
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def pmap(fn, items, threads: int) -> list:
    """Ordered map; results are aggregated in input order whatever the worker count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


class Run:
    def __init__(self, cfg: ExperimentConfig | None, out: Path, command: str, threads: int):
        self.cfg, self.out, self.command, self.threads = cfg, out, command, threads
        self.outputs: list[Path] = []
        self.metrics: list[tuple[str, float]] = []
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat()

    def add(self, *paths):
        self.outputs.extend(Path(p) for p in paths)

    def metric(self, name: str, value: float):
        self.metrics.append((name, float(value)))

    def finish(self) -> dict:
        digest = self.cfg.digest() if self.cfg is not None else ""
        if self.metrics:
            append_csv_rows(
                self.out / "analysis.csv",
                ["metric_name", "value", "parameters_hash"],
                [(n, v, digest[:16]) for n, v in self.metrics],
            )
        manifest = {
            "command": self.command,
            "config_hash": digest,
            "version": __version__,
            "started": self.started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "threads": self.threads,
            "outputs": {p.name: sha256_file(p) for p in sorted(self.outputs)},
        }
        write_json(self.out / "manifest.json", manifest)
        return manifest


# ---------------------------------------------------------------------------
# commands


def _ldos_curve(cfg: ExperimentConfig, flux: float, grid, sector: int = 0, operator=None):
    model = build_model(cfg, flux)
    if cfg.scheme == "hofstadter":
        graph = build_graph(cfg, flux)
        site = resolve_probe(cfg, graph)
        spec = hofstadter.spectrum(hofstadter.build_hofstadter_hamiltonian(model))
        return hofstadter.ldos(spec, site, grid, model.kappa), model
    site = resolve_probe(cfg, model.graph)
    w0 = model.graph.sites[site].omega
    curve = floquet.floquet_ldos(model, site, grid + w0, cfg.run["M"], sector=sector, method="eigen", operator=operator)
    return curve, model


def cmd_butterfly(run: Run):
    cfg = run.cfg
    fluxes = cfg.fluxes()
    grid = cfg.omega_grid()

    def one(phi):
        curve, _ = _ldos_curve(cfg, phi, grid)
        return curve

    curves = pmap(one, fluxes, run.threads)
    rows = [(phi, w, r) for phi, c in zip(fluxes, curves) for w, r in zip(grid, c.rho)]
    run.add(write_csv(run.out / "butterfly.csv", ["flux", "omega", "rho"], rows))
    image = np.array([c.rho for c in curves]).T[::-1]
    meta = {"x": "flux", "y": "omega (top = max)", "site": curves[0].site, "omega_min": grid[0], "omega_max": grid[-1]}
    run.add(*write_pgm(run.out / "butterfly.pgm", image, meta))
    run.metric("butterfly_site", curves[0].site)
    run.metric("butterfly_rho_max", image.max())


def cmd_ldos(run: Run):
    cfg = run.cfg
    phi = cfg.fluxes()[0]
    grid = cfg.omega_grid()
    curve, model = _ldos_curve(cfg, phi, grid)
    if cfg.scheme == "hofstadter":
        rows = [(phi, w, r, curve.site) for w, r in zip(grid, curve.rho)]
        run.add(write_csv(run.out / "ldos.csv", ["flux", "omega", "rho", "site"], rows))
    else:
        M = curve.meta["M"]
        rows = [(phi, w, r, curve.site, M) for w, r in zip(grid, curve.rho)]
        run.add(write_csv(run.out / "floquet_ldos.csv", ["flux", "omega", "rho", "site", "M_used"], rows))
        sectors = cfg.probe.get("sectors")
        if sectors:
            F = floquet.build_floquet_hamiltonian(model, M)
            side = []
            for m in sectors:
                c, _ = _ldos_curve(cfg, phi, grid, m, F)
                side += [(phi, w, m, r, c.site, M) for w, r in zip(grid, c.rho)]
            header = ["flux", "omega", "sector", "rho", "site", "M_used"]
            run.add(write_csv(run.out / "floquet_sidebands.csv", header, side))
    run.metric("ldos_site", curve.site)
    run.metric("sum_rule_deviation", analysis.ldos_sum_rule_check(curve))
    run.add(*write_lattice_csv(build_graph(cfg, phi), run.out))


def _optical_image(graph, values):
    opt = [s for s in graph.sites if s.is_optical]
    rows = sorted({s.pos[0] for s in opt})
    cols = sorted({s.pos[1] for s in opt})
    img = np.zeros((len(rows), len(cols)))
    ri = {r: k for k, r in enumerate(rows)}
    ci = {c: k for k, c in enumerate(cols)}
    for s in opt:
        img[ri[s.pos[0]], ci[s.pos[1]]] = values[s.id]
    return img


def cmd_transport(run: Run):
    cfg = run.cfg
    phi = cfg.fluxes()[0]
    model = build_model(cfg, phi)
    graph = model.graph
    probe = resolve_probe(cfg, graph)
    dets = cfg.detunings()
    if cfg.scheme == "modulated_link":
        w0 = graph.sites[probe].omega
        F = floquet.build_floquet_hamiltonian(model, cfg.run["M"])
        ts = pmap(lambda d: floquet.floquet_transmission(model, w0 + d, probe, operator=F), dets, run.threads)
        rows = []
        for d, t in zip(dets, ts):
            for k, m in enumerate(range(-F.M, F.M + 1)):
                for j in range(graph.size):
                    v = t[k, j]
                    rows.append((d, m, j, v.real, v.imag, abs(v)))
        run.add(write_csv(run.out / "transmission.csv", ["omega", "m", "site_j", "re_t", "im_t", "abs_t"], rows))
        run.add(*write_lattice_csv(graph, run.out))
        return
    D = response.build_dynamical_matrix(model)
    maps = pmap(lambda d: response.response_map(model, d, probe, dynamical=D), dets, run.threads)
    resp = maps[0]
    rows = [
        (s.pos[0], s.pos[1], s.kind.value, a.real, a.imag, abs(a) ** 2) for s, a in zip(graph.sites, resp.amplitudes)
    ]
    header = ["site_row", "site_col", "kind", "re_amp", "im_amp", "intensity"]
    run.add(write_csv(run.out / "response.csv", header, rows))
    meta = {"detuning": dets[0], "flux": phi, "probe": probe, "normalization": "linear min-max"}
    run.add(*write_pgm(run.out / "response.pgm", _optical_image(graph, resp.intensity), meta))
    if len(dets) > 1:
        opt = graph.optical_mask
        sweep = [(d, m.intensity[opt].sum(), m.intensity[probe]) for d, m in zip(dets, maps)]
        run.add(write_csv(run.out / "detuning_sweep.csv", ["detuning", "optical_intensity", "probe_intensity"], sweep))
    run.metric("ring_radius", analysis.ring_radius(graph, resp))
    r0, c0 = graph.sites[probe].pos
    rmax = max(s.pos[0] for s in graph.sites)
    cmax = max(s.pos[1] for s in graph.sites)
    tangent = (0.0, 1.0) if r0 in (0.0, rmax) else (1.0, 0.0) if c0 in (0.0, cmax) else None
    if tangent is not None:
        f, b = analysis.edge_arcs(graph, probe, 5, tangent)
        if f.size and b.size:
            run.metric("edge_chirality_ratio", analysis.edge_chirality_metric(resp, f, b).ratio)
    run.add(*write_lattice_csv(graph, run.out))


def cosine_fit(flux, values):
    """Least-squares fit of ``A + B cos(flux + phi0)``; returns (A, B, phi0, max residual)."""
    flux = np.asarray(flux)
    X = np.column_stack([np.ones_like(flux), np.cos(flux), np.sin(flux)])
    (a, c, s), *_ = np.linalg.lstsq(X, values, rcond=None)
    resid = values - X @ np.array([a, c, s])
    return float(a), float(np.hypot(c, s)), float(np.arctan2(-s, c)), float(np.max(np.abs(resid)))


def cmd_abscan(run: Run):
    cfg = run.cfg
    fluxes = cfg.fluxes()
    g0 = build_graph(cfg, 0.0)
    scan = response.ab_flux_scan(
        lambda phi: build_model(cfg, phi),
        cfg.detunings()[0],
        g0.ports["input"],
        g0.ports["output"],
        fluxes,
        threads=run.threads,
    )
    rows = list(zip(scan.fluxes, scan.transmission_intensity))
    run.add(write_csv(run.out / "abscan.csv", ["flux", "t_abs2_normalized"], rows))
    run.metric("ab_cosine_fit_max_residual", cosine_fit(scan.fluxes, scan.transmission_intensity)[3])
    run.metric("ab_peak_transmission", scan.raw.max())
    run.add(*write_lattice_csv(g0, run.out))


def cmd_ladder(run: Run):
    cfg = run.cfg
    dphis = cfg.fluxes()
    det = cfg.detunings()[0]

    def one(dphi):
        model = build_model(cfg, dphi)
        return response.ladder_response(model, det, resolve_probe(cfg, model.graph)).efficiency

    eff = pmap(one, dphis, run.threads)
    run.add(write_csv(run.out / "ladder.csv", ["dphi", "efficiency"], list(zip(dphis, eff))))
    run.metric("ladder_peak_dphi", dphis[int(np.argmax(eff))])
    run.metric("ladder_peak_efficiency", max(eff))


def cmd_validate(run: Run) -> bool:
    from .validation import run_checks

    results, table = run_checks()
    print(f"{'eps':>8} {'splitting_exact':>18} {'2*j_eff':>14} {'rel_err':>10}")
    for row in table:
        print(f"{row.eps:8.4f} {row.splitting_exact:18.10e} {row.two_jeff:14.6e} {row.rel_err:10.3e}")
    run.add(
        write_csv(
            run.out / "convergence.csv",
            ["eps", "splitting_exact", "two_jeff", "rel_err"],
            [tuple(r) for r in table],
        )
    )
    ok = True
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    run.add(write_csv(run.out / "validate.csv", ["check", "passed", "detail"], results))
    return ok


_DISPATCH = {
    "butterfly": cmd_butterfly,
    "ldos": cmd_ldos,
    "transport": cmd_transport,
    "abscan": cmd_abscan,
    "ladder": cmd_ladder,
}


# ---------------------------------------------------------------------------
# entry point


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="optomag", description="Photonic gauge fields in optomechanical arrays.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="TOML experiment file (overrides the preset)")
    ap.add_argument("--preset", choices=sorted(PRESETS), help="bundled parameter set")
    ap.add_argument("--out", type=Path, help="output directory (default: run.out)")
    ap.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV})")
    return ap


def _load(args) -> ExperimentConfig | None:
    if args.config is None:
        return preset(args.preset) if args.preset else None
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError([("--config", str(exc))]) from exc
    if not args.preset:
        return parse_config(text)
    from .config import tomllib

    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([("<document>", f"not valid TOML: {exc}")]) from exc
    return validate(merge(PRESETS[args.preset], doc))


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if cfg is None and args.command != "validate":
            raise UsageError("give --config or --preset")
        if cfg is not None and args.command in _COMMAND_SCHEMES and cfg.scheme not in _COMMAND_SCHEMES[args.command]:
            allowed = ", ".join(_COMMAND_SCHEMES[args.command])
            raise UsageError(f"command {args.command!r} needs scheme {allowed}, config has {cfg.scheme!r}")
        threads = resolve_threads(args.threads, cfg)
        out = args.out or Path(cfg.run["out"] if cfg is not None else "out")
        out.mkdir(parents=True, exist_ok=True)
        run = Run(cfg, out, args.command, threads)
        with threadpool_limits(limits=1):
            if args.command == "validate":
                ok = cmd_validate(run)
            else:
                _DISPATCH[args.command](run)
                ok = True
        run.finish()
    except ConfigError as exc:
        print(f"optomag: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"optomag: usage error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"optomag: solver error: {exc}", file=sys.stderr)
        return 3
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"optomag: solver error: {exc}", file=sys.stderr)
        return 3
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
