"""Semiclassical estimates, transport metrics and device-design numbers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import CoverageWarning, DomainError
from .hofstadter import LDOSCurve
from .lattice import LatticeGraph
from .response import ResponseMap


@dataclass(frozen=True)
class LandauParameters:
    effective_mass: float
    cyclotron_frequency: float
    orbit_radius: float
    level_index: int


def landau_parameters(J: float, phi: float, n: int = 1) -> LandauParameters:
    """Continuum Landau-level picture of the lattice at small flux ``phi`` per plaquette.

    ``m* = 1/(2J)``, ``w_cyc = 2 phi J`` and ``R = sqrt((2n+1)/phi)`` in
    units with hbar = a = 1; ``phi`` is in radians.
    """
    if not phi > 0:
        raise DomainError("flux per plaquette must be > 0")
    if n < 0:
        raise DomainError("Landau level index must be >= 0")
    return LandauParameters(1.0 / (2.0 * J), 2.0 * phi * J, float(np.sqrt((2 * n + 1) / phi)), int(n))


def ring_radius(graph: LatticeGraph, resp: ResponseMap, bin_width: float = 0.25) -> float:
    """Radius of the brightest ring around the probe.

    Optical-site intensities are histogrammed by distance from the probe
    (the probe itself excluded) and the centre of the heaviest bin returned.
    """
    opt = graph.optical_mask.copy()
    opt[resp.probe] = False
    pos = graph.positions
    d = np.hypot(*(pos[opt] - pos[resp.probe]).T)
    bins = np.arange(0.0, d.max() + bin_width, bin_width)
    hist, _ = np.histogram(d, bins, weights=resp.intensity[opt])
    k = int(np.argmax(hist))
    return float(bins[k] + 0.5 * bin_width)


def edge_arcs(graph: LatticeGraph, probe: int, radius: int = 5, tangent=(0.0, 1.0)):
    """Forward and backward arcs of optical sites at Chebyshev distance ``radius``.

    Each arc is the 90 degree sector of that square ring centred on the
    ``+tangent`` (forward) or ``-tangent`` (backward) direction, given as
    ``(d_row, d_col)``.
    """
    opt = np.flatnonzero(graph.optical_mask)
    d = graph.positions[opt] - graph.positions[probe]
    ring = np.isclose(np.max(np.abs(d), axis=1), radius)
    t = np.asarray(tangent, dtype=float)
    t = t / np.linalg.norm(t)
    cos = (d @ t) / np.maximum(np.linalg.norm(d, axis=1), 1e-300)
    lim = np.cos(np.pi / 4) - 1e-9
    return opt[ring & (cos >= lim)], opt[ring & (-cos >= lim)]


@dataclass(frozen=True)
class ChiralityMetric:
    forward_intensity: float
    backward_intensity: float
    ratio: float


def edge_chirality_metric(resp: ResponseMap, forward, backward) -> ChiralityMetric:
    forward = np.asarray(forward, dtype=int)
    backward = np.asarray(backward, dtype=int)
    if np.intersect1d(forward, backward).size:
        raise ValueError("edge arcs must be disjoint")
    inten = resp.intensity
    f, b = float(inten[forward].sum()), float(inten[backward].sum())
    ratio = f / b if b > 0 else np.inf
    return ChiralityMetric(f, b, ratio)


def thermal_photon_occupancy(n_th: float, Gamma: float, kappa: float) -> float:
    """Photons leaking in from converted thermal phonons, ``n_th Gamma / kappa``."""
    if not (Gamma > 0 and kappa > 0):
        raise DomainError("rates must be > 0")
    return n_th * Gamma / kappa


def drive_amplitude(g0: float, n_c: float, Gamma: float) -> float:
    """Mechanical amplitude ``beta = 2 g0 n_c / Gamma`` under resonant radiation-pressure drive."""
    if not Gamma > 0:
        raise DomainError("Gamma must be > 0")
    return 2.0 * g0 * n_c / Gamma


def required_photon_number(g0: float, g0beta: float, Gamma: float) -> float:
    """Circulating photon number giving the modulation depth ``g0 beta``."""
    beta = g0beta / g0
    return beta * Gamma / (2.0 * g0)


def tail_mass(curve: LDOSCurve) -> float:
    """Spectral weight beyond the grid ends, assuming Lorentzian tails there.

    A Lorentzian tail ``c / w^2`` holds ``2 rho^2 / |rho'|`` beyond a point.
    """
    w, r = curve.omega_grid, curve.rho
    if w.size < 2:
        return np.inf
    total = 0.0
    for a, b in ((0, 1), (-1, -2)):
        slope = abs((r[a] - r[b]) / (w[a] - w[b]))
        total += 2 * r[a] ** 2 / slope if slope > 0 else (np.inf if r[a] > 0 else 0.0)
    return float(total)


def ldos_sum_rule_check(curve: LDOSCurve, warn_above: float = 0.01) -> float:
    """Relative deviation of ``trapezoid(rho)`` from 2 pi.

    Emits :class:`CoverageWarning` with the estimated missing tail when the
    grid cuts off more than ``warn_above`` of the weight.
    """
    integral = curve.integral()
    dev = abs(integral - 2 * np.pi) / (2 * np.pi)
    tail = tail_mass(curve)
    if tail / (2 * np.pi) > warn_above:
        warnings.warn(
            f"grid misses an estimated {tail / (2 * np.pi):.2%} of the spectral weight", CoverageWarning, stacklevel=2
        )
    return float(dev)


def ldos_peaks(curve: LDOSCurve, prominence: float = 0.02) -> np.ndarray:
    """Peak frequencies with prominence above ``prominence * max(rho)``."""
    idx, _ = find_peaks(curve.rho, prominence=prominence * curve.rho.max())
    return curve.omega_grid[idx]


def matched_fraction(peaks, reference, tol: float) -> float:
    """Fraction of ``peaks`` lying within ``tol`` of some reference peak."""
    peaks = np.asarray(peaks)
    reference = np.asarray(reference)
    if peaks.size == 0:
        return 0.0
    if reference.size == 0:
        return 0.0
    d = np.min(np.abs(peaks[:, None] - reference[None, :]), axis=1)
    return float(np.mean(d <= tol))
