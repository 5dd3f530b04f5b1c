"""Coherent linear response of optomechanical conversion arrays.

In the frame rotating with the drive lasers the linearized amplitude
equations close on annihilation amplitudes alone (beam-splitter coupling,
rotating-wave approximation):

    d<a>/dt = -i D <a> + sqrt(kappa) alpha_in exp(-i Delta_p t) e_l,
    D = H - i diag(kappa/2 on optical sites, Gamma/2 on mechanical sites).

``H`` has the optical frequency ``Omega = Omega0 + delta`` on optical sites,
``Omega0`` on mechanical sites and ``-g`` on optomechanical links.  The
anomalous (``a a``) Green's function vanishes identically in this sector,
so only ``G = (Delta_p - D)^-1`` is needed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .errors import ConfigurationError, SolverError
from .lattice import LatticeGraph, Scheme, SiteKind

_SCHEMES = {Scheme.CONVERSION, Scheme.AB_RING, Scheme.SYNTHETIC_LADDER}


@dataclass(frozen=True, eq=False)
class ConversionModel:
    graph: LatticeGraph
    delta: float = 0.3
    kappa: float | None = 0.01
    Gamma: float | None = 0.001
    Omega0: float = 1.0
    Omega: float | None = None

    def __post_init__(self):
        if self.graph.scheme not in _SCHEMES:
            raise ConfigurationError(f"{self.graph.scheme.value} lattices have no optomechanical response")
        if self.Omega is None:
            object.__setattr__(self, "Omega", self.Omega0 + self.delta)
        elif abs(self.Omega - (self.Omega0 + self.delta)) > 1e-12:
            raise ConfigurationError("Omega must equal Omega0 + delta")

    @property
    def size(self) -> int:
        return self.graph.size


@dataclass(frozen=True)
class DynamicalMatrix:
    matrix: np.ndarray
    optical: np.ndarray

    @property
    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.matrix + self.matrix.conj().T)


@dataclass(frozen=True)
class ResponseMap:
    amplitudes: np.ndarray
    probe: int
    detuning: float
    input_amplitude: complex
    meta: dict = field(default_factory=dict)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ABScan:
    fluxes: np.ndarray
    transmission_intensity: np.ndarray
    detuning: float
    raw: np.ndarray


def build_dynamical_matrix(model: ConversionModel) -> DynamicalMatrix:
    for name in ("kappa", "Gamma"):
        v = getattr(model, name)
        if v is None or not v > 0:
            raise ConfigurationError(f"damping rate {name} must be given and > 0")
    g = model.graph
    optical = g.optical_mask
    D = g.hopping_matrix()
    onsite = np.where(optical, model.Omega, model.Omega0) + g.omegas
    loss = np.where(optical, 0.5 * model.kappa, 0.5 * model.Gamma)
    D[np.diag_indices(g.size)] += onsite - 1j * loss
    return DynamicalMatrix(D, optical)


def greens_column(D: DynamicalMatrix, delta_p: float, probe: int) -> np.ndarray:
    A = delta_p * np.eye(len(D.matrix)) - D.matrix
    rhs = np.zeros(len(A), dtype=complex)
    rhs[probe] = 1.0
    try:
        x = linalg.solve(A, rhs)
    except linalg.LinAlgError as exc:
        raise SolverError(f"response solve failed at Delta_p={delta_p}: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError(f"response solve produced non-finite values at Delta_p={delta_p}")
    return x


def _conversion_meta(model: ConversionModel, probe: int) -> dict:
    kind = model.graph.sites[probe].kind
    return {
        "probe_kind": kind.value,
        "conversion": "amplitudes on the other optical sublattice oscillate at the probe frequency "
        "shifted by the difference of the two drive-laser frequencies",
    }


def response_map(
    model: ConversionModel,
    delta_p: float,
    probe: int,
    alpha_in: complex = 1.0,
    *,
    dynamical: DynamicalMatrix | None = None,
) -> ResponseMap:
    """Steady-state amplitudes ``i sqrt(kappa) alpha_in G[:, probe]``."""
    D = build_dynamical_matrix(model) if dynamical is None else dynamical
    if not D.optical[probe]:
        raise ConfigurationError("the probe must address an optical site")
    amps = 1j * np.sqrt(model.kappa) * alpha_in * greens_column(D, delta_p, probe)
    return ResponseMap(amps, int(probe), float(delta_p), complex(alpha_in), _conversion_meta(model, probe))


def transmission(model: ConversionModel, delta_p: float, probe: int, *, dynamical=None) -> np.ndarray:
    """Output amplitudes ``t_j = delta_jl - i kappa G[j, l]`` on optical sites (0 on mechanical ones)."""
    D = build_dynamical_matrix(model) if dynamical is None else dynamical
    G = greens_column(D, delta_p, probe)
    t = np.where(D.optical, -1j * model.kappa * G, 0.0)
    t[probe] += 1.0
    return t


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def ab_flux_scan(
    factory: Callable[[float], ConversionModel],
    delta_p: float,
    input_site: int,
    output_site: int,
    fluxes: Sequence[float],
    *,
    threads: int = 1,
) -> ABScan:
    """``|t(output <- input)|^2`` per flux, normalized to the scan maximum."""
    fluxes = np.asarray(fluxes, dtype=float)

    def one(phi):
        return abs(transmission(factory(phi), delta_p, input_site)[output_site]) ** 2

    raw = np.array(_map(one, fluxes, threads))
    peak = raw.max() if raw.size else 0.0
    norm = raw / peak if peak > 0 else raw
    return ABScan(fluxes, norm, float(delta_p), raw)


@dataclass(frozen=True)
class LadderResponse:
    response: ResponseMap
    efficiency: float


def ladder_response(model: ConversionModel, delta_p: float, probe: int = 0) -> LadderResponse:
    """Response of the synthetic ladder plus the fraction of intensity on the mechanical rail."""
    if model.graph.scheme is not Scheme.SYNTHETIC_LADDER:
        raise ConfigurationError("ladder_response needs a synthetic-ladder lattice")
    resp = response_map(model, delta_p, probe)
    inten = resp.intensity
    mech = model.graph.kind_mask(SiteKind.MECHANICAL)
    total = inten.sum()
    return LadderResponse(resp, float(inten[mech].sum() / total) if total > 0 else 0.0)


def detuning_sweep(model: ConversionModel, detunings: Sequence[float], probe: int, *, threads: int = 1) -> np.ndarray:
    """Intensity maps for a list of probe detunings, shape ``(len(detunings), S)``."""
    D = build_dynamical_matrix(model)
    return np.array(_map(lambda dp: response_map(model, dp, probe, dynamical=D).intensity, detunings, threads))
