"""Ideal Peierls-phase tight-binding model on an n x n square grid.

This is the reference model every optomechanical scheme is compared with:
exact diagonalization plus a Lorentzian-broadened local density of states,

    rho(w) = sum_k kappa * |<site|k>|^2 / ((w - w_k)^2 + kappa^2 / 4),

normalized so that its integral over all frequencies is 2 pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ConfigurationError, ContractError
from .lattice import PhaseField, _square_bonds, landau_gauge_phases

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class HofstadterModel:
    n: int
    j_eff: float
    phases: PhaseField
    onsite: np.ndarray | None = None
    kappa: float = 0.01
    periodic: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("grid size must be >= 1")
        if self.j_eff < 0:
            raise ConfigurationError("j_eff is a magnitude and must be >= 0")
        if not self.kappa > 0:
            raise ConfigurationError("kappa must be > 0")

    @classmethod
    def landau(cls, n: int, j_eff: float, flux: float, kappa: float = 0.01, periodic: bool = False, onsite=None):
        return cls(n, j_eff, landau_gauge_phases(n, n, flux, periodic=periodic), onsite, kappa, periodic)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    site_weights: np.ndarray  # (sites, states)
    vectors: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class LDOSCurve:
    omega_grid: np.ndarray
    rho: np.ndarray
    site: int
    kappa: float
    meta: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(np.trapezoid(self.rho, self.omega_grid))


def build_hofstadter_hamiltonian(model: HofstadterModel) -> np.ndarray:
    n = model.n
    H = np.zeros((n * n, n * n), dtype=complex)
    for i, j in _square_bonds(n, n, model.periodic):
        try:
            theta = model.phases[i, j]
        except KeyError:
            raise ConfigurationError(f"phase field has no entry for link ({i}, {j})") from None
        H[j, i] += -model.j_eff * np.exp(1j * theta)
        H[i, j] += -model.j_eff * np.exp(-1j * theta)
    if model.onsite is not None:
        onsite = np.asarray(model.onsite, dtype=float).ravel()
        if onsite.shape != (n * n,):
            raise ConfigurationError(f"onsite needs {n * n} entries")
        H[np.diag_indices(n * n)] += onsite
    return H


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {H.shape}")
    dev = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if dev > tol:
        raise ContractError(f"matrix is not Hermitian (max deviation {dev:.3e})")


def spectrum(H: np.ndarray, *, keep_vectors: bool = False) -> Spectrum:
    check_hermitian(H)
    w, v = linalg.eigh(H)
    return Spectrum(w, np.abs(v) ** 2, v if keep_vectors else None)


def default_grid(energies, kappa: float, span: float = 20.0, step: float = 0.1) -> np.ndarray:
    """Grid from ``min - span*kappa`` to ``max + span*kappa`` with spacing ``step*kappa``."""
    lo = np.min(energies) - span * kappa
    hi = np.max(energies) + span * kappa
    npts = int(np.ceil((hi - lo) / (step * kappa))) + 1
    return lo + step * kappa * np.arange(npts)


def lorentzian_sum(grid, energies, weights, kappa: float, chunk: int = 2048) -> np.ndarray:
    """``sum_k kappa w_k / ((grid - e_k)^2 + kappa^2/4)`` evaluated in grid chunks."""
    grid = np.asarray(grid, dtype=float)
    energies = np.asarray(energies, dtype=float)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    energies, weights = energies[keep], weights[keep]
    out = np.empty(grid.shape)
    for s in range(0, grid.size, chunk):
        g = grid[s : s + chunk, None]
        out[s : s + chunk] = (kappa * weights / ((g - energies) ** 2 + 0.25 * kappa**2)).sum(axis=1)
    return out


def ldos(spec: Spectrum, site: int, omega_grid=None, kappa: float = 0.01) -> LDOSCurve:
    if not kappa > 0:
        raise ConfigurationError("kappa must be > 0")
    if omega_grid is None:
        omega_grid = default_grid(spec.eigenvalues, kappa)
    grid = np.asarray(omega_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("omega grid is empty")
    rho = lorentzian_sum(grid, spec.eigenvalues, spec.site_weights[site], kappa)
    return LDOSCurve(grid, rho, int(site), float(kappa))


def central_site(n: int) -> int:
    return (n // 2) * n + n // 2


def butterfly(n: int, j_eff: float, fluxes, omega_grid, kappa: float = 0.01, site: int | None = None) -> np.ndarray:
    """LDOS map ``rho[flux_index, omega_index]`` at one site (default: central)."""
    site = central_site(n) if site is None else site
    out = np.empty((len(fluxes), len(omega_grid)))
    for k, phi in enumerate(fluxes):
        model = HofstadterModel.landau(n, j_eff, phi, kappa)
        out[k] = ldos(spectrum(build_hofstadter_hamiltonian(model)), site, omega_grid, kappa).rho
    return out


def count_bands(eigenvalues, gap: float) -> int:
    """Number of clusters in a sorted spectrum separated by gaps wider than ``gap``."""
    e = np.sort(np.asarray(eigenvalues))
    return int(np.sum(np.diff(e) > gap)) + 1
