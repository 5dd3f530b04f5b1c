"""Floquet treatment of the modulated-link lattice.

The interface modes oscillate as ``w_I(t) = w_I + 2 g0|beta| cos(Omega t + phi_I)``.
In the extended (site x Fourier) space the Floquet Hamiltonian has diagonal
blocks ``H0 + n Omega`` and the drive couples neighbouring blocks:

    block (n+1, n): g0|beta| exp(+i phi)      block (n, n+1): g0|beta| exp(-i phi)

Block ``n`` carries the time dependence ``exp(-i (w - n Omega) t)``, so a
photon that has been up-converted ``m`` times sits in block ``-m``.  All
public results are indexed by the physical up-conversion count ``m``.

Green's functions are computed either by a sparse LU solve per frequency or
from one eigendecomposition of the Hermitian operator (uniform loss only).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import linalg
from scipy.sparse.linalg import splu

from . import pert
from .errors import ConfigurationError, CoverageWarning, FoldingWarning, SolverError
from .hofstadter import LDOSCurve, lorentzian_sum
from .lattice import (
    LatticeGraph,
    Link,
    LinkKind,
    PhaseField,
    Scheme,
    Site,
    SiteKind,
)

DEFAULT_M = 8
EIGEN_MAX_DIM = 6000


def _per_site(value, graph: LatticeGraph, mask: np.ndarray, name: str) -> np.ndarray:
    """Expand a scalar, a per-masked-site list or a ``{site: value}`` map to a full array."""
    out = np.zeros(graph.size)
    ids = np.flatnonzero(mask)
    if isinstance(value, Mapping):
        if set(int(k) for k in value) != set(ids.tolist()):
            raise ConfigurationError(f"{name} must be given exactly on the interface sites")
        for k, v in value.items():
            out[int(k)] = v
    elif np.ndim(value) == 0:
        out[ids] = float(value)
    else:
        arr = np.asarray(value, dtype=float).ravel()
        if arr.shape == (ids.size,):
            out[ids] = arr
        elif arr.shape == (graph.size,):
            if np.any(arr[~mask] != 0):
                raise ConfigurationError(f"{name} must vanish off the interface sites")
            out = arr.copy()
        else:
            raise ConfigurationError(f"{name} has {arr.size} entries, expected {ids.size}")
    return out


@dataclass(frozen=True, eq=False)
class ModulatedLinkModel:
    graph: LatticeGraph
    Omega: float
    mod_amp: object = 0.3
    mod_phase: object = 0.0
    kappa: object = 0.01

    def __post_init__(self):
        if self.graph.scheme is not Scheme.MODULATED_LINK:
            raise ConfigurationError("ModulatedLinkModel needs a modulated-link lattice")
        if not self.Omega > 0:
            raise ConfigurationError("Omega must be > 0")
        mask = self.graph.kind_mask(SiteKind.INTERFACE)
        amp = _per_site(self.mod_amp, self.graph, mask, "mod_amp")
        if np.any(amp < 0):
            raise ConfigurationError("mod_amp must be >= 0")
        phase = _per_site(self.mod_phase, self.graph, mask, "mod_phase")
        kappa = np.broadcast_to(np.asarray(self.kappa, dtype=float), (self.graph.size,)).copy()
        if np.any(kappa < 0):
            raise ConfigurationError("kappa must be >= 0")
        object.__setattr__(self, "mod_amp", amp)
        object.__setattr__(self, "mod_phase", phase)
        object.__setattr__(self, "kappa", kappa)

    @property
    def size(self) -> int:
        return self.graph.size

    @property
    def uniform_kappa(self) -> float | None:
        k = self.kappa
        return float(k[0]) if np.all(k == k[0]) else None

    def static_hamiltonian(self) -> np.ndarray:
        H = self.graph.hopping_matrix()
        H[np.diag_indices(self.size)] += self.graph.omegas
        return H


def modulated_link_model(
    graph: LatticeGraph,
    flux: float = 0.0,
    *,
    Omega: float = 1.0,
    g0beta: float = 0.3,
    kappa=0.01,
) -> ModulatedLinkModel:
    """Model whose drive phases produce a uniform flux per optical plaquette.

    Hopping rightwards across an interface mode picks up ``-phi_I``, so the
    interface modes of row ``r`` are driven with phase ``-r * flux``.
    """
    mask = graph.kind_mask(SiteKind.INTERFACE)
    rows = graph.positions[:, 0]
    return ModulatedLinkModel(graph, Omega, g0beta, np.where(mask, -rows * flux, 0.0), kappa)


@dataclass(frozen=True, eq=False)
class FloquetOperator:
    """Hermitian extended-space operator plus the per-site loss it is used with."""

    S: int
    M: int
    Omega: float
    matrix: sp.csr_matrix = field(repr=False)
    kappa: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.S * (2 * self.M + 1)

    def index(self, site: int, block: int) -> int:
        return (block + self.M) * self.S + site

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and eigenvectors of the Hermitian part (computed once)."""
        return linalg.eigh(self.dense())

    def damped(self, omega: float) -> sp.csc_matrix:
        """``omega + i kappa/2 - H`` in the extended space."""
        loss = np.tile(self.kappa, 2 * self.M + 1)
        shift = sp.diags(omega + 0.5j * loss)
        return (shift - self.matrix).tocsc()


def build_floquet_hamiltonian(model: ModulatedLinkModel, M: int = DEFAULT_M) -> FloquetOperator:
    if int(M) != M or M < 1:
        raise ValueError("Fourier truncation M must be an integer >= 1")
    S = model.size
    nb = 2 * M + 1
    H0 = sp.csr_matrix(model.static_hamiltonian())
    ms = np.arange(-M, M + 1)
    diag = sp.kron(sp.identity(nb), H0) + sp.diags(np.repeat(ms * model.Omega, S))
    drive = model.mod_amp * np.exp(1j * model.mod_phase)
    up = sp.kron(sp.diags(np.ones(nb - 1), -1), sp.diags(drive))  # block (n+1, n)
    F = (diag + up + up.conj().T).tocsr()
    F.sum_duplicates()
    return FloquetOperator(S, int(M), float(model.Omega), F, model.kappa.copy())


class QuasiEnergies(NamedTuple):
    values: np.ndarray
    ambiguous: np.ndarray


def fold(values, Omega: float) -> np.ndarray:
    """Map into the zone ``[-Omega/2, Omega/2)``."""
    return np.mod(np.asarray(values) + 0.5 * Omega, Omega) - 0.5 * Omega


def quasienergies(F: FloquetOperator, tol: float = 1e-9) -> QuasiEnergies:
    """Physical quasienergies folded into the first zone, one per site.

    Of all eigenvalues of the truncated operator, the ``S`` states whose
    Fourier weight is centred closest to ``n = 0`` are kept (they suffer
    least from truncation).  Values within ``tol`` of the zone edge are
    flagged rather than silently assigned to one side.
    """
    w, v = F.eig
    nb = 2 * F.M + 1
    weight = (np.abs(v) ** 2).reshape(nb, F.S, -1).sum(axis=1)
    mean_n = np.arange(-F.M, F.M + 1) @ weight
    keep = np.sort(np.argsort(np.abs(mean_n), kind="stable")[: F.S])
    folded = fold(w[keep], F.Omega)
    edge = np.abs(np.abs(folded) - 0.5 * F.Omega) < tol
    if edge.any():
        warnings.warn(f"{int(edge.sum())} quasienergies on the zone edge", FoldingWarning, stacklevel=2)
    order = np.argsort(folded, kind="stable")
    return QuasiEnergies(folded[order], edge[order])


@dataclass(frozen=True)
class FloquetGreens:
    values: np.ndarray  # (2M+1, S), row m+M = m up-conversions
    omega: float
    probe: int
    M: int

    def at(self, m: int) -> np.ndarray:
        return self.values[m + self.M]


def _operator(model, M, operator):
    if operator is None:
        return build_floquet_hamiltonian(model, M)
    if operator.S != model.size:
        raise ConfigurationError("operator does not belong to this model")
    return operator


def _solve(A, rhs):
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise SolverError(f"Floquet resolvent is singular: {exc}") from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SolverError("Floquet resolvent solve produced non-finite values")
    return x


def floquet_greens(
    model: ModulatedLinkModel, omega: float, probe: int, M: int = DEFAULT_M, *, operator=None
) -> FloquetGreens:
    """``G(omega, m; j, l) = <<j, -m| (omega + i kappa/2 - H_F)^-1 |l, 0>>`` for all ``j, m``."""
    F = _operator(model, M, operator)
    rhs = np.zeros(F.dim, dtype=complex)
    rhs[F.index(probe, 0)] = 1.0
    x = _solve(F.damped(omega), rhs)
    blocks = x.reshape(2 * F.M + 1, F.S)
    return FloquetGreens(blocks[::-1].copy(), float(omega), int(probe), F.M)


def floquet_transmission(
    model: ModulatedLinkModel, omega: float, probe: int, M: int = DEFAULT_M, *, operator=None
) -> np.ndarray:
    """``t(m, j) = delta_jl delta_m0 - i kappa_j G(omega, m; j, l)``, shape ``(2M+1, S)``."""
    G = floquet_greens(model, omega, probe, M, operator=operator)
    t = -1j * model.kappa[None, :] * G.values
    t[G.M, probe] += 1.0
    return t


def _ldos_resolvent(F: FloquetOperator, site, grid, block, threads):
    idx = F.index(site, block)
    rhs = np.zeros(F.dim, dtype=complex)
    rhs[idx] = 1.0

    def one(w):
        return -2.0 * _solve(F.damped(w), rhs)[idx].imag

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return np.fromiter(pool.map(one, grid), float, len(grid))
    return np.array([one(w) for w in grid])


def floquet_ldos(
    model: ModulatedLinkModel,
    site: int,
    omega_grid,
    M: int = DEFAULT_M,
    *,
    sector: int = 0,
    method: str = "auto",
    operator: FloquetOperator | None = None,
    threads: int = 1,
) -> LDOSCurve:
    """``rho(w, j) = -2 Im G(w, 0; j, j)``.

    ``sector=m`` instead returns the spectral weight of the ``m``-times
    up-converted copy of site ``j`` (diagonal resolvent element in that
    Fourier block), which is nonnegative as well.
    ``method`` is ``"resolvent"`` (sparse solve per point), ``"eigen"``
    (Lorentzian sum over Floquet eigenstates, uniform loss only) or ``"auto"``.
    """
    grid = np.asarray(omega_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("omega grid is empty")
    F = _operator(model, M, operator)
    if abs(sector) > F.M:
        raise ValueError(f"sector {sector} outside truncation M={F.M}")
    kappa = model.uniform_kappa
    if kappa is not None and not kappa > 0 or kappa is None and model.kappa[site] <= 0:
        raise ConfigurationError("LDOS needs kappa > 0")
    if grid.size > 1 and kappa and np.max(np.diff(grid)) > kappa / 10 * (1 + 1e-9):
        warnings.warn("grid step exceeds kappa/10; peaks are under-resolved", CoverageWarning, stacklevel=2)
    if method == "auto":
        method = "eigen" if kappa is not None and F.dim <= EIGEN_MAX_DIM and grid.size > 50 else "resolvent"
    block = -sector
    if method == "eigen":
        if kappa is None:
            raise ConfigurationError("eigenstate LDOS requires uniform kappa")
        w, v = F.eig
        rho = lorentzian_sum(grid, w, np.abs(v[F.index(site, block)]) ** 2, kappa)
    elif method == "resolvent":
        rho = _ldos_resolvent(F, site, grid, block, threads)
    else:
        raise ValueError(f"unknown method {method!r}")
    meta = {"M": F.M, "sector": sector, "method": method, "site_omega": float(model.graph.sites[site].omega)}
    return LDOSCurve(grid, rho, int(site), float(kappa if kappa is not None else model.kappa[site]), meta)


class Convergence(NamedTuple):
    M_star: int
    max_change: float
    history: list


def floquet_convergence(
    model: ModulatedLinkModel,
    site: int,
    omega_points: Sequence[float],
    M_start: int = DEFAULT_M,
    tol: float = 1e-8,
    M_max: int = 64,
) -> Convergence:
    """Double ``M`` until the LDOS at ``omega_points`` changes by at most ``tol``."""
    pts = np.asarray(omega_points, dtype=float)

    def rho(M):
        # spot checks, not a spectral grid: the resolution warning does not apply
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CoverageWarning)
            return floquet_ldos(model, site, pts, M, method="resolvent").rho

    M = M_start
    prev = rho(M)
    history = []
    while True:
        nxt = rho(2 * M)
        change = float(np.max(np.abs(nxt - prev)))
        history.append((M, 2 * M, change))
        if change <= tol or 2 * M >= M_max:
            return Convergence(M, change, history)
        M, prev = 2 * M, nxt


def effective_hofstadter(model: ModulatedLinkModel, J: float | None = None) -> tuple[LatticeGraph, PhaseField]:
    """Square lattice of the optical (non-interface) sites with the effective Peierls phases.

    Each ``A - I - B`` chain becomes one bond with phase ``-phi_I`` in the
    rightward direction; vertical bonds between optical sites carry no phase.
    The returned graph uses the perturbative ``j_eff`` on horizontal bonds.
    """
    g = model.graph
    optical = [s for s in g.sites if s.kind is not SiteKind.INTERFACE]
    new_id = {s.id: k for k, s in enumerate(optical)}
    ncols = len({s.pos[1] for s in optical})
    sites = [Site(k, s.kind, (s.pos[0], float(round(s.pos[1]))), s.omega) for k, s in enumerate(optical)]
    horiz = {}
    for ln in g.links:
        if ln.kind is LinkKind.PHOTON_HOP and ln.i in new_id and ln.j in new_id:
            horiz[(new_id[ln.i], new_id[ln.j])] = (ln.amplitude, 0.0, LinkKind.PHOTON_HOP)
    for s in g.sites:
        if s.kind is not SiteKind.INTERFACE:
            continue
        nb = sorted((n for n in g.neighbors(s.id) if g.sites[n].pos[0] == s.pos[0]), key=lambda n: g.sites[n].pos[1])
        if len(nb) != 2:
            continue
        a, b = nb
        JA = J if J is not None else _link_amp(g, a, s.id)
        JB = J if J is not None else _link_amp(g, s.id, b)
        dA = g.sites[a].omega - s.omega
        dB = g.sites[b].omega - s.omega
        j = pert.jeff_modulated(JA, JB, model.mod_amp[s.id], dA, dB)
        horiz[(new_id[a], new_id[b])] = (j, -model.mod_phase[s.id], LinkKind.PHOTON_HOP)
    links = [Link(i, j, kind, amp, ph) for (i, j), (amp, ph, kind) in horiz.items()]
    eff = LatticeGraph(sites, links, g.rows, ncols, Scheme.IDEAL_HOFSTADTER)
    return eff, eff.phase_field()


def _link_amp(g: LatticeGraph, a: int, b: int) -> float:
    for ln in g.links:
        if {ln.i, ln.j} == {a, b}:
            return ln.amplitude
    raise ConfigurationError(f"sites {a} and {b} are not linked")


def resonant_splitting(
    model_at, site_a: int, site_b: int, center: float, halfwidth: float, M: int = DEFAULT_M
) -> pert.Splitting:
    """Minimum quasienergy gap of the pair ``|a, 0>``, ``|b, -1>`` over the modulation frequency.

    ``model_at(Omega)`` builds the model for a given modulation frequency.
    """

    def matrix(Om):
        F = build_floquet_hamiltonian(model_at(Om), M)
        return F.dense()

    F0 = build_floquet_hamiltonian(model_at(center), M)
    return pert.minimal_pair_gap(matrix, F0.index(site_a, 0), F0.index(site_b, -1), center, halfwidth)

