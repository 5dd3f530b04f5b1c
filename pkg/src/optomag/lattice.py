"""Lattice geometries and gauge-field bookkeeping.

Every scheme (modulated links, wavelength conversion, Aharonov-Bohm ring,
synthetic ladder, ideal Hofstadter grid) is represented by one
:class:`LatticeGraph`: a list of sites plus undirected links, each link
stored once with a direction ``i -> j`` and a Peierls phase for that
direction.  The single-particle Hamiltonian element generated by a link is

    H[j, i] = -amplitude * exp(1j * phase)        H[i, j] = conj(H[j, i])

Coordinates are ``(row, col)`` with the row axis pointing *down* (image
convention) and lattice constant 1.  Interface and mechanical link modes sit
at half-integer positions, on the bond they mediate.  A plaquette is
traversed counterclockwise as drawn on screen,

    (r, c) -> (r+1, c) -> (r+1, c+1) -> (r, c+1) -> (r, c),

so that the Landau gauge with phase ``r * flux`` on the row-``r``
horizontal bonds carries ``+flux`` through every plaquette.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError


class SiteKind(str, Enum):
    OPTICAL_A = "OpticalA"
    OPTICAL_B = "OpticalB"
    INTERFACE = "Interface"
    MECHANICAL = "Mechanical"

    @property
    def is_optical(self) -> bool:
        return self is not SiteKind.MECHANICAL


class LinkKind(str, Enum):
    PHOTON_HOP = "PhotonHop"
    OPTOMECHANICAL = "OptomechanicalCoupling"
    MODULATED_NEIGHBOR = "ModulatedNeighbor"
    PHONON_HOP = "PhononHop"


class Scheme(str, Enum):
    MODULATED_LINK = "ModulatedLink"
    CONVERSION = "Conversion"
    AB_RING = "ABRing"
    SYNTHETIC_LADDER = "SyntheticLadder"
    IDEAL_HOFSTADTER = "IdealHofstadter"


_MECHANICAL_SCHEMES = {Scheme.CONVERSION, Scheme.AB_RING, Scheme.SYNTHETIC_LADDER}


@dataclass(frozen=True)
class Site:
    id: int
    kind: SiteKind
    pos: tuple[float, float]
    omega: float = 0.0

    @property
    def is_optical(self) -> bool:
        return self.kind.is_optical


@dataclass(frozen=True)
class Link:
    i: int
    j: int
    kind: LinkKind
    amplitude: float
    phase: float = 0.0


def wrap_phase(x):
    """Reduce angles into the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


class PhaseField(Mapping):
    """Peierls phases on directed links, antisymmetric by construction.

    Each link is stored once; looking up the reverse direction returns the
    exact negative, so ``field[i, j] + field[j, i] == 0`` holds bitwise.
    """

    def __init__(self, phases: Mapping[tuple[int, int], float] | Iterable = ()):
        items = phases.items() if isinstance(phases, Mapping) else phases
        store: dict[tuple[int, int], float] = {}
        for (i, j), value in items:
            i, j, value = int(i), int(j), float(value)
            if i == j:
                raise ConfigurationError(f"phase on self-link ({i}, {i})")
            if (j, i) in store:
                if store[(j, i)] != -value:
                    raise ConfigurationError(f"phases on ({i},{j}) and ({j},{i}) are not antisymmetric")
                continue
            store[(i, j)] = value
        self._phases = MappingProxyType(store)

    def __getitem__(self, key):
        i, j = key
        try:
            return self._phases[(i, j)]
        except KeyError:
            return -self._phases[(j, i)]

    def __iter__(self):
        return iter(self._phases)

    def __len__(self):
        return len(self._phases)

    def __repr__(self):
        return f"PhaseField({len(self)} links)"

    def negated(self) -> "PhaseField":
        return PhaseField({k: -v for k, v in self._phases.items()})

    def get_phase(self, i: int, j: int, default: float = 0.0) -> float:
        try:
            return self[i, j]
        except KeyError:
            return default


@dataclass(frozen=True)
class FluxPattern:
    """Plaquette fluxes keyed by the plaquette's upper-left corner ``(row, col)``."""

    flux: Mapping[tuple[int, int], float]

    def __len__(self):
        return len(self.flux)

    def values(self) -> np.ndarray:
        return np.array([self.flux[k] for k in sorted(self.flux)])

    def keys(self):
        return sorted(self.flux)


@dataclass(frozen=True)
class LatticeGraph:
    sites: tuple[Site, ...]
    links: tuple[Link, ...]
    rows: int
    cols: int
    scheme: Scheme
    ports: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "ports", MappingProxyType(dict(self.ports)))
        self._validate()
        pos_index = {s.pos: s.id for s in self.sites}
        object.__setattr__(self, "_pos_index", pos_index)

    # -- validation -------------------------------------------------------

    def _validate(self):
        n = len(self.sites)
        if n == 0:
            raise DimensionError("lattice has no sites")
        if [s.id for s in self.sites] != list(range(n)):
            raise ConfigurationError("site ids must be dense 0..S-1 in order")
        if len({s.pos for s in self.sites}) != n:
            raise ConfigurationError("site positions must be unique")
        for s in self.sites:
            if s.kind is SiteKind.INTERFACE and self.scheme is not Scheme.MODULATED_LINK:
                raise ConfigurationError("interface sites only occur in modulated-link lattices")
            if s.kind is SiteKind.MECHANICAL and self.scheme not in _MECHANICAL_SCHEMES:
                raise ConfigurationError(f"mechanical sites not allowed in {self.scheme.value} lattices")
        for ln in self.links:
            if not (0 <= ln.i < n and 0 <= ln.j < n):
                raise ConfigurationError(f"link ({ln.i}, {ln.j}) references a missing site")
            if ln.i == ln.j:
                raise ConfigurationError(f"self-link on site {ln.i}")
            if ln.amplitude < 0:
                raise ConfigurationError("link amplitudes are magnitudes and must be >= 0")
            a, b = self.sites[ln.i], self.sites[ln.j]
            opt = (a.is_optical, b.is_optical)
            if ln.kind in (LinkKind.PHOTON_HOP, LinkKind.MODULATED_NEIGHBOR) and opt != (True, True):
                raise ConfigurationError(f"{ln.kind.value} must connect optical sites")
            if ln.kind is LinkKind.OPTOMECHANICAL and sorted(opt) != [False, True]:
                raise ConfigurationError("optomechanical links join one optical and one mechanical site")
            if ln.kind is LinkKind.PHONON_HOP and opt != (False, False):
                raise ConfigurationError("phonon hopping joins mechanical sites")
            if ln.kind is LinkKind.MODULATED_NEIGHBOR and SiteKind.INTERFACE not in (a.kind, b.kind):
                raise ConfigurationError("modulated-neighbor links must touch an interface site")
        if not self._connected():
            raise ConfigurationError("lattice graph is not connected")

    def _connected(self) -> bool:
        n = len(self.sites)
        adj = [[] for _ in range(n)]
        for ln in self.links:
            adj[ln.i].append(ln.j)
            adj[ln.j].append(ln.i)
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == n

    # -- accessors --------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.sites)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.pos for s in self.sites], dtype=float)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([s.omega for s in self.sites], dtype=float)

    @property
    def optical_mask(self) -> np.ndarray:
        return np.array([s.is_optical for s in self.sites])

    def kind_mask(self, kind: SiteKind) -> np.ndarray:
        return np.array([s.kind is kind for s in self.sites])

    def site_at(self, row: float, col: float) -> int:
        try:
            return self._pos_index[(float(row), float(col))]
        except KeyError:
            raise KeyError(f"no site at ({row}, {col})") from None

    def phase_field(self) -> PhaseField:
        return PhaseField({(ln.i, ln.j): ln.phase for ln in self.links})

    def with_phases(self, phases: PhaseField) -> "LatticeGraph":
        """Copy of the graph with link phases taken from ``phases`` (missing links get 0)."""
        links = tuple(
            Link(ln.i, ln.j, ln.kind, ln.amplitude, phases.get_phase(ln.i, ln.j)) for ln in self.links
        )
        return LatticeGraph(self.sites, links, self.rows, self.cols, self.scheme, dict(self.ports))

    def hopping_matrix(self, phases: PhaseField | None = None) -> np.ndarray:
        """Dense off-diagonal part of the Hamiltonian, ``H[j,i] = -A exp(i theta_{i->j})``."""
        n = self.size
        H = np.zeros((n, n), dtype=complex)
        for ln in self.links:
            theta = ln.phase if phases is None else phases.get_phase(ln.i, ln.j)
            h = -ln.amplitude * np.exp(1j * theta)
            H[ln.j, ln.i] += h
            H[ln.i, ln.j] += np.conj(h)
        return H

    def neighbors(self, site: int) -> list[int]:
        out = []
        for ln in self.links:
            if ln.i == site:
                out.append(ln.j)
            elif ln.j == site:
                out.append(ln.i)
        return out


# ---------------------------------------------------------------------------
# builders


def _check_dims(rows, cols):
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise DimensionError(f"lattice dimensions must be positive integers, got {rows}x{cols}")


def _disorder(disorder, n):
    if disorder is None:
        return np.zeros(n)
    d = np.asarray(disorder, dtype=float).ravel()
    if d.shape != (n,):
        raise ConfigurationError(f"disorder needs {n} entries, got {d.size}")
    return d


def build_modulated_link_lattice(
    rows: int,
    cols: int,
    omega_profile: float | Sequence[float] = 0.5,
    J: float = 0.3,
    *,
    j_vertical: float | None = None,
    disorder=None,
) -> LatticeGraph:
    """Grid of rows ``A, I, B, I, A, ...`` for the modulated-link scheme.

    ``cols`` counts every mode in a row, interface modes included.
    ``omega_profile`` is either the frequency step between neighbouring
    columns (``0.5`` gives ``0, 0.5, 1, ...``) or an explicit per-column list.
    Rows are joined by plain photon hopping ``j_vertical`` (defaults to ``J``)
    between all vertically aligned modes.
    """
    _check_dims(rows, cols)
    if np.ndim(omega_profile) == 0:
        col_omega = float(omega_profile) * np.arange(cols)
    else:
        col_omega = np.asarray(omega_profile, dtype=float)
        if col_omega.shape != (cols,):
            raise ConfigurationError(f"omega_profile needs {cols} entries")
    jv = J if j_vertical is None else j_vertical
    offsets = _disorder(disorder, rows * cols)
    kinds = {0: SiteKind.OPTICAL_A, 1: SiteKind.INTERFACE, 2: SiteKind.OPTICAL_B, 3: SiteKind.INTERFACE}
    sites = []
    for r in range(rows):
        for c in range(cols):
            sid = r * cols + c
            sites.append(Site(sid, kinds[c % 4], (float(r), c / 2), col_omega[c] + offsets[sid]))
    links = []
    for r in range(rows):
        for c in range(cols - 1):
            links.append(Link(r * cols + c, r * cols + c + 1, LinkKind.MODULATED_NEIGHBOR, J))
    for r in range(rows - 1):
        for c in range(cols):
            links.append(Link(r * cols + c, (r + 1) * cols + c, LinkKind.PHOTON_HOP, jv))
    return LatticeGraph(sites, links, rows, cols, Scheme.MODULATED_LINK)


def landau_laser_phases(rows: int, cols: int, flux: float) -> np.ndarray:
    """Per-optical-site laser phases ``k * r * flux`` for the conversion scheme.

    The effective hop from optical site ``k`` to ``k+1`` in row ``r`` picks up
    the phase difference of the two lasers, ``r * flux``: a Landau gauge.
    """
    r = np.arange(rows)[:, None]
    k = np.arange(cols)[None, :]
    return (r * k * flux).astype(float)


def build_conversion_lattice(rows: int, cols: int, g, J: float, *, disorder=None) -> LatticeGraph:
    """Grid of rows ``A, b, B, b, A, ...`` for the wavelength-conversion scheme.

    ``cols`` counts optical sites per row; a mechanical mode sits on every
    horizontal bond, giving ``rows * (2*cols - 1)`` sites.  ``g`` is the
    complex optomechanical coupling, either one value or a ``(rows, cols)``
    array with one entry per optical site (its laser phase).  Both couplings
    of an optical site ``j`` enter as ``-g_j a_j^dag b + h.c.``.  Rows are
    joined by phase-free photon hopping ``J``.
    ``Site.omega`` holds per-site offsets from the rotating-frame frequency.
    """
    _check_dims(rows, cols)
    g = np.broadcast_to(np.asarray(g, dtype=complex), (rows, cols))
    width = 2 * cols - 1
    offsets = _disorder(disorder, rows * width)
    sites = []
    for r in range(rows):
        for x in range(width):
            sid = r * width + x
            if x % 2:
                kind = SiteKind.MECHANICAL
            else:
                kind = SiteKind.OPTICAL_A if (x // 2) % 2 == 0 else SiteKind.OPTICAL_B
            sites.append(Site(sid, kind, (float(r), x / 2), offsets[sid]))
    links = []
    for r in range(rows):
        for k in range(cols):
            opt = r * width + 2 * k
            amp, ph = float(abs(g[r, k])), float(np.angle(g[r, k]))
            for mech in (opt - 1, opt + 1):
                if 0 <= mech - r * width < width:
                    links.append(Link(mech, opt, LinkKind.OPTOMECHANICAL, amp, ph))
    for r in range(rows - 1):
        for k in range(cols):
            links.append(Link(r * width + 2 * k, (r + 1) * width + 2 * k, LinkKind.PHOTON_HOP, J))
    return LatticeGraph(sites, links, rows, cols, Scheme.CONVERSION)


def build_ab_ring(g: float, J: float, flux: float) -> LatticeGraph:
    """Minimal two-path ring of conversion cells with an input and an output lead.

    Layout (rows down)::

        in -- P ~b~ U
              b     b
              L ~b~ Q -- out

    Every ring bond ``P-U``, ``U-Q``, ``P-L``, ``L-Q`` is mediated by a
    mechanical mode; the leads attach by photon hopping ``J``.  The flux,
    reduced into (-pi, pi], is spread evenly over the eight ring links in the
    counterclockwise direction.  ``ports`` names the lead sites.
    """
    phi = float(wrap_phase(flux)) / 8.0
    layout = [
        ("in", SiteKind.OPTICAL_B, (0.0, 0.0)),
        ("P", SiteKind.OPTICAL_A, (0.0, 1.0)),
        ("U", SiteKind.OPTICAL_B, (0.0, 2.0)),
        ("L", SiteKind.OPTICAL_B, (1.0, 1.0)),
        ("Q", SiteKind.OPTICAL_A, (1.0, 2.0)),
        ("out", SiteKind.OPTICAL_B, (1.0, 3.0)),
        ("bPL", SiteKind.MECHANICAL, (0.5, 1.0)),
        ("bLQ", SiteKind.MECHANICAL, (1.0, 1.5)),
        ("bQU", SiteKind.MECHANICAL, (0.5, 2.0)),
        ("bUP", SiteKind.MECHANICAL, (0.0, 1.5)),
    ]
    ids = {name: n for n, (name, _, _) in enumerate(layout)}
    sites = [Site(n, kind, pos) for n, (_, kind, pos) in enumerate(layout)]
    # counterclockwise: P -> L -> Q -> U -> P
    loop = ["P", "bPL", "L", "bLQ", "Q", "bQU", "U", "bUP", "P"]
    links = [Link(ids["in"], ids["P"], LinkKind.PHOTON_HOP, J), Link(ids["Q"], ids["out"], LinkKind.PHOTON_HOP, J)]
    for a, b in zip(loop[:-1], loop[1:]):
        links.append(Link(ids[a], ids[b], LinkKind.OPTOMECHANICAL, g, phi))
    return LatticeGraph(sites, links, 2, 4, Scheme.AB_RING, {"input": ids["in"], "output": ids["out"]})


def build_synthetic_ladder(n: int, dphi: float, g: float, J: float, K: float) -> LatticeGraph:
    """Optomechanical chain viewed as a two-rail ladder along the synthetic dimension.

    Row 0 holds the optical modes (hopping ``J``), row 1 the mechanical modes
    (hopping ``K``).  Rung ``j`` is the coupling ``-g e^{i j dphi} a_j^dag b_j``
    produced by a tilted laser, so every synthetic plaquette carries ``dphi``.
    """
    if int(n) != n or n < 2:
        raise DimensionError("a ladder needs at least two rungs")
    sites = [Site(j, SiteKind.OPTICAL_A, (0.0, float(j))) for j in range(n)]
    sites += [Site(n + j, SiteKind.MECHANICAL, (1.0, float(j))) for j in range(n)]
    links = [Link(j, j + 1, LinkKind.PHOTON_HOP, J) for j in range(n - 1)]
    links += [Link(n + j, n + j + 1, LinkKind.PHONON_HOP, K) for j in range(n - 1)]
    links += [Link(n + j, j, LinkKind.OPTOMECHANICAL, g, j * dphi) for j in range(n)]
    return LatticeGraph(sites, links, 2, n, Scheme.SYNTHETIC_LADDER)


def build_square_lattice(rows: int, cols: int, J: float = 1.0, *, periodic: bool = False) -> LatticeGraph:
    """Plain square grid of optical sites, ``id = r * cols + c``."""
    _check_dims(rows, cols)
    sites = [Site(r * cols + c, SiteKind.OPTICAL_A, (float(r), float(c))) for r in range(rows) for c in range(cols)]
    links = []
    for i, j in _square_bonds(rows, cols, periodic):
        links.append(Link(i, j, LinkKind.PHOTON_HOP, J))
    return LatticeGraph(sites, links, rows, cols, Scheme.IDEAL_HOFSTADTER)


def _square_bonds(rows, cols, periodic):
    bonds = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                bonds.append((i, i + 1))
            elif periodic and cols > 2:
                bonds.append((i, r * cols))
            if r + 1 < rows:
                bonds.append((i, i + cols))
            elif periodic and rows > 2:
                bonds.append((i, c))
    return bonds


# ---------------------------------------------------------------------------
# gauge fields


def landau_gauge_phases(rows: int, cols: int, flux_per_plaquette: float, *, periodic: bool = False) -> PhaseField:
    """Landau gauge on a ``rows x cols`` square grid.

    Horizontal bonds in row ``r`` carry ``r * flux``, vertical bonds carry 0.
    With ``periodic=True`` the wrap-around bonds are included as well; the
    vertical wrap bond in column ``c`` then carries ``-c * rows * flux``,
    which is consistent only when ``rows * cols * flux`` is a multiple of 2 pi.
    """
    _check_dims(rows, cols)
    phases = {}
    for i, j in _square_bonds(rows, cols, periodic):
        r, c = divmod(i, cols)
        if j // cols == r:
            phases[(i, j)] = r * flux_per_plaquette
        elif j == i + cols:
            phases[(i, j)] = 0.0
        else:
            phases[(i, j)] = -c * rows * flux_per_plaquette
    return PhaseField(phases)


def _integral(pos):
    return float(pos[0]).is_integer() and float(pos[1]).is_integer()


def effective_bonds(graph: LatticeGraph, phases: PhaseField) -> dict[tuple[int, int], float]:
    """Directed bonds between integer-position sites with their accumulated phase.

    Mid-sites (half-integer positions) are collapsed onto the bond they sit
    on; links between two mid-sites are ignored.
    """
    pos = {s.id: s.pos for s in graph.sites}
    adj: dict[int, list[int]] = {s.id: [] for s in graph.sites}
    bonds: dict[tuple[int, int], float] = {}
    for ln in graph.links:
        adj[ln.i].append(ln.j)
        adj[ln.j].append(ln.i)
        if _integral(pos[ln.i]) and _integral(pos[ln.j]):
            d = abs(pos[ln.i][0] - pos[ln.j][0]) + abs(pos[ln.i][1] - pos[ln.j][1])
            if d == 1:
                th = phases.get_phase(ln.i, ln.j)
                bonds[(ln.i, ln.j)] = th
                bonds[(ln.j, ln.i)] = -th
    for s in graph.sites:
        if _integral(s.pos):
            continue
        ends = [n for n in adj[s.id] if _integral(pos[n])]
        for a in ends:
            for b in ends:
                if a < b and pos[a][0] + pos[b][0] == 2 * s.pos[0] and pos[a][1] + pos[b][1] == 2 * s.pos[1]:
                    th = phases.get_phase(a, s.id) + phases.get_phase(s.id, b)
                    bonds[(a, b)] = th
                    bonds[(b, a)] = -th
    return bonds


def plaquette_fluxes(graph: LatticeGraph, phases: PhaseField | None = None) -> FluxPattern:
    """Counterclockwise phase sum around every unit square, reduced into (-pi, pi]."""
    if phases is None:
        phases = graph.phase_field()
    bonds = effective_bonds(graph, phases)
    at = {s.pos: s.id for s in graph.sites if _integral(s.pos)}
    flux = {}
    for (r, c), a in sorted(at.items()):
        corners = [(r + 1, c), (r + 1, c + 1), (r, c + 1)]
        if not all(p in at for p in corners):
            continue
        cycle = [a] + [at[p] for p in corners] + [a]
        edges = list(zip(cycle[:-1], cycle[1:]))
        if all(e in bonds for e in edges):
            flux[(int(r), int(c))] = float(wrap_phase(sum(bonds[e] for e in edges)))
    return FluxPattern(dict(sorted(flux.items())))


def apply_gauge_transform(phases: PhaseField, xi) -> PhaseField:
    """``theta(i->j) <- theta(i->j) + xi[j] - xi[i]``; fluxes are unchanged."""
    xi = np.asarray(xi, dtype=float)
    return PhaseField({(i, j): th + xi[j] - xi[i] for (i, j), th in phases.items()})
