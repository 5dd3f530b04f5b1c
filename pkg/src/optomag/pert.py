"""Perturbative effective couplings for both schemes.

The modulated-link scheme is reduced to an effective two-level problem by
a Schrieffer-Wolff elimination of the interface mode inside the 4 x 4 block
of the Floquet Hamiltonian spanned by ``|A,0>, |B,1>, |I,0>, |I,1>``.  The
wavelength-conversion scheme eliminates the far-detuned mechanical mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import linalg, optimize

from .errors import DegenerateDenominatorError, ResonantDivergenceError


@dataclass(frozen=True)
class FourLevelBlock:
    omega_A: float
    omega_B: float
    omega_I: float
    Omega: float
    J_A: float
    J_B: float
    g0beta: complex

    @property
    def detunings(self) -> tuple[float, float]:
        return self.omega_A - self.omega_I, self.omega_B - self.omega_I

    @property
    def epsilon(self) -> float:
        dA, dB = self.detunings
        return max(self.J_A / abs(dA), self.J_B / abs(dB), abs(self.g0beta) / abs(self.Omega))

    def with_omega(self, Omega: float) -> "FourLevelBlock":
        return FourLevelBlock(self.omega_A, self.omega_B, self.omega_I, Omega, self.J_A, self.J_B, self.g0beta)


@dataclass(frozen=True)
class EffectiveBlock:
    omega_tilde_A: float
    omega_tilde_B: float
    j_eff: float
    phi: float
    Omega: float = 0.0

    @property
    def matrix(self) -> np.ndarray:
        off = self.j_eff * np.exp(-1j * self.phi)
        return np.array([[self.omega_tilde_A, off], [np.conj(off), self.omega_tilde_B + self.Omega]])

    @property
    def resonant_omega(self) -> float:
        """Modulation frequency at which the two dressed levels cross."""
        return self.omega_tilde_A - self.omega_tilde_B


def four_level_block(params: FourLevelBlock) -> np.ndarray:
    p = params
    gb = complex(p.g0beta)
    return np.array(
        [
            [p.omega_A, 0, -p.J_A, 0],
            [0, p.omega_B + p.Omega, 0, -p.J_B],
            [-p.J_A, 0, p.omega_I, gb],
            [0, -p.J_B, np.conj(gb), p.omega_I + p.Omega],
        ],
        dtype=complex,
    )


def jeff_modulated(J_A, J_B, g0beta_mag, dA, dB, *, signed: bool = False) -> float:
    """``g0|beta| J_A J_B / (dA dB)``; the magnitude unless ``signed`` is set."""
    if dA == 0 or dB == 0:
        raise DegenerateDenominatorError("interface mode degenerate with a lattice site")
    value = g0beta_mag * J_A * J_B / (dA * dB)
    return float(value if signed else abs(value))


def schrieffer_wolff_effective(block: FourLevelBlock) -> EffectiveBlock:
    dA, dB = block.detunings
    if dA == 0 or dB == 0:
        raise DegenerateDenominatorError("omega_A or omega_B coincides with omega_I")
    gb = complex(block.g0beta)
    signed = jeff_modulated(block.J_A, block.J_B, abs(gb), dA, dB, signed=True)
    # matrix[0, 1] = j e^{-i phi} must equal J_A J_B g0beta / (dA dB)
    phi = -np.angle(gb) if gb != 0 else 0.0
    if signed < 0:
        phi += np.pi
    phi = float(np.pi - np.mod(np.pi - phi, 2 * np.pi))
    return EffectiveBlock(
        block.omega_A + block.J_A**2 / dA,
        block.omega_B + block.J_B**2 / dB,
        abs(signed),
        phi,
        block.Omega,
    )


def jeff_conversion(gA: complex, gB: complex, delta: float) -> complex:
    """Complex effective hopping ``conj(gA) gB / delta`` of the conversion scheme.

    Magnitude ``|gA||gB|/delta``, phase ``arg gB - arg gA``.
    """
    if delta == 0:
        raise ResonantDivergenceError("mechanical mode resonant with the optical sites (delta = 0)")
    return complex(np.conj(gA) * gB / delta)


# ---------------------------------------------------------------------------
# exact dressed-pair splitting


class Splitting(NamedTuple):
    splitting: float
    Omega: float


def pair_gap(H: np.ndarray, a: int, b: int) -> float:
    """Gap between the two eigenvectors carrying most weight on basis states ``a`` and ``b``."""
    w, v = linalg.eigh(H)
    score = np.abs(v[a]) ** 2 + np.abs(v[b]) ** 2
    top = np.argsort(score)[-2:]
    return float(abs(w[top[1]] - w[top[0]]))


def minimal_pair_gap(
    matrix_at: Callable[[float], np.ndarray],
    a: int,
    b: int,
    center: float,
    halfwidth: float,
    points: int = 41,
) -> Splitting:
    """Minimize the avoided-crossing gap of states ``a``, ``b`` over the modulation frequency.

    A coarse scan over ``center +- halfwidth`` brackets the anticrossing,
    then bounded Brent refines it.
    """
    scan = np.linspace(center - halfwidth, center + halfwidth, points)
    gaps = [pair_gap(matrix_at(x), a, b) for x in scan]
    k = int(np.argmin(gaps))
    lo = scan[max(k - 1, 0)]
    hi = scan[min(k + 1, points - 1)]
    res = optimize.minimize_scalar(
        lambda x: pair_gap(matrix_at(x), a, b), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
    )
    if res.fun > gaps[k]:
        return Splitting(float(gaps[k]), float(scan[k]))
    return Splitting(float(res.fun), float(res.x))


def exact_splitting(block: FourLevelBlock) -> Splitting:
    """Minimum gap between the dressed ``|A,0>`` / ``|B,1>`` pair of the 4 x 4 block.

    The modulation frequency is tuned through the anticrossing; none of the
    energy denominators depend on it, so the minimum gap is the exact
    counterpart of ``2 j_eff``.
    """
    eff = schrieffer_wolff_effective(block)
    halfwidth = max(8 * eff.j_eff, 1e-6 * max(1.0, abs(eff.resonant_omega)))
    return minimal_pair_gap(lambda x: four_level_block(block.with_omega(x)), 0, 1, eff.resonant_omega, halfwidth)


class ConvergenceRow(NamedTuple):
    eps: float
    splitting_exact: float
    two_jeff: float
    rel_err: float


def scaled_block(eps: float, detuning: float = 0.5, Omega: float = 1.0) -> FourLevelBlock:
    """Block with ``J = eps*detuning`` and ``g0|beta| = eps*Omega`` so every small ratio equals ``eps``."""
    return FourLevelBlock(
        omega_A=0.0,
        omega_B=-2 * detuning,
        omega_I=-detuning,
        Omega=Omega,
        J_A=eps * detuning,
        J_B=eps * detuning,
        g0beta=eps * Omega,
    )


def convergence_table(eps_values: Sequence[float] = (0.1, 0.05, 0.025), detuning: float = 0.5) -> list[ConvergenceRow]:
    rows = []
    for eps in eps_values:
        block = scaled_block(eps, detuning)
        two_j = 2 * schrieffer_wolff_effective(block).j_eff
        exact = exact_splitting(block).splitting
        rows.append(ConvergenceRow(float(eps), exact, two_j, abs(exact - two_j) / two_j))
    return rows
