"""Artificial magnetic fields for photons in optomechanical lattices.

Submodules: ``lattice`` (geometry and gauge fields), ``hofstadter`` (ideal
reference model), ``floquet`` (modulated-link scheme), ``pert`` (effective
couplings), ``response`` (wavelength-conversion transport), ``analysis``
(derived metrics) and ``cli``.
"""

__version__ = "0.1.0"
