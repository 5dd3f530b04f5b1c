"""Independent time-domain oracles.

Both integrate the damped, driven amplitude equations directly with an
explicit Runge-Kutta scheme until transients have decayed, then extract the
steady-state Fourier components.  Nothing here uses the package's Floquet
or resolvent code.
"""

import numpy as np
from scipy.integrate import solve_ivp


def _integrate(rhs, n, t_end, t_samples):
    y0 = np.zeros(2 * n)

    def real_rhs(t, y):
        a = y[:n] + 1j * y[n:]
        d = rhs(t, a)
        return np.concatenate([d.real, d.imag])

    sol = solve_ivp(real_rhs, (0.0, t_end), y0, method="DOP853", rtol=1e-12, atol=1e-13, t_eval=t_samples)
    return sol.y[:n] + 1j * sol.y[n:]


def modulated_steady_state(H0, interface, amp, phase, Omega, kappa, omega, probe, n_periods=120, samples=64):
    """Fourier amplitudes ``c[m, j]`` of ``a_j(t) = sum_m c[m, j] exp(-i (omega + m Omega) t)``.

    Equation of motion (unit input amplitude):
    ``da/dt = -i (H(t) - i kappa/2) a + sqrt(kappa) exp(-i omega t) e_probe`` with
    ``H(t) = H0 + sum_I 2 amp_I cos(Omega t + phase_I) |I><I|``.
    ``m`` runs over ``-M..M`` with ``M = samples // 2 - 1``.
    """
    H0 = np.asarray(H0, dtype=complex)
    n = len(H0)
    interface = np.asarray(interface)
    amp = np.asarray(amp, dtype=float)
    phase = np.asarray(phase, dtype=float)
    k = np.broadcast_to(np.asarray(kappa, dtype=float), (n,))
    drive = np.zeros(n, dtype=complex)
    drive[probe] = np.sqrt(k[probe])

    def rhs(t, a):
        mod = np.zeros(n)
        mod[interface] = 2 * amp * np.cos(Omega * t + phase)
        return -1j * (H0 @ a + mod * a) - 0.5 * k * a + drive * np.exp(-1j * omega * t)

    T = 2 * np.pi / Omega
    t0 = n_periods * T
    ts = t0 + T * np.arange(samples) / samples
    a = _integrate(rhs, n, ts[-1], ts)
    # b(t) = a(t) exp(i omega t) is T-periodic: b = sum_m c_m exp(-i m Omega t)
    b = a * np.exp(1j * omega * ts)[None, :]
    coeffs = np.fft.fft(b, axis=1) / samples
    M = samples // 2 - 1
    out = np.zeros((2 * M + 1, n), dtype=complex)
    phase0 = np.exp(-1j * Omega * np.outer(np.arange(-M, M + 1), -t0))
    for idx, m in enumerate(range(-M, M + 1)):
        # exp(-i m Omega t) = exp(2 pi i q s / N) with q = -m
        out[idx] = coeffs[:, (-m) % samples] * phase0[idx]
    return out


def static_steady_state(D, delta_p, probe, kappa, t_end=None, alpha=1.0):
    """Steady amplitude ``A`` of ``da/dt = -i D a + sqrt(kappa) alpha exp(-i delta_p t) e_probe``."""
    D = np.asarray(D, dtype=complex)
    n = len(D)
    drive = np.zeros(n, dtype=complex)
    drive[probe] = np.sqrt(kappa) * alpha
    rate = np.min(-np.linalg.eigvals(D).imag)
    t_end = t_end or 40.0 / rate

    def rhs(t, a):
        return -1j * (D @ a) + drive * np.exp(-1j * delta_p * t)

    a = _integrate(rhs, n, t_end, np.array([t_end]))[:, -1]
    return a * np.exp(1j * delta_p * t_end)
