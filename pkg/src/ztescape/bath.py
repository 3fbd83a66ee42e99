"""Ohmic environment: spectral density, noise/dissipation transforms and angle-averaged coefficients.

Frequencies above the sharp cutoff ``omega_c`` are removed from the noise.  Only the
resonant (delta-function) parts of the ``D_n``/``N_n`` integrals are kept; the
principal-value parts cancel pairwise in the sums over ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ParameterError
from .model import FourierTable

DEFAULT_CUTOFF = 50.0


@dataclass(frozen=True)
class BathSpec:
    """Ohmic bath with friction ``eta``, noise cutoff ``omega_c`` and temperature ``kT``.

    ``gamma = eta/(2M)`` needs the system mass, see :meth:`gamma` and :meth:`from_gamma`.
    """

    eta: float
    omega_c: float = DEFAULT_CUTOFF
    kT: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta >= 0.0):
            raise ParameterError(f"eta must be >= 0, got {self.eta!r}")
        if not (math.isfinite(self.omega_c) and self.omega_c > 0.0):
            raise ParameterError(f"omega_c must be > 0, got {self.omega_c!r}")
        if not (math.isfinite(self.kT) and self.kT >= 0.0):
            raise ParameterError(f"kT must be >= 0, got {self.kT!r}")

    @classmethod
    def from_gamma(cls, gamma: float, mass: float = 1.0, omega_c: float = DEFAULT_CUTOFF,
                   kT: float = 0.0) -> "BathSpec":
        return cls(eta=2.0 * mass * gamma, omega_c=omega_c, kT=kT)

    def gamma(self, mass: float) -> float:
        return self.eta / (2.0 * mass)


@dataclass(frozen=True)
class AveragedCoeffs:
    """Angle-averaged drift ``dbar`` and diffusion ``nbar`` (both in action/time)."""

    dbar: float
    nbar: float


def spectral_density(omega, bath: BathSpec):
    """``I(omega) = eta*omega`` below the cutoff, zero above it."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ParameterError("spectral density is defined for omega >= 0")
    out = np.where(omega <= bath.omega_c, bath.eta * omega, 0.0)
    return out[()] if out.ndim == 0 else out


def noise_spectrum(omega, bath: BathSpec, hbar: float = 1.0):
    """Fourier transform of the noise kernel, ``N~(omega)``.

    At zero temperature ``eta*|omega|``; otherwise ``eta*omega*coth(hbar*omega/2kT)``,
    which tends to ``2*eta*kT/hbar`` at ``omega = 0``.  Zero beyond the cutoff.
    """
    omega = np.asarray(omega, dtype=float)
    w = np.abs(omega)
    if bath.kT == 0.0:
        out = bath.eta * w
    else:
        arg = hbar * w / (2.0 * bath.kT)
        with np.errstate(divide="ignore", invalid="ignore"):
            thermal = bath.eta * w / np.tanh(arg)
        # small-argument series of x*coth(x): 1 + x^2/3
        small = arg < 1e-4
        limit = 2.0 * bath.eta * bath.kT / hbar * (1.0 + arg**2 / 3.0)
        out = np.where(small, limit, thermal)
    out = np.where(w <= bath.omega_c, out, 0.0)
    return out[()] if out.ndim == 0 else out


def resonant_coeffs(n: int, omega: float, bath: BathSpec) -> tuple[float, float]:
    """Resonant parts of ``D_n`` and ``N_n`` at orbit frequency ``omega``.

    Returns ``(D~(n omega)/i, N~(n omega)) = (eta*n*omega, eta*|n|*omega)``; the drift
    weight is reported without the factor ``i`` of ``D~(omega) = i*eta*omega``.
    """
    if not omega > 0.0:
        raise ParameterError(f"orbit frequency must be > 0, got {omega!r}")
    return bath.eta * n * omega, bath.eta * abs(n) * omega


def averaged_coeffs(table: FourierTable, omega: float, bath: BathSpec) -> AveragedCoeffs:
    """Angle-averaged coefficients for an ohmic zero-temperature bath.

    ``dbar = sum_n |x_n|^2 n D~(n omega)/i`` and ``nbar = (1/2) sum_n |x_n|^2 n^2 N~(n omega)``
    over all ``n``, i.e. ``2 eta omega sum_{n>0} |x_n|^2 n^2`` and
    ``eta omega sum_{n>0} |x_n|^2 n^3``.
    """
    dbar = 0.0
    nbar = 0.0
    for n in table.orders():
        if n == 0:
            continue
        weight = abs(table[n]) ** 2
        for m in (n, -n):
            drift, noise = resonant_coeffs(m, omega, bath)
            dbar += weight * m * drift
            nbar += 0.5 * weight * m * m * noise
    return AveragedCoeffs(dbar, nbar)


def noise_kernel_sampled(lags, bath: BathSpec, hbar: float = 1.0):
    """Target autocovariance ``<xi(t+tau) xi(t)>`` of the band-limited noise.

    Zero temperature uses the closed form of ``(hbar*eta/pi) int_0^wc w cos(w tau) dw``;
    finite temperature integrates :func:`noise_spectrum` numerically.
    """
    tau = np.abs(np.asarray(lags, dtype=float))
    wc = bath.omega_c
    pref = hbar * bath.eta / math.pi
    if bath.kT > 0.0:
        vals = np.array([
            integrate.quad(lambda w, t=t: hbar * noise_spectrum(w, bath, hbar) * math.cos(w * t),
                           0.0, wc, limit=400)[0] / math.pi
            for t in tau.ravel()
        ]).reshape(tau.shape)
        return vals[()] if vals.ndim == 0 else vals
    u = wc * tau
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = pref * wc**2 * ((np.cos(u) - 1.0) / u**2 + np.sin(u) / u)
    # Taylor series 1/2 - u^2/8 + u^4/144 avoids cancellation near zero lag
    series = pref * wc**2 * (0.5 - u**2 / 8.0 + u**4 / 144.0)
    out = np.where(u < 1e-3, series, closed)
    return out[()] if out.ndim == 0 else out
