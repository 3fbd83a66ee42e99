"""Cubic metastable well: parameters, classical harmonic orbits and action-angle variables.

The system Hamiltonian is ``H = p^2/2M + M Omega0^2 x^2/2 - lam x^3/6``.  The well
has its metastable minimum at ``x = 0`` and the barrier top at ``x_s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WellModel:
    """Parameters of the cubic well and the constants derived from them.

    Attributes
    ----------
    mass, omega0, lam, hbar : float
        Mass ``M``, harmonic frequency ``Omega0``, cubic coupling ``lam`` and
        Planck's constant.  All strictly positive.
    """

    mass: float
    omega0: float
    lam: float
    hbar: float

    def __post_init__(self):
        for name in ("mass", "omega0", "lam", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ParameterError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def x_s(self) -> float:
        """Position of the barrier top."""
        return 2.0 * self.mass * self.omega0**2 / self.lam

    @property
    def eps_s(self) -> float:
        """Barrier height measured from the metastable minimum."""
        return 2.0 * self.mass**3 * self.omega0**6 / (3.0 * self.lam**2)

    @property
    def eps0(self) -> float:
        """Zero-point energy ``hbar*Omega0/2``."""
        return 0.5 * self.hbar * self.omega0

    @property
    def y_s(self) -> float:
        """Dimensionless barrier ``eps_s/eps0``."""
        return self.eps_s / self.eps0


def derive_well(mass: float, omega0: float, lam: float, hbar: float) -> WellModel:
    """Build a :class:`WellModel`, raising :class:`ParameterError` on nonpositive input."""
    return WellModel(float(mass), float(omega0), float(lam), float(hbar))


def well_from_barrier(y_s: float, mass: float = 1.0, omega0: float = 1.0, hbar: float = 1.0) -> WellModel:
    """Well whose barrier is ``y_s`` zero-point energies high.

    Inverts ``eps_s = 2 M^3 Omega0^6 / (3 lam^2) = y_s * hbar*Omega0/2`` for ``lam``;
    in units ``M = Omega0 = hbar = 1`` this is ``lam = sqrt(4/(3 y_s))``.
    """
    if not y_s > 0.0:
        raise ParameterError(f"y_s must be > 0, got {y_s!r}")
    eps0 = 0.5 * hbar * omega0
    lam = math.sqrt(2.0 * mass**3 * omega0**6 / (3.0 * y_s * eps0))
    return derive_well(mass, omega0, lam, hbar)


def potential(x, well: WellModel):
    """``V(x) = M Omega0^2 x^2 / 2 - lam x^3 / 6``."""
    return 0.5 * well.mass * well.omega0**2 * x**2 - (well.lam / 6.0) * x**3


def force(x, well: WellModel):
    """``-V'(x) = -M Omega0^2 x + lam x^2 / 2``."""
    return -well.mass * well.omega0**2 * x + 0.5 * well.lam * x**2


class PhasePoint(NamedTuple):
    x: float
    p: float


class ActionAngle(NamedTuple):
    theta: float
    j: float


def harmonic_orbit(point: PhasePoint, dt: float, well: WellModel) -> PhasePoint:
    """Propagate ``point`` for a time ``dt`` along the harmonic part of the motion."""
    w = well.omega0
    m = well.mass
    c, s = math.cos(w * dt), math.sin(w * dt)
    x, p = point
    return PhasePoint(x * c + p / (m * w) * s, p * c - m * w * x * s)


def harmonic_energy(point: PhasePoint, well: WellModel) -> float:
    x, p = point
    return p * p / (2.0 * well.mass) + 0.5 * well.mass * well.omega0**2 * x * x


def to_action_angle(point: PhasePoint, well: WellModel) -> ActionAngle:
    """Harmonic action-angle variables of a phase-space point.

    ``j = eps/Omega0`` and ``exp(i theta) = (M Omega0 x - i p)/|M Omega0 x - i p|``.
    The angle is wrapped to ``[0, 2 pi)`` and set to 0 at the origin.
    """
    x, p = point
    j = harmonic_energy(point, well) / well.omega0
    if j == 0.0:
        return ActionAngle(0.0, 0.0)
    theta = math.atan2(-p, well.mass * well.omega0 * x) % TWO_PI
    # atan2 can return exactly -0.0 -> 2pi after the modulo on some inputs
    if theta >= TWO_PI:
        theta = 0.0
    return ActionAngle(theta, j)


@dataclass(frozen=True)
class FourierTable:
    """Fourier coefficients ``x_n(j)`` of ``x(theta, j) = sum_n x_n exp(i n theta)``.

    Only ``n >= 0`` is stored; negative orders follow from ``x_{-n} = conj(x_n)``.
    """

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        for n in self.coeffs:
            if n < 0:
                raise ParameterError("store only n >= 0; x_{-n} is implied by reality")

    def __getitem__(self, n: int) -> complex:
        if n < 0:
            return complex(self.coeffs.get(-n, 0.0)).conjugate()
        return complex(self.coeffs.get(n, 0.0))

    def orders(self) -> list[int]:
        return sorted(n for n, c in self.coeffs.items() if c != 0)

    def position(self, theta):
        """Reconstruct ``x(theta)`` from the table."""
        theta = np.asarray(theta, dtype=float)
        total = np.zeros_like(theta, dtype=complex)
        for n, c in self.coeffs.items():
            if n == 0:
                total += c
            else:
                term = complex(c) * np.exp(1j * n * theta)
                total += term + np.conj(term)
        return total.real


def fourier_coeffs_harmonic(j: float, well: WellModel) -> FourierTable:
    """Harmonic-orbit Fourier table: ``x_{+-1} = sqrt(2j/(M Omega0))/2``, all others zero."""
    if j < 0.0:
        raise ParameterError(f"action must be >= 0, got {j!r}")
    if j == 0.0:
        return FourierTable({})
    return FourierTable({1: 0.5 * math.sqrt(2.0 * j / (well.mass * well.omega0))})
