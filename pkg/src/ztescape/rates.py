"""Closed-form and semi-analytic escape rates.

Everything here works in the dimensionless barrier ``y_s = eps_s/eps0`` and the
dissipation rate ``gamma = eta/(2M)``.  The decay of the lowest normal mode of the
energy-space Fokker-Planck operator is ``r = 2*gamma*rbar`` where ``rbar`` is the
smallest root of ``L_rbar(y_s) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .errors import NumericalError, ParameterError, PreconditionError
from .model import WellModel
from .special import ei_minus_log, expint_ei, laguerre_eval, laguerre_eval_array

METHODS = (
    "asymptotic",
    "perturbative",
    "laguerre_root",
    "kramers_quadrature",
    "fp_numeric",
    "langevin_mc",
    "tunnel_isolated",
    "tunnel_env",
)
STATISTICAL_METHODS = frozenset({"langevin_mc"})
DETERMINISTIC_METHODS = tuple(m for m in METHODS if m not in STATISTICAL_METHODS)

APERY = 1.2020569031595942853997381615114499907649862923405  # zeta(3)
TUNNEL_ENV_COEFF = 54.0 * APERY / math.pi**3
TUNNEL_EXPONENT = 18.0 / 5.0


@dataclass
class RateResult:
    """A rate from one method.

    ``interval`` is a ``(lo, hi)`` confidence interval and is present only for
    statistical methods.  ``rbar`` is ``rate/(2 gamma)`` when that is meaningful.
    """

    method: str
    rate: float
    rbar: Optional[float] = None
    interval: Optional[tuple[float, float]] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method tag {self.method!r}")
        if not self.rate >= 0.0:
            raise NumericalError(f"{self.method}: negative or NaN rate {self.rate!r}")
        if (self.interval is not None) != (self.method in STATISTICAL_METHODS):
            raise ParameterError("an interval is carried by statistical methods only")

    def as_dict(self) -> dict:
        lo, hi = self.interval if self.interval is not None else (None, None)
        return {
            "method": self.method,
            "rate": self.rate,
            "rbar": self.rbar,
            "lo": lo,
            "hi": hi,
            "diagnostics": self.diagnostics,
        }


def _check_barrier(y_s: float, minimum: float = 2.0) -> float:
    y_s = float(y_s)
    if not y_s >= minimum:
        raise ParameterError(f"y_s must be >= {minimum}, got {y_s!r}")
    return y_s


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (math.isfinite(gamma) and gamma >= 0.0):
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    return gamma


def lowest_eigenvalue(y_s: float, rtol: float = 1e-14) -> float:
    """Smallest ``nu > 0`` with ``L_nu(y_s) = 0``.

    For ``y_s >= 2`` the bracket ``(0, 1]`` holds exactly one root: ``L_0 = 1`` and
    ``L_1(y_s) = 1 - y_s < 0``.
    """
    y_s = _check_barrier(y_s)
    f = lambda nu: laguerre_eval(nu, y_s)  # noqa: E731
    lo, hi = 0.0, 1.0
    if not (f(lo) > 0.0 and f(hi) < 0.0):
        raise NumericalError(f"no sign change of L_nu({y_s}) on (0, 1]")
    root, info = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=rtol, full_output=True)
    if not info.converged:
        raise NumericalError(f"root search for y_s={y_s} did not converge: {info.flag}")
    return root


def rate_laguerre_root(y_s: float, gamma: float) -> RateResult:
    rbar = lowest_eigenvalue(y_s)
    first_order = 1.0 / ei_minus_log(y_s)
    return RateResult(
        "laguerre_root", 2.0 * _check_gamma(gamma) * rbar, rbar,
        diagnostics={"first_order_rbar": first_order, "rel_dev_from_first_order": rbar / first_order - 1.0},
    )


def rate_perturbative(y_s: float, gamma: float) -> RateResult:
    """``r = 2 gamma / (Ei(y_s) - ln y_s - gamma_E)``."""
    y_s = _check_barrier(y_s)
    denom = ei_minus_log(y_s)
    return RateResult("perturbative", 2.0 * _check_gamma(gamma) / denom, 1.0 / denom,
                      diagnostics={"denominator": denom})


def rate_asymptotic(y_s: float, gamma: float) -> RateResult:
    """``r = 2 gamma y_s exp(-y_s)``, the large-barrier limit."""
    y_s = float(y_s)
    if not y_s > 0.0:
        raise ParameterError(f"y_s must be > 0, got {y_s!r}")
    rbar = y_s * math.exp(-y_s)
    return RateResult("asymptotic", 2.0 * _check_gamma(gamma) * rbar, rbar)


def kramers_profile(eps, phi0: float, well: WellModel, gamma: float):
    """Constant-flux stationary density with ``F(eps_s) = 0``.

    ``F = phi0/(2 gamma eps0) exp(-eps/eps0) [Ei(eps_s/eps0) - Ei(eps/eps0)]``.  The
    profile diverges logarithmically at ``eps = 0``, which is rejected.
    """
    eps_arr = np.asarray(eps, dtype=float)
    if np.any(eps_arr <= 0.0):
        raise ParameterError("constant-flux profile is logarithmically singular at eps = 0")
    if np.any(eps_arr > well.eps_s * (1.0 + 1e-12)):
        raise ParameterError("eps must not exceed the barrier energy")
    gamma = _check_gamma(gamma)
    if gamma == 0.0:
        raise ParameterError("gamma must be > 0 for a finite flux profile")
    y = eps_arr / well.eps0
    ei_s = expint_ei(well.y_s)
    vals = np.array([ei_s - expint_ei(min(v, well.y_s)) for v in y.ravel()]).reshape(y.shape)
    out = phi0 / (2.0 * gamma * well.eps0) * np.exp(-y) * vals
    return out[()] if out.ndim == 0 else out


def kramers_normalization(y_s: float, epsrel: float = 1e-10) -> tuple[float, float, int]:
    """``int_0^{y_s} exp(-y) [Ei(y_s) - Ei(y)] dy`` by adaptive quadrature.

    Returns ``(value, abserr, n_evaluations)``.
    """
    ei_s = expint_ei(y_s)
    integrand = lambda y: math.exp(-y) * (ei_s - expint_ei(y)) if y > 0.0 else math.inf  # noqa: E731
    value, abserr, info = integrate.quad(integrand, 0.0, y_s, epsabs=0.0, epsrel=epsrel,
                                         limit=400, full_output=True)[:3]
    if abserr > 1e-8 * abs(value):
        raise NumericalError(f"Kramers normalization quadrature did not converge (err={abserr:g})")
    return value, abserr, info["neval"]


def kramers_flux(y_s: float, gamma: float) -> RateResult:
    """Escape rate from the normalized constant-flux solution."""
    y_s = _check_barrier(y_s)
    gamma = _check_gamma(gamma)
    norm, abserr, neval = kramers_normalization(y_s)
    return RateResult(
        "kramers_quadrature", 2.0 * gamma / norm, 1.0 / norm,
        diagnostics={
            "normalization_integral": norm,
            "quadrature_abserr": abserr,
            "quadrature_neval": neval,
            "closed_form_flux": 2.0 * gamma * y_s * math.exp(-y_s),
        },
    )


@dataclass
class ModeFunction:
    """Lowest normal mode ``f(y) = A exp(-y) L_rbar(y)`` on ``[0, y_s]``, unit total mass."""

    rbar: float
    y_s: float
    mass_norm: float  # A
    weighted_norm2: float  # int exp(-y) L^2 dy

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return self.mass_norm * np.exp(-y) * laguerre_eval_array(self.rbar, y)


def _mode_integrals(rbar: float, y_s: float) -> tuple[float, float]:
    mass = integrate.quad(lambda y: math.exp(-y) * laguerre_eval(rbar, y), 0.0, y_s,
                          epsabs=0.0, epsrel=1e-12, limit=200)[0]
    w2 = integrate.quad(lambda y: math.exp(-y) * laguerre_eval(rbar, y) ** 2, 0.0, y_s,
                        epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return mass, w2


def lowest_mode(y_s: float) -> ModeFunction:
    rbar = lowest_eigenvalue(y_s)
    mass, w2 = _mode_integrals(rbar, y_s)
    return ModeFunction(rbar, y_s, 1.0 / mass, w2)


def mode_amplitude(y_grid, f_init, rbar: float, y_s: float, tol: float = 1e-4) -> float:
    """Coefficient of the unit-mass mode ``rbar`` in the expansion of ``f_init``.

    ``f_init`` is a probability density in ``y = eps/eps0`` sampled on ``y_grid``
    covering ``[0, y_s]``.  The coefficient is ``c = N int L_rbar(y) f_init(y) dy`` with
    ``N = 1/(A int exp(-y) L_rbar^2 dy)``, the projection under the weight ``exp(y)``.
    The constant prefactor of the weighted scalar product cancels.
    """
    y_grid = np.asarray(y_grid, dtype=float)
    f_init = np.asarray(f_init, dtype=float)
    if y_grid.shape != f_init.shape or y_grid.ndim != 1:
        raise PreconditionError("y_grid and f_init must be 1-D arrays of equal length")
    if np.any(f_init < -1e-12 * np.max(np.abs(f_init))):
        raise PreconditionError("initial density must be nonnegative")
    total = integrate.simpson(f_init, x=y_grid)
    if abs(total - 1.0) > tol:
        raise PreconditionError(f"initial density is not normalized (integral {total:.6g})")
    mass, w2 = _mode_integrals(rbar, y_s)
    overlap = integrate.simpson(laguerre_eval_array(rbar, y_grid) * f_init, x=y_grid)
    return overlap * mass / w2


def survival(t, r: float):
    """Probability of remaining in the well, ``exp(-r t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or r < 0.0:
        raise ParameterError("survival needs t >= 0 and r >= 0")
    out = np.exp(-r * t)
    return out[()] if out.ndim == 0 else out


def tunneling_rate_isolated(y_s: float, omega0: float = 1.0) -> RateResult:
    """Instanton estimate ``Omega0 sqrt(y_s) exp(-18 y_s/5)`` (order of magnitude only)."""
    y_s = float(y_s)
    if not y_s >= 0.0:
        raise ParameterError(f"y_s must be >= 0, got {y_s!r}")
    rate = omega0 * math.sqrt(y_s) * math.exp(-TUNNEL_EXPONENT * y_s)
    return RateResult("tunnel_isolated", rate,
                      diagnostics={"order_of_magnitude": True, "prefactor": "Omega0*sqrt(y_s)"})


def tunneling_rate_env(y_s: float, gamma_over_omega0: float, omega0: float = 1.0) -> RateResult:
    """Instanton estimate with ohmic damping (order of magnitude only).

    ``Omega0 sqrt(y_s) exp[-y_s (18/5 + 54 zeta(3)/pi^3 * gamma/Omega0)]``.
    """
    y_s = float(y_s)
    if not y_s >= 0.0:
        raise ParameterError(f"y_s must be >= 0, got {y_s!r}")
    g = _check_gamma(gamma_over_omega0)
    exponent = y_s * (TUNNEL_EXPONENT + TUNNEL_ENV_COEFF * g)
    rate = omega0 * math.sqrt(y_s) * math.exp(-exponent)
    return RateResult("tunnel_env", rate, diagnostics={
        "order_of_magnitude": True,
        "prefactor": "Omega0*sqrt(y_s)",
        "suppression_vs_isolated": math.exp(-y_s * TUNNEL_ENV_COEFF * g),
    })


@dataclass
class RateComparison:
    y_s: float
    gamma: float
    omega0: float
    rates: dict[str, RateResult]

    @property
    def activation_over_tunnel(self) -> float:
        return self.rates["asymptotic"].rate / self.rates["tunnel_isolated"].rate

    @property
    def activation_over_tunnel_env(self) -> float:
        return self.rates["asymptotic"].rate / self.rates["tunnel_env"].rate


def rate_compare(y_s: float, gamma: float, omega0: float = 1.0) -> RateComparison:
    """All closed-form and semi-analytic rates at one parameter point.

    ``gamma`` is in absolute units; the environment-modified tunneling rate uses
    ``gamma/omega0``.
    """
    rates = {
        "asymptotic": rate_asymptotic(y_s, gamma),
        "perturbative": rate_perturbative(y_s, gamma),
        "laguerre_root": rate_laguerre_root(y_s, gamma),
        "kramers_quadrature": kramers_flux(y_s, gamma),
        "tunnel_isolated": tunneling_rate_isolated(y_s, omega0),
        "tunnel_env": tunneling_rate_env(y_s, gamma / omega0, omega0),
    }
    return RateComparison(float(y_s), float(gamma), float(omega0), rates)
