"""Finite-volume solver for the energy-space Fokker-Planck equation.

Solves ``dF/dt = 2 gamma d/de (eps0 e dF/de + e F)`` on ``[0, eps_s]`` in the
variable ``y = e/eps0``, where it reads ``dF/dt = 2 gamma d/dy [y exp(-y) d/dy (exp(y) F)]``.
Face fluxes are discretised in that exponentially weighted form, so that

* the face at ``y = 0`` carries no flux (its diffusion coefficient vanishes),
* ``exp(-y)`` is an exact discrete null vector of the reflecting operator,
* the operator is symmetric after the similarity transform ``u = exp(y/2) F``.

The absorbing face at ``y_s`` imposes ``F(y_s) = 0`` half a cell beyond the last centre.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import NumericalError, ParameterError, PreconditionError
from .rates import RateResult

Boundary = Literal["absorbing", "reflecting"]


@dataclass(frozen=True)
class EnergyGrid:
    """Uniform cell-centred grid on ``y in [0, y_s]``."""

    y_s: float
    n_cells: int

    def __post_init__(self):
        if not self.y_s > 0.0:
            raise ParameterError(f"y_s must be > 0, got {self.y_s!r}")
        if self.n_cells < 100:
            raise ParameterError(f"need at least 100 cells, got {self.n_cells}")

    @property
    def h(self) -> float:
        return self.y_s / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.y_s, self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h


@dataclass
class DiscreteOperator:
    """Tridiagonal generator ``dF/dt = L F`` and its symmetrised form ``S``.

    ``L`` acts on cell values ``F_i`` (density per unit energy).  ``S = E^{1/2} L E^{-1/2}``
    with ``E = diag(exp(y_i))``; its entries contain no large exponentials.
    """

    grid: EnergyGrid
    gamma: float
    eps0: float
    boundary: Boundary
    lower: np.ndarray  # L[i+1, i]
    diag: np.ndarray
    upper: np.ndarray  # L[i, i+1]
    sym_off: np.ndarray  # S[i, i+1] = S[i+1, i]
    face_weight: np.ndarray  # 2 gamma y_f / h, interior faces
    outflow_coeff: float  # d(mass in y)/dt = -outflow_coeff * F[-1]

    def matrix(self) -> sparse.csc_matrix:
        return sparse.diags([self.lower, self.diag, self.upper], [-1, 0, 1], format="csc")

    def sym_matrix(self) -> sparse.csc_matrix:
        return sparse.diags([self.sym_off, self.diag, self.sym_off], [-1, 0, 1], format="csc")

    def apply(self, F: np.ndarray) -> np.ndarray:
        out = self.diag * F
        out[:-1] += self.upper * F[1:]
        out[1:] += self.lower * F[:-1]
        return out

    def apply_sym(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[:-1] += self.sym_off * u[1:]
        out[1:] += self.sym_off * u[:-1]
        return out

    def dirichlet_form(self, u: np.ndarray) -> float:
        """``-u^T S u`` written as a sum of squares (no cancellation)."""
        q = self.grid.h / 4.0
        diffs = math.exp(q) * u[1:] - math.exp(-q) * u[:-1]
        total = np.dot(self.face_weight, diffs * diffs)
        if self.boundary == "absorbing":
            total += 2.0 * self.gamma * 2.0 * self.grid.y_s * math.exp(-2.0 * q) / self.grid.h * u[-1] ** 2
        return float(total / self.grid.h)


def build_operator(grid: EnergyGrid, gamma: float, eps0: float = 0.5,
                   boundary: Boundary = "absorbing") -> DiscreteOperator:
    """Assemble the conservative discretisation on ``grid``.

    The flux through the interior face at ``y_f`` between cells ``i`` and ``i+1`` is
    ``-2 gamma y_f exp(-y_f) (exp(y_{i+1}) F_{i+1} - exp(y_i) F_i) / h``.
    """
    if not (math.isfinite(gamma) and gamma >= 0.0):
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    if not eps0 > 0.0:
        raise ParameterError(f"eps0 must be > 0, got {eps0!r}")
    if boundary not in ("absorbing", "reflecting"):
        raise ParameterError(f"unknown boundary {boundary!r}")
    n, h = grid.n_cells, grid.h
    y_faces = grid.edges[1:-1]
    eh = math.exp(0.5 * h)
    pref = 2.0 * gamma / (h * h)
    upper = pref * y_faces * eh  # flux weight carried to the cell below
    lower = pref * y_faces / eh
    diag = np.zeros(n)
    diag[:-1] -= lower
    diag[1:] -= upper
    outflow = 0.0
    if boundary == "absorbing":
        # ghost value exp(y_s) F(y_s) = 0 at distance h/2
        diag[-1] -= 2.0 * pref * grid.y_s / eh
        outflow = 2.0 * pref * grid.y_s / eh * h
    return DiscreteOperator(
        grid=grid, gamma=float(gamma), eps0=float(eps0), boundary=boundary,
        lower=lower, diag=diag, upper=upper,
        sym_off=pref * y_faces,
        face_weight=2.0 * gamma * y_faces / h,
        outflow_coeff=outflow,
    )


@dataclass
class EnergyDistribution:
    """Cell values of the angle-averaged density ``F`` (per unit energy)."""

    grid: EnergyGrid
    eps0: float
    values: np.ndarray
    escaped: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_cells,):
            raise PreconditionError("values do not match the grid")

    @property
    def mass(self) -> float:
        return float(self.eps0 * self.grid.h * self.values.sum())

    @classmethod
    def thermal(cls, grid: EnergyGrid, eps0: float = 0.5) -> "EnergyDistribution":
        """Cell averages of ``exp(-e/eps0)/Z`` truncated to ``[0, eps_s]``, unit mass."""
        e = grid.edges
        cell = (np.exp(-e[:-1]) - np.exp(-e[1:])) / grid.h
        z = -math.expm1(-grid.y_s)
        return cls(grid, eps0, cell / (z * eps0))


def flux_at_separatrix(F, op: DiscreteOperator) -> float:
    """Probability flux through the absorbing face (zero for a reflecting boundary)."""
    values = F.values if isinstance(F, EnergyDistribution) else np.asarray(F, dtype=float)
    return float(op.eps0 * op.outflow_coeff * values[-1])


@dataclass
class Evolution:
    times: np.ndarray
    mass: np.ndarray
    escaped: np.ndarray
    flux: np.ndarray
    snapshots: list = field(default_factory=list)  # (t, values)
    final: Optional[EnergyDistribution] = None

    def fitted_rate(self, tail: float = 0.5) -> float:
        """Least-squares slope of ``-log(mass)`` over the last ``tail`` fraction of the run."""
        start = int(len(self.times) * (1.0 - tail))
        t, m = self.times[start:], self.mass[start:]
        if len(t) < 2 or np.any(m <= 0.0):
            raise NumericalError("not enough positive-mass samples to fit a rate")
        slope = np.polyfit(t, np.log(m), 1)[0]
        return float(-slope)


def evolve(F0: EnergyDistribution, op: DiscreteOperator, dt: Optional[float] = None,
           t_end: float = 0.0, snapshot_every: int = 0) -> Evolution:
    """Backward-Euler time stepping, unconditionally stable and positivity preserving.

    The default step is ``0.1/(2 gamma)``.  Escaped mass is accumulated from the
    boundary flux so that ``mass + escaped`` is conserved to rounding.
    """
    if dt is None:
        if op.gamma == 0.0:
            raise ParameterError("dt must be given when gamma = 0")
        dt = 0.1 / (2.0 * op.gamma)
    if not dt > 0.0:
        raise ParameterError(f"dt must be > 0, got {dt!r}")
    n_steps = int(math.ceil(t_end / dt - 1e-12)) if t_end > 0.0 else 0
    ident = sparse.identity(op.grid.n_cells, format="csc")
    lu = splinalg.splu((ident - dt * op.matrix()).tocsc())
    F = F0.values.copy()
    escaped = F0.escaped
    cell = op.eps0 * op.grid.h
    times = np.empty(n_steps + 1)
    masses = np.empty(n_steps + 1)
    esc = np.empty(n_steps + 1)
    fluxes = np.empty(n_steps + 1)
    times[0], masses[0], esc[0], fluxes[0] = 0.0, cell * F.sum(), escaped, flux_at_separatrix(F, op)
    snapshots = [(0.0, F.copy())] if snapshot_every else []
    for k in range(1, n_steps + 1):
        F = lu.solve(F)
        flux = flux_at_separatrix(F, op)
        escaped += dt * flux
        mass = cell * F.sum()
        if not np.isfinite(mass) or mass > masses[k - 1] * (1.0 + 1e-12) + 1e-300 or F.min() < -1e-12 * F.max():
            raise NumericalError(f"instability detected at step {k} (mass {mass!r})")
        times[k], masses[k], esc[k], fluxes[k] = k * dt, mass, escaped, flux
        if snapshot_every and k % snapshot_every == 0:
            snapshots.append((k * dt, F.copy()))
    final = EnergyDistribution(op.grid, op.eps0, F, escaped)
    return Evolution(times, masses, esc, fluxes, snapshots, final)


def _inverse_iteration(factor_solve, n, deflate, dform, max_iter, tol, scale, rng):
    v = np.abs(rng.standard_normal(n)) + 1.0
    for vec in deflate:
        v -= np.dot(vec, v) * vec
    v /= np.linalg.norm(v)
    lam_old = math.inf
    for it in range(1, max_iter + 1):
        w = factor_solve(v)
        for vec in deflate:
            w -= np.dot(vec, w) * vec
        w /= np.linalg.norm(w)
        step = np.linalg.norm(w - v)
        v = w
        lam = dform(v)
        if abs(lam - lam_old) <= tol * max(abs(lam), scale) and step < 1e-8:
            return lam, v, it
        lam_old = lam
    raise NumericalError(f"inverse iteration did not converge in {max_iter} iterations")


def lowest_modes(op: DiscreteOperator, k: int = 1, shift: Optional[float] = None,
                 max_iter: int = 2000, tol: float = 1e-13, seed: int = 0):
    """The ``k`` slowest decay modes by shifted inverse iteration with deflation.

    Works on the SPD matrix ``-S + shift*I``.  Returns ``(rates, vectors)`` where each
    vector is the density ``F`` (per unit energy) scaled to unit mass and sign-fixed
    to have positive total.
    """
    n = op.grid.n_cells
    if shift is None:
        shift = 0.0 if op.boundary == "absorbing" else 0.1 * 2.0 * op.gamma
    ab = np.zeros((2, n))
    ab[0, 1:] = -op.sym_off
    ab[1, :] = -op.diag + shift
    try:
        chol = linalg.cholesky_banded(ab, lower=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"shifted operator is not positive definite: {exc}") from exc
    solve = lambda b: linalg.cho_solve_banded((chol, False), b)  # noqa: E731
    rng = np.random.default_rng(seed)
    y = op.grid.centers
    rates, vectors, found = [], [], []
    for _ in range(k):
        lam, u, _ = _inverse_iteration(solve, n, found, op.dirichlet_form, max_iter, tol, shift, rng)
        found.append(u)
        F = np.exp(-0.5 * y) * u
        total = F.sum()
        F = F / (op.eps0 * op.grid.h * total) if total != 0.0 else F
        rates.append(lam)
        vectors.append(F)
    return np.array(rates), vectors


def lowest_mode(op: DiscreteOperator):
    """Slowest decay rate ``r`` and its unit-mass, nonnegative mode ``F``."""
    rates, vectors = lowest_modes(op, 1)
    return float(rates[0]), vectors[0]


def rate_fp_numeric(y_s: float, gamma: float, n_cells: int = 4000) -> RateResult:
    """Escape rate ``2 gamma rbar`` from the lowest discrete mode on ``n_cells`` cells.

    ``rbar`` is computed with ``2 gamma = 1`` and rescaled, so ``gamma = 0`` is allowed.
    """
    if not (math.isfinite(gamma) and gamma >= 0.0):
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    grid = EnergyGrid(y_s, n_cells)
    op = build_operator(grid, 0.5)
    rbar, F = lowest_mode(op)
    flux = flux_at_separatrix(F, op)
    return RateResult("fp_numeric", 2.0 * gamma * rbar, rbar,
                      diagnostics={"n_cells": n_cells, "flux_over_rate": flux / rbar,
                                   "min_density": float(F.min())})


def write_profile_csv(path, grid: EnergyGrid, snapshots) -> None:
    """Dump ``(t, F)`` snapshots as rows ``y,F,t``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "F", "t"])
        for t, values in snapshots:
            for y, v in zip(grid.centers, values):
                writer.writerow([repr(float(y)), repr(float(v)), repr(float(t))])
