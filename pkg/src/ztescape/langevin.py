"""Langevin Monte Carlo for escape from the cubic well.

Integrates ``M x'' = -eta x' - V'(x) + xi(t)`` with zero-temperature band-limited
ohmic noise, ``<xi xi>`` having two-sided spectrum ``hbar*eta*|omega|`` below
``omega_c``.  Only ensemble statistics of these trajectories are meaningful.

Each trajectory draws from its own stream ``SeedSequence(seed, spawn_key=(traj_id, k))``,
``k = 0`` for the initial state and ``k = 1, 2, ...`` for successive noise segments.
Trajectories are stepped in vectorised blocks, and block composition does not
affect the numbers, so any partition of trajectory ids reproduces the same
first-passage times.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .bath import BathSpec, noise_spectrum
from .errors import NumericalError, ParameterError, PreconditionError
from .model import PhasePoint, WellModel, force, potential
from .rates import RateResult

MODES = ("cubic", "harmonic")
# Within a segment the noise is periodic, i.e. a line spectrum with spacing
# 2 pi/(segment*dt).  Lines must be dense on the scale of the resonance width
# gamma, otherwise the oscillator samples the spectrum too coarsely.
SEGMENT_GAMMA_SPAN = 20.0
MIN_SEGMENT = 2**12
BLOCK_SAMPLES = 2**25


@dataclass(frozen=True)
class NoisePath:
    """Noise force samples ``xi_k = xi(k dt)`` on a uniform grid."""

    dt: float
    samples: np.ndarray
    seed: Optional[int]
    omega_c: float

    @property
    def nt(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return self.nt * self.dt


def default_timestep(well: WellModel, bath: BathSpec) -> float:
    """``min(0.02/Omega0, 0.2/omega_c)``."""
    return min(0.02 / well.omega0, 0.2 / bath.omega_c)


def _check_grid(nt: int, dt: float, bath: BathSpec) -> None:
    if nt < 2 or nt % 2:
        raise PreconditionError(f"Nt must be even and >= 2, got {nt}")
    if not dt > 0.0:
        raise PreconditionError(f"dt must be > 0, got {dt!r}")
    if dt > math.pi / bath.omega_c * (1.0 + 1e-12):
        raise PreconditionError(
            f"dt = {dt} violates the Nyquist condition dt <= pi/omega_c = {math.pi / bath.omega_c}")


def _psd_amplitudes(nt: int, dt: float, bath: BathSpec, hbar: float) -> np.ndarray:
    """Standard deviation of each rfft bin amplitude (before the factor ``nt``)."""
    omega = 2.0 * math.pi * np.fft.rfftfreq(nt, dt)
    psd = hbar * noise_spectrum(omega, bath, hbar)
    return np.sqrt(psd / (nt * dt))


def _synthesize(rngs: Sequence[np.random.Generator], nt: int, sigma: np.ndarray) -> np.ndarray:
    """Rows of real Gaussian noise, one per generator.

    Bin ``m`` gets ``A_m`` with ``E|A_m|^2 = S(omega_m)/(nt dt)``; the DC and Nyquist
    bins are real.  ``irfft(nt*A)`` then has two-sided spectral density ``S``.
    """
    nf = len(sigma)
    spec = np.empty((len(rngs), nf), dtype=complex)
    for i, rng in enumerate(rngs):
        z = rng.standard_normal((2, nf))
        spec[i].real = z[0]
        spec[i].imag = z[1]
    spec *= sigma / math.sqrt(2.0)
    spec[:, 0] = spec[:, 0].real * math.sqrt(2.0)
    spec[:, -1] = spec[:, -1].real * math.sqrt(2.0)
    return np.fft.irfft(spec * nt, n=nt, axis=1)


def synthesize_noise(nt: int, dt: float, bath: BathSpec, hbar: float = 1.0, seed: int = 0) -> NoisePath:
    """Stationary Gaussian noise path with spectral density ``hbar*eta*|omega|`` below the cutoff.

    Parameters
    ----------
    nt : int
        Number of samples (even).
    dt : float
        Sampling step, at most ``pi/omega_c``.
    seed : int
        Seed of the generator; the path is a deterministic function of it.
    """
    _check_grid(nt, dt, bath)
    if bath.kT != 0.0:
        raise ParameterError("only zero-temperature noise is simulated")
    sigma = _psd_amplitudes(nt, dt, bath, hbar)
    samples = _synthesize([np.random.default_rng(seed)], nt, sigma)[0]
    return NoisePath(dt=dt, samples=samples, seed=seed, omega_c=bath.omega_c)


def periodogram(samples: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Angular frequencies and ``|rfft|^2 dt/N`` (an estimate of the two-sided PSD)."""
    samples = np.atleast_2d(samples)
    nt = samples.shape[-1]
    spec = np.abs(np.fft.rfft(samples, axis=-1)) ** 2 * dt / nt
    return 2.0 * math.pi * np.fft.rfftfreq(nt, dt), spec


# ---------------------------------------------------------------------------
# single trajectory


@dataclass
class TrajectorySummary:
    """Result of :func:`integrate_trajectory`.

    ``escape_time`` is ``None`` when the trajectory was censored at the end of its
    noise path.  ``times``/``energy`` hold the energy every ``stride`` steps.
    """

    escape_time: Optional[float]
    t_end: float
    final: PhasePoint
    times: np.ndarray
    energy: np.ndarray


def _energy(x, p, well: WellModel, mode: str):
    kin = p * p / (2.0 * well.mass)
    if mode == "harmonic":
        return kin + 0.5 * well.mass * well.omega0**2 * x * x
    return kin + potential(x, well)


def _force(x, well: WellModel, mode: str):
    if mode == "harmonic":
        return -well.mass * well.omega0**2 * x
    return force(x, well)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")


def integrate_trajectory(init: PhasePoint, noise: NoisePath, well: WellModel, bath: BathSpec,
                         mode: str = "cubic", stride: int = 100, traj_id: int = 0) -> TrajectorySummary:
    """Integrate one trajectory over the span of ``noise``.

    Semi-implicit leapfrog; the friction enters implicitly in both momentum half-steps::

        p' = (p + dt/2 (F(x) + xi_k)) / (1 + eta dt / 2M)
        x  = x + dt p'/M
        p  = (p' + dt/2 (F(x) + xi_{k+1})) / (1 + eta dt / 2M)

    In ``"cubic"`` mode escape is the first step with ``x >= x_s``.  In ``"harmonic"``
    mode the cubic force is switched off and escape is the first step with
    energy ``>= eps_s``.
    """
    _check_mode(mode)
    x, p = float(init.x), float(init.p)
    if not (_energy(x, p, well, mode) < well.eps_s and x < well.x_s):
        raise PreconditionError("initial point must lie inside the well (eps < eps_s, x < x_s)")
    dt = noise.dt
    xi = noise.samples
    m = well.mass
    damp = 1.0 / (1.0 + bath.eta * dt / (2.0 * m))
    times, energies = [0.0], [_energy(x, p, well, mode)]
    f = _force(x, well, mode)
    for k in range(noise.nt - 1):
        ph = (p + 0.5 * dt * (f + xi[k])) * damp
        x = x + dt * ph / m
        f = _force(x, well, mode)
        p = (ph + 0.5 * dt * (f + xi[k + 1])) * damp
        if not (math.isfinite(x) and math.isfinite(p)):
            raise NumericalError(f"trajectory {traj_id}: non-finite state at step {k + 1}")
        t = (k + 1) * dt
        e = _energy(x, p, well, mode)
        if (k + 1) % stride == 0:
            times.append(t)
            energies.append(e)
        escaped = x >= well.x_s if mode == "cubic" else e >= well.eps_s
        if escaped:
            times.append(t)
            energies.append(e)
            return TrajectorySummary(t, t, PhasePoint(x, p), np.array(times), np.array(energies))
    t_end = (noise.nt - 1) * dt
    return TrajectorySummary(None, t_end, PhasePoint(x, p), np.array(times), np.array(energies))


# ---------------------------------------------------------------------------
# rate estimation and survival


def estimate_rate(times, t_max: float, censored=None, gamma: Optional[float] = None,
                  confidence: float = 0.95) -> RateResult:
    """Censored-exponential maximum-likelihood rate with an exact Poisson interval.

    Parameters
    ----------
    times : array_like
        First-passage times measured from the start of the escape clock.  Values
        ``>= t_max`` (including ``inf``) count as censored at ``t_max``.
    t_max : float
        Censoring horizon.
    censored : array_like of bool, optional
        Explicit censoring flags, combined with the ``t_max`` rule.
    gamma : float, optional
        Damping, to report ``rbar = rate/(2 gamma)``.

    Returns
    -------
    RateResult
        ``rate = N_escaped / sum(min(t_i, t_max))``.  With no escapes the rate is 0
        and ``interval = (0, upper)`` with the one-sided bound ``-ln(1 - confidence)/sum T``;
        ``diagnostics["upper_bound_only"]`` is then true.
    """
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0:
        raise ParameterError("no first-passage times given")
    if not t_max > 0.0:
        raise ParameterError(f"t_max must be > 0, got {t_max!r}")
    if np.any(np.isnan(times)) or np.any(times < 0.0):
        raise ParameterError("first-passage times must be >= 0")
    cens = times >= t_max
    if censored is not None:
        cens |= np.asarray(censored, dtype=bool).ravel()
    exposure = math.fsum(np.where(cens, t_max, np.minimum(times, t_max)))
    n_esc = int(np.count_nonzero(~cens))
    if exposure <= 0.0:
        raise ParameterError("total exposure time is zero")
    alpha = 1.0 - confidence
    diag = {"n_escaped": n_esc, "n_censored": int(cens.sum()), "exposure": exposure,
            "confidence": confidence}
    if n_esc == 0:
        upper = -math.log(alpha) / exposure
        diag["upper_bound_only"] = True
        rbar = None if gamma is None else 0.0
        return RateResult("langevin_mc", 0.0, rbar, (0.0, upper), diag)
    lo = stats.chi2.ppf(alpha / 2.0, 2 * n_esc) / 2.0 / exposure
    hi = stats.chi2.ppf(1.0 - alpha / 2.0, 2 * n_esc + 2) / 2.0 / exposure
    rate = n_esc / exposure
    diag["upper_bound_only"] = False
    rbar = None if gamma is None else rate / (2.0 * gamma)
    return RateResult("langevin_mc", rate, rbar, (float(lo), float(hi)), diag)


@dataclass(frozen=True)
class SurvivalCurve:
    """Empirical survival ``S(t)`` with pointwise Clopper-Pearson bands."""

    t: np.ndarray
    s: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n: int


def survival_curve(times, t_max: float, confidence: float = 0.95) -> SurvivalCurve:
    """Survival of a cohort observed on ``[0, t_max]``.

    All censoring happens at ``t_max``, so the Kaplan-Meier estimate reduces to the
    surviving fraction and the band follows from the binomial count.
    """
    times = np.asarray(times, dtype=float).ravel()
    n = times.size
    if n == 0:
        raise ParameterError("no first-passage times given")
    events = np.sort(times[times < t_max])
    t = np.concatenate(([0.0], events, [t_max]))
    alive = n - np.concatenate(([0], np.arange(1, events.size + 1), [events.size]))
    alpha = 1.0 - confidence
    with np.errstate(invalid="ignore"):
        lo = np.where(alive > 0, stats.beta.ppf(alpha / 2.0, alive, n - alive + 1), 0.0)
        hi = np.where(alive < n, stats.beta.ppf(1.0 - alpha / 2.0, alive + 1, n - alive), 1.0)
    return SurvivalCurve(t, alive / n, np.nan_to_num(lo), np.nan_to_num(hi, nan=1.0), n)


def exponential_coverage(curve: SurvivalCurve, rate: float) -> float:
    """Fraction of curve points whose band contains ``exp(-rate t)``."""
    model = np.exp(-rate * curve.t)
    return float(np.mean((model >= curve.lo - 1e-12) & (model <= curve.hi + 1e-12)))


def write_survival_csv(path, curve: SurvivalCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "S", "lo95", "hi95"])
        for row in zip(curve.t, curve.s, curve.lo, curve.hi):
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleConfig:
    """Settings of a Monte Carlo escape ensemble.

    Attributes
    ----------
    t_max : float
        Absolute censoring time; the escape clock runs on ``[burn_in, t_max]``.
    dt : float, optional
        Time step, default ``min(0.02/Omega0, 0.2/omega_c)``.
    burn_in : float, optional
        Default ``3/gamma``.  Trajectories escaping earlier are dropped from the estimate.
    mode : {"cubic", "harmonic"}
        Full cubic well with ``x >= x_s`` escape, or harmonic force with an absorbing
        energy surface at ``eps_s``.
    traj_offset : int
        First trajectory id; ensembles with disjoint id ranges can be merged.
    """

    well: WellModel
    bath: BathSpec
    ntraj: int
    t_max: float
    dt: Optional[float] = None
    burn_in: Optional[float] = None
    seed: int = 0
    mode: str = "cubic"
    traj_offset: int = 0
    block_size: int = 500
    segment: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        _check_mode(self.mode)
        if self.ntraj < 1:
            raise ParameterError(f"ntraj must be >= 1, got {self.ntraj}")
        if self.bath.eta <= 0.0 and self.burn_in is None:
            raise ParameterError("burn-in defaults to 3/gamma and needs eta > 0")
        if self.bath.kT != 0.0:
            raise ParameterError("only zero-temperature escape is simulated")
        if self.segment is not None and (self.segment < 2 or self.segment % 2):
            raise ParameterError("segment length must be even")
        if self.block_size < 1:
            raise ParameterError("block_size must be >= 1")
        if not self.t_max > self.resolved_burn_in:
            raise ParameterError(f"t_max = {self.t_max} must exceed the burn-in {self.resolved_burn_in}")
        _check_grid(self.resolved_segment, self.resolved_dt, self.bath)

    @property
    def resolved_dt(self) -> float:
        return self.dt if self.dt is not None else default_timestep(self.well, self.bath)

    @property
    def resolved_burn_in(self) -> float:
        if self.burn_in is not None:
            return self.burn_in
        return 3.0 / self.bath.gamma(self.well.mass)

    @property
    def gamma(self) -> float:
        return self.bath.gamma(self.well.mass)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.resolved_dt - 1e-9))

    @property
    def resolved_segment(self) -> int:
        """Noise segment length; by default spans ``20/gamma`` (or the whole run if shorter)."""
        if self.segment is not None:
            return self.segment
        span = MIN_SEGMENT
        if self.gamma > 0.0:
            span = max(span, SEGMENT_GAMMA_SPAN / (self.gamma * self.resolved_dt))
        span = min(span, max(MIN_SEGMENT, self.n_steps + 2))
        return 1 << int(math.ceil(math.log2(span)))

    @property
    def resolved_block(self) -> int:
        """Block size, reduced so that one noise segment block stays near 2**25 samples."""
        return max(1, min(self.block_size, BLOCK_SAMPLES // self.resolved_segment))


@dataclass
class EnsembleRun:
    """Outcome of :func:`ensemble_run`.

    ``escape_times`` are absolute (``inf`` when censored at ``t_max``).
    ``energy_times`` are the first times the energy reached ``eps_s``, reported as a
    diagnostic of the escape criterion.
    """

    config: EnsembleConfig
    traj_ids: np.ndarray
    escape_times: np.ndarray
    energy_times: np.ndarray
    rate: RateResult = field(init=False)
    survival: SurvivalCurve = field(init=False)

    def __post_init__(self):
        cfg = self.config
        tb = cfg.resolved_burn_in
        clock = self._clock(self.escape_times)
        if clock.size == 0:
            raise NumericalError(f"all {self.traj_ids.size} trajectories escaped during the burn-in {tb}")
        self.rate = estimate_rate(clock, cfg.t_max - tb, gamma=cfg.gamma)
        self.rate.diagnostics.update(self._criterion_diagnostics())
        self.rate.diagnostics.update({"n_traj": int(self.traj_ids.size),
                                      "n_burned": int(np.sum(self.escape_times < tb)),
                                      "burn_in": tb, "t_max": cfg.t_max, "dt": cfg.resolved_dt,
                                      "omega_c": cfg.bath.omega_c, "mode": cfg.mode, "seed": cfg.seed})
        self.survival = survival_curve(clock, cfg.t_max - tb)

    def _clock(self, times: np.ndarray) -> np.ndarray:
        tb = self.config.resolved_burn_in
        return times[times >= tb] - tb

    def _criterion_diagnostics(self) -> dict:
        if self.config.mode == "harmonic":
            return {}
        cfg = self.config
        tb = cfg.resolved_burn_in
        e_clock = self._clock(self.energy_times)
        e_rate = estimate_rate(e_clock, cfg.t_max - tb).rate if e_clock.size else None
        # energy reached eps_s but the particle never left the well before t_max
        spurious = np.isfinite(self.energy_times) & np.isinf(self.escape_times)
        return {"energy_criterion_rate": e_rate,
                "energy_only_fraction": float(np.mean(spurious))}

    @property
    def n_escaped(self) -> int:
        return int(np.count_nonzero(np.isfinite(self.escape_times)))

    @property
    def n_censored(self) -> int:
        return int(self.escape_times.size - self.n_escaped)

    def write_first_passage_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["traj_id", "seed", "escape_time", "censored"])
            for tid, t in zip(self.traj_ids, self.escape_times):
                cens = not math.isfinite(t)
                w.writerow([int(tid), self.config.seed, repr(self.config.t_max if cens else float(t)),
                            int(cens)])


def _initial_states(cfg: EnsembleConfig, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian with ``<x^2> = eps0/(M Omega0^2)``, ``<p^2> = M eps0``, redrawn until inside the well."""
    well = cfg.well
    sx = math.sqrt(well.eps0 / (well.mass * well.omega0**2))
    sp = math.sqrt(well.mass * well.eps0)
    x = np.empty(ids.size)
    p = np.empty(ids.size)
    for i, tid in enumerate(ids):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(int(tid), 0)))
        while True:
            xi, pi = rng.standard_normal(2) * (sx, sp)
            if xi < well.x_s and _energy(xi, pi, well, cfg.mode) < well.eps_s:
                break
        x[i], p[i] = xi, pi
    return x, p


def _noise_segment(cfg: EnsembleConfig, ids: np.ndarray, index: int, sigma: np.ndarray) -> np.ndarray:
    rngs = [np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(int(t), index + 1)))
            for t in ids]
    # time-major so that each step reads a contiguous row
    return np.ascontiguousarray(_synthesize(rngs, cfg.resolved_segment, sigma).T)


def _run_block(cfg: EnsembleConfig, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    well, mode = cfg.well, cfg.mode
    dt = cfg.resolved_dt
    m = well.mass
    damp = 1.0 / (1.0 + cfg.bath.eta * dt / (2.0 * m))
    segment = cfg.resolved_segment
    sigma = _psd_amplitudes(segment, dt, cfg.bath, well.hbar)
    nsteps = cfg.n_steps

    esc = np.full(ids.size, np.inf)
    e_first = np.full(ids.size, np.inf)
    x, p = _initial_states(cfg, ids)
    active = np.arange(ids.size)
    col = np.arange(ids.size)  # column of each active trajectory in the current segment
    seg_index = 0
    xi = _noise_segment(cfg, ids, 0, sigma)
    xi_now = xi[0]
    f = _force(x, well, mode)
    for n in range(nsteps):
        k = (n + 1) % segment
        if k == 0:
            seg_index += 1
            xi = _noise_segment(cfg, ids[active], seg_index, sigma)
            col = np.arange(active.size)
        xi_next = xi[k, col]
        ph = (p + 0.5 * dt * (f + xi_now)) * damp
        x = x + dt * ph / m
        f = _force(x, well, mode)
        p = (ph + 0.5 * dt * (f + xi_next)) * damp
        xi_now = xi_next
        t = (n + 1) * dt
        e = _energy(x, p, well, mode)
        over = e >= well.eps_s
        if mode == "cubic":
            fresh = over & np.isinf(e_first[active])
            if fresh.any():
                e_first[active[fresh]] = t
            out = x >= well.x_s
        else:
            out = over
        if out.any():
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
                bad = ids[active[~np.isfinite(x) | ~np.isfinite(p)]][0]
                raise NumericalError(f"trajectory {bad}: non-finite state at t = {t}")
            esc[active[out]] = t
            if mode == "harmonic":
                e_first[active[out]] = t
            keep = ~out
            active = active[keep]
            if active.size == 0:
                break
            x, p, f, xi_now, col = x[keep], p[keep], f[keep], xi_now[keep], col[keep]
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        bad = ids[active[~np.isfinite(x) | ~np.isfinite(p)]][0]
        raise NumericalError(f"trajectory {bad}: non-finite state")
    return esc, e_first


def ensemble_run(config: EnsembleConfig) -> EnsembleRun:
    """Simulate ``config.ntraj`` independent trajectories and estimate the escape rate.

    Blocks of trajectories run concurrently when ``config.workers > 1``; results are
    ordered by trajectory id, so they do not depend on scheduling or block size.
    """
    ids = np.arange(config.traj_offset, config.traj_offset + config.ntraj)
    bs = config.resolved_block
    blocks = [ids[i:i + bs] for i in range(0, ids.size, bs)]
    if config.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(lambda b: _run_block(config, b), blocks))
    else:
        parts = [_run_block(config, b) for b in blocks]
    esc = np.concatenate([p[0] for p in parts])
    efirst = np.concatenate([p[1] for p in parts])
    return EnsembleRun(config, ids, esc, efirst)


def merge_runs(runs: Sequence[EnsembleRun]) -> EnsembleRun:
    """Pool ensembles that share every setting except ``traj_offset``/``ntraj``."""
    if not runs:
        raise ParameterError("nothing to merge")
    base = replace(runs[0].config, traj_offset=0, ntraj=1, workers=1, block_size=1)
    for r in runs[1:]:
        if replace(r.config, traj_offset=0, ntraj=1, workers=1, block_size=1) != base:
            raise ParameterError("ensembles differ in more than their trajectory ranges")
    ids = np.concatenate([r.traj_ids for r in runs])
    if np.unique(ids).size != ids.size:
        raise ParameterError("ensembles share trajectory ids, so their streams overlap")
    order = np.argsort(ids, kind="stable")
    cfg = replace(runs[0].config, traj_offset=int(ids.min()), ntraj=int(ids.size))
    return EnsembleRun(cfg, ids[order], np.concatenate([r.escape_times for r in runs])[order],
                       np.concatenate([r.energy_times for r in runs])[order])


# ---------------------------------------------------------------------------
# stationarity in the harmonic test mode


@dataclass(frozen=True)
class StationaryMoments:
    """Time/ensemble averages in units of ``eps0``.

    ``potential = <x^2> M Omega0^2 / eps0``, ``kinetic = <p^2>/(M eps0)`` and
    ``energy = (potential + kinetic)/2``; ``*_err`` are standard errors over trajectories.
    """

    energy: float
    potential: float
    kinetic: float
    energy_err: float = 0.0
    potential_err: float = 0.0
    kinetic_err: float = 0.0


def harmonic_stationary_moments(well: WellModel, bath: BathSpec) -> StationaryMoments:
    """Exact stationary moments of the band-limited harmonic Langevin equation.

    Linear response: ``<x^2> = int S(w)|chi(w)|^2 dw/2pi`` with
    ``chi = 1/(M(Omega0^2 - w^2) - i eta w)``.  The kinetic part grows like
    ``(2 gamma/pi Omega0) ln(omega_c/Omega0)``, which is the cutoff correction to
    the value ``eps0`` of the energy-space equation.
    """
    m, w0, hb = well.mass, well.omega0, well.hbar
    eta, wc = bath.eta, bath.omega_c

    def resp(w):
        return 1.0 / ((m * (w0**2 - w * w)) ** 2 + (eta * w) ** 2)

    pts = [w0] if w0 < wc else None
    x2 = integrate.quad(lambda w: hb * eta * w * resp(w), 0.0, wc, points=pts, limit=500)[0] / math.pi
    p2 = integrate.quad(lambda w: hb * eta * w**3 * m * m * resp(w), 0.0, wc, points=pts,
                        limit=500)[0] / math.pi
    pot = m * w0**2 * x2 / well.eps0
    kin = p2 / (m * well.eps0)
    return StationaryMoments(0.5 * (pot + kin), pot, kin)


def _stationary_block(cfg: EnsembleConfig, ids: np.ndarray, n_relax: int, stride: int):
    well = cfg.well
    dt = cfg.resolved_dt
    segment = cfg.resolved_segment
    m, w0 = well.mass, well.omega0
    damp = 1.0 / (1.0 + cfg.bath.eta * dt / (2.0 * m))
    sigma = _psd_amplitudes(segment, dt, cfg.bath, well.hbar)
    x, p = _initial_states(cfg, ids)
    xi = _noise_segment(cfg, ids, 0, sigma)
    xi_now = xi[0]
    f = -m * w0**2 * x
    sx = np.zeros(ids.size)
    sp = np.zeros(ids.size)
    count = 0
    seg_index = 0
    for n in range(cfg.n_steps):
        k = (n + 1) % segment
        if k == 0:
            seg_index += 1
            xi = _noise_segment(cfg, ids, seg_index, sigma)
        xi_next = xi[k]
        ph = (p + 0.5 * dt * (f + xi_now)) * damp
        x = x + dt * ph / m
        f = -m * w0**2 * x
        p = (ph + 0.5 * dt * (f + xi_next)) * damp
        xi_now = xi_next
        if n >= n_relax and (n - n_relax) % stride == 0:
            sx += x * x
            sp += p * p
            count += 1
    return sx / count, sp / count


def stationary_moments(well: WellModel, bath: BathSpec, ntraj: int = 400, t_relax: Optional[float] = None,
                       t_avg: float = 200.0, seed: int = 0, dt: Optional[float] = None,
                       stride: int = 10, segment: Optional[int] = None) -> StationaryMoments:
    """Sampled stationary moments of the harmonic oscillator without absorption.

    Each trajectory starts from the Gaussian initial state, relaxes for ``t_relax``
    (default ``3/gamma``) and is then averaged over ``t_avg``.
    """
    gamma = bath.gamma(well.mass)
    if t_relax is None:
        if gamma <= 0.0:
            raise ParameterError("t_relax defaults to 3/gamma and needs eta > 0")
        t_relax = 3.0 / gamma
    cfg = EnsembleConfig(well, bath, ntraj, t_relax + t_avg, dt=dt, burn_in=0.0, seed=seed,
                         mode="harmonic", segment=segment)
    n_relax = int(round(t_relax / cfg.resolved_dt))
    if n_relax >= cfg.n_steps:
        raise ParameterError("t_avg is shorter than one step")
    ids = np.arange(ntraj)
    bs = cfg.resolved_block
    parts = [_stationary_block(cfg, ids[i:i + bs], n_relax, stride) for i in range(0, ntraj, bs)]
    x2 = np.concatenate([a for a, _ in parts])
    p2 = np.concatenate([b for _, b in parts])
    m, w0 = well.mass, well.omega0
    pot = x2 * m * w0**2 / well.eps0
    kin = p2 / (m * well.eps0)
    en = 0.5 * (pot + kin)

    def se(a):
        return float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0

    return StationaryMoments(float(en.mean()), float(pot.mean()), float(kin.mean()),
                             se(en), se(pot), se(kin))
