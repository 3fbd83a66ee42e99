import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ztescape.bath import BathSpec, noise_kernel_sampled
from ztescape.errors import NumericalError, ParameterError, PreconditionError
from ztescape.langevin import (EnsembleConfig, NoisePath, ensemble_run, estimate_rate,
                               exponential_coverage, harmonic_stationary_moments,
                               integrate_trajectory, merge_runs, periodogram, stationary_moments,
                               survival_curve, synthesize_noise, write_survival_csv)
from ztescape.model import PhasePoint, potential, well_from_barrier

BATH = BathSpec.from_gamma(0.05, omega_c=50.0)
DT = 0.2 / 50.0


def quiet_noise(nt, dt=0.02):
    return NoisePath(dt=dt, samples=np.zeros(nt), seed=None, omega_c=50.0)


# -- noise -------------------------------------------------------------------

def test_zero_friction_gives_zero_noise():
    path = synthesize_noise(256, DT, BathSpec(0.0), seed=3)
    assert not path.samples.any()


def test_noise_preconditions():
    with pytest.raises(PreconditionError):
        synthesize_noise(256, 0.1, BATH)  # pi/50 < 0.1
    with pytest.raises(PreconditionError):
        synthesize_noise(255, DT, BATH)


def test_noise_is_deterministic_given_seed():
    a = synthesize_noise(512, DT, BATH, seed=11).samples
    b = synthesize_noise(512, DT, BATH, seed=11).samples
    c = synthesize_noise(512, DT, BATH, seed=12).samples
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_periodogram_matches_target_spectrum():
    paths = np.array([synthesize_noise(512, DT, BATH, seed=s).samples for s in range(200)])
    omega, spec = periodogram(paths, DT)
    sel = (omega >= 0.2 * BATH.omega_c) & (omega <= 0.8 * BATH.omega_c)
    target = BATH.eta * omega[sel]
    mean = spec[:, sel].mean(axis=0)
    # periodogram ordinates are exponential, so the standard error of the mean is S/sqrt(n)
    se = target / math.sqrt(len(paths))
    assert np.all(np.abs(mean - target) < 3 * se)
    assert abs(paths.mean()) < 4 * paths.std() / math.sqrt(paths.size / 20)


def test_lag_zero_variance():
    paths = np.array([synthesize_noise(2048, DT, BATH, seed=s).samples for s in range(100)])
    target = float(noise_kernel_sampled(0.0, BATH))
    assert target == pytest.approx(BATH.eta * BATH.omega_c**2 / (2 * math.pi))
    assert paths.var() == pytest.approx(target, rel=0.05)


def test_noise_autocovariance_follows_kernel():
    paths = np.array([synthesize_noise(4096, DT, BATH, seed=s).samples for s in range(50)])
    for lag in (1, 5, 20):
        c = np.mean(paths[:, :-lag] * paths[:, lag:])
        ref = float(noise_kernel_sampled(lag * DT, BATH))
        assert c == pytest.approx(ref, abs=0.05 * float(noise_kernel_sampled(0.0, BATH)))


# -- single trajectories -----------------------------------------------------

def test_fixed_point_stays_put():
    well = well_from_barrier(4.0)
    res = integrate_trajectory(PhasePoint(0.0, 0.0), quiet_noise(5000), well, BathSpec(0.0))
    assert res.escape_time is None
    assert res.final == (0.0, 0.0)


def test_conservative_motion_below_separatrix():
    well = well_from_barrier(4.0)
    x0 = -0.4 * well.x_s
    e0 = potential(x0, well)
    assert e0 < well.eps_s
    dt = 0.02
    n = int(1000 * 2 * math.pi / dt)
    res = integrate_trajectory(PhasePoint(x0, 0.0), quiet_noise(n, dt), well, BathSpec(0.0), stride=50)
    assert res.escape_time is None
    drift = np.max(np.abs(res.energy - e0)) / e0
    assert drift < 2e-3
    half = integrate_trajectory(PhasePoint(x0, 0.0), quiet_noise(n // 20, dt / 2), well, BathSpec(0.0),
                                stride=10)
    short = integrate_trajectory(PhasePoint(x0, 0.0), quiet_noise(n // 40, dt), well, BathSpec(0.0),
                                 stride=5)
    ratio = np.max(np.abs(short.energy - e0)) / np.max(np.abs(half.energy - e0))
    assert ratio == pytest.approx(4.0, rel=0.1)


def test_escape_when_started_with_energy_above_barrier_in_harmonic_mode():
    well = well_from_barrier(4.0)
    # a push from the noise lifts the energy over eps_s on the first step
    noise = NoisePath(0.02, np.full(100, 200.0), None, 50.0)
    res = integrate_trajectory(PhasePoint(0.0, 1.9), noise, well, BathSpec(0.0), mode="harmonic")
    assert res.escape_time == pytest.approx(0.02)


def test_trajectory_preconditions():
    well = well_from_barrier(4.0)
    with pytest.raises(PreconditionError):
        integrate_trajectory(PhasePoint(well.x_s, 0.0), quiet_noise(10), well, BathSpec(0.0))
    with pytest.raises(PreconditionError):
        integrate_trajectory(PhasePoint(-3 * well.x_s, 0.0), quiet_noise(10), well, BathSpec(0.0))
    with pytest.raises(ParameterError):
        integrate_trajectory(PhasePoint(0.0, 0.0), quiet_noise(10), well, BathSpec(0.0), mode="quartic")


def test_non_finite_state_is_reported_with_id():
    well = well_from_barrier(4.0)
    noise = NoisePath(0.02, np.array([0.0, np.inf, 0.0, 0.0]), None, 50.0)
    with pytest.raises(NumericalError, match="trajectory 7"):
        integrate_trajectory(PhasePoint(0.1, 0.0), noise, well, BathSpec(0.0), traj_id=7)


# -- estimator and survival --------------------------------------------------

def test_estimate_rate_examples():
    assert estimate_rate([1, 1, 1, 1], 10.0).rate == 1.0
    bound = estimate_rate(np.full(100, np.inf), 10.0)
    assert bound.rate == 0.0 and bound.diagnostics["upper_bound_only"]
    assert bound.interval[1] == pytest.approx(3.0 / 1000.0, rel=0.01)
    with pytest.raises(ParameterError):
        estimate_rate([], 10.0)


def test_estimate_rate_poisson_interval():
    r = estimate_rate([1.0, 2.0, 3.0, 20.0], 10.0)
    assert r.rate == pytest.approx(3.0 / 16.0)
    lo, hi = r.interval
    # exact Poisson limits for 3 events: P(N >= 3 | lo) = P(N <= 3 | hi) = 0.025
    assert stats.poisson.cdf(2, lo * 16.0) == pytest.approx(0.975, rel=1e-9)
    assert stats.poisson.cdf(3, hi * 16.0) == pytest.approx(0.025, rel=1e-9)
    assert r.rbar is None
    assert estimate_rate([1.0], 10.0, gamma=0.25).rbar == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 50.0), min_size=1, max_size=30), st.floats(0.1, 100.0))
def test_estimate_rate_unit_rescaling(times, c):
    t_max = 40.0
    a = estimate_rate(times, t_max)
    b = estimate_rate(np.array(times) * c, t_max * c)
    if a.rate == 0.0:
        assert b.interval[1] == pytest.approx(a.interval[1] / c, rel=1e-12)
    else:
        assert b.rate == pytest.approx(a.rate / c, rel=1e-12)
        assert b.interval[0] == pytest.approx(a.interval[0] / c, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 20.0), min_size=1, max_size=50))
def test_survival_curve_invariants(times):
    c = survival_curve(times, 10.0)
    assert c.s[0] == 1.0
    assert np.all(np.diff(c.s) <= 0.0)
    assert np.all(c.lo <= c.s + 1e-12) and np.all(c.s <= c.hi + 1e-12)


def test_survival_band_covers_true_exponential(tmp_path):
    rng = np.random.default_rng(4)
    times = rng.exponential(1 / 0.2, 2000)
    c = survival_curve(times, 8.0)
    assert exponential_coverage(c, estimate_rate(times, 8.0).rate) > 0.9
    write_survival_csv(tmp_path / "s.csv", c)
    assert (tmp_path / "s.csv").read_text().startswith("t,S,lo95,hi95\n")


# -- ensembles ---------------------------------------------------------------

@pytest.fixture(scope="module")
def small_config():
    return EnsembleConfig(well_from_barrier(3.0), BathSpec.from_gamma(0.1), 40, 80.0, burn_in=5.0,
                          seed=5, segment=4096)


@pytest.fixture(scope="module")
def small_run(small_config):
    return ensemble_run(small_config)


def test_ensemble_bookkeeping(small_run):
    assert small_run.n_escaped + small_run.n_censored == 40
    assert small_run.survival.s[0] == 1.0
    assert np.all(np.diff(small_run.survival.s) <= 0)
    assert np.all(small_run.energy_times <= small_run.escape_times)
    d = small_run.rate.diagnostics
    assert d["n_traj"] == 40 and "energy_criterion_rate" in d


def test_ensemble_determinism_and_block_independence(small_config, small_run):
    again = ensemble_run(small_config)
    blocked = ensemble_run(replace(small_config, block_size=7, workers=3))
    assert np.array_equal(again.escape_times, small_run.escape_times)
    assert np.array_equal(blocked.escape_times, small_run.escape_times)


def test_merge_property(small_config, small_run):
    a = ensemble_run(replace(small_config, ntraj=15))
    b = ensemble_run(replace(small_config, ntraj=25, traj_offset=15))
    merged = merge_runs([b, a])
    assert np.array_equal(merged.escape_times, small_run.escape_times)
    assert merged.rate.rate == small_run.rate.rate
    with pytest.raises(ParameterError):
        merge_runs([a, a])
    with pytest.raises(ParameterError):
        merge_runs([a, ensemble_run(replace(small_config, ntraj=5, traj_offset=40, seed=6))])


def test_first_passage_csv(small_run, tmp_path):
    path = tmp_path / "fp.csv"
    small_run.write_first_passage_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "traj_id,seed,escape_time,censored"
    assert len(lines) == 41


def test_config_validation():
    well = well_from_barrier(4.0)
    with pytest.raises(ParameterError):
        EnsembleConfig(well, BATH, 0, 100.0)
    with pytest.raises(ParameterError):
        EnsembleConfig(well, BATH, 10, 50.0)  # shorter than the 3/gamma burn-in
    with pytest.raises(PreconditionError):
        EnsembleConfig(well, BATH, 10, 100.0, dt=0.1)
    cfg = EnsembleConfig(well, BATH, 10, 100.0)
    assert cfg.resolved_dt == pytest.approx(0.004)
    assert cfg.resolved_segment * cfg.resolved_dt >= 20.0 / 0.05 or \
        cfg.resolved_segment >= cfg.n_steps + 2


def test_all_escape_in_burn_in_is_an_error():
    cfg = EnsembleConfig(well_from_barrier(0.5), BathSpec.from_gamma(0.1), 5, 60.0, burn_in=50.0, seed=1,
                         mode="harmonic", segment=4096)
    with pytest.raises(NumericalError):
        ensemble_run(cfg)


# -- stationarity ------------------------------------------------------------

def test_exact_stationary_moments_small_damping_limit():
    well = well_from_barrier(4.0)
    m = harmonic_stationary_moments(well, BathSpec.from_gamma(1e-4, omega_c=50.0))
    assert m.potential == pytest.approx(1.0, abs=2e-3)
    assert m.energy == pytest.approx(1.0, abs=2e-3)


def test_stationary_moments_match_linear_response():
    well = well_from_barrier(4.0)
    bath = BathSpec.from_gamma(0.1, omega_c=10.0)
    exact = harmonic_stationary_moments(well, bath)
    mc = stationary_moments(well, bath, ntraj=200, t_avg=150.0, seed=2)
    assert abs(mc.potential - exact.potential) < 4 * mc.potential_err
    assert abs(mc.kinetic - exact.kinetic) < 4 * mc.kinetic_err
    # equipartition up to the cutoff correction of the kinetic part
    assert mc.potential == pytest.approx(1.0, rel=0.1)
    assert exact.kinetic > exact.potential
