"""Surface-hopping engine: steps, hops, runs, and driver/ops consistency."""

import numpy as np
import pytest

from nadyn import models as M
from nadyn.errors import DegeneratePopulation
from nadyn.fssh import FsshTrajectory, attempt_hop, electronic_step, \
    hop_probability, nuclear_step, rng_for_trajectory, run_fssh


class SeqRng:
    """Replays a fixed uniform stream (duck-typed Generator stand-in)."""

    def __init__(self, values):
        self.values = list(values)
        self.i = 0

    def random(self):
        v = self.values[self.i]
        self.i += 1
        return v


def test_nuclear_step_free_particle():
    m = M.constant_gap()
    traj = FsshTrajectory.create(m, R=-3.0, P=10.0)
    nuclear_step(traj, 0.5)
    assert traj.R == pytest.approx(-3.0 + 10.0 * 0.5 / 2000.0, rel=1e-15)
    assert traj.P == 10.0


def test_nuclear_step_energy_drift_single_step():
    m = M.single_avoided_crossing()
    traj = FsshTrajectory.create(m, R=-5.0, P=20.0)
    e0 = traj.energy
    nuclear_step(traj, 0.1)
    assert abs(traj.energy - e0) < 1e-10


def test_nuclear_step_reversible():
    m = M.single_avoided_crossing()
    traj = FsshTrajectory.create(m, R=-1.0, P=15.0)
    nuclear_step(traj, 0.1)
    nuclear_step(traj, -0.1)
    assert traj.R == pytest.approx(-1.0, abs=1e-10)
    assert traj.P == pytest.approx(15.0, abs=1e-10)


def test_electronic_step_pure_phase_constant_gap():
    gap = 0.01
    m = M.constant_gap(gap=gap)
    rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    traj = FsshTrajectory.create(m, R=0.0, P=0.0, rho=rho0)
    T = 0.0
    for _ in range(200):
        electronic_step(traj, 0.5)
        T += 0.5
    # zero coupling: rho01(t) = rho01(0) e^{-i w01 t}, w01 = E0-E1 = -gap
    expected = 0.5 * np.exp(1j * gap * T)
    assert traj.rho[0, 1] == pytest.approx(expected, abs=1e-9)
    assert traj.rho[0, 0].real == pytest.approx(0.5, abs=1e-12)
    assert traj.rho[1, 1].real == pytest.approx(0.5, abs=1e-12)


def test_electronic_step_trace_and_hermiticity():
    m = M.single_avoided_crossing()
    traj = FsshTrajectory.create(m, R=-0.5, P=20.0)
    for _ in range(50):
        nuclear_step(traj, 0.1)
        electronic_step(traj, 0.1)
        tr = traj.rho[0, 0] + traj.rho[1, 1]
        assert abs(tr - 1.0) < 1e-10
        assert traj.rho[1, 0] == np.conj(traj.rho[0, 1])


def test_electronic_step_halved_dt_convergence():
    m = M.single_avoided_crossing()

    def transit(dt, n):
        traj = FsshTrajectory.create(m, R=-4.0, P=20.0)
        for _ in range(n):
            nuclear_step(traj, dt)
            electronic_step(traj, dt)
        return traj.rho.copy()

    a = transit(0.1, 8000)
    b = transit(0.05, 16000)
    assert np.allclose(a, b, atol=1e-6)


def _with_frame(traj, d01, e0=0.0, e1=0.01):
    traj.frame = M.AdiabaticFrame(
        R=traj.R, E=np.array([e0, e1]), F=np.zeros(2),
        d=np.array([[0.0, d01], [-d01, 0.0]]), U=np.eye(2))
    return traj


def test_hop_probability_worked_example():
    m = M.constant_gap(mass=2000.0)
    traj = FsshTrajectory.create(m, R=0.0, P=20.0)
    _with_frame(traj, d01=0.01 * 2000.0 / 20.0)   # (P/M) d01 = 0.01
    traj.rho = np.array([[0.6, 0.3], [0.3, 0.4]], dtype=complex)
    p = hop_probability(traj, 1, 0.1)
    assert p == pytest.approx(2 * 0.01 * 0.3 * 0.1 / 0.6, rel=1e-12)


def test_hop_probability_zero_coherence_and_clipping():
    m = M.constant_gap()
    traj = FsshTrajectory.create(m, R=0.0, P=20.0)
    _with_frame(traj, d01=1.0)
    traj.rho = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    assert hop_probability(traj, 1, 0.1) == 0.0
    # negative flux clips to zero
    traj.rho = np.array([[0.8, -0.2], [-0.2, 0.2]], dtype=complex)
    assert hop_probability(traj, 1, 0.1) == 0.0


def test_hop_probability_degenerate_population():
    m = M.constant_gap()
    traj = FsshTrajectory.create(m, R=0.0, P=20.0, state=0)
    traj.rho = np.array([[1e-13, 0.0], [0.0, 1.0]], dtype=complex)
    with pytest.raises(DegeneratePopulation):
        hop_probability(traj, 1, 0.1)


def test_attempt_hop_nothing_to_do():
    m = M.constant_gap()
    traj = FsshTrajectory.create(m, R=0.0, P=20.0, rng=SeqRng([0.0]))
    attempt_hop(traj, 0.1)
    assert traj.nu == 0 and traj.hop_log == [] and traj.P == 20.0


def test_attempt_hop_forced_downward_conserves_energy():
    m = M.constant_gap(gap=0.05)
    traj = FsshTrajectory.create(m, R=0.0, P=20.0, state=1,
                                 rng=SeqRng([0.0]))
    # d[1, 0] = -d01 must give positive flux from state 1
    _with_frame(traj, d01=-50.0, e0=-0.025, e1=0.025)
    traj.rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    e_before = 0.025 + traj.P ** 2 / (2 * m.mass)
    attempt_hop(traj, 0.1)
    assert traj.nu == 0
    assert traj.hop_log[-1][3] == "applied"
    e_after = -0.025 + traj.P ** 2 / (2 * m.mass)
    assert e_after == pytest.approx(e_before, abs=1e-10)


def test_attempt_hop_insufficient_energy_frustrated():
    m = M.constant_gap(gap=0.05)
    # upward gap 0.05 needs P^2 >= 2*2000*0.05 = 200; P = 10 has 100
    traj = FsshTrajectory.create(m, R=0.0, P=10.0, state=0,
                                 rng=SeqRng([0.0]))
    _with_frame(traj, d01=50.0, e0=-0.025, e1=0.025)
    traj.rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    attempt_hop(traj, 0.1)
    assert traj.nu == 0 and traj.P == 10.0
    assert traj.hop_log[-1][3] == "frustrated"


def test_run_zero_coupling_is_adiabatic():
    m = M.constant_gap()
    res = run_fssh(m, R0=-3.0, P0=12.0, state=0, dt=0.1, n_steps=500,
                   save_every=50, seed=4)
    assert np.all(res.nu == 0)
    assert res.hop_log == []
    assert np.allclose(res.rho[:, 0, 0].real, 1.0, atol=1e-12)
    assert np.allclose(res.R, -3.0 + 12.0 / 2000.0 * res.t, atol=1e-10)


def test_run_scattering_completes():
    m = M.single_avoided_crossing()
    res = run_fssh(m, R0=-9.0, P0=20.0, state=0, dt=0.1, n_steps=40000,
                   save_every=100, seed=12)
    assert np.any(np.abs(res.R) > 10.0)
    assert abs(res.final_R) > 10.0


def test_run_energy_conserved_through_hops():
    m = M.single_avoided_crossing()
    found_hop = False
    for seed in range(10):
        res = run_fssh(m, R0=-9.0, P0=20.0, state=0, dt=0.1, n_steps=25000,
                       save_every=50, seed=seed)
        drift = np.max(np.abs(res.energy - res.energy[0]))
        assert drift / abs(res.energy[0]) < 1e-6
        found_hop = found_hop or res.n_applied > 0
    assert found_hop


def test_run_rho_eigenvalues_bounded():
    m = M.single_avoided_crossing()
    res = run_fssh(m, R0=-9.0, P0=20.0, state=0, dt=0.1, n_steps=25000,
                   save_every=250, seed=3)
    for k in range(res.rho.shape[0]):
        ev = np.linalg.eigvalsh(res.rho[k])
        assert ev[0] > -1e-6 and ev[1] < 1 + 1e-6
        assert abs(res.rho[k, 0, 0] + res.rho[k, 1, 1] - 1.0) < 1e-8


def test_run_deterministic_given_seed():
    m = M.single_avoided_crossing()
    a = run_fssh(m, R0=-9.0, P0=20.0, state=0, dt=0.1, n_steps=20000, seed=42)
    b = run_fssh(m, R0=-9.0, P0=20.0, state=0, dt=0.1, n_steps=20000, seed=42)
    assert a.hop_log == b.hop_log
    assert np.array_equal(a.R, b.R) and np.array_equal(a.P, b.P)
    assert np.array_equal(a.rho, b.rho)


def test_run_matches_stepwise_operations():
    m = M.single_avoided_crossing()
    n_steps = 2000
    dt = 0.1
    seed = 7
    res = run_fssh(m, R0=-6.0, P0=20.0, state=0, dt=dt, n_steps=n_steps,
                   save_every=100, seed=seed)

    uniforms = rng_for_trajectory(seed).random(n_steps)
    traj = FsshTrajectory.create(m, R=-6.0, P=20.0, state=0,
                                 rng=SeqRng(uniforms))
    k = 1
    for i in range(n_steps):
        nuclear_step(traj, dt)
        electronic_step(traj, dt)
        attempt_hop(traj, dt)
        if (i + 1) % 100 == 0:
            assert res.R[k] == pytest.approx(traj.R, abs=1e-12)
            assert res.P[k] == pytest.approx(traj.P, abs=1e-12)
            assert res.nu[k] == traj.nu
            assert np.allclose(res.rho[k], traj.rho, atol=1e-12)
            k += 1
    assert len(res.hop_log) == len(traj.hop_log)
    for (ta, fa, to_a, sa), (tb, fb, to_b, sb) in zip(res.hop_log,
                                                      traj.hop_log):
        assert (fa, to_a, sa) == (fb, to_b, sb)
        assert ta == pytest.approx(tb, rel=1e-9)


def test_ensemble_fraction_tracks_mean_population():
    # high momentum: no frustrated hops; state-1 fraction ~ ensemble <rho11>
    m = M.single_avoided_crossing()
    n = 400
    frac = 0.0
    pops = np.empty(n)
    fr_count = 0
    for i in range(n):
        res = run_fssh(m, R0=-5.0, P0=30.0, state=0, dt=0.1, n_steps=3500,
                       save_every=3500, seed=0,
                       rng=rng_for_trajectory(1234, i))
        frac += res.final_nu
        pops[i] = res.final_rho[1, 1].real
        fr_count += res.n_frustrated
    assert fr_count == 0
    frac /= n
    mean_rho = pops.mean()
    se = np.sqrt(frac * (1 - frac) / n + pops.var(ddof=1) / n)
    assert abs(frac - mean_rho) <= 3 * se
