"""Grid propagation: unitarity, free-packet analytics, convergence, channels."""

import cmath
import math

import numpy as np
import pytest

from nadyn import models as M
from nadyn.errors import BadSupport
from nadyn.wavepacket import (analyze, check_support, init_packet, propagate,
                              split_operator_step)


def test_init_norm_and_surface():
    m = M.single_avoided_crossing()
    wp = init_packet(m, R0=-9.0, P0=20.0, sigma_R=1.0, surface=0, n=2048)
    assert wp.norm() == pytest.approx(1.0, abs=1e-12)
    a = analyze(wp)
    assert a.pop[0] == pytest.approx(1.0, abs=1e-12)
    assert a.pop[1] == pytest.approx(0.0, abs=1e-12)
    assert a.mean_P == pytest.approx(20.0, abs=1e-6)
    assert a.mean_R == pytest.approx(-9.0, abs=1e-9)


def test_init_far_packet_is_single_diabatic_component():
    m = M.single_avoided_crossing()
    wp = init_packet(m, R0=-9.0, P0=20.0, sigma_R=1.0, surface=0, n=2048)
    minor = np.sum(np.abs(wp.psi[1]) ** 2) * wp.dR
    assert minor < 1e-3


def test_init_bad_support():
    m = M.single_avoided_crossing()
    with pytest.raises(BadSupport):
        init_packet(m, R0=-28.0, P0=5.0, sigma_R=2.0, n=1024)


def test_init_validation():
    m = M.single_avoided_crossing()
    with pytest.raises(ValueError):
        init_packet(m, R0=0.0, P0=5.0, sigma_R=1.0, n=1000)   # not 2^k
    with pytest.raises(ValueError):
        init_packet(m, R0=0.0, P0=5.0, sigma_R=-1.0)
    with pytest.raises(ValueError):
        init_packet(m, R0=0.0, P0=5.0, sigma_R=1.0, surface=2)


def test_free_packet_analytics():
    m = M.constant_gap(gap=0.0)   # V = 0 everywhere
    sig = 1.0
    wp = init_packet(m, R0=-6.0, P0=15.0, sigma_R=sig, surface=1, n=2048,
                     dt=0.1)
    T = 800 * wp.dt
    propagate(wp, 800)
    a = analyze(wp)
    assert a.mean_R == pytest.approx(-6.0 + 15.0 / 2000.0 * T, abs=1e-8)
    assert a.mean_P == pytest.approx(15.0, abs=1e-8)
    assert a.var_R == pytest.approx(sig ** 2 + (T / (2 * 2000.0 * sig)) ** 2,
                                    rel=1e-8)
    assert a.norm == pytest.approx(1.0, abs=1e-10)


def test_constant_gap_packet_is_stationary_with_phase():
    gap = 0.04
    sig = 1.0
    kw = dict(R0=-4.0, P0=10.0, sigma_R=sig, surface=1, n=1024, dt=0.1)
    wp = init_packet(M.constant_gap(gap=gap), **kw)
    free = init_packet(M.constant_gap(gap=0.0), **kw)
    n_steps = 500
    propagate(wp, n_steps)
    propagate(free, n_steps)
    a = analyze(wp)
    assert a.pop[1] == pytest.approx(1.0, abs=1e-10)
    assert a.pop[0] == pytest.approx(0.0, abs=1e-12)
    # upper surface sits at E1 = +gap/2: evolution = free x e^{-i E1 t}
    expected = cmath.exp(-1j * 0.5 * gap * wp.t)
    mask = np.abs(free.psi[0]) > 1e-6
    ratio = wp.psi[0][mask] / free.psi[0][mask]
    assert np.allclose(ratio, expected, atol=1e-9)


def test_norm_and_energy_conserved_through_crossing():
    m = M.single_avoided_crossing()
    wp = init_packet(m, R0=-5.0, P0=20.0, sigma_R=0.8, surface=0, n=2048,
                     dt=0.05)
    e0 = analyze(wp).energy
    for _ in range(20):
        propagate(wp, 200)
        assert wp.norm() == pytest.approx(1.0, abs=1e-10)
    a = analyze(wp)
    assert a.energy == pytest.approx(e0, rel=1e-6)
    check_support(wp)
    assert 0.0 < a.pop[1] < 1.0   # the crossing actually transferred some


def test_single_step_norm_drift():
    m = M.dual_avoided_crossing()
    wp = init_packet(m, R0=-7.0, P0=25.0, sigma_R=1.0, n=1024)
    split_operator_step(wp)
    assert wp.norm() == pytest.approx(1.0, abs=1e-12)


def test_dt_halving_second_order():
    m = M.single_avoided_crossing()

    def pop1_at(dt, T=200.0):
        wp = init_packet(m, R0=-2.0, P0=20.0, sigma_R=0.7, n=1024, dt=dt)
        propagate(wp, int(round(T / dt)))
        return analyze(wp).pop[1]

    ref = pop1_at(0.025)
    errs = [abs(pop1_at(dt) - ref) for dt in (0.4, 0.2, 0.1)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.5)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.5)


def test_channels_for_clean_transmission():
    m = M.constant_gap(gap=0.0)
    wp = init_packet(m, R0=-5.0, P0=30.0, sigma_R=1.0, surface=1, n=2048,
                     dt=0.25)
    propagate(wp, 6000)   # t = 1500, center at +17.5
    a = analyze(wp)
    assert a.channels.sum() == pytest.approx(1.0, abs=1e-6)
    assert a.transmission[1] == pytest.approx(1.0, abs=1e-6)
    assert a.transmission[0] == pytest.approx(0.0, abs=1e-9)
    assert a.reflection.sum() == pytest.approx(0.0, abs=1e-9)
