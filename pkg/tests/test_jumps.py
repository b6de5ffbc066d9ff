"""Momentum-jump algebra: energy identities and composition patterns."""

import numpy as np
import pytest

from nadyn.errors import MixedDirection, PatternMismatch
from nadyn.jumps import JumpOutcome, JumpSpec, apply_jump, compose_jumps, \
    fssh_equivalent

E1 = np.array([1.0])


def unit(rng, n=3):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def test_zero_delta_is_identity():
    out = apply_jump(np.array([3.0, -1.0, 0.5]),
                     JumpSpec(np.array([0.0, 1.0, 0.0]), 0.0, 2000.0))
    assert out.applied
    assert np.array_equal(out.new_P, [3.0, -1.0, 0.5])
    assert out.kinetic_change == 0.0


def test_single_scale_worked_example():
    out = apply_jump(20.0 * E1, JumpSpec(E1, 0.05, 2000.0, "qcle-single"))
    assert out.applied
    assert out.new_P[0] == pytest.approx(np.sqrt(500.0), rel=1e-14)
    assert out.kinetic_change == pytest.approx(0.025, rel=1e-14)


def test_double_scale_frustrated_example():
    out = apply_jump(20.0 * E1, JumpSpec(E1, -0.25, 2000.0, "fssh-double"))
    assert out.status == "frustrated"
    assert out.new_P is None and out.kinetic_change is None


def test_sgn_zero_is_plus_one():
    out = apply_jump(0.0 * E1, JumpSpec(E1, 0.05, 2000.0, "qcle-single"))
    assert out.new_P[0] == pytest.approx(np.sqrt(100.0), rel=1e-14)
    assert out.new_P[0] > 0.0


def test_orthogonal_components_bit_identical():
    P = np.array([0.123456789, -7.25, 3.75])
    d = np.array([1.0, 0.0, 0.0])
    out = apply_jump(P, JumpSpec(d, 0.01, 2000.0, "fssh-double"))
    assert out.new_P[1] == P[1] and out.new_P[2] == P[2]


def test_energy_bookkeeping_single_scale():
    # diagonal (a,a) -> coherence (a,b): potential moves from E_a to the mean
    rng = np.random.default_rng(5)
    M = 1836.0
    for _ in range(200):
        d = unit(rng)
        P = rng.uniform(5, 40) * d + rng.standard_normal(3)
        Ea, Eb = rng.uniform(-0.2, 0.2, 2)
        out = apply_jump(P, JumpSpec(d, Ea - Eb, M, "qcle-single"))
        if not out.applied:
            continue
        before = Ea + (P @ P) / (2 * M)
        after = (Ea + Eb) / 2 + (out.new_P @ out.new_P) / (2 * M)
        assert before == pytest.approx(after, abs=1e-12)


def test_energy_bookkeeping_double_scale():
    rng = np.random.default_rng(6)
    M = 2000.0
    for _ in range(200):
        d = unit(rng)
        P = rng.uniform(5, 40) * d + rng.standard_normal(3)
        Ea, Eb = rng.uniform(-0.2, 0.2, 2)
        out = apply_jump(P, JumpSpec(d, Ea - Eb, M, "fssh-double"))
        if not out.applied:
            continue
        before = Ea + (P @ P) / (2 * M)
        after = Eb + (out.new_P @ out.new_P) / (2 * M)
        assert before == pytest.approx(after, abs=1e-12)


def test_frustration_monotone_in_momentum():
    spec = JumpSpec(E1, -0.05, 2000.0, "fssh-double")
    # threshold |P| = sqrt(2*0.05*2000) = sqrt(200)
    assert not apply_jump(14.0 * E1, spec).applied
    assert apply_jump(14.2 * E1, spec).applied
    assert apply_jump(-14.2 * E1, spec).applied
    assert apply_jump(30.0 * E1, spec).applied


def test_two_singles_equal_one_double():
    rng = np.random.default_rng(8)
    for _ in range(300):
        d = unit(rng)
        P = rng.uniform(10, 40) * d
        dE = rng.uniform(-0.02, 0.05)
        single = JumpSpec(d, dE, 2000.0, "qcle-single")
        double = JumpSpec(d, dE, 2000.0, "fssh-double")
        two = compose_jumps(P, [single, single])
        one = apply_jump(P, double)
        assert two.applied == one.applied
        if one.applied:
            assert np.allclose(two.new_P, one.new_P, rtol=0.0, atol=1e-12)


def test_there_and_back_is_identity():
    rng = np.random.default_rng(9)
    for _ in range(300):
        d = unit(rng)
        P = rng.uniform(10, 40) * d + 0.3 * rng.standard_normal(3)
        dE = rng.uniform(-0.03, 0.03)
        out = compose_jumps(P, [JumpSpec(d, dE, 2000.0),
                                JumpSpec(d, -dE, 2000.0)])
        if out.applied:
            assert np.allclose(out.new_P, P, rtol=0.0, atol=1e-12)
            assert out.kinetic_change == pytest.approx(0.0, abs=1e-15)


def test_frustrated_stage_aborts_composition():
    out = compose_jumps(5.0 * E1, [JumpSpec(E1, -0.25, 2000.0),
                                   JumpSpec(E1, +0.25, 2000.0)])
    assert out.status == "frustrated"


def test_empty_composition_is_identity():
    out = compose_jumps(np.array([2.0]), [])
    assert out.applied and out.new_P[0] == 2.0 and out.kinetic_change == 0.0


def test_mixed_direction_rejected():
    d2 = np.array([0.0, 1.0])
    d2b = np.array([1.0, 0.0])
    with pytest.raises(MixedDirection):
        compose_jumps(np.array([3.0, 4.0]),
                      [JumpSpec(d2, 0.01, 2000.0), JumpSpec(d2b, 0.01, 2000.0)])
    with pytest.raises(ValueError):
        compose_jumps(np.array([3.0, 4.0]),
                      [JumpSpec(d2, 0.01, 2000.0), JumpSpec(d2, 0.01, 1000.0)])


def test_spec_validation():
    with pytest.raises(ValueError):
        JumpSpec(np.array([1.0, 1.0]), 0.0, 2000.0)   # not unit
    with pytest.raises(ValueError):
        JumpSpec(E1, 0.0, -2000.0)
    with pytest.raises(ValueError):
        JumpSpec(E1, float("inf"), 2000.0)
    with pytest.raises(ValueError):
        JumpSpec(E1, 0.0, 2000.0, scale="triple")


def test_equivalent_pair_same_delta():
    spec = fssh_equivalent([JumpSpec(E1, 0.012, 2000.0),
                            JumpSpec(E1, 0.012, 2000.0)])
    assert spec.scale == "fssh-double" and spec.deltaE == 0.012


def test_equivalent_pair_opposite_delta():
    spec = fssh_equivalent([JumpSpec(E1, 0.012, 2000.0),
                            JumpSpec(E1, -0.012, 2000.0)])
    assert spec.scale == "fssh-double" and spec.deltaE == 0.0


def test_equivalent_triple_two_leg_chain():
    # a = b + c: jump over the full gap equals the chain through a middle level
    a, b = 0.03, 0.01
    spec = fssh_equivalent([JumpSpec(E1, a, 2000.0),
                            JumpSpec(E1, b, 2000.0),
                            JumpSpec(E1, a - b, 2000.0)])
    assert spec.deltaE == a and spec.scale == "fssh-double"


def test_equivalent_triple_closed_loop():
    spec = fssh_equivalent([JumpSpec(E1, 0.02, 2000.0),
                            JumpSpec(E1, -0.015, 2000.0),
                            JumpSpec(E1, -0.005, 2000.0)])
    assert spec.deltaE == 0.0


def test_equivalent_application_matches_composition():
    rng = np.random.default_rng(10)
    for _ in range(300):
        d = unit(rng)
        P = rng.uniform(20, 50) * d
        dE = rng.uniform(-0.01, 0.01)
        pair = [JumpSpec(d, dE, 2000.0), JumpSpec(d, dE, 2000.0)]
        via_spec = apply_jump(P, fssh_equivalent(pair))
        direct = compose_jumps(P, pair)
        assert via_spec.applied and direct.applied
        assert np.allclose(via_spec.new_P, direct.new_P, rtol=0.0, atol=1e-12)


def test_pattern_mismatch():
    with pytest.raises(PatternMismatch):
        fssh_equivalent([JumpSpec(E1, 0.01, 2000.0),
                         JumpSpec(E1, 0.02, 2000.0)])
    with pytest.raises(PatternMismatch):
        fssh_equivalent([JumpSpec(E1, 0.01, 2000.0)])
    with pytest.raises(PatternMismatch):
        fssh_equivalent([JumpSpec(E1, 0.01, 2000.0),
                         JumpSpec(E1, 0.01, 2000.0, "fssh-double")])
    with pytest.raises(PatternMismatch):
        fssh_equivalent([JumpSpec(E1, 0.03, 2000.0),
                         JumpSpec(E1, 0.01, 2000.0),
                         JumpSpec(E1, 0.01, 2000.0)])


def test_outcome_flag():
    assert JumpOutcome(status="frustrated").applied is False
