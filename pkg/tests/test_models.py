"""Model surfaces: diabatic entries, gradients, adiabatic frames, gauge."""

import numpy as np
import pytest

from nadyn import models as M
from nadyn.errors import DegenerateSurfaces, GaugeAmbiguity


def test_constant_gap_hamiltonian_any_r():
    m = M.constant_gap(gap=0.01)
    for R in (-7.3, 0.0, 2.5):
        V = M.diabatic_hamiltonian(m, R)
        assert np.array_equal(V, [[0.005, 0.0], [0.0, -0.005]])


def test_single_avoided_crossing_at_origin():
    m = M.single_avoided_crossing()
    V = M.diabatic_hamiltonian(m, 0.0)
    assert V[0, 0] == 0.0 and V[1, 1] == 0.0
    assert V[0, 1] == pytest.approx(0.005, abs=0.0)


def test_single_avoided_crossing_at_four():
    m = M.single_avoided_crossing()
    V = M.diabatic_hamiltonian(m, 4.0)
    assert V[0, 0] == pytest.approx(0.01 * (1.0 - np.exp(-6.4)), rel=1e-14)
    assert V[0, 0] == pytest.approx(0.0099834, rel=1e-5)


def test_hamiltonian_symmetric_everywhere():
    rng = np.random.default_rng(7)
    for kind in M.KINDS:
        m = M.make_model(kind)
        for R in rng.uniform(-12, 12, 25):
            V = M.diabatic_hamiltonian(m, R)
            assert V[0, 1] == V[1, 0]


def test_constant_gap_gradient_zero():
    m = M.constant_gap()
    assert np.array_equal(M.diabatic_gradient(m, 1.7), np.zeros((2, 2)))


def test_single_avoided_crossing_gradient_at_origin():
    m = M.single_avoided_crossing()
    dV = M.diabatic_gradient(m, 0.0)
    assert dV[0, 0] == pytest.approx(0.016, rel=1e-14)
    assert dV[0, 1] == 0.0


@pytest.mark.parametrize("kind", M.KINDS)
def test_gradient_matches_finite_difference(kind):
    m = M.make_model(kind)
    h = 1e-6
    for R in (1.3, -0.4, 0.0, 5.1, -6.2):
        fd = (M.diabatic_hamiltonian(m, R + h)
              - M.diabatic_hamiltonian(m, R - h)) / (2 * h)
        assert np.allclose(M.diabatic_gradient(m, R), fd, atol=1e-8)


def test_adiabatize_symmetric_crossing_point():
    C = 0.005
    frame = M.adiabatize(np.array([[0.0, C], [C, 0.0]]), np.zeros((2, 2)))
    assert frame.E == pytest.approx([-C, C], rel=1e-14)
    assert frame.F == pytest.approx([0.0, 0.0], abs=1e-15)


def test_adiabatize_rejects_asymmetric():
    with pytest.raises(ValueError):
        M.adiabatize(np.array([[0.0, 1.0], [0.5, 0.0]]), np.zeros((2, 2)))


def test_constant_gap_coupling_zero_everywhere():
    m = M.constant_gap()
    for R in (-3.0, 0.0, 8.8):
        assert M.frame_at(m, R).d[0, 1] == 0.0


def test_single_avoided_crossing_gap_and_omega_at_origin():
    m = M.single_avoided_crossing()
    frame = M.frame_at(m, 0.0)
    assert frame.E[1] - frame.E[0] == pytest.approx(0.01, rel=1e-12)
    assert frame.omega[1, 0] == pytest.approx(0.01, rel=1e-12)
    assert frame.gap[0, 1] == pytest.approx(-0.01, rel=1e-12)


def test_degenerate_gap_raises():
    m = M.constant_gap(gap=1e-11)
    with pytest.raises(DegenerateSurfaces):
        M.frame_at(m, 0.0)


def test_eigendecomposition_residual():
    rng = np.random.default_rng(11)
    for kind in M.KINDS:
        m = M.make_model(kind)
        for R in rng.uniform(-10, 10, 40):
            V = M.diabatic_hamiltonian(m, R)
            frame = M.frame_at(m, R)
            for a in range(2):
                res = V @ frame.U[:, a] - frame.E[a] * frame.U[:, a]
                assert np.linalg.norm(res) < 1e-12


def test_hellmann_feynman_force_vs_energy_derivative():
    h = 1e-5
    rng = np.random.default_rng(3)
    for kind in M.KINDS:
        m = M.make_model(kind)
        for R in rng.uniform(-9, 9, 30):
            frame = M.frame_at(m, R)
            if frame.E[1] - frame.E[0] <= 1e-4:
                continue
            ep = M.frame_at(m, R + h).E
            em = M.frame_at(m, R - h).E
            dE = (ep - em) / (2 * h)
            for a in range(2):
                scale = max(1e-8, abs(dE[a]))
                assert abs(frame.F[a] + dE[a]) / scale < 1e-6 or \
                    abs(frame.F[a] + dE[a]) < 1e-10


def test_off_diagonal_hellmann_feynman_identity():
    rng = np.random.default_rng(19)
    for kind in M.KINDS:
        m = M.make_model(kind)
        for R in rng.uniform(-8, 8, 30):
            frame = M.frame_at(m, R)
            dV = M.diabatic_gradient(m, R)
            lhs = frame.d[0, 1] * (frame.E[1] - frame.E[0])
            rhs = float(frame.U[:, 0] @ dV @ frame.U[:, 1])
            assert lhs == pytest.approx(rhs, abs=1e-13)


def test_coupling_antisymmetry_exact():
    m = M.dual_avoided_crossing()
    for R in (-4.0, 0.3, 2.2):
        d = M.frame_at(m, R).d
        assert d[0, 0] == 0.0 and d[1, 1] == 0.0
        assert d[0, 1] == -d[1, 0]


def test_frame_along_constant_path():
    m = M.single_avoided_crossing()
    frames = M.frame_along_path(m, [1.5] * 5)
    for frame in frames[1:]:
        assert np.array_equal(frame.U, frames[0].U)
        assert np.array_equal(frame.E, frames[0].E)


def test_coupling_continuous_single_signed_peaked():
    m = M.single_avoided_crossing()
    Rs = np.arange(-10.0, 10.0, 0.01)
    frames = M.frame_along_path(m, Rs)
    d01 = np.array([f.d[0, 1] for f in frames])
    assert np.all(np.abs(np.diff(d01)) < 0.05)      # continuous
    assert np.all(d01 < 0.0) or np.all(d01 > 0.0)   # single-signed
    peak = Rs[np.argmax(np.abs(d01))]
    assert abs(peak) < 0.1                           # peaked near the origin
    assert np.max(np.abs(d01)) == pytest.approx(1.6, rel=1e-3)


def test_gauge_fix_restores_injected_sign_flip():
    m = M.single_avoided_crossing()
    Rs = np.arange(-1.0, 1.0, 0.05)
    frames = M.frame_along_path(m, Rs)
    mid = len(Rs) // 2
    raw = M.frame_at(m, Rs[mid])
    flipped = M.AdiabaticFrame(
        R=raw.R, E=raw.E.copy(), F=raw.F.copy(),
        d=np.array([[0.0, -raw.d[0, 1]], [raw.d[0, 1], 0.0]]),
        U=raw.U * np.array([-1.0, 1.0])[None, :],
    )
    fixed = M.fix_gauge(frames[mid - 1], flipped)
    assert np.allclose(fixed.U, frames[mid].U, atol=0.0)
    assert fixed.d[0, 1] == frames[mid].d[0, 1]


def test_gauge_ambiguity_on_giant_step():
    m = M.single_avoided_crossing()
    with pytest.raises(GaugeAmbiguity):
        M.frame_along_path(m, [-2.0, 2.0])


def test_model_validation():
    with pytest.raises(ValueError):
        M.make_model("no-such-model")
    with pytest.raises(ValueError):
        M.make_model("constant-gap", width=3)
    with pytest.raises(ValueError):
        M.single_avoided_crossing(mass=-5.0)
    with pytest.raises(ValueError):
        M.DiabaticModel("constant-gap", {"gap": float("nan")})
    with pytest.raises(ValueError):
        M.DiabaticModel("constant-gap", {})


def test_defaults_documented_values():
    sac = M.single_avoided_crossing()
    assert sac.params == {"A": 0.01, "B": 1.6, "C": 0.005, "D": 1.0}
    assert sac.mass == 2000.0
    dac = M.dual_avoided_crossing()
    assert dac.params["E0"] == 0.05
    ecr = M.extended_coupling()
    assert ecr.params == {"A": 6e-4, "B": 0.10, "C": 0.90}
