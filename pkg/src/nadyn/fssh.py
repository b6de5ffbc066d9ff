"""Fewest-switches surface hopping on a two-state adiabatic model.

A trajectory carries a classical phase point on the active surface, a 2x2
electronic density matrix integrated coherently along the path, and a
deterministic RNG. Hops are drawn from the clipped flux rate and rescale the
momentum along the coupling direction at double scale; frustrated hops leave
everything unchanged. The density matrix is never modified by a hop.

The step-level operations (nuclear_step / electronic_step / attempt_hop) are
the documented contract and are convenient for probing single steps; run_fssh
executes the same arithmetic inside a compiled driver for ensemble work, and
the test suite pins the two paths against each other.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy.random import Generator, Philox

from . import _kernels as K
from . import models as mdl
from .errors import DegeneratePopulation, DegenerateSurfaces, GaugeAmbiguity
from .jumps import JumpSpec, apply_jump

POPULATION_FLOOR = K.POPULATION_FLOOR


def rng_for_trajectory(seed: int, index: int = 0) -> Generator:
    """Counter-based stream fully determined by (seed, trajectory index)."""
    return Generator(Philox(key=(int(seed) << 64) | int(index)))


@dataclass
class FsshTrajectory:
    """State of one surface-hopping trajectory.

    frame holds the adiabatic frame at (t, R); prev_frame / prev_P stash the
    values from before the latest nuclear step so the electronic integrator
    can interpolate across the step endpoints.
    """

    model: mdl.DiabaticModel
    t: float
    R: float
    P: float
    nu: int
    rho: np.ndarray
    rng: Generator
    frame: mdl.AdiabaticFrame
    prev_frame: mdl.AdiabaticFrame
    prev_P: float
    hop_log: List[Tuple[float, int, int, str]] = field(default_factory=list)

    @classmethod
    def create(cls, model: mdl.DiabaticModel, R: float, P: float,
               state: int = 0, seed: int = 0, rng: Optional[Generator] = None,
               rho: Optional[np.ndarray] = None) -> "FsshTrajectory":
        if state not in (0, 1):
            raise ValueError("state must be 0 or 1")
        if rho is None:
            rho = np.zeros((2, 2), dtype=complex)
            rho[state, state] = 1.0
        else:
            rho = np.array(rho, dtype=complex)
        frame = mdl.frame_at(model, R)
        if rng is None:
            rng = rng_for_trajectory(seed)
        return cls(model=model, t=0.0, R=float(R), P=float(P), nu=int(state),
                   rho=rho, rng=rng, frame=frame, prev_frame=frame,
                   prev_P=float(P))

    @property
    def energy(self) -> float:
        """Active-surface total energy E_nu(R) + P^2/2M."""
        return float(self.frame.E[self.nu]) + \
            self.P * self.P / (2.0 * self.model.mass)


def nuclear_step(traj: FsshTrajectory, dt: float) -> FsshTrajectory:
    """Velocity-Verlet step of (R, P) on the active surface.

    Recomputes the adiabatic frame at the new position with the gauge fixed
    by continuity against the current frame. dt may be negative (used by
    reversibility checks); run-level drivers enforce dt > 0.
    """
    if dt == 0.0 or not math.isfinite(dt):
        raise ValueError("dt must be nonzero and finite")
    mass = traj.model.mass
    f_act = float(traj.frame.F[traj.nu])
    P_half = traj.P + 0.5 * f_act * dt
    R_new = traj.R + (P_half / mass) * dt
    frame_new = mdl.fix_gauge(traj.frame, mdl.frame_at(traj.model, R_new))
    P_new = P_half + 0.5 * float(frame_new.F[traj.nu]) * dt
    traj.prev_frame = traj.frame
    traj.prev_P = traj.P
    traj.frame = frame_new
    traj.R = R_new
    traj.P = P_new
    traj.t += dt
    return traj


def electronic_step(traj: FsshTrajectory, dt: float,
                    n_sub: int = 10) -> FsshTrajectory:
    """Advance rho by RK4 with endpoint-interpolated frequency and coupling.

    Endpoints are the stashed pre-step frame/momentum and the current ones;
    with no intervening nuclear step both coincide and the coefficients are
    constant. Trace and Hermiticity are preserved by construction.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    mass = traj.model.mass
    w0 = float(traj.prev_frame.E[1] - traj.prev_frame.E[0])
    c0 = (traj.prev_P / mass) * float(traj.prev_frame.d[0, 1])
    w1 = float(traj.frame.E[1] - traj.frame.E[0])
    c1 = (traj.P / mass) * float(traj.frame.d[0, 1])
    r00, r01, r11 = K.rk4_electronic(
        complex(traj.rho[0, 0]).real, complex(traj.rho[0, 1]),
        complex(traj.rho[1, 1]).real, w0, c0, w1, c1, dt, n_sub)
    traj.rho[0, 0] = r00
    traj.rho[0, 1] = r01
    traj.rho[1, 0] = np.conj(r01)
    traj.rho[1, 1] = r11
    return traj


def hop_probability(traj: FsshTrajectory, target: int, dt: float) -> float:
    """Clipped probability of leaving the active surface for `target`.

    p = max(0, 2 Re[(P/M) d_{nu,target} conj(rho_{nu,target})] dt / rho_nunu),
    clamped to [0, 1].
    """
    nu = traj.nu
    rnn = float(traj.rho[nu, nu].real)
    if rnn < POPULATION_FLOOR:
        raise DegeneratePopulation(
            f"active population {rnn:.3e} below {POPULATION_FLOOR}")
    vd = (traj.P / traj.model.mass) * float(traj.frame.d[nu, target])
    flux = 2.0 * (vd * np.conj(traj.rho[nu, target])).real
    p = flux * dt / rnn
    return min(max(p, 0.0), 1.0)


def attempt_hop(traj: FsshTrajectory, dt: float) -> FsshTrajectory:
    """Draw one uniform variate and maybe hop.

    Targets partition [0, 1) by cumulative probability. An accepted hop
    applies the double-scale momentum jump along the coupling direction; a
    frustrated jump leaves state and momentum unchanged and is logged. rho is
    not modified either way.
    """
    targets = [beta for beta in range(2) if beta != traj.nu]
    probs = [hop_probability(traj, beta, dt) for beta in targets]
    u = traj.rng.random()
    edge = 0.0
    for beta, p in zip(targets, probs):
        edge += p
        if u < edge:
            dE = float(traj.frame.E[traj.nu] - traj.frame.E[beta])
            spec = JumpSpec(np.array([1.0]), dE, traj.model.mass,
                            "fssh-double")
            outcome = apply_jump(np.array([traj.P]), spec)
            if outcome.applied:
                traj.hop_log.append((traj.t, traj.nu, beta, "applied"))
                traj.P = float(outcome.new_P[0])
                traj.nu = beta
            else:
                traj.hop_log.append((traj.t, traj.nu, beta, "frustrated"))
            break
    return traj


@dataclass
class FsshResult:
    """Saved time series plus final state and hop statistics."""

    t: np.ndarray
    R: np.ndarray
    P: np.ndarray
    nu: np.ndarray
    rho: np.ndarray          # (n_save, 2, 2) complex
    energy: np.ndarray       # active-surface total energy
    hop_log: List[Tuple[float, int, int, str]]
    n_applied: int
    n_frustrated: int
    final_R: float
    final_P: float
    final_nu: int
    final_rho: np.ndarray


_STATUS_ERRORS = {
    K.ERR_DEGENERATE: DegenerateSurfaces,
    K.ERR_GAUGE: GaugeAmbiguity,
    K.ERR_POPULATION: DegeneratePopulation,
}


def _raise_for_status(status: int, step: int):
    exc = _STATUS_ERRORS.get(status)
    if exc is not None:
        raise exc(f"trajectory aborted at step {step}")


def run_fssh(model: mdl.DiabaticModel, R0: float, P0: float, state: int,
             dt: float, n_steps: int, *, n_sub: int = 10, save_every: int = 10,
             seed: int = 0, rng: Optional[Generator] = None,
             rho0: Optional[np.ndarray] = None,
             hop_capacity: int = 256) -> FsshResult:
    """Propagate one trajectory inside the compiled driver.

    Per step: velocity-Verlet nuclear update, RK4 electronic update with
    endpoint interpolation, then one hop attempt using end-of-step
    quantities. One uniform variate is consumed per step regardless of the
    outcome, so the random stream is reproducible from the seed alone.
    Save slot k holds the state after step k*save_every (slot 0 = initial).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if state not in (0, 1):
        raise ValueError("state must be 0 or 1")
    if rho0 is None:
        r00_0, r01_0, r11_0 = (1.0, 0.0 + 0.0j, 0.0) if state == 0 \
            else (0.0, 0.0 + 0.0j, 1.0)
    else:
        rho0 = np.asarray(rho0, dtype=complex)
        r00_0 = rho0[0, 0].real
        r01_0 = complex(rho0[0, 1])
        r11_0 = rho0[1, 1].real
    if rng is None:
        rng = rng_for_trajectory(seed)
    uniforms = rng.random(n_steps)

    n_save = n_steps // save_every + 1
    out_t = np.empty(n_save)
    out_R = np.empty(n_save)
    out_P = np.empty(n_save)
    out_nu = np.empty(n_save, dtype=np.int8)
    out_r00 = np.empty(n_save)
    out_r01 = np.empty(n_save, dtype=complex)
    out_r11 = np.empty(n_save)
    out_e = np.empty(n_save)
    hop_step = np.empty(hop_capacity, dtype=np.int64)
    hop_from = np.empty(hop_capacity, dtype=np.int8)
    hop_to = np.empty(hop_capacity, dtype=np.int8)
    hop_ok = np.empty(hop_capacity, dtype=np.int8)

    status, steps_done, n_applied, n_frustrated, n_logged, fR, fP, fnu, \
        fr00, fr01, fr11 = K.fssh_driver(
            model.kind_id, model.params_array, model.mass,
            float(R0), float(P0), int(state), r00_0, r01_0, r11_0,
            float(dt), int(n_steps), int(n_sub), uniforms, int(save_every),
            out_t, out_R, out_P, out_nu, out_r00, out_r01, out_r11, out_e,
            hop_step, hop_from, hop_to, hop_ok)
    _raise_for_status(status, steps_done)

    rho = np.empty((n_save, 2, 2), dtype=complex)
    rho[:, 0, 0] = out_r00
    rho[:, 0, 1] = out_r01
    rho[:, 1, 0] = np.conj(out_r01)
    rho[:, 1, 1] = out_r11
    final_rho = np.array([[fr00, fr01], [np.conj(fr01), fr11]], dtype=complex)
    log = [(hop_step[i] * dt, int(hop_from[i]), int(hop_to[i]),
            "applied" if hop_ok[i] else "frustrated") for i in range(n_logged)]
    return FsshResult(t=out_t, R=out_R, P=out_P, nu=out_nu, rho=rho,
                      energy=out_e, hop_log=log, n_applied=n_applied,
                      n_frustrated=n_frustrated, final_R=fR, final_P=fP,
                      final_nu=int(fnu), final_rho=final_rho)
