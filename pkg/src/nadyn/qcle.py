"""Pair-state walker dynamics with Monte Carlo reweighting.

A walker carries an ordered pair of adiabatic indices (s, s') labeling a
density matrix element, a complex weight, and a nuclear phase point. Segments
propagate on the mean of the two pair surfaces and accumulate the coherence
phase; stochastic transitions flip one index at a time with the momentum jump
and 1/pi, 1/(1-pi) reweighting that keep the estimator unbiased. The exact
small-step path sum enumerates every index chain and is the oracle for the
sampler.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.random import Generator

from . import _kernels as K
from . import models as mdl
from .errors import (BranchExplosion, DegenerateSurfaces, EmptyEnsemble,
                     GaugeAmbiguity)
from .fssh import rng_for_trajectory
from .jumps import JumpSpec, apply_jump

Pair = Tuple[int, int]

_STATUS_ERRORS = {
    K.ERR_DEGENERATE: DegenerateSurfaces,
    K.ERR_GAUGE: GaugeAmbiguity,
}


def _check_pair(pair) -> Pair:
    s, sp = pair
    if s not in (0, 1) or sp not in (0, 1):
        raise ValueError(f"pair indices must be 0 or 1, got {pair!r}")
    return int(s), int(sp)


@dataclass
class QcleWalker:
    """One pair-state sample: phase point, ordered indices, complex weight."""

    model: mdl.DiabaticModel
    t: float
    R: float
    P: float
    s: int
    sp: int
    weight: complex
    alive: bool
    frame: mdl.AdiabaticFrame
    transition_log: List[tuple] = field(default_factory=list)

    @classmethod
    def create(cls, model: mdl.DiabaticModel, R: float, P: float,
               pair: Pair = (0, 0),
               weight: complex = 1.0 + 0.0j) -> "QcleWalker":
        s, sp = _check_pair(pair)
        return cls(model=model, t=0.0, R=float(R), P=float(P), s=s, sp=sp,
                   weight=complex(weight), alive=True,
                   frame=mdl.frame_at(model, R))

    @property
    def pair(self) -> Pair:
        return (self.s, self.sp)

    @property
    def energy(self) -> float:
        """Mean-surface total energy (E_s + E_s')/2 + P^2/2M."""
        e_mean = 0.5 * float(self.frame.E[self.s] + self.frame.E[self.sp])
        return e_mean + self.P * self.P / (2.0 * self.model.mass)


def segment_step(walker: QcleWalker, dt: float) -> QcleWalker:
    """Velocity-Verlet on the mean of the pair surfaces, plus the phase.

    The weight picks up e^{-i w_ss' dt} with the frequency evaluated at the
    segment's position midpoint; it is exactly 1 on diagonal pairs.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    m = walker.model
    fr = walker.frame
    f_mean = 0.5 * float(fr.F[walker.s] + fr.F[walker.sp])
    st, Rn, Pn, phase, *_ = K.qcle_segment(
        m.kind_id, m.params_array, m.mass, walker.R, walker.P,
        walker.s, walker.sp, f_mean, dt)
    exc = _STATUS_ERRORS.get(st)
    if exc is not None:
        raise exc(f"segment failed near R = {Rn:.6g}")
    walker.frame = mdl.fix_gauge(fr, mdl.frame_at(m, Rn))
    walker.weight *= phase
    walker.R = Rn
    walker.P = Pn
    walker.t += dt
    return walker


def transition_probability(walker: QcleWalker, dt: float) -> float:
    """pi = a/(1+a) with a = |(P/M) d01(R)| dt, evaluated at the walker."""
    a = abs((walker.P / walker.model.mass) * float(walker.frame.d[0, 1])) * dt
    return a / (1.0 + a)


def sample_transition(walker: QcleWalker, dt: float,
                      rng: Generator) -> QcleWalker:
    """Stochastic index flip with reweighting.

    Two uniforms are always drawn (transition? / which channel?) so the
    stream layout does not depend on the branch taken. With probability pi
    one of the two channels (flip first index, flip second) is chosen
    uniformly; the weight gains (channel amplitude x dt)/(pi/2) and the
    qcle-single momentum jump is applied. A frustrated jump reverts to the
    no-transition branch, which carries weight 1/(1-pi).
    """
    pi = transition_probability(walker, dt)
    u = rng.random(2)
    if u[0] >= pi:
        walker.weight /= (1.0 - pi)
        return walker

    flip_first = u[1] < 0.5
    frm = walker.s if flip_first else walker.sp
    to = 1 - frm
    fr = walker.frame
    dE = float(fr.E[frm] - fr.E[to])
    spec = JumpSpec(np.array([1.0]), dE, walker.model.mass, "qcle-single")
    outcome = apply_jump(np.array([walker.P]), spec)
    pair_from = walker.pair
    if outcome.applied:
        amp = -(walker.P / walker.model.mass) * float(fr.d[frm, to])
        walker.weight *= amp * dt / (0.5 * pi)
        P_before = walker.P
        walker.P = float(outcome.new_P[0])
        if flip_first:
            walker.s = to
        else:
            walker.sp = to
        walker.transition_log.append((walker.t, pair_from, walker.pair,
                                      walker.R, P_before, walker.P,
                                      "applied"))
    else:
        walker.weight /= (1.0 - pi)
        to_pair = (to, walker.sp) if flip_first else (walker.s, to)
        walker.transition_log.append((walker.t, pair_from, to_pair,
                                      walker.R, walker.P, walker.P,
                                      "frustrated"))
    return walker


@dataclass
class QcleResult:
    """Saved walker series plus final state and transition statistics."""

    t: np.ndarray
    R: np.ndarray
    P: np.ndarray
    pair: np.ndarray          # (n_save, 2) adiabatic index pairs
    weight: np.ndarray        # complex; zero once filtered
    energy: np.ndarray        # mean-surface total energy on diagonal slots
    alive: np.ndarray
    transition_log: List[tuple]
    n_applied: int
    n_frustrated: int
    filtered_step: Optional[int]
    final_R: float
    final_P: float
    final_pair: Pair
    final_weight: complex


def run_qcle(model: mdl.DiabaticModel, R0: float, P0: float,
             pair: Pair = (0, 0), dt: float = 0.1, n_steps: int = 1000, *,
             weight0: complex = 1.0 + 0.0j, filter_bound: float = math.inf,
             save_every: int = 10, seed: int = 0,
             rng: Optional[Generator] = None,
             log_capacity: int = 256) -> QcleResult:
    """Propagate one pair-state walker for n_steps segments.

    Each step runs a mean-surface segment, multiplies in the midpoint phase,
    then samples a transition from the end-of-segment quantities. Two uniform
    variates per step are allocated up front, so the stream is reproducible
    from the seed alone. Once |weight| exceeds filter_bound the walker is
    dead: remaining save slots carry weight 0 and alive 0.
    """
    s0, sp0 = _check_pair(pair)
    if dt <= 0.0 or not math.isfinite(dt):
        raise ValueError("dt must be positive and finite")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if save_every < 1:
        raise ValueError("save_every must be >= 1")
    if not filter_bound > 1.0:
        raise ValueError("filter_bound must exceed 1")
    if rng is None:
        rng = rng_for_trajectory(seed)
    uniforms = rng.random((n_steps, 2))

    n_save = n_steps // save_every + 1
    out_t = np.empty(n_save)
    out_R = np.empty(n_save)
    out_P = np.empty(n_save)
    out_pair = np.empty(n_save, dtype=np.int64)
    out_w = np.empty(n_save, dtype=np.complex128)
    out_ener = np.empty(n_save)
    out_alive = np.empty(n_save, dtype=np.int64)
    tr_step = np.empty(log_capacity, dtype=np.int64)
    tr_from = np.empty(log_capacity, dtype=np.int64)
    tr_to = np.empty(log_capacity, dtype=np.int64)
    tr_R = np.empty(log_capacity)
    tr_Pb = np.empty(log_capacity)
    tr_Pa = np.empty(log_capacity)
    tr_ok = np.empty(log_capacity, dtype=np.int64)

    (status, steps_done, n_applied, n_frustrated, n_logged, filtered_step,
     R, P, s, sp, w) = K.qcle_driver(
        model.kind_id, model.params_array, model.mass, float(R0), float(P0),
        s0, sp0, complex(weight0), dt, n_steps, uniforms,
        float(filter_bound), save_every,
        out_t, out_R, out_P, out_pair, out_w, out_ener, out_alive,
        tr_step, tr_from, tr_to, tr_R, tr_Pb, tr_Pa, tr_ok)
    exc = _STATUS_ERRORS.get(status)
    if exc is not None:
        raise exc(f"walker aborted at step {steps_done}")

    log = []
    for i in range(n_logged):
        code_f, code_t = int(tr_from[i]), int(tr_to[i])
        log.append((tr_step[i] * dt, (code_f // 2, code_f % 2),
                    (code_t // 2, code_t % 2), tr_R[i], tr_Pb[i], tr_Pa[i],
                    "applied" if tr_ok[i] else "frustrated"))
    pairs = np.stack([out_pair // 2, out_pair % 2], axis=1)
    return QcleResult(
        t=out_t, R=out_R, P=out_P, pair=pairs, weight=out_w, energy=out_ener,
        alive=out_alive.astype(bool), transition_log=log,
        n_applied=n_applied, n_frustrated=n_frustrated,
        filtered_step=None if filtered_step < 0 else int(filtered_step),
        final_R=R, final_P=P, final_pair=(int(s), int(sp)), final_weight=w)


# ---------------------------------------------------------------------------
# ensemble estimators


@dataclass
class QcleEnsembleSeries:
    """Stacked save-time series for a walker ensemble."""

    t: np.ndarray             # (n_save,)
    pair_code: np.ndarray     # (n_walkers, n_save) int, 2s + s'
    weight: np.ndarray        # (n_walkers, n_save) complex
    alive: np.ndarray         # (n_walkers, n_save) bool
    init_factor: np.ndarray   # (n_walkers,) complex initial-sampling factors

    @classmethod
    def from_results(cls, results: Sequence[QcleResult],
                     init_factors=None) -> "QcleEnsembleSeries":
        if len(results) == 0:
            raise EmptyEnsemble("no walkers")
        t = results[0].t
        code = np.stack([2 * r.pair[:, 0] + r.pair[:, 1] for r in results])
        weight = np.stack([r.weight for r in results])
        alive = np.stack([r.alive for r in results])
        if init_factors is None:
            init_factors = np.ones(len(results), dtype=np.complex128)
        else:
            init_factors = np.asarray(init_factors, dtype=np.complex128)
        return cls(t=t, pair_code=code, weight=weight, alive=alive,
                   init_factor=init_factors)

    @property
    def n_walkers(self) -> int:
        return self.pair_code.shape[0]


@dataclass
class EnsembleEstimate:
    """Weighted estimate of one density matrix element over time."""

    observable: Pair
    t: np.ndarray
    values: np.ndarray        # complex
    se_re: np.ndarray
    se_im: np.ndarray
    n_alive: np.ndarray
    weight_variance: np.ndarray


_OBSERVABLE_ALIASES = {"pop0": (0, 0), "pop1": (1, 1),
                       "coh01": (0, 1), "coh10": (1, 0)}


def estimate_observable(ensemble: QcleEnsembleSeries,
                        observable: Union[str, Pair]) -> EnsembleEstimate:
    """Mean over walkers of weight x indicator(pair) x initial factor.

    Dead walkers contribute zero but stay in the denominator. Standard
    errors come from 20 batch means (fewer if the ensemble is smaller),
    separately for the real and imaginary parts.
    """
    if isinstance(observable, str):
        pair = _OBSERVABLE_ALIASES[observable]
    else:
        pair = _check_pair(observable)
    n = ensemble.n_walkers
    if n == 0:
        raise EmptyEnsemble("no walkers")
    code = 2 * pair[0] + pair[1]
    contrib = np.where((ensemble.pair_code == code) & ensemble.alive,
                       ensemble.weight, 0.0)
    contrib = contrib * ensemble.init_factor[:, None]
    values = contrib.mean(axis=0)

    n_batch = min(20, n)
    splits = np.array_split(np.arange(n), n_batch)
    bm = np.stack([contrib[idx].mean(axis=0) for idx in splits])
    if n_batch > 1:
        se_re = bm.real.std(axis=0, ddof=1) / math.sqrt(n_batch)
        se_im = bm.imag.std(axis=0, ddof=1) / math.sqrt(n_batch)
    else:
        se_re = np.zeros_like(values, dtype=float)
        se_im = np.zeros_like(values, dtype=float)

    n_alive = ensemble.alive.sum(axis=0)
    absw = np.abs(ensemble.weight)
    mean_abs = np.where(n_alive > 0,
                        absw.sum(axis=0) / np.maximum(n_alive, 1), 0.0)
    weight_variance = np.where(
        n_alive > 0,
        (ensemble.alive * (absw - mean_abs) ** 2).sum(axis=0)
        / np.maximum(n_alive, 1), 0.0)
    return EnsembleEstimate(observable=pair, t=ensemble.t, values=values,
                            se_re=se_re, se_im=se_im, n_alive=n_alive,
                            weight_variance=weight_variance)


def filter_weights(ensemble: QcleEnsembleSeries,
                   bound: float) -> Tuple[QcleEnsembleSeries, int]:
    """Kill walkers from the first save slot where |weight| > bound.

    Returns the filtered ensemble (a copy) and how many walkers were newly
    marked dead. The run-level driver applies the same cap at step
    resolution; this operation re-applies it post hoc at save resolution,
    e.g. with a tighter bound.
    """
    if not bound > 1.0:
        raise ValueError("bound must exceed 1")
    alive = ensemble.alive.copy()
    weight = ensemble.weight.copy()
    over = np.abs(weight) > bound
    # once over the bound, dead for all later times
    dead = np.logical_or.accumulate(over, axis=1)
    newly = int(np.any(dead & alive, axis=1).sum())
    alive &= ~dead
    weight[~alive] = 0.0
    return (QcleEnsembleSeries(t=ensemble.t, pair_code=ensemble.pair_code,
                               weight=weight, alive=alive,
                               init_factor=ensemble.init_factor), newly)


# ---------------------------------------------------------------------------
# deterministic path sum (the sampler's oracle)

MAX_PATH_STEPS = 6


def brute_force_path_sum(model: mdl.DiabaticModel, R0: float, P0: float,
                         pair: Pair = (0, 0), dt: float = 0.1,
                         n_steps: int = 4, *,
                         weight0: complex = 1.0 + 0.0j) -> np.ndarray:
    """Exact Trotterized density matrix by enumerating all index chains.

    Every segment spawns three children: no transition (amplitude 1), flip
    the first index, flip the second (amplitude -(P/M) d_{from,to} dt each,
    with the qcle-single momentum jump). Frustrated branches are dropped.
    Returns the 2x2 complex matrix of summed weights per final pair.
    """
    s0, sp0 = _check_pair(pair)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if n_steps > MAX_PATH_STEPS:
        raise BranchExplosion(
            f"{n_steps} steps gives 3^{n_steps} branches; max is "
            f"{MAX_PATH_STEPS}")
    kind = model.kind_id
    p = model.params_array
    mass = model.mass

    out = np.zeros((2, 2), dtype=np.complex128)
    # depth-first over (R, P, s, sp, w, steps_left)
    stack = [(float(R0), float(P0), s0, sp0, complex(weight0), n_steps)]
    while stack:
        R, P, s, sp, w, left = stack.pop()
        if left == 0:
            out[s, sp] += w
            continue
        st0, _e0, _e1, f0, f1, _d, _th = K.adiab_point(kind, p, R)
        if st0 != K.OK:
            raise DegenerateSurfaces(f"start of segment at R = {R:.6g}")
        fs = f0 if s == 0 else f1
        fsp = f0 if sp == 0 else f1
        st, Rn, Pn, phase, e0, e1, _f0, _f1, d01, _t = K.qcle_segment(
            kind, p, mass, R, P, s, sp, 0.5 * (fs + fsp), dt)
        if st != K.OK:
            raise DegenerateSurfaces(f"segment failed near R = {Rn:.6g}")
        wn = w * phase
        stack.append((Rn, Pn, s, sp, wn, left - 1))
        for flip_first in (True, False):
            frm = s if flip_first else sp
            to = 1 - frm
            dE = (e0 - e1) if frm == 0 else (e1 - e0)
            arg = Pn * Pn + dE * mass
            if arg < 0.0:
                continue
            dft = d01 if frm == 0 else -d01
            amp = -(Pn / mass) * dft
            sgn = 1.0 if Pn >= 0.0 else -1.0
            Pj = sgn * math.sqrt(arg)
            ns, nsp = (to, sp) if flip_first else (s, to)
            stack.append((Rn, Pj, ns, nsp, wn * amp * dt, left - 1))
    return out


# ---------------------------------------------------------------------------
# decoherence diagnostic


@dataclass(frozen=True)
class MomentumGaussian:
    """Analytic Gaussian-in-P density descriptor: mean P0, variance sigma2.

    Its logarithmic momentum gradient -(P - P0)/sigma2 is what the
    decoherence rate needs in closed form.
    """

    P0: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")

    def log_gradient(self, P: float) -> float:
        return -(P - self.P0) / self.sigma2


def decoherence_factor(frame: mdl.AdiabaticFrame, pair: Pair, nu: int,
                       P: float, density: MomentumGaussian) -> complex:
    """Rate at which a coherence decays in the frame of active surface nu.

    gamma = (1/2) (dF_{a,nu} + dF_{a',nu}) . grad_P ln rho, with
    dF_{a,nu} = F_a - F_nu the Hellmann-Feynman force differences.
    """
    a, ap = _check_pair(pair)
    dF = (float(frame.F[a]) - float(frame.F[nu])) \
        + (float(frame.F[ap]) - float(frame.F[nu]))
    return complex(0.5 * dF * density.log_gradient(P))


def decoherence_factor_active(frame: mdl.AdiabaticFrame, alpha_p: int,
                              nu: int, P: float,
                              density: MomentumGaussian) -> complex:
    """Single-difference form, valid when the first pair index is nu itself."""
    if alpha_p not in (0, 1):
        raise ValueError("alpha_p must be 0 or 1")
    dF = float(frame.F[alpha_p]) - float(frame.F[nu])
    return complex(0.5 * dF * density.log_gradient(P))
