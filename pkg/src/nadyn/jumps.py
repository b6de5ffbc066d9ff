"""Momentum-jump operators and their composition identities.

A jump shifts the momentum component along the coupling direction d_hat so
that kinetic energy changes by exactly k*deltaE/2, where k = 1 for a
pair-state transition (diagonal <-> coherence, half the gap each) and k = 2
for a surface hop (full gap). Everything is kept in vector form even though
the bundled models are 1-D.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MixedDirection, PatternMismatch

SCALES = {"qcle-single": 1, "fssh-double": 2}


@dataclass(frozen=True)
class JumpSpec:
    """Direction, energy difference E_from - E_to, mass, and scale of a jump."""

    d_hat: np.ndarray
    deltaE: float
    mass: float
    scale: str = "qcle-single"

    def __post_init__(self):
        d = np.asarray(self.d_hat, dtype=float)
        if d.ndim != 1:
            d = np.atleast_1d(d)
        object.__setattr__(self, "d_hat", d)
        if self.scale not in SCALES:
            raise ValueError(f"unknown scale {self.scale!r}")
        if abs(float(d @ d) - 1.0) > 1e-12:
            raise ValueError("d_hat must be a unit vector (to 1e-12)")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError("mass must be positive and finite")
        if not math.isfinite(self.deltaE):
            raise ValueError("deltaE must be finite")

    @property
    def k(self) -> int:
        return SCALES[self.scale]


@dataclass(frozen=True)
class JumpOutcome:
    """Result of applying a jump: either the new momentum or 'frustrated'."""

    status: str  # "applied" | "frustrated"
    new_P: Optional[np.ndarray] = None
    kinetic_change: Optional[float] = None

    @property
    def applied(self) -> bool:
        return self.status == "applied"


def apply_jump(P, spec: JumpSpec) -> JumpOutcome:
    """Shift P along spec.d_hat, conserving energy for the transition.

    new_P = P - (P.d)d + d * sgn(P.d) * sqrt((P.d)^2 + k*deltaE*M), with
    sgn(0) := +1. Frustrated iff the square-root argument is negative
    (an upward transition the momentum cannot pay for).
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 1:
        P = np.atleast_1d(P)
    d = spec.d_hat
    p_par = float(P @ d)
    arg = p_par * p_par + spec.k * spec.deltaE * spec.mass
    if arg < 0.0:
        return JumpOutcome(status="frustrated")
    sgn = 1.0 if p_par >= 0.0 else -1.0
    new_P = P - p_par * d + sgn * math.sqrt(arg) * d
    return JumpOutcome(status="applied", new_P=new_P,
                       kinetic_change=spec.k * spec.deltaE / 2.0)


def _check_shared_direction(specs: Sequence[JumpSpec]):
    first = specs[0]
    for other in specs[1:]:
        # max-abs comparison at atol 1e-12; much cheaper than np.allclose
        # on these tiny vectors and this sits on the composition hot path
        if other.d_hat.shape != first.d_hat.shape or \
                float(np.abs(other.d_hat - first.d_hat).max()) > 1e-12:
            raise MixedDirection("jump specs do not share a direction")
        if other.mass != first.mass:
            raise ValueError("jump specs do not share a mass")


def compose_jumps(P, specs: Sequence[JumpSpec]) -> JumpOutcome:
    """Apply jumps in sequence; any frustrated stage frustrates the whole.

    All specs must share d_hat (and mass) — the composition identities are
    only proved for a single direction.
    """
    specs = list(specs)
    if not specs:
        P = np.atleast_1d(np.asarray(P, dtype=float))
        return JumpOutcome(status="applied", new_P=P.copy(), kinetic_change=0.0)
    _check_shared_direction(specs)
    current = np.atleast_1d(np.asarray(P, dtype=float))
    total = 0.0
    for spec in specs:
        outcome = apply_jump(current, spec)
        if not outcome.applied:
            return JumpOutcome(status="frustrated")
        current = outcome.new_P
        total += outcome.kinetic_change
    return JumpOutcome(status="applied", new_P=current, kinetic_change=total)


def fssh_equivalent(specs: Sequence[JumpSpec]) -> JumpSpec:
    """Collapse a recognized sequence of single-scale jumps into one spec.

    Recognized patterns (all stages at qcle-single scale, shared direction):

    - (dE, dE): two equal singles == one fssh-double with the same dE.
    - (dE, -dE): there and back == the identity (dE = 0).
    - (a, b, c) with a = b + c: the two-sided triple == fssh-double with a.
    - (a, b, c) with a + b + c = 0: closed loop == the identity.

    Anything else raises PatternMismatch.
    """
    specs = list(specs)
    if len(specs) not in (2, 3):
        raise PatternMismatch(f"expected 2 or 3 jump specs, got {len(specs)}")
    _check_shared_direction(specs)
    for spec in specs:
        if spec.scale != "qcle-single":
            raise PatternMismatch("composition identities take single-scale "
                                  "stages only")
    d_hat = specs[0].d_hat
    mass = specs[0].mass
    des = [spec.deltaE for spec in specs]
    tol = 1e-12 * max(1.0, max(abs(x) for x in des))
    if len(specs) == 2:
        if abs(des[0] - des[1]) <= tol:
            return JumpSpec(d_hat, des[0], mass, "fssh-double")
        if abs(des[0] + des[1]) <= tol:
            return JumpSpec(d_hat, 0.0, mass, "fssh-double")
        raise PatternMismatch("pair is neither (dE, dE) nor (dE, -dE)")
    if abs(des[0] - des[1] - des[2]) <= tol:
        return JumpSpec(d_hat, des[0], mass, "fssh-double")
    if abs(des[0] + des[1] + des[2]) <= tol:
        return JumpSpec(d_hat, 0.0, mass, "fssh-double")
    raise PatternMismatch("triple matches neither a = b + c nor a+b+c = 0")
