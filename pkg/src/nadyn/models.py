"""Two-state diabatic benchmark models and pointwise adiabatic frames.

All quantities are in atomic units (hbar = 1). Models are 1-D, two-state,
real symmetric. The adiabatic layer converts a diabatic matrix and its
gradient into energies, Hellmann-Feynman forces, and the nonadiabatic
coupling, with a deterministic eigenvector sign convention and an explicit
gauge-continuity fix for sampled paths.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from . import _kernels as K
from .errors import DegenerateSurfaces, GaugeAmbiguity

KINDS = (
    "single-avoided-crossing",
    "dual-avoided-crossing",
    "extended-coupling",
    "constant-gap",
)

_KIND_ID = {k: i for i, k in enumerate(KINDS)}

PARAM_NAMES = {
    "single-avoided-crossing": ("A", "B", "C", "D"),
    "dual-avoided-crossing": ("A", "B", "C", "D", "E0"),
    "extended-coupling": ("A", "B", "C"),
    "constant-gap": ("gap",),
}

DEFAULT_PARAMS = {
    "single-avoided-crossing": {"A": 0.01, "B": 1.6, "C": 0.005, "D": 1.0},
    "dual-avoided-crossing": {"A": 0.10, "B": 0.28, "C": 0.015, "D": 0.06,
                              "E0": 0.05},
    "extended-coupling": {"A": 6e-4, "B": 0.10, "C": 0.90},
    "constant-gap": {"gap": 0.01},
}

DEGENERACY_FLOOR = K.DEGENERACY_FLOOR


@dataclass(frozen=True)
class DiabaticModel:
    """A parametrized 2x2 real symmetric diabatic Hamiltonian on 1-D R."""

    kind: str
    params: Dict[str, float]
    mass: float = 2000.0

    n_states = 2
    n_dof = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        names = PARAM_NAMES[self.kind]
        extra = set(self.params) - set(names)
        if extra:
            raise ValueError(f"{self.kind}: unexpected params {sorted(extra)}")
        missing = set(names) - set(self.params)
        if missing:
            raise ValueError(f"{self.kind}: missing params {sorted(missing)}")
        for name, value in self.params.items():
            if not math.isfinite(value):
                raise ValueError(f"{self.kind}: param {name} not finite")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError("mass must be positive and finite")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def kind_id(self) -> int:
        return _KIND_ID[self.kind]

    @property
    def params_array(self) -> np.ndarray:
        """Parameters in canonical order, as consumed by the kernels."""
        return np.array([self.params[n] for n in PARAM_NAMES[self.kind]],
                        dtype=np.float64)


def make_model(kind: str, mass: float = 2000.0, **overrides) -> DiabaticModel:
    """Build a model of the given kind, overriding selected parameters."""
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    params = dict(DEFAULT_PARAMS[kind])
    for name, value in overrides.items():
        if name not in params:
            raise ValueError(f"{kind}: no parameter named {name!r}")
        params[name] = float(value)
    return DiabaticModel(kind, params, mass)


def single_avoided_crossing(mass: float = 2000.0, **overrides) -> DiabaticModel:
    return make_model("single-avoided-crossing", mass, **overrides)


def dual_avoided_crossing(mass: float = 2000.0, **overrides) -> DiabaticModel:
    return make_model("dual-avoided-crossing", mass, **overrides)


def extended_coupling(mass: float = 2000.0, **overrides) -> DiabaticModel:
    return make_model("extended-coupling", mass, **overrides)


def constant_gap(mass: float = 2000.0, **overrides) -> DiabaticModel:
    return make_model("constant-gap", mass, **overrides)


def diabatic_hamiltonian(model: DiabaticModel, R: float) -> np.ndarray:
    """V(R) as a symmetric 2x2 array."""
    if not math.isfinite(R):
        raise ValueError("R must be finite")
    v00, v01, v11 = K.model_v(model.kind_id, model.params_array, R)
    return np.array([[v00, v01], [v01, v11]])


def diabatic_gradient(model: DiabaticModel, R: float) -> np.ndarray:
    """dV/dR as a symmetric 2x2 array."""
    if not math.isfinite(R):
        raise ValueError("R must be finite")
    g00, g01, g11 = K.model_dv(model.kind_id, model.params_array, R)
    return np.array([[g00, g01], [g01, g11]])


@dataclass
class AdiabaticFrame:
    """Adiabatic quantities at a single position.

    E is sorted ascending (index 0 = ground). F holds the per-surface forces
    -dE_a/dR. d is the antisymmetric coupling matrix, U the eigenvector
    columns (U[:, a] belongs to E[a]).
    """

    R: float
    E: np.ndarray
    F: np.ndarray
    d: np.ndarray
    U: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        """Gap matrix E_a - E_b."""
        return self.E[:, None] - self.E[None, :]

    @property
    def omega(self) -> np.ndarray:
        """Transition frequencies (E_a - E_b)/hbar; hbar = 1 here."""
        return self.gap


def _frame_from_scalars(R, e0, e1, f0, f1, d01, theta):
    sin_t = math.sin(theta)
    cos_t = math.cos(theta)
    U = np.array([[-sin_t, cos_t], [cos_t, sin_t]])
    return AdiabaticFrame(
        R=R,
        E=np.array([e0, e1]),
        F=np.array([f0, f1]),
        d=np.array([[0.0, d01], [-d01, 0.0]]),
        U=U,
    )


def adiabatize(V: np.ndarray, dV: np.ndarray, R: float = 0.0) -> AdiabaticFrame:
    """Diagonalize a symmetric 2x2 with gradient into an AdiabaticFrame.

    Eigenvector signs follow the fixed convention u1 = (cos t, sin t),
    u0 = (-sin t, cos t) with 2t = atan2(V01, (V00-V11)/2) — deterministic at
    a point; continuity along a path is the caller's job (frame_along_path).
    """
    V = np.asarray(V, dtype=float)
    dV = np.asarray(dV, dtype=float)
    scale = max(1.0, float(np.max(np.abs(V))))
    if abs(V[0, 1] - V[1, 0]) > 1e-12 * scale:
        raise ValueError("V must be symmetric")
    gscale = max(1.0, float(np.max(np.abs(dV))))
    if abs(dV[0, 1] - dV[1, 0]) > 1e-12 * gscale:
        raise ValueError("dV must be symmetric")
    if not (np.all(np.isfinite(V)) and np.all(np.isfinite(dV))):
        raise ValueError("V and dV must be finite")
    st, e0, e1, f0, f1, d01, theta = K.adiab_entries(
        V[0, 0], 0.5 * (V[0, 1] + V[1, 0]), V[1, 1],
        dV[0, 0], 0.5 * (dV[0, 1] + dV[1, 0]), dV[1, 1])
    if st == K.ERR_DEGENERATE:
        raise DegenerateSurfaces(
            f"adiabatic gap below {DEGENERACY_FLOOR} at R={R}")
    return _frame_from_scalars(R, e0, e1, f0, f1, d01, theta)


def frame_at(model: DiabaticModel, R: float) -> AdiabaticFrame:
    """Adiabatic frame of a model at R."""
    st, e0, e1, f0, f1, d01, theta = K.adiab_point(
        model.kind_id, model.params_array, float(R))
    if st == K.ERR_DEGENERATE:
        raise DegenerateSurfaces(
            f"adiabatic gap below {DEGENERACY_FLOOR} at R={R}")
    return _frame_from_scalars(float(R), e0, e1, f0, f1, d01, theta)


def fix_gauge(prev: AdiabaticFrame, frame: AdiabaticFrame) -> AdiabaticFrame:
    """Flip eigenvector signs of `frame` for positive overlap with `prev`.

    The coupling matrix transforms as d -> S d S with S = diag(signs), so a
    simultaneous flip of both columns leaves d unchanged and only a single
    flip changes its sign. Raises GaugeAmbiguity when an overlap magnitude
    drops below 0.5 (path step too large to track the gauge).
    """
    signs = np.empty(2)
    for j in range(2):
        overlap = float(prev.U[:, j] @ frame.U[:, j])
        if abs(overlap) < K.GAUGE_OVERLAP_FLOOR:
            raise GaugeAmbiguity(
                f"eigenvector overlap {overlap:.3f} below 0.5 between "
                f"R={prev.R} and R={frame.R}")
        signs[j] = 1.0 if overlap >= 0.0 else -1.0
    if signs[0] == 1.0 and signs[1] == 1.0:
        return frame
    U = frame.U * signs[None, :]
    d01 = signs[0] * signs[1] * frame.d[0, 1]
    return AdiabaticFrame(
        R=frame.R,
        E=frame.E.copy(),
        F=frame.F.copy(),
        d=np.array([[0.0, d01], [-d01, 0.0]]),
        U=U,
    )


def frame_along_path(model: DiabaticModel,
                     R_sequence: Sequence[float]) -> list:
    """Frames along a path with the sign gauge fixed by continuity."""
    frames = []
    prev = None
    for R in R_sequence:
        frame = frame_at(model, R)
        if prev is not None:
            frame = fix_gauge(prev, frame)
        frames.append(frame)
        prev = frame
    return frames
