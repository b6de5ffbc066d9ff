"""Ensemble runner: initial-condition sampling, batched parallel trajectory
execution, compensated reduction, and CSV/summary emission.

Trajectory i always draws from the stream keyed by (seed, i) and trajectories
are partitioned into a fixed set of batches; workers process whole batches and
the parent reduces the batch partials in batch order. Output bytes therefore
do not depend on the worker count.
"""

import math
import multiprocessing
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.random import Generator

from . import models as mdl
from . import qcle as qc
from . import wavepacket as wav
from .config import RunConfig, emit_config
from .errors import DynamicsError
from .fssh import rng_for_trajectory, run_fssh

CSV_COLUMNS = ("t", "pop0", "pop1", "coh_re", "coh_im", "energy",
               "n_alive", "weight_var", "se_pop0", "se_pop1")

#: trajectories are split into this many reduction batches (fewer when the
#: ensemble is smaller); the batch, not the trajectory, is the unit handed
#: to a worker, and also the unit of the standard-error estimate.
N_BATCHES = 20


class KahanSum:
    """Elementwise compensated accumulator over same-shaped arrays."""

    def __init__(self, shape, dtype=np.float64):
        self.s = np.zeros(shape, dtype=dtype)
        self._c = np.zeros(shape, dtype=dtype)

    def add(self, x):
        y = np.asarray(x, dtype=self.s.dtype) - self._c
        t = self.s + y
        self._c = (t - self.s) - y
        self.s = t

    @property
    def value(self) -> np.ndarray:
        return self.s


def model_from_config(cfg: RunConfig) -> mdl.DiabaticModel:
    return mdl.DiabaticModel(cfg.model_kind, dict(cfg.model_params),
                             cfg.model_mass)


@dataclass(frozen=True)
class InitialCondition:
    R: float
    P: float
    state: int
    pair: Tuple[int, int]
    weight0: complex


def draw_initial(cfg: RunConfig, rng: Generator) -> InitialCondition:
    """One phase-space point plus electronic init from the given stream.

    Draw order is fixed: two standard normals for the Wigner spread (skipped
    entirely when sigma_R = 0), then one uniform when a pair-amplitude list
    is sampled. The engines consume the rest of the stream afterwards.
    """
    R, P = cfg.R0, cfg.P0
    if cfg.sigma_R > 0.0:
        z = rng.standard_normal(2)
        R = cfg.R0 + cfg.sigma_R * z[0]
        P = cfg.P0 + 0.5 / cfg.sigma_R * z[1]
    pair = (cfg.state, cfg.state)
    weight0 = 1.0 + 0.0j
    if cfg.pairs is not None:
        # Sample a term with probability |amp| / sum |amp|; dividing the
        # amplitude by that probability keeps the ensemble mean unbiased.
        amps = np.array([amp for _, amp in cfg.pairs])
        mags = np.abs(amps)
        total = mags.sum()
        cum = np.cumsum(mags / total)
        k = min(int(np.searchsorted(cum, rng.random(), side="right")),
                len(amps) - 1)
        pair = cfg.pairs[k][0]
        weight0 = complex(amps[k] * total / mags[k])
    return InitialCondition(R=float(R), P=float(P), state=cfg.state,
                            pair=pair, weight0=weight0)


def sample_initial_conditions(cfg: RunConfig, rng: Optional[Generator] = None,
                              n: Optional[int] = None
                              ) -> List[InitialCondition]:
    """Initial conditions for trajectories 0..n-1.

    With rng=None (the runner's behaviour) trajectory i draws from its own
    (seed, i) stream, so the sequence is independent of any later
    partitioning into batches or workers. An explicit rng draws everything
    from that one stream instead, which is convenient for statistics checks.
    """
    count = cfg.n_traj if n is None else int(n)
    if rng is not None:
        return [draw_initial(cfg, rng) for _ in range(count)]
    return [draw_initial(cfg, rng_for_trajectory(cfg.seed, i))
            for i in range(count)]


@dataclass
class TimeSeries:
    """Ensemble observables on the save grid; mirrors the CSV schema."""

    t: np.ndarray
    pop0: np.ndarray
    pop1: np.ndarray
    coh: np.ndarray          # complex coherence estimate
    energy: np.ndarray
    n_alive: np.ndarray      # int per save slot
    weight_var: np.ndarray
    se_pop0: np.ndarray
    se_pop1: np.ndarray


def _n_save(cfg: RunConfig) -> int:
    return cfg.n_steps // cfg.save_every + 1


def _save_times(cfg: RunConfig) -> np.ndarray:
    # Same float expression the drivers use: (int steps) * dt.
    return np.array([float(k * cfg.save_every) * cfg.dt
                     for k in range(_n_save(cfg))])


def _region(R: float, r_cut: float) -> int:
    """0 = reflected (R < -r_cut), 1 = interaction zone, 2 = transmitted."""
    if R > r_cut:
        return 2
    if R < -r_cut:
        return 0
    return 1


def _fssh_batch(task) -> Dict[str, object]:
    cfg, indices = task
    model = model_from_config(cfg)
    n_save = _n_save(cfg)
    pop = KahanSum((2, n_save))
    coh = KahanSum(n_save, dtype=np.complex128)
    ener = KahanSum(n_save)
    finals = np.zeros((2, 3), dtype=np.int64)
    n_applied = 0
    n_frustrated = 0
    for idx in indices:
        rng = rng_for_trajectory(cfg.seed, idx)
        init = draw_initial(cfg, rng)
        try:
            res = run_fssh(model, init.R, init.P, init.state, cfg.dt,
                           cfg.n_steps, n_sub=cfg.substeps,
                           save_every=cfg.save_every, rng=rng)
        except DynamicsError as exc:
            raise type(exc)(f"trajectory {idx}: {exc}") from exc
        on1 = res.nu.astype(np.float64)
        pop.add(np.stack([1.0 - on1, on1]))
        coh.add(res.rho[:, 0, 1])
        ener.add(res.energy)
        finals[res.final_nu, _region(res.final_R, cfg.grid_rcut)] += 1
        n_applied += res.n_applied
        n_frustrated += res.n_frustrated
    return {"n": len(indices), "pop": pop.value, "coh": coh.value,
            "energy": ener.value, "finals": finals,
            "applied": n_applied, "frustrated": n_frustrated}


def _qcle_batch(task) -> Dict[str, object]:
    cfg, indices = task
    model = model_from_config(cfg)
    n_save = _n_save(cfg)
    el = {key: KahanSum(n_save, dtype=np.complex128)
          for key in ((0, 0), (1, 1), (0, 1))}
    e_num = KahanSum(n_save, dtype=np.complex128)
    e_den = KahanSum(n_save, dtype=np.complex128)
    absw = KahanSum(n_save)
    absw2 = KahanSum(n_save)
    alive = np.zeros(n_save, dtype=np.int64)
    finals = np.zeros((2, 3), dtype=np.complex128)
    n_applied = 0
    n_frustrated = 0
    n_filtered = 0
    for idx in indices:
        rng = rng_for_trajectory(cfg.seed, idx)
        init = draw_initial(cfg, rng)
        try:
            res = qc.run_qcle(model, init.R, init.P, init.pair, cfg.dt,
                              cfg.n_steps, weight0=init.weight0,
                              filter_bound=cfg.filter_bound,
                              save_every=cfg.save_every, rng=rng)
        except DynamicsError as exc:
            raise type(exc)(f"trajectory {idx}: {exc}") from exc
        w = res.weight
        live = res.alive.astype(bool)
        for (s, sp), acc in el.items():
            mask = live & (res.pair[:, 0] == s) & (res.pair[:, 1] == sp)
            acc.add(np.where(mask, w, 0.0))
        diag = live & (res.pair[:, 0] == res.pair[:, 1])
        e_num.add(np.where(diag, w * res.energy, 0.0))
        e_den.add(np.where(diag, w, 0.0))
        mag = np.where(live, np.abs(w), 0.0)
        absw.add(mag)
        absw2.add(mag * mag)
        alive += live
        if bool(live[-1]) and res.final_pair[0] == res.final_pair[1]:
            finals[res.final_pair[0],
                   _region(res.final_R, cfg.grid_rcut)] += res.final_weight
        n_applied += res.n_applied
        n_frustrated += res.n_frustrated
        n_filtered += res.filtered_step is not None
    return {"n": len(indices),
            "el00": el[(0, 0)].value, "el11": el[(1, 1)].value,
            "el01": el[(0, 1)].value,
            "e_num": e_num.value, "e_den": e_den.value,
            "absw": absw.value, "absw2": absw2.value, "alive": alive,
            "finals": finals, "applied": n_applied,
            "frustrated": n_frustrated, "filtered": n_filtered}


def _run_batches(cfg: RunConfig, worker) -> List[Dict[str, object]]:
    splits = np.array_split(np.arange(cfg.n_traj),
                            min(N_BATCHES, cfg.n_traj))
    tasks = [(cfg, b.tolist()) for b in splits if len(b)]
    if cfg.workers == 1 or len(tasks) == 1:
        return [worker(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(processes=min(cfg.workers, len(tasks))) as pool:
        return pool.map(worker, tasks)


def _batch_se(batch_means: np.ndarray) -> np.ndarray:
    if batch_means.shape[0] < 2:
        return np.zeros(batch_means.shape[1])
    return (np.std(batch_means, axis=0, ddof=1)
            / math.sqrt(batch_means.shape[0]))


def run_fssh_ensemble(cfg: RunConfig) -> Tuple[TimeSeries, List[Tuple[str, object]]]:
    parts = _run_batches(cfg, _fssh_batch)
    n_save = _n_save(cfg)
    pop = KahanSum((2, n_save))
    coh = KahanSum(n_save, dtype=np.complex128)
    ener = KahanSum(n_save)
    finals = np.zeros((2, 3), dtype=np.int64)
    applied = frustrated = 0
    means = np.empty((len(parts), 2, n_save))
    for b, part in enumerate(parts):
        pop.add(part["pop"])
        coh.add(part["coh"])
        ener.add(part["energy"])
        finals += part["finals"]
        applied += part["applied"]
        frustrated += part["frustrated"]
        means[b] = part["pop"] / part["n"]
    n = cfg.n_traj
    series = TimeSeries(
        t=_save_times(cfg),
        pop0=pop.value[0] / n, pop1=pop.value[1] / n,
        coh=coh.value / n, energy=ener.value / n,
        n_alive=np.full(n_save, n, dtype=np.int64),
        weight_var=np.zeros(n_save),
        se_pop0=_batch_se(means[:, 0]), se_pop1=_batch_se(means[:, 1]))
    summary = _channel_summary(finals.astype(np.float64) / n)
    summary += [("hops.applied", applied), ("hops.frustrated", frustrated)]
    return series, summary


def run_qcle_ensemble(cfg: RunConfig) -> Tuple[TimeSeries, List[Tuple[str, object]]]:
    parts = _run_batches(cfg, _qcle_batch)
    n_save = _n_save(cfg)
    acc = {key: KahanSum(n_save, dtype=np.complex128)
           for key in ("el00", "el11", "el01", "e_num", "e_den")}
    absw = KahanSum(n_save)
    absw2 = KahanSum(n_save)
    alive = np.zeros(n_save, dtype=np.int64)
    finals = np.zeros((2, 3), dtype=np.complex128)
    applied = frustrated = filtered = 0
    means = np.empty((len(parts), 2, n_save))
    for b, part in enumerate(parts):
        for key, a in acc.items():
            a.add(part[key])
        absw.add(part["absw"])
        absw2.add(part["absw2"])
        alive += part["alive"]
        finals += part["finals"]
        applied += part["applied"]
        frustrated += part["frustrated"]
        filtered += part["filtered"]
        means[b, 0] = part["el00"].real / part["n"]
        means[b, 1] = part["el11"].real / part["n"]
    n = cfg.n_traj
    live = np.maximum(alive, 1)
    mean_abs = absw.value / live
    wvar = np.where(alive > 0,
                    np.maximum(absw2.value / live - mean_abs ** 2, 0.0), 0.0)
    den = acc["e_den"].value.real
    energy = np.where(np.abs(den) > 1e-300, acc["e_num"].value.real
                      / np.where(np.abs(den) > 1e-300, den, 1.0), 0.0)
    series = TimeSeries(
        t=_save_times(cfg),
        pop0=acc["el00"].value.real / n, pop1=acc["el11"].value.real / n,
        coh=acc["el01"].value / n, energy=energy,
        n_alive=alive, weight_var=wvar,
        se_pop0=_batch_se(means[:, 0]), se_pop1=_batch_se(means[:, 1]))
    summary = _channel_summary(finals.real / n)
    summary += [("transitions.applied", applied),
                ("transitions.frustrated", frustrated),
                ("walkers.filtered", filtered)]
    return series, summary


def run_oracle_series(cfg: RunConfig) -> Tuple[TimeSeries, List[Tuple[str, object]]]:
    """Grid propagation sampled on the same save grid as the trajectories.

    The grid step is snapped to an integer divisor of the save interval so
    both time columns carry identical values.
    """
    model = model_from_config(cfg)
    save_dt = cfg.dt * cfg.save_every
    per_save = max(1, round(save_dt / cfg.grid_dt))
    wp = wav.init_packet(model, cfg.R0, cfg.P0, cfg.sigma_R, cfg.state,
                         n=cfg.grid_n, r_min=cfg.grid_rmin,
                         r_max=cfg.grid_rmax, dt=save_dt / per_save,
                         r_cut=cfg.grid_rcut)
    n_save = _n_save(cfg)
    pop = np.empty((2, n_save))
    coh = np.empty(n_save, dtype=np.complex128)
    ener = np.empty(n_save)
    last = None
    for k in range(n_save):
        if k:
            wav.propagate(wp, per_save)
        last = wav.analyze(wp)
        pop[:, k] = last.pop
        coh[k] = last.coherence
        ener[k] = last.energy
    zeros = np.zeros(n_save)
    series = TimeSeries(
        t=_save_times(cfg), pop0=pop[0], pop1=pop[1], coh=coh, energy=ener,
        n_alive=np.ones(n_save, dtype=np.int64), weight_var=zeros,
        se_pop0=zeros, se_pop1=zeros)
    channels = np.stack([last.reflection,
                         last.pop - last.reflection - last.transmission,
                         last.transmission], axis=1)
    summary = _channel_summary(channels) + [("norm.final", last.norm)]
    return series, summary


def _channel_summary(frac: np.ndarray) -> List[Tuple[str, object]]:
    """frac[state, region] with regions (reflected, interior, transmitted)."""
    return [("channel.refl0", float(frac[0, 0])),
            ("channel.refl1", float(frac[1, 0])),
            ("channel.trans0", float(frac[0, 2])),
            ("channel.trans1", float(frac[1, 2])),
            ("channel.interior", float(frac[0, 1] + frac[1, 1]))]


_RUNNERS = {"fssh": run_fssh_ensemble, "qcle": run_qcle_ensemble,
            "oracle": run_oracle_series}


def format_timeseries(series: TimeSeries) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for k in range(len(series.t)):
        lines.append(",".join((
            repr(float(series.t[k])),
            repr(float(series.pop0[k])),
            repr(float(series.pop1[k])),
            repr(float(series.coh[k].real)),
            repr(float(series.coh[k].imag)),
            repr(float(series.energy[k])),
            str(int(series.n_alive[k])),
            repr(float(series.weight_var[k])),
            repr(float(series.se_pop0[k])),
            repr(float(series.se_pop1[k])))))
    return "\n".join(lines) + "\n"


def _format_summary(items: Sequence[Tuple[str, object]]) -> str:
    out = []
    for key, value in items:
        if isinstance(value, float):
            out.append(f"{key} = {value!r}")
        else:
            out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def _format_compare(table: Dict[str, TimeSeries]) -> str:
    methods = ("fssh", "qcle", "oracle")
    cols = ["t"] + [f"{m}_pop{s}" for m in methods for s in (0, 1)]
    lines = [",".join(cols)]
    t = table["fssh"].t
    for k in range(len(t)):
        row = [repr(float(t[k]))]
        for m in methods:
            row.append(repr(float(table[m].pop0[k])))
            row.append(repr(float(table[m].pop1[k])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig, out_dir: Optional[str] = None) -> Dict[str, Path]:
    """Execute the configured run and write its output files.

    Single-method runs produce timeseries.csv; compare produces one CSV per
    method plus the joined compare.csv. Every run also writes resolved.cfg
    (the canonical config echo) and summary.txt, whose final wall_time_s
    line is the only non-reproducible output byte.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files: Dict[str, Path] = {}

    def emit(name: str, text: str):
        path = out / name
        path.write_text(text)
        files[name] = path

    emit("resolved.cfg", emit_config(cfg))
    summary: List[Tuple[str, object]] = [("method", cfg.method),
                                         ("n_traj", cfg.n_traj),
                                         ("seed", cfg.seed)]
    if cfg.method in _RUNNERS:
        series, extra = _RUNNERS[cfg.method](cfg)
        emit("timeseries.csv", format_timeseries(series))
        summary += extra
    else:
        table: Dict[str, TimeSeries] = {}
        for m in ("fssh", "qcle", "oracle"):
            series, extra = _RUNNERS[m](cfg)
            table[m] = series
            emit(f"{m}.csv", format_timeseries(series))
            summary += [(f"{m}.{key}", value) for key, value in extra]
        emit("compare.csv", _format_compare(table))
        for m in ("fssh", "qcle"):
            summary += [
                (f"dev.{m}.pop0",
                 float(np.max(np.abs(table[m].pop0 - table["oracle"].pop0)))),
                (f"dev.{m}.pop1",
                 float(np.max(np.abs(table[m].pop1 - table["oracle"].pop1)))),
            ]
    summary.append(("wall_time_s", round(time.perf_counter() - t0, 3)))
    emit("summary.txt", _format_summary(summary))
    return files
