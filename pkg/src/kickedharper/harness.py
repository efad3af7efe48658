"""Experiment configuration, orchestration and output files.

A run evolves the kicked Harper map with one of the three algorithms, with
static imperfections interleaved after every elementary gate, and records
observables in the momentum basis.  Scans (threshold, transition point,
delocalization map, Husimi time scale) are built from independent jobs that
run in a process pool and are merged in job order, so the output does not
depend on the worker count.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .chebyshev import chebyshev_coefficients, chebyshev_step, chebyshev_step_sequence
from .imperfections import StaticDisorder, sample_disorder
from .model import (GOLDEN_HBAR, HarperParams, classical_ensemble_evolve, exact_gate_count,
                    exact_step, momentum_state, web_initial_cloud)
from .observables import (FitError, coherent_state, density_mask, downsample,
                          fit_localization_length, husimi, husimi_error, ipr,
                          momentum_probabilities, predict,
                          second_moment)
from .slices import SliceConfig, slice_step, slice_step_sequence
from .spectrum import align_and_compare, build_unitary, butterfly_scan, eigenphases
from .statevector import QuantumState, apply_qft

METHODS = ("exact", "slice", "chebyshev")
OBSERVABLES = ("ipr", "moment", "loclen", "fidelity")
INITIAL_STATES = ("momentum", "coherent")
FORMATS = ("csv", "ndjson")
SATURATION_FRACTION = 0.8


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ScanError(RuntimeError):
    """A scan did not bracket the level it was looking for."""


# ------------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "slice"
    K: float = 1.0
    L: float = 5.0
    n_r: int = 8
    hbar: float = GOLDEN_HBAR          # target hbar / (2 pi) on the cylinder
    geometry: str = "cylinder"
    cells: int = 8                     # P = Q on the torus
    n_s: int = 40
    symmetrized: bool = False
    degree: int = 6
    samples: int = 64
    threshold: float = 0.0
    n_p: int | None = None             # fixed-point bits of the exact method
    eps: tuple = (0.0,)
    realizations: int = 1
    seed: int = 0
    t: int = 100
    every: int = 1
    observables: tuple = ("ipr", "moment")
    initial: str = "momentum"
    n0: int | None = None
    theta0: float | None = None
    fit_window: int | None = None
    out_dir: str = "out"
    format: str = "csv"

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in _as_tuple(self.eps)))
        object.__setattr__(self, "observables", tuple(_as_tuple(self.observables)))
        self.validate()

    def validate(self):
        def need(ok, name, msg):
            if not ok:
                raise ConfigError(name, msg)

        need(self.method in METHODS, "method", f"must be one of {', '.join(METHODS)}")
        need(isinstance(self.n_r, (int, np.integer)) and 2 <= self.n_r <= 24, "n_r",
             "must be an integer in [2, 24]")
        for name in ("K", "L"):
            v = getattr(self, name)
            need(math.isfinite(v) and v >= 0, name, "must be finite and non-negative")
        need(self.geometry in ("cylinder", "torus"), "geometry", "must be cylinder or torus")
        if self.geometry == "cylinder":
            need(0 < self.hbar < 1, "hbar", "hbar/(2 pi) must lie in (0, 1)")
            need(math.floor(self.hbar * 2 ** self.n_r + 0.5) >= 1, "hbar",
                 f"rounds to zero on {self.n_r} qubits")
            need(math.floor(self.hbar * 2 ** self.n_r + 0.5) < 2 ** self.n_r, "hbar",
                 f"rounds to one on {self.n_r} qubits")
        else:
            need(self.cells >= 1, "cells", "must be positive")
            need(self.cells ** 2 < 2 ** self.n_r, "cells",
                 f"{self.cells}x{self.cells} cells need more than {self.n_r} qubits")
        need(self.n_s >= 1, "n_s", "need at least one slice per kick")
        need(self.degree >= 1, "degree", "must be at least 1")
        need(self.samples > self.degree + 1, "samples", "must exceed degree + 1")
        need(self.threshold >= 0, "threshold", "must be non-negative")
        need(self.n_p is None or self.n_p >= self.n_r, "n_p", "must be at least n_r")
        need(len(self.eps) >= 1, "eps", "need at least one value")
        need(all(math.isfinite(e) and e >= 0 for e in self.eps), "eps", "values must be non-negative")
        need(self.method != "exact" or all(e == 0 for e in self.eps), "eps",
             "the exact method has no gate sequence to perturb; use slice or chebyshev")
        need(self.realizations >= 1, "realizations", "must be at least 1")
        need(self.seed >= 0, "seed", "must be non-negative")
        need(self.t >= 0, "t", "must be non-negative")
        need(self.every >= 1, "every", "must be at least 1")
        bad = [o for o in self.observables if o not in OBSERVABLES]
        need(not bad, "observables", f"unknown {bad}; choose from {', '.join(OBSERVABLES)}")
        need(self.initial in INITIAL_STATES, "initial", f"must be one of {', '.join(INITIAL_STATES)}")
        need(self.n0 is None or 0 <= self.n0 < 2 ** self.n_r, "n0", "outside the register")
        need(self.fit_window is None or self.fit_window >= 2, "fit_window", "must be at least 2")
        need(self.format in FORMATS, "format", f"must be one of {', '.join(FORMATS)}")

    def params(self) -> HarperParams:
        if self.geometry == "torus":
            return HarperParams.torus(self.K, self.L, self.n_r, self.cells)
        return HarperParams.cylinder(self.K, self.L, self.n_r, self.hbar)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps"] = list(self.eps)
        d["observables"] = list(self.observables)
        return d

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def _as_tuple(v):
    if isinstance(v, str):
        return tuple(x.strip() for x in v.split(",") if x.strip())
    if np.isscalar(v):
        return (v,)
    return tuple(v)


# INI layout: keys are field names, grouped into these sections
INI_SECTIONS = {
    "model": ("method", "K", "L", "n_r", "hbar", "geometry", "cells"),
    "algorithm": ("n_s", "symmetrized", "degree", "samples", "threshold", "n_p"),
    "noise": ("eps", "realizations", "seed"),
    "run": ("t", "every", "observables", "initial", "n0", "theta0", "fit_window"),
    "output": ("out_dir", "format"),
}


def _convert(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    text = raw.strip()
    try:
        if name in ("eps",):
            return tuple(float(x) for x in text.split(",") if x.strip())
        if name == "observables":
            return tuple(x.strip() for x in text.split(",") if x.strip())
        if name == "symmetrized":
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(text)
            return low in ("true", "yes", "1", "on")
        kind = kinds[name]
        if text.lower() in ("", "none") and "None" in kind:
            return None
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r}") from None


def load_config(source, **overrides) -> ExperimentConfig:
    """Read an INI file (path or text); keyword overrides win."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    text = Path(source).read_text(encoding="utf-8") if _is_path(source) else str(source)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    values = {}
    for section in parser.sections():
        if section not in INI_SECTIONS:
            raise ConfigError(section, "unknown section")
        for key, raw in parser.items(section):
            if key not in INI_SECTIONS[section]:
                raise ConfigError(key, f"unknown key in [{section}]")
            values[key] = _convert(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def _is_path(source) -> bool:
    if isinstance(source, Path):
        return True
    return isinstance(source, str) and "\n" not in source and os.path.exists(source)


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    d = config.to_dict()
    for section, keys in INI_SECTIONS.items():
        lines.append(f"[{section}]")
        for k in keys:
            v = d[k]
            if isinstance(v, list):
                v = ", ".join(str(x) for x in v)
            lines.append(f"{k} = {'none' if v is None else v}")
        lines.append("")
    return "\n".join(lines)


# ------------------------------------------------------------------ stepping

class Stepper:
    """One Floquet period of the configured algorithm, with or without noise."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = config.params()
        self.ancilla = config.method == "slice"
        self.n_q = config.n_r + (1 if self.ancilla else 0)
        if config.method == "slice":
            self.slices = SliceConfig(config.n_s, config.symmetrized)
            self.n_g = slice_step_sequence(self.params, self.slices).n_g
        elif config.method == "chebyshev":
            self.approx = chebyshev_coefficients(config.samples, config.degree)
            self.n_g = chebyshev_step_sequence(self.params, self.approx, config.threshold).n_g
        else:
            self.n_g = exact_gate_count(config.n_r, config.n_p or config.n_r)

    def step(self, state: QuantumState, disorder: StaticDisorder | None = None) -> QuantumState:
        c = self.config
        if c.method == "slice":
            return slice_step(state, self.params, self.slices, disorder)
        if c.method == "chebyshev":
            return chebyshev_step(state, self.params, self.approx, c.threshold, disorder)
        if disorder is not None and disorder.is_active:
            raise ValueError("the exact method cannot be run with imperfections")
        return exact_step(state, self.params, c.n_p)

    def initial_state(self) -> QuantumState:
        """The configured initial state in the theta representation."""
        c, p = self.config, self.params
        N = p.N_H
        if c.initial == "momentum":
            return momentum_state(c.n_r, c.n0 or 0, self.ancilla)
        theta0 = N / 2 if c.theta0 is None else c.theta0
        n0 = N // 2 + N // (2 * p.P) if c.n0 is None else c.n0
        psi = coherent_state(p, theta0, n0)
        amps = np.zeros(1 << self.n_q, complex)
        amps[:N] = psi
        state = QuantumState(amps, c.n_r, c.n_r if self.ancilla else None)
        apply_qft(state, inverse=True)
        state.gates_applied = 0
        return state

    def disorder(self, eps: float, realization: int) -> StaticDisorder:
        return sample_disorder(self.n_q, eps, self.config.seed, realization)


# ------------------------------------------------------------------- records

@dataclass
class RunRecord:
    config: dict
    eps: float
    realization: int
    seed: int
    n_g: int
    times: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    final_distribution: list = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.values[name], float)

    def saturation(self, name: str = "ipr", fraction: float = SATURATION_FRACTION) -> float:
        """Mean of an observable over the recorded times t >= fraction * t_final."""
        times = np.asarray(self.times)
        if times.size == 0:
            raise ValueError("empty record")
        sel = times >= fraction * times[-1]
        return float(np.mean(self.series(name)[sel]))

    def rows(self):
        names = list(self.values)
        for i, t in enumerate(self.times):
            yield {"seed": self.seed, "realization": self.realization, "eps": self.eps, "t": t,
                   "n_g": self.n_g, **{k: self.values[k][i] for k in names}}

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, allow_nan=True)


def record_times(t: int, every: int) -> list:
    times = list(range(0, t + 1, every))
    if times[-1] != t:
        times.append(t)
    return times


def _observe(state: QuantumState, config: ExperimentConfig, ref: QuantumState | None):
    p = momentum_probabilities(state)
    out = {}
    if "ipr" in config.observables:
        out["ipr"] = float(ipr(p))
    if "moment" in config.observables:
        out["moment"] = second_moment(p, periodic=True)
    if "loclen" in config.observables:
        try:
            out["loclen"] = fit_localization_length(p, config.fit_window)
        except FitError:
            out["loclen"] = math.nan
    if "fidelity" in config.observables:
        out["fidelity"] = 1.0 if ref is None else float(
            min(1.0, abs(np.vdot(ref.amplitudes, state.amplitudes)) ** 2))
    return out, p


def run_single(config: ExperimentConfig, eps: float, realization: int) -> RunRecord:
    """Evolve one (eps, realization) pair and record the chosen observables."""
    stepper = Stepper(config)
    disorder = stepper.disorder(eps, realization)
    state = stepper.initial_state()
    ref = state.copy() if ("fidelity" in config.observables and disorder.is_active) else None
    rec = RunRecord(config.to_dict(), float(eps), int(realization), int(config.seed), stepper.n_g)
    rec.values = {k: [] for k in config.observables}
    wanted = set(record_times(config.t, config.every))
    p = None
    for t in range(config.t + 1):
        if t > 0:
            stepper.step(state, disorder)
            if ref is not None:
                stepper.step(ref)
        if t in wanted:
            obs, p = _observe(state, config, ref)
            rec.times.append(t)
            for k, v in obs.items():
                rec.values[k].append(v)
    rec.final_distribution = p.tolist()
    return rec


def run_jobs(fn: Callable, jobs: Sequence[tuple], threads: int = 1) -> list:
    """Evaluate fn(*job) for every job; results come back in job order."""
    jobs = list(jobs)
    if threads <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]


def experiment_jobs(config: ExperimentConfig) -> list:
    jobs = []
    for eps in config.eps:
        n_real = config.realizations if eps > 0 else 1
        jobs += [(config, eps, r) for r in range(n_real)]
    return jobs


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list:
    """All (eps, realization) records; eps = 0 runs once since it has no randomness."""
    return run_jobs(run_single, experiment_jobs(config), threads)


def saturation_ipr(records: Sequence[RunRecord], eps: float) -> tuple[float, float, int]:
    """Realization mean, standard error and count of the saturation IPR at one eps."""
    vals = np.array([r.saturation("ipr") for r in records if r.eps == eps])
    if vals.size == 0:
        raise ValueError(f"no records at eps={eps}")
    err = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(vals.mean()), err, int(vals.size)


# -------------------------------------------------------------- interpolation

def first_crossing(x, y, level: float, log_x: bool = False) -> float:
    """x where y first reaches ``level`` going up, by linear interpolation.

    With ``log_x`` the interpolation is linear in log x and log y.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if y[0] >= level:
        raise ScanError(f"already at or above {level:g} at the first scan point x={x[0]:g}")
    above = np.nonzero(y >= level)[0]
    if above.size == 0:
        raise ScanError(f"level {level:g} not reached in the scan (max {y.max():g})")
    i = int(above[0])
    x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
    if log_x:
        lx0, lx1 = math.log(x0), math.log(x1)
        f = (math.log(level) - math.log(y0)) / (math.log(y1) - math.log(y0))
        return math.exp(lx0 + f * (lx1 - lx0))
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept of log10 y against log10 x."""
    lx, ly = np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float))
    slope, icpt = np.polyfit(lx, ly, 1)
    return float(slope), float(icpt)


# ------------------------------------------------------------ threshold scan

@dataclass
class EpsilonCPoint:
    n_r: int
    n_q: int
    n_g: int
    ipr0: float
    eps: list
    ipr: list
    ipr_err: list
    eps_c: float
    predicted: float
    note: str = ""


def epsilon_c_scan(config: ExperimentConfig, n_r_list: Sequence[int], eps_grid: Sequence[float],
                   regime: str, threads: int = 1) -> list:
    """eps where the saturation IPR reaches twice its unperturbed value, per n_r.

    The crossing is interpolated linearly in log eps and log IPR between the
    realization-averaged grid points.  ``regime`` selects the prediction
    ("localized" or "delocalized").
    """
    eps_grid = sorted(float(e) for e in eps_grid if e > 0)
    cfgs = [config.with_(n_r=int(n), eps=(0.0,) + tuple(eps_grid)) for n in n_r_list]
    jobs = [job for c in cfgs for job in experiment_jobs(c)]
    records = run_jobs(run_single, jobs, threads)
    out = []
    for c in cfgs:
        recs = [r for r in records if r.config["n_r"] == c.n_r]
        ipr0 = saturation_ipr(recs, 0.0)[0]
        stats = [saturation_ipr(recs, e) for e in eps_grid]
        means = [s[0] for s in stats]
        n_g, n_q = recs[0].n_g, Stepper(c).n_q
        note = ""
        try:
            eps_c = first_crossing(eps_grid, means, 2 * ipr0, log_x=True)
        except ScanError as exc:
            eps_c, note = math.nan, f"n_r={c.n_r}: doubling not bracketed ({exc})"
        pred = predict(regime, n_g, n_q, 0.0).eps_c
        out.append(EpsilonCPoint(c.n_r, n_q, n_g, ipr0, eps_grid, means, [s[1] for s in stats],
                                 eps_c, pred, note))
    return out


# ----------------------------------------------------------- transition point

@dataclass
class TransitionResult:
    n_r: int
    eps: float
    K: list
    ipr: list
    K_c: float
    n_g: int
    note: str = ""


def _final_ipr(config: ExperimentConfig, eps: float, realization: int) -> float:
    cfg = config.with_(observables=("ipr",), every=max(1, config.t))
    return run_single(cfg, eps, realization).values["ipr"][-1]


def transition_point(config: ExperimentConfig, K_list: Sequence[float], eps: float = 0.0,
                     threads: int = 1) -> TransitionResult:
    """K where the realization-averaged IPR(t) first reaches N_H / 4 (L fixed)."""
    n_real = config.realizations if eps > 0 else 1
    K_list = [float(k) for k in K_list]
    jobs = [(config.with_(K=k), eps, r) for k in K_list for r in range(n_real)]
    vals = np.array(run_jobs(_final_ipr, jobs, threads)).reshape(len(K_list), n_real).mean(axis=1)
    level = (1 << config.n_r) / 4
    note = ""
    try:
        K_c = first_crossing(K_list, vals, level)
    except ScanError as exc:
        K_c, note = math.nan, f"no crossing of N_H/4 in the K scan: {exc}"
    n_g = Stepper(config).n_g
    return TransitionResult(config.n_r, float(eps), K_list, vals.tolist(), K_c, n_g, note)


# ----------------------------------------------------------- delocalization map

def eigenstate_ipr(params: HarperParams) -> float:
    """Mean over Floquet eigenstates of the IPR in the momentum basis."""
    U = build_unitary(lambda s: exact_step(s, params), params.n_r)
    _, vecs = np.linalg.eig(U)
    # theta -> momentum with the forward kernel exp(+2 pi i j n / N)
    mom = np.fft.ifft(vecs, axis=0, norm="ortho")
    p = np.abs(mom) ** 2
    p /= p.sum(axis=0)
    return float(np.mean(1.0 / np.sum(p ** 2, axis=0)))


def _map_point(K, L, n_r, hbar):
    return eigenstate_ipr(HarperParams.cylinder(K, L, n_r, hbar))


def sweep_kl(K_grid, L_grid, n_r: int, hbar: float = GOLDEN_HBAR, threads: int = 1) -> np.ndarray:
    """Mean eigenstate IPR on the (K, L) grid; result[i, j] is at (K_grid[i], L_grid[j])."""
    if n_r > 9:
        raise ValueError("the delocalization map diagonalizes N_H x N_H matrices; keep n_r <= 9")
    jobs = [(float(K), float(L), n_r, hbar) for K in K_grid for L in L_grid]
    vals = run_jobs(_map_point, jobs, threads)
    return np.array(vals).reshape(len(K_grid), len(L_grid))


# -------------------------------------------------------------- spectrum runs

@dataclass
class SpectrumResult:
    eps: float
    realization: int
    delta_E: float
    offset: float
    unitarity_deviation: float
    phases: list


def _spectrum_job(config: ExperimentConfig, eps: float, realization: int, ref_phases):
    stepper = Stepper(config)
    disorder = stepper.disorder(eps, realization)
    U = build_unitary(lambda s: stepper.step(s, disorder), config.n_r, stepper.ancilla)
    ev = eigenphases(U, config.method)
    dE, off = align_and_compare(ev, np.asarray(ref_phases))
    return SpectrumResult(float(eps), int(realization), dE, off, ev.unitarity_deviation,
                          ev.phases.tolist())


def spectrum_run(config: ExperimentConfig, threads: int = 1) -> list:
    """Eigenphases of the configured method per (eps, realization), compared to exact."""
    params = config.params()
    ref = eigenphases(build_unitary(lambda s: exact_step(s, params), config.n_r)).phases
    jobs = [job + (ref,) for job in experiment_jobs(config)]
    return run_jobs(_spectrum_job, jobs, threads)


# ---------------------------------------------------------------- phase space

def state_husimi(state: QuantumState, params: HarperParams) -> np.ndarray:
    """Husimi grid h[Theta, n] of the register, summed over ancilla values."""
    c = state.copy()
    apply_qft(c)
    N = params.N_H
    amps = c.amplitudes.reshape(-1, N)
    return sum(husimi(a, params) for a in amps if np.any(a))


def web_density(K: float, L: float, cells: int = 8, t: int = 1000, n_points: int = 10 ** 6,
                grid: int = 256, seed: int = 0) -> np.ndarray:
    """Classical ensemble density on the torus after t steps of the cloud on the web."""
    I, th = web_initial_cloud(n_points, cells, seed)
    return classical_ensemble_evolve(I, th, t, K, L, cells, cells, (grid, grid))


def web_mask(density: np.ndarray, N_H: int) -> np.ndarray:
    """Cells of an N_H x N_H grid lying where the classical density exceeds its median."""
    G = density.shape[0]
    if N_H <= G:
        coarse = downsample(density, N_H) if G % N_H == 0 else density
        return density_mask(coarse)
    if N_H % G:
        raise ValueError("grid sizes must divide each other")
    m = density_mask(density)
    f = N_H // G
    return np.kron(m, np.ones((f, f), bool))


@dataclass
class HusimiErrorRun:
    n_r: int
    n_q: int
    eps: float
    realization: int
    n_g: int
    times: list
    errors: list
    t_h: float


def husimi_error_run(config: ExperimentConfig, eps: float, realization: int, mask,
                     level: float = 0.5, t_max: int | None = None) -> HusimiErrorRun:
    """Relative Husimi error on the mask against the noiseless run, until it reaches ``level``."""
    stepper = Stepper(config)
    disorder = stepper.disorder(eps, realization)
    params = stepper.params
    noisy = stepper.initial_state()
    clean = noisy.copy()
    t_max = config.t if t_max is None else t_max
    times, errs = [0], [0.0]
    t_h = math.nan
    for t in range(1, t_max + 1):
        stepper.step(noisy, disorder)
        stepper.step(clean)
        err = husimi_error(state_husimi(noisy, params), state_husimi(clean, params), mask)
        times.append(t)
        errs.append(err)
        if err >= level:
            t_h = t - 1 + (level - errs[-2]) / (err - errs[-2])
            break
    return HusimiErrorRun(config.n_r, stepper.n_q, float(eps), int(realization), stepper.n_g,
                          times, errs, t_h)


def fit_husimi_law(n_q, eps, t_h) -> tuple[float, float, float]:
    """Least-squares (C_h, alpha, beta) in log t_h = log C_h - alpha log eps - beta log n_q."""
    n_q, eps, t_h = (np.asarray(a, float) for a in (n_q, eps, t_h))
    ok = np.isfinite(t_h) & (t_h > 0)
    if ok.sum() < 3:
        raise ScanError("need at least three finite t_h values for the fit")
    A = np.column_stack([np.ones(ok.sum()), -np.log(eps[ok]), -np.log(n_q[ok])])
    coef, *_ = np.linalg.lstsq(A, np.log(t_h[ok]), rcond=None)
    return float(np.exp(coef[0])), float(coef[1]), float(coef[2])


def fit_diffusion(times, moments, ballistic: bool = False) -> float:
    """D from <n^2> = D t (normal) or D t^2 (ballistic), least squares through the origin."""
    t = np.asarray(times, float)
    m = np.asarray(moments, float)
    x = t ** 2 if ballistic else t
    den = float(np.dot(x, x))
    if den == 0:
        raise ValueError("need at least one positive time")
    return float(np.dot(x, m) / den)


# ------------------------------------------------------------------- outputs

def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            vals = [row[h] for h in header] if isinstance(row, dict) else list(row)
            w.writerow([_fmt(v) for v in vals])
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_ndjson(path, items) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for it in items:
            d = it if isinstance(it, dict) else asdict(it)
            fh.write(json.dumps(d, sort_keys=True) + "\n")
    return path


def to_rgb(grid: np.ndarray, gamma: float = 2.2) -> np.ndarray:
    """Grey-level image: value / max, raised to 1/gamma, scaled to 0..255."""
    g = np.asarray(grid, float)
    top = g.max()
    x = np.zeros_like(g) if top <= 0 else np.clip(g / top, 0, 1) ** (1 / gamma)
    v = np.round(255 * x).astype(np.uint8)
    return np.repeat(v[..., None], 3, axis=-1)


def write_ppm(path, grid: np.ndarray, gamma: float = 2.2) -> Path:
    """Binary P6 image, row-major, first grid row at the top."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rgb = to_rgb(grid, gamma)
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
    return path


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: 3 * w * h], np.uint8).reshape(h, w, 3)


class Manifest:
    """Index of the artifacts written by one command."""

    def __init__(self, out_dir, command: str, config: dict | None = None):
        self.out_dir = Path(out_dir)
        self.command = command
        self.config = config or {}
        self.artifacts = []
        self.start = time.time()

    def add(self, path, kind: str, description: str):
        self.artifacts.append({"path": str(Path(path).relative_to(self.out_dir)), "kind": kind,
                               "description": description})

    def write(self) -> Path:
        path = self.out_dir / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        body = {"command": self.command, "config": self.config, "artifacts": self.artifacts,
                "wall_time_s": round(time.time() - self.start, 3)}
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def write_records(records: Sequence[RunRecord], out_dir, fmt: str, stem: str = "run") -> Path:
    out_dir = Path(out_dir)
    if fmt == "ndjson":
        return write_ndjson(out_dir / f"{stem}.ndjson", [asdict(r) for r in records])
    names = list(records[0].values) if records else []
    header = ["seed", "realization", "eps", "t", "n_g"] + names
    rows = [row for r in records for row in r.rows()]
    return write_csv(out_dir / f"{stem}.csv", header, rows)
