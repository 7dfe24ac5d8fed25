"""Desk-scale experiment harness: recovery sweeps, scaling-law fits,
sample-rule calibration, and certification reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import io as stio
from .certify import (compute_gram, delta_star_montecarlo, sample_complexity)
from .models import (FanBeamModel, FourierWaveletModel, LegendrePointModel,
                     RadonModel, assemble_system, draw_samples)
from .phantoms import PhantomSpec, make_phantom
from .solve import SolveConfig, solve_constrained_l1
from .wavelets import build_filter, build_atlas, image_norm, synthesis, truncation_positions
from .weights import WeightVector


@dataclass
class ExperimentConfig:
    model: str = "radon"
    wavelet_order: int = 1
    j0: int = 2
    j_max: int | None = None          # default j0 + 1
    phantom: PhantomSpec = field(default_factory=lambda: PhantomSpec("sparse", s=5))
    betas: tuple = (0.0,)
    ms: tuple | None = None           # explicit m per cell; None -> m_rule
    m_rule: str = "fixed"             # fixed | noise_matched
    m_rule_c0: float = 1.0
    m_rule_p: float | None = None     # compressibility exponent of the matched rule
    m_cap: int = 1024
    m_min: int = 8
    j0_rule: bool = False             # j0 from beta via the noise-matched rule
    j0_cap: int = 4
    j0_offset: int = 0
    gamma: float = 0.1
    zeta: float = 1.0
    seeds: tuple = (0, 1, 2, 3, 4)
    s_step: float = 1.0 / 32
    rho: float = 3.0
    out_dir: str | None = None
    solver: SolveConfig = field(default_factory=lambda: SolveConfig(max_iters=30000))

    def __post_init__(self):
        if self.j_max is None:
            self.j_max = self.j0 + 1
        if any(not (0.0 <= b < 1.0) for b in self.betas):
            raise ValueError("beta values must lie in [0, 1)")
        if self.ms is not None and any(m < 1 for m in self.ms):
            raise ValueError("m values must be >= 1")
        if self.j0 > self.j_max:
            raise ValueError("j0 must be <= j_max")


@dataclass
class SweepRecord:
    beta: float
    m: int
    j0: int
    s: int
    err_l2: float
    err_img: float
    residual: float
    wall_time: float
    seed: int
    status: str


def j0_for_beta(beta: float, a: float, b: float = 0.5, cap: int = 4,
                offset: int = 0) -> int:
    """Window scale balancing the noise and truncation contributions:
    j0 = floor(log2(1/beta) / (a + b)) + offset, capped at desk scale.

    Along this ladder both error contributions scale like the same power of
    the noise level for any fixed offset (the rule's log base is a free
    constant), so the offset only moves the ladder into the affordable scale
    range without touching the exponent under test."""
    if beta <= 0:
        return cap
    j = int(np.floor(np.log2(1.0 / beta) / (a + b))) + offset
    return int(min(max(j, 0), cap))


def noise_matched_m_rule(beta: float, a: float, p: float, c0: float,
                 m_cap: int, m_min: int = 8) -> int:
    """Sample count beta^-(2/(2a+1) + 2a/(p(2a+1))) log^4(1/beta), scaled by a
    calibrated constant and clipped to desk-scale caps."""
    if beta <= 0:
        return m_cap
    expo = 2.0 / (2.0 * a + 1.0) + 2.0 * a / (p * (2.0 * a + 1.0))
    m = c0 * beta ** -expo * np.log(1.0 / beta) ** 4
    return int(np.clip(int(np.floor(m)), m_min, m_cap))


class _AtlasCache:
    def __init__(self):
        self._store = {}

    def get(self, order: int, j_max: int, model_kind: str, s_step: float, rho: float):
        key = (order, j_max, model_kind, s_step, rho)
        if key not in self._store:
            atlas = build_atlas(build_filter(order), j_max)
            if model_kind == "radon":
                model = RadonModel(atlas, s_step=s_step)
            elif model_kind == "fanbeam":
                model = FanBeamModel(atlas, rho=rho, alpha_step=s_step / rho)
            else:
                raise ValueError(f"sweeps support radon/fanbeam, got {model_kind!r}")
            self._store[key] = (atlas, model)
        return self._store[key]


def build_model(kind: str, order: int = 1, j_max: int = 3, s_step: float = 1.0 / 32,
                rho: float = 3.0, n_freq: int | None = None, max_degree: int = 30):
    """Model factory covering all four measurement families."""
    if kind in ("radon", "fanbeam"):
        atlas = build_atlas(build_filter(order), j_max)
        if kind == "radon":
            return RadonModel(atlas, s_step=s_step)
        return FanBeamModel(atlas, rho=rho, alpha_step=s_step / rho)
    if kind in ("fourier", "fourier_wavelet"):
        return FourierWaveletModel(build_filter(order), j_max=j_max, n_freq=n_freq)
    if kind in ("legendre", "legendre_point"):
        return LegendrePointModel(max_degree=max_degree)
    raise ValueError(f"unknown model kind {kind!r}")


def _cell_m(cfg: ExperimentConfig, beta: float, idx: int) -> int:
    if cfg.ms is not None:
        return int(cfg.ms[idx % len(cfg.ms)])
    if cfg.m_rule != "noise_matched":
        raise ValueError("explicit ms required unless m_rule is noise_matched")
    a = cfg.phantom.a if cfg.phantom.kind == "tail" else 0.5
    p = cfg.m_rule_p
    if p is None:
        p = a / 2.0 if cfg.phantom.kind == "tail" else 0.5
    return noise_matched_m_rule(beta, a, p, cfg.m_rule_c0, cfg.m_cap, cfg.m_min)


def run_recovery_cell(atlas, model, j0: int, x_full: np.ndarray, beta: float,
                      m: int, seed: int, zeta: float, solver: SolveConfig,
                      record_meta=None) -> SweepRecord:
    """One (beta, m, seed) cell: draw angles, assemble, solve, record."""
    t0 = time.time()
    window = truncation_positions(atlas, j0)
    samples = draw_samples(model, m, seed=seed * 7919 + 13)
    system = assemble_system(model, window, samples, x_full=x_full, beta=beta,
                             noise_seed=seed * 104729 + 7)
    eta = beta + system.tail_residual
    cfg_solver = SolveConfig(zeta=zeta, eta=eta, max_iters=solver.max_iters,
                             tol_gap=solver.tol_gap, tol_feas=solver.tol_feas,
                             step_ratio=solver.step_ratio,
                             check_every=solver.check_every,
                             scale_base=solver.scale_base)
    omega = WeightVector.ones(len(window))
    res = solve_constrained_l1(system, omega, cfg_solver)
    diff_full = x_full.copy()
    diff_full[window] -= res.x_hat
    err_l2 = float(np.linalg.norm(diff_full))
    err_img = image_norm(atlas, synthesis(atlas, diff_full))
    meta = record_meta or {}
    return SweepRecord(beta=float(beta), m=int(m), j0=int(j0),
                       s=int(meta.get("s", 0)), err_l2=err_l2, err_img=err_img,
                       residual=res.residual, wall_time=time.time() - t0,
                       seed=int(seed), status=res.status)


def run_recovery_sweep(cfg: ExperimentConfig, cache: _AtlasCache | None = None):
    """All (beta, m, seed) cells of a configuration, deterministic per seed.

    Infeasible solves are recorded with their status and the sweep continues.
    """
    cache = cache or _AtlasCache()
    records = []
    for bi, beta in enumerate(cfg.betas):
        a = cfg.phantom.a if cfg.phantom.kind == "tail" else 0.5
        j0 = (j0_for_beta(beta, a, cap=cfg.j0_cap, offset=cfg.j0_offset)
              if cfg.j0_rule else cfg.j0)
        j_max = j0 + 1 if cfg.j0_rule else cfg.j_max
        atlas, model = cache.get(cfg.wavelet_order, j_max, cfg.model, cfg.s_step, cfg.rho)
        _, x_full, meta = make_phantom(atlas, cfg.phantom, j0)
        m = _cell_m(cfg, beta, bi)
        for seed in cfg.seeds:
            rec = run_recovery_cell(atlas, model, j0, x_full, beta, m, seed,
                                    cfg.zeta, cfg.solver, record_meta=meta)
            records.append(rec)
    if cfg.out_dir:
        stio.write_records_csv(f"{cfg.out_dir}/records.csv", records)
    return records


def fit_scaling(records, x_axis: str):
    """Ordinary least squares on log-log (axis value, median error) pairs.

    Returns (exponent, intercept, r_squared) with the exponent measured as
    d log err / d log axis."""
    if x_axis not in ("beta", "m"):
        raise ValueError("x_axis must be 'beta' or 'm'")
    cells: dict = {}
    for r in records:
        key = getattr(r, x_axis)
        cells.setdefault(key, []).append(r.err_l2)
    xs = np.array(sorted(cells))
    if len(xs) < 4:
        raise ValueError("need at least 4 distinct axis values")
    med = np.array([np.median(cells[x]) for x in xs])
    if np.any(med <= 0) or np.any(xs <= 0):
        raise ValueError("scaling fit needs positive errors and axis values")
    lx = np.log(xs)
    ly = np.log(med)
    lxc = lx - lx.mean()
    slope = float((lxc @ (ly - ly.mean())) / (lxc @ lxc))
    intercept = float(ly.mean() - slope * lx.mean())
    pred = intercept + slope * lx
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def fit_scaling_windowed(records, x_axis: str, min_points: int = 4,
                         r2_target: float = 0.9):
    """Fit over the contiguous axis window where the power law holds best.

    Candidate windows need at least min_points axis values; among those
    reaching the target fit quality the one with the highest quality wins
    (width breaks ties).  A slow crossover into a flattened regime can keep
    the global fit above the quality bar while masking the asymptotic law,
    which is why quality outranks width here.  Returns (exponent, intercept,
    r2, window, flagged); `flagged` marks a fit that missed the target in
    every window (the best one is still reported)."""
    values = sorted(set(getattr(r, x_axis) for r in records))
    if len(values) < min_points:
        raise ValueError("not enough distinct axis values")
    best = None           # (passes_target, r2, width, result, window)
    for lo in range(len(values)):
        for hi in range(lo + min_points, len(values) + 1):
            window = set(values[lo:hi])
            sub = [r for r in records if getattr(r, x_axis) in window]
            res = fit_scaling(sub, x_axis)
            cand = (res[2] >= r2_target, res[2], hi - lo, res, tuple(sorted(window)))
            if best is None or cand[:3] > best[:3]:
                best = cand
    passes, r2, _, res, window = best
    return res[0], res[1], r2, window, (not passes)


def calibrate_recovery_constant(order: int = 1, s: int = 5, j0: int = 2,
                                n_seeds: int = 20, target_successes: int | None = None,
                                tol: float = 1e-5, m_hi_start: int = 64,
                                s_step: float = 1.0 / 32, zeta: float = 1.0,
                                max_m: int = 4096) -> float:
    """Calibrate the universal constant of the m >= C0 s j0 log^3 s rule on a
    pilot: bisect to the smallest sample count where noiseless exactly sparse
    signals are recovered across the seed battery, and freeze the ratio."""
    target = n_seeds if target_successes is None else target_successes
    cache = _AtlasCache()
    atlas, model = cache.get(order, j0 + 1, "radon", s_step, 3.0)

    def success_count(m):
        good = 0
        for seed in range(n_seeds):
            spec = PhantomSpec("sparse", s=s, seed=seed)
            _, x_full, meta = make_phantom(atlas, spec, j0)
            rec = run_recovery_cell(atlas, model, j0, x_full, 0.0, m, seed,
                                    zeta, SolveConfig(max_iters=20000), record_meta=meta)
            nrm = float(np.linalg.norm(x_full))
            if nrm > 0 and rec.err_l2 / nrm <= tol:
                good += 1
        return good

    hi = m_hi_start
    while success_count(hi) < target:
        hi *= 2
        if hi > max_m:
            raise RuntimeError("calibration failed to reach the success target")
    lo = max(hi // 2, 1)
    while hi - lo > max(2, hi // 16):
        mid = (lo + hi) // 2
        if success_count(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi / (s * j0 * np.log(s) ** 3)


def recovery_rule_m(c0: float, s: int, j0: int, gamma: float = 0.1) -> int:
    return int(np.ceil(c0 * s * max(j0 * np.log(s) ** 3, np.log(1.0 / gamma))))


def run_certification_report(cfg: ExperimentConfig, out_dir: str,
                             lam_grid=(2.0, 4.0), m_grid=(16, 32),
                             mc_trials: int = 64, seed: int = 0):
    """Write the certificate report, the per-scale coherence table, restricted
    constant estimates over a (lambda, m) grid, and the sample-rule table."""
    if cfg.model in ("radon", "fanbeam"):
        cache = _AtlasCache()
        atlas, model = cache.get(cfg.wavelet_order, cfg.j_max, cfg.model,
                                 cfg.s_step, cfg.rho)
        window = truncation_positions(atlas, cfg.j0)
    else:
        model = build_model(cfg.model, order=cfg.wavelet_order, j_max=cfg.j_max)
        scales = model.scales()
        window = (np.arange(model.dictionary_size()) if scales is None
                  else np.flatnonzero(scales <= cfg.j0))
    if hasattr(model, "natural_weights"):
        omega = WeightVector(model.natural_weights()[window])
    else:
        omega = WeightVector.ones(len(window))
    cert = compute_gram(model, window, omega=omega, check_convergence=True, seed=seed)
    rows = []
    for lam in lam_grid:
        for m in m_grid:
            samples = draw_samples(model, int(m), seed=seed + 17 * int(m))
            system = assemble_system(model, window, samples)
            est = delta_star_montecarlo(system, cert, omega, lam,
                                        trials=mc_trials, seed=seed)
            rows.append((lam, m, est.delta_star))
    M = len(window)
    s_ref = max(2, min(8, M))
    table = {"s": s_ref}
    for variant in ("conditioning", "relative_coherence", "window", "sparsity"):
        table[variant] = sample_complexity(cert, s_ref, M, cfg.gamma, variant,
                                           zeta=cfg.zeta, j0=cfg.j0)
    stio.write_certificate_report(out_dir, cert, delta_rows=rows,
                                  complexity=table)
    return cert, rows, table
