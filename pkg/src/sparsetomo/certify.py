"""Numerical certification of the recovery machinery.

Builds the window Gram matrix and its square root, measures coherence and
quasi-diagonalization constants, estimates the restricted-isometry constant
of a sampled system (exactly on small windows, by randomized support search
otherwise), evaluates sample-complexity rules, and bounds the contribution of
coefficients outside the reconstruction window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import SampledSystem, population_gram_matrix, uniform_bound_probe
from .weights import WeightVector

BRUTEFORCE_MAX_WINDOW = 16


class NumericalConsistencyError(RuntimeError):
    """A certified quantity failed its internal consistency check."""


@dataclass
class GramCertificate:
    """The window Gram square root and the constants measured around it."""

    G: np.ndarray
    normal: np.ndarray               # G^T G, the population normal matrix
    sigma_min: float
    sigma_max: float
    inv_norm: float
    quasi_diag: tuple                # (b, c_hat, C_hat)
    b_fit: float
    coherence_B: float
    d_exponents: np.ndarray          # measured per-scale normalizers d_j
    scale_coherence_max: np.ndarray  # per-scale max_n sup_t ||F_t phi|| / sqrt(f_nu)
    relative_coherence: float
    fbi_flag: bool
    scales: np.ndarray | None
    positions: np.ndarray
    n_quad: int
    sigma_min_shift: float | None = None

    @property
    def smoothing_exponent(self) -> float:
        return self.quasi_diag[0]


def _matrix_sqrt(normal: np.ndarray):
    evals, evecs = np.linalg.eigh(normal)
    if evals.min() < -1e-10:
        raise NumericalConsistencyError(
            f"population normal matrix has eigenvalue {evals.min():.3e} < -1e-10")
    fbi_flag = bool(evals.min() <= 0.0)
    evals = np.clip(evals, 0.0, None)
    G = (evecs * np.sqrt(evals)) @ evecs.T
    return G, evals, fbi_flag


def default_quadrature(model, positions) -> int:
    scales = model.scales()
    if scales is None:
        return model.dictionary_size() + 2
    top = int(scales[np.asarray(positions, int)].max())
    return max(64, 32 * 2 ** top)


def _decay_fit(scales, log2_sq_norms, fallback: float) -> float:
    """Fitted decay exponent of per-atom squared norms against the scale.

    The scaling layer (scale 0) carries a different generator and the finest
    scale is resolution-limited, so the regression runs over the interior
    wavelet scales whenever at least two of them exist."""
    sc = np.asarray(scales, float)
    top = sc.max()
    hi = top - 1 if top >= 3 else top
    mask = (sc >= 1) & (sc <= hi)
    if len(np.unique(sc[mask])) < 2:
        mask = sc >= 1
    if len(np.unique(sc[mask])) < 2:
        return fallback
    x = sc[mask]
    y = np.asarray(log2_sq_norms, float)[mask]
    xc = x - x.mean()
    return float(-0.5 * (xc @ (y - y.mean())) / (xc @ xc))


def scale_decay_fit(model, positions=None, n_angles: int = 64, offset: float = 0.0) -> float:
    """Decay exponent of angle-averaged squared measurement norms per atom,
    computed from per-atom norms only (no Gram matrix needed)."""
    if positions is None:
        positions = np.arange(model.dictionary_size())
    positions = np.asarray(positions, int)
    scales = model.scales()
    if scales is None:
        raise ValueError("scale decay needs a multiscale dictionary")
    nodes, wts = model.population_nodes(n_angles)
    avg = np.zeros(len(positions))
    for t, w in zip(nodes, wts):
        nr = model.atom_norms(positions, t)
        avg += w * nr * nr
    return _decay_fit(scales[positions], np.log2(np.maximum(avg, 1e-300)),
                      getattr(model, "smoothing_exponent", 0.0))


def _coherence_report(model, positions, nodes, scales, b, omega):
    """Per-scale coherence maxima and the measured bound constants."""
    positions = np.asarray(positions, int)
    if scales is None:
        sc = np.zeros(len(positions), dtype=int)
    else:
        sc = scales[positions]
    n_scales = int(sc.max()) + 1
    per_scale = np.zeros(n_scales)
    for t in nodes:
        nr = model.atom_norms(positions, t) / np.sqrt(model.density(t))
        for j in range(n_scales):
            sel = sc == j
            if sel.any():
                per_scale[j] = max(per_scale[j], float((nr[sel] / omega[sel]).max()))
    ref = per_scale[per_scale > 0].max()
    with np.errstate(divide="ignore"):
        d = np.where(per_scale > 0, ref / per_scale, 1.0)
    d = np.clip(d, 1.0, 2.0 ** (b * np.arange(n_scales)))
    B = float(max(1.0, (per_scale * d).max()))
    rel = float((B / d * 2.0 ** (b * np.arange(n_scales))).max())
    return per_scale, d, B, rel


def compute_gram(model, positions, n_quad: int | None = None,
                 omega: WeightVector | None = None,
                 check_convergence: bool = False,
                 quasi_diag_probes: int = 200, seed: int = 0) -> GramCertificate:
    """Population Gram square root over a dictionary window, with measured
    coherence and quasi-diagonalization constants.

    The Gram entries are parameter-space quadratures of measurement-space
    inner products; the square root comes from a symmetric eigendecomposition
    with eigenvalues in [-1e-10, 0] clamped to zero (flagging a restricted
    injectivity failure) and anything more negative treated as a quadrature
    inconsistency.
    """
    positions = np.asarray(positions, dtype=int)
    if n_quad is None:
        n_quad = default_quadrature(model, positions)
    normal = population_gram_matrix(model, positions, n_quad)
    G, evals, fbi_flag = _matrix_sqrt(normal)
    sigma_min = float(np.sqrt(evals.min()))
    sigma_max = float(np.sqrt(evals.max()))
    shift = None
    if check_convergence:
        normal2 = population_gram_matrix(model, positions, 2 * n_quad)
        s2 = float(np.sqrt(max(np.linalg.eigvalsh(normal2).min(), 0.0)))
        shift = abs(sigma_min - s2) / max(s2, 1e-300)
        if shift > 0.01:
            raise NumericalConsistencyError(
                f"sigma_min moved by {shift:.1%} when doubling the quadrature")
    scales = model.scales()
    b = getattr(model, "smoothing_exponent", 0.0)
    omega_v = np.ones(len(positions)) if omega is None else omega.values
    nodes, _ = model.population_nodes(min(n_quad, 64))
    per_scale, d_exp, B, rel = _coherence_report(model, positions, nodes, scales, b, omega_v)

    # quasi-diagonalization constants: ratios x^T normal x / sum 2^(-2bj) x^2
    sc = np.zeros(len(positions), dtype=int) if scales is None else scales[positions]
    wgt = 2.0 ** (-2.0 * b * sc)
    diag = np.diag(normal)
    ratios = list(diag / wgt)
    rng = np.random.default_rng(seed)
    for _ in range(quasi_diag_probes):
        x = rng.standard_normal(len(positions))
        ratios.append(float(x @ normal @ x) / float(wgt @ (x * x)))
    c_hat, C_hat = float(min(ratios)), float(max(ratios))

    # b_fit: per-atom regression of log2 ||F phi||^2 against the scale
    b_fit = b
    if scales is not None and sc.max() > sc.min():
        b_fit = _decay_fit(sc, np.log2(np.maximum(diag, 1e-300)), b)

    inv_norm = float("inf") if sigma_min == 0.0 else 1.0 / sigma_min
    return GramCertificate(
        G=G, normal=normal, sigma_min=sigma_min, sigma_max=sigma_max,
        inv_norm=inv_norm, quasi_diag=(b, c_hat, C_hat), b_fit=b_fit,
        coherence_B=B, d_exponents=d_exp, scale_coherence_max=per_scale,
        relative_coherence=rel, fbi_flag=fbi_flag, scales=scales,
        positions=positions, n_quad=n_quad, sigma_min_shift=shift)


def estimate_quasi_diag(model, positions=None, n_quad: int | None = None,
                        n_probes: int = 200, seed: int = 0):
    """(c_hat, C_hat, b_fit) measured over singletons and random probes."""
    if positions is None:
        positions = np.arange(model.dictionary_size())
    cert = compute_gram(model, positions, n_quad=n_quad,
                        quasi_diag_probes=n_probes, seed=seed)
    b, c_hat, C_hat = cert.quasi_diag
    return c_hat, C_hat, cert.b_fit


@dataclass
class RipEstimate:
    """Estimated restricted-isometry constant over weighted-sparse vectors."""

    lambda_budget: float
    delta_star: float
    method: str
    trials_or_supports: int
    samples_m: int

    def __post_init__(self):
        if self.delta_star < 0:
            raise ValueError("delta_star must be >= 0")


def _support_delta(M: np.ndarray, normal: np.ndarray, support) -> float:
    S = list(support)
    W = normal[np.ix_(S, S)]
    evals, evecs = np.linalg.eigh(W)
    evals = np.clip(evals, evals.max() * 1e-14, None)
    Wih = (evecs / np.sqrt(evals)) @ evecs.T
    sym = Wih @ M[np.ix_(S, S)] @ Wih
    sym = 0.5 * (sym + sym.T)
    return float(np.max(np.abs(np.linalg.eigvalsh(sym))))


def _difference_matrix(system: SampledSystem, cert: GramCertificate) -> np.ndarray:
    M = system.q_normal_matrix() - cert.normal
    return 0.5 * (M + M.T)


def delta_star_bruteforce(system: SampledSystem, cert: GramCertificate,
                          omega: WeightVector, lam: float) -> RipEstimate:
    """Exact restricted constant by enumeration of admissible supports.

    For each support S with weighted size <= lam, the extreme generalized
    eigenvalue of the normal-matrix difference against the window Gram gives
    the support's contribution; only supports maximal under the budget can
    attain the overall maximum.
    """
    n = system.matrix.shape[1]
    if n > BRUTEFORCE_MAX_WINDOW:
        raise ValueError(f"brute force limited to windows of {BRUTEFORCE_MAX_WINDOW}")
    wsq = omega.values ** 2
    if len(wsq) != n:
        raise ValueError("weight length does not match window")
    M = _difference_matrix(system, cert)
    best = 0.0
    count = 0
    for mask in range(1, 1 << n):
        S = [i for i in range(n) if mask >> i & 1]
        wS = wsq[S].sum()
        if wS > lam:
            continue
        # skip if extendable: some superset also fits the budget
        if any((mask >> i & 1) == 0 and wS + wsq[i] <= lam for i in range(n)):
            continue
        count += 1
        best = max(best, _support_delta(M, cert.normal, S))
    return RipEstimate(lambda_budget=float(lam), delta_star=best,
                       method="bruteforce", trials_or_supports=count,
                       samples_m=system.m)


def delta_star_montecarlo(system: SampledSystem, cert: GramCertificate,
                          omega: WeightVector, lam: float, trials: int,
                          seed: int = 0) -> RipEstimate:
    """Lower bound on the restricted constant from random admissible supports
    (random greedy filling until the weighted budget is exhausted)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = system.matrix.shape[1]
    wsq = omega.values ** 2
    M = _difference_matrix(system, cert)
    rng = np.random.default_rng(seed)
    seen = set()
    best = 0.0
    for _ in range(trials):
        order = rng.permutation(n)
        S = []
        budget = lam
        for i in order:
            if wsq[i] <= budget:
                S.append(int(i))
                budget -= wsq[i]
        if not S:
            continue
        key = frozenset(S)
        if key in seen:
            continue
        seen.add(key)
        best = max(best, _support_delta(M, cert.normal, S))
    return RipEstimate(lambda_budget=float(lam), delta_star=best,
                       method="montecarlo", trials_or_supports=trials,
                       samples_m=system.m)


def sample_complexity(cert: GramCertificate, s: float, M: int, gamma: float,
                      variant: str, C0: float = 1.0, zeta: float = 1.0,
                      j0: int | None = None,
                      omega: WeightVector | None = None) -> int:
    """Number of samples prescribed by one of the supported sample-count
    rules, with all measured constants taken from the certificate and the
    universal constant supplied as configuration.

    conditioning:        worst-case rule through the window conditioning,
                         tau = B^2 ||G^-1||^4 ||G||^2 s
    relative_coherence:  reweighted rule through the measured per-scale decay,
                         tau = B^2 max(d_j^-2 4^(b j)) 4^((1-zeta) b j0) s
    window:              tomographic shortcut tau = 2^j0 s with the extra
                         window factor in the log term
    sparsity:            fully reweighted tomographic rule, linear in s
    """
    if omega is not None and s < max(2.0, float(np.max(omega.values) ** 2) / 4.0):
        raise ValueError(f"s={s} below max(2, ||omega||_inf^2 / 4)")
    if s < 2 or s > M:
        raise ValueError(f"s={s} outside [2, M={M}]")
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    b = cert.smoothing_exponent
    if j0 is None:
        sc = cert.scales
        j0 = 0 if sc is None else int(sc[cert.positions].max())
    log_gamma = np.log(1.0 / gamma)
    if variant == "conditioning":
        tau = cert.coherence_B ** 2 * cert.inv_norm ** 4 * cert.sigma_max ** 2 * s
        m = C0 * tau * max(np.log(tau) ** 3 * np.log(M), log_gamma)
    elif variant == "relative_coherence":
        js = np.arange(len(cert.d_exponents))
        maxfac = float(np.max(cert.d_exponents ** -2.0 * 2.0 ** (2.0 * b * js)))
        tau = cert.coherence_B ** 2 * maxfac * 2.0 ** (2.0 * (1.0 - zeta) * b * j0) * s
        m = C0 * tau * max(np.log(tau) ** 3 * np.log(M), log_gamma)
    elif variant == "window":
        tau = 2.0 ** j0 * s
        m = C0 * tau * max(j0 * np.log(tau) ** 3, log_gamma)
    elif variant == "sparsity":
        m = C0 * s * max(j0 * np.log(s) ** 3, log_gamma)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return int(np.ceil(m))


@dataclass
class TruncationReport:
    residual: float        # measured ||Q A P_window^perp x||
    bound: float           # measured-constant side of the comparison
    tail_norm: float       # r = ||P_window^perp x||_2
    tail_opnorm: float     # operator norm of the forward map on the stored tail
    tail_truncated: bool   # the tail only covers scales up to the atlas j_max


def truncation_residual(system: SampledSystem, model, x_full,
                        cert: GramCertificate | None = None,
                        c_uniform: float | None = None) -> TruncationReport:
    """Measured energy the sampled operator picks up from coefficients outside
    the reconstruction window, against the certificate-side bound.

    The out-of-window operator norm is itself truncated at the dictionary's
    finest built scale, which is flagged in the report.
    """
    x_full = np.asarray(x_full, float)
    window = set(int(i) for i in system.positions)
    tail = np.array([i for i in range(len(x_full)) if i not in window], dtype=int)
    x_tail = x_full[tail]
    r = float(np.linalg.norm(x_tail))
    scale = np.sqrt(model.quad_weight / system.m)
    blocks = []
    supp = tail[np.flatnonzero(x_tail)]
    for t, q in zip(system.samples, system.q_weights):
        if len(supp):
            yk = model.rows(supp, t).T @ x_full[supp]
        else:
            yk = np.zeros(model.block_dim)
        blocks.append(q * scale * yk)
    residual = float(np.linalg.norm(np.concatenate(blocks))) if blocks else 0.0
    if cert is None:
        bound = float("nan")
        g2inv = float("nan")
    else:
        g2inv = cert.inv_norm
    tail_opnorm = 0.0
    if len(tail):
        tail_normal = population_gram_matrix(model, tail, default_quadrature(model, tail))
        tail_opnorm = float(np.sqrt(max(np.linalg.eigvalsh(tail_normal).max(), 0.0)))
    if cert is not None:
        cF = c_uniform if c_uniform is not None else uniform_bound_probe(model, system.positions)
        bound = cF * model.c_nu ** -0.5 * (tail_opnorm * g2inv + 1.0) * r
    return TruncationReport(residual=residual, bound=bound, tail_norm=r,
                            tail_opnorm=tail_opnorm, tail_truncated=True)


def rnsp_witness_search(system: SampledSystem, cert: GramCertificate,
                        omega: WeightVector, s: float, rho: float = 0.5,
                        kappa: float | None = None, n_trials: int = 10000,
                        seed: int = 0) -> float:
    """Randomized search for violations of the robust null-space inequality.

    Returns the worst margin (right side minus left side) over random
    (vector, support) pairs; a nonnegative value means no violation found.
    """
    n = system.matrix.shape[1]
    if kappa is None:
        kappa = 3.0 * cert.inv_norm / np.sqrt(2.0)
    rng = np.random.default_rng(seed)
    wsq = omega.values ** 2
    qa = system.apply_q(system.matrix)
    worst = np.inf
    for _ in range(n_trials):
        x = rng.standard_normal(n)
        if rng.random() < 0.5:
            k = rng.integers(1, n + 1)
            x[rng.choice(n, size=n - k, replace=False)] = 0.0
        order = rng.permutation(n)
        S = []
        budget = s
        for i in order:
            if wsq[i] <= budget:
                S.append(int(i))
                budget -= wsq[i]
            if budget <= 0:
                break
        mask = np.zeros(n, dtype=bool)
        if S:
            mask[S] = True
        lhs = float(np.linalg.norm(x[mask]))
        tail1 = float(np.sum(np.abs(x[~mask]) * omega.values[~mask]))
        rhs = rho / np.sqrt(s) * tail1 + kappa * float(np.linalg.norm(qa @ x))
        worst = min(worst, rhs - lhs)
    return float(worst)
