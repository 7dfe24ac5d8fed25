"""Measurement models and sampled systems.

Four concrete models share one interface: parallel-beam line integrals at an
angle, fan-beam line integrals from a source on a circle, Fourier
coefficients of periodized 1D wavelets, and pointwise evaluation of
orthonormal Legendre polynomials.  Each model knows its dictionary, its
sampling density, and how to produce the measurement block of a batch of
dictionary elements at one parameter value; systems of random samples are
assembled into a stacked matrix with quadrature weights folded in, so plain
Euclidean norms of stacked vectors equal the (1/m)-averaged measurement-space
norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .wavelets import (AtomIndex, DictionaryAtlas, WaveletFilter, dilation,
                       truncation_positions, _cascade)


class GeometryError(ValueError):
    """Measurement geometry cannot accommodate the dictionary."""


# ---------------------------------------------------------------------------
# parallel beam


def _convolved_base_row(fx, fy, c, s, h, out_grid):
    """Line-integral profile of the separable bump f_x (x) f_y along direction
    angle with cos c / sin s, evaluated on out_grid.

    Writes the integral as a 1D convolution of the two stretched factors and
    evaluates it by sampling the wider factor at the narrower factor's cell
    midpoints, weighted by the narrow factor's trapezoid cell masses.  The
    degenerate near-axis case (one stretch collapsing to a point mass) needs
    no special handling under this scheme.
    """
    wx = (len(fx) - 1) * h
    wy = (len(fy) - 1) * h
    if abs(c) * wx >= abs(s) * wy:
        wide, aw, nar, an = fx, c, fy, s
    else:
        wide, aw, nar, an = fy, s, fx, c
    masses = 0.5 * h * (nar[:-1] + nar[1:])
    centers = an * h * (np.arange(len(nar) - 1) + 0.5)
    P = (out_grid[:, None] - centers[None, :]) / aw
    V = np.interp(P, np.arange(len(wide)) * h, wide, left=0.0, right=0.0)
    return (V * masses[None, :]).sum(axis=1) / abs(aw)


class RadonModel:
    """Line-integral measurements of atlas atoms at angles in [0, 2pi).

    The angle distribution is uniform (density identically 1 against the
    uniform probability measure), the per-angle measurement space is the
    s-offset grid with trapezoid weight s_step.
    """

    kind = "radon"
    smoothing_exponent = 0.5

    def __init__(self, atlas: DictionaryAtlas, s_step: float | None = None, s_pad: float = 0.05):
        self.atlas = atlas
        self.s_step = atlas.grid.h if s_step is None else float(s_step)
        smax = atlas.support_radius + s_pad
        n = int(np.ceil(smax / self.s_step))
        self.s_grid = self.s_step * np.arange(-n, n + 1)
        self.c_nu = 1.0

    # -- density / sampling -------------------------------------------------
    def density(self, t):
        return np.ones_like(np.asarray(t, float))

    def density_integral(self) -> float:
        return 1.0

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2.0 * np.pi, m)

    def population_nodes(self, n: int):
        """Quadrature nodes and weights for integrals against the uniform
        probability measure on [0, 2pi)."""
        return 2.0 * np.pi * np.arange(n) / n, np.full(n, 1.0 / n)

    # -- measurement geometry ------------------------------------------------
    @property
    def block_dim(self) -> int:
        return len(self.s_grid)

    @property
    def quad_weight(self) -> float:
        return self.s_step

    def dictionary_size(self) -> int:
        return len(self.atlas)

    def labels(self):
        return self.atlas.gamma

    def scales(self) -> np.ndarray:
        return self.atlas.scales

    # -- rows ---------------------------------------------------------------
    def _group_base(self, scale: int, orientation: int, theta: float, fine_step: float):
        c, s = np.cos(theta), np.sin(theta)
        kx, ky = self.atlas.profile_kinds(orientation)
        fx = self.atlas.profile(scale, kx)
        fy = self.atlas.profile(scale, ky)
        h = self.atlas.grid.h
        w = self.atlas.filter.support_length / dilation(scale)
        lo = min(0.0, w * c) + min(0.0, w * s)
        hi = max(0.0, w * c) + max(0.0, w * s)
        grid = np.arange(lo - fine_step, hi + 2.0 * fine_step, fine_step)
        return grid, _convolved_base_row(fx, fy, c, s, h, grid)

    def rows(self, positions, theta: float) -> np.ndarray:
        """Measurement rows (len(positions), block_dim) of atlas atoms.

        Atoms of one (scale, orientation) group share a single base profile;
        each atom's row is that profile resampled at its own offset shift.
        """
        positions = np.asarray(positions, dtype=int)
        out = np.zeros((len(positions), self.block_dim))
        c, s = np.cos(theta), np.sin(theta)
        groups: dict = {}
        for row_i, pos in enumerate(positions):
            a = self.atlas.gamma[pos]
            groups.setdefault((a.scale, a.orientation), []).append((row_i, a.n1, a.n2))
        fine = self.s_step / 2.0
        for (scale, orient), members in groups.items():
            grid, base = self._group_base(scale, orient, theta, fine)
            d = dilation(scale)
            mem = np.asarray(members)
            shifts = (mem[:, 1] * c + mem[:, 2] * s) / d
            P = self.s_grid[None, :] - shifts[:, None]
            out[mem[:, 0]] = np.interp(P, grid, base, left=0.0, right=0.0)
        return out

    def atom_row(self, idx: AtomIndex, theta: float) -> np.ndarray:
        return self.rows([self.atlas.index_position(idx)], theta)[0]

    def atom_norms(self, positions, theta: float) -> np.ndarray:
        """Per-atom measurement norms at one angle, from the group profiles
        directly (rows of one group are offset copies of the same profile)."""
        positions = np.asarray(positions, dtype=int)
        out = np.empty(len(positions))
        cache: dict = {}
        fine = self.s_step / 2.0
        for row_i, pos in enumerate(positions):
            a = self.atlas.gamma[pos]
            key = (a.scale, a.orientation)
            if key not in cache:
                grid, base = self._group_base(a.scale, a.orientation, theta, fine)
                cache[key] = float(np.sqrt(np.sum(base * base) * fine))
            out[row_i] = cache[key]
        return out


def radon_image(image: np.ndarray, grid, theta: float, s_grid: np.ndarray,
                step: float | None = None) -> np.ndarray:
    """Line integrals of a pixel image: bilinear interpolation along rotated
    equispaced sample points at step h/2, summed with the step weight."""
    image = np.asarray(image, float)
    h = grid.h
    step = h / 2.0 if step is None else step
    c, s = np.cos(theta), np.sin(theta)
    half = grid.extent[1] * np.sqrt(2.0) + h
    ts = np.arange(-half, half + step, step)
    X = s_grid[:, None] * c - ts[None, :] * s
    Y = s_grid[:, None] * s + ts[None, :] * c
    gx = (X - grid.x0) / h
    gy = (Y - grid.x0) / h
    i0 = np.floor(gx).astype(int)
    j0 = np.floor(gy).astype(int)
    fx = gx - i0
    fy = gy - j0
    n = grid.npts
    valid = (i0 >= 0) & (i0 < n - 1) & (j0 >= 0) & (j0 < n - 1)
    i0c = np.clip(i0, 0, n - 2)
    j0c = np.clip(j0, 0, n - 2)
    v = (image[j0c, i0c] * (1 - fx) * (1 - fy)
         + image[j0c, i0c + 1] * fx * (1 - fy)
         + image[j0c + 1, i0c] * (1 - fx) * fy
         + image[j0c + 1, i0c + 1] * fx * fy)
    v = np.where(valid, v, 0.0)
    return v.sum(axis=1) * step


# ---------------------------------------------------------------------------
# fan beam


class FanBeamModel:
    """Line integrals along rays from a source at distance rho, one source
    angle per sample, measured over the ray-angle grid on (-pi/2, pi/2).

    The support of every dictionary atom must fit inside the ball of radius
    d < rho.  Defaults put the source at rho = 3 and take d just large enough
    to contain the dictionary.
    """

    kind = "fanbeam"
    smoothing_exponent = 0.5

    def __init__(self, atlas: DictionaryAtlas, rho: float = 3.0, d: float | None = None,
                 alpha_step: float | None = None):
        self.atlas = atlas
        self.rho = float(rho)
        self.d = atlas.support_radius * (1.0 + 1e-9) if d is None else float(d)
        if not (0.0 < self.d < self.rho):
            raise GeometryError(f"need 0 < d < rho, got d={self.d}, rho={self.rho}")
        if atlas.support_radius > self.d + 1e-12:
            raise GeometryError(
                f"atlas atoms reach radius {atlas.support_radius:.4f} > d={self.d}")
        self.alpha_step = (atlas.grid.h / self.rho) if alpha_step is None else float(alpha_step)
        n = int(np.ceil((np.pi / 2.0) / self.alpha_step))
        self.alpha_grid = self.alpha_step * np.arange(-n, n + 1)
        self.c_nu = 1.0

    def density(self, t):
        return np.ones_like(np.asarray(t, float))

    def density_integral(self) -> float:
        return 1.0

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2.0 * np.pi, m)

    def population_nodes(self, n: int):
        return 2.0 * np.pi * np.arange(n) / n, np.full(n, 1.0 / n)

    @property
    def block_dim(self) -> int:
        return len(self.alpha_grid)

    @property
    def quad_weight(self) -> float:
        return self.alpha_step

    def dictionary_size(self) -> int:
        return len(self.atlas)

    def labels(self):
        return self.atlas.gamma

    def scales(self) -> np.ndarray:
        return self.atlas.scales

    def rows(self, positions, theta: float) -> np.ndarray:
        """Ray integrals per atom: for each ray angle hitting the atom's
        bounding box, sample the separable atom along the ray at step h/2."""
        positions = np.asarray(positions, dtype=int)
        out = np.zeros((len(positions), self.block_dim))
        src = self.rho * np.array([np.cos(theta), np.sin(theta)])
        h = self.atlas.grid.h
        step = h / 2.0
        for row_i, pos in enumerate(positions):
            a = self.atlas.gamma[pos]
            (x_lo, x_hi), (y_lo, y_hi) = self.atlas.support_box(a)
            cx, cy = 0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)
            rad = 0.5 * np.hypot(x_hi - x_lo, y_hi - y_lo)
            to_c = np.array([cx, cy]) - src
            dist = np.linalg.norm(to_c)
            phi_abs = np.arctan2(to_c[1], to_c[0])
            # the atom sits at negative ray parameter, so the ray angles that
            # meet it cluster around the direction opposite to source->atom
            alpha_c = (phi_abs - theta - np.pi + np.pi) % (2.0 * np.pi) - np.pi
            half = np.arcsin(min(1.0, rad / dist)) + self.alpha_step
            sel = np.flatnonzero(np.abs(self.alpha_grid - alpha_c) <= half)
            if len(sel) == 0:
                continue
            alphas = self.alpha_grid[sel]
            dirs = np.stack([np.cos(theta + alphas), np.sin(theta + alphas)], axis=1)
            t_mid = dist * np.cos(phi_abs - theta - alphas)
            ts = np.arange(-rad - step, rad + 2 * step, step)
            Px = src[0] + dirs[:, 0:1] * (t_mid[:, None] + ts[None, :])
            Py = src[1] + dirs[:, 1:2] * (t_mid[:, None] + ts[None, :])
            fx, fy, _, _ = self.atlas.atom_profiles(a)
            vx = np.interp(Px - x_lo, np.arange(len(fx)) * h, fx, left=0.0, right=0.0)
            vy = np.interp(Py - y_lo, np.arange(len(fy)) * h, fy, left=0.0, right=0.0)
            out[row_i, sel] = (vx * vy).sum(axis=1) * step
        return out

    def atom_row(self, idx: AtomIndex, theta: float) -> np.ndarray:
        return self.rows([self.atlas.index_position(idx)], theta)[0]

    def atom_norms(self, positions, theta: float) -> np.ndarray:
        R = self.rows(positions, theta)
        return np.sqrt((R * R).sum(axis=1) * self.quad_weight)


# ---------------------------------------------------------------------------
# periodic Fourier sampling of 1D wavelets


@dataclass(frozen=True, order=True)
class PeriodicAtomIndex:
    """Label (scale, translation, kind) of a periodized 1D atom; kind 0 is the
    scaling layer (scale 0 only), kind 1 the wavelet layers."""

    scale: int
    n: int
    kind: int


class FourierWaveletModel:
    """Fourier coefficients of periodized compactly supported 1D wavelets.

    The dictionary lives on the unit circle; measurements are the integer
    Fourier coefficients within a bandwidth N, sampled with density
    proportional to 1/|t| (and the measurement space is C identified with
    R^2).
    """

    kind = "fourier_wavelet"
    smoothing_exponent = 0.0

    def __init__(self, filt: WaveletFilter, j_max: int, n_freq: int | None = None,
                 grid_level: int | None = None):
        self.filter = filt
        self.j_max = int(j_max)
        self.n_freq = int(2 ** (j_max + 3)) if n_freq is None else int(n_freq)
        K = j_max + 3 if grid_level is None else grid_level
        # the rasterization grid must comfortably exceed the bandwidth, or the
        # tabulated coefficients alias
        K_min = int(np.ceil(np.log2(4 * self.n_freq)))
        self.n_grid = 2 ** max(K, j_max + 3, K_min)
        self._labels: list[PeriodicAtomIndex] = []
        self._samples = {}
        self._build_atoms()
        ts = np.arange(1, self.n_freq + 1)
        self.c_norm = 1.0 + 2.0 * np.sum(1.0 / ts)
        self.freqs = np.concatenate([[0], np.stack([ts, -ts], 1).ravel()])
        self._fhat = None
        self.c_nu = 1.0 / (self.n_freq * self.c_norm)

    def _build_atoms(self):
        h = 1.0 / self.n_grid
        for j in range(self.j_max + 1):
            d = dilation(j)
            level = int(round(np.log2(self.n_grid / d)))
            chi, psi = _cascade(self.filter, level)
            # scale 0 is the scaling layer; scales >= 1 the wavelet layers
            for kind, arr in (((0, chi),) if j == 0 else ((1, psi),)):
                base = np.zeros(self.n_grid)
                samples = arr[:-1] * np.sqrt(d)  # drop duplicated right endpoint
                for k in range(len(samples)):
                    base[k % self.n_grid] += samples[k]
                base = base / np.sqrt(h * np.sum(base * base))
                self._samples[(j, kind)] = base
                for n in range(d):
                    self._labels.append(PeriodicAtomIndex(scale=j, n=n, kind=kind))

    def labels(self):
        return self._labels

    def dictionary_size(self) -> int:
        return len(self._labels)

    def scales(self) -> np.ndarray:
        return np.array([a.scale for a in self._labels])

    def atom_samples(self, idx: PeriodicAtomIndex) -> np.ndarray:
        base = self._samples[(idx.scale, idx.kind)]
        d = dilation(idx.scale)
        return np.roll(base, idx.n * self.n_grid // d)

    def _coefficient_table(self) -> np.ndarray:
        """(n_atoms, n_freq_grid) table of DFT coefficients, cached."""
        if self._fhat is None:
            S = np.stack([self.atom_samples(a) for a in self._labels])
            self._fhat = np.fft.fft(S, axis=1) / self.n_grid
        return self._fhat

    def fourier_row(self, t: int, position: int) -> complex:
        """The t-th Fourier coefficient of one dictionary atom (quadrature DFT)."""
        if abs(t) > self.n_freq:
            raise ValueError(f"|t|={abs(t)} exceeds bandwidth N={self.n_freq}")
        return complex(self._coefficient_table()[position, int(t) % self.n_grid])

    def density(self, t):
        t = np.asarray(t)
        denom = np.where(t == 0, 1.0, np.abs(t))
        return 1.0 / (denom * self.c_norm)

    def density_integral(self) -> float:
        return float(np.sum(self.density(self.freqs)))

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        p = self.density(self.freqs)
        return self.freqs[rng.choice(len(self.freqs), size=m, p=p / p.sum())]

    def population_nodes(self, n: int = 0):
        # counting measure over the bandwidth; n is ignored
        return self.freqs.astype(float), np.ones(len(self.freqs))

    @property
    def block_dim(self) -> int:
        return 2

    @property
    def quad_weight(self) -> float:
        return 1.0

    def rows(self, positions, t) -> np.ndarray:
        tab = self._coefficient_table()
        vals = tab[np.asarray(positions, int), int(round(float(t))) % self.n_grid]
        return np.stack([vals.real, vals.imag], axis=1)

    def atom_norms(self, positions, t) -> np.ndarray:
        R = self.rows(positions, t)
        return np.sqrt((R * R).sum(axis=1))


# ---------------------------------------------------------------------------
# pointwise sampling of orthonormal Legendre polynomials


class LegendrePointModel:
    """Pointwise evaluation of polynomials orthonormal under the uniform
    probability measure on [-1, 1]; degree index i = 1.. has sup-norm
    sqrt(2i - 1), which is also the natural weight vector."""

    kind = "legendre_point"
    smoothing_exponent = 0.0

    def __init__(self, max_degree: int):
        self.max_degree = int(max_degree)
        self.c_nu = 1.0

    def labels(self):
        return list(range(1, self.max_degree + 2))

    def dictionary_size(self) -> int:
        return self.max_degree + 1

    def scales(self) -> None:
        return None

    def natural_weights(self) -> np.ndarray:
        i = np.arange(1, self.max_degree + 2)
        return np.sqrt(2.0 * i - 1.0)

    def evaluate(self, t, max_index: int | None = None) -> np.ndarray:
        """Values p_i(t), i = 1..max_index, via the three-term recurrence of
        the classical polynomials, normalized to unit L2(w) norm."""
        if np.any(np.asarray(t) < -1.0) or np.any(np.asarray(t) > 1.0):
            raise ValueError("evaluation points must lie in [-1, 1]")
        m = self.max_degree + 1 if max_index is None else max_index
        t = np.atleast_1d(np.asarray(t, float))
        P = np.empty((m, len(t)))
        P[0] = 1.0
        if m > 1:
            P[1] = t
        for k in range(1, m - 1):
            P[k + 1] = ((2 * k + 1) * t * P[k] - k * P[k - 1]) / (k + 1)
        norm = np.sqrt(2.0 * np.arange(1, m + 1) - 1.0)
        return P * norm[:, None]

    def density(self, t):
        return np.ones_like(np.asarray(t, float))

    def density_integral(self) -> float:
        return 1.0

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, m)

    def population_nodes(self, n: int):
        x, w = np.polynomial.legendre.leggauss(max(n, self.max_degree + 2))
        return x, w / 2.0

    @property
    def block_dim(self) -> int:
        return 1

    @property
    def quad_weight(self) -> float:
        return 1.0

    def rows(self, positions, t) -> np.ndarray:
        vals = self.evaluate(float(t))[:, 0]
        return vals[np.asarray(positions, int)][:, None]

    def atom_norms(self, positions, t) -> np.ndarray:
        return np.abs(self.rows(positions, t))[:, 0]


# ---------------------------------------------------------------------------
# synthetic model with an exactly diagonal normal operator


class SyntheticDiagonalModel:
    """Abstract dictionary whose forward map acts diagonally: the i-th element
    measures as 2^(-b j_i) sqrt(2) cos((i+1) t), a bounded orthonormal family
    under the uniform angle distribution.  The population normal matrix is
    exactly diag(4^(-b j_i)); sampled systems still fluctuate, which makes the
    model a useful ground truth for restricted-isometry estimators."""

    kind = "synthetic_diagonal"

    def __init__(self, scale_list, b: float = 0.5):
        self._scales = np.asarray(scale_list, dtype=int)
        self.smoothing_exponent = float(b)
        self.c_nu = 1.0

    def labels(self):
        return list(range(len(self._scales)))

    def dictionary_size(self) -> int:
        return len(self._scales)

    def scales(self) -> np.ndarray:
        return self._scales

    def density(self, t):
        return np.ones_like(np.asarray(t, float))

    def density_integral(self) -> float:
        return 1.0

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2.0 * np.pi, m)

    def population_nodes(self, n: int):
        n = max(n, 2 * (len(self._scales) + 2))  # exact for these harmonics
        return 2.0 * np.pi * np.arange(n) / n, np.full(n, 1.0 / n)

    @property
    def block_dim(self) -> int:
        return 1

    @property
    def quad_weight(self) -> float:
        return 1.0

    def rows(self, positions, t) -> np.ndarray:
        positions = np.asarray(positions, int)
        amp = 2.0 ** (-self.smoothing_exponent * self._scales[positions])
        return (amp * np.sqrt(2.0) * np.cos((positions + 1) * float(t)))[:, None]

    def atom_norms(self, positions, t) -> np.ndarray:
        return np.abs(self.rows(positions, t))[:, 0]


# ---------------------------------------------------------------------------
# sampling and assembly


def draw_samples(model, m: int, seed: int) -> np.ndarray:
    """m i.i.d. draws from the model's sampling distribution, deterministic
    in the seed."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return model.sample(m, np.random.default_rng(seed))


@dataclass
class SampledSystem:
    """A drained measurement setup: samples, the stacked sampling matrix with
    1/sqrt(m) and quadrature weights folded in, per-sample density weights,
    and the stacked (equally weighted) measurement vector."""

    model: object
    positions: np.ndarray          # dictionary positions forming the window
    samples: np.ndarray
    matrix: np.ndarray             # (m * block_dim, len(positions))
    q_weights: np.ndarray          # f_nu(t_k)^(-1/2), one per sample
    y: np.ndarray                  # stacked measurements, same scaling as matrix rows
    noise_bound: float
    tail_residual: float = 0.0     # ||A applied to the out-of-window part of the signal||
    block_dim: int = field(init=False)

    def __post_init__(self):
        self.block_dim = self.matrix.shape[0] // len(self.samples)

    @property
    def m(self) -> int:
        return len(self.samples)

    def normal_matrix(self) -> np.ndarray:
        return self.matrix.T @ self.matrix

    def q_normal_matrix(self) -> np.ndarray:
        """Normal matrix of the density-normalized sampling operator."""
        qa = self.apply_q(self.matrix)
        return qa.T @ qa

    def apply_q(self, stacked: np.ndarray) -> np.ndarray:
        out = stacked.reshape(self.m, self.block_dim, -1) * self.q_weights[:, None, None]
        return out.reshape(stacked.shape)

    def residual_norm(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.matrix @ x - self.y))


def assemble_system(model, positions, samples, x_full=None, beta: float = 0.0,
                    noise_seed: int = 0, y_extra: np.ndarray | None = None) -> SampledSystem:
    """Stack per-sample measurement blocks into a SampledSystem.

    x_full holds coefficients over the model's whole dictionary (any part
    outside `positions` contributes to the data but not to the matrix).
    Noise draws one Gaussian block per sample, rescaled so each block has
    measurement-space norm exactly beta.  y_extra, when given, is a stacked
    contribution added to the data (already in measurement-space units, one
    block per sample), used to inject measurements of signals that live
    outside the dictionary window.
    """
    positions = np.asarray(positions, dtype=int)
    samples = np.asarray(samples, dtype=float)
    m = len(samples)
    if beta < 0:
        raise ValueError("noise bound must be >= 0")
    scale = np.sqrt(model.quad_weight / m)
    full = None
    if x_full is not None:
        full = np.asarray(x_full, float)
        supp = np.flatnonzero(full)
    rng = np.random.default_rng(noise_seed)
    # one row computation per sample covers both the window matrix and the
    # data contribution of the (possibly larger) signal support
    if full is not None and len(supp):
        union = np.union1d(positions, supp)
        w_idx = np.searchsorted(union, positions)
        s_idx = np.searchsorted(union, supp)
    else:
        union = positions
        w_idx = np.arange(len(positions))
        s_idx = np.array([], dtype=int)
    blocks = []
    clean = []
    noise = []
    for k, t in enumerate(samples):
        R = model.rows(union, t)                      # (n_union, block_dim)
        blocks.append(R[w_idx].T * scale)
        yk = np.zeros(model.block_dim)
        if len(s_idx):
            yk = R[s_idx].T @ full[supp]
        clean.append(yk * scale)
        if beta > 0:
            g = rng.standard_normal(model.block_dim)
            g *= beta / (np.linalg.norm(g) * np.sqrt(model.quad_weight))
            noise.append(g * scale)
    A = np.vstack(blocks)
    y = np.concatenate(clean)
    tail_res = 0.0
    if full is not None:
        tail_res = float(np.linalg.norm(y - A @ full[positions]))
    if noise:
        y = y + np.concatenate(noise)
    if y_extra is not None:
        y = y + y_extra
    q = 1.0 / np.sqrt(model.density(samples))
    return SampledSystem(model=model, positions=positions, samples=samples,
                         matrix=A, q_weights=np.asarray(q, float), y=y,
                         noise_bound=float(beta), tail_residual=tail_res)


def population_gram_matrix(model, positions, n_quad: int) -> np.ndarray:
    """The normal operator <F phi_i, F phi_j> over the measurement family,
    by quadrature over the parameter space."""
    positions = np.asarray(positions, dtype=int)
    nodes, wts = model.population_nodes(n_quad)
    n = len(positions)
    G = np.zeros((n, n))
    for t, w in zip(nodes, wts):
        R = model.rows(positions, t)
        G += w * model.quad_weight * (R @ R.T)
    return G


def uniform_bound_probe(model, positions, n_angles: int = 64, seed: int = 0) -> float:
    """Measured uniform bound: max over random parameters and window atoms of
    the per-atom measurement norm (atom norms are 1)."""
    rng = np.random.default_rng(seed)
    ts = model.sample(n_angles, rng)
    best = 0.0
    for t in ts:
        best = max(best, float(model.atom_norms(positions, t).max()))
    return best
