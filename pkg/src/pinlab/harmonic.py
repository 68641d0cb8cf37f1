"""Desk-scale checks of the harmonic-analysis inputs.

Covers the dyadic frequency partition, sphere-measure Fourier decay, the
fractal energy integral in both Fourier and kernel form (with the classical
Riesz-kernel constant), the Schur-test kernel bound, the mollified averaging
operator with its Sobolev ratios, and the separated-frequency oscillatory
integral.

Grid conventions: fields live on [0,1)^d sampled at idx/n, treated
periodically; `hat` returns Fourier coefficients (forward FFT / n^d), so
discrete Parseval reads mean |f|^2 = sum |f_hat|^2.  Measure arrays (mass per
cell) transform without normalization, so the zero mode is the total mass.
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError, ResolutionError
from .fractals import FrostmanMeasure
from .pinned import Mollifier
from .profiles import smooth_step
from .rng import rng_for


class ResolutionWarning(UserWarning):
    """A requested frequency is beyond what the quadrature resolves."""


# -- spectral grid ----------------------------------------------------------

@dataclass
class SpectralGrid:
    """Complex field on the periodic grid idx/side_n in [0,1)^d."""

    dimension_d: int
    side_n: int
    values: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray) -> "SpectralGrid":
        values = np.asarray(values)
        return cls(values.ndim, values.shape[0], values.astype(complex))

    def hat(self) -> np.ndarray:
        return np.fft.fftn(self.values) / self.side_n ** self.dimension_d

    @classmethod
    def from_hat(cls, hat: np.ndarray) -> "SpectralGrid":
        n = hat.shape[0]
        vals = np.fft.ifftn(hat) * n ** hat.ndim
        return cls(hat.ndim, n, vals)

    def freq_norms(self) -> np.ndarray:
        axes = [np.fft.fftfreq(self.side_n) * self.side_n] * self.dimension_d
        grids = np.meshgrid(*axes, indexing="ij")
        return np.sqrt(sum(g ** 2 for g in grids))

    def roundtrip_error(self) -> float:
        back = SpectralGrid.from_hat(self.hat()).values
        scale = max(float(np.abs(self.values).max()), 1e-300)
        return float(np.abs(back - self.values).max()) / scale

    def parseval_error(self) -> float:
        phys = float(np.mean(np.abs(self.values) ** 2))
        spec = float(np.sum(np.abs(self.hat()) ** 2))
        return abs(phys - spec) / max(phys, 1e-300)


def l2_norm(field: np.ndarray) -> float:
    """L2(dx) norm on the unit box."""
    return float(np.sqrt(np.mean(np.abs(field) ** 2)))


def sobolev_norm(field: np.ndarray, gamma: float) -> float:
    """H^gamma norm via the weight (1 + |xi|^2)^(gamma/2)."""
    g = SpectralGrid.from_values(field)
    w = (1.0 + g.freq_norms() ** 2) ** (gamma / 2.0)
    return float(np.sqrt(np.sum((w * np.abs(g.hat())) ** 2)))


def random_band_limited(side_n: int, band: float, seed: int, d: int = 2) -> np.ndarray:
    """Real unit-L2-norm field with flat random spectrum supported in |xi| <= band."""
    rng = rng_for(seed, 8)
    shape = (side_n,) * d
    hat = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    g = SpectralGrid(d, side_n, np.zeros(shape, complex))
    hat[g.freq_norms() > band] = 0.0
    field = np.real(np.fft.ifftn(hat) * side_n ** d)
    return field / l2_norm(field)


# -- Littlewood-Paley partition ---------------------------------------------

@dataclass(frozen=True)
class LPPartition:
    """alpha_0 + sum_{j=1..j_max} alpha(2^-j xi) telescopes to 1.

    chi(r) steps from 1 (r <= 1) to 0 (r >= 2); alpha0(xi) = chi(|xi|/2) is
    supported in |xi| < 4 and the band profile alpha(xi) = chi(|xi|/2) -
    chi(|xi|) in the annulus 1 <= |xi| <= 4, inside the stated 1/2 <= |xi| <= 4.
    The sum equals chi(2^-(j_max+1) |xi|), identically 1 for |xi| <= 2^(j_max+1).
    """

    j_max: int

    @staticmethod
    def chi(r):
        return 1.0 - smooth_step(np.asarray(r, float) - 1.0)

    def alpha0(self, xi_norm):
        return self.chi(np.asarray(xi_norm, float) / 2.0)

    def alpha(self, xi_norm):
        r = np.asarray(xi_norm, float)
        return self.chi(r / 2.0) - self.chi(r)

    def band_profile(self, xi_norm, j: int):
        if not (0 <= j <= self.j_max):
            raise DomainError(f"band {j} outside 0..{self.j_max}")
        if j == 0:
            return self.alpha0(xi_norm)
        return self.alpha(np.asarray(xi_norm, float) / 2.0 ** j)

    def partition_sum(self, xi_norm):
        total = self.alpha0(xi_norm)
        for j in range(1, self.j_max + 1):
            total = total + self.alpha(np.asarray(xi_norm, float) / 2.0 ** j)
        return total


def lp_project(field: np.ndarray, partition: LPPartition, j: int) -> np.ndarray:
    """Frequency-side multiplier application of band j (0 = low band)."""
    g = SpectralGrid.from_values(field)
    mult = partition.band_profile(g.freq_norms(), j)
    out = np.fft.ifftn(mult * np.fft.fftn(g.values))
    if np.isrealobj(field):
        return np.real(out)
    return out


# -- sphere measure decay ----------------------------------------------------

class DecayFit(NamedTuple):
    slope: float
    shell_radii: np.ndarray
    shell_max: np.ndarray
    flagged: bool


def rasterize_sphere_shell(d: int, side_n: int, radius: float = 0.25,
                           width_cells: float = 2.0) -> np.ndarray:
    """Unit-mass thin spherical shell on the grid (mass-exact normalization).

    Cells are weighted by a tent profile across the 2-cell shell width; a
    hard indicator leaves lattice-quantization spikes that bias the decay
    maxima upward at high frequency.
    """
    h = 1.0 / side_n
    axes = [(np.arange(side_n) + 0.5) * h] * d
    grids = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(sum((g - 0.5) ** 2 for g in grids))
    mass = np.maximum(0.0, 1.0 - np.abs(r - radius) / (width_cells * h / 2.0))
    total = mass.sum()
    if total == 0:
        raise DomainError("shell missed every grid cell")
    return mass / total


def surface_measure_decay(d: int, side_n: int, radius: float = 0.25) -> DecayFit:
    """Fourier decay of the sphere measure: per-dyadic-shell max and log slope.

    The fit runs over shells inside [8, side_n/4] for d = 2 and [4, side_n/4]
    for d = 3; a flagged result signals a grid too coarse for the stated
    range (side_n < 256 in d = 2, < 64 in d = 3).
    """
    if d not in (2, 3):
        raise DomainError("surface decay is implemented for d in {2, 3}")
    flagged = side_n < (256 if d == 2 else 64)
    mass = rasterize_sphere_shell(d, side_n, radius)
    hat = np.fft.rfftn(mass)
    # frequency norms for the rfft layout
    axes = [np.fft.fftfreq(side_n) * side_n] * (d - 1) + [np.arange(side_n // 2 + 1).astype(float)]
    grids = np.meshgrid(*axes, indexing="ij")
    fn = np.sqrt(sum(g ** 2 for g in grids))
    m_hi = int(math.floor(math.log2(side_n / 4)))
    radii, maxima, mids = [], [], []
    amag = np.abs(hat)
    for m in range(0, m_hi):
        lo, hi = 2.0 ** m, 2.0 ** (m + 1)
        sel = (fn >= lo) & (fn < hi)
        if not np.any(sel):
            continue
        vals = amag[sel]
        k = int(np.argmax(vals))
        # abscissa = frequency where the max is attained: the extremum drifts
        # inside the shell, and pinning it to the shell midpoint biases slopes
        radii.append(float(fn[sel][k]))
        maxima.append(float(vals[k]))
        mids.append(math.sqrt(lo * hi))
    radii = np.array(radii)
    maxima = np.array(maxima)
    mids = np.array(mids)
    r_lo = 8.0 if d == 2 else 4.0
    keep = (mids >= r_lo) & (mids <= side_n / 4)
    if keep.sum() < 2:
        keep = mids >= 1.0
        flagged = True
    slope, _ = np.polyfit(np.log(radii[keep]), np.log(maxima[keep]), 1)
    return DecayFit(float(slope), radii, maxima, flagged)


# -- fractal energy integral -------------------------------------------------

def riesz_constant(gamma: float, d: int) -> float:
    """c with int |g lambda^|^2 |xi|^-gamma = c * II |x-y|^(gamma-d) g g dl dl."""
    return np.pi ** (gamma - d / 2.0) * gamma_fn((d - gamma) / 2.0) / gamma_fn(gamma / 2.0)


class EnergyResult(NamedTuple):
    fourier_value: float
    kernel_value: float
    shell_radii: np.ndarray
    shell_increments: np.ndarray


def deposit_gaussian(points: np.ndarray, masses: np.ndarray, side_n: int,
                     pad: int = 4, sigma_cells: float = 1.0) -> np.ndarray:
    """Deposit atoms on the pad*side_n grid as unit-mass Gaussian bumps."""
    h = 1.0 / side_n
    n_tot = pad * side_n
    sigma = sigma_cells * h
    reach = int(math.ceil(5.0 * sigma_cells))
    offsets = np.arange(-reach, reach + 1)
    d = points.shape[1]
    dens = np.zeros((n_tot,) * d)
    cells = np.floor(points / h).astype(int)
    for p, w, c in zip(points, masses, cells):
        axes_vals, axes_idx = [], []
        for j in range(d):
            idx = c[j] + offsets
            nodes = idx * h
            vals = np.exp(-0.5 * ((nodes - p[j]) / sigma) ** 2)
            axes_vals.append(vals)
            axes_idx.append(np.mod(idx, n_tot))
        block = axes_vals[0]
        for v in axes_vals[1:]:
            block = np.multiply.outer(block, v)
        dens[np.ix_(*axes_idx)] += block * (w / block.sum())
    return dens


def _center_energy_exact(points, masses, gamma: float, r0: float = 1.0,
                         n_rad: int = 48, n_ang: int = 128) -> float:
    """int_{|xi| < r0} |g lambda^(xi)|^2 |xi|^-gamma dxi by polar quadrature.

    The transform is evaluated exactly as an atom sum; the radial weight
    r^(1-gamma) is absorbed by the substitution u = r^(2-gamma).
    """
    p = 2.0 - gamma
    gn, gw = np.polynomial.legendre.leggauss(n_rad)
    u = (gn + 1.0) / 2.0 * r0 ** p
    wu = gw / 2.0 * r0 ** p
    r = u ** (1.0 / p)
    th = (np.arange(n_ang) + 0.5) * (2.0 * np.pi / n_ang)
    xi = np.stack([np.outer(r, np.cos(th)), np.outer(r, np.sin(th))], axis=-1)
    xi_flat = xi.reshape(-1, 2)
    power = np.empty(len(xi_flat))
    chunk = max(1, 8_000_000 // max(len(points), 1))
    for i0 in range(0, len(xi_flat), chunk):
        sl = slice(i0, min(i0 + chunk, len(xi_flat)))
        phase = xi_flat[sl] @ points.T
        hat = np.exp(-2j * np.pi * phase) @ masses
        power[sl] = np.abs(hat) ** 2
    ang_int = power.reshape(len(r), n_ang).sum(axis=1) * (2.0 * np.pi / n_ang)
    return float((wu * ang_int).sum() / p)


def energy_integral(lam: FrostmanMeasure, gamma: float, side_n: int,
                    g_values=None, pad: int = 4,
                    sigma_cells: float = 1.0) -> EnergyResult:
    """Truncated energy int_{|xi|<=side_n/4} |g lambda^|^2 |xi|^-gamma, two ways.

    Fourier side: atoms deposited as Gaussian bumps on a pad-times-wider
    periodic grid (frequency spacing 1/pad), transformed, deconvolved by the
    exact Gaussian factor, and summed with the Riemann weight.  Kernel side:
    the Riesz-constant-weighted double sum over distinct atoms.  Dyadic shell
    increments of the Fourier sum are returned for the convergence
    diagnostics.
    """
    if not (0.0 < gamma < lam.d):
        raise DomainError(f"gamma {gamma} outside (0, {lam.d})")
    d = lam.d
    g = np.ones(len(lam)) if g_values is None else np.asarray(g_values, float)
    masses = lam.weights * g
    dens = deposit_gaussian(lam.points, masses, side_n, pad, sigma_cells)
    hat = np.fft.rfftn(dens)
    n_tot = pad * side_n
    axes = [np.fft.fftfreq(n_tot) * n_tot / pad] * (d - 1) + \
           [np.arange(n_tot // 2 + 1) / pad]
    grids = np.meshgrid(*axes, indexing="ij")
    fn = np.sqrt(sum(x ** 2 for x in grids))
    sigma = sigma_cells / side_n
    decon = np.exp((2.0 * np.pi ** 2 * sigma ** 2) * fn ** 2)
    power = (np.abs(hat) * decon) ** 2
    # rfft stores half the spectrum; double the interior columns
    dup = np.full(hat.shape[-1], 2.0)
    dup[0] = 1.0
    if n_tot % 2 == 0:
        dup[-1] = 1.0
    power = power * dup
    cut = side_n / 4.0
    cell = (1.0 / pad) ** d
    m_hi = int(math.floor(math.log2(cut)))
    radii, incs = [], []
    for m in range(0, m_hi):
        lo, hi = 2.0 ** m, 2.0 ** (m + 1)
        sel = (fn >= lo) & (fn < hi)
        radii.append(math.sqrt(lo * hi))
        incs.append(float((power[sel] * fn[sel] ** (-gamma)).sum() * cell))
    # |xi| < 1: the |xi|^-gamma singularity defeats the lattice Riemann sum;
    # integrate it exactly from direct atom sums in polar coordinates (d = 2),
    # falling back to a smooth quadratic-in-radius model otherwise
    if d == 2:
        low_part = _center_energy_exact(lam.points, masses, gamma)
    else:
        amp_zero = float(power.flat[0])
        ring = (fn >= 0.75) & (fn < 1.25)
        ring_mean = float(power[ring].mean()) if np.any(ring) else amp_zero
        b_coef = ring_mean - amp_zero
        low_part = 4.0 * np.pi * (amp_zero / (3.0 - gamma) + b_coef / (5.0 - gamma))
    fourier_value = low_part + float(np.sum(incs))

    kern = 0.0
    pts, n = lam.points, len(lam)
    chunk = max(1, 4_000_000 // max(n, 1))
    for i0 in range(0, n, chunk):
        sl = slice(i0, min(i0 + chunk, n))
        diff = pts[sl, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(-1))
        # dist == 0 is the excluded diagonal: inf^(gamma-d) = 0 drops it
        block = np.where(dist > 0, dist, np.inf) ** (gamma - d)
        kern += float((masses[sl, None] * masses[None, :] * block).sum())
    kernel_value = riesz_constant(gamma, d) * kern
    return EnergyResult(fourier_value, kernel_value, np.array(radii), np.array(incs))


def shell_profile_verdict(increments, grow_factor: float = 2.0,
                          level_ratio: float = 1.05) -> str:
    """Classify a shell-increment profile: "converging" when the last two
    shells have ratio <= level_ratio, "growing" when last/first >= grow_factor."""
    inc = np.asarray(increments, float)
    if len(inc) < 3:
        raise DomainError("need at least three shells")
    if inc[-1] / inc[0] >= grow_factor:
        return "growing"
    if inc[-1] / inc[-2] <= level_ratio:
        return "converging"
    return "undecided"


# -- Schur test ---------------------------------------------------------------

def schur_kernel_sup(lam: FrostmanMeasure, gamma: float) -> float:
    """sup over atoms x of sum_{y != x} w_y |x - y|^(gamma - d)."""
    if not (0.0 < gamma < lam.d):
        raise DomainError(f"gamma {gamma} outside (0, {lam.d})")
    best = 0.0
    pts, w, d = lam.points, lam.weights, lam.d
    for i in range(len(lam)):
        dist = np.sqrt(((pts - pts[i]) ** 2).sum(1))
        dist[i] = np.inf
        vals = np.where(dist > 0, dist, np.inf) ** (gamma - d)
        best = max(best, float((w * vals).sum()))
    return best


def schur_dyadic_majorant(lam: FrostmanMeasure, gamma: float) -> float:
    """sup over atoms of sum_j 2^((j+1)(d-gamma)) lambda(B(x, 2^-j)).

    Shell-by-shell domination of the direct kernel sum: on the shell
    2^-(j+1) <= |x-y| <= 2^-j the kernel is at most 2^((j+1)(d-gamma)).
    """
    pts, w, d = lam.points, lam.weights, lam.d
    best = 0.0
    for i in range(len(lam)):
        dist = np.sqrt(((pts - pts[i]) ** 2).sum(1))
        dist[i] = np.inf
        finite = dist[np.isfinite(dist)]
        min_gap = float(finite.min()) if len(finite) else 1.0
        j_stop = max(0, int(math.ceil(-math.log2(max(min_gap, 1e-300))))) + 1
        total = 0.0
        for j in range(0, j_stop + 1):
            ball = float(w[dist <= 2.0 ** (-j)].sum())
            total += 2.0 ** ((j + 1) * (d - gamma)) * ball
        best = max(best, total)
    return best


# -- generalized Radon transform ----------------------------------------------

def radon_apply_stack(phi, psi, eps: float, t: float, fields) -> list:
    """Apply T_eps,t to several fields at once (the kernel is field-independent,
    so one pass over the pair matrix serves them all)."""
    from .phases import pairwise_value
    fields = [np.asarray(f) for f in fields]
    n = fields[0].shape[0]
    for f in fields:
        if f.ndim != 2 or f.shape != (n, n):
            raise DomainError("radon_apply expects square d=2 fields of one size")
    if eps < 2.0 / n:
        # 2/side_n puts >= 8 grid nodes across the mollifier support, the
        # coarsest the y-quadrature stays trustworthy
        raise ResolutionError(f"eps {eps} below the resolvable 2/side_n = {2.0 / n}")
    h = 1.0 / n
    axis = np.arange(n) * h
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    any_complex = any(np.iscomplexobj(f) for f in fields)
    fmat = np.stack([f.ravel() for f in fields], axis=1)
    if not any_complex:
        fmat = fmat.real.astype(float)
    moll = Mollifier(eps)
    out = np.zeros((n * n, len(fields)), dtype=complex if any_complex else float)
    rows = max(1, 4_000_000 // (n * n))
    for i0 in range(0, n * n, rows):
        sl = slice(i0, min(i0 + rows, n * n))
        vals = pairwise_value(phi, pts[sl], pts)
        vals -= t
        np.negative(vals, out=vals)
        kern = moll(vals)
        if psi is not None:
            kern = kern * np.asarray(psi(pts[sl][:, None, :], pts[None, :, :]))
        out[sl] = kern @ fmat * h ** 2
    return [out[:, i].reshape(n, n) for i in range(len(fields))]


def radon_apply(phi, psi, eps: float, t: float, field: np.ndarray) -> np.ndarray:
    """T f(x) = eps^-1 int rho((t - phi(x,y))/eps) f(y) psi(x,y) dy by direct
    quadrature over the grid in y for each x (d = 2)."""
    return radon_apply_stack(phi, psi, eps, t, [field])[0]


class SobolevRatioRow(NamedTuple):
    eps: float
    field_index: int
    ratio: float


def radon_sobolev_ratio(phi, psi, t: float, eps_list, fields, gamma: float = 0.5):
    """Table of ||T_eps f||_{H^gamma} / ||f||_{L2} and per-field max/min.

    Returns (rows, summary) where summary maps field_index to the max/min
    ratio across eps -- the epsilon-uniformity diagnostic.
    """
    rows = []
    for eps in eps_list:
        transformed = radon_apply_stack(phi, psi, float(eps), t, list(fields))
        for fi, (f, tf) in enumerate(zip(fields, transformed)):
            rows.append(SobolevRatioRow(float(eps), fi,
                                        sobolev_norm(tf, gamma) / l2_norm(f)))
    summary = {}
    for fi in range(len(fields)):
        vals = [r.ratio for r in rows if r.field_index == fi]
        summary[fi] = max(vals) / min(vals)
    return rows, summary


# -- oscillatory integral -----------------------------------------------------

def oscillatory_G(phi, psi, s: float, xi, zeta, t: float = 0.0,
                  quad_n: int = 48, e_bounds=(0.0, 1.0)) -> complex:
    """Tensor Gauss-Legendre quadrature of the separated-frequency integral

        G(s, xi, zeta) = II exp(2 pi i ((phi(x,y) - t) s + y.zeta - x.xi))
                            psi(x, y) dx dy        (d = 2 only).

    Frequencies beyond quad_n/4 raise a ResolutionWarning: values are still
    returned but are quadrature-limited.
    """
    xi = np.asarray(xi, float)
    zeta = np.asarray(zeta, float)
    if xi.shape != (2,) or zeta.shape != (2,):
        raise DomainError("oscillatory_G supports d = 2 only")
    if quad_n > 64:
        raise DomainError("quad_n capped at 64 per axis")
    top = max(np.abs(xi).max(), np.abs(zeta).max(), abs(s))
    if top > quad_n / 4.0:
        warnings.warn(f"frequency {top} beyond quad_n/4 = {quad_n / 4}; "
                      "result is quadrature-limited", ResolutionWarning, stacklevel=2)
    lo, hi = float(e_bounds[0]), float(e_bounds[1])
    gn, gw = np.polynomial.legendre.leggauss(quad_n)
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gn
    wts = 0.5 * (hi - lo) * gw
    g1, g2 = np.meshgrid(nodes, nodes, indexing="ij")
    pts = np.stack([g1.ravel(), g2.ravel()], axis=1)
    w2 = (wts[:, None] * wts[None, :]).ravel()
    phase_y = pts @ zeta
    phase_x = pts @ xi
    acc = 0.0 + 0.0j
    chunk = max(1, 4_000_000 // len(pts))
    for i0 in range(0, len(pts), chunk):
        sl = slice(i0, min(i0 + chunk, len(pts)))
        pv = np.asarray(phi.value(pts[sl][:, None, :], pts[None, :, :]))
        ps = np.asarray(psi(pts[sl][:, None, :], pts[None, :, :])) if psi is not None else 1.0
        phase = (pv - t) * s + phase_y[None, :] - phase_x[sl, None]
        acc += (w2[sl, None] * w2[None, :] * ps * np.exp(2j * np.pi * phase)).sum()
    return complex(acc)
