"""Trilinear convolution norms ||f sigma * f sigma * f sigma||_2 computed two ways.

The Fourier route divides ||extension of f||_6^3 by a Plancherel constant
kappa.  The direct route bins the pushforward of f(a)f(b)f(c) under
(a, b, c) -> z(a) + z(b) + z(c) and extrapolates kernel-smoothed L^2 norms
to zero width.  kappa is measured by comparing the two, never assumed.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from circlelab.circle import Cap, CircleFunction
from circlelab.extension import NormEstimate, PlaneGrid, density_integral, extend_circle, lp_norm

log = logging.getLogger(__name__)

KAPPA_CANDIDATES = {"2pi": 2 * math.pi, "(2pi)^3": (2 * math.pi) ** 3}


@dataclass(frozen=True)
class DirectSettings:
    """Kernel widths (largest first, each half the previous) and histogram bin width."""

    widths: tuple[float, ...] = (0.04, 0.02, 0.01)
    bin_width: float = 0.0025

    def __post_init__(self) -> None:
        w = self.widths
        if len(w) < 2 or any(abs(w[i + 1] - w[i] / 2) > 1e-12 * w[i] for i in range(len(w) - 1)):
            raise ValueError("kernel widths must be a halving sequence of length >= 2")
        if self.bin_width > w[-1] / 2:
            raise ValueError("bins must be at most half the narrowest kernel")


FAST_DIRECT = DirectSettings(widths=(0.08, 0.04, 0.02), bin_width=0.005)


def _unit_points(n: int) -> tuple[np.ndarray, np.ndarray]:
    """cos and sin of the grid angles, built from one quadrant when 4 | n so that a
    quarter turn of the grid maps the points onto each other bit for bit."""
    theta = 2 * math.pi * np.arange(n) / n
    if n % 4:
        return np.cos(theta), np.sin(theta)
    m = n // 4
    c0, s0 = np.cos(theta[:m]), np.sin(theta[:m])
    return np.concatenate([c0, -s0, -c0, s0]), np.concatenate([s0, c0, -s0, -c0])


def _pushforward_density(f: CircleFunction, settings: DirectSettings) -> tuple[np.ndarray, float, float]:
    """Histogram of the triple-sum pushforward measure, as a density on square bins."""
    w = f.samples * f.weight
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    keep = np.flatnonzero(np.abs(w) > 1e-16 * scale)
    c, s = _unit_points(f.n)
    c, s, w = c[keep], s[keep], w[keep]
    b = settings.bin_width
    margin = 6 * settings.widths[0]
    half = int(math.ceil((3.0 + margin) / b))
    nb = 2 * half + 1
    lo = -(half + 0.5) * b
    px = (c[:, None] + c[None, :]).ravel()
    py = (s[:, None] + s[None, :]).ravel()
    pw = (w[:, None] * w[None, :]).ravel()
    is_real = bool(np.all(w.imag == 0))
    hist_re = np.zeros(nb * nb)
    hist_im = None if is_real else np.zeros(nb * nb)
    for k in range(w.size):
        # bins centred on multiples of b; rint is odd under x -> -x, ties included
        ix = np.rint((px + c[k]) / b).astype(np.int64) + half
        iy = np.rint((py + s[k]) / b).astype(np.int64) + half
        cell = ix * nb + iy
        wk = pw * w[k]
        hist_re += np.bincount(cell, weights=wk.real, minlength=nb * nb)
        if hist_im is not None:
            hist_im += np.bincount(cell, weights=wk.imag, minlength=nb * nb)
    dens = hist_re.reshape(nb, nb)
    if hist_im is not None:
        dens = dens + 1j * hist_im.reshape(nb, nb)
    return dens / (b * b), b, lo


def smoothed_l2_squared(f: CircleFunction, settings: DirectSettings = DirectSettings()) -> np.ndarray:
    """Squared L^2 norms of the pushforward density after Gaussian smoothing at each width."""
    dens, b, _ = _pushforward_density(f, settings)
    nb = dens.shape[0]
    kx = 2 * math.pi * np.fft.fftfreq(nb, d=b)
    spec = np.fft.fft2(dens)
    k2 = kx[:, None] ** 2 + kx[None, :] ** 2
    out = []
    for width in settings.widths:
        sm = np.fft.ifft2(spec * np.exp(-0.5 * width * width * k2))
        out.append(float(np.sum(np.abs(sm) ** 2) * b * b))
    return np.array(out)


def richardson_halving(values: np.ndarray) -> float:
    """Extrapolate v(h), v(h/2), ... to h = 0 assuming a power series in h."""
    table = [float(v) for v in values]
    order = 1
    while len(table) > 1:
        fac = 2.0**order
        table = [(fac * table[i + 1] - table[i]) / (fac - 1) for i in range(len(table) - 1)]
        order += 1
    return table[0]


def trilinear_norm_direct(f: CircleFunction, settings: DirectSettings = DirectSettings()) -> float:
    """||f sigma * f sigma * f sigma||_2 from the binned pushforward, no Fourier transform of f."""
    sq = smoothed_l2_squared(f, settings)
    est = richardson_halving(sq)
    if est < 0:
        raise ArithmeticError("extrapolated squared norm is negative; refine the kernel widths")
    return math.sqrt(est)


@dataclass(frozen=True)
class KappaReport:
    kappa: float
    samples: tuple[float, ...]
    spread: float
    nearest: str
    candidate_gaps: dict[str, float] = field(default_factory=dict)


def measure_kappa(
    samples: list[CircleFunction],
    grid: PlaneGrid,
    settings: DirectSettings = DirectSettings(),
    max_spread: float = 0.05,
) -> KappaReport:
    """kappa = median of ||extension||_6^3 / direct trilinear norm over the samples."""
    if not samples:
        raise ValueError("need at least one sample")
    ratios = []
    for f in samples:
        six = lp_norm(extend_circle(f, grid), 6).corrected
        ratios.append(six**3 / trilinear_norm_direct(f, settings))
    kappa = float(np.median(ratios))
    spread = float((max(ratios) - min(ratios)) / kappa)
    if spread >= max_spread:
        raise ArithmeticError(f"kappa samples disagree: relative spread {spread:.3%}")
    gaps = {k: abs(kappa - v) / v for k, v in KAPPA_CANDIDATES.items()}
    nearest = min(gaps, key=gaps.get)
    log.info("kappa = %.6f (nearest candidate %s, gap %.2e)", kappa, nearest, gaps[nearest])
    return KappaReport(kappa, tuple(ratios), spread, nearest, gaps)


def default_kappa_samples(n: int = 256) -> list[CircleFunction]:
    return [
        CircleFunction.constant(n),
        CircleFunction.from_callable(lambda t: np.exp(-((t - 1.0) ** 2) / (2 * 0.6**2)), n),
        CircleFunction.from_callable(lambda t: 1.0 + 0.5 * np.cos(2 * t) + 0.3 * np.sin(t), n),
    ]


@functools.lru_cache(maxsize=1)
def plancherel_constant() -> float:
    """Module-level kappa, measured once per process on a small sample family."""
    grid = PlaneGrid.square(60.0, 0.9)
    return measure_kappa(default_kappa_samples(), grid, FAST_DIRECT).kappa


@dataclass(frozen=True)
class TrilinearEstimate:
    value: float
    error: float
    kappa: float

    def __float__(self) -> float:
        return self.value


def trilinear_norm_fourier(f: CircleFunction, grid: PlaneGrid, kappa: float | None = None) -> TrilinearEstimate:
    k = plancherel_constant() if kappa is None else kappa
    est = lp_norm(extend_circle(f, grid), 6)
    val = est.corrected**3 / k
    return TrilinearEstimate(val, 3 * val * est.error / max(est.corrected, 1e-300), k)


def sixfold_identity_residual(fs: list[CircleFunction], grid: PlaneGrid) -> float:
    """Relative gap between <f1*f2*f3, f4*f5*f6> and <f1*f2*~f4, ~f3*f5*f6>.

    Both sides are separate grid integrations of products of extensions,
    where ~f is the antipodal reflection.  Inputs must be real valued.
    """
    if len(fs) != 6:
        raise ValueError("need six functions")
    if any(np.max(np.abs(f.samples.imag)) > 0 for f in fs):
        raise ValueError("the reflection identity needs real inputs")
    u = [extend_circle(f, grid).values for f in fs]
    lhs = np.sum(u[0] * u[1] * u[2] * np.conj(u[3] * u[4] * u[5]))
    r4 = extend_circle(fs[3].antipodal(), grid).values
    r3 = extend_circle(fs[2].antipodal(), grid).values
    rhs = np.sum(u[0] * u[1] * r4 * np.conj(r3 * u[4] * u[5]))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return float(abs(lhs - rhs) / scale)


# --------------------------------------------------------------- antipodal gain


def concentrating_cap_function(eps: float, n: int) -> CircleFunction:
    """eps^(-1/4) exp((z2 - 1)/eps) on {|z1| <= 1/2, z2 > 0}."""
    if eps <= 0:
        raise ValueError("eps must be positive")

    def fn(theta: np.ndarray) -> np.ndarray:
        z1, z2 = np.cos(theta), np.sin(theta)
        live = (np.abs(z1) <= 0.5) & (z2 > 0)
        return np.where(live, eps**-0.25 * np.exp((z2 - 1.0) / eps), 0.0)

    return CircleFunction.from_callable(fn, n)


@dataclass(frozen=True)
class AntipodalReport:
    eps: float
    ratio: float
    error: float
    single: NormEstimate
    paired: NormEstimate


def antipodal_grid(eps: float, spacing: float = 0.9, reach: float = 30.0) -> PlaneGrid:
    """Grid adapted to the scales 1/sqrt(eps) in x and 1/eps in t of a cap of width sqrt(eps)."""
    hx = reach / math.sqrt(eps)
    ht = reach / eps
    return PlaneGrid(hx, ht, max(16, int(2 * hx / spacing)), max(16, int(2 * ht / spacing)))


def antipodal_ratio(f: CircleFunction, grid: PlaneGrid) -> AntipodalReport:
    """||F*F*F||^2 / ||f*f*f||^2 for F = (f + reflected f)/sqrt(2), via sixth powers of extensions."""
    u = extend_circle(f, grid)
    big = extend_circle(CircleFunction((f.samples + f.antipodal().samples) / math.sqrt(2)), grid)
    one = lp_norm(u, 6)
    two = lp_norm(big, 6)
    ratio = two.total / one.total
    err = ratio * (two.tail_error / two.total + one.tail_error / one.total)
    return AntipodalReport(float("nan"), ratio, err, one, two)


def antipodal_lower_bound(eps: float, n: int | None = None, grid: PlaneGrid | None = None) -> AntipodalReport:
    """Antipodal gain ratio for the concentrating cap family at width parameter eps."""
    g = antipodal_grid(eps) if grid is None else grid
    if n is None:
        reach = math.hypot(g.half_x, g.half_t)
        n = int(2 ** math.ceil(math.log2(reach + 8 / math.sqrt(eps) + 64)))
    rep = antipodal_ratio(concentrating_cap_function(eps, n), g)
    return AntipodalReport(eps, rep.ratio, rep.error, rep.single, rep.paired)


# -------------------------------------------------------------- cap interaction


@dataclass(frozen=True)
class InteractionReport:
    value: float
    error: float
    raw: float


def cap_interaction(c1: Cap, c2: Cap, grid: PlaneGrid, n: int, kappa: float | None = None) -> InteractionReport:
    """||chi1 sigma * chi1 sigma * chi2 sigma||_2 / (|C1| |C2|^(1/2)) from the mixed product u1^2 u2."""
    k = plancherel_constant() if kappa is None else kappa
    u1 = extend_circle(c1.indicator(n), grid).values
    u2 = extend_circle(c2.indicator(n), grid).values
    dens = np.abs(u1) ** 4 * np.abs(u2) ** 2
    est = density_integral(dens, grid, decay=3.0)
    raw = math.sqrt(est.total) / k
    scale = c1.grid_measure(n) * math.sqrt(c2.grid_measure(n))
    err = raw * 0.5 * est.tail_error / est.total
    return InteractionReport(raw / scale, err / scale, raw)
