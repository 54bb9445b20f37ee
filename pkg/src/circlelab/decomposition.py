"""Greedy cap decomposition of functions on the circle.

Each step finds the dyadic cap that maximizes |C|^(-1/2) int_C |f|, splits off
the part of f on that cap below a height threshold, and repeats on the rest.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from circlelab.circle import Cap, CircleFunction
from circlelab.extension import PlaneGrid, extend_circle, lp_norm
from circlelab.trilinear import trilinear_norm_fourier

TIE_RTOL = 1e-12


def _level_count(n: int) -> int:
    """Number of dyadic radii 2^-j whose caps still hold at least three grid points."""
    h = 2 * math.pi / n
    j = 0
    while math.asin(2.0 ** -(j + 1)) >= h:
        j += 1
    return j + 1


def _half_widths(n: int, levels: int) -> list[int]:
    """Grid offsets m with the cap at level j covering offsets -m..m."""
    out = []
    for j in range(levels):
        cap = Cap(0.0, 2.0**-j)
        mask = cap.mask(n)
        out.append(int(mask[: n // 2 + 1].sum()) - 1)
    return out


@dataclass(frozen=True)
class CapChoice:
    cap: Cap
    level: int
    value: float


def _pick(values: np.ndarray, n: int) -> tuple[int, int]:
    """Argmax over (level, center) with ties to the larger radius, then the smaller angle."""
    best = values.max()
    close = np.argwhere(values >= best - TIE_RTOL * abs(best))
    level, center = min(map(tuple, close))
    return int(level), int(center)


def cap_scores(f: CircleFunction, levels: int | None = None) -> np.ndarray:
    """|C|^(-1/2) int_C |f| for every dyadic level and grid center, by brute force."""
    n = f.n
    levels = _level_count(n) if levels is None else levels
    a = np.abs(f.samples)
    h = f.weight
    out = np.empty((levels, n))
    for j, m in enumerate(_half_widths(n, levels)):
        acc = np.zeros(n)
        for d in range(-m, m + 1):
            acc += np.roll(a, -d)
        out[j] = acc * h / math.sqrt((2 * m + 1) * h)
    return out


def cap_scores_prefix(f: CircleFunction, levels: int | None = None) -> np.ndarray:
    """Same table from circular prefix sums; an independent rescan."""
    n = f.n
    levels = _level_count(n) if levels is None else levels
    a = np.abs(f.samples)
    ext = np.concatenate([a, a, a])
    csum = np.concatenate([[0.0], np.cumsum(ext)])
    h = f.weight
    out = np.empty((levels, n))
    k = np.arange(n) + n
    for j, m in enumerate(_half_widths(n, levels)):
        out[j] = (csum[k + m + 1] - csum[k - m]) * h / math.sqrt((2 * m + 1) * h)
    return out


def best_cap(f: CircleFunction, levels: int | None = None) -> CapChoice:
    if not np.any(f.samples):
        raise ValueError("best cap of the zero function is undefined")
    scores = cap_scores(f, levels)
    j, k = _pick(scores, f.n)
    return CapChoice(Cap(f.theta[k], 2.0**-j), j, float(scores[j, k]))


@dataclass(frozen=True)
class Split:
    g: CircleFunction
    h: CircleFunction
    cap: Cap
    height: float


def split(
    f: CircleFunction,
    delta: float,
    r_hat: float | None = None,
    grid: PlaneGrid | None = None,
    choice: CapChoice | None = None,
) -> Split:
    """Split f = g + h with g living on the best cap (both caps for even f) below height
    delta^-4 ||f|| |C|^(-1/2), and h the rest; g and h have disjoint supports.

    When r_hat and grid are given, the precondition ||extension f||_6 >= delta r_hat ||f||
    is checked first.
    """
    if not (0 < delta <= 1):
        raise ValueError("delta must lie in (0, 1]")
    norm = f.l2_norm()
    if r_hat is not None:
        if grid is None:
            raise ValueError("checking the precondition needs a grid")
        six = lp_norm(extend_circle(f, grid), 6).corrected
        if six < delta * r_hat * norm:
            raise ValueError(f"precondition fails: {six:.6g} < {delta * r_hat * norm:.6g}")
    choice = best_cap(f) if choice is None else choice
    cap = choice.cap
    region = cap.mask(f.n)
    if f.is_even():
        region |= cap.negated().mask(f.n)
    height = delta**-4 * norm / math.sqrt(cap.grid_measure(f.n))
    keep = region & (np.abs(f.samples) <= height)
    g = np.where(keep, f.samples, 0.0)
    return Split(CircleFunction(g), CircleFunction(f.samples - g), cap, height)


@dataclass
class Step:
    center: float
    radius: float
    eps_star: float
    trilinear: float
    piece_mass: float  # ||f_nu||^2

    def cap(self) -> Cap:
        return Cap(self.center, self.radius)


@dataclass
class Trace:
    steps: list[Step] = field(default_factory=list)
    input_mass: float = 0.0
    residual_mass: float = 0.0
    terminated: bool = False
    pieces: list[CircleFunction] = field(default_factory=list, repr=False)
    residual: CircleFunction | None = field(default=None, repr=False)

    def parseval_gap(self) -> float:
        return abs(sum(s.piece_mass for s in self.steps) + self.residual_mass - self.input_mass)

    def to_json(self, path: str | Path | None = None) -> str:
        doc = {
            "input_mass": self.input_mass,
            "residual_mass": self.residual_mass,
            "terminated": self.terminated,
            "steps": [asdict(s) for s in self.steps],
        }
        text = json.dumps(doc, indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "Trace":
        doc = json.loads(text)
        return cls([Step(**s) for s in doc["steps"]], doc["input_mass"], doc["residual_mass"], doc["terminated"])


def decompose(
    f: CircleFunction,
    s_hat: float,
    grid: PlaneGrid,
    max_steps: int = 16,
    kappa: float | None = None,
    floor: float = 1e-12,
) -> Trace:
    """Iterated splitting of f; records eps* and the chosen cap at every step.

    eps* starts at 1/2 and is halved until ||G*G*G|| >= eps^3 s_hat^3 ||f||^3;
    the bracket eps^3 s_hat^3 ||f||^3 <= ||G*G*G|| <= 8 eps^3 s_hat^3 ||f||^3 is asserted.
    """
    if s_hat <= 0:
        raise ValueError("s_hat must be positive")
    norm = f.l2_norm()
    trace = Trace(input_mass=norm**2)
    rest = f
    eps = 0.5
    scale = s_hat**3 * norm**3
    for _ in range(max_steps):
        tri = trilinear_norm_fourier(rest, grid, kappa).value if np.any(rest.samples) else 0.0
        if tri < floor * max(1.0, norm**3):
            trace.terminated = True
            break
        while tri < eps**3 * scale:
            eps /= 2
        if not (eps**3 * scale <= tri <= 8 * eps**3 * scale * (1 + 1e-9)):
            raise ArithmeticError(
                f"eps* bracket violated: {tri:.6g} vs [{eps**3 * scale:.6g}, {8 * eps**3 * scale:.6g}];"
                " s_hat is too small for this input"
            )
        piece = split(rest, eps)
        mass = piece.g.l2_norm() ** 2
        trace.steps.append(Step(piece.cap.center, piece.cap.radius, eps, tri, mass))
        trace.pieces.append(piece.g)
        rest = piece.h
    else:
        tri = trilinear_norm_fourier(rest, grid, kappa).value if np.any(rest.samples) else 0.0
        trace.terminated = tri < floor * max(1.0, norm**3)
    trace.residual = rest
    trace.residual_mass = rest.l2_norm() ** 2
    return trace


RADII = tuple(2**k for k in range(8))


@dataclass(frozen=True)
class NormalizationProfile:
    radii: tuple[int, ...]
    height_tail: tuple[float, ...]
    distance_tail: tuple[float, ...]


def normalization_profile(f: CircleFunction, cap: Cap, even: bool = False) -> NormalizationProfile:
    """Mass of f above height R r^(-1/2) and at chordal distance >= R r from the cap center."""
    a2 = np.abs(f.samples) ** 2
    pts = np.stack([np.cos(f.theta), np.sin(f.theta)], axis=1)
    dist = np.linalg.norm(pts - cap.unit_vector, axis=1)
    if even:
        dist = np.minimum(dist, np.linalg.norm(pts + cap.unit_vector, axis=1))
    r = cap.radius
    heights = _upper_tails(a2, np.abs(f.samples), [R / math.sqrt(r) for R in RADII], strict=True)
    dists = _upper_tails(a2, dist, [R * r for R in RADII], strict=False)
    return NormalizationProfile(RADII, tuple(heights * f.weight), tuple(dists * f.weight))


def _upper_tails(mass: np.ndarray, key: np.ndarray, cuts: list[float], strict: bool) -> np.ndarray:
    """Mass where key exceeds each cut, read off one running sum so nested sets give ordered totals."""
    order = np.argsort(-key, kind="stable")
    running = np.concatenate([[0.0], np.cumsum(mass[order])])
    ascending = key[order][::-1]
    side = "right" if strict else "left"
    counts = key.size - np.searchsorted(ascending, cuts, side=side)
    return np.array([float(running[c]) for c in counts])
