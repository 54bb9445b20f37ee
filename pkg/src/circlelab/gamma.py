"""The six-angle trigonometric form Gamma and the signed-permutation group behind it.

A group element acts on six slots a = (a1, ..., a6) by
``(g a)_i = sign_i * a_{perm_i}``.  Every generator keeps the constraint
a1 + a2 + a3 = a4 + a5 + a6.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

Element = tuple[tuple[int, ...], tuple[int, ...]]  # (perm, signs)

IDENTITY: Element = ((0, 1, 2, 3, 4, 5), (1, 1, 1, 1, 1, 1))


def compose(g: Element, h: Element) -> Element:
    """The element acting as g after h."""
    gp, gs = g
    hp, hs = h
    return tuple(hp[gp[i]] for i in range(6)), tuple(gs[i] * hs[gp[i]] for i in range(6))


def act(g: Element, a: np.ndarray) -> np.ndarray:
    perm, signs = g
    return np.asarray(signs) * np.asarray(a)[list(perm)]


def generators() -> list[Element]:
    swap_triples: Element = ((3, 4, 5, 0, 1, 2), (1,) * 6)
    first_triple = [
        (p + (3, 4, 5), (1,) * 6) for p in itertools.permutations(range(3)) if p != (0, 1, 2)
    ]
    reflect_pair: Element = ((0, 1, 3, 2, 4, 5), (1, 1, -1, -1, 1, 1))
    reflect_four: Element = ((0, 3, 4, 1, 2, 5), (1, -1, -1, -1, -1, 1))
    return [swap_triples, *first_triple, reflect_pair, reflect_four]


@dataclass(frozen=True)
class GroupSummary:
    order: int
    image_order: int
    kernel_order: int
    distinct_terms: int


def enumerate_group() -> list[Element]:
    """Breadth-first closure of the generators."""
    gens = generators()
    seen = {IDENTITY}
    queue = deque([IDENTITY])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = compose(s, g)
            if h not in seen:
                seen.add(h)
                queue.append(h)
    return sorted(seen)


def flip_set(g: Element) -> frozenset[int]:
    """Original slots that land under a minus sign; they contribute sin instead of cos."""
    perm, signs = g
    return frozenset(perm[i] for i in range(6) if signs[i] < 0)


def summarize(group: list[Element] | None = None) -> GroupSummary:
    group = enumerate_group() if group is None else group
    image = {g[0] for g in group}
    kernel = [g for g in group if g[0] == IDENTITY[0]]
    distinct = {flip_set(g) for g in group}
    return GroupSummary(len(group), len(image), len(kernel), len(distinct))


STABILIZER = 2 * math.factorial(3) * math.factorial(3)


def _cos_sin(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    th = np.asarray(theta, dtype=float)
    if th.shape[-1] != 6:
        raise ValueError("Gamma takes six angles")
    return np.cos(th), np.sin(th)


def orbit_sum(theta: np.ndarray, group: list[Element] | None = None) -> np.ndarray:
    """Sum over the group of products of cos (unflipped) or sin (flipped), divided by the stabilizer."""
    group = enumerate_group() if group is None else group
    c, s = _cos_sin(theta)
    total = np.zeros(c.shape[:-1])
    for g in group:
        flips = flip_set(g)
        term = np.ones(c.shape[:-1])
        for j in range(6):
            term = term * (s[..., j] if j in flips else c[..., j])
        total = total + term
    return total / STABILIZER


def gamma(theta: np.ndarray) -> np.ndarray:
    """The 20-term form, written group by group.  Works on arrays of shape (..., 6)."""
    c, s = _cos_sin(theta)
    c1, c2, c3, c4, c5, c6 = (c[..., i] for i in range(6))
    s1, s2, s3, s4, s5, s6 = (s[..., i] for i in range(6))
    ends = c1 * c2 * c3 * c4 * c5 * c6 + s1 * s2 * s3 * s4 * s5 * s6
    one_sine = (c1 * c2 * s3 + c1 * s2 * c3 + s1 * c2 * c3) * (s4 * c5 * c6 + c4 * s5 * c6 + c4 * c5 * s6)
    two_sines = (c1 * s2 * s3 + s1 * c2 * s3 + s1 * s2 * c3) * (s4 * s5 * c6 + s4 * c5 * s6 + c4 * s5 * s6)
    return ends + one_sine + two_sines


def gamma_abc(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients A, B, C with Gamma = c5 c6 A + s5 s6 B + sin(t5 + t6) C."""
    th = np.asarray(theta, dtype=float)
    c, s = _cos_sin(th)
    t1, t2, t3, t4 = (th[..., i] for i in range(4))
    a = c[..., 0] * c[..., 1] * np.cos(t3 - t4) + np.sin(t1 + t2) * c[..., 2] * s[..., 3]
    b = s[..., 0] * s[..., 1] * np.cos(t3 - t4) + np.sin(t1 + t2) * s[..., 2] * c[..., 3]
    c1, c2, c3, c4 = (c[..., i] for i in range(4))
    s1, s2, s3, s4 = (s[..., i] for i in range(4))
    direct = (c1 * c2 * s3 + c1 * s2 * c3 + s1 * c2 * c3) * c4 + (c1 * s2 * s3 + s1 * c2 * s3 + s1 * s2 * c3) * s4
    mix = np.sin(th[..., 4] + th[..., 5])
    g = gamma(th)
    with np.errstate(divide="ignore", invalid="ignore"):
        recovered = (g - c[..., 4] * c[..., 5] * a - s[..., 4] * s[..., 5] * b) / mix
    # recovering C by division loses accuracy when sin(t5 + t6) is small
    cc = np.where(np.abs(mix) > 1e-8, recovered, direct)
    return a, b, cc


def gamma_gradient(theta: np.ndarray) -> np.ndarray:
    """Analytic gradient from the flip-set table."""
    c, s = _cos_sin(theta)
    masks = flip_table()
    grad = np.zeros(c.shape)
    for mask in masks:
        factors = [s[..., j] if mask[j] else c[..., j] for j in range(6)]
        derivs = [c[..., j] if mask[j] else -s[..., j] for j in range(6)]
        for k in range(6):
            term = derivs[k]
            for j in range(6):
                if j != k:
                    term = term * factors[j]
            grad[..., k] += term
    return grad


def flip_table() -> np.ndarray:
    """The 20 flip patterns: equally many sines among slots 1-3 and among slots 4-6."""
    rows = []
    for k in range(4):
        for left in itertools.combinations(range(3), k):
            for right in itertools.combinations(range(3, 6), k):
                row = np.zeros(6, dtype=bool)
                row[list(left + right)] = True
                rows.append(row)
    return np.array(rows)


@dataclass(frozen=True)
class GammaMax:
    value: float
    argmax: np.ndarray
    grad_norm: float
    grid_value: float


def maximize_gamma(
    starts: int = 64,
    seed: int = 0,
    grid_points: int = 7,
    fixed: dict[int, float] | None = None,
    max_iter: int = 5000,
    tol: float = 1e-12,
) -> GammaMax:
    """Multi-start projected gradient ascent on [0, pi/2]^6, cross-checked by a coarse grid scan.

    ``fixed`` pins selected coordinates (0-based index -> angle).
    """
    fixed = fixed or {}
    free = np.array([i not in fixed for i in range(6)])
    lo, hi = 0.0, math.pi / 2

    def pin(x: np.ndarray) -> np.ndarray:
        x = np.clip(x, lo, hi)
        for i, v in fixed.items():
            x[..., i] = v
        return x

    # coarse scan
    axis = np.linspace(lo, hi, grid_points)
    mesh = np.stack(np.meshgrid(*[axis] * 6, indexing="ij"), axis=-1).reshape(-1, 6)
    mesh = pin(mesh)
    grid_vals = gamma(mesh)
    grid_best = mesh[np.argmax(grid_vals)]

    rng = np.random.default_rng(seed)
    x = pin(np.vstack([rng.uniform(lo, hi, size=(starts, 6)), grid_best[None, :]]))
    step = np.full(x.shape[0], 0.5)
    val = gamma(x)
    for _ in range(max_iter):
        g = gamma_gradient(x) * free
        while True:
            trial = pin(x + step[:, None] * g)
            tv = gamma(trial)
            bad = tv < val - 1e-15
            if not np.any(bad & (step > 1e-12)):
                break
            step = np.where(bad, step * 0.5, step)
        moved = np.max(np.abs(trial - x), axis=1)
        x, val = trial, tv
        step = np.minimum(step * 1.5, 2.0)
        if np.all(moved < tol):
            break
    best = int(np.argmax(val))
    arg = _newton_polish(x[best], free, lo, hi, pin)
    # projected gradient: only components pointing inside the box count
    g = gamma_gradient(arg) * free
    g = np.where((arg <= lo) & (g < 0), 0.0, g)
    g = np.where((arg >= hi) & (g > 0), 0.0, g)
    return GammaMax(float(gamma(arg)), arg, float(np.linalg.norm(g)), float(np.max(grid_vals)))


def _newton_polish(x: np.ndarray, free: np.ndarray, lo: float, hi: float, pin, steps: int = 20) -> np.ndarray:
    """Newton steps on the free interior coordinates; a step is kept only if Gamma does not drop."""
    h = 1e-5
    for _ in range(steps):
        live = free & (x > lo + 1e-9) & (x < hi - 1e-9)
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        g = gamma_gradient(x)[idx]
        if np.linalg.norm(g) < 1e-14:
            break
        hess = np.empty((idx.size, idx.size))
        for col, k in enumerate(idx):
            e = np.zeros(6)
            e[k] = h
            hess[:, col] = (gamma_gradient(x + e)[idx] - gamma_gradient(x - e)[idx]) / (2 * h)
        hess = 0.5 * (hess + hess.T)
        try:
            dx = np.linalg.lstsq(hess, -g, rcond=1e-10)[0]
        except np.linalg.LinAlgError:
            break
        trial = x.copy()
        trial[idx] += dx
        trial = pin(trial)
        if gamma(trial) < gamma(x) - 1e-15:
            break
        x = trial
    return x
