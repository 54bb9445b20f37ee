"""Numerical search for the sharp extension constant on the circle and comparison with the parabola."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from circlelab.circle import Cap, CircleFunction, LineFunction, symmetrize
from circlelab.extension import PlaneGrid, adjoint_extend, extend_circle, extend_parabola, lp_norm

log = logging.getLogger(__name__)

ANTIPODAL_GAIN = 2.5 ** (1 / 6)


@dataclass
class ElResult:
    f: CircleFunction
    ratio: float  # tail-corrected ||extension f||_6 / ||f||_2
    ratio_error: float
    history: list[float] = field(default_factory=list)  # truncated-grid ratios per step
    symmetry_residual: float = 0.0
    converged: bool = False
    steps: int = 0


def _grid_ratio(f: CircleFunction, grid: PlaneGrid) -> tuple[float, np.ndarray]:
    u = extend_circle(f, grid)
    return lp_norm(u, 6).norm / f.l2_norm(), u.values


def symmetry_residual(f: CircleFunction) -> float:
    """max | |f(theta)| - |f(theta + pi)| | for f scaled to unit L^2 norm."""
    g = f.normalized()
    return float(np.max(np.abs(np.abs(g.samples) - np.abs(g.antipodal().samples))))


def el_iterate(
    f0: CircleFunction,
    grid: PlaneGrid,
    max_iter: int = 400,
    tol: float = 1e-10,
    symmetrize_every: int = 5,
    plain_tail: int = 10,
    drop_tol: float = 1e-9,
) -> ElResult:
    """Fixed-point iteration f <- |E*(|Ef|^4 Ef)| / norm, with periodic symmetrization.

    E is the grid-truncated extension and E* its exact discrete adjoint, so
    plain steps cannot lower the grid ratio.  Symmetrization is switched off
    for the last ``plain_tail`` steps.
    """
    if not np.any(f0.samples):
        raise ValueError("initial function is zero")
    f = CircleFunction(np.abs(f0.samples)).normalized()
    q, u = _grid_ratio(f, grid)
    history = [q]
    converged = False
    plain_left = None
    step = 0
    for step in range(1, max_iter + 1):
        nxt = np.abs(adjoint_extend(np.abs(u) ** 4 * u, grid, f.n))
        cand = CircleFunction(nxt).normalized()
        sym_step = plain_left is None and symmetrize_every > 0 and step % symmetrize_every == 0
        if sym_step:
            cand = symmetrize(cand).normalized()
        q_new, u_new = _grid_ratio(cand, grid)
        if not sym_step and q_new < q * (1 - drop_tol):
            raise ArithmeticError(f"iteration diverged at step {step}: {q_new:.12g} < {q:.12g}")
        f, u = cand, u_new
        history.append(q_new)
        if plain_left is not None:
            plain_left -= 1
            if plain_left == 0:
                converged = True
                break
        elif abs(q_new - q) <= tol * q:
            plain_left = plain_tail
        q = q_new
    est = lp_norm(grid.with_values(u), 6)
    ratio = est.corrected / f.l2_norm()
    return ElResult(f, ratio, ratio * est.error / est.corrected, history, symmetry_residual(f), converged, step)


def default_circle_grid(half: float = 50.0, spacing: float = 0.9) -> PlaneGrid:
    return PlaneGrid.square(half, spacing)


def circle_size_for(grid: PlaneGrid) -> int:
    """Circle grid size keeping the trapezoid sum accurate out to the grid corners."""
    reach = math.hypot(grid.half_x, grid.half_t)
    return int(2 ** math.ceil(math.log2(reach + 48)))


def starting_points(n: int, starts: int, seed: int) -> list[CircleFunction]:
    rng = np.random.default_rng(seed)
    out = [CircleFunction.constant(n)]
    bump = Cap(math.pi / 2, 0.5).indicator(n)
    out.append(CircleFunction(bump.samples + 0.05))
    while len(out) < starts:
        out.append(CircleFunction(rng.uniform(0.2, 1.0, n)))
    return out[:starts]


@dataclass
class RadiusEstimate:
    value: float
    error: float
    runs: list[ElResult] = field(default_factory=list, repr=False)

    @property
    def best(self) -> ElResult:
        return max(self.runs, key=lambda r: r.ratio)


def estimate_R(
    grid: PlaneGrid | None = None,
    n: int | None = None,
    starts: int = 4,
    seed: int = 0,
    max_iter: int = 400,
    workers: int = 1,
) -> RadiusEstimate:
    """Best ratio over multi-start Euler-Lagrange runs; the error bar is the tail-model error."""
    grid = default_circle_grid() if grid is None else grid
    n = circle_size_for(grid) if n is None else n
    inits = starting_points(n, starts, seed)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        # map keeps start order, so the merge below does not depend on scheduling
        runs = list(pool.map(lambda f0: el_iterate(f0, grid, max_iter=max_iter), inits))
    for i, res in enumerate(runs):
        log.info("start %d: ratio %.8f after %d steps", i, res.ratio, res.steps)
    best = max(runs, key=lambda r: r.ratio)
    return RadiusEstimate(best.ratio, best.ratio_error, runs)


def gaussian_line(n: int | None = None, half: float = 9.0, grid: PlaneGrid | None = None) -> LineFunction:
    if n is None:
        t_max = grid.half_t if grid is not None else 60.0
        x_max = grid.half_x if grid is not None else 60.0
        h = 2 * math.pi / (1.1 * (x_max + t_max * half) + 40)
        n = int(2 * math.ceil(half / h)) + 1
    return LineFunction.sample(lambda y: np.exp(-y * y / 2), half, n)


def parabola_ratio(phi: LineFunction, grid: PlaneGrid) -> tuple[float, float]:
    """Tail-corrected ||parabola extension of phi||_6 / ||phi||_2 with its error bar."""
    est = lp_norm(extend_parabola(phi, grid), 6)
    val = est.corrected / phi.l2_norm()
    return val, val * est.error / est.corrected


def default_parabola_grid(half: float = 60.0, spacing: float = 0.5) -> PlaneGrid:
    n = int(2 * half / spacing)
    return PlaneGrid(half, half, n, n)


def estimate_RP(grid: PlaneGrid | None = None) -> RadiusEstimate:
    """Ratio at the Gaussian, the extremizer on the parabola."""
    grid = default_parabola_grid() if grid is None else grid
    val, err = parabola_ratio(gaussian_line(grid=grid), grid)
    return RadiusEstimate(val, err)


@dataclass(frozen=True)
class Comparison:
    circle: float
    circle_error: float
    parabola: float
    parabola_error: float
    threshold: float
    gap: float
    holds: bool


def strict_comparison(circle: RadiusEstimate, parabola: RadiusEstimate) -> Comparison:
    """Does circle > (5/2)^(1/6) parabola hold beyond the combined error bars?"""
    threshold = ANTIPODAL_GAIN * parabola.value
    gap = circle.value - threshold
    bars = circle.error + ANTIPODAL_GAIN * parabola.error
    return Comparison(circle.value, circle.error, parabola.value, parabola.error, threshold, gap, gap > bars)
