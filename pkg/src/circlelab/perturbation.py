"""First-order behaviour of the Strichartz ratio along a quartic deformation of the Gaussian.

The family is  w_eps(t, x) = int exp(-i x y) exp(-(1+it)(y^2/2 + eps y^4/8)) (1 + eps y^2/2) dy
with profile g_eps = exp(-y^2/2 - eps y^4/8), whose squared norm is taken against
the weight (1 + eps y^2/2) dy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from circlelab.extension import NormEstimate, PlaneGrid, gaussian_parabola_field, lp_norm
from circlelab.trilinear import concentrating_cap_function, richardson_halving
from circlelab.extension import extend_circle

# amplitude cutoff for the y quadrature: exp(-y^2/2) < 1e-17 beyond this
Y_MAX = 9.0
DEFAULT_STEPS = (0.04, 0.02, 0.01, 0.005)


def _trapezoid_line(n: int, half: float) -> tuple[np.ndarray, np.ndarray]:
    y = np.linspace(-half, half, n)
    w = np.full(n, y[1] - y[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return y, w


def g_norm_sq(eps: float, n: int = 4001) -> float:
    """int exp(-y^2 - eps y^4/4) (1 + eps y^2/2) dy."""
    y, w = _trapezoid_line(n, 12.0)
    return float(np.sum(w * np.exp(-y * y - eps * y**4 / 4) * (1 + eps * y * y / 2)))


def _line_points(grid: PlaneGrid, eps: float) -> int:
    """Trapezoid size that keeps aliasing of the oscillatory y integrand negligible."""
    slope = max(abs(grid.x).max(), 1.0) + grid.half_t * (Y_MAX + eps * Y_MAX**3 / 2) + 20.0
    h = 2 * math.pi / (1.1 * slope + 40.0)
    return int(2 * math.ceil(Y_MAX / h)) + 1


def w_eps_field(eps: float, grid: PlaneGrid, n_line: int | None = None) -> PlaneGrid:
    if eps < 0:
        raise ValueError("eps must be >= 0")
    n = _line_points(grid, eps) if n_line is None else n_line
    y, w = _trapezoid_line(n, Y_MAX)
    quart = y * y / 2 + eps * y**4 / 8
    amp = w * (1 + eps * y * y / 2)
    ax = np.exp(-1j * np.outer(grid.x, y))
    out = np.empty((grid.nx, grid.nt), dtype=np.complex128)
    # blocks of t keep the (n_line x block) factor small
    block = max(1, 4_000_000 // n)
    t = grid.t
    for lo in range(0, t.size, block):
        tb = t[lo:lo + block]
        fac = np.exp(-np.outer(quart, 1 + 1j * tb)) * amp[:, None]
        out[:, lo:lo + block] = ax @ fac
    return grid.with_values(out)


def w6(eps: float, grid: PlaneGrid) -> NormEstimate:
    return lp_norm(w_eps_field(eps, grid), 6)


def gaussian_amplitude(n: int = 2001) -> float:
    """c0 = |w_0(0, 0)| measured by quadrature."""
    y, w = _trapezoid_line(n, 12.0)
    return float(np.sum(w * np.exp(-y * y / 2)))


def gaussian_moments(n: int = 2001) -> dict[str, float]:
    """Quadrature values of the x moments of exp(-3x^2) and the t integrals of (1+t^2)^(-2)."""
    x, wx = _trapezoid_line(n, 8.0)
    e = np.exp(-3 * x * x)
    # t = tan(tau) turns the t integrals into smooth periodic ones
    tau = -math.pi / 2 + math.pi * (np.arange(n) + 0.5) / n
    dtau = math.pi / n
    return {
        "x0": float(np.sum(wx * e)),
        "x2": float(np.sum(wx * x * x * e)),
        "x4": float(np.sum(wx * x**4 * e)),
        "t0": float(np.sum(np.cos(tau) ** 2) * dtau),
        "t2": float(np.sum(np.sin(tau) ** 2) * dtau),
    }


MOMENT_CLOSED_FORMS = {
    "x0": math.sqrt(math.pi / 3),
    "x2": math.sqrt(math.pi) / (6 * math.sqrt(3)),
    "x4": math.sqrt(math.pi) / (12 * math.sqrt(3)),
    "t0": math.pi / 2,
    "t2": math.pi / 2,
}


def derivative_integrand(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """6 Re[-x^4/8 (1+it)^-3 + x^2/4 (1+it)^-2 + (1+it)^-1/8] (1+t^2)^(-3/2) exp(-3x^2/(1+t^2))."""
    a = 1 + 1j * t
    bracket = -(x**4) / 8 / a**3 + x * x / 4 / a**2 + 1 / (8 * a)
    return 6 * bracket.real * (1 + t * t) ** -1.5 * np.exp(-3 * x * x / (1 + t * t))


def closed_form_derivative(n: int = 801) -> float:
    """d/d eps of ||w_eps||_6^6 at 0, divided by c0^6, by 2-D quadrature of the exact integrand.

    Uses x = sqrt(1+t^2) s and t = tan(tau) so the integrand is smooth on a
    bounded box.
    """
    s, ws = _trapezoid_line(n, 8.0)
    tau = -math.pi / 2 + math.pi * (np.arange(n) + 0.5) / n
    t = np.tan(tau)
    jac = (1 + t * t) * np.sqrt(1 + t * t) * (math.pi / n)
    ss, tt = np.meshgrid(s, t, indexing="ij")
    vals = derivative_integrand(ss * np.sqrt(1 + tt * tt), tt)
    return float(np.sum(vals * ws[:, None] * jac[None, :]))


def reduced_derivative(moments: dict[str, float]) -> float:
    """The same derivative assembled from the Gaussian moments and the two t integrals."""
    # bracket after x = sqrt(1+t^2) s: -3/4 s^4 (1-3t^2) + 3/2 s^2 (1-t^2) + 3/4, all over (1+t^2)^2
    m0, m2, m4 = moments["x0"], moments["x2"], moments["x4"]
    t0, t2 = moments["t0"], moments["t2"]
    const = -0.75 * m4 + 1.5 * m2 + 0.75 * m0
    quad = 2.25 * m4 - 1.5 * m2
    return const * t0 + quad * t2


def gaussian_w6_closed(c0: float) -> float:
    """||w_0||_6^6 = c0^6 int (1+t^2)^(-3/2) exp(-3x^2/(1+t^2)) = c0^6 pi^(3/2)/sqrt(3)."""
    return c0**6 * math.pi**1.5 / math.sqrt(3)


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    error: float
    differences: tuple[float, ...]


def _extrapolated(diffs: list[float]) -> DerivativeEstimate:
    best = richardson_halving(np.array(diffs))
    lower = richardson_halving(np.array(diffs[:-1])) if len(diffs) > 2 else diffs[-1]
    return DerivativeEstimate(best, abs(best - lower), tuple(diffs))


def _check_steps(steps: tuple[float, ...]) -> None:
    if not steps or any(not (0 < s <= 0.1) for s in steps):
        raise ValueError("finite-difference steps must lie in (0, 0.1]")


def g_ratio_derivative(steps: tuple[float, ...] = DEFAULT_STEPS) -> DerivativeEstimate:
    """3 d/d eps ||g_eps||^2 / ||g_0||^2 at eps = 0 from one-sided differences."""
    _check_steps(steps)
    base = g_norm_sq(0.0)
    diffs = [3 * (g_norm_sq(s) - base) / (s * base) for s in steps]
    return _extrapolated(diffs)


def w_ratio_derivative(grid: PlaneGrid, steps: tuple[float, ...] = DEFAULT_STEPS) -> tuple[DerivativeEstimate, NormEstimate]:
    """d/d eps ||w_eps||_6^6 / ||w_0||_6^6 at eps = 0 from one-sided differences."""
    _check_steps(steps)
    base = w6(0.0, grid)
    diffs = [(w6(s, grid).total - base.total) / (s * base.total) for s in steps]
    est = _extrapolated(diffs)
    # the tail model error is largely common to all eps; keep a share of it
    err = est.error + 0.01 * base.tail_error / base.total
    return DerivativeEstimate(est.value, err, est.differences), base


@dataclass(frozen=True)
class PerturbationReport:
    w_ratio: DerivativeEstimate
    g_ratio: DerivativeEstimate
    psi_prime: float
    psi_error: float
    closed_form_ratio: float
    w0_norm6: NormEstimate
    c0: float


def default_grid(half: float = 60.0, spacing: float = 0.5) -> PlaneGrid:
    n = int(2 * half / spacing)
    return PlaneGrid(half, half, n, n)


def psi_prime_at_zero(grid: PlaneGrid | None = None, steps: tuple[float, ...] = DEFAULT_STEPS) -> PerturbationReport:
    """Derivative of log(||w_eps||_6^6 / ||g_eps||^6) at eps = 0, by finite differences.

    The closed-form integrand route is returned alongside as an independent check
    of the w part.
    """
    grid = default_grid() if grid is None else grid
    w_est, base = w_ratio_derivative(grid, steps)
    g_est = g_ratio_derivative(steps)
    c0 = gaussian_amplitude()
    closed = c0**6 * closed_form_derivative() / base.total
    return PerturbationReport(
        w_est,
        g_est,
        w_est.value - g_est.value,
        w_est.error + g_est.error,
        closed,
        base,
        c0,
    )


def gaussian_field_error(grid: PlaneGrid) -> float:
    """Max pointwise gap between the eps = 0 quadrature field and its closed form."""
    return float(np.max(np.abs(w_eps_field(0.0, grid).values - gaussian_parabola_field(grid))))


# ---------------------------------------------------------- rescaled circle realization


def v_eps_field(eps: float, grid: PlaneGrid, n_line: int | None = None) -> PlaneGrid:
    """eps^(-1/4) u_eps(t/eps, x/sqrt(eps)) for the concentrating cap family, by quadrature in
    the rescaled variable eta (exact square roots, overall phase exp(-i t/eps) dropped)."""
    half = 0.5 / math.sqrt(eps)
    if n_line is None:
        slope = abs(grid.x).max() + grid.half_t * half + 20
        n_line = int(2 * math.ceil(half * (1.1 * slope + 40) / (2 * math.pi))) + 1
    eta, w = _trapezoid_line(n_line, half)
    root = np.sqrt(1 - eps * eta * eta)
    amp = w * np.exp((root - 1) / eps) / root
    # the cap indicator cuts the profile at |eta| = half, so the end weights are full-size
    ax = np.exp(-1j * np.outer(grid.x, eta)) * amp
    bt = np.exp(-1j * np.outer((root - 1) / eps, grid.t))
    return grid.with_values(ax @ bt)


@dataclass(frozen=True)
class RescaleCheck:
    u_norm: float
    v_norm: float
    relative_gap: float


def rescaled_norm_check(eps: float, reach: float = 30.0, spacing: float = 0.5, n_circle: int | None = None) -> RescaleCheck:
    """||u_eps||_6 on the circle versus ||v_eps||_6 in rescaled variables."""
    nv = int(2 * reach / spacing)
    gv = PlaneGrid(reach, reach, nv, nv)
    gu = PlaneGrid(reach / math.sqrt(eps), reach / eps, nv, nv)
    if n_circle is None:
        n_circle = int(2 ** math.ceil(math.log2(math.hypot(gu.half_x, gu.half_t) + 64))) * 2
    u = lp_norm(extend_circle(concentrating_cap_function(eps, n_circle), gu), 6).corrected
    v = lp_norm(v_eps_field(eps, gv), 6).corrected
    return RescaleCheck(u, v, abs(u - v) / v)
