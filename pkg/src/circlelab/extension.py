"""Extension operators on plane grids and L^p norms with tail estimates.

Fields live on cell-centred uniform grids of [-X, X] x [-T, T]; the first
axis is the spatial variable x and the second the time-like variable t.
The circle extension uses the kernel exp(-i (x cos theta + t sin theta)),
the parabola extension the kernel exp(i x y - i t y^2 / 2).
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from circlelab.circle import Cap, CircleFunction, LineFunction

_HEADER = struct.Struct("<qqdd")


@dataclass(frozen=True)
class PlaneGrid:
    half_x: float
    half_t: float
    nx: int
    nt: int
    values: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.nx < 16 or self.nt < 16:
            raise ValueError(f"grid needs nx, nt >= 16, got {self.nx} x {self.nt}")
        if self.half_x <= 0 or self.half_t <= 0:
            raise ValueError("grid extents must be positive")
        if self.values is not None:
            v = np.asarray(self.values, dtype=np.complex128)
            if v.shape != (self.nx, self.nt):
                raise ValueError(f"values shape {v.shape} does not match ({self.nx}, {self.nt})")
            object.__setattr__(self, "values", v)

    @classmethod
    def square(cls, half_width: float, spacing: float) -> "PlaneGrid":
        n = max(16, int(math.ceil(2 * half_width / spacing)))
        return cls(half_width, half_width, n, n)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_x / self.nx

    @property
    def dt(self) -> float:
        return 2.0 * self.half_t / self.nt

    @property
    def cell_area(self) -> float:
        return self.dx * self.dt

    @property
    def x(self) -> np.ndarray:
        return -self.half_x + self.dx * (np.arange(self.nx) + 0.5)

    @property
    def t(self) -> np.ndarray:
        return -self.half_t + self.dt * (np.arange(self.nt) + 0.5)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.t, indexing="ij")

    def with_values(self, values: np.ndarray) -> "PlaneGrid":
        return replace(self, values=values)

    def refined(self, factor: int = 2) -> "PlaneGrid":
        """Same extents with ``factor`` times as many cells per axis."""
        return PlaneGrid(self.half_x, self.half_t, self.nx * factor, self.nt * factor)

    def enlarged(self, factor: float = 2.0) -> "PlaneGrid":
        """Extents and cell counts scaled together (spacing unchanged)."""
        return PlaneGrid(
            self.half_x * factor,
            self.half_t * factor,
            int(round(self.nx * factor)),
            int(round(self.nt * factor)),
        )

    def save(self, path: str | Path) -> None:
        if self.values is None:
            raise ValueError("grid has no values to save")
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(self.nx, self.nt, self.half_x, self.half_t))
            fh.write(np.ascontiguousarray(self.values, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "PlaneGrid":
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError("truncated grid file")
        nx, nt, hx, ht = _HEADER.unpack_from(raw)
        body = raw[_HEADER.size:]
        if len(body) != nx * nt * 16:
            raise ValueError(f"grid body has {len(body)} bytes, expected {nx * nt * 16}")
        vals = np.frombuffer(body, dtype="<c16").reshape(nx, nt).astype(np.complex128)
        return cls(hx, ht, nx, nt, vals)

    def to_csv(self, path: str | Path) -> None:
        if self.values is None:
            raise ValueError("grid has no values to export")
        xx, tt = self.mesh()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "t", "re", "im"])
            for a, b, v in zip(xx.ravel(), tt.ravel(), self.values.ravel()):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(v.real)), repr(float(v.imag))])


# ---------------------------------------------------------------- circle side


def _support(f: CircleFunction) -> tuple[np.ndarray, np.ndarray]:
    idx = np.flatnonzero(f.samples != 0)
    return f.theta[idx], f.samples[idx] * f.weight


def extend_circle_points(f: CircleFunction, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Trapezoidal extension sum evaluated at arbitrary points (x, t)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    theta, fw = _support(f)
    out = np.zeros(np.broadcast(x, t).shape, dtype=np.complex128)
    if theta.size == 0:
        return out
    xb, tb = np.broadcast_arrays(x, t)
    flat_x, flat_t = xb.reshape(-1), tb.reshape(-1)
    res = np.empty(flat_x.size, dtype=np.complex128)
    chunk = max(1, 2_000_000 // theta.size)
    c, s = np.cos(theta), np.sin(theta)
    for lo in range(0, flat_x.size, chunk):
        phase = np.outer(flat_x[lo:lo + chunk], c) + np.outer(flat_t[lo:lo + chunk], s)
        res[lo:lo + chunk] = np.exp(-1j * phase) @ fw
    return res.reshape(out.shape)


def extend_circle(f: CircleFunction, grid: PlaneGrid, method: str = "fast") -> PlaneGrid:
    """Extension of f sigma sampled on ``grid``.

    ``method="fast"`` factors the kernel into an x part and a t part and
    contracts with one matrix product; ``method="direct"`` sums row by row.
    """
    theta, fw = _support(f)
    x, t = grid.x, grid.t
    if theta.size == 0:
        return grid.with_values(np.zeros((grid.nx, grid.nt), dtype=np.complex128))
    if method == "fast":
        ax = np.exp(-1j * np.outer(x, np.cos(theta))) * fw
        bt = np.exp(-1j * np.outer(t, np.sin(theta)))
        vals = ax @ bt.T
    elif method == "direct":
        vals = np.empty((grid.nx, grid.nt), dtype=np.complex128)
        s = np.sin(theta)
        c = np.cos(theta)
        for i, xi in enumerate(x):
            vals[i] = np.exp(-1j * (xi * c[None, :] + t[:, None] * s[None, :])) @ fw
    else:
        raise ValueError(f"unknown method {method!r}")
    return grid.with_values(vals)


def adjoint_extend(field_values: np.ndarray, grid: PlaneGrid, n: int) -> np.ndarray:
    """Adjoint of :func:`extend_circle` for the grid and circle quadratures.

    Returns the n samples of  sum_ij F_ij exp(i (x_i cos theta + t_j sin theta)) dA.
    """
    theta = 2 * math.pi * np.arange(n) / n
    ax = np.exp(1j * np.outer(grid.x, np.cos(theta)))
    bt = np.exp(1j * np.outer(grid.t, np.sin(theta)))
    partial = field_values @ bt
    return np.sum(ax * partial, axis=0) * grid.cell_area


# ------------------------------------------------------------- parabola side


def extend_parabola(phi: LineFunction, grid: PlaneGrid, endpoint_tol: float = 1e-8) -> PlaneGrid:
    """Trapezoidal evaluation of  int exp(i x y - i t y^2/2) phi(y) dy  on ``grid``."""
    scale = float(np.max(np.abs(phi.values))) if phi.values.size else 0.0
    edge = max(abs(phi.values[0]), abs(phi.values[-1]))
    if scale > 0 and edge > endpoint_tol * scale:
        raise ValueError(f"phi is not negligible at the ends of its interval ({edge:.2e})")
    w = phi.weights() * phi.values
    ax = np.exp(1j * np.outer(grid.x, phi.y))
    bt = np.exp(-0.5j * np.outer(phi.y**2, grid.t)) * w[:, None]
    return grid.with_values(ax @ bt)


def gaussian_parabola_field(grid: PlaneGrid, amplitude: float = math.sqrt(2 * math.pi)) -> np.ndarray:
    """Closed form of the parabola extension of exp(-y^2/2): c (1+it)^(-1/2) exp(-x^2/(2(1+it)))."""
    xx, tt = grid.mesh()
    a = 1.0 + 1j * tt
    return amplitude * np.exp(-0.5 * xx**2 / a) / np.sqrt(a)


# ----------------------------------------------------------------- L^p norms


@dataclass(frozen=True)
class NormEstimate:
    """Truncated L^p norm plus an estimate of the mass |u|^p outside the box."""

    p: float
    truncated: float  # integral of |u|^p over the box
    tail: float  # estimated integral of |u|^p outside the box
    tail_error: float

    @property
    def norm(self) -> float:
        return self.truncated ** (1.0 / self.p)

    @property
    def total(self) -> float:
        return self.truncated + self.tail

    @property
    def corrected(self) -> float:
        return self.total ** (1.0 / self.p)

    @property
    def relative_tail(self) -> float:
        return self.tail / self.total if self.total > 0 else 0.0

    @property
    def error(self) -> float:
        """Error bar on ``corrected`` from the tail model."""
        if self.total <= 0:
            return 0.0
        return self.corrected * self.tail_error / (self.p * self.total)


def _boundary_radius(phi: np.ndarray, hx: float, ht: float) -> np.ndarray:
    c = np.abs(np.cos(phi))
    s = np.abs(np.sin(phi))
    with np.errstate(divide="ignore"):
        rx = np.where(c > 0, hx / np.where(c > 0, c, 1.0), np.inf)
        rt = np.where(s > 0, ht / np.where(s > 0, s, 1.0), np.inf)
    return np.minimum(rx, rt)


def power_tail(
    density: np.ndarray,
    grid: PlaneGrid,
    decay: float,
    band: float = 0.15,
    bins: int = 72,
) -> tuple[float, float]:
    """Mass of ``density`` outside the box, assuming density ~ C(angle) R^(-decay).

    The angular profile C is read off a band along the box boundary.  The
    second value is an error bar built from the spread between the inner and
    outer halves of the band.
    """
    if decay <= 2:
        return math.inf, math.inf
    xx, tt = grid.mesh()
    rel = np.maximum(np.abs(xx) / grid.half_x, np.abs(tt) / grid.half_t)
    radius = np.hypot(xx, tt)
    angle = np.arctan2(tt, xx)
    q = density * radius**decay
    in_band = rel >= 1.0 - band
    inner = in_band & (rel < 1.0 - band / 2)
    outer = in_band & ~inner
    edges = np.linspace(-math.pi, math.pi, bins + 1)
    which = np.clip(np.digitize(angle, edges) - 1, 0, bins - 1)

    # integral over each bin of R_b(phi)^(2 - decay) d phi / (decay - 2)
    sub = 64
    fine = edges[:-1, None] + (np.arange(sub)[None, :] + 0.5) * (edges[1] - edges[0]) / sub
    geom = np.mean(_boundary_radius(fine, grid.half_x, grid.half_t) ** (2 - decay), axis=1)
    geom *= (edges[1] - edges[0]) / (decay - 2)

    def tail_for(mask: np.ndarray) -> float:
        sums = np.bincount(which[mask], weights=q[mask], minlength=bins)
        counts = np.bincount(which[mask], minlength=bins)
        means = np.divide(sums, counts, out=np.zeros(bins), where=counts > 0)
        return float(np.sum(means * geom))

    full = tail_for(in_band)
    spread = abs(tail_for(inner) - tail_for(outer))
    return full, spread + 0.1 * full


def lp_norm(grid: PlaneGrid, p: float, decay: float | None = None) -> NormEstimate:
    """L^p norm of the grid field by the midpoint rule, with a far-field tail estimate.

    ``decay`` is the assumed power law of |u|^p at infinity; it defaults to
    p/2, the rate set by the R^(-1/2) stationary-phase decay of curved
    extensions.
    """
    if grid.values is None:
        raise ValueError("grid has no values")
    if p < 1:
        raise ValueError("p must be >= 1")
    dens = np.abs(grid.values) ** p
    inside = float(np.sum(dens) * grid.cell_area)
    rate = p / 2 if decay is None else decay
    tail, err = power_tail(dens, grid, rate)
    return NormEstimate(p, inside, tail, err)


def density_integral(density: np.ndarray, grid: PlaneGrid, decay: float) -> NormEstimate:
    """Integral of a nonnegative density on the grid with the same tail model (p = 1)."""
    inside = float(np.sum(density) * grid.cell_area)
    tail, err = power_tail(density, grid, decay)
    return NormEstimate(1.0, inside, tail, err)


# ------------------------------------------------------- cap rescaling checks


@dataclass(frozen=True)
class CapProfile:
    """A profile g on the line glued onto a cap of radius r through the rescaled chart.

    On the circle the function is  f(chart(y)) = r^(-1/2) g(y) (1 - r^2 y^2)^(1/4)
    with chart(y) = rotation of (r y, sqrt(1 - r^2 y^2)).
    """

    g: Callable[[np.ndarray], np.ndarray]
    r: float
    center: float = math.pi / 2
    y_max: float = 0.0

    def __post_init__(self) -> None:
        if not (0 < self.r <= 0.5):
            raise ValueError("profile radius must lie in (0, 1/2]")
        ymax = self.y_max if self.y_max > 0 else 0.5 / self.r
        if self.r * ymax > 0.5 + 1e-12:
            raise ValueError("profile support must satisfy r*|y| <= 1/2")
        object.__setattr__(self, "y_max", ymax)

    def line(self, n: int) -> LineFunction:
        return LineFunction.sample(self.g, self.y_max, n)

    def on_circle(self, n: int) -> CircleFunction:
        theta = 2 * math.pi * np.arange(n) / n
        d = self.center - theta
        y = np.sin(d) / self.r
        live = (np.cos(d) > 0) & (np.abs(y) <= self.y_max)
        vals = np.zeros(n, dtype=np.complex128)
        yl = y[live]
        vals[live] = self.g(yl) * (1 - (self.r * yl) ** 2) ** 0.25 / math.sqrt(self.r)
        return CircleFunction(vals)


def _cap_frame(grid: PlaneGrid, center: float) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of the grid points in the frame where the cap sits at the north pole."""
    xx, tt = grid.mesh()
    rot = center - math.pi / 2
    c, s = math.cos(rot), math.sin(rot)
    return c * xx + s * tt, -s * xx + c * tt


def cap_phase(t: np.ndarray, y: np.ndarray, r: float) -> np.ndarray:
    """exp(i t ((sqrt(1 - r^2 y^2) - 1)/r^2 + y^2/2)), the curvature correction factor."""
    ry2 = (r * y) ** 2
    # (sqrt(1-u)-1)/r^2 written to avoid cancellation
    corr = -y**2 / (1.0 + np.sqrt(1.0 - ry2)) + 0.5 * y**2
    return np.exp(1j * t * corr)


def _line_transform(line: LineFunction, xs: np.ndarray, ts: np.ndarray, weight_fn) -> np.ndarray:
    """sum_k w_k exp(i x y_k - i t y_k^2/2) weight_fn(t, y_k) g(y_k), per (x, t) pair."""
    w = line.weights() * line.values
    out = np.empty(xs.size, dtype=np.complex128)
    chunk = max(1, 1_000_000 // line.y.size)
    for lo in range(0, xs.size, chunk):
        xc = xs[lo:lo + chunk, None]
        tc = ts[lo:lo + chunk, None]
        ker = np.exp(1j * xc * line.y[None, :] - 0.5j * tc * line.y[None, :] ** 2) * weight_fn(tc, line.y[None, :])
        out[lo:lo + chunk] = ker @ w
    return out


def rescaling_identity_residual(
    profile: CapProfile,
    grid: PlaneGrid,
    n_circle: int = 2048,
    n_line: int = 4001,
) -> float:
    """Max over the grid of | |circle extension| - |rescaled parabolic form| |.

    The right side is  r^(1/2) | int exp(i r x y - i r^2 t y^2/2) h(r^2 t, y)
    g(y) (1 - r^2 y^2)^(-1/4) dy |, an exact change of variables of the left.
    """
    r = profile.r
    f = profile.on_circle(n_circle)
    lhs = np.abs(extend_circle(f, grid).values)
    xs, ts = _cap_frame(grid, profile.center)
    line = profile.line(n_line)

    def weight(tc, y):
        return cap_phase(tc, y, r) * (1 - (r * y) ** 2) ** -0.25

    rhs = math.sqrt(r) * np.abs(_line_transform(line, r * xs.ravel(), r * r * ts.ravel(), weight))
    return float(np.max(np.abs(lhs - rhs.reshape(lhs.shape))))


def smallcap_schrodinger_gap(profile: CapProfile, grid: PlaneGrid, n_line: int = 4001) -> float:
    """Grid L^6 norm of (cap-phase extension of g) minus (parabola extension of g)."""
    r = profile.r
    line = profile.line(n_line)
    xx, tt = grid.mesh()

    def weight(tc, y):
        return cap_phase(tc, y, r) * (1 - (r * y) ** 2) ** -0.25

    capped = _line_transform(line, xx.ravel(), tt.ravel(), weight).reshape(xx.shape)
    flat = extend_parabola(line, grid, endpoint_tol=1.0).values
    return lp_norm(grid.with_values(capped - flat), 6).norm
