"""Functions on the unit circle, caps, symmetrization and cap pullbacks.

Points of the circle are parametrized by the angle ``theta`` with
``z(theta) = (cos theta, sin theta)``.  The antipode of ``z`` is ``theta + pi``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi
# slack used when deciding membership on cap boundaries
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class CircleFunction:
    """Complex samples of a function on a uniform angle grid.

    ``samples[k]`` is the value at ``theta_k = 2 pi k / N``.  The grid size
    must be even so that the antipodal map is a grid permutation.
    """

    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        n = arr.shape[0]
        if n < 8 or n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {n}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], n: int) -> "CircleFunction":
        theta = TWO_PI * np.arange(n) / n
        return cls(np.broadcast_to(func(theta), (n,)).astype(np.complex128))

    @classmethod
    def constant(cls, n: int, value: complex = 1.0) -> "CircleFunction":
        return cls(np.full(n, value, dtype=np.complex128))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def theta(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n) / self.n

    @property
    def weight(self) -> float:
        """Quadrature weight of one grid point (arc length)."""
        return TWO_PI / self.n

    def l2_norm(self) -> float:
        return float(math.sqrt(self.weight * np.sum(np.abs(self.samples) ** 2)))

    def inner(self, other: "CircleFunction") -> complex:
        self._check_same_grid(other)
        return complex(self.weight * np.sum(self.samples * np.conj(other.samples)))

    def normalized(self) -> "CircleFunction":
        norm = self.l2_norm()
        if norm == 0.0:
            raise ValueError("cannot normalize the zero function")
        return CircleFunction(self.samples / norm)

    def is_nonnegative(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.samples))))
        return bool(np.all(np.abs(self.samples.imag) <= tol * scale) and np.all(self.samples.real >= -tol * scale))

    def antipodal(self) -> "CircleFunction":
        """The reflection ``z -> f(-z)``."""
        return CircleFunction(np.roll(self.samples, -self.n // 2))

    def rotated(self, steps: int) -> "CircleFunction":
        """Rotate by ``steps`` grid cells: the result at theta is f(theta - steps*h)."""
        return CircleFunction(np.roll(self.samples, steps))

    def is_even(self, tol: float = 1e-12) -> bool:
        """True when conj(f(-z)) == f(z) at every node."""
        scale = max(1.0, float(np.max(np.abs(self.samples))))
        return bool(np.max(np.abs(np.conj(self.antipodal().samples) - self.samples)) <= tol * scale)

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        """Trigonometric interpolation of the samples at arbitrary angles."""
        theta = np.asarray(theta, dtype=float)
        n = self.n
        coef = np.fft.fft(self.samples) / n
        k = np.fft.fftfreq(n, d=1.0 / n)
        # split the Nyquist mode evenly so real data interpolates to real values
        nyq = n // 2
        coef_nyq = coef[nyq]
        coef = coef.copy()
        coef[nyq] = 0.0
        flat = theta.reshape(-1)
        out = np.exp(1j * np.outer(flat, k)) @ coef
        out += coef_nyq * np.cos(nyq * flat)
        return out.reshape(theta.shape)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "re", "im"])
            for th, val in zip(self.theta, self.samples):
                writer.writerow([repr(float(th)), repr(float(val.real)), repr(float(val.imag))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "CircleFunction":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["theta", "re", "im"]:
                raise ValueError(f"expected columns theta,re,im in {path}")
            rows = [(float(r["theta"]), float(r["re"]), float(r["im"])) for r in reader]
        data = np.array(rows, dtype=float).reshape(-1, 3)
        out = cls(data[:, 1] + 1j * data[:, 2])
        if not np.allclose(data[:, 0], out.theta, atol=1e-12):
            raise ValueError("theta column is not the uniform grid 2*pi*k/N")
        return out

    def _check_same_grid(self, other: "CircleFunction") -> None:
        if other.n != self.n:
            raise ValueError(f"grid mismatch: {self.n} vs {other.n}")


def symmetrize(f: CircleFunction) -> CircleFunction:
    """Antipodal symmetrization f*(z) = sqrt((f(z)^2 + f(-z)^2) / 2) of a nonnegative f."""
    if not f.is_nonnegative():
        raise ValueError("symmetrization is defined for nonnegative functions")
    a = np.clip(f.samples.real, 0.0, None)
    b = np.roll(a, -f.n // 2)
    return CircleFunction(np.sqrt(0.5 * (a * a + b * b)))


@dataclass(frozen=True)
class Cap:
    """Cap {y : y.z > 0, |projection of y onto z-perp| < radius} with z = z(center)."""

    center: float
    radius: float

    def __post_init__(self) -> None:
        if not (0.0 < self.radius <= 1.0):
            raise ValueError(f"cap radius must lie in (0, 1], got {self.radius}")
        object.__setattr__(self, "center", float(self.center) % TWO_PI)

    @property
    def unit_vector(self) -> np.ndarray:
        return np.array([math.cos(self.center), math.sin(self.center)])

    @property
    def half_angle(self) -> float:
        return math.asin(self.radius)

    def measure(self) -> float:
        """Exact arc length of the cap."""
        return 2.0 * self.half_angle

    def contains(self, theta: np.ndarray) -> np.ndarray:
        d = np.asarray(theta, dtype=float) - self.center
        return (np.cos(d) > EDGE_TOL) & (np.abs(np.sin(d)) < self.radius - EDGE_TOL)

    def mask(self, n: int) -> np.ndarray:
        return self.contains(TWO_PI * np.arange(n) / n)

    def grid_measure(self, n: int) -> float:
        """Arc length of the cap as seen by the n-point quadrature."""
        return float(np.count_nonzero(self.mask(n))) * TWO_PI / n

    def negated(self) -> "Cap":
        return Cap(self.center + math.pi, self.radius)

    def indicator(self, n: int, normalized: bool = False) -> CircleFunction:
        m = self.mask(n).astype(float)
        if normalized:
            m /= math.sqrt(self.grid_measure(n))
        return CircleFunction(m)


def cap_distance(a: Cap, b: Cap) -> float:
    """r/r' + r'/r + |z - z'|/r.  Not symmetric in its arguments."""
    chord = float(np.linalg.norm(a.unit_vector - b.unit_vector))
    return a.radius / b.radius + b.radius / a.radius + chord / a.radius


def cap_class_distance(a: Cap, b: Cap) -> float:
    """Distance between the classes {C, -C} and {C', -C'}."""
    return min(cap_distance(a, b), cap_distance(a.negated(), b))


@dataclass(frozen=True)
class LineFunction:
    """Samples of a function on a uniform grid of the real line."""

    y: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        v = np.asarray(self.values, dtype=np.complex128)
        if y.ndim != 1 or y.shape != v.shape or y.size < 2:
            raise ValueError("y and values must be matching 1-d arrays")
        step = np.diff(y)
        if not np.allclose(step, step[0], rtol=1e-9, atol=0.0) or step[0] <= 0:
            raise ValueError("y must be uniform and increasing")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, func: Callable[[np.ndarray], np.ndarray], half_width: float, n: int) -> "LineFunction":
        y = np.linspace(-half_width, half_width, n)
        return cls(y, func(y))

    @property
    def step(self) -> float:
        return float(self.y[1] - self.y[0])

    def weights(self) -> np.ndarray:
        w = np.full(self.y.size, self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def l2_norm(self) -> float:
        return float(math.sqrt(np.sum(self.weights() * np.abs(self.values) ** 2)))


def pullback(f: CircleFunction, cap: Cap, m: int = 257, support_tol: float = 1e-10) -> LineFunction:
    """Pull f back to [-1, 1] through the cap chart.

    The chart sends y to the rotation of (r y, sqrt(1 - r^2 y^2)) that carries
    the north pole to the cap center; the returned samples are
    r^(1/2) f(chart(y)).  f must live in the open half circle around the center.
    """
    total = np.sum(np.abs(f.samples) ** 2)
    half = Cap(cap.center, 1.0)
    outside = np.sum(np.abs(f.samples[~half.mask(f.n)]) ** 2)
    if total > 0 and outside > support_tol * total:
        raise ValueError("f is not supported in the half circle concentric with the cap")
    y = np.linspace(-1.0, 1.0, m)
    theta = cap.center - np.arcsin(cap.radius * y)
    return LineFunction(y, math.sqrt(cap.radius) * f.evaluate(theta))
