"""Type-M rough surfaces: random cosine-wave superpositions over [-L, L]^2.

The height function is

    z(x, y) = sum_{m=-M..M} sum_{n=-N..N} a[m, n] * cos(2 pi (m x + n y) + phi[m, n])

with standard-normal pre-coefficients (optionally decayed by frequency) and
uniform phases in [0, pi), rescaled so that max |z| over the evaluation grid
equals the requested amplitude. Also provides the metric tensor, the
Laplace-Beltrami diffusion tensor and its closed-form eigensystem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSurfaceError, InvalidArgument

TWO_PI = 2.0 * np.pi


def make_rng(seed, stream=0):
    """The one generator family used for every stochastic draw (PCG64).

    Stream 0 seeds PCG64 with ``seed`` directly; other streams are
    independent children of the same seed.
    """
    if stream == 0:
        return np.random.Generator(np.random.PCG64(int(seed)))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


def sample_wave_coefficients(M, N, beta=0.0, seed=0, mu=0.0, sigma=1.0):
    """Draw pre-coefficients and phases, both of shape (2M+1, 2N+1).

    Normal draws come first, then the phases, from a single PCG64 stream.
    With ``beta > 0`` each draw is damped by ``(m^2 + n^2)^(-beta/2)`` and
    the (0, 0) coefficient is zeroed.
    """
    if M < 0 or N < 0:
        raise InvalidArgument(f"M and N must be >= 0, got M={M}, N={N}")
    if beta < 0:
        raise InvalidArgument(f"beta must be >= 0, got {beta}")
    rng = make_rng(seed)
    shape = (2 * M + 1, 2 * N + 1)
    pre = mu + sigma * rng.standard_normal(shape)
    phases = rng.uniform(0.0, np.pi, shape)
    if beta > 0:
        m = np.arange(-M, M + 1)[:, None]
        n = np.arange(-N, N + 1)[None, :]
        r2 = (m * m + n * n).astype(float)
        decay = np.zeros_like(r2)
        nz = r2 > 0
        decay[nz] = r2[nz] ** (-beta / 2.0)
        pre = pre * decay
    return pre, phases


def scale_to_amplitude(z_pre, delta):
    """Factor s = delta / max|z_pre| so that max|s * z_pre| = delta."""
    if delta < 0:
        raise InvalidArgument(f"amplitude must be >= 0, got {delta}")
    if delta == 0:
        return 0.0
    zmax = float(np.max(np.abs(z_pre)))
    if not zmax > 0:
        raise DegenerateSurfaceError("pre-surface is identically zero; cannot scale to a positive amplitude")
    return delta / zmax


@dataclass(frozen=True)
class WaveSurface:
    """Analytic rough surface. ``coeffs`` are the already-scaled a[m, n]."""

    M: int
    N: int
    coeffs: np.ndarray
    phases: np.ndarray
    L: float = 1.0
    amplitude: float = 0.0
    beta: float = 0.0
    seed: int = 0
    pre_coeffs: np.ndarray = field(default=None, repr=False)

    @property
    def _complex_coeffs(self):
        return self.coeffs * np.exp(1j * self.phases)

    def _modes(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        m = np.arange(-self.M, self.M + 1)
        n = np.arange(-self.N, self.N + 1)
        ex = np.exp(1j * TWO_PI * np.outer(x, m))
        ey = np.exp(1j * TWO_PI * np.outer(y, n))
        return ex, ey, m, n

    def _eval(self, x, y, weights):
        shape = np.shape(x)
        ex, ey, m, n = self._modes(x, y)
        out = []
        for w in weights:
            c = self._complex_coeffs * w(m[:, None], n[None, :])
            out.append(np.real(np.sum((ex @ c) * ey, axis=1)).reshape(shape))
        return out

    def height(self, x, y):
        return self._eval(x, y, [lambda m, n: 1.0])[0]

    def gradient(self, x, y):
        """Analytic (z_x, z_y)."""
        return tuple(self._eval(x, y, [
            lambda m, n: 1j * TWO_PI * m,
            lambda m, n: 1j * TWO_PI * n,
        ]))

    def hessian(self, x, y):
        """Analytic (z_xx, z_xy, z_yy)."""
        return tuple(self._eval(x, y, [
            lambda m, n: -(TWO_PI ** 2) * m * m,
            lambda m, n: -(TWO_PI ** 2) * m * n,
            lambda m, n: -(TWO_PI ** 2) * n * n,
        ]))

    def rescaled(self, amplitude, x, y):
        """Same random draw, new amplitude; max is taken over the points (x, y)."""
        pre = self.coeffs if self.pre_coeffs is None else self.pre_coeffs
        unit = WaveSurface(self.M, self.N, pre, self.phases, self.L, 1.0, self.beta, self.seed, pre)
        s = scale_to_amplitude(unit.height(x, y), amplitude)
        return WaveSurface(self.M, self.N, s * pre, self.phases, self.L, amplitude, self.beta, self.seed, pre)


def eval_surface(surface, points):
    """Heights and analytic gradients at an (P, 2) array of points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise InvalidArgument("points must be finite")
    x, y = pts[:, 0], pts[:, 1]
    zx, zy = surface.gradient(x, y)
    return surface.height(x, y), zx, zy


def make_wave_surface(M, N, amplitude, grid, beta=0.0, seed=0):
    """Sample and scale a type-M surface; the sup-norm is taken over ``grid`` nodes."""
    pre, phases = sample_wave_coefficients(M, N, beta, seed)
    unit = WaveSurface(M, N, pre, phases, grid.L, 1.0, beta, seed, pre)
    return unit.rescaled(amplitude, grid.X, grid.Y)


@dataclass(frozen=True)
class MetricField:
    """Nodal first fundamental form and diffusion tensor sqrt(g) G^-1."""

    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    g: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    A4: np.ndarray
    inv_sqrt_g: np.ndarray

    @property
    def size(self):
        return self.g.size


def metric_fields(zx, zy):
    zx = np.asarray(zx, dtype=float)
    zy = np.asarray(zy, dtype=float)
    if zx.shape != zy.shape:
        raise InvalidArgument(f"gradient shapes differ: {zx.shape} vs {zy.shape}")
    g = 1.0 + zx * zx + zy * zy
    inv_sqrt_g = 1.0 / np.sqrt(g)
    return MetricField(
        g11=1.0 + zx * zx,
        g12=zx * zy,
        g22=1.0 + zy * zy,
        g=g,
        A1=(1.0 + zy * zy) * inv_sqrt_g,
        A2=-zx * zy * inv_sqrt_g,
        A4=(1.0 + zx * zx) * inv_sqrt_g,
        inv_sqrt_g=inv_sqrt_g,
    )


@dataclass(frozen=True)
class EigenField:
    lam_max: np.ndarray
    lam_min: np.ndarray
    dir_max: np.ndarray  # (n, 2)
    dir_min: np.ndarray  # (n, 2)
    flat: np.ndarray  # bool mask, directions defaulted to the axes


def diffusion_eigensystem(metric, zx, zy):
    """Closed-form eigenpairs of the diffusion tensor.

    The large eigenvalue sqrt(g) belongs to the contour tangent (-z_y, z_x),
    the small one 1/sqrt(g) to the gradient direction (z_x, z_y). At nodes
    with a vanishing gradient the tensor is the identity and the coordinate
    axes are returned.
    """
    zx = np.asarray(zx, dtype=float).ravel()
    zy = np.asarray(zy, dtype=float).ravel()
    sqrt_g = np.sqrt(np.asarray(metric.g, dtype=float).ravel())
    norm = np.hypot(zx, zy)
    flat = norm == 0.0
    safe = np.where(flat, 1.0, norm)
    ux, uy = zx / safe, zy / safe
    dir_min = np.column_stack([ux, uy])
    dir_max = np.column_stack([-uy, ux])
    dir_min[flat] = (1.0, 0.0)
    dir_max[flat] = (0.0, 1.0)
    return EigenField(sqrt_g, 1.0 / sqrt_g, dir_max, dir_min, flat)


def laplace_beltrami_exact(surface, x, y, fx, fy, fxx, fxy, fyy):
    """Analytic Laplace-Beltrami of f at (x, y) given its first and second
    parameter-space derivatives, using the surface's analytic z derivatives.

    Expands (1/sqrt g) div(A grad f) with the product rule.
    """
    zx, zy = surface.gradient(x, y)
    zxx, zxy, zyy = surface.hessian(x, y)
    g = 1.0 + zx * zx + zy * zy
    s = 1.0 / np.sqrt(g)
    gx = 2.0 * (zx * zxx + zy * zxy)
    gy = 2.0 * (zx * zxy + zy * zyy)
    sx = -0.5 * s / g * gx
    sy = -0.5 * s / g * gy
    A1 = (1.0 + zy * zy) * s
    A2 = -zx * zy * s
    A4 = (1.0 + zx * zx) * s
    dA1x = 2.0 * zy * zxy * s + (1.0 + zy * zy) * sx
    dA2x = -(zxx * zy + zx * zxy) * s - zx * zy * sx
    dA2y = -(zxy * zy + zx * zyy) * s - zx * zy * sy
    dA4y = 2.0 * zx * zxy * s + (1.0 + zx * zx) * sy
    div = A1 * fxx + 2.0 * A2 * fxy + A4 * fyy + (dA1x + dA2y) * fx + (dA2x + dA4y) * fy
    return s * div
