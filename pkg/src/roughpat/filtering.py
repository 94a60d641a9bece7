"""Type-S rough surfaces: uniform nodal noise smoothed by an explicit,
anisotropic heat filter, then rescaled to a target amplitude."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSurfaceError, InvalidArgument
from .surface import make_rng, metric_fields, scale_to_amplitude


@dataclass(frozen=True)
class FilterSpec:
    kappa: float
    F: tuple = (1.0, 1.0)  # diagonal of the filter-diffusion tensor
    J: int = 15
    amplitude: float = 0.0
    seed: int = 0
    q: str = "identity"

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidArgument(f"kappa must be > 0, got {self.kappa}")
        if len(self.F) != 2 or min(self.F) <= 0:
            raise InvalidArgument(f"F must be two positive diagonal entries, got {self.F}")
        if int(self.J) != self.J or self.J < 0:
            raise InvalidArgument(f"J must be a non-negative integer, got {self.J}")
        if self.amplitude < 0:
            raise InvalidArgument(f"amplitude must be >= 0, got {self.amplitude}")
        if self.q not in ("identity", "ones"):
            raise InvalidArgument(f"q must be 'identity' or 'ones', got {self.q!r}")

    def step_coefficients(self, grid):
        h = grid.fill_distance
        return self.kappa * h * self.F[0], self.kappa * h * self.F[1]

    def check_stability(self, grid):
        mu_x, mu_y = self.step_coefficients(grid)
        if mu_x + mu_y > 0.5:
            raise InvalidArgument(
                f"heat filter unstable: mu_x + mu_y = {mu_x:.4g} + {mu_y:.4g} > 1/2 "
                f"(kappa={self.kappa}, h={grid.fill_distance:.4g}, F={self.F})"
            )


def _unique(grid, Z):
    """Drop the duplicated last row/column: (ny-1, nx-1) periodic block."""
    return grid.to_2d(Z)[:-1, :-1]


def _extend(block):
    """Inverse of ``_unique``: re-append the duplicated endpoints."""
    full = np.concatenate([block, block[:1, :]], axis=0)
    full = np.concatenate([full, full[:, :1]], axis=1)
    return full.ravel()


def sample_initial_nodal(grid, seed):
    """i.i.d. U[-1, 1] on the distinct nodes, copied onto the duplicates."""
    rng = make_rng(seed)
    block = rng.uniform(-1.0, 1.0, (grid.ny - 1, grid.nx - 1))
    return _extend(block)


def unit_stencil(block, F):
    """F11 * second x-difference + F22 * second y-difference, spacing 1, periodic."""
    d2x = np.roll(block, 1, axis=1) - 2.0 * block + np.roll(block, -1, axis=1)
    d2y = np.roll(block, 1, axis=0) - 2.0 * block + np.roll(block, -1, axis=0)
    return F[0] * d2x + F[1] * d2y


def dirichlet_energy(grid, Z):
    """Half the sum of squared forward differences over the periodic block."""
    b = _unique(grid, Z)
    dx = np.roll(b, -1, axis=1) - b
    dy = np.roll(b, -1, axis=0) - b
    return 0.5 * float(np.sum(dx * dx) + np.sum(dy * dy))


def heat_filter(Z0, spec, grid, history=False):
    """Apply J steps of Z <- Q Z + kappa h Lap_F Z.

    Q is the identity unless ``spec.q == "ones"``, in which case Q Z is the
    all-ones matrix applied to Z (every node receives the nodal sum).
    Returns the filtered nodal vector, or the list of all iterates when
    ``history`` is set.
    """
    spec.check_stability(grid)
    h = grid.fill_distance
    block = _unique(grid, np.asarray(Z0, dtype=float))
    iterates = [_extend(block)] if history else None
    for _ in range(int(spec.J)):
        lap = unit_stencil(block, spec.F)
        if spec.q == "ones":
            full = _extend(block)
            block = full.sum() + spec.kappa * h * lap
        else:
            block = block + spec.kappa * h * lap
        if history:
            iterates.append(_extend(block))
    return iterates if history else _extend(block)


@dataclass(frozen=True)
class NodalSurface:
    """A surface known only through nodal heights; gradients are centered
    differences of those heights."""

    Z: np.ndarray
    zx: np.ndarray
    zy: np.ndarray
    metric: object
    amplitude: float


def finalize_surface_s(ZJ, amplitude, D1, D2):
    """Scale to max |Z| = amplitude and build the FD metric field."""
    ZJ = np.asarray(ZJ, dtype=float)
    if amplitude > 0 and not np.any(ZJ):
        raise DegenerateSurfaceError("filtered field is identically zero; cannot scale to a positive amplitude")
    Z = scale_to_amplitude(ZJ, amplitude) * ZJ
    zx = D1 @ Z
    zy = D2 @ Z
    return NodalSurface(Z, zx, zy, metric_fields(zx, zy), amplitude)


def make_filter_surface(spec, grid, D1, D2):
    Z0 = sample_initial_nodal(grid, spec.seed)
    return finalize_surface_s(heat_filter(Z0, spec, grid), spec.amplitude, D1, D2)
