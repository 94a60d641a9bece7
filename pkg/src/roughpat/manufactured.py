"""Manufactured solutions and their forcing terms on a type-M surface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solvers import reaction_terms
from .surface import laplace_beltrami_exact

PI = np.pi


def _sin_sin(a, b, x, y):
    """sin(a pi x) sin(b pi y) with all first and second derivatives."""
    sx, cx = np.sin(a * PI * x), np.cos(a * PI * x)
    sy, cy = np.sin(b * PI * y), np.cos(b * PI * y)
    f = sx * sy
    return (f, a * PI * cx * sy, b * PI * sx * cy,
            -(a * PI) ** 2 * f, a * b * PI * PI * cx * cy, -(b * PI) ** 2 * f)


@dataclass
class SpatialMode:
    """Time-independent factor phi(x, y) = sin(a pi x) sin(b pi y) and its
    Laplace-Beltrami image, sampled at grid nodes.

    With ``operator`` the image is the discrete operator applied to the
    nodal values, which makes phi an exact solution of the semi-discrete
    problem (only time-stepping error remains).
    """

    values: np.ndarray
    lb: np.ndarray

    @classmethod
    def on(cls, surface, grid, a, b, operator=None):
        f, fx, fy, fxx, fxy, fyy = _sin_sin(a, b, grid.X, grid.Y)
        if operator is not None:
            return cls(f, operator @ f)
        return cls(f, laplace_beltrami_exact(surface, grid.X, grid.Y, fx, fy, fxx, fxy, fyy))


class HeatProblem:
    """u* = e^t sin(pi x) sin(pi y), source h = u*_t - LB u*."""

    def __init__(self, surface, grid, operator=None):
        self.mode = SpatialMode.on(surface, grid, 1, 1, operator)

    def exact(self, t):
        return np.exp(t) * self.mode.values

    def source(self, t):
        return np.exp(t) * (self.mode.values - self.mode.lb)


class RdsProblem:
    """u* = e^t sin(2 pi x) sin(pi y), v* = e^t sin(pi x) sin(2 pi y)."""

    def __init__(self, surface, grid, params, operator=None):
        self.p = params
        self.mu = SpatialMode.on(surface, grid, 2, 1, operator)
        self.mv = SpatialMode.on(surface, grid, 1, 2, operator)

    def exact(self, t):
        e = np.exp(t)
        return e * self.mu.values, e * self.mv.values

    def forcing(self, t):
        e = np.exp(t)
        u, v = self.exact(t)
        fu, fv = reaction_terms(u, v, self.p)
        su = u - self.p.delta_u * e * self.mu.lb - fu
        sv = v - self.p.delta_v * e * self.mv.lb - fv
        return su, sv
