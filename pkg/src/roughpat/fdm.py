"""Periodic grids, centered differentiation matrices and the discrete
Laplace-Beltrami operator.

Nodes are ordered row-major with x fastest: node (i, j) has flat index
``i + nx * j``. The first and last node on each axis are the same physical
point; the periodic wrap skips that duplicate.
"""

from __future__ import annotations

import hashlib
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgument, SolverFailure


@dataclass(frozen=True)
class Grid:
    L: float
    nx: int
    ny: int

    @property
    def hx(self):
        return 2.0 * self.L / (self.nx - 1)

    @property
    def hy(self):
        return 2.0 * self.L / (self.ny - 1)

    @property
    def fill_distance(self):
        return max(self.hx, self.hy)

    @property
    def size(self):
        return self.nx * self.ny

    @cached_property
    def x(self):
        return -self.L + np.arange(self.nx) * self.hx

    @cached_property
    def y(self):
        return -self.L + np.arange(self.ny) * self.hy

    @cached_property
    def X(self):
        return np.tile(self.x, self.ny)

    @cached_property
    def Y(self):
        return np.repeat(self.y, self.nx)

    def to_2d(self, values):
        """Flat nodal vector -> (ny, nx) array, row j holding y = y_j."""
        return np.asarray(values).reshape(self.ny, self.nx)


def build_grid(L, nx, ny):
    if not L > 0:
        raise InvalidArgument(f"L must be > 0, got {L}")
    if int(nx) != nx or int(ny) != ny:
        raise InvalidArgument("nX and nY must be integers")
    if nx < 3:
        raise InvalidArgument(f"nX must be >= 3, got {nx}")
    if ny < 3:
        raise InvalidArgument(f"nY must be >= 3, got {ny}")
    return Grid(float(L), int(nx), int(ny))


def periodic_first_derivative(n, h):
    """1-D centered first difference on n nodes with duplicated endpoints."""
    rows = np.arange(n)
    left = rows - 1
    right = rows + 1
    left[0] = n - 2
    right[-1] = 1
    c = 1.0 / (2.0 * h)
    data = np.concatenate([np.full(n, -c), np.full(n, c)])
    return sp.csr_matrix((data, (np.concatenate([rows, rows]), np.concatenate([left, right]))), shape=(n, n))


def build_diff_matrices(grid):
    """(D1, D2): d/dx and d/dy acting on flat nodal vectors."""
    bx = periodic_first_derivative(grid.nx, grid.hx)
    by = periodic_first_derivative(grid.ny, grid.hy)
    D1 = sp.kron(sp.identity(grid.ny, format="csr"), bx, format="csr")
    D2 = sp.kron(by, sp.identity(grid.nx, format="csr"), format="csr")
    return D1, D2


def assemble_laplace_beltrami(D1, D2, metric):
    """(1/sqrt g) [D1 A1 D1 + D2 A4 D2 + D1 A2 D2 + D2 A2 D1] as a CSR matrix.

    ``A D`` means the rows of D scaled by the nodal values of A.
    """
    n = D1.shape[0]
    if D1.shape != (n, n) or D2.shape != (n, n) or metric.size != n:
        raise InvalidArgument(
            f"shape mismatch: D1 {D1.shape}, D2 {D2.shape}, metric has {metric.size} nodes"
        )
    diag = lambda v: sp.diags(np.asarray(v, dtype=float).ravel(), format="csr")  # noqa: E731
    A2 = diag(metric.A2)
    inner = (
        D1 @ (diag(metric.A1) @ D1)
        + D2 @ (diag(metric.A4) @ D2)
        + D1 @ (A2 @ D2)
        + D2 @ (A2 @ D1)
    )
    return (diag(metric.inv_sqrt_g) @ inner).tocsr()


def _matrix_key(A):
    A = A.tocsr()
    h = hashlib.blake2b(digest_size=20)
    h.update(np.asarray(A.shape, dtype=np.int64).tobytes())
    for arr in (A.indptr, A.indices, A.data):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


class LinearSolver:
    """Sparse LU of a fixed matrix, factored once on first use."""

    def __init__(self, A, rtol=1e-10):
        self.A = sp.csc_matrix(A)
        self.rtol = rtol
        self._lu = None
        self._lock = threading.Lock()
        self.factorizations = 0

    def _factor(self):
        with self._lock:
            if self._lu is None:
                try:
                    self._lu = spla.splu(self.A)
                except RuntimeError as exc:
                    raise SolverFailure(f"factorization failed: {exc}") from exc
                self.factorizations += 1
        return self._lu

    def condition_estimate(self):
        lu = self._factor()
        n = self.A.shape[0]
        inv = spla.LinearOperator((n, n), matvec=lu.solve, rmatvec=lambda b: lu.solve(b, trans="T"), dtype=float)
        try:
            return spla.onenormest(self.A) * spla.onenormest(inv)
        except Exception:  # noqa: BLE001
            return np.inf

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        x = self._factor().solve(rhs)
        bnorm = np.linalg.norm(rhs)
        res = np.linalg.norm(self.A @ x - rhs)
        if not np.all(np.isfinite(x)) or res > self.rtol * max(bnorm, np.finfo(float).tiny):
            raise SolverFailure(
                f"linear solve failed: residual {res:.3e} vs |rhs| {bnorm:.3e}, "
                f"condition estimate {self.condition_estimate():.3e}"
            )
        return x


_cache = OrderedDict()
_cache_lock = threading.Lock()
_CACHE_SIZE = 16


def solve_linear(A, rhs, rtol=1e-10):
    """Solve A x = rhs, reusing a cached factorization when A is unchanged."""
    key = _matrix_key(A)
    with _cache_lock:
        solver = _cache.get(key)
        if solver is None:
            solver = LinearSolver(A, rtol)
            _cache[key] = solver
            if len(_cache) > _CACHE_SIZE:
                _cache.popitem(last=False)
        else:
            _cache.move_to_end(key)
    return solver.solve(rhs)


def gershgorin_radius(A):
    """Upper bound on the spectral radius: max absolute row sum."""
    return float(abs(A).sum(axis=1).max())
