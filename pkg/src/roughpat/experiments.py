"""Pipelines that reproduce the eigen-field maps, heat-flow demos, pattern
formation runs, parameter sweeps, animal-coat presets and convergence
studies. Every function is deterministic in its arguments; outputs are
written only when a :class:`~roughpat.runs.RunDirectory` is passed."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import ndimage

from .dumps import make_dump
from .errors import DivergenceError, InvalidArgument
from .fdm import assemble_laplace_beltrami, build_diff_matrices, build_grid
from .filtering import FilterSpec, finalize_surface_s, heat_filter, sample_initial_nodal
from .manufactured import HeatProblem, RdsProblem
from .solvers import (
    RdsParams,
    bdf2_run,
    estimate_order,
    manufactured_error,
    rds_error,
    run_heat,
)
from .surface import diffusion_eigensystem, make_rng, make_wave_surface, metric_fields

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- surfaces

@dataclass(frozen=True)
class SurfaceConfig:
    method: str = "M"
    M: int = 5
    N: int = 5
    beta: float = 0.0
    kappa: float = 5.0
    F: tuple = (1.0, 1.0)
    J: int = 15
    q: str = "identity"
    amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("M", "S"):
            raise InvalidArgument(f"surface method must be 'M' or 'S', got {self.method!r}")
        if self.amplitude < 0:
            raise InvalidArgument(f"amplitude must be >= 0, got {self.amplitude}")
        if self.method == "M" and (self.M < 0 or self.N < 0):
            raise InvalidArgument("M and N must be >= 0")
        if self.method == "S":
            FilterSpec(self.kappa, tuple(self.F), self.J, self.amplitude, self.seed, self.q)

    def header(self):
        h = {"method": self.method, "seed": self.seed, "delta": self.amplitude}
        if self.method == "M":
            h.update(M=self.M, N=self.N, beta=self.beta)
        else:
            h.update(kappa=self.kappa, F=tuple(self.F), J=self.J, q=self.q)
        return h


@dataclass
class Geometry:
    """Everything a PDE solve needs on one surface at one amplitude."""

    grid: object
    D1: object
    D2: object
    z: np.ndarray
    zx: np.ndarray
    zy: np.ndarray
    metric: object
    lap: object
    amplitude: float
    surface: object = None


def flat_geometry(grid, D=None):
    D1, D2 = D or build_diff_matrices(grid)
    zero = np.zeros(grid.size)
    metric = metric_fields(zero, zero)
    return Geometry(grid, D1, D2, zero, zero, zero, metric, assemble_laplace_beltrami(D1, D2, metric), 0.0)


class SurfaceFamily:
    """One random surface draw on a grid, available at any amplitude.

    Changing the amplitude only changes the scale factor; the coefficients
    (type M) or the filtered noise (type S) are drawn once.
    """

    def __init__(self, cfg, grid):
        self.cfg = cfg
        self.grid = grid
        self.D1, self.D2 = build_diff_matrices(grid)
        if cfg.method == "M":
            self._wave = make_wave_surface(cfg.M, cfg.N, 1.0, grid, cfg.beta, cfg.seed)
        else:
            spec = FilterSpec(cfg.kappa, tuple(cfg.F), cfg.J, cfg.amplitude, cfg.seed, cfg.q)
            self._filtered = heat_filter(sample_initial_nodal(grid, cfg.seed), spec, grid)

    def at(self, amplitude=None):
        amp = self.cfg.amplitude if amplitude is None else amplitude
        g = self.grid
        if self.cfg.method == "M":
            surf = self._wave.rescaled(amp, g.X, g.Y)
            z = surf.height(g.X, g.Y)
            zx, zy = surf.gradient(g.X, g.Y)
            metric = metric_fields(zx, zy)
        else:
            surf = finalize_surface_s(self._filtered, amp, self.D1, self.D2)
            z, zx, zy, metric = surf.Z, surf.zx, surf.zy, surf.metric
        lap = assemble_laplace_beltrami(self.D1, self.D2, metric)
        return Geometry(g, self.D1, self.D2, z, zx, zy, metric, lap, amp, surf)


def surface_dump(geom, cfg, **extra):
    h = cfg.header()
    h["delta"] = geom.amplitude
    h.update(extra)
    return make_dump(geom.grid, geom.z, "z", **h)


def gen_surface(cfg, grid, run=None):
    geom = SurfaceFamily(cfg, grid).at()
    dump = surface_dump(geom, cfg)
    if run is not None:
        run.dump("surface", dump)
    return geom, dump


# ---------------------------------------------------------------- eigen maps

@dataclass
class EigenMaps:
    eig: object
    dumps: dict
    quiver: np.ndarray  # columns x, y, max_dx, max_dy, min_dx, min_dy


def run_eigen_maps(cfg, grid, quiver_stride=3, run=None):
    """Nodal lambda_max / lambda_min and eigendirection fields of the
    diffusion tensor on a type-M surface."""
    if cfg.method != "M":
        raise InvalidArgument("eigen maps use the analytic surface gradient; method must be 'M'")
    geom = SurfaceFamily(cfg, grid).at()
    eig = diffusion_eigensystem(geom.metric, geom.zx, geom.zy)
    h = cfg.header()
    angle = lambda d: np.mod(np.arctan2(d[:, 1], d[:, 0]), np.pi)  # noqa: E731
    dumps = {
        "surface": make_dump(grid, geom.z, "z", **h),
        "lambda_max": make_dump(grid, eig.lam_max, "lambda_max", **h),
        "lambda_min": make_dump(grid, eig.lam_min, "lambda_min", **h),
        "dir_max_angle": make_dump(grid, angle(eig.dir_max), "dir_max_angle", **h),
        "dir_min_angle": make_dump(grid, angle(eig.dir_min), "dir_min_angle", **h),
    }
    dumps["dir_max_angle"].extra = {"dx": eig.dir_max[:, 0].copy(), "dy": eig.dir_max[:, 1].copy()}
    dumps["dir_min_angle"].extra = {"dx": eig.dir_min[:, 0].copy(), "dy": eig.dir_min[:, 1].copy()}
    i = np.arange(grid.nx)[::quiver_stride]
    j = np.arange(grid.ny)[::quiver_stride]
    idx = (i[None, :] + grid.nx * j[:, None]).ravel()
    quiver = np.column_stack([grid.X[idx], grid.Y[idx], eig.dir_max[idx], eig.dir_min[idx]])
    if run is not None:
        for name, d in dumps.items():
            run.dump(name, d)
        run.table("quiver", ["x", "y", "max_dx", "max_dy", "min_dx", "min_dy"], quiver.tolist())
    return EigenMaps(eig, dumps, quiver)


# ---------------------------------------------------------------- heat demo

def heat_ic(grid):
    return np.cos(np.pi * grid.X / 2.0) * np.cos(np.pi * grid.Y / 2.0)


def run_heat_demo(cfg, amplitudes, grid, tau=1e-3, T=1.0, theta=1.0, run=None):
    """Zero-source heat flow from cos(pi x/2) cos(pi y/2), one run per
    amplitude on the same surface draw."""
    if any(a < 0 for a in amplitudes):
        raise InvalidArgument("amplitudes must be >= 0")
    family = SurfaceFamily(cfg, grid)
    out = []
    for amp in amplitudes:
        geom = family.at(amp)
        res = run_heat(geom.lap, heat_ic(grid), theta, tau, T)
        out.append((amp, geom, res))
        if run is not None:
            h = cfg.header()
            h.update(delta=amp, t=res.state.t, tau=tau, theta=theta)
            run.dump(f"heat_delta{amp:g}_u", make_dump(grid, res.state.U, "u", **h))
            run.dump(f"heat_delta{amp:g}_surface", surface_dump(geom, cfg))
    return out


# ---------------------------------------------------------------- pattern runs

@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    surface: SurfaceConfig
    reaction: str = "spots"
    L: float = 1.0
    nx: int = 90
    tau: float = 0.5
    T: float = 800.0
    seed: int = 0
    steady_tol: float | None = None

    @property
    def params(self):
        return RdsParams.preset(self.reaction)

    def grid(self):
        return build_grid(self.L, self.nx, self.nx)

    def desk(self):
        """Half-resolution variant, same final time."""
        return replace(self, nx=max(3, self.nx // 2))

    def with_seed(self, seed):
        return replace(self, seed=seed, surface=replace(self.surface, seed=seed))


def random_ic(grid, seed):
    """U, V ~ U[-0.5, 0.5] on distinct nodes, copied onto the duplicated ones."""
    rng = make_rng(seed, stream=1)
    out = []
    for _ in range(2):
        b = rng.uniform(-0.5, 0.5, (grid.ny - 1, grid.nx - 1))
        b = np.concatenate([b, b[:1]], axis=0)
        out.append(np.concatenate([b, b[:, :1]], axis=1).ravel())
    return tuple(out)


@dataclass
class Stage:
    amplitude: float
    result: object
    geometry: Geometry


def _pattern_dumps(run, prefix, stage, preset, stage_index=None):
    h = preset.surface.header()
    h.update(delta=stage.amplitude, t=stage.result.state.t, tau=preset.tau, reaction=preset.reaction,
             converged=stage.result.converged)
    if stage_index is not None:
        h["stage"] = stage_index
    grid = stage.geometry.grid
    run.dump(f"{prefix}_u", make_dump(grid, stage.result.state.U, "u", **h))
    run.dump(f"{prefix}_v", make_dump(grid, stage.result.state.V, "v", **h))


def _solve_stage(geom, preset, U0, V0, stage_index=None):
    try:
        res = bdf2_run(geom.lap, preset.params, U0, V0, preset.tau, preset.T, steady_tol=preset.steady_tol)
    except DivergenceError as exc:
        exc.stage = stage_index
        raise DivergenceError(f"stage {stage_index} (delta={geom.amplitude}): {exc}", exc.step, stage_index) from exc
    log.info("stage %s delta=%g: %d steps, final change %.3e", stage_index, geom.amplitude, res.state.step,
             res.final_step_change)
    return res


def run_pattern(preset, amplitude=None, ic=None, family=None, run=None, prefix="pattern"):
    """Single reaction-diffusion run on the preset surface."""
    grid = preset.grid()
    family = family or SurfaceFamily(preset.surface, grid)
    geom = family.at(amplitude)
    U0, V0 = ic if ic is not None else random_ic(grid, preset.seed)
    stage = Stage(geom.amplitude, _solve_stage(geom, preset, U0, V0), geom)
    if run is not None:
        _pattern_dumps(run, prefix, stage, preset)
    return stage


def continuation_schedule(d_from, d_to, d_step):
    if not d_step > 0:
        raise InvalidArgument(f"delta step must be > 0, got {d_step}")
    if d_to < d_from:
        raise InvalidArgument("delta_to must be >= delta_from")
    k = int(round((d_to - d_from) / d_step))
    return [round(d_from + i * d_step, 12) for i in range(k + 1)]


def run_amplitude_continuation(preset, d_from=0.0, d_to=0.1, d_step=0.01, ic=None, run=None):
    """Steady states for increasing amplitudes, each stage started from the
    previous stage's final state."""
    grid = preset.grid()
    family = SurfaceFamily(preset.surface, grid)
    state = ic if ic is not None else random_ic(grid, preset.seed)
    stages = []
    for k, amp in enumerate(continuation_schedule(d_from, d_to, d_step)):
        geom = family.at(amp)
        res = _solve_stage(geom, preset, *state, stage_index=k)
        stage = Stage(amp, res, geom)
        stages.append(stage)
        state = (res.state.U, res.state.V)
        if run is not None:
            _pattern_dumps(run, f"stage{k:02d}_delta{amp:g}", stage, preset, k)
    return stages


# ---------------------------------------------------------------- pattern statistics

def _periodic_labels(mask):
    lab, n = ndimage.label(mask)
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a_edge, b_edge in ((lab[:, 0], lab[:, -1]), (lab[0, :], lab[-1, :])):
        for a, b in zip(a_edge, b_edge):
            if a and b:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
    roots = np.array([find(a) for a in range(n + 1)])
    return roots[lab]


def component_areas(grid, u, threshold=None):
    """Node counts of connected regions where u exceeds ``threshold``
    (mid-range by default), with periodic wrap-around."""
    block = grid.to_2d(u)[:-1, :-1]
    thr = 0.5 * (block.min() + block.max()) if threshold is None else threshold
    lab = _periodic_labels(block > thr)
    counts = np.bincount(lab.ravel())[1:]
    return counts[counts > 0]


def irregularity(grid, u):
    """Standard deviation of component areas of the thresholded field."""
    a = component_areas(grid, u)
    return float(np.std(a)) if a.size else 0.0


# ---------------------------------------------------------------- sweep

SWEEP_ZOOM = {
    (0.05, (5, 15)): ((-0.3, 0.1), (-0.3, 0.0)),
    (0.05, (15, 15)): ((0.2, 0.5), (-0.3, 0.0)),
    (0.1, (5, 15)): ((-0.1, 0.5), (0.1, 0.4)),
    (0.1, (15, 15)): ((-0.4, 0.1), (-0.2, 0.1)),
}
PATTERN_T = {"spots": 800.0, "stripes": 4000.0}


def sweep_presets(amplitudes=(0.05, 0.1), freqs=((5, 15), (15, 15)), patterns=("spots", "stripes"),
                  paper_scale=False, seed=0, nx=None, T=None):
    nx = nx or (170 if paper_scale else 85)
    out = []
    for pat in patterns:
        for (M, N) in freqs:
            for amp in amplitudes:
                cfg = SurfaceConfig("M", M=M, N=N, amplitude=amp, seed=seed)
                name = f"sweep_{pat}_M{M}N{N}_delta{amp:g}"
                out.append(ExperimentPreset(name, cfg, pat, L=0.5, nx=nx, tau=0.5,
                                        T=PATTERN_T[pat] if T is None else T, seed=seed))
    return out


def zoom_export(geom, u, rect):
    """Nodes of the sub-rectangle ((x0, x1), (y0, y1)) with columns x, y, z, u."""
    (x0, x1), (y0, y1) = rect
    g = geom.grid
    sel = (g.X >= x0) & (g.X <= x1) & (g.Y >= y0) & (g.Y <= y1)
    return np.column_stack([g.X[sel], g.Y[sel], geom.z[sel], np.asarray(u)[sel]])


def render_zoom(rows, path, colormap="viridis"):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib import colormaps

    xs = np.unique(rows[:, 0])
    ys = np.unique(rows[:, 1])
    shape = (ys.size, xs.size)
    X, Y, Z, U = (rows[:, k].reshape(shape) for k in range(4))
    span = np.ptp(U) or 1.0
    colors = colormaps[colormap]((U - U.min()) / span)
    fig = plt.figure(figsize=(5, 4), dpi=100)
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(X, Y, Z, facecolors=colors, rstride=1, cstride=1, linewidth=0, antialiased=False, shade=False)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def run_sweep_one(preset):
    return run_pattern(preset)


def run_sweep(presets, run=None, jobs=1, zoom=None):
    """Run every preset (in ``jobs`` worker processes when > 1) and write
    the pattern, surface and zoom exports. Outputs do not depend on ``jobs``."""
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            stages = list(pool.map(run_sweep_one, presets))
    else:
        stages = [run_sweep_one(p) for p in presets]
    if run is not None:
        for p, st in zip(presets, stages):
            _write_sweep_outputs(run, p, st, zoom)
    return stages


def _write_sweep_outputs(run, preset, stage, zoom=None):
    _pattern_dumps(run, preset.name, stage, preset)
    run.dump(f"{preset.name}_surface", surface_dump(stage.geometry, preset.surface))
    rect = zoom or SWEEP_ZOOM.get((preset.surface.amplitude, (preset.surface.M, preset.surface.N)))
    if rect:
        rows = zoom_export(stage.geometry, stage.result.state.U, rect)
        run.table(f"{preset.name}_zoom", ["x", "y", "z", "u"], rows.tolist(),
                  comments=[f"rect=[{rect[0][0]};{rect[0][1]}]x[{rect[1][0]};{rect[1][1]}]"])
        if run.render:
            render_zoom(rows, run.file(f"{preset.name}_zoom3d.png"), run.colormap)


# ---------------------------------------------------------------- animal presets

# Reaction preset per animal follows the coat morphology: stripes for the
# angelfish and plecostomus, spots for the genet and cheetah.
ANIMAL_REACTION = {"emperor-angelfish": "stripes", "genet": "spots", "plecostomus": "stripes", "cheetah": "spots"}

_ANIMAL_M = {  # M, N, tau, T, delta
    "emperor-angelfish": (5, 5, 0.5, 4000.0, 0.05),
    "genet": (15, 15, 0.5, 800.0, 0.1),
    "plecostomus": (15, 5, 0.5, 4000.0, 0.1),
    "cheetah": (15, 5, 0.5, 800.0, 0.1),
}
_ANIMAL_S = {  # kappa, F, J, tau, T, delta
    "emperor-angelfish": (5.0, (1.0, 1.0), 15, 0.5, 400.0, 0.05),
    "genet": (8.0, (1.0, 0.01), 10, 0.5, 800.0, 0.1),
    "plecostomus": (8.0, (1.0, 0.01), 10, 0.5, 3000.0, 0.1),
    "cheetah": (0.2, (20.0, 20.0), 2, 0.5, 400.0, 0.05),
}


def animal_preset(name, method="M", seed=0, paper_scale=True):
    method = method.upper()
    if name not in ANIMAL_REACTION or method not in ("M", "S"):
        raise InvalidArgument(
            f"unknown animal preset {name!r}/{method!r}; names: {sorted(ANIMAL_REACTION)}, methods: M, S"
        )
    if method == "M":
        M, N, tau, T, amp = _ANIMAL_M[name]
        cfg = SurfaceConfig("M", M=M, N=N, amplitude=amp, seed=seed)
    else:
        kappa, F, J, tau, T, amp = _ANIMAL_S[name]
        cfg = SurfaceConfig("S", kappa=kappa, F=F, J=J, amplitude=amp, seed=seed)
    p = ExperimentPreset(f"{name}-{method}", cfg, ANIMAL_REACTION[name], L=1.0, nx=90, tau=tau, T=T, seed=seed)
    return p if paper_scale else p.desk()


def run_animal_preset(name, method="M", seed=0, paper_scale=False, run=None):
    """Flat-domain pattern from random data, then the same model on the
    rough surface started from that flat state."""
    preset = animal_preset(name, method, seed, paper_scale)
    grid = preset.grid()
    family = SurfaceFamily(preset.surface, grid)
    flat = run_pattern(preset, amplitude=0.0, family=family)
    rough = run_pattern(preset, ic=(flat.result.state.U, flat.result.state.V), family=family)
    if run is not None:
        _pattern_dumps(run, f"{preset.name}_flat", flat, preset, 0)
        _pattern_dumps(run, preset.name, rough, preset, 1)
        run.dump(f"{preset.name}_surface", surface_dump(rough.geometry, preset.surface))
    return preset, flat, rough


# ---------------------------------------------------------------- convergence

@dataclass
class ConvergenceResult:
    kind: str
    axis: str
    resolutions: list
    errors: list
    order: float
    labels: list = field(default_factory=list)

    def rows(self):
        out = []
        for k, (lab, r, e) in enumerate(zip(self.labels, self.resolutions, self.errors)):
            local = (math.log(self.errors[k - 1] / e) / math.log(self.resolutions[k - 1] / r)) if k else float("nan")
            out.append([lab, r, e, local])
        return out


CONVERGENCE_DEFAULTS = {
    ("heat", "space"): dict(nxs=list(range(5, 45, 5)), taus=[1e-3], T=0.1),
    ("heat", "time"): dict(nxs=[90], taus=[2.0 ** -k for k in range(1, 7)], T=1.0),
    ("rds", "space"): dict(nxs=list(range(10, 45, 5)), taus=[1e-3], T=0.1),
    ("rds", "time"): dict(nxs=[90], taus=[2.0 ** -k for k in range(1, 7)], T=1.0),
}


def _manufactured_setup(nx, cfg, L):
    grid = build_grid(L, nx, nx)
    geom = SurfaceFamily(cfg, grid).at()
    return grid, geom


def run_convergence(kind, axis, nxs=None, taus=None, T=None, forcing="analytic", surface=None,
                    params=None, L=1.0, run=None):
    """Manufactured-solution convergence table and least-squares order.

    ``forcing="analytic"`` builds the source from the exact Laplace-Beltrami
    operator; ``"discrete"`` uses the assembled operator instead, which
    removes spatial error and isolates the time-stepping error.
    """
    if (kind, axis) not in CONVERGENCE_DEFAULTS:
        raise InvalidArgument(f"kind must be heat|rds and axis space|time, got {kind}/{axis}")
    if forcing not in ("analytic", "discrete"):
        raise InvalidArgument(f"forcing must be 'analytic' or 'discrete', got {forcing!r}")
    d = CONVERGENCE_DEFAULTS[(kind, axis)]
    nxs = nxs or d["nxs"]
    taus = taus or d["taus"]
    T = d["T"] if T is None else T
    cfg = surface or SurfaceConfig("M", M=1, N=1, amplitude=1e-2, seed=0)
    params = params or RdsParams.preset("spots")
    errors, res, labels = [], [], []
    cases = [(nx, taus[0]) for nx in nxs] if axis == "space" else [(nxs[0], t) for t in taus]
    cache = {}
    for nx, tau in cases:
        if nx not in cache:
            cache[nx] = _manufactured_setup(nx, cfg, L)
        grid, geom = cache[nx]
        op = geom.lap if forcing == "discrete" else None
        if kind == "heat":
            prob = HeatProblem(geom.surface, grid, op)
            out = run_heat(geom.lap, prob.exact(0.0), 1.0, tau, T, source=prob.source)
            err = manufactured_error(out.state.U, prob.exact(out.state.t))
        else:
            prob = RdsProblem(geom.surface, grid, params, op)
            U0, V0 = prob.exact(0.0)
            out = bdf2_run(geom.lap, params, U0, V0, tau, T, forcing=prob.forcing)
            err = rds_error(out.state.U, out.state.V, *prob.exact(out.state.t))
        errors.append(err)
        res.append(grid.hx if axis == "space" else tau)
        labels.append(nx if axis == "space" else tau)
    result = ConvergenceResult(kind, axis, res, errors, estimate_order(errors, res), labels)
    if run is not None:
        run.table(f"convergence_{kind}_{axis}", ["nX" if axis == "space" else "tau",
                                                 "h" if axis == "space" else "tau", "error", "local_order"],
                  result.rows(),
                  comments=[f"kind={kind}", f"axis={axis}", f"forcing={forcing}", f"T={T}",
                            f"observed_order={result.order!r}"])
    return result


def preset_to_dict(preset):
    return asdict(preset)
