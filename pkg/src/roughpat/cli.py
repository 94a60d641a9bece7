"""``roughpat`` command line. Each subcommand runs one experiments
operation into its own run directory and writes a manifest."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from . import experiments as ex
from .config import COMMANDS, parse_config
from .errors import RoughpatError
from .fdm import build_grid
from .solvers import bdf2_run
from .runs import RunDirectory, default_root

log = logging.getLogger("roughpat")

IO_EXIT = 5

# flag -> (RunConfig attribute, argparse kwargs)
_COMMON = {
    "--seed": ("seed", dict(type=int)),
    "--out": ("out", dict(metavar="DIR")),
    "--jobs": ("jobs", dict(type=int, metavar="K")),
    "--colormap": ("colormap", {}),
}
_SURFACE = {
    "--method": ("method", dict(choices=["m", "s", "M", "S"])),
    "--M": ("M", dict(type=int)),
    "--N": ("N", dict(type=int)),
    "--beta": ("beta", dict(type=float, help="spectral decay exponent of type-M coefficients")),
    "--kappa": ("kappa", dict(type=float)),
    "--F": ("F", dict(metavar="F11,F22")),
    "--J": ("J", dict(type=int)),
    "--q": ("q", dict(choices=["identity", "ones"])),
    "--amplitude": ("amplitude", dict(type=float)),
}
_GRID = {
    "--L": ("L", dict(type=float)),
    "--nx": ("nX", dict(type=int)),
    "--ny": ("nY", dict(type=int)),
}
_TIME = {
    "--tau": ("tau", dict(type=float)),
    "--T": ("T", dict(type=float)),
}
_REACTION = {
    "--preset": ("preset", dict(choices=["spots", "stripes"])),
    "--steady-tol": ("steady_tol", dict(metavar="TOL", help="stop when the relative step change drops below; 'none' disables")),
    "--rds-delta-u": ("rds_delta_u", dict(type=float)),
    "--rds-delta-v": ("rds_delta_v", dict(type=float)),
    "--rds-alpha": ("rds_alpha", dict(type=float)),
    "--rds-beta": ("rds_beta", dict(type=float)),
    "--rds-gamma": ("rds_gamma", dict(type=float)),
    "--rds-xi1": ("rds_xi1", dict(type=float)),
    "--rds-xi2": ("rds_xi2", dict(type=float)),
}

_GROUPS = {
    "gen-surface": [_SURFACE, _GRID],
    "eig-maps": [_SURFACE, _GRID],
    "heat": [_SURFACE, _GRID, _TIME, {
        "--theta": ("theta", dict(type=float)),
        "--amplitudes": ("amplitudes", dict(metavar="D1,D2,...")),
    }],
    "rds": [_SURFACE, _GRID, _TIME, _REACTION],
    "continue": [_SURFACE, _GRID, _TIME, _REACTION, {
        "--delta-from": ("delta_from", dict(type=float)),
        "--delta-to": ("delta_to", dict(type=float)),
        "--delta-step": ("delta_step", dict(type=float)),
    }],
    "sweep": [{
        "--amplitudes": ("amplitudes", dict(metavar="D1,D2,...")),
        "--patterns": ("patterns", dict(metavar="spots,stripes")),
        "--paper-scale": ("paper_scale", dict(action="store_const", const=True)),
        "--nx": ("nX", dict(type=int, help="override the sweep resolution")),
        "--T": ("T", dict(type=float, help="override the final time of every run")),
        "--zoom": ("zoom", dict(metavar="X0,X1,Y0,Y1", help="sub-rectangle for the 3-D exports")),
    }],
    "animal": [{
        "--name": ("name", dict(choices=sorted(ex.ANIMAL_REACTION))),
        "--method": ("method", dict(choices=["m", "s", "M", "S"])),
        "--paper-scale": ("paper_scale", dict(action="store_const", const=True)),
    }],
    "converge": [_SURFACE, {
        "--kind": ("kind", dict(choices=["heat", "rds"])),
        "--axis": ("axis", dict(choices=["space", "time"])),
        "--forcing": ("forcing", dict(choices=["analytic", "discrete"])),
        "--nxs": ("nxs", dict(metavar="N1,N2,...")),
        "--taus": ("taus", dict(metavar="T1,T2,...")),
        "--T": ("T", dict(type=float)),
        "--preset": ("preset", dict(choices=["spots", "stripes"])),
    }],
}

_HELP = {
    "gen-surface": "generate a rough surface and dump its heights",
    "eig-maps": "eigenvalue and eigendirection fields of the diffusion tensor",
    "heat": "heat flow on one surface draw at several amplitudes",
    "rds": "reaction-diffusion pattern on a rough surface",
    "continue": "amplitude continuation of a pattern",
    "sweep": "amplitude/frequency sweep of spots and stripes",
    "animal": "animal-coat preset (flat run, then the rough surface)",
    "converge": "manufactured-solution convergence study",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="roughpat", description="Turing patterns on random rough surfaces.")
    parser.add_argument("--version", action="version", version=f"roughpat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for cmd in COMMANDS:
        p = sub.add_parser(cmd, help=_HELP[cmd])
        p.add_argument("--config", metavar="FILE", type=Path)
        p.add_argument("--render", action="store_const", const=True, help="also write PNG heatmaps")
        p.add_argument("-v", "--verbose", action="count", default=0)
        seen = set()
        for group in [_COMMON, *_GROUPS[cmd]]:
            for flag, (attr, kw) in group.items():
                if flag in seen:
                    continue
                seen.add(flag)
                p.add_argument(flag, dest=attr, default=None, **kw)
        p.set_defaults(_attrs=sorted({a for g in [_COMMON, *_GROUPS[cmd]] for a, _ in g.values()} | {"render"}))
    return parser


def _surface_cfg(cfg, amplitude=None):
    return ex.SurfaceConfig(cfg.method, cfg.M, cfg.N, cfg.beta, cfg.kappa, tuple(cfg.F), cfg.J, cfg.q,
                            cfg.amplitude if amplitude is None else amplitude, cfg.seed)


def _preset(cfg):
    return ex.ExperimentPreset(cfg.command, _surface_cfg(cfg), cfg.preset, cfg.L, cfg.nX, cfg.tau, cfg.T,
                               cfg.seed, cfg.steady_tol)


def _grid(cfg):
    return build_grid(cfg.L, cfg.nX, cfg.ny)


def execute(cfg, run):
    """Run the experiment for ``cfg`` into ``run``; returns extra manifest data."""
    c = cfg.command
    if c == "gen-surface":
        geom, _ = ex.gen_surface(_surface_cfg(cfg), _grid(cfg), run)
        return {"max_abs_z": float(abs(geom.z).max())}
    if c == "eig-maps":
        ex.run_eigen_maps(_surface_cfg(cfg), _grid(cfg), run=run)
        return {}
    if c == "heat":
        out = ex.run_heat_demo(_surface_cfg(cfg), cfg.amplitudes, _grid(cfg), cfg.tau, cfg.T, cfg.theta, run)
        return {"final_range": {f"{a:g}": float(r.state.U.max() - r.state.U.min()) for a, _, r in out}}
    if c == "rds":
        stage = _run_rds(cfg, run)
        return {"steps": stage.result.state.step, "converged": stage.result.converged,
                "final_step_change": stage.result.final_step_change}
    if c == "continue":
        stages = ex.run_amplitude_continuation(_preset(cfg), cfg.delta_from, cfg.delta_to, cfg.delta_step, run=run)
        return {"stages": [{"delta": s.amplitude, "steps": s.result.state.step, "converged": s.result.converged}
                           for s in stages]}
    if c == "sweep":
        presets = ex.sweep_presets(tuple(cfg.amplitudes), patterns=tuple(cfg.patterns),
                                   paper_scale=cfg.paper_scale, seed=cfg.seed,
                                   nx=cfg.nX if "nX" in cfg.given else None,
                                   T=cfg.T if "T" in cfg.given else None)
        zoom = ((cfg.zoom[0], cfg.zoom[1]), (cfg.zoom[2], cfg.zoom[3])) if cfg.zoom else None
        stages = ex.run_sweep(presets, run=run, jobs=cfg.jobs, zoom=zoom)
        return {"runs": {p.name: {"steps": s.result.state.step, "converged": s.result.converged}
                         for p, s in zip(presets, stages)}}
    if c == "animal":
        run.render = True
        preset, flat, rough = ex.run_animal_preset(cfg.name, cfg.method, cfg.seed, cfg.paper_scale, run)
        return {"preset": ex.preset_to_dict(preset), "converged": [flat.result.converged, rough.result.converged]}
    if c == "converge":
        res = ex.run_convergence(cfg.kind, cfg.axis, cfg.nxs, cfg.taus, cfg.T if "T" in cfg.given else None,
                                 cfg.forcing, _surface_cfg(cfg), cfg.rds_params(), run=run)
        return {"observed_order": res.order}
    raise AssertionError(c)


def _run_rds(cfg, run):
    preset = _preset(cfg)
    params = cfg.rds_params()
    if params == preset.params:
        return ex.run_pattern(preset, run=run)
    # custom reaction constants: same pipeline with the overridden parameters
    grid = preset.grid()
    geom = ex.SurfaceFamily(preset.surface, grid).at()
    res = bdf2_run(geom.lap, params, *ex.random_ic(grid, preset.seed), preset.tau, preset.T,
                      steady_tol=preset.steady_tol)
    stage = ex.Stage(geom.amplitude, res, geom)
    ex._pattern_dumps(run, "pattern", stage, preset)
    return stage


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    overrides = {a: getattr(args, a, None) for a in args._attrs}
    try:
        cfg = parse_config(args.command, args.config, overrides)
        out = Path(cfg.out) if cfg.out else default_root() / args.command
        with RunDirectory(out, render=cfg.render, colormap=cfg.colormap) as run:
            extra = execute(cfg, run)
            run.manifest(args.command, cfg.to_dict(), cfg.seed, {"result": extra})
    except RoughpatError as exc:
        print(f"roughpat: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"roughpat: io error: {exc}", file=sys.stderr)
        return IO_EXIT
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
