"""Command-line drivers: ``denoise``, ``fracture``, ``cohesive`` and ``solve``.

Settings are merged in the order preset, ``--config`` file, explicit flags.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .inner import InnerSettings
from .io import read_config, read_image_pgm, read_matrix_csv, write_csv, write_image_pgm
from .linalg import from_matrix
from .outer import TRACE_COLUMNS, SolverConfig, solve
from .potentials import SmoothedPotential
from .problems import (ConstrainedProblem, GridSpec, add_noise, assemble_cohesive_problem,
                       assemble_ms_problem, cohesive_displacement, evolve_brittle,
                       ms_reconstruct, synthetic_image)

__all__ = ["PRESETS", "RunConfig", "build_parser", "run", "main"]

PRESETS = {
    "ms25": dict(command="denoise", n=25, gamma=0.17, r=3.5, eps=4.5e-3, noise=0.06,
                 max_outer=300, image="squares"),
    "ms125": dict(command="denoise", n=125, gamma=0.14, r=2.8, eps=3.5e-3, noise=0.06,
                  max_outer=300, image="squares"),
    # N = 51 nodes, i.e. 50 intervals
    "fm1d": dict(command="fracture", gamma=1.0, eps=1e-3, r=2.0, N=50, dt=0.01, t_end=1.0,
                 max_outer=30000),
}

COMMANDS = ("denoise", "fracture", "cohesive", "solve")

# option name -> (type, default)
OPTIONS = {
    "gamma": (float, None), "r": (float, None), "eps": (float, None), "p": (float, 2.0),
    "alpha": (float, 1.5), "lam": (float, 0.5), "omega": (str, "auto"),
    "max_outer": (int, 500), "feas_tol": (float, 1e-6), "step_tol": (float, 1e-6),
    "crit_tol": (float, 1e-4), "seed": (int, 0), "noise": (float, 0.0),
    "input": (str, None), "out": (str, None), "trace": (str, None),
    "n": (int, 25), "image": (str, "squares"), "noisy_out": (str, None),
    "N": (int, 50), "dt": (float, 0.01), "t_end": (float, 1.0), "t_start": (float, None),
    "snapshots": (str, None), "timing": (str, None), "perturbation": (float, 1e-8),
    "A_len": (float, 1.0), "R": (float, 2.0), "bc_left": (float, 0.0), "bc_right": (float, 1.0),
    "T": (str, None), "g": (str, None), "A": (str, None), "f": (str, None),
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["params"][name]
        except KeyError:
            raise AttributeError(name) from None

    def solver_config(self) -> SolverConfig:
        omega = None if str(self.omega).lower() == "auto" else float(self.omega)
        return SolverConfig(alpha=self.alpha, omega=omega, lam=self.lam,
                            max_outer=self.max_outer, feas_tol=self.feas_tol,
                            step_tol=self.step_tol, crit_tol=self.crit_tol,
                            inner=InnerSettings(lam=self.lam))

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.command in ("denoise", "fracture", "solve"):
            for k in ("gamma", "r", "eps"):
                if self.params.get(k) is None:
                    raise ValueError(f"--{k} is required for {self.command} (or use --preset)")
            if not 0 < self.eps < self.r:
                raise ValueError("need 0 < eps < r")
            if self.gamma < 0:
                raise ValueError("gamma must be nonnegative")
        if not 0 <= self.noise:
            raise ValueError("noise level must be nonnegative")
        self.solver_config()


def _coerce(key, value):
    typ = OPTIONS[key][0]
    if value is None or isinstance(value, typ):
        return value
    return typ(value)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncalm", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--config", help="key=value settings file")
    for key, (typ, _) in OPTIONS.items():
        flag = "--in" if key == "input" else "--lambda" if key == "lam" else \
            "--" + key.replace("_", "-")
        ap.add_argument(flag, dest=key, type=typ, default=None)
    return ap


def make_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    params = {k: d for k, (_, d) in OPTIONS.items()}
    if args.preset:
        preset = dict(PRESETS[args.preset])
        if preset.pop("command") != args.command:
            raise ValueError(f"preset {args.preset} belongs to the "
                             f"{PRESETS[args.preset]['command']} command")
        params.update(preset)
    if args.config:
        for k, v in read_config(args.config).items():
            k = {"in": "input", "lambda": "lam"}.get(k, k)
            if k not in OPTIONS:
                raise ValueError(f"{args.config}: unknown key {k!r}")
            params[k] = _coerce(k, v)
    for k in OPTIONS:
        v = getattr(args, k)
        if v is not None:
            params[k] = v
    cfg = RunConfig(args.command, params)
    cfg.validate()
    return cfg


def _trace_rows(trace):
    for row in trace.rows():
        yield [row[k] for k in TRACE_COLUMNS]


def _run_denoise(cfg: RunConfig, outputs: list):
    clean = read_image_pgm(cfg.input) if cfg.input else synthetic_image(cfg.n, cfg.image)
    noisy = add_noise(clean, cfg.noise, cfg.seed)
    prob = assemble_ms_problem(noisy, cfg.gamma, cfg.r, cfg.eps, p=cfg.p)
    res = solve(prob, cfg.solver_config())
    u = ms_reconstruct(prob, res.v_final)
    if cfg.noisy_out:
        outputs.append(cfg.noisy_out)
        write_image_pgm(np.clip(noisy, 0, 1), cfg.noisy_out)
    if cfg.out:
        outputs.append(cfg.out)
        write_image_pgm(np.clip(u, 0, 1), cfg.out)
    if cfg.trace:
        outputs.append(cfg.trace)
        write_csv(cfg.trace, TRACE_COLUMNS, _trace_rows(res.trace))
    tr = res.trace
    print(f"status={res.status} outer={len(tr)} feas_gap={tr.feas_gap[-1]:.3e} "
          f"energy={tr.energy[-1]:.6g} (initial {tr.initial_energy:.6g})")


def _run_fracture(cfg: RunConfig, outputs: list):
    grid = GridSpec(cfg.N, dim=1)
    rec = evolve_brittle(grid, cfg.dt, cfg.t_end, cfg.gamma, cfg.r, cfg.eps,
                         cfg.solver_config(), perturbation=cfg.perturbation, seed=cfg.seed,
                         t_start=cfg.t_start)
    flags = rec.rupture_flags
    if cfg.out:
        outputs.append(cfg.out)
        write_csv(cfg.out, ["t", "energy", "rupture_flag", "outer_iterations", "status"],
                  ([rec.t[k], rec.energy[k], flags[k], rec.outer_iterations[k], rec.status[k]]
                   for k in range(len(rec))))
    if cfg.timing:
        outputs.append(cfg.timing)
        write_csv(cfg.timing, ["t", "wall_seconds"],
                  ([rec.t[k], rec.wall_seconds[k]] for k in range(len(rec))))
    if cfg.snapshots:
        outputs.append(cfg.snapshots)
        write_csv(cfg.snapshots, ["t"] + [f"u{i}" for i in range(grid.n + 1)],
                  ([rec.t[k]] + list(rec.u[k]) for k in range(len(rec))))
    print(f"steps={len(rec)} rupture_time={rec.rupture_time} "
          f"final_energy={rec.energy[-1]:.6g} failures={sum(rec.failed)}")


def _run_cohesive(cfg: RunConfig, outputs: list):
    prob = assemble_cohesive_problem(cfg.N, cfg.A_len, cfg.R, cfg.bc_left, cfg.bc_right)
    res = solve(prob, cfg.solver_config())
    u = cohesive_displacement(prob, res.v_final)
    energy = prob.energy(res.v_final)
    if cfg.out:
        outputs.append(cfg.out)
        rows = [["v", i, x] for i, x in enumerate(res.v_final)]
        rows += [["u", i, x] for i, x in enumerate(u)]
        rows.append(["energy", 0, energy])
        write_csv(cfg.out, ["kind", "index", "value"], rows)
    if cfg.trace:
        outputs.append(cfg.trace)
        write_csv(cfg.trace, TRACE_COLUMNS, _trace_rows(res.trace))
    print(f"status={res.status} opening={res.v_final[cfg.N]:.6g} energy={energy:.6g}")


def _run_solve(cfg: RunConfig, outputs: list):
    for k in ("T", "g", "A", "f"):
        if cfg.params.get(k) is None:
            raise ValueError(f"--{k} CSV is required for solve")
    T = read_matrix_csv(cfg.T)
    A = read_matrix_csv(cfg.A)
    g = read_matrix_csv(cfg.g).ravel()
    f = read_matrix_csv(cfg.f).ravel()
    prob = ConstrainedProblem(from_matrix(T, "T"), g, from_matrix(A, "A"), f, cfg.gamma,
                              SmoothedPotential(cfg.p, cfg.r, cfg.eps))
    res = solve(prob, cfg.solver_config())
    if cfg.out:
        outputs.append(cfg.out)
        write_csv(cfg.out, ["index", "v"], ([i, x] for i, x in enumerate(res.v_final)))
    if cfg.trace:
        outputs.append(cfg.trace)
        write_csv(cfg.trace, TRACE_COLUMNS, _trace_rows(res.trace))
    print(f"status={res.status}")
    print("v = " + " ".join(repr(float(x)) for x in res.v_final))


DRIVERS = {"denoise": _run_denoise, "fracture": _run_fracture,
           "cohesive": _run_cohesive, "solve": _run_solve}


def run(config: RunConfig) -> int:
    """Dispatch ``config``; on failure remove any output written and return 1."""
    outputs: list = []
    try:
        DRIVERS[config.command](config, outputs)
    except Exception as exc:  # surfaced as exit status
        for path in outputs:
            if os.path.exists(path):
                os.remove(path)
        print(f"ncalm {config.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    try:
        cfg = make_config(sys.argv[1:] if argv is None else argv)
    except (ValueError, OSError) as exc:
        print(f"ncalm: error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    status = run(cfg)
    print(f"wall_seconds={time.perf_counter() - t0:.2f}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
