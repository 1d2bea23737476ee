"""Command line interface: ``neumannlab {solve, sweep, verify}``.

Exit codes: 0 success, 1 input error, 2 ill-posed frequencies, 3 verification
failure.  Every run writes ``manifest.json`` into its output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .fileio import (
    SchemaError,
    read_frequency_field,
    read_tensor,
    write_grid_csv,
    write_manifest,
    write_report,
    write_rows_csv,
    write_solution_field,
)
from .halfspace import ILL_POSED, solve_dirichlet, solve_neumann, synthesize
from .multiindex import enumerate_multiindices
from .norms import norm_report
from .operators import make_biharmonic_rho, make_special_operator, sphere_directions
from .suites import SUITES, run_suite
from .verify import uniqueness_estimate, wellposedness_sweep

__all__ = ["RunConfig", "main", "cmd_solve", "cmd_sweep", "cmd_verify"]

EXIT_OK, EXIT_INPUT, EXIT_ILL_POSED, EXIT_VERIFY = 0, 1, 2, 3


class InputError(Exception):
    """Invalid configuration or input file."""


@dataclass
class RunConfig:
    """Resolved run configuration."""

    operator: str = "special"
    n: int = 1
    m: int = 2
    rho: float = 0.0
    tensor: str | None = None
    xi_min: float = 1e-3
    xi_max: float = 10.0
    radial: int = 32
    angular: int = 8
    rtol: float = 1e-9
    root_tol: float = 1e-6
    quad_tol: float = 1e-9
    cond_max: float = 1e12
    seed: int = 0
    out: str = "out"
    trials: int = 20
    grid_x: int = 9
    grid_t: int = 9
    synth_order: int = 0

    def validate(self) -> None:
        if self.operator not in ("special", "biharmonic_rho", "file"):
            raise InputError(f"unknown operator {self.operator!r}")
        if self.operator == "file" and not self.tensor:
            raise InputError("--operator file needs --tensor PATH")
        if self.n < 1 or self.m < 1:
            raise InputError("n and m must be positive")
        if not (0 < self.xi_min < self.xi_max):
            raise InputError("need 0 < xi_min < xi_max")
        if min(self.radial, self.angular, self.trials, self.grid_x, self.grid_t) < 1:
            raise InputError("counts must be at least 1")
        if min(self.rtol, self.root_tol, self.quad_tol, self.cond_max) <= 0:
            raise InputError("tolerances must be positive")
        if not 0 <= self.synth_order <= self.m:
            raise InputError("synth_order must lie in 0..m")

    def build_operator(self):
        if self.operator == "special":
            return make_special_operator(self.n, self.m)
        if self.operator == "biharmonic_rho":
            return make_biharmonic_rho(self.n, self.rho)
        return read_tensor(self.tensor)


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with the input-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common_parser() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--operator", choices=["special", "biharmonic_rho", "file"])
    g.add_argument("--tensor", help="coefficient tensor JSON for --operator file")
    g.add_argument("--n", type=int, help="horizontal dimension")
    g.add_argument("--m", type=int, help="half-order of the operator")
    g.add_argument("--rho", type=float, help="Poisson ratio for biharmonic_rho")
    g.add_argument("--xi-min", type=float, dest="xi_min")
    g.add_argument("--xi-max", type=float, dest="xi_max")
    g.add_argument("--radial", type=int, help="radial frequency samples")
    g.add_argument("--angular", type=int, help="angular frequency samples")
    g.add_argument("--rtol", type=float)
    g.add_argument("--root-tol", type=float, dest="root_tol")
    g.add_argument("--quad-tol", type=float, dest="quad_tol")
    g.add_argument("--cond-max", type=float, dest="cond_max")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--config", help="JSON file whose keys override the flags")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = _Parser(prog="neumannlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ps = sub.add_parser("solve", parents=[common], help="solve a boundary value problem per frequency")
    ps.add_argument("--data", required=True, help="frequency-field CSV")
    ps.add_argument("--problem", choices=["neumann_L2", "neumann_rough", "dirichlet"], default="neumann_L2")
    ps.add_argument("--grid-x", type=int, dest="grid_x", help="synthesis points per horizontal axis")
    ps.add_argument("--grid-t", type=int, dest="grid_t", help="synthesis points in t")
    ps.add_argument("--synth-order", type=int, dest="synth_order", help="derivative order of the gridded output")

    pw = sub.add_parser("sweep", parents=[common], help="well-posedness sweep over a parameter")
    pw.add_argument("--family", choices=["biharmonic_rho", "special"], default="biharmonic_rho")
    pw.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"), default=(-4.0, 2.0))
    pw.add_argument("--steps", type=int, default=121)

    pv = sub.add_parser("verify", parents=[common], help="run a verification suite")
    pv.add_argument("--suite", choices=list(SUITES), required=True)
    pv.add_argument("--random-tensors", action="store_true", dest="random_tensors")
    pv.add_argument("--trials", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then command-line flags, then the ``--config`` JSON file."""
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)}
    for name in names:
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "config", None):
        try:
            over = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from None
        unknown = set(over) - names
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        defaults = RunConfig()
        for k, v in over.items():
            default = getattr(defaults, k)
            try:
                setattr(cfg, k, v if default is None or v is None else type(default)(v))
            except (TypeError, ValueError):
                raise InputError(f"config key {k!r} has invalid value {v!r}") from None
    if cfg.operator == "biharmonic_rho":
        cfg.m = 2
    cfg.validate()
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(cfg: RunConfig, n: int):
    axis = np.linspace(-1.0, 1.0, cfg.grid_x)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    x = np.column_stack([g.reshape(-1) for g in mesh])
    t = np.linspace(0.0, 1.0, cfg.grid_t)
    return x, t


def cmd_solve(cfg: RunConfig, data: str, problem: str) -> int:
    """Solve, then write the solution field, gridded synthesis, norms and manifest."""
    A = cfg.build_operator()
    prefix = "phi" if problem == "dirichlet" else "G"
    field = read_frequency_field(data, arity=A.m, prefix=prefix)
    if field.n != A.n:
        raise InputError(f"data has {field.n} frequency components, operator has n={A.n}")
    solver = solve_dirichlet if problem == "dirichlet" else solve_neumann
    sol = solver(A, field, rtol=cfg.rtol, cond_max=cfg.cond_max, root_tol=cfg.root_tol)
    out = _outdir(cfg)
    write_solution_field(out / "solution.csv", sol)
    x, t = _grid(cfg, A.n)
    vals = synthesize(sol, x, t, cfg.synth_order)
    write_grid_csv(out / "grid.csv", x, t, vals, enumerate_multiindices(A.n + 1, cfg.synth_order))
    n_bad = sum(s == ILL_POSED for s in sol.status)
    report = {"problem": problem, "frequencies": len(sol), "ill_posed": int(n_bad)}
    if n_bad < len(sol):
        norms = norm_report(sol)
        report.update(norms.to_json())
        if problem == "neumann_L2":
            report["estimate_ratio"] = uniqueness_estimate(A, sol)
        elif problem == "neumann_rough":
            report["estimate_ratio"] = norms.square_function_rough / norms.neumann_Wminus1_weighted
    write_report(out / "norms.json", report)
    write_manifest(out, asdict(cfg) | {"problem": problem, "data": str(data)}, [data], "solve")
    if n_bad:
        print(f"{n_bad} of {len(sol)} frequencies flagged ILL_POSED", file=sys.stderr)
        return EXIT_ILL_POSED
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, family: str, lo: float, hi: float, steps: int) -> int:
    """Sweep the family over ``[lo, hi]`` and write curve, zeros and report."""
    if steps < 1 or hi < lo or (steps > 1 and hi == lo):
        raise InputError("empty parameter range")
    params = np.array([lo]) if steps == 1 else np.linspace(lo, hi, steps)
    if family == "biharmonic_rho":
        fam = lambda r: make_biharmonic_rho(cfg.n, r)  # noqa: E731
    else:
        fam = lambda r: make_special_operator(cfg.n, cfg.m)  # noqa: E731
    rep = wellposedness_sweep(fam, params, sphere_directions(cfg.n, cfg.angular), root_tol=cfg.root_tol)
    out = _outdir(cfg)
    write_rows_csv(out / "sweep.csv", ["rho", "sigma_min_normalized", "lambda_slice"],
                   [(float(a), float(b), float(c)) for a, b, c in rep.rows()])
    write_rows_csv(out / "zeros.csv", ["rho"], [(float(z),) for z in rep.zeros])
    write_report(out / "sweep.json", {"family": family, **rep.to_json()})
    write_manifest(out, asdict(cfg) | {"family": family, "range": [lo, hi], "steps": steps}, [], "sweep")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, suite: str, random_tensors: bool) -> int:
    """Run a suite; exit 3 and print the first failure when an assertion fails."""
    A = cfg.build_operator()
    rep = run_suite(suite, A, cfg.trials, cfg.seed, random_tensors,
                    quad_tol=cfg.quad_tol, root_tol=cfg.root_tol, angular=cfg.angular)
    out = _outdir(cfg)
    write_report(out / f"verify_{suite}.json", rep)
    write_manifest(out, asdict(cfg) | {"suite": suite, "random_tensors": random_tensors}, [], "verify")
    if not rep["passed"]:
        print(f"verification failed: {json.dumps(rep['failures'][0])}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "solve":
            return cmd_solve(cfg, args.data, args.problem)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.family, args.range[0], args.range[1], args.steps)
        return cmd_verify(cfg, args.suite, args.random_tensors)
    except (InputError, SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
