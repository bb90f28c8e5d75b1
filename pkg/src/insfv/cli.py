"""Command-line interface: ``insfv {run,oracle,implied-potential,resample,score-loss}``."""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .control import ScoreField, score_matching_loss
from .core import ConstructionError, InvalidInputError, RngStream, make_problem
from .engines import (DEFAULT_REBIRTH, REBIRTH_MODES, read_trajectory_csv, simulate_finite_swap,
                      simulate_ins, simulate_standard_fv, write_trajectory_csv)
from .estimators import (eigenvalue_estimate, marginal_histogram, read_points_csv, resample,
                         weighted_empirical, write_points_csv)
from .oracle import NumericalFailure, build_generator, principal_eigenpair, write_eigenvector_csv
from .swap import gibbs_log_fields, implied_potential, write_potential_csv

SCHEMA_VERSION = 1
ENGINES = ("ins", "standard-fv", "finite-swap")
GLOBAL_DEFAULTS = {"seed": None, "out_dir": ".", "quiet": False}
log = logging.getLogger("insfv")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce one engine run."""

    problem: dict
    engine: str = "ins"
    N: int = 5
    T: float = 100.0
    K: float | None = None
    seed: int = 0
    burn_in: float = 0.1
    bins: int = 50
    stride: int = 1
    rebirth: str = DEFAULT_REBIRTH
    direction: str = "forward"
    scheme: str = "auto"
    outputs: dict = field(default_factory=lambda: {
        "trajectory": "trajectory.csv", "summary": "summary.json",
        "histogram_x": "histogram_x.csv", "histogram_y": "histogram_y.csv"})

    def validate(self) -> None:
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        if self.engine == "finite-swap":
            if self.K is None or not self.K > 0:
                raise ConfigError("finite-swap engine needs K > 0")
        elif self.K is not None:
            raise ConfigError("K is only meaningful for the finite-swap engine")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.N < 1 or (self.engine == "ins" and self.N < 2):
            raise ConfigError("N must be >= 1 (>= 2 for the ins engine)")
        if not 0 <= self.burn_in < 1:
            raise ConfigError("burn_in must be in [0, 1)")
        if self.bins < 2:
            raise ConfigError("bins must be >= 2")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.rebirth not in REBIRTH_MODES:
            raise ConfigError(f"rebirth must be one of {tuple(REBIRTH_MODES)}")
        if self.direction not in ("forward", "backward"):
            raise ConfigError("direction must be forward or backward")

    @classmethod
    def from_dict(cls, cfg: dict) -> "RunConfig":
        cfg = copy.deepcopy(cfg)
        if "problem" not in cfg:
            # a bare problem description
            return cls(problem=cfg)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        return cls(**cfg)

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _problem_of(cfg: dict) -> dict:
    return cfg["problem"] if "problem" in cfg else cfg


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _say(args, msg):
    if not args.quiet:
        print(msg)


def execute_run(rc: RunConfig, out_dir: Path, replica: int | None = None) -> dict:
    """Run one simulation and write its artifacts; returns the summary."""
    rc.validate()
    spec = make_problem(rc.problem)
    stream = RngStream(rc.seed, replica)
    t0 = time.perf_counter()
    if rc.engine == "ins":
        traj = simulate_ins(spec, rc.N, rc.T, seed=stream, rebirth=rc.rebirth, stride=rc.stride, scheme=rc.scheme)
    elif rc.engine == "standard-fv":
        traj = simulate_standard_fv(spec, rc.N, rc.T, rc.direction, seed=stream, stride=rc.stride, scheme=rc.scheme)
    else:
        traj = simulate_finite_swap(spec, rc.N, rc.K, rc.T, seed=stream, stride=rc.stride, scheme=rc.scheme)
    wall = time.perf_counter() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out_dir / rc.outputs["trajectory"], traj)
    emp = weighted_empirical(traj, rc.burn_in)
    estimates = {}
    for side, axis in (("forward", "x"), ("backward", "y")):
        try:
            estimates[side] = eigenvalue_estimate(emp, spec, side).to_dict()
        except InvalidInputError:
            continue
        if spec.d <= 2:
            marginal_histogram(emp, spec.box, axis, rc.bins).to_csv(out_dir / rc.outputs[f"histogram_{axis}"])
    summary = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": rc.to_dict(),
        "replica": replica,
        "seed": rc.seed,
        "engine": rc.engine,
        "event_counts": traj.event_counts,
        "n_events": traj.n_events,
        "n_records": traj.n_records,
        "estimates": estimates,
        "wall_time_s": wall,
    }
    _write_json(out_dir / rc.outputs["summary"], summary)
    return summary


def cmd_run(args) -> int:
    cfg = _load_json(args.config)
    rc = RunConfig.from_dict(cfg)
    for name in ("engine", "N", "T", "K", "burn_in", "bins", "stride", "rebirth", "direction"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(rc, name, val)
    if args.seed is not None:
        rc.seed = args.seed
    out = Path(args.out_dir)
    if args.replicas and args.replicas > 1:
        for r in range(args.replicas):
            s = execute_run(copy.deepcopy(rc), out / f"replica_{r:03d}", replica=r)
            _say(args, f"replica {r}: {s['n_events']} events, estimates {json.dumps(s['estimates'])}")
    else:
        s = execute_run(rc, out)
        _say(args, f"{s['n_events']} events, estimates {json.dumps(s['estimates'])}")
    return 0


def cmd_oracle(args) -> int:
    spec = make_problem(_problem_of(_load_json(args.config)))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = {"schema_version": SCHEMA_VERSION, "grid": args.grid, "problem": spec.config}
    for direction in ("forward", "backward"):
        G = build_generator(spec, args.grid, direction, scheme=args.scheme)
        pair = principal_eigenpair(G)
        write_eigenvector_csv(out / f"oracle_{direction}.csv", G, pair)
        result[direction] = {"lambda": pair.lam, "residual": pair.residual, "iterations": pair.iterations}
    result["lambda_gap"] = abs(result["forward"]["lambda"] - result["backward"]["lambda"])
    _write_json(out / "oracle.json", result)
    _say(args, f"lambda forward {result['forward']['lambda']:.12g} backward {result['backward']['lambda']:.12g}")
    return 0


def cmd_implied(args) -> int:
    spec = make_problem(_problem_of(_load_json(args.config)))
    if spec.d != 1:
        raise ConfigError("implied-potential grids are written for d = 1 problems")
    n = args.grid
    g = spec.box.lower[0] + (np.arange(n) + 0.5) * spec.box.period[0] / n
    psi, phi = gibbs_log_fields(spec)
    W = implied_potential(g, g, psi, phi, spec.epsilon)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_potential_csv(out / "implied_potential.csv", g, g, W)
    base = psi(g[:, None])[:, None] + phi(g[:, None])[None, :]
    write_potential_csv(out / "uncoupled_potential.csv", g, g, base)
    _say(args, f"W range [{W.min():.6g}, {W.max():.6g}] on a {n}x{n} grid")
    return 0


def cmd_resample(args) -> int:
    traj = read_trajectory_csv(args.trajectory, engine=args.engine)
    emp = weighted_empirical(traj, args.burn_in)
    seed = args.seed if args.seed is not None else 0
    pts = resample(emp, args.m, RngStream(seed), axis=args.axis)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_points_csv(out / args.output, pts)
    _say(args, f"wrote {len(pts)} points")
    return 0


def cmd_score_loss(args) -> int:
    X = read_points_csv(args.samples)
    slope, shift = args.slope, args.shift
    if args.score == "zero":
        s = ScoreField(lambda Z: np.zeros_like(Z), lambda Z: np.zeros(len(Z)))
    else:
        s = ScoreField(lambda Z: slope * Z + shift, lambda Z: np.full(len(Z), slope * Z.shape[1]))
    loss = score_matching_loss(s, X)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "score_loss.json", {"schema_version": SCHEMA_VERSION, "loss": loss, "m": int(len(X)),
                                          "score": args.score, "slope": slope, "shift": shift})
    _say(args, f"loss {loss:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; SUPPRESS keeps
    # the subcommand copies from overwriting earlier values, and main() fills
    # the defaults (set_defaults would mutate the shared action objects)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the run seed")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for artifacts")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="suppress progress output")

    p = argparse.ArgumentParser(prog="insfv", parents=[common],
                                description="Infinite-swapping Fleming-Viot particle simulations")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="simulate an engine and write estimates")
    r.add_argument("--config", required=True)
    r.add_argument("--engine", choices=ENGINES)
    r.add_argument("--N", type=int)
    r.add_argument("--T", type=float)
    r.add_argument("--K", type=float)
    r.add_argument("--burn-in", dest="burn_in", type=float)
    r.add_argument("--bins", type=int)
    r.add_argument("--stride", type=int)
    r.add_argument("--rebirth", choices=tuple(REBIRTH_MODES))
    r.add_argument("--direction", choices=("forward", "backward"))
    r.add_argument("--replicas", type=int, default=1, help="independent replicas with seeds (seed, r)")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", parents=[common], help="grid eigenpair reference")
    o.add_argument("--config", required=True)
    o.add_argument("--grid", type=int, default=200)
    o.add_argument("--scheme", choices=("auto", "central", "upwind"), default="auto")
    o.set_defaults(func=cmd_oracle)

    ip = sub.add_parser("implied-potential", parents=[common], help="implied potential grid for a c = 0 problem")
    ip.add_argument("--config", required=True)
    ip.add_argument("--grid", type=int, default=100)
    ip.set_defaults(func=cmd_implied)

    rs = sub.add_parser("resample", parents=[common], help="draw points from a trajectory's weighted empirical")
    rs.add_argument("--trajectory", required=True)
    rs.add_argument("--engine", choices=ENGINES, default="ins")
    rs.add_argument("--m", type=int, default=1000)
    rs.add_argument("--axis", choices=("x", "y"), default="x")
    rs.add_argument("--burn-in", dest="burn_in", type=float, default=0.1)
    rs.add_argument("--output", default="samples.csv")
    rs.set_defaults(func=cmd_resample)

    sl = sub.add_parser("score-loss", parents=[common], help="score-matching loss of a linear score on samples")
    sl.add_argument("--samples", required=True)
    sl.add_argument("--score", choices=("zero", "linear"), default="linear")
    sl.add_argument("--slope", type=float, default=-1.0)
    sl.add_argument("--shift", type=float, default=0.0)
    sl.set_defaults(func=cmd_score_loss)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ConstructionError, InvalidInputError) as exc:
        print(f"insfv: error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"insfv: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
