"""Experiment orchestration: channel generation, scheme solving, worst-case
certification, and the power-vs-uncertainty / power-vs-SINR-target sweeps.

Sweep mechanics: channels are drawn per (run, attempt) so every cell of the
(scheme, epsilon, gamma) grid at the same run index shares the attempt-0
channel population; the per-cell error is the attempt's unit sparse pattern
scaled to the cell's radius.  A cell whose solve is not optimal is resampled
with fresh channel substreams up to the attempt cap and recorded as
'exhausted' beyond it.  Each (scheme, run) pair solves its cells in one
deterministic warm-started chain, so results are independent of the worker
count.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    ChannelModelParams,
    ChannelSet,
    SystemConfig,
    UncertaintyModel,
    build_channel_set,
    error_direction,
    gen_channel,
    load_channel_set,
    make_estimate,
    save_channel_set,
    to_angular,
)
from .coneprog import (
    ProblemSpec,
    build_l1_robust,
    build_l2_robust,
    build_perfect_csi,
    extract_solution,
    structurally_infeasible,
)
from .evaluate import certify, mc_min_sinr
from .numerics import RngStream
from .solver import SolverSettings, SolveResult, solve

SCHEMES = ("perfect", "l1_robust", "l2_robust")

RAW_COLUMNS = ("scheme", "epsilon", "gamma_db", "run", "power", "status", "iterations", "solve_time_ms")


class ConfigError(Exception):
    """Invalid experiment configuration or input file."""


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    channel: ChannelModelParams = field(default_factory=ChannelModelParams)
    schemes: tuple[str, ...] = SCHEMES
    epsilon_grid: tuple[float, ...] = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
    gamma_db_grid: tuple[float, ...] = (3.0,)
    runs: int = 100
    seed: int = 1
    noise_factor: float = 0.1  # sigma_n^2 = noise_factor * mean_k ||h_k||^2
    relative_epsilon: bool = True  # eps_k = eps * ||h_k||_2
    error_support: int = 12  # 2 * default tap count
    max_resample: int = 20  # redraws allowed per infeasible cell
    threads: int = 1
    solver_max_iter: int = 50000

    def __post_init__(self):
        if not self.epsilon_grid or not self.gamma_db_grid:
            raise ConfigError("epsilon and gamma grids must be nonempty")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.noise_factor <= 0:
            raise ConfigError("noise factor must be positive")
        if self.max_resample < 0 or self.threads < 1:
            raise ConfigError("max_resample must be >= 0 and threads >= 1")
        if self.solver_max_iter < 1:
            raise ConfigError("solver_max_iter must be >= 1")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}")


def load_config(path: str | None, **overrides) -> ExperimentConfig:
    """Config from JSON file plus keyword overrides (flags win over file values)."""
    doc = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        system = SystemConfig(**doc.get("system", {}))
        channel = ChannelModelParams(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in doc.get("channel", {}).items()
        })
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad system/channel section: {exc}") from exc
    kwargs = {
        "system": system,
        "channel": channel,
        "schemes": tuple(doc.get("schemes", SCHEMES)),
        "epsilon_grid": tuple(doc.get("epsilon_grid", ExperimentConfig.epsilon_grid)),
        "gamma_db_grid": tuple(doc.get("gamma_db_grid", ExperimentConfig.gamma_db_grid)),
        "runs": int(doc.get("runs", ExperimentConfig.runs)),
        "seed": int(doc.get("seed", ExperimentConfig.seed)),
        "noise_factor": float(doc.get("noise_factor", ExperimentConfig.noise_factor)),
        "relative_epsilon": bool(doc.get("relative_epsilon", ExperimentConfig.relative_epsilon)),
        "error_support": int(doc.get("error_support", ExperimentConfig.error_support)),
        "max_resample": int(doc.get("max_resample", ExperimentConfig.max_resample)),
        "threads": int(doc.get("threads", ExperimentConfig.threads)),
        "solver_max_iter": int(doc.get("solver_max_iter", ExperimentConfig.solver_max_iter)),
    }
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def db_to_linear(gamma_db: float) -> float:
    return 10.0 ** (gamma_db / 10.0)


@dataclass
class _DrawnChannels:
    """One multi-user draw: true channels plus a radius-free error pattern."""

    h: list[np.ndarray]
    directions: list[np.ndarray]  # unit-l1 sparse patterns
    rhos: list[float]  # interior scale factors in (0, 1)
    sigma_n: float


def _draw(config: ExperimentConfig, run: int, attempt: int) -> _DrawnChannels:
    rng = RngStream(config.seed).substream(run, attempt)
    hs, dirs, rhos = [], [], []
    for k in range(config.system.users):
        h = to_angular(gen_channel(config.channel, config.system, rng.substream(k, 0)), config.system)
        d, rho = error_direction(min(config.error_support, h.size), h, rng.substream(k, 1))
        hs.append(h)
        dirs.append(d)
        rhos.append(rho)
    sigma = float(np.sqrt(config.noise_factor * np.mean([np.linalg.norm(h) ** 2 for h in hs])))
    return _DrawnChannels(h=hs, directions=dirs, rhos=rhos, sigma_n=sigma)


def _cell_spec(config: ExperimentConfig, drawn: _DrawnChannels, scheme: str, eps: float, gamma_db: float) -> ProblemSpec:
    gamma = db_to_linear(gamma_db)
    radii = []
    hhat = []
    for h, d, rho in zip(drawn.h, drawn.directions, drawn.rhos):
        eps_k = eps * float(np.linalg.norm(h)) if config.relative_epsilon else eps
        radii.append(eps_k)
        # the perfect-CSI baseline designs on the true channel, not the estimate
        hhat.append(h if scheme == "perfect" else make_estimate(h, rho * eps_k * d))
    kind = "l2" if scheme == "l2_robust" else "l1"
    return ProblemSpec(tuple(hhat), (gamma,) * config.system.users, drawn.sigma_n, tuple(radii), kind=kind)


def _build(scheme: str, spec: ProblemSpec):
    if scheme == "perfect":
        return build_perfect_csi(spec)
    if scheme == "l1_robust":
        return build_l1_robust(spec)
    return build_l2_robust(spec)


def _run_chain(config: ExperimentConfig, run: int, settings: SolverSettings) -> list[dict]:
    """All cells of one run index, per scheme in one warm-started chain."""
    rows = []
    cache: dict[int, _DrawnChannels] = {}

    def drawn(attempt: int) -> _DrawnChannels:
        if attempt not in cache:
            cache[attempt] = _draw(config, run, attempt)
        return cache[attempt]

    for scheme in config.schemes:
        warm: SolveResult | None = None
        for gamma_db in sorted(config.gamma_db_grid):
            for eps in sorted(config.epsilon_grid):
                row = {
                    "scheme": scheme,
                    "epsilon": eps,
                    "gamma_db": gamma_db,
                    "run": run,
                    "power": "",
                    "status": "exhausted",
                    "iterations": "",
                    "solve_time_ms": 0.0,
                }
                for attempt in range(config.max_resample + 1):
                    spec = _cell_spec(config, drawn(attempt), scheme, eps, gamma_db)
                    if scheme != "perfect" and structurally_infeasible(spec):
                        continue
                    prog, _ = _build(scheme, spec)
                    res = solve(prog, settings, warm_start=warm)
                    row["solve_time_ms"] += res.wall_time_s * 1e3
                    if res.optimal:
                        warm = res
                        row.update(power=res.objective, status="optimal", iterations=res.iterations)
                        break
                rows.append(row)
    return rows


def _worker(args) -> list[dict]:
    config, run = args
    return _run_chain(config, run, SolverSettings(max_iter=config.solver_max_iter))


def run_sweep(config: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    """Execute the full (scheme, epsilon, gamma, run) grid; returns (rows, summary).

    Rows are sorted deterministically; the summary holds per-(scheme, eps,
    gamma) mean power over the runs whose status is optimal.
    """
    tasks = [(config, run) for run in range(config.runs)]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            chunks = list(pool.map(_worker, tasks))
    else:
        chunks = [_worker(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["scheme"], r["epsilon"], r["gamma_db"], r["run"]))

    summary = []
    powers: dict[tuple, list[float]] = {}
    totals: dict[tuple, int] = {}
    for r in rows:
        key = (r["scheme"], r["epsilon"], r["gamma_db"])
        totals[key] = totals.get(key, 0) + 1
        if r["status"] == "optimal":
            powers.setdefault(key, []).append(r["power"])
    for key in sorted(totals):
        ok = powers.get(key, [])
        summary.append(
            {
                "scheme": key[0],
                "epsilon": key[1],
                "gamma_db": key[2],
                "runs_ok": len(ok),
                "runs_total": totals[key],
                "mean_power": float(np.mean(ok)) if ok else "",
            }
        )
    return rows, summary


def write_rows_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RAW_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            out = dict(r)
            if out["power"] != "":
                out["power"] = repr(float(out["power"]))
            out["solve_time_ms"] = f"{out['solve_time_ms']:.3f}"
            writer.writerow(out)


def write_summary_csv(summary: list[dict], path: str) -> None:
    cols = ("scheme", "epsilon", "gamma_db", "runs_ok", "runs_total", "mean_power")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for r in summary:
            out = dict(r)
            if out["mean_power"] != "":
                out["mean_power"] = repr(float(out["mean_power"]))
            writer.writerow(out)


# ---------------------------------------------------------------------------
# channel / beamformer files


def _channel_set_for(config: ExperimentConfig, eps: float, seed: int) -> ChannelSet:
    model = UncertaintyModel(kind="l1", epsilon=eps, relative=config.relative_epsilon)
    return build_channel_set(
        config.channel,
        config.system,
        model,
        min(config.error_support, config.system.n_t),
        RngStream(seed).substream(0, 0),
        seed=seed,
    )


def _spec_from_channel_set(cs: ChannelSet, config: ExperimentConfig, scheme: str, eps: float, gamma_db: float) -> ProblemSpec:
    gamma = db_to_linear(gamma_db)
    radii = [
        eps * float(np.linalg.norm(h)) if config.relative_epsilon else eps for h in cs.h
    ]
    sigma = float(np.sqrt(config.noise_factor * np.mean([np.linalg.norm(h) ** 2 for h in cs.h])))
    kind = "l2" if scheme == "l2_robust" else "l1"
    channels = cs.h if scheme == "perfect" else cs.hhat
    return ProblemSpec(tuple(channels), (gamma,) * cs.config.users, sigma, tuple(radii), kind=kind)


def save_beamformer(w: np.ndarray, path: str) -> None:
    doc = {
        "n_t": int(w.shape[0]),
        "users": int(w.shape[1]),
        "w_re": [[float(v) for v in row] for row in w.real],
        "w_im": [[float(v) for v in row] for row in w.imag],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_beamformer(path: str) -> np.ndarray:
    with open(path) as fh:
        doc = json.load(fh)
    w = np.asarray(doc["w_re"], dtype=float) + 1j * np.asarray(doc["w_im"], dtype=float)
    if w.shape != (int(doc["n_t"]), int(doc["users"])):
        raise ConfigError("beamformer file dimensions are inconsistent")
    return w


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    config = load_config(args.config, seed=args.seed)
    cs = _channel_set_for(config, args.epsilon, config.seed)
    save_channel_set(cs, args.out)
    print(f"wrote {args.out} ({config.system.users} users, n_t={config.system.n_t})")
    return 0


def cmd_solve(args) -> int:
    config = load_config(args.config, seed=args.seed)
    if args.scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {args.scheme!r}")
    try:
        cs = load_channel_set(args.channels)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read channel file: {exc}") from exc
    config = replace(config, system=cs.config)
    try:
        spec = _spec_from_channel_set(cs, config, args.scheme, args.epsilon, args.gamma_db)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.scheme != "perfect" and structurally_infeasible(spec):
        record = {
            "scheme": args.scheme,
            "epsilon": args.epsilon,
            "gamma_db": args.gamma_db,
            "status": "infeasible_presolve",
        }
        print(json.dumps(record, indent=1))
        return 3
    prog, layout = _build(args.scheme, spec)
    log = open(args.solver_log, "w") if args.solver_log else None
    try:
        res = solve(prog, SolverSettings(), log=log)
    finally:
        if log:
            log.close()
    record = {
        "scheme": args.scheme,
        "epsilon": args.epsilon,
        "gamma_db": args.gamma_db,
        "power": res.objective if res.optimal else None,
        "status": res.status,
        "iterations": res.iterations,
        "residuals": {"primal": res.primal_residual, "dual": res.dual_residual},
        "time_ms": res.wall_time_s * 1e3,
    }
    if res.optimal and args.save_w:
        w, *_ = extract_solution(res.x, layout)
        save_beamformer(w, args.save_w)
        record["w_file"] = args.save_w
    text = json.dumps(record, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if res.optimal else 3


def cmd_sweep(args) -> int:
    config = load_config(args.config, seed=args.seed, runs=args.runs, threads=args.threads)
    rows, summary = run_sweep(config)
    write_rows_csv(rows, args.out)
    summary_path = args.summary_out or (args.out.rsplit(".", 1)[0] + ".summary.csv")
    write_summary_csv(summary, summary_path)
    n_ok = sum(1 for r in rows if r["status"] == "optimal")
    print(f"wrote {args.out} ({len(rows)} rows, {n_ok} optimal) and {summary_path}")
    return 0


def cmd_certify(args) -> int:
    config = load_config(args.config, seed=args.seed)
    try:
        cs = load_channel_set(args.channels)
        w = load_beamformer(args.w)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read input file: {exc}") from exc
    if w.shape[0] != cs.config.n_t or w.shape[1] != cs.config.users:
        raise ConfigError("beamformer and channel dimensions disagree")
    config = replace(config, system=cs.config)
    if args.epsilon < 0 or args.gamma_db is None or args.samples < 1:
        raise ConfigError("epsilon must be nonnegative and samples >= 1")
    gamma = db_to_linear(args.gamma_db)
    radii = [
        args.epsilon * float(np.linalg.norm(h)) if config.relative_epsilon else args.epsilon
        for h in cs.h
    ]
    sigma = float(np.sqrt(config.noise_factor * np.mean([np.linalg.norm(h) ** 2 for h in cs.h])))
    gammas = [gamma] * cs.config.users
    certs = certify(cs.hhat, radii, w, sigma, gammas)
    mins = mc_min_sinr(
        cs.hhat, radii, w, sigma, args.samples, RngStream(config.seed).substream(1),
        support_size=min(config.error_support, cs.config.n_t),
    )
    report = {
        "gamma_db": args.gamma_db,
        "epsilon": args.epsilon,
        "samples": args.samples,
        "users": [
            {
                "num_lower": c.num_lower,
                "den_upper": c.den_upper,
                "margin": c.margin,
                "certified": c.certified,
                "mc_min_sinr": float(m),
            }
            for c, m in zip(certs, mins)
        ],
        "all_certified": all(c.certified for c in certs),
    }
    text = json.dumps(report, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustbf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a channel-set JSON file")
    _add_common(p)
    p.add_argument("--epsilon", type=float, default=0.2, help="relative error radius for synthesis")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one scheme on a channel file")
    _add_common(p)
    p.add_argument("--channels", required=True, help="channel-set JSON from gen")
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--gamma-db", type=float, default=3.0)
    p.add_argument("--save-w", default=None, help="write the beamformer matrix JSON here")
    p.add_argument("--solver-log", default=None, help="write per-iteration residual CSV here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run the full experiment grid, write raw+summary CSV")
    _add_common(p)
    p.add_argument("--runs", type=int, default=None, help="override config run count")
    p.add_argument("--threads", type=int, default=None, help="parallel workers over runs")
    p.add_argument("--summary-out", default=None, help="summary CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("certify", help="worst-case certificates + Monte Carlo for a beamformer")
    _add_common(p)
    p.add_argument("--channels", required=True)
    p.add_argument("--w", required=True, help="beamformer JSON from solve --save-w")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--gamma-db", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) in ("gen", "sweep") and not args.out:
        print("error: --out is required", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
