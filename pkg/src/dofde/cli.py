"""Command-line front end: JSON configs in, CSV/JSON files out.

Subcommands: solve, walk, convergence, visco-gen, visco-fit, fit-wait.
Structured inputs (measures, graphs, model parameters) live in a JSON config
file; flags cover only paths, the seed, and the backend.  All outputs are
written atomically with 17-significant-digit floats, so identical configs
produce byte-identical files.

Exit codes: 0 success, 2 configuration/validation error, 3 numeric
divergence, 4 I/O failure.  The environment variable ``DRAGON_THREADS``
(0 = auto) caps internal parallelism; the current implementation runs a
single worker, so the cap is validated and recorded but never exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from ._serialize import atomic_write_text, dumps_json
from .errors import DivergedError, DomainError, InputError
from .graph import GraphSpec, read_edge_list
from .measure import MultiTermSpec, OrderMeasure, dirac, discretize
from .solvers import FDEProblem, Trajectory, estimate_order, solve
from .visco import (
    ViscoDataset,
    fit_distributed,
    fit_single_order,
    make_dataset,
    model_by_kind,
)
from .walk import DEFAULT_FIT_ALPHAS, WalkConfig, fit_waiting_span, simulate, total_variation

SOLVE_BACKENDS = ("gl", "strategy1")
CONVERGENCE_BACKENDS = ("gl", "strategy1", "abm")


def read_thread_cap() -> int:
    """Parse DRAGON_THREADS (0 = auto); invalid values are config errors."""
    raw = os.environ.get("DRAGON_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"DRAGON_THREADS={raw!r} is not an integer")
    if cap < 0:
        raise InputError(f"DRAGON_THREADS={cap} must be >= 0")
    return cap


def _load_config(path: str) -> dict:
    if not os.path.exists(path):
        raise InputError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    return cfg


def _require(cfg: dict, field: str):
    if field not in cfg:
        raise InputError(f"missing required config field: {field!r}")
    return cfg[field]


def _out_path(cfg: dict, args) -> str:
    out = args.out or cfg.get("out")
    if not out:
        raise InputError("missing required config field: 'out' (or pass --out)")
    return out


def _grid_check(cfg: dict) -> tuple[float, float]:
    T = float(_require(cfg, "T"))
    h = float(_require(cfg, "h"))
    if T <= 0 or h <= 0:
        raise InputError("T and h must be positive")
    steps = round(T / h)
    if steps < 1 or abs(steps * h - T) > 1e-12 * max(T, 1.0):
        raise InputError(f"h={h} does not divide T={T} (relative tolerance 1e-12)")
    return T, h


def _load_graph(cfg_graph) -> GraphSpec:
    if isinstance(cfg_graph, str):
        if not os.path.exists(cfg_graph):
            raise InputError(f"graph file not found: {cfg_graph}")
        with open(cfg_graph) as fh:
            return read_edge_list(fh.read())
    if isinstance(cfg_graph, dict) and "edges" in cfg_graph:
        edges = tuple((int(i), int(j), float(w)) for i, j, w in cfg_graph["edges"])
        n = int(cfg_graph.get("nodes", max(max(i, j) for i, j, _ in edges) + 1))
        return GraphSpec(n, edges)
    raise InputError("'graph' must be a file path or {'edges': [[i, j, w], ...]}")


def _resolve_x0(cfg_x0, n_nodes: int) -> np.ndarray:
    if cfg_x0 == "uniform":
        return np.full(n_nodes, 1.0 / n_nodes)
    if isinstance(cfg_x0, dict) and "node" in cfg_x0:
        x0 = np.zeros(n_nodes)
        x0[int(cfg_x0["node"])] = 1.0
        return x0
    x0 = np.asarray(cfg_x0, dtype=float)
    if x0.shape[0] != n_nodes:
        raise InputError(f"x0 has {x0.shape[0]} rows but the graph has {n_nodes} nodes")
    return x0


def _scalar_rhs(cfg_rhs: dict):
    kind = _require(cfg_rhs, "kind")
    if kind == "decay":
        rate = float(cfg_rhs.get("rate", 1.0))
        return lambda t, y: -rate * y
    if kind == "cos":
        scale = float(cfg_rhs.get("scale", 1.0))
        return lambda t, y: scale * math.cos(t)
    if kind == "zero":
        return lambda t, y: np.zeros_like(y)
    raise InputError(f"unknown scalar rhs kind {kind!r}")


def _load_spec(cfg: dict) -> MultiTermSpec:
    if "measure" in cfg:
        measure = OrderMeasure.from_json(cfg["measure"])
        return discretize(measure)
    if "alpha" in cfg:
        return dirac(float(cfg["alpha"]))
    raise InputError("missing required config field: 'measure' (or 'alpha')")


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    out = _out_path(cfg, args)
    backend = args.backend or cfg.get("backend", "gl")
    if backend not in SOLVE_BACKENDS:
        raise InputError(f"backend must be one of {SOLVE_BACKENDS}, got {backend!r}")
    T, h = _grid_check(cfg)
    spec = _load_spec(cfg)
    if "graph" in cfg:
        g = _load_graph(cfg["graph"])
        op_rhs_x0 = _resolve_x0(_require(cfg, "x0"), g.n_nodes)
        from .graph import build_operator, d_grand_rhs

        problem = FDEProblem(spec=spec, rhs=d_grand_rhs(build_operator(g)), x0=op_rhs_x0, T=T, h=h)
    elif "scalar" in cfg:
        scalar = cfg["scalar"]
        problem = FDEProblem(
            spec=spec,
            rhs=_scalar_rhs(_require(scalar, "rhs")),
            x0=np.asarray(float(_require(scalar, "x0"))),
            T=T,
            h=h,
        )
    else:
        raise InputError("config needs either a 'graph' or a 'scalar' section")
    traj = solve(problem, backend=backend)
    atomic_write_text(out, traj.to_csv_text())
    return 0


def cmd_walk(args) -> int:
    cfg = _load_config(args.config)
    out = _out_path(cfg, args)
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise InputError("missing required config field: 'seed' (stochastic command)")
    g = _load_graph(_require(cfg, "graph"))
    start = cfg.get("start", 0)
    config = WalkConfig(
        graph=g,
        alpha=float(_require(cfg, "alpha")),
        delta_tau=float(_require(cfg, "delta_tau")),
        T=float(_require(cfg, "T")),
        n_walkers=int(_require(cfg, "walkers")),
        seed=int(seed),
        start=start if isinstance(start, (int, list)) else start,
        n_max=int(cfg["n_max"]) if "n_max" in cfg else None,
    )
    result = simulate(config)
    payload = result.to_json(config.config_hash())
    if args.compare:
        h = float(cfg.get("compare_h", config.delta_tau))
        x0 = np.zeros(g.n_nodes)
        if isinstance(config.start, int):
            x0[config.start] = 1.0
        else:
            x0 = np.asarray(config.start, dtype=float)
        from .graph import solve_diffusion

        traj = solve_diffusion(g, dirac(config.alpha), x0, T=config.T, h=h)
        compare_path = out + ".compare.csv"
        atomic_write_text(compare_path, traj.to_csv_text())
        payload["tv_distance"] = total_variation(result.occupancy, traj.final_state)
        payload["compare_trajectory"] = compare_path
    atomic_write_text(out, dumps_json(payload) + "\n")
    return 0


def cmd_convergence(args) -> int:
    cfg = _load_config(args.config)
    out = _out_path(cfg, args)
    backend = args.backend or cfg.get("backend", "gl")
    if backend not in CONVERGENCE_BACKENDS:
        raise InputError(f"backend must be one of {CONVERGENCE_BACKENDS}, got {backend!r}")
    spec = _load_spec(cfg)
    h_list = [float(h) for h in _require(cfg, "h_list")]
    T = float(_require(cfg, "T"))
    rhs_cfg = cfg.get("rhs", {"kind": "decay", "rate": 1.0})
    x0 = float(cfg.get("x0", 1.0))
    problem = FDEProblem(spec=spec, rhs=_scalar_rhs(rhs_cfg), x0=np.asarray(x0), T=T, h=h_list[0])

    ref_cfg = cfg.get("reference", {"kind": "self"})
    ref_kind = ref_cfg.get("kind", "self")
    if ref_kind == "mittag_leffler":
        if len(spec.terms) != 1 or rhs_cfg.get("kind") != "decay":
            raise InputError("mittag_leffler reference needs a single-order decay problem")
        from .special import mittag_leffler

        alpha = spec.alphas[0]
        rate = float(rhs_cfg.get("rate", 1.0)) / spec.weights[0]
        reference = lambda t: x0 * mittag_leffler(alpha, -rate * t**alpha)
    elif ref_kind == "self":
        h_ref = float(ref_cfg.get("h", min(h_list) / 4.0))
        reference = solve(problem.with_h(h_ref), backend=backend)
    else:
        raise InputError(f"unknown reference kind {ref_kind!r}")

    est = estimate_order(problem, h_list, reference, backend=backend)
    payload = {
        "backend": backend,
        "h_values": list(est.h_values),
        "errors": list(est.errors),
        "slope": est.slope,
        "monotone": est.monotone,
    }
    atomic_write_text(out, dumps_json(payload) + "\n")
    return 0


def cmd_visco_gen(args) -> int:
    cfg = _load_config(args.config)
    out = _out_path(cfg, args)
    backend = args.backend or cfg.get("backend", "gl")
    if backend not in SOLVE_BACKENDS:
        raise InputError(f"backend must be one of {SOLVE_BACKENDS}, got {backend!r}")
    model_cfg = dict(_require(cfg, "model"))
    kind = model_cfg.pop("kind", None)
    if kind is None:
        raise InputError("missing required config field: 'model.kind'")
    model = model_by_kind(kind, **model_cfg)
    T, h = _grid_check(cfg)
    dataset = make_dataset(model, T=T, h=h, backend=backend)
    atomic_write_text(out, dataset.to_csv_text())
    return 0


def cmd_visco_fit(args) -> int:
    cfg = _load_config(args.config)
    out = _out_path(cfg, args)
    data_path = _require(cfg, "data")
    if not os.path.exists(data_path):
        raise InputError(f"data file not found: {data_path}")
    with open(data_path) as fh:
        dataset = ViscoDataset.from_csv_text(fh.read())
    mode = cfg.get("mode", "both")
    train_frac = float(cfg.get("train_frac", 0.8))
    horizon = int(cfg.get("horizon", 10))
    payload = {"data": data_path, "mode": mode}
    if mode in ("single", "both"):
        grid = cfg.get("alpha_grid", list(DEFAULT_FIT_ALPHAS))
        report = fit_single_order(
            dataset.epsilon, dataset.sigma, dataset.h, grid, train_frac=train_frac, horizon=horizon
        )
        payload["single"] = report.to_json()
    if mode in ("distributed", "both"):
        nodes = cfg.get("alpha_nodes", list(DEFAULT_FIT_ALPHAS))
        report = fit_distributed(
            dataset.epsilon,
            dataset.sigma,
            dataset.h,
            nodes,
            ridge=float(cfg.get("ridge", 1e-8)),
            train_frac=train_frac,
            horizon=horizon,
        )
        payload["distributed"] = report.to_json()
    if mode not in ("single", "distributed", "both"):
        raise InputError(f"mode must be 'single', 'distributed' or 'both', got {mode!r}")
    atomic_write_text(out, dumps_json(payload) + "\n")
    return 0


def cmd_fit_wait(args) -> int:
    cfg = _load_config(args.config)
    out = _out_path(cfg, args)
    target_cfg = _require(cfg, "target")
    if isinstance(target_cfg, dict) and target_cfg.get("kind") == "exp":
        n_fit = int(target_cfg.get("n", 50))
        rate = float(target_cfg.get("rate", 1.0))
        target = np.exp(-rate * np.arange(1, n_fit + 1))
    elif isinstance(target_cfg, dict) and "values" in target_cfg:
        target = np.asarray(target_cfg["values"], dtype=float)
    else:
        raise InputError("'target' must be {'kind': 'exp', ...} or {'values': [...]}")
    alphas = [float(a) for a in cfg.get("alphas", DEFAULT_FIT_ALPHAS)]
    norm = cfg.get("norm", "l2")
    weights, sup_error = fit_waiting_span(target, alphas, norm=norm)
    payload = {
        "alphas": alphas,
        "weights": [float(w) for w in weights],
        "sup_error": sup_error,
        "norm": norm,
    }
    atomic_write_text(out, dumps_json(payload) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dofde",
        description="Distributed-order fractional graph dynamics toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, backends=None, walk=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output path (overrides config 'out')")
        if backends:
            p.add_argument("--backend", choices=backends, help="solver backend")
        if walk:
            p.add_argument("--seed", type=int, help="RNG seed (required for reproducibility)")
            p.add_argument(
                "--compare",
                action="store_true",
                help="also solve the matching diffusion equation and report TV distance",
            )
        p.set_defaults(func=func)
        return p

    add("solve", cmd_solve, "solve a distributed-order FDE, write a trajectory CSV", SOLVE_BACKENDS)
    add("walk", cmd_walk, "Monte-Carlo walker ensemble, write occupancy JSON", walk=True)
    add(
        "convergence",
        cmd_convergence,
        "empirical convergence order over a step ladder",
        CONVERGENCE_BACKENDS,
    )
    add("visco-gen", cmd_visco_gen, "generate a viscoelastic toy dataset CSV", SOLVE_BACKENDS)
    add("visco-fit", cmd_visco_fit, "fit constitutive weights to a dataset", None)
    add("fit-wait", cmd_fit_wait, "fit a waiting-time target with power-law atoms", None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        read_thread_cap()
        return args.func(args)
    except (InputError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
