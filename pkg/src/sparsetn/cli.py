"""Command line experiment driver.

Every subcommand is deterministic given its resolved configuration, which is
written as JSON next to the outputs; re-running with that file reproduces the
outputs bit-identically in single-threaded mode. Curves are emitted as CSV,
objects as JSON. Exit codes: 0 success, 2 invalid configuration, 3 numerical
failure (BP non-convergence is reported in a column, not treated as failure).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import bp, graph, hamiltonian, oracles, states, variational
from .tensor import PAULI_X, PAULI_Z

_STATE_KINDS = ("graph", "sqrt", "product", "random")


def _write_config(out_dir: str, name: str, cfg: dict) -> None:
    with open(os.path.join(out_dir, f"{name}_config.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_graph_arg(args) -> graph.Graph:
    return graph.load_graph(args.graph)


def _build_state(g: graph.Graph, kind: str, beta: float, j: float, chi: int, seed: int):
    if kind == "graph":
        return states.graph_state(g)
    if kind == "sqrt":
        return states.square_root_state(g, beta, j)
    if kind == "product":
        return states.product_state(g, np.array([1.0, 1.0]) / np.sqrt(2.0))
    if kind == "random":
        return states.random_state(g, chi, seed)
    raise ValueError(f"unknown state kind '{kind}'")


def _grid(spec: str):
    """Parse '0.1:1.2:0.1' (start:stop:step, inclusive) or a comma list."""
    if ":" in spec:
        start, stop, step = (float(x) for x in spec.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(round((stop - start) / step))
        vals = [start + k * step for k in range(count + 1)]
        return [round(v, 12) for v in vals if v <= stop + 1e-9]
    return [float(x) for x in spec.split(",")]


def _resolved(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def cmd_graph_gen(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    if args.tree:
        g = graph.build_tree(args.n, args.branching)
    else:
        if args.r is None:
            raise ValueError("either --tree or --r is required")
        g = graph.random_regular(args.n, args.r, args.seed)
    out = args.out or os.path.join(args.out_dir, "graph.json")
    graph.save_graph(g, out)
    diag = graph.compute_diagnostics(g, max_cycle_len=args.max_cycle_len, include_expansion=g.n <= 20)
    rows = [("n", g.n), ("edges", len(g.edges)), ("connected", int(diag.connected)),
            ("is_tree", int(graph.is_tree(g))),
            ("diameter", diag.diameter if diag.diameter is not None else "disconnected")]
    for deg in sorted(diag.degree_histogram):
        rows.append((f"degree_{deg}", diag.degree_histogram[deg]))
    for length in sorted(diag.cycle_counts):
        rows.append((f"cycles_{length}", diag.cycle_counts[length]))
    if diag.expansion is not None:
        rows.append(("expansion", float(diag.expansion)))
    _write_csv(os.path.join(args.out_dir, "graph_diagnostics.csv"), ["key", "value"], rows)
    _write_config(args.out_dir, "graph_gen",
                  _resolved(args, ["n", "r", "seed", "tree", "branching", "max_cycle_len", "out", "out_dir"]))
    return 0


def cmd_bp_run(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    g = _load_graph_arg(args)
    state = _build_state(g, args.state, args.beta, args.j, args.chi, args.seed)
    cfg = bp.BpConfig(max_steps=args.max_steps, rdm_tolerance=args.tol, damping=args.damping,
                      init=args.init, init_seed=args.seed, workers=args.threads)
    msgs, diag = bp.run_bp(state, cfg)
    bp.bp_diagnostics_to_csv(diag, os.path.join(args.out_dir, "bp_diagnostics.csv"))
    obs = bp.site_averaged_observables(state, msgs)
    _write_json(os.path.join(args.out_dir, "bp_observables.json"), {
        "converged": diag.converged,
        "steps_run": diag.steps_run,
        "mean_abs_z": obs.mean_abs_z,
        "mean_x": obs.mean_x,
        "mean_y": obs.mean_y,
        "edge_entropy": obs.edge_entropy,
        "edge_zz": obs.edge_zz,
    })
    if args.save_messages:
        bp.save_messages(msgs, os.path.join(args.out_dir, "bp_messages.json"))
    _write_config(args.out_dir, "bp_run",
                  _resolved(args, ["graph", "state", "beta", "j", "chi", "seed", "init", "max_steps",
                                   "tol", "damping", "threads", "save_messages", "out_dir"]))
    return 0


def cmd_graphstate_check(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    g = _load_graph_arg(args)
    state = states.graph_state(g)
    msgs = bp.init_messages(state, args.init, args.seed)
    prev = {e: bp.rdm(state, msgs, e).matrix for e in g.edges}
    rows = []
    for step in range(1, args.steps + 1):
        msgs = bp.bp_step(state, msgs, args.damping)
        cur = {e: bp.rdm(state, msgs, e).matrix for e in g.edges}
        delta = max((bp._trace_distance(prev[e], cur[e]) for e in g.edges), default=0.0)
        prev = cur
        obs = bp.site_averaged_observables(state, msgs)
        rows.append((step, obs.mean_abs_z, obs.mean_x, obs.mean_y, obs.edge_entropy, obs.edge_zz, delta))
    _write_csv(os.path.join(args.out_dir, "graphstate_check.csv"),
               ["step", "mean_abs_z", "mean_x", "mean_y", "edge_entropy", "edge_zz", "max_rdm_trace_distance"],
               rows)
    _write_config(args.out_dir, "graphstate_check",
                  _resolved(args, ["graph", "steps", "init", "seed", "damping", "out_dir"]))
    return 0


def cmd_sqrt_sweep(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    g = _load_graph_arg(args)
    betas = _grid(args.betas)
    exact = args.exact or (args.exact is None and g.n <= 12)
    if exact and g.n > 16:
        raise ValueError("exact enumeration columns require n <= 16")
    header = ["beta", "bp_mean_abs_z", "mc_mean_abs_z", "mc_err", "bp_mean_x", "bp_edge_entropy",
              "mc_mean_signed_z", "mc_signed_err", "mc_sector_flips", "bp_converged", "bp_steps"]
    if exact:
        header += ["exact_mean_abs_z", "exact_mean_x", "max_dev_z", "max_dev_x"]
    rows = []
    report = []
    for i, beta in enumerate(betas):
        state = states.square_root_state(g, beta, args.j)
        cfg = bp.BpConfig(max_steps=args.max_steps, rdm_tolerance=args.tol,
                          damping=args.damping, init=args.init, init_seed=args.seed + i)
        msgs, diag = bp.run_bp(state, cfg)
        obs = bp.site_averaged_observables(state, msgs)
        mc = oracles.classical_ising_mc(g, beta, args.j, sweeps=args.mc_sweeps,
                                        burn_in=args.mc_burn_in, seed=args.seed + 1000 + i)
        row = [beta, obs.mean_abs_z, mc.mean_abs_z, mc.mean_abs_z_error, obs.mean_x,
               obs.edge_entropy, mc.mean_signed_z, mc.mean_signed_z_error, mc.sector_flips,
               int(diag.converged), diag.steps_run]
        if exact:
            ex = oracles.classical_exact_expectations(g, beta, args.j)
            bp_z = np.array([bp.expectation(bp.rdm(state, msgs, (a,)), PAULI_Z) for a in range(g.n)])
            bp_x = np.array([bp.expectation(bp.rdm(state, msgs, (a,)), PAULI_X) for a in range(g.n)])
            max_dev_z = float(np.max(np.abs(bp_z - ex.z)))
            max_dev_x = float(np.max(np.abs(bp_x - ex.x)))
            row += [float(np.mean(np.abs(ex.z))), float(np.mean(ex.x)), max_dev_z, max_dev_x]
            report.append({"beta": beta, "max_dev_z": max_dev_z, "max_dev_x": max_dev_x})
        rows.append(tuple(row))
    _write_csv(os.path.join(args.out_dir, "sqrt_sweep.csv"), header, rows)
    if report:
        _write_json(os.path.join(args.out_dir, "sqrt_sweep_deviations.json"), report)
    _write_config(args.out_dir, "sqrt_sweep",
                  _resolved(args, ["graph", "betas", "j", "init", "max_steps", "tol", "damping",
                                   "mc_sweeps", "mc_burn_in", "seed", "exact", "out_dir"]))
    return 0


def _var_config(args) -> variational.VarConfig:
    if args.init == "product":
        init = variational.ProductInit()
    elif args.init == "sqrt":
        init = variational.SqrtInit(beta=args.init_beta)
    elif args.init == "random":
        init = variational.RandomInit(seed=args.seed)
    else:
        raise ValueError(f"unknown init '{args.init}'")
    return variational.VarConfig(
        t_var=args.t_var, t_bp=args.t_bp, n_gd=args.n_gd, gamma=args.gamma, chi=args.chi,
        init=init, init_noise=args.init_noise, noise_seed=args.seed, bp_damping=args.bp_damping,
    )


def _trace_rows(hx, restart, trace: variational.VarTrace, n: int):
    rows = []
    energies = trace.energies
    for it, e in enumerate(energies, start=1):
        tail = energies[max(0, it - 3):it]
        settled = len(tail) == 3 and max(tail) - min(tail) <= 1e-6 * max(1.0, abs(e))
        rows.append((hx, restart, it, e, e / n, trace.mean_abs_z[it - 1],
                     trace.mean_x[it - 1], trace.mean_zz[it - 1], int(settled)))
    return rows


def cmd_var_prep(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    g = _load_graph_arg(args)
    if args.model == "mixed_field_ising":
        h = hamiltonian.mixed_field_ising(g, args.jzz, args.hx, args.hz)
        params = {"jzz": args.jzz, "hx": args.hx, "hz": args.hz}
    elif args.model == "tfim":
        h = hamiltonian.transverse_field_ising(g, args.hx)
        params = {"hx": args.hx}
    else:
        raise ValueError(f"unknown model '{args.model}'")
    cfg = _var_config(args)
    trace = variational.variational_prepare(g, h, cfg)
    _write_csv(os.path.join(args.out_dir, "var_prep.csv"),
               ["hx", "restart", "iteration", "energy", "energy_density", "mean_abs_z", "mean_x",
                "mean_zz", "converged"],
               _trace_rows(args.hx, 0, trace, g.n))
    summary = {"model": args.model, "params": params, "final_energy": trace.energies[-1],
               "final_energy_density": trace.energies[-1] / g.n}
    if args.oracle:
        if g.n > 14:
            raise ValueError("--oracle requires n <= 14")
        ed = oracles.exact_diagonalize(h)
        summary.update({
            "ed_e0": ed.e0,
            "ed_e1": ed.e1,
            "relative_energy_error": (trace.energies[-1] - ed.e0) / abs(ed.e0),
            "fidelity_ground": oracles.fidelity(trace.final_state, ed.v0),
            "ground_space_overlap": oracles.ground_space_overlap(trace.final_state, ed),
        })
    _write_json(os.path.join(args.out_dir, "var_prep_summary.json"), summary)
    if args.save_state:
        states.save_state(trace.final_state, os.path.join(args.out_dir, "var_prep_state.json"))
    _write_config(args.out_dir, "var_prep",
                  _resolved(args, ["graph", "model", "jzz", "hx", "hz", "chi", "t_var", "t_bp",
                                   "n_gd", "gamma", "init", "init_beta", "init_noise", "seed",
                                   "bp_damping", "oracle", "save_state", "out_dir"]))
    return 0


def _sweep_job(payload):
    gd, hx, i_hx, restart, cfg_kwargs, init_kind, init_beta, base_seed = payload
    g = graph.graph_from_json(gd)
    if init_kind == "product":
        init = variational.ProductInit()
    elif init_kind == "sqrt":
        init = variational.SqrtInit(beta=init_beta)
    else:
        init = variational.RandomInit(seed=base_seed)
    cfg = variational.VarConfig(init=init, **cfg_kwargs)
    h = hamiltonian.transverse_field_ising(g, hx)
    pt = variational.run_sweep_point(g, h, cfg, hx, i_hx, restart, base_seed)
    return pt


def cmd_tfim_sweep(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    g = _load_graph_arg(args)
    hxs = _grid(args.hx_grid)
    cfg_kwargs = dict(t_var=args.t_var, t_bp=args.t_bp, n_gd=args.n_gd, gamma=args.gamma,
                      chi=args.chi, init_noise=args.init_noise, bp_damping=args.bp_damping)
    gd = graph.graph_to_json(g)
    payloads = [(gd, float(hx), i, r, cfg_kwargs, args.init, args.init_beta, args.seed)
                for i, hx in enumerate(hxs) for r in range(args.restarts)]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as ex:
            points = list(ex.map(_sweep_job, payloads))
    else:
        points = [_sweep_job(p) for p in payloads]
    trace_rows = []
    summary_rows = []
    for pt in points:
        trace_rows.extend(_trace_rows(pt.hx, pt.restart, pt.trace, g.n))
        summary_rows.append((pt.hx, pt.restart, pt.noise_seed, pt.mean_abs_z, pt.mean_x, pt.mean_zz,
                             pt.energy, pt.energy_density, int(pt.bp_converged)))
    _write_csv(os.path.join(args.out_dir, "tfim_sweep_trace.csv"),
               ["hx", "restart", "iteration", "energy", "energy_density", "mean_abs_z", "mean_x",
                "mean_zz", "converged"], trace_rows)
    _write_csv(os.path.join(args.out_dir, "tfim_sweep.csv"),
               ["hx", "restart", "noise_seed", "mean_abs_z", "mean_x", "mean_zz", "energy",
                "energy_density", "bp_converged"], summary_rows)
    if args.oracle:
        if g.n > 14:
            raise ValueError("--oracle requires n <= 14")
        ed_rows = []
        for hx in hxs:
            h = hamiltonian.transverse_field_ising(g, float(hx))
            ed = oracles.exact_diagonalize(h)
            zmean = float(np.mean([abs(np.trace(oracles.statevector_rdm(ed.v0, g.n, (a,)) @ PAULI_Z).real)
                                   for a in range(g.n)]))
            ed_rows.append((hx, ed.e0, ed.e0 / g.n, ed.e1, zmean))
        _write_csv(os.path.join(args.out_dir, "tfim_sweep_ed.csv"),
                   ["hx", "e0", "e0_density", "e1", "ed_mean_abs_z"], ed_rows)
    _write_config(args.out_dir, "tfim_sweep",
                  _resolved(args, ["graph", "hx_grid", "restarts", "chi", "t_var", "t_bp", "n_gd",
                                   "gamma", "init", "init_beta", "init_noise", "seed", "bp_damping",
                                   "threads", "oracle", "out_dir"]))
    return 0


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="base seed for all randomness")
    p.add_argument("--threads", type=int, default=1, help="worker pool size")
    p.add_argument("--out-dir", default=".", help="directory for outputs and resolved config")
    p.add_argument("--config", default=None, help="JSON file of argument defaults")


def _add_var_common(p):
    p.add_argument("--chi", type=int, default=2)
    p.add_argument("--t-var", type=int, default=50)
    p.add_argument("--t-bp", type=int, default=5)
    p.add_argument("--n-gd", type=int, default=10)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--init", choices=["product", "sqrt", "random"], default="product")
    p.add_argument("--init-beta", type=float, default=0.2, help="beta for --init sqrt")
    p.add_argument("--init-noise", type=float, default=1e-2)
    p.add_argument("--bp-damping", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsetn",
                                     description="Tensor networks on sparse graphs via belief propagation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph-gen", help="generate a graph and its diagnostics")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, default=None, help="degree of the random regular graph")
    p.add_argument("--tree", action="store_true", help="build a complete tree instead")
    p.add_argument("--branching", type=int, default=2)
    p.add_argument("--max-cycle-len", type=int, default=8)
    p.add_argument("--out", default=None, help="graph JSON path (default <out-dir>/graph.json)")
    _add_common(p)
    p.set_defaults(func=cmd_graph_gen)

    p = sub.add_parser("bp-run", help="run message iteration on a state and export diagnostics")
    p.add_argument("--graph", required=True)
    p.add_argument("--state", choices=_STATE_KINDS, default="graph")
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--j", type=float, default=1.0)
    p.add_argument("--chi", type=int, default=2)
    p.add_argument("--init", choices=["identity", "random"], default="identity")
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--save-messages", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_bp_run)

    p = sub.add_parser("graphstate-check", help="observables of the graph state per message step")
    p.add_argument("--graph", required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--init", choices=["identity", "random"], default="identity")
    p.add_argument("--damping", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_graphstate_check)

    p = sub.add_parser("sqrt-sweep", help="square-root-state observables vs inverse temperature")
    p.add_argument("--graph", required=True)
    p.add_argument("--betas", default="0.1:1.2:0.1", help="start:stop:step or comma list")
    p.add_argument("--j", type=float, default=1.0)
    p.add_argument("--init", choices=["identity", "random"], default="random")
    p.add_argument("--max-steps", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--mc-sweeps", type=int, default=6000)
    p.add_argument("--mc-burn-in", type=int, default=1000)
    p.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None,
                   help="add exhaustive-enumeration columns (default: on for n <= 12)")
    _add_common(p)
    p.set_defaults(func=cmd_sqrt_sweep)

    p = sub.add_parser("var-prep", help="variational ground-state preparation")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", choices=["mixed_field_ising", "tfim"], default="mixed_field_ising")
    p.add_argument("--jzz", type=float, default=-1.0)
    p.add_argument("--hx", type=float, default=-2.0)
    p.add_argument("--hz", type=float, default=-0.5)
    p.add_argument("--oracle", action="store_true", help="compare against exact diagonalization (n <= 14)")
    p.add_argument("--save-state", action="store_true")
    _add_var_common(p)
    _add_common(p)
    p.set_defaults(func=cmd_var_prep)

    p = sub.add_parser("tfim-sweep", help="transverse-field phase diagram with restarts")
    p.add_argument("--graph", required=True)
    p.add_argument("--hx-grid", default="0.5:4.0:0.25")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--oracle", action="store_true")
    _add_var_common(p)
    _add_common(p)
    p.set_defaults(func=cmd_tfim_sweep)

    return parser


def _apply_config_file(parser, argv):
    """Use --config values as defaults; explicit flags still win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    with open(path) as fh:
        values = json.load(fh)
    extra = []
    for key, val in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in argv or f"--no-{key.replace('_', '-')}" in argv or not isinstance(val, (int, float, str, bool)):
            continue
        if isinstance(val, bool):
            if val:
                extra.append(flag)
            elif key == "exact":  # the one BooleanOptionalAction flag: False must round-trip
                extra.append(f"--no-{key}")
        else:
            extra.extend([flag, str(val)])
    return argv[:1] + extra + argv[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and "--config" in argv:
            argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
