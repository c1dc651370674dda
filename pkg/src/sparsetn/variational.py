"""Variational ground-state preparation: alternate message updates with
fixed-message gradient descent on the site tensors.

The energy functional is the sum over Hamiltonian terms of normalized local
expectation values computed from the current messages: each term is a quotient
N_t / D_t where N_t inserts the term operator into the local contraction and
D_t is the same contraction with the identity. Gradients are taken with
respect to the conjugated site tensors with the messages held fixed, applying
the quotient rule per term; because every term is a Hermitian form in each
site tensor, the functional is real and the environment tensors are the exact
gradients.

Within one inner descent loop the fixed-message functional must not increase;
a rise beyond tolerance aborts with a step-size diagnostic. The true energy
across outer iterations is not monotone (messages move between loops).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .bp import BpConfig, _site_gate, bp_step, init_messages, run_bp, site_averaged_observables
from .graph import Graph
from .hamiltonian import Hamiltonian, transverse_field_ising
from .states import TensorNetworkState, product_state, random_state, square_root_state

__all__ = [
    "ProductInit",
    "SqrtInit",
    "RandomInit",
    "VarConfig",
    "VarTrace",
    "SweepPoint",
    "StepSizeError",
    "energy",
    "energy_gradient",
    "variational_prepare",
    "sweep",
]


class StepSizeError(RuntimeError):
    """Fixed-message energy increased during an inner descent loop."""


@dataclass(frozen=True)
class ProductInit:
    vector: tuple = (2**-0.5, 2**-0.5)


@dataclass(frozen=True)
class SqrtInit:
    beta: float
    j: float = 1.0


@dataclass(frozen=True)
class RandomInit:
    seed: int = 0


@dataclass
class VarConfig:
    t_var: int = 50
    t_bp: int = 5
    n_gd: int = 10
    gamma: float = 0.01
    chi: int = 2
    init: object = field(default_factory=ProductInit)
    init_noise: float = 1e-2
    noise_seed: int = 0
    bp_damping: float = 0.0
    descent_tolerance: float = 1e-8

    def __post_init__(self):
        if min(self.t_var, self.t_bp, self.n_gd) < 1:
            raise ValueError("t_var, t_bp and n_gd must all be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.chi < 1:
            raise ValueError("chi must be >= 1")
        if self.init_noise < 0:
            raise ValueError("init_noise must be >= 0")


@dataclass
class VarTrace:
    energies: list = field(default_factory=list)
    mean_abs_z: list = field(default_factory=list)
    mean_x: list = field(default_factory=list)
    mean_zz: list = field(default_factory=list)
    final_state: TensorNetworkState | None = None
    final_messages: dict | None = None


@dataclass
class SweepPoint:
    hx: float
    restart: int
    noise_seed: int
    trace: VarTrace
    mean_abs_z: float
    mean_x: float
    mean_zz: float
    energy: float
    energy_density: float
    bp_converged: bool


def _gather(state, msgs):
    """Per-directed-edge gates and raw (unnormalized) outgoing messages,
    plus the fully dressed single-site density matrices."""
    g = state.graph
    gates = {}
    raws = {}
    rho1 = {}
    for i in range(g.n):
        t = state.site_tensors[i]
        nbrs = g.neighbors(i)
        in_msgs = [msgs[(k, i)] for k in nbrs]
        for pos, jv in enumerate(nbrs):
            gate = _site_gate(t, in_msgs, (pos,))
            gates[(i, jv)] = gate
            raws[(i, jv)] = np.einsum(gate, [0, 0, 2, 3], [2, 3])
        rho1[i] = _site_gate(t, in_msgs, ())
    return gates, raws, rho1


def _edge_value(gates, raws, h4, a, b):
    n_val = complex(
        np.einsum(gates[(a, b)], [0, 1, 4, 5], gates[(b, a)], [2, 3, 4, 5], h4, [1, 3, 0, 2], [])
    )
    d_val = complex(np.einsum(raws[(a, b)], [0, 1], raws[(b, a)], [0, 1], []))
    return n_val.real, d_val.real


def _vertex_value(rho1, h2, a):
    n_val = complex(np.einsum(rho1[a], [0, 1], h2, [1, 0], []))
    d_val = complex(np.trace(rho1[a]))
    return n_val.real, d_val.real


def energy(state: TensorNetworkState, msgs: dict, h: Hamiltonian) -> float:
    """Sum of normalized local term expectations under the given messages."""
    if h.graph != state.graph:
        raise ValueError("hamiltonian and state live on different graphs")
    gates, raws, rho1 = _gather(state, msgs)
    d = state.phys_dim
    total = 0.0
    for (a, b), hm in h.edge_terms.items():
        h4 = np.asarray(hm, dtype=complex).reshape(d, d, d, d)
        n_val, d_val = _edge_value(gates, raws, h4, a, b)
        if d_val <= 0:
            raise RuntimeError(f"edge ({a}, {b}): vanishing local norm")
        total += n_val / d_val
    for a, hm in h.vertex_terms.items():
        n_val, d_val = _vertex_value(rho1, np.asarray(hm, dtype=complex), a)
        if d_val <= 0:
            raise RuntimeError(f"site {a}: vanishing local norm")
        total += n_val / d_val
    return total


def _energy_and_gradient(state: TensorNetworkState, msgs: dict, h: Hamiltonian):
    g = state.graph
    d = state.phys_dim
    gates, raws, rho1 = _gather(state, msgs)
    grads = [np.zeros_like(t) for t in state.site_tensors]
    total = 0.0

    def leg_msgs(i):
        return [msgs[(k, i)] for k in g.neighbors(i)]

    for (a, b), hm in h.edge_terms.items():
        h4 = np.asarray(hm, dtype=complex).reshape(d, d, d, d)
        n_val, d_val = _edge_value(gates, raws, h4, a, b)
        if d_val <= 0:
            raise RuntimeError(f"edge ({a}, {b}): vanishing local norm")
        total += n_val / d_val
        for site, other, hsub in ((a, b, [1, 49, 0, 48]), (b, a, [49, 1, 48, 0])):
            t = state.site_tensors[site]
            r = t.ndim - 1
            ly = g.leg(site, other)
            ms = leg_msgs(site)
            ops_n = [t, [0] + [2 + 2 * l for l in range(r)]]
            ops_d = [t, [0] + [2 + 2 * l for l in range(r)]]
            for l in range(r):
                if l == ly:
                    continue
                ops_n.extend([ms[l], [2 + 2 * l, 3 + 2 * l]])
                ops_d.extend([ms[l], [2 + 2 * l, 3 + 2 * l]])
            ops_n.extend([gates[(other, site)], [48, 49, 2 + 2 * ly, 3 + 2 * ly], h4, hsub])
            ops_d.extend([raws[(other, site)], [2 + 2 * ly, 3 + 2 * ly]])
            out_n = [1] + [3 + 2 * l for l in range(r)]
            out_d = [0] + [3 + 2 * l for l in range(r)]
            env_n = np.einsum(*ops_n, out_n)
            env_d = np.einsum(*ops_d, out_d)
            grads[site] += (env_n * d_val - n_val * env_d) / d_val**2

    for a, hm in h.vertex_terms.items():
        h2 = np.asarray(hm, dtype=complex)
        n_val, d_val = _vertex_value(rho1, h2, a)
        if d_val <= 0:
            raise RuntimeError(f"site {a}: vanishing local norm")
        total += n_val / d_val
        t = state.site_tensors[a]
        r = t.ndim - 1
        ms = leg_msgs(a)
        ops = [t, [0] + [2 + 2 * l for l in range(r)]]
        for l in range(r):
            ops.extend([ms[l], [2 + 2 * l, 3 + 2 * l]])
        env_n = np.einsum(*(ops + [h2, [1, 0]]), [1] + [3 + 2 * l for l in range(r)])
        env_d = np.einsum(*ops, [0] + [3 + 2 * l for l in range(r)])
        grads[a] += (env_n * d_val - n_val * env_d) / d_val**2

    return total, grads


def energy_gradient(state: TensorNetworkState, msgs: dict, h: Hamiltonian):
    """Gradient of the fixed-message energy with respect to conjugated site tensors."""
    _, grads = _energy_and_gradient(state, msgs, h)
    return grads


def _build_initial_state(g: Graph, cfg: VarConfig, phys_dim: int = 2) -> TensorNetworkState:
    init = cfg.init
    if isinstance(init, ProductInit):
        base = product_state(g, np.asarray(init.vector, dtype=complex))
    elif isinstance(init, SqrtInit):
        base = square_root_state(g, init.beta, init.j)
    elif isinstance(init, RandomInit):
        return _add_noise(random_state(g, cfg.chi, init.seed, phys_dim), cfg)
    else:
        raise ValueError(f"unsupported init spec {init!r}")
    return _add_noise(_embed_chi(base, cfg.chi), cfg)


def _embed_chi(state: TensorNetworkState, chi: int) -> TensorNetworkState:
    """Zero-pad every virtual leg up to bond dimension chi."""
    cur = max(state.bond_dims.values(), default=1)
    if chi < cur:
        raise ValueError(f"requested chi {chi} below the initial state's bond dimension {cur}")
    tensors = []
    for t in state.site_tensors:
        padded = np.zeros((t.shape[0],) + (chi,) * (t.ndim - 1), dtype=complex)
        padded[tuple(slice(0, s) for s in t.shape)] = t
        tensors.append(padded)
    return state.with_site_tensors(tensors)


def _add_noise(state: TensorNetworkState, cfg: VarConfig) -> TensorNetworkState:
    if cfg.init_noise == 0:
        return state
    rng = np.random.default_rng(cfg.noise_seed)
    tensors = []
    for t in state.site_tensors:
        noise = rng.standard_normal(t.shape) + 1j * rng.standard_normal(t.shape)
        tensors.append(t + cfg.init_noise * noise)
    return state.with_site_tensors(tensors)


def variational_prepare(g: Graph, h: Hamiltonian, cfg: VarConfig) -> VarTrace:
    """Alternate t_bp message updates with n_gd fixed-message descent steps.

    Messages warm-start across outer iterations. The per-iteration energy in
    the trace is the fixed-message functional evaluated after the inner loop.
    """
    state = _build_initial_state(g, cfg, h.phys_dim)
    msgs = init_messages(state, "identity")
    trace = VarTrace()
    for _ in range(cfg.t_var):
        for _ in range(cfg.t_bp):
            msgs = bp_step(state, msgs, cfg.bp_damping)
        e_prev = None
        for k in range(cfg.n_gd):
            e_val, grads = _energy_and_gradient(state, msgs, h)
            if e_prev is not None and e_val > e_prev + cfg.descent_tolerance * (1.0 + abs(e_prev)):
                raise StepSizeError(
                    f"fixed-message energy rose from {e_prev:.12g} to {e_val:.12g} "
                    f"at inner step {k}; reduce gamma (currently {cfg.gamma})"
                )
            e_prev = e_val
            state = state.with_site_tensors(
                [t - cfg.gamma * gr for t, gr in zip(state.site_tensors, grads)]
            )
        trace.energies.append(energy(state, msgs, h))
        if state.phys_dim == 2:
            obs = site_averaged_observables(state, msgs)
            trace.mean_abs_z.append(obs.mean_abs_z)
            trace.mean_x.append(obs.mean_x)
            trace.mean_zz.append(obs.edge_zz)
        else:
            trace.mean_abs_z.append(float("nan"))
            trace.mean_x.append(float("nan"))
            trace.mean_zz.append(float("nan"))
    trace.final_state = state
    trace.final_messages = msgs
    return trace


def _derived_seed(base_seed: int, i: int, restart: int) -> int:
    return int(np.random.SeedSequence([base_seed, i, restart]).generate_state(1, dtype=np.uint64)[0])


def sweep(g: Graph, hx_values, cfg: VarConfig, restarts: int, base_seed: int = 0):
    """Run the variational preparation over a transverse-field grid.

    Each (hx, restart) job perturbs the initial state with its own derived
    noise seed. Summary observables per job come from running the message
    iteration to convergence on the final state (warm-started from the final
    message set), so they do not depend on where the fixed message count left
    off.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    points = []
    for i, hx in enumerate(hx_values):
        h = transverse_field_ising(g, float(hx))
        for r in range(restarts):
            points.append(run_sweep_point(g, h, cfg, float(hx), i, r, base_seed))
    return points


def run_sweep_point(
    g: Graph, h: Hamiltonian, cfg: VarConfig, hx: float, i_hx: int, restart: int, base_seed: int
) -> SweepPoint:
    seed = _derived_seed(base_seed, i_hx, restart)
    trace = variational_prepare(g, h, dataclasses.replace(cfg, noise_seed=seed))
    state = trace.final_state
    msgs, diag = run_bp(state, BpConfig(max_steps=100, rdm_tolerance=1e-8), msgs=dict(trace.final_messages))
    obs = site_averaged_observables(state, msgs)
    e_val = energy(state, msgs, h)
    return SweepPoint(
        hx=hx,
        restart=restart,
        noise_seed=seed,
        trace=trace,
        mean_abs_z=obs.mean_abs_z,
        mean_x=obs.mean_x,
        mean_zz=obs.edge_zz,
        energy=e_val,
        energy_density=e_val / g.n,
        bp_converged=diag.converged,
    )
