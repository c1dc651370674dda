"""Belief-propagation contraction of tensor network states.

Messages live on directed edges: ``m[(a, b)]`` is a chi x chi Hermitian
positive-semidefinite matrix with unit trace, indexed ``m[x, x']`` where ``x``
is the ket-layer bond index and ``x'`` the bra-layer one. A synchronous step
recomputes every outgoing message of every vertex from the incoming message
set, Hermitizes, normalizes to unit trace, and optionally mixes in the old
message (damping). Unit-trace normalization fixes the scale gauge of the
messages and keeps large graphs free of over/underflow.

Convergence is judged on two-site reduced density matrices, not on raw
messages: message entries can settle into a limit cycle while all local
observables are already stationary, so the message residual is reported as a
diagnostic only.
"""

from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .states import TensorNetworkState
from .tensor import PAULI_X, PAULI_Y, PAULI_Z, tensor_from_json, tensor_to_json

__all__ = [
    "BpConfig",
    "BpDiagnostics",
    "Rdm",
    "SiteAverages",
    "init_messages",
    "bp_step",
    "run_bp",
    "rdm",
    "expectation",
    "entanglement_entropy",
    "rdm_trace_distance",
    "site_averaged_observables",
    "messages_to_json",
    "messages_from_json",
    "bp_diagnostics_to_csv",
]


@dataclass
class BpConfig:
    max_steps: int = 100
    rdm_tolerance: float = 1e-8
    damping: float = 0.0
    schedule: str = "synchronous"
    init: str = "identity"
    init_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.rdm_tolerance <= 0:
            raise ValueError("rdm_tolerance must be positive")
        if not (0.0 <= self.damping < 1.0):
            raise ValueError("damping must lie in [0, 1)")
        if self.schedule != "synchronous":
            raise ValueError("only the synchronous schedule is supported")
        if self.init not in ("identity", "random"):
            raise ValueError("init must be 'identity' or 'random'")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class BpDiagnostics:
    steps_run: int
    converged: bool
    rdm_deltas: list = field(default_factory=list)
    message_deltas: list = field(default_factory=list)
    final_messages: dict = field(default_factory=dict)


@dataclass
class Rdm:
    """Hermitian, unit-trace reduced density matrix on an ordered site tuple."""

    sites: tuple
    matrix: np.ndarray


@dataclass
class SiteAverages:
    mean_abs_z: float
    mean_x: float
    mean_y: float
    edge_entropy: float
    edge_zz: float


def init_messages(state: TensorNetworkState, init: str = "identity", seed: int = 0) -> dict:
    """One PSD unit-trace matrix per directed edge.

    ``identity`` gives I/chi; ``random`` gives a seeded Gram matrix
    G^dagger G / tr(G^dagger G) of a complex Gaussian G.
    """
    g = state.graph
    rng = np.random.default_rng(seed)
    msgs = {}
    for a, b in g.directed_edges:
        chi = state.bond_dim(a, b)
        if init == "identity":
            m = np.eye(chi, dtype=complex) / chi
        elif init == "random":
            gmat = rng.standard_normal((chi, chi)) + 1j * rng.standard_normal((chi, chi))
            m = gmat.conj().T @ gmat
            m = m / np.trace(m).real
        else:
            raise ValueError("init must be 'identity' or 'random'")
        msgs[(a, b)] = m
    return msgs


def _raw_out_message(t, in_msgs, skip):
    """Unnormalized update: contract ket, bra and all incoming messages but one."""
    r = t.ndim - 1
    operands = [t, [0] + [2 + 2 * l for l in range(r)], t.conj(), [0] + [3 + 2 * l for l in range(r)]]
    for l in range(r):
        if l == skip:
            continue
        operands.extend([in_msgs[l], [2 + 2 * l, 3 + 2 * l]])
    return np.einsum(*operands, [2 + 2 * skip, 3 + 2 * skip])


def _site_gate(t, in_msgs, skips):
    """Doubled site tensor with messages absorbed on all legs except ``skips``.

    Axes of the result: ket phys, bra phys, then a (ket, bra) bond pair per
    skipped leg, in the order given.
    """
    r = t.ndim - 1
    operands = [t, [0] + [2 + 2 * l for l in range(r)], t.conj(), [1] + [3 + 2 * l for l in range(r)]]
    skipset = set(skips)
    for l in range(r):
        if l in skipset:
            continue
        operands.extend([in_msgs[l], [2 + 2 * l, 3 + 2 * l]])
    out = [0, 1]
    for l in skips:
        out.extend([2 + 2 * l, 3 + 2 * l])
    return np.einsum(*operands, out)


def bp_step(state: TensorNetworkState, msgs: dict, damping: float = 0.0, workers: int = 1) -> dict:
    """One synchronous update: all new messages computed from the input set."""
    g = state.graph

    def outgoing(i):
        t = state.site_tensors[i]
        nbrs = g.neighbors(i)
        in_msgs = [msgs[(k, i)] for k in nbrs]
        out = {}
        for pos, j in enumerate(nbrs):
            raw = _raw_out_message(t, in_msgs, pos)
            raw = 0.5 * (raw + raw.conj().T)
            tr = np.trace(raw).real
            if not np.isfinite(tr) or tr <= 0.0:
                raise RuntimeError(f"message {i}->{j} lost positivity (trace={tr})")
            new = raw / tr
            if damping:
                new = (1.0 - damping) * new + damping * msgs[(i, j)]
            out[(i, j)] = new
        return out

    new_msgs = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for out in ex.map(outgoing, range(g.n)):
                new_msgs.update(out)
    else:
        for i in range(g.n):
            new_msgs.update(outgoing(i))
    return new_msgs


def rdm(state: TensorNetworkState, msgs: dict, sites) -> Rdm:
    """Reduced density matrix on 1-3 sites forming a connected path.

    Site tensors and their conjugates on ``sites`` are contracted exactly over
    all edges internal to the set; every dangling edge is closed with its
    incoming message. The result is Hermitized and normalized to unit trace,
    with the first site as the most significant factor of the product basis.
    """
    sites = tuple(int(s) for s in sites)
    k = len(sites)
    if k not in (1, 2, 3):
        raise ValueError("rdm supports 1, 2 or 3 sites")
    if len(set(sites)) != k:
        raise ValueError("sites must be distinct")
    g = state.graph
    for u, v in zip(sites, sites[1:]):
        if not g.has_edge(u, v):
            raise ValueError("sites must form a connected path in the graph")
    inset = set(sites)
    acc = None
    labels: list = []
    for s in sites:
        nbrs = g.neighbors(s)
        skips = [pos for pos, u in enumerate(nbrs) if u in inset]
        in_msgs = [None if u in inset else msgs[(u, s)] for u in nbrs]
        gate = _site_gate(state.site_tensors[s], in_msgs, skips)
        g_labels = [("kp", s), ("bp", s)]
        for pos in skips:
            u = nbrs[pos]
            e = (min(s, u), max(s, u))
            g_labels.extend([("kv", e), ("bv", e)])
        if acc is None:
            acc, labels = gate, g_labels
        else:
            pa, pt = [], []
            for pos, lab in enumerate(g_labels):
                if lab in labels:
                    pa.append(labels.index(lab))
                    pt.append(pos)
            acc = np.tensordot(acc, gate, axes=(pa, pt))
            drop_a, drop_t = set(pa), set(pt)
            labels = [lab for i, lab in enumerate(labels) if i not in drop_a] + [
                lab for i, lab in enumerate(g_labels) if i not in drop_t
            ]
    perm = [labels.index(("kp", s)) for s in sites] + [labels.index(("bp", s)) for s in sites]
    acc = np.transpose(acc, perm)
    d = state.phys_dim
    mat = acc.reshape(d**k, d**k)
    mat = 0.5 * (mat + mat.conj().T)
    tr = np.trace(mat).real
    if not np.isfinite(tr) or tr <= 0.0:
        raise RuntimeError(f"reduced density matrix on {sites} has non-positive trace {tr}")
    return Rdm(sites=sites, matrix=mat / tr)


def run_bp(state: TensorNetworkState, cfg: BpConfig | None = None, msgs: dict | None = None):
    """Iterate synchronous BP until two-site RDMs are stationary in trace distance.

    Returns ``(messages, diagnostics)``. Non-convergence within ``max_steps``
    is reported through the diagnostics, not raised.
    """
    cfg = cfg or BpConfig()
    if msgs is None:
        msgs = init_messages(state, cfg.init, cfg.init_seed)
    edges = state.graph.edges
    prev = {e: rdm(state, msgs, e).matrix for e in edges}
    rdm_deltas: list = []
    message_deltas: list = []
    converged = False
    steps = 0
    for _ in range(cfg.max_steps):
        new_msgs = bp_step(state, msgs, cfg.damping, cfg.workers)
        msg_delta = 0.0
        for key, new in new_msgs.items():
            msg_delta = max(msg_delta, float(np.linalg.norm(new - msgs[key])))
        msgs = new_msgs
        cur = {e: rdm(state, msgs, e).matrix for e in edges}
        rdm_delta = 0.0
        for e in edges:
            rdm_delta = max(rdm_delta, _trace_distance(prev[e], cur[e]))
        prev = cur
        steps += 1
        rdm_deltas.append(rdm_delta)
        message_deltas.append(msg_delta)
        if rdm_delta <= cfg.rdm_tolerance:
            converged = True
            break
    diag = BpDiagnostics(
        steps_run=steps,
        converged=converged,
        rdm_deltas=rdm_deltas,
        message_deltas=message_deltas,
        final_messages=msgs,
    )
    return msgs, diag


def _trace_distance(m1, m2) -> float:
    w = np.linalg.eigvalsh(m1 - m2)
    return 0.5 * float(np.sum(np.abs(w)))


def expectation(rho: Rdm, op) -> float:
    """Re tr(rho op) for a Hermitian operator of matching dimension."""
    op = np.asarray(op, dtype=complex)
    mat = rho.matrix
    if op.shape != mat.shape:
        raise ValueError(f"operator shape {op.shape} does not match rdm shape {mat.shape}")
    val = complex(np.trace(mat @ op))
    if abs(val.imag) > 1e-8:
        raise ValueError(f"expectation value has imaginary part {val.imag:.3e}")
    return val.real


def entanglement_entropy(rho: Rdm) -> float:
    """Von Neumann entropy (natural log) with small negative eigenvalues clamped."""
    w = np.linalg.eigvalsh(rho.matrix)
    worst = -float(np.min(w)) if w.size else 0.0
    if worst > 1e-6:
        warnings.warn(f"clamping rdm eigenvalue of magnitude {worst:.3e} to zero", stacklevel=2)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total > 0:
        w = w / total
    w = w[w > 1e-12]
    return float(-np.sum(w * np.log(w)))


def rdm_trace_distance(r1: Rdm, r2: Rdm) -> float:
    """Half the trace norm of the difference; lies in [0, 1]."""
    if r1.sites != r2.sites:
        raise ValueError("rdms are defined on different site tuples")
    if r1.matrix.shape != r2.matrix.shape:
        raise ValueError("rdm dimensions do not match")
    return _trace_distance(r1.matrix, r2.matrix)


def site_averaged_observables(state: TensorNetworkState, msgs: dict) -> SiteAverages:
    """Arithmetic means of single-site Pauli expectations and edge quantities."""
    if state.phys_dim != 2:
        raise ValueError("site_averaged_observables requires qubits (d = 2)")
    g = state.graph
    abs_z = []
    xs = []
    ys = []
    for a in range(g.n):
        rho = rdm(state, msgs, (a,))
        abs_z.append(abs(expectation(rho, PAULI_Z)))
        xs.append(expectation(rho, PAULI_X))
        ys.append(expectation(rho, PAULI_Y))
    zz = np.kron(PAULI_Z, PAULI_Z)
    entropies = []
    zzs = []
    for e in g.edges:
        rho = rdm(state, msgs, e)
        entropies.append(entanglement_entropy(rho))
        zzs.append(expectation(rho, zz))
    return SiteAverages(
        mean_abs_z=float(np.mean(abs_z)),
        mean_x=float(np.mean(xs)),
        mean_y=float(np.mean(ys)),
        edge_entropy=float(np.mean(entropies)) if entropies else 0.0,
        edge_zz=float(np.mean(zzs)) if zzs else 0.0,
    )


def messages_to_json(msgs: dict) -> dict:
    return {f"{a}->{b}": tensor_to_json(m) for (a, b), m in sorted(msgs.items())}


def messages_from_json(data: dict) -> dict:
    msgs = {}
    for key, tj in data.items():
        a, b = key.split("->")
        msgs[(int(a), int(b))] = tensor_from_json(tj)
    return msgs


def bp_diagnostics_to_csv(diag: BpDiagnostics, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "max_rdm_trace_distance", "max_message_delta"])
        for i, (rd, md) in enumerate(zip(diag.rdm_deltas, diag.message_deltas), start=1):
            writer.writerow([i, repr(rd), repr(md)])


def save_messages(msgs: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(messages_to_json(msgs), fh)
        fh.write("\n")


def load_messages(path) -> dict:
    with open(path) as fh:
        return messages_from_json(json.load(fh))
