"""Dense complex tensor kernels shared by every other module.

Tensors are plain ``numpy`` arrays of ``complex128`` in C (row-major) order;
the row-major linearization is part of the serialization contract.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "IDENTITY2",
    "contract",
    "hermitian_eig",
    "symmetric_factor",
    "tensor_to_json",
    "tensor_from_json",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)


def contract(a, b, axis_pairs):
    """Contract tensors ``a`` and ``b`` over the given ``(axis_a, axis_b)`` pairs.

    The result carries the unpaired axes of ``a`` followed by those of ``b``,
    each group in its original order.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ax_a = [p[0] for p in axis_pairs]
    ax_b = [p[1] for p in axis_pairs]
    for i, j in axis_pairs:
        if a.shape[i] != b.shape[j]:
            raise ValueError(f"axis extent mismatch: a.shape[{i}]={a.shape[i]} vs b.shape[{j}]={b.shape[j]}")
    return np.tensordot(a, b, axes=(ax_a, ax_b))


def hermitian_eig(m):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and unitary ``v`` whose
    columns are the eigenvectors, so ``m = v @ diag(w) @ v.conj().T``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("hermitian_eig expects a square matrix")
    if not np.allclose(m, m.conj().T, rtol=1e-12, atol=1e-10):
        raise ValueError("matrix is not Hermitian within 1e-10")
    w, v = np.linalg.eigh(m)
    return w, v


def symmetric_factor(m):
    """Factor a complex symmetric matrix as ``m = a @ a.T``.

    For (numerically) real symmetric input this is the eigendecomposition
    ``m = v diag(w) v.T`` with ``a = v diag(sqrt(w))`` using principal complex
    square roots, which handles indefinite matrices. Genuinely complex
    symmetric input falls back to the principal matrix square root.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("symmetric_factor expects a square matrix")
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-12):
        raise ValueError("matrix is not symmetric within 1e-12")
    if np.max(np.abs(m.imag)) <= 1e-12:
        w, v = np.linalg.eigh(m.real)
        a = v.astype(complex) @ np.diag(np.sqrt(w.astype(complex)))
    else:
        # principal square root of a symmetric matrix is symmetric, so a @ a.T = a @ a = m
        a = np.asarray(scipy.linalg.sqrtm(m), dtype=complex)
    if not np.allclose(a @ a.T, m, rtol=0, atol=1e-10 * max(1.0, float(np.max(np.abs(m))))):
        raise RuntimeError("symmetric factorization failed (no admissible square root found)")
    return a


def tensor_to_json(t) -> dict:
    t = np.ascontiguousarray(np.asarray(t, dtype=complex))
    flat = t.reshape(-1)
    return {
        "shape": [int(s) for s in t.shape],
        "re": flat.real.tolist(),
        "im": flat.imag.tolist(),
    }


def tensor_from_json(data: dict):
    shape = tuple(int(s) for s in data["shape"])
    flat = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    return flat.reshape(shape)
