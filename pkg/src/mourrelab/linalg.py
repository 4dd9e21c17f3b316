"""Dense linear algebra kernel.

Operators are plain numpy arrays. Eigendecompositions are wrapped in
:class:`EigenSystem` so downstream code can carry the checksum of the matrix
that produced them (the eigensystem cache relies on it).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenSystem",
    "NotHermitianError",
    "ConvergenceError",
    "checksum",
    "is_hermitian",
    "eig_hermitian",
    "singular_values",
    "op_norm",
    "hs_norm",
    "commutator",
    "max_abs",
]

_RESIDUAL_PROBES = 64


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def checksum(op: np.ndarray) -> str:
    """SHA-256 over dtype, shape and the raw entries of ``op``."""
    arr = np.ascontiguousarray(op)
    h = hashlib.sha256()
    h.update(str(arr.dtype).encode())
    h.update(repr(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()


def max_abs(op: np.ndarray) -> float:
    return float(np.max(np.abs(op))) if op.size else 0.0


def is_hermitian(op: np.ndarray, atol: float = 1e-12) -> bool:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    scale = max(1.0, max_abs(op))
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= atol * scale)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray
    source_checksum: str = ""

    @property
    def dim(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        """Coordinates of ``psi`` in the eigenbasis."""
        return self.vectors.conj().T @ psi


def _check_square(op: np.ndarray) -> None:
    if op.ndim != 2 or op.shape[0] != op.shape[1] or op.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {op.shape}")


def eig_hermitian(op: np.ndarray, check: bool = True) -> EigenSystem:
    """Diagonalize a Hermitian matrix.

    Real symmetric input stays in real arithmetic. LAPACK's divide-and-conquer
    driver returns eigenvalues in ascending order and is deterministic for
    identical input on a given build.

    Raises NotHermitianError if ``op`` is not Hermitian to 1e-12 (relative to
    its largest entry) and ConvergenceError if the driver fails or the
    residual check does not hold.
    """
    op = np.asarray(op)
    _check_square(op)
    if not is_hermitian(op):
        dev = np.max(np.abs(op - op.conj().T))
        raise NotHermitianError(f"operator is not Hermitian (max |H - H*| = {dev:.3e})")
    if np.iscomplexobj(op) and not np.any(op.imag):
        op = op.real
    try:
        values, vectors = np.linalg.eigh(op)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed on {op.shape[0]}x{op.shape[0]} input: {exc}") from exc
    es = EigenSystem(values=values, vectors=vectors, source_checksum=checksum(op))
    if check:
        _check_residual(op, es)
    return es


def _check_residual(op: np.ndarray, es: EigenSystem) -> None:
    n = es.dim
    # Deterministic subset of columns keeps the check O(n^2) on large boxes.
    cols = np.unique(np.linspace(0, n - 1, min(n, _RESIDUAL_PROBES)).astype(int))
    v = es.vectors[:, cols]
    resid = np.max(np.abs(op @ v - v * es.values[cols]))
    scale = max_abs(op)
    if resid > 1e-9 * max(scale, 1e-300) + 1e-300:
        raise ConvergenceError(f"eigen-residual {resid:.3e} exceeds 1e-9 * {scale:.3e}")
    gram = v.conj().T @ es.vectors[:, cols]
    orth = np.max(np.abs(gram - np.eye(len(cols))))
    if orth > 1e-10:
        raise ConvergenceError(f"eigenvectors not orthonormal: {orth:.3e}")


def singular_values(op: np.ndarray, k: int | None = None) -> np.ndarray:
    """The ``k`` largest singular values, descending."""
    op = np.asarray(op)
    n = min(op.shape)
    if k is None:
        k = n
    if k > n or k < 0:
        raise ValueError(f"requested {k} singular values of a matrix with {n}")
    s = np.linalg.svd(op, compute_uv=False)
    return s[:k]


def op_norm(op: np.ndarray) -> float:
    op = np.asarray(op)
    if op.size == 0:
        return 0.0
    if op.shape[0] == op.shape[1] and is_hermitian(op):
        return float(np.max(np.abs(np.linalg.eigvalsh(op))))
    return float(np.linalg.norm(op, 2))


def hs_norm(op: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(np.asarray(op)) ** 2)))


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return ``xy - yx``."""
    if x.shape != y.shape or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x @ y - y @ x
