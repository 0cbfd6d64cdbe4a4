"""Dense symmetric-matrix utilities.

Eigenvalue helpers, stability measures, a Kronecker-based Lyapunov solver and
the svec/smat isometry used to scalarize matrix constraints. Rectangular
matrices are plain ``numpy.ndarray``; :class:`SymMat` exists to pin down exact
entry-level symmetry where round-trip guarantees matter.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exceptions import NumericalFailure, PreconditionError, ShapeError

SQRT2 = float(np.sqrt(2.0))


class SymMat:
    """Symmetric matrix whose upper triangle is authoritative.

    The lower triangle is mirrored on construction, so
    ``entries[i, j] == entries[j, i]`` holds exactly (not merely within
    floating-point tolerance). Instances are immutable.
    """

    __slots__ = ("entries",)

    def __init__(self, entries) -> None:
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ShapeError(f"expected a square matrix, got shape {a.shape}")
        mirrored = np.triu(a) + np.triu(a, 1).T
        mirrored.flags.writeable = False
        object.__setattr__(self, "entries", mirrored)

    def __setattr__(self, name, value):
        raise AttributeError("SymMat is immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"SymMat({self.entries!r})"

    @classmethod
    def identity(cls, n: int) -> "SymMat":
        return cls(np.eye(n))

    @classmethod
    def diag(cls, values) -> "SymMat":
        return cls(np.diag(np.asarray(values, dtype=float)))


def sym_entries(S, tol: float = 1e-10) -> np.ndarray:
    """Return the dense entries of ``S`` as an exactly symmetric array.

    Accepts a :class:`SymMat` or any square array-like that is symmetric up
    to a relative tolerance; small asymmetries are averaged away.
    """
    if isinstance(S, SymMat):
        return S.entries
    a = np.asarray(S, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    scale = 1.0 + float(np.abs(a).max(initial=0.0))
    if float(np.abs(a - a.T).max(initial=0.0)) > tol * scale:
        raise ShapeError("matrix is not symmetric")
    return sym_part(a)


def sym_part(a: np.ndarray) -> np.ndarray:
    """Exactly symmetric part (a + a.T) / 2."""
    return (a + a.T) / 2.0


def inner(a, b) -> float:
    """Trace inner product trace(a.T @ b)."""
    return float(np.tensordot(np.asarray(a, float), np.asarray(b, float), axes=2))


def eig_sym(S) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending."""
    a = sym_entries(S)
    try:
        return np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symmetric eigenvalue iteration failed: {exc}") from exc


def min_eig(S) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(eig_sym(S)[0])


def max_eig(S) -> float:
    """Largest eigenvalue of a symmetric matrix."""
    return float(eig_sym(S)[-1])


def spectral_abscissa(A) -> float:
    """Maximum real part over the eigenvalues of a square matrix."""
    a = np.asarray(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return -np.inf
    try:
        ev = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration failed: {exc}") from exc
    return float(ev.real.max())


def lyapunov_solve(A, Q) -> SymMat:
    """Solve A.T P + P A + Q = 0 for symmetric P, with A stable and Q psd.

    Uses a dense Kronecker linearization; intended for small state
    dimensions. The residual is verified against ``1e-9 * (1 + ||Q||_F)``.
    """
    a = np.asarray(A, dtype=float)
    q = sym_entries(Q)
    n = q.shape[0]
    if a.shape != (n, n):
        raise ShapeError(f"A has shape {a.shape}, expected {(n, n)}")
    if spectral_abscissa(a) >= 0:
        raise PreconditionError("A must be Hurwitz stable")
    qnorm = float(np.linalg.norm(q))
    if min_eig(q) < -1e-8 * (1.0 + qnorm):
        raise PreconditionError("Q must be positive semidefinite")
    eye = np.eye(n)
    K = np.kron(eye, a.T) + np.kron(a.T, eye)
    try:
        vec_p = np.linalg.solve(K, -q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"singular Kronecker system: {exc}") from exc
    p = sym_part(vec_p.reshape((n, n), order="F"))
    residual = float(np.linalg.norm(a.T @ p + p @ a + q))
    if residual > 1e-9 * (1.0 + qnorm):
        raise NumericalFailure(f"Lyapunov residual {residual:.3e} too large")
    return SymMat(p)


@lru_cache(maxsize=None)
def _tri_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    # column-major lower triangle: (0,0), (1,0), ..., (n-1,0), (1,1), ...
    rows = np.concatenate([np.arange(j, n) for j in range(n)])
    cols = np.concatenate([np.full(n - j, j) for j in range(n)])
    return rows, cols


@lru_cache(maxsize=None)
def _svec_scale(n: int) -> np.ndarray:
    rows, cols = _tri_indices(n)
    return np.where(rows == cols, 1.0, SQRT2)


def svec_dim(n: int) -> int:
    """Length of the svec image of an n x n symmetric matrix."""
    return n * (n + 1) // 2


def svec(S) -> np.ndarray:
    """Scaled lower-triangle vectorization with svec(A) @ svec(B) == A o B.

    Ordering is column-major over the lower triangle; off-diagonal entries
    are scaled by sqrt(2). This layout is frozen: the SDP problem data
    depends on it.
    """
    a = sym_entries(S)
    n = a.shape[0]
    rows, cols = _tri_indices(n)
    return a[rows, cols] * _svec_scale(n)


def smat(v) -> SymMat:
    """Inverse of :func:`svec`."""
    vec = np.asarray(v, dtype=float).ravel()
    m = vec.shape[0]
    n = round_triangular(m)
    rows, cols = _tri_indices(n)
    a = np.zeros((n, n))
    a[rows, cols] = vec / _svec_scale(n)
    a[cols, rows] = a[rows, cols]
    return SymMat(a)


def round_triangular(m: int) -> int:
    """Matrix dimension n with n(n+1)/2 == m, or raise ShapeError."""
    n = int((np.sqrt(8 * m + 1) - 1) / 2 + 0.5)
    if n * (n + 1) // 2 != m:
        raise ShapeError(f"length {m} is not a triangular number")
    return n


@lru_cache(maxsize=None)
def smat_basis(n: int) -> np.ndarray:
    """Tensor B with smat(e_k) == B[k]; shape (n(n+1)/2, n, n)."""
    m = svec_dim(n)
    out = np.zeros((m, n, n))
    rows, cols = _tri_indices(n)
    scale = _svec_scale(n)
    for k in range(m):
        i, j = int(rows[k]), int(cols[k])
        out[k, i, j] = 1.0 / scale[k]
        out[k, j, i] = 1.0 / scale[k]
    out.flags.writeable = False
    return out
