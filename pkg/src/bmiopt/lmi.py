"""Modeling layer for block-LMI problems.

Named scalar/rectangular/symmetric decision variables are flattened into one
decision vector (declaration order; symmetric variables enter via svec,
rectangular ones row-major). :class:`RectExpr` is an affine rectangular
matrix-valued map of the decision vector; :class:`AffineMatExpr` is its
symmetric specialization and the carrier of every constraint block
``F(x) <= 0`` handed to the SDP solver.

The decision set is all of R^n. Bound constraints on variables are not
modeled implicitly; encode them as explicit diagonal blocks if needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import ShapeError, StructureError
from .symmat import SymMat, smat, smat_basis, svec, svec_dim, sym_part

SCALAR = "scalar"
RECT = "rect"
SYM = "sym"


@dataclass(frozen=True)
class VarRef:
    """Handle for one declared decision variable."""

    vid: int
    name: str
    kind: str
    shape: tuple[int, int]
    offset: int
    size: int

    def __repr__(self) -> str:
        return f"VarRef({self.name}:{self.kind}{self.shape}@{self.offset})"


class Variables:
    """Registry assigning decision-vector slots in declaration order."""

    def __init__(self) -> None:
        self._refs: list[VarRef] = []
        self._names: set[str] = set()
        self._total = 0

    def _add(self, name: str, kind: str, shape: tuple[int, int], size: int) -> VarRef:
        if name in self._names:
            raise StructureError(f"duplicate variable name {name!r}")
        ref = VarRef(len(self._refs), name, kind, shape, self._total, size)
        self._refs.append(ref)
        self._names.add(name)
        self._total += size
        return ref

    def scalar(self, name: str) -> VarRef:
        return self._add(name, SCALAR, (1, 1), 1)

    def rect(self, name: str, rows: int, cols: int) -> VarRef:
        if rows < 1 or cols < 1:
            raise ShapeError("variable dimensions must be positive")
        return self._add(name, RECT, (rows, cols), rows * cols)

    def sym(self, name: str, dim: int) -> VarRef:
        if dim < 1:
            raise ShapeError("variable dimensions must be positive")
        return self._add(name, SYM, (dim, dim), svec_dim(dim))

    @property
    def refs(self) -> tuple[VarRef, ...]:
        return tuple(self._refs)

    @property
    def total_dim(self) -> int:
        return self._total


@lru_cache(maxsize=None)
def _rect_basis(rows: int, cols: int) -> np.ndarray:
    out = np.zeros((rows * cols, rows, cols))
    for k in range(rows * cols):
        out[k, k // cols, k % cols] = 1.0  # row-major
    out.flags.writeable = False
    return out


def var_basis(v: VarRef) -> np.ndarray:
    """Tensor B with value(x) == sum_k x[offset+k] * B[k]."""
    if v.kind == SYM:
        return smat_basis(v.shape[0])
    return _rect_basis(*v.shape)


def extract_value(x: np.ndarray, v: VarRef):
    """Variable value at decision vector x: float, (r,c) array, or (d,d) array."""
    seg = np.asarray(x, float)[v.offset : v.offset + v.size]
    if v.kind == SCALAR:
        return float(seg[0])
    if v.kind == SYM:
        return smat(seg).entries
    return seg.reshape(v.shape)


def pack_value(v: VarRef, value) -> np.ndarray:
    """Decision-vector coordinates representing ``value`` for variable v."""
    if v.kind == SCALAR:
        return np.array([float(value)])
    a = np.asarray(value, float)
    if a.shape != v.shape:
        raise ShapeError(f"value shape {a.shape} != variable shape {v.shape}")
    if v.kind == SYM:
        return svec(SymMat(a))
    return a.reshape(-1)


def pack_point(assignments: dict[VarRef, object], total_dim: int) -> np.ndarray:
    """Assemble a full decision vector from per-variable values."""
    x = np.zeros(total_dim)
    for v, val in assignments.items():
        x[v.offset : v.offset + v.size] = pack_value(v, val)
    return x


class RectExpr:
    """Affine rectangular matrix-valued map of the decision vector."""

    __slots__ = ("rows", "cols", "const", "terms")

    def __init__(self, rows: int, cols: int, const: np.ndarray | None = None,
                 terms: dict[VarRef, np.ndarray] | None = None) -> None:
        self.rows = int(rows)
        self.cols = int(cols)
        self.const = np.zeros((rows, cols)) if const is None else np.asarray(const, float)
        if self.const.shape != (rows, cols):
            raise ShapeError(f"constant shape {self.const.shape} != ({rows}, {cols})")
        self.terms = {} if terms is None else dict(terms)
        for v, t in self.terms.items():
            if t.shape != (v.size, rows, cols):
                raise ShapeError(f"coefficient tensor for {v.name} has shape {t.shape}")

    # -- constructors -------------------------------------------------
    @staticmethod
    def zeros(rows: int, cols: int) -> "RectExpr":
        return RectExpr(rows, cols)

    @staticmethod
    def constant(a) -> "RectExpr":
        a = np.atleast_2d(np.asarray(a, float))
        return RectExpr(a.shape[0], a.shape[1], a)

    @staticmethod
    def variable(v: VarRef) -> "RectExpr":
        r, c = v.shape
        return RectExpr(r, c, terms={v: var_basis(v).copy()})

    @staticmethod
    def scalar_times(v: VarRef, m) -> "RectExpr":
        """Expression value(x) = x_v * m for a scalar variable v."""
        if v.kind != SCALAR:
            raise ShapeError(f"{v.name} is not scalar")
        m = np.atleast_2d(np.asarray(m, float))
        return RectExpr(m.shape[0], m.shape[1], terms={v: m[None, :, :].copy()})

    # -- algebra ------------------------------------------------------
    def _combined(self, other: "RectExpr", sign: float) -> "RectExpr":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeError("shape mismatch in expression sum")
        terms = {v: t.copy() for v, t in self.terms.items()}
        for v, t in other.terms.items():
            if v in terms:
                terms[v] = terms[v] + sign * t
            else:
                terms[v] = sign * t
        return RectExpr(self.rows, self.cols, self.const + sign * other.const, terms)

    def __add__(self, other):
        other = other if isinstance(other, RectExpr) else RectExpr.constant(other)
        return self._combined(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        other = other if isinstance(other, RectExpr) else RectExpr.constant(other)
        return self._combined(other, -1.0)

    def __rsub__(self, other):
        return RectExpr.constant(other)._combined(self, -1.0)

    def __neg__(self):
        return self * (-1.0)

    def __mul__(self, scale: float):
        s = float(scale)
        return RectExpr(self.rows, self.cols, s * self.const,
                        {v: s * t for v, t in self.terms.items()})

    __rmul__ = __mul__

    def lmul(self, m) -> "RectExpr":
        """m @ expr for a constant matrix m."""
        m = np.atleast_2d(np.asarray(m, float))
        if m.shape[1] != self.rows:
            raise ShapeError("lmul shape mismatch")
        return RectExpr(m.shape[0], self.cols, m @ self.const,
                        {v: np.einsum("pr,krc->kpc", m, t) for v, t in self.terms.items()})

    def rmul(self, m) -> "RectExpr":
        """expr @ m for a constant matrix m."""
        m = np.atleast_2d(np.asarray(m, float))
        if m.shape[0] != self.cols:
            raise ShapeError("rmul shape mismatch")
        return RectExpr(self.rows, m.shape[1], self.const @ m,
                        {v: np.einsum("krc,cq->krq", t, m) for v, t in self.terms.items()})

    def __matmul__(self, other):
        if isinstance(other, RectExpr):
            raise ShapeError("product of two expressions is not affine")
        return self.rmul(other)

    def __rmatmul__(self, other):
        return self.lmul(other)

    @property
    def T(self) -> "RectExpr":
        return RectExpr(self.cols, self.rows, self.const.T,
                        {v: t.transpose(0, 2, 1) for v, t in self.terms.items()})

    # -- evaluation ---------------------------------------------------
    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        out = self.const.copy()
        for v, t in self.terms.items():
            if v.offset + v.size > x.shape[0]:
                raise ShapeError("decision vector too short for expression")
            out += np.tensordot(x[v.offset : v.offset + v.size], t, axes=1)
        return out

    def coeff_tensor(self, total_dim: int) -> np.ndarray:
        """Dense jacobian d(value)/dx as a (total_dim, rows, cols) tensor."""
        out = np.zeros((total_dim, self.rows, self.cols))
        for v, t in self.terms.items():
            out[v.offset : v.offset + v.size] = t
        return out

    def variables(self) -> tuple[VarRef, ...]:
        return tuple(sorted(self.terms, key=lambda v: v.offset))


def rect_block(grid: list[list]) -> RectExpr:
    """Assemble a block matrix of RectExpr / ndarray entries."""
    rows = []
    for row in grid:
        exprs = [e if isinstance(e, RectExpr) else RectExpr.constant(e) for e in row]
        if len({e.rows for e in exprs}) != 1:
            raise ShapeError("inconsistent row heights in block")
        rows.append(exprs)
    widths = [e.cols for e in rows[0]]
    for r in rows:
        if [e.cols for e in r] != widths:
            raise ShapeError("inconsistent column widths in block")
    heights = [r[0].rows for r in rows]
    total_r, total_c = sum(heights), sum(widths)
    const = np.zeros((total_r, total_c))
    terms: dict[VarRef, np.ndarray] = {}
    r0 = 0
    for r, h in zip(rows, heights):
        c0 = 0
        for e, w in zip(r, widths):
            const[r0 : r0 + h, c0 : c0 + w] = e.const
            for v, t in e.terms.items():
                if v not in terms:
                    terms[v] = np.zeros((v.size, total_r, total_c))
                terms[v][:, r0 : r0 + h, c0 : c0 + w] += t
            c0 += w
        r0 += h
    return RectExpr(total_r, total_c, const, terms)


class AffineMatExpr:
    """Symmetric affine matrix-valued map; the unit of one LMI block F(x) <= 0.

    Every stored coefficient matrix is exactly symmetric, so ``evaluate``
    returns an exactly symmetric matrix for every x.
    """

    __slots__ = ("dim", "const", "terms")

    def __init__(self, dim: int, const: np.ndarray, terms: dict[VarRef, np.ndarray]) -> None:
        self.dim = int(dim)
        self.const = const
        self.terms = terms

    @staticmethod
    def from_rect(e: RectExpr) -> "AffineMatExpr":
        """Symmetrize a square RectExpr: (e + e.T) / 2, exact per entry."""
        if e.rows != e.cols:
            raise ShapeError("cannot symmetrize a non-square expression")
        const = sym_part(e.const)
        terms = {v: (t + t.transpose(0, 2, 1)) / 2.0 for v, t in e.terms.items()}
        return AffineMatExpr(e.rows, const, terms)

    @staticmethod
    def constant(a) -> "AffineMatExpr":
        return AffineMatExpr.from_rect(RectExpr.constant(a))

    def as_rect(self) -> RectExpr:
        return RectExpr(self.dim, self.dim, self.const.copy(),
                        {v: t.copy() for v, t in self.terms.items()})

    def __add__(self, other):
        if isinstance(other, AffineMatExpr):
            other = other.as_rect()
        return AffineMatExpr.from_rect(self.as_rect() + other)

    def __sub__(self, other):
        if isinstance(other, AffineMatExpr):
            other = other.as_rect()
        return AffineMatExpr.from_rect(self.as_rect() - other)

    def __mul__(self, scale: float):
        return AffineMatExpr.from_rect(self.as_rect() * float(scale))

    __rmul__ = __mul__

    def shifted(self, eps: float) -> "AffineMatExpr":
        """Add eps * I to the constant part (strictness shift)."""
        return AffineMatExpr(self.dim, self.const + eps * np.eye(self.dim), self.terms)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        out = self.const.copy()
        x = np.asarray(x, float)
        for v, t in self.terms.items():
            out += np.tensordot(x[v.offset : v.offset + v.size], t, axes=1)
        return out

    def coeff_tensor(self, total_dim: int) -> np.ndarray:
        out = np.zeros((total_dim, self.dim, self.dim))
        for v, t in self.terms.items():
            out[v.offset : v.offset + v.size] = t
        return out

    def variables(self) -> tuple[VarRef, ...]:
        return tuple(sorted(self.terms, key=lambda v: v.offset))


def plus_transpose(e: RectExpr) -> AffineMatExpr:
    """e + e.T as a symmetric expression (no 1/2 factor)."""
    if e.rows != e.cols:
        raise ShapeError("plus_transpose needs a square expression")
    return AffineMatExpr.from_rect(e * 2.0)  # (2e + 2e.T)/2 == e + e.T


def sym_congruence(L, X, R) -> AffineMatExpr:
    """Symmetrized congruence L.T X R + R.T X.T L, affine in X.

    X may be a VarRef or any RectExpr; L and R are constant matrices with
    L: (r x p), R: (c x p) for an (r x c)-shaped X.
    """
    xe = RectExpr.variable(X) if isinstance(X, VarRef) else X
    L = np.atleast_2d(np.asarray(L, float))
    R = np.atleast_2d(np.asarray(R, float))
    if L.shape[0] != xe.rows or R.shape[0] != xe.cols or L.shape[1] != R.shape[1]:
        raise ShapeError("congruence shape mismatch")
    return plus_transpose(xe.lmul(L.T).rmul(R))


def embed_expr(e: AffineMatExpr, corner: slice, dim: int) -> AffineMatExpr:
    """Place a p x p symmetric expression into rows/cols ``corner`` of a
    dim x dim zero expression."""
    start, stop = corner.indices(dim)[:2]
    if stop - start != e.dim:
        raise ShapeError("corner size does not match expression dimension")
    const = np.zeros((dim, dim))
    const[start:stop, start:stop] = e.const
    terms = {}
    for v, t in e.terms.items():
        big = np.zeros((v.size, dim, dim))
        big[:, start:stop, start:stop] = t
        terms[v] = big
    return AffineMatExpr(dim, const, terms)


@dataclass(frozen=True)
class SdpProblem:
    """min c @ x + offset  s.t.  F_j(x) <= 0 for each block j."""

    variables: tuple[VarRef, ...]
    blocks: tuple[AffineMatExpr, ...]
    c: np.ndarray
    offset: float = 0.0

    @property
    def total_dim(self) -> int:
        return sum(v.size for v in self.variables)


def linear_objective(variables: tuple[VarRef, ...], terms: list[tuple[VarRef, object]],
                     offset: float = 0.0) -> tuple[np.ndarray, float]:
    """Build the objective vector from per-variable weights.

    A scalar weight w on a scalar variable adds w * x; a matrix weight L on a
    matrix variable adds trace(L.T @ V) (for symmetric variables L is
    symmetrized first).
    """
    total = sum(v.size for v in variables)
    c = np.zeros(total)
    for v, w in terms:
        if v.kind == SCALAR:
            c[v.offset] += float(w)
        elif v.kind == SYM:
            c[v.offset : v.offset + v.size] += svec(SymMat(sym_part(np.asarray(w, float))))
        else:
            c[v.offset : v.offset + v.size] += np.asarray(w, float).reshape(-1)
    return c, float(offset)


def assemble(blocks, objective, variables) -> SdpProblem:
    """Validate and freeze an SDP problem.

    ``objective`` is either an (c, offset) pair or a plain coefficient
    vector. Raises StructureError for unknown variables, duplicate ids, or
    an empty block list.
    """
    blocks = tuple(blocks)
    variables = tuple(variables)
    if not blocks:
        raise StructureError("an SDP problem needs at least one block")
    ids = [v.vid for v in variables]
    if len(set(ids)) != len(ids):
        raise StructureError("duplicate variable ids")
    offset_check = 0
    for v in variables:
        if v.offset != offset_check:
            raise StructureError(f"variable {v.name} breaks the declaration-order layout")
        offset_check += v.size
    known = set(variables)
    for b in blocks:
        for v in b.variables():
            if v not in known:
                raise StructureError(f"block references unknown variable {v.name}")
    if isinstance(objective, tuple):
        c, offset = objective
    else:
        c, offset = np.asarray(objective, float), 0.0
    c = np.asarray(c, float)
    if c.shape != (offset_check,):
        raise StructureError(f"objective length {c.shape} != decision dimension {offset_check}")
    return SdpProblem(variables, blocks, c, float(offset))
