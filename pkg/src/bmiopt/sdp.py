"""Self-contained dense primal-dual interior-point solver for block-LMI
semidefinite programs.

Solves  min c @ x  s.t.  F_j(x) = C_j + sum_i x_i A_ji <= 0  with an
infeasible-start Mehrotra predictor-corrector method using the HKM search
direction in normal-equations form. Slacks are S_j = -F_j(x); the dual
problem is  max sum_j C_j o W_j  s.t.  c + sum_j A_j*(W_j) = 0, W_j >= 0,
so the returned multipliers W_j are exactly the Lagrange multipliers of the
blocks.

Designed for the dense, small-to-medium problems produced by the outer
sequential convex loop (decision dimensions up to a few hundred); no
sparsity is exploited.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import NumericalFailure
from .lmi import AffineMatExpr, SdpProblem
from .symmat import sym_part

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"

_DIVERGENCE_BOUND = 1e10


@dataclass(frozen=True)
class IpmConfig:
    """Interior-point solver settings."""

    tol_gap: float = 1e-7
    tol_feas: float = 1e-7
    max_iters: int = 100
    step_fraction: float = 0.98
    trace: Callable[[dict], None] | None = None

    def __post_init__(self):
        if min(self.tol_gap, self.tol_feas) <= 0 or self.max_iters <= 0:
            raise ValueError("tolerances and iteration limit must be positive")
        if not 0.0 < self.step_fraction < 1.0:
            raise ValueError("step_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SdpSolution:
    """Primal/dual answer for one block-LMI problem."""

    x: np.ndarray
    duals: tuple[np.ndarray, ...]
    status: str
    objective: float
    dual_objective: float
    gap: float
    primal_res: float
    dual_res: float
    iterations: int


class _Block:
    """Frozen per-block data: constant, stacked coefficients, global indices."""

    __slots__ = ("p", "C", "A", "gidx", "cnorm")

    def __init__(self, expr: AffineMatExpr):
        self.p = expr.dim
        self.C = expr.const
        tensors, idx = [], []
        for v in expr.variables():
            tensors.append(expr.terms[v])
            idx.append(np.arange(v.offset, v.offset + v.size))
        if tensors:
            self.A = np.concatenate(tensors, axis=0)
            self.gidx = np.concatenate(idx)
        else:
            self.A = np.zeros((0, self.p, self.p))
            self.gidx = np.zeros(0, dtype=int)
        self.cnorm = float(np.linalg.norm(self.C))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """A_j(x) = sum_i x_i A_ji over this block's own coordinates."""
        if self.gidx.size == 0:
            return np.zeros((self.p, self.p))
        return np.tensordot(x[self.gidx], self.A, axes=1)

    def adjoint(self, W: np.ndarray, out: np.ndarray) -> None:
        """Accumulate A_j*(W) into the global vector ``out``."""
        if self.gidx.size:
            out[self.gidx] += np.tensordot(self.A, W, axes=([1, 2], [0, 1]))


def adjoint_apply(block: AffineMatExpr, W: np.ndarray, total_dim: int) -> np.ndarray:
    """Adjoint of the block's linear map: coordinates A_i o W scattered into
    a full decision-vector."""
    if W.shape != (block.dim, block.dim):
        raise ValueError(f"multiplier shape {W.shape} != block dimension {block.dim}")
    out = np.zeros(total_dim)
    _Block(block).adjoint(sym_part(np.asarray(W, float)), out)
    return out


def _max_step(S: np.ndarray, dS: np.ndarray) -> float:
    """Largest alpha with S + alpha * dS >= 0, for S > 0 (exact, via the
    minimum eigenvalue of L^-1 dS L^-T)."""
    L = np.linalg.cholesky(S)
    t = np.linalg.solve(L, dS)
    B = np.linalg.solve(L, t.T).T
    lam = float(np.linalg.eigvalsh(sym_part(B))[0])
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def _chol_solver(M: np.ndarray):
    """Cholesky-backed solver for the normal equations, with one scaled-ridge
    retry on factorization failure. Returns None if both attempts fail."""
    scale = max(1.0, float(np.abs(np.diag(M)).max(initial=0.0)))
    for ridge in (0.0, 1e-12 * scale):
        try:
            L = np.linalg.cholesky(M + ridge * np.eye(M.shape[0]))
        except np.linalg.LinAlgError:
            continue

        def solve(rhs, L=L, M=M):
            y = np.linalg.solve(L, rhs)
            d = np.linalg.solve(L.T, y)
            # one refinement pass; cheap and helps near convergence
            r = rhs - M @ d
            y = np.linalg.solve(L, r)
            d = d + np.linalg.solve(L.T, y)
            return d

        return solve
    return None


def solve(problem: SdpProblem, config: IpmConfig | None = None) -> SdpSolution:
    """Solve a block-LMI SDP; returns primal point and block multipliers.

    Status ``optimal`` guarantees: relative duality gap <= tol_gap, primal
    and dual residuals <= tol_feas (scaled), multipliers psd up to
    tolerance. ``infeasible`` is declared when the dual objective diverges;
    ``unbounded`` when the primal objective diverges while near-feasible.
    """
    cfg = config or IpmConfig()
    blocks = [_Block(b) for b in problem.blocks]
    n = problem.total_dim
    c = problem.c
    cnorm = 1.0 + float(np.abs(c).max(initial=0.0))
    p_total = max(1, sum(b.p for b in blocks))

    x = np.zeros(n)
    S = [np.eye(b.p) for b in blocks]
    W = [np.eye(b.p) for b in blocks]

    status = MAX_ITERATIONS
    it = 0
    stalls = 0

    def residuals():
        Rp = [-(b.C + b.apply(x)) - Sj for b, Sj in zip(blocks, S)]
        rd = c.copy()
        for b, Wj in zip(blocks, W):
            b.adjoint(Wj, rd)
        return Rp, rd

    Rp, rd = residuals()
    for it in range(1, cfg.max_iters + 1):
        pobj = float(c @ x)
        dobj = float(sum(np.tensordot(b.C, Wj, axes=2) for b, Wj in zip(blocks, W)))
        gap_abs = float(sum(np.tensordot(Sj, Wj, axes=2) for Sj, Wj in zip(S, W)))
        mu = gap_abs / p_total
        prim_res = max((float(np.linalg.norm(R)) / (1.0 + b.cnorm) for R, b in zip(Rp, blocks)),
                       default=0.0)
        dual_res = float(np.abs(rd).max(initial=0.0)) / cnorm
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

        if cfg.trace is not None:
            cfg.trace({"iter": it - 1, "pobj": pobj, "dobj": dobj, "gap": rel_gap,
                       "primal_res": prim_res, "dual_res": dual_res, "mu": mu})

        if prim_res <= cfg.tol_feas and dual_res <= cfg.tol_feas and rel_gap <= cfg.tol_gap:
            status = OPTIMAL
            break
        if dobj > _DIVERGENCE_BOUND:
            status = INFEASIBLE
            break
        if pobj < -_DIVERGENCE_BOUND and prim_res <= 1e-6:
            status = UNBOUNDED
            break

        # normal-equations matrix M[i,k] = sum_j A_ji o (S_j^-1 A_jk W_j)
        try:
            Sinv = [np.linalg.inv(Sj) for Sj in S]
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break
        M = np.zeros((n, n))
        for b, Si, Wj in zip(blocks, Sinv, W):
            if b.gidx.size == 0:
                continue
            u = np.einsum("pq,kqr,rs->kps", Si, b.A, Wj)  # S^-1 A_k W
            M[np.ix_(b.gidx, b.gidx)] += np.einsum("ipq,kqp->ik", b.A, u)
        M = sym_part(M)
        solve_M = _chol_solver(M)
        if solve_M is None:
            status = NUMERICAL_FAILURE
            break

        def direction(sigma_mu, correction):
            rhs = -rd.copy()
            inner = []
            for j, (b, Si, Wj, Rj) in enumerate(zip(blocks, Sinv, W, Rp)):
                Z = -Wj - Si @ (Rj @ Wj + correction[j])
                if sigma_mu > 0.0:
                    Z = Z + sigma_mu * Si
                Z = sym_part(Z)
                inner.append(Z)
                b.adjoint(-Z, rhs)  # rhs = -rd - sum_j A_j*(inner_j)
            dx = solve_M(rhs)
            dS = [Rj - b.apply(dx) for b, Rj in zip(blocks, Rp)]
            dW = [sym_part(Z - Si @ (dSj @ Wj) + (Si @ (Rj @ Wj)))
                  for Z, Si, Wj, dSj, Rj in zip(inner, Sinv, W, dS, Rp)]
            return dx, dS, dW

        try:
            zero_corr = [np.zeros((b.p, b.p)) for b in blocks]
            dx_a, dS_a, dW_a = direction(0.0, zero_corr)
            ap_a = min(1.0, min((_max_step(Sj, dSj) for Sj, dSj in zip(S, dS_a)), default=np.inf))
            ad_a = min(1.0, min((_max_step(Wj, dWj) for Wj, dWj in zip(W, dW_a)), default=np.inf))
            mu_aff = float(sum(np.tensordot(Sj + ap_a * dSj, Wj + ad_a * dWj, axes=2)
                               for Sj, dSj, Wj, dWj in zip(S, dS_a, W, dW_a))) / p_total
            sigma = float(np.clip((max(mu_aff, 0.0) / max(mu, 1e-300)) ** 3, 0.0, 1.0))

            corr = [dSj @ dWj for dSj, dWj in zip(dS_a, dW_a)]
            dx, dS, dW = direction(sigma * mu, corr)

            tau = cfg.step_fraction
            ap = min(1.0, tau * min((_max_step(Sj, dSj) for Sj, dSj in zip(S, dS)), default=np.inf))
            ad = min(1.0, tau * min((_max_step(Wj, dWj) for Wj, dWj in zip(W, dW)), default=np.inf))
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break

        if max(ap, ad) < 1e-10:
            stalls += 1
            if stalls >= 5:
                status = NUMERICAL_FAILURE
                break
        else:
            stalls = 0

        x = x + ap * dx
        S = [sym_part(Sj + ap * dSj) for Sj, dSj in zip(S, dS)]
        W = [sym_part(Wj + ad * dWj) for Wj, dWj in zip(W, dW)]
        Rp, rd = residuals()

    pobj = float(c @ x)
    dobj = float(sum(np.tensordot(b.C, Wj, axes=2) for b, Wj in zip(blocks, W)))
    prim_res = max((float(np.linalg.norm(R)) / (1.0 + b.cnorm) for R, b in zip(Rp, blocks)),
                   default=0.0)
    dual_res = float(np.abs(rd).max(initial=0.0)) / cnorm
    rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return SdpSolution(
        x=x,
        duals=tuple(W),
        status=status,
        objective=pobj + problem.offset,
        dual_objective=dobj + problem.offset,
        gap=rel_gap,
        primal_res=prim_res,
        dual_res=dual_res,
        iterations=it,
    )
