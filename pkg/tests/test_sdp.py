from itertools import combinations

import numpy as np
import pytest

from bmiopt import sdp
from bmiopt.lmi import (
    AffineMatExpr,
    RectExpr,
    Variables,
    assemble,
    linear_objective,
)
from bmiopt.sdp import IpmConfig, SdpSolution, adjoint_apply
from bmiopt.symmat import eig_sym, min_eig, max_eig


def lambda_max_problem(S):
    """min t s.t. t*I - S >= 0, encoded as S - t*I <= 0."""
    vs = Variables()
    t = vs.scalar("t")
    block = AffineMatExpr.from_rect(
        RectExpr.constant(S) - RectExpr.scalar_times(t, np.eye(S.shape[0]))
    )
    c, off = linear_objective(vs.refs, [(t, 1.0)])
    return assemble([block], (c, off), vs.refs)


def lp_problem(A, b):
    """min c @ x s.t. A x <= b, as one diagonal block (built by caller)."""
    m, n = A.shape
    vs = Variables()
    xs = [vs.scalar(f"x{i}") for i in range(n)]
    rows = RectExpr.constant(np.diag(-b))
    for i, v in enumerate(xs):
        rows = rows + RectExpr.scalar_times(v, np.diag(A[:, i]))
    return vs, xs, AffineMatExpr.from_rect(rows)


def lp_vertex_oracle(A, b, c):
    """Brute-force optimum of min c@x s.t. Ax <= b over basic vertices."""
    m, n = A.shape
    best = np.inf
    for rows in combinations(range(m), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        v = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ v <= b + 1e-9):
            best = min(best, float(c @ v))
    return best


class TestLambdaMax:
    def test_scalar(self):
        # min t s.t. [[t - 1]] >= 0
        p = lambda_max_problem(np.array([[1.0]]))
        sol = sdp.solve(p)
        assert sol.status == sdp.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-6)

    def test_analytic_2x2(self):
        p = lambda_max_problem(np.array([[0.0, 1.0], [1.0, 0.0]]))
        sol = sdp.solve(p)
        assert sol.status == sdp.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-6)

    def test_random_5x5_matches_eigenvalue(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            S = (lambda g: g + g.T)(rng.standard_normal((5, 5)))
            sol = sdp.solve(lambda_max_problem(S))
            assert sol.status == sdp.OPTIMAL
            assert sol.x[0] == pytest.approx(eig_sym(S)[-1], abs=1e-6)


class TestLinearPrograms:
    def test_separable(self):
        # min x1 + x2 s.t. diag(x1 - 1, x2 - 2) >= 0
        vs = Variables()
        x1, x2 = vs.scalar("x1"), vs.scalar("x2")
        block = AffineMatExpr.from_rect(
            RectExpr.constant(np.diag([1.0, 2.0]))
            - RectExpr.scalar_times(x1, np.diag([1.0, 0.0]))
            - RectExpr.scalar_times(x2, np.diag([0.0, 1.0]))
        )
        c, off = linear_objective(vs.refs, [(x1, 1.0), (x2, 1.0)])
        sol = sdp.solve(assemble([block], (c, off), vs.refs))
        assert sol.status == sdp.OPTIMAL
        assert np.allclose(sol.x, [1.0, 2.0], atol=1e-6)

    def test_random_lps_match_vertex_enumeration(self):
        rng = np.random.default_rng(7)
        for trial in range(8):
            n = 2 + trial % 2
            box = np.vstack([np.eye(n), -np.eye(n)])
            cuts = rng.standard_normal((4, n))
            cuts /= np.linalg.norm(cuts, axis=1, keepdims=True)
            A = np.vstack([box, cuts])
            b = np.concatenate([5.0 * np.ones(2 * n), rng.uniform(0.5, 2.0, 4)])
            c = rng.standard_normal(n)
            vs, xs, block = lp_problem(A, b)
            cvec, off = linear_objective(vs.refs, [(v, ci) for v, ci in zip(xs, c)])
            sol = sdp.solve(assemble([block], (cvec, off), vs.refs))
            assert sol.status == sdp.OPTIMAL
            assert sol.objective == pytest.approx(lp_vertex_oracle(A, b, c), abs=1e-6)


class TestSolutionQuality:
    def make_solved(self, seed=3):
        rng = np.random.default_rng(seed)
        S = (lambda g: g + g.T)(rng.standard_normal((4, 4)))
        p = lambda_max_problem(S)
        return p, sdp.solve(p)

    def test_kkt_certificates(self):
        p, sol = self.make_solved()
        assert sol.status == sdp.OPTIMAL
        for block, Wj in zip(p.blocks, sol.duals):
            assert min_eig(Wj) >= -1e-7
            Fx = block.evaluate(sol.x)
            assert max_eig(Fx) <= 1e-6
            assert abs(np.tensordot(Fx, Wj, axes=2)) <= 10 * 1e-7 * (1 + abs(sol.objective))

    def test_dual_residual(self):
        p, sol = self.make_solved()
        res = p.c.copy()
        for block, Wj in zip(p.blocks, sol.duals):
            res += adjoint_apply(block, Wj, p.total_dim)
        assert np.abs(res).max() <= 1e-7 * (1 + np.abs(p.c).max())

    def test_weak_duality_at_answer(self):
        p, sol = self.make_solved()
        assert sol.objective >= sol.dual_objective - 1e-6 * (1 + abs(sol.objective))

    def test_deterministic(self):
        p, sol1 = self.make_solved(9)
        sol2 = sdp.solve(p)
        assert sol1.iterations == sol2.iterations
        assert np.array_equal(sol1.x, sol2.x)


class TestStatuses:
    def test_infeasible(self):
        # x <= -1 and x >= 1 simultaneously
        vs = Variables()
        x = vs.scalar("x")
        b1 = AffineMatExpr.from_rect(RectExpr.scalar_times(x, [[1.0]]) + RectExpr.constant([[1.0]]))
        b2 = AffineMatExpr.from_rect(RectExpr.constant([[1.0]]) - RectExpr.scalar_times(x, [[1.0]]))
        c, off = linear_objective(vs.refs, [(x, 1.0)])
        sol = sdp.solve(assemble([b1, b2], (c, off), vs.refs), IpmConfig(max_iters=200))
        assert sol.status in (sdp.INFEASIBLE, sdp.NUMERICAL_FAILURE, sdp.MAX_ITERATIONS)
        assert sol.status == sdp.INFEASIBLE

    def test_unbounded(self):
        # min x s.t. x <= 1 (unbounded below)
        vs = Variables()
        x = vs.scalar("x")
        block = AffineMatExpr.from_rect(RectExpr.scalar_times(x, [[1.0]]) - RectExpr.constant([[1.0]]))
        c, off = linear_objective(vs.refs, [(x, 1.0)])
        sol = sdp.solve(assemble([block], (c, off), vs.refs), IpmConfig(max_iters=300))
        assert sol.status == sdp.UNBOUNDED

    def test_max_iterations(self):
        p = lambda_max_problem(np.array([[1.0]]))
        sol = sdp.solve(p, IpmConfig(max_iters=2))
        assert sol.status == sdp.MAX_ITERATIONS


class TestAdjoint:
    def test_identity_coefficient(self):
        vs = Variables()
        x1 = vs.scalar("x1")
        block = AffineMatExpr.from_rect(RectExpr.scalar_times(x1, np.eye(2)))
        out = adjoint_apply(block, np.eye(2), vs.total_dim)
        assert np.allclose(out, [2.0])

    def test_zero_multiplier(self):
        vs = Variables()
        x1 = vs.scalar("x1")
        block = AffineMatExpr.from_rect(RectExpr.scalar_times(x1, np.eye(2)))
        assert np.allclose(adjoint_apply(block, np.zeros((2, 2)), vs.total_dim), [0.0])

    def test_random_against_entrywise_sum(self):
        rng = np.random.default_rng(5)
        vs = Variables()
        P = vs.sym("P", 3)
        F = vs.rect("F", 2, 2)
        e = RectExpr(4, 4, rng.standard_normal((4, 4)))
        for v in vs.refs:
            e = e + RectExpr(4, 4, terms={v: rng.standard_normal((v.size, 4, 4))})
        block = AffineMatExpr.from_rect(e + e.T)
        Wr = (lambda g: g + g.T)(rng.standard_normal((4, 4)))
        out = adjoint_apply(block, Wr, vs.total_dim)
        for v in block.variables():
            for k in range(v.size):
                expected = float(np.sum(block.terms[v][k] * Wr))
                assert out[v.offset + k] == pytest.approx(expected, abs=1e-12)


class TestTrace:
    def test_trace_sink_called(self):
        rows = []
        p = lambda_max_problem(np.array([[2.0]]))
        sol = sdp.solve(p, IpmConfig(trace=rows.append))
        assert sol.status == sdp.OPTIMAL
        assert len(rows) == sol.iterations
        assert {"iter", "pobj", "gap", "mu"} <= set(rows[0])
