"""Class-balanced batch selection.

All solvers minimise

    s^T z + lam * || omega - P^T z ||_1   s.t.  sum(z) = b,  z in {0, 1}^N

where ``s`` is a per-sample cost (negative entropy, or a negated uncertainty
score), ``P`` the probability matrix and ``omega`` the balance target.

* :func:`solve_enumeration` checks every subset (oracle, small N only).
* :func:`solve_branch_and_bound` is exact: best-first branch and bound over
  the LP relaxation, with the l1 term linearised by auxiliary variables.
* :func:`solve_local_search` is a greedy construction followed by 1-swap
  descent; it scales to pools of tens of thousands.

Ties are always resolved towards the lowest sample index.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import BalanceTarget, ProbabilityMatrix, SelectionVector
from .errors import (
    DimensionMismatch,
    InfeasibleBudget,
    InstanceTooLarge,
    LPInfeasible,
    NumericalFailure,
    Timeout,
    ValidationError,
)
from .simplex import BoundedLP

SOLVERS = ("enumeration", "branch_and_bound", "local_search")
BRANCHING = ("penalty", "most_fractional")
ENUMERATION_CAP = 2_000_000
INT_TOL = 1e-9


@dataclass(frozen=True)
class SelectorConfig:
    lambda_: float
    budget: int
    solver: str = "branch_and_bound"
    time_limit: float | None = None
    gap_tolerance: float | None = None
    enumeration_cap: int = ENUMERATION_CAP
    branching: str = "penalty"

    def __post_init__(self):
        if not (self.lambda_ >= 0 and math.isfinite(self.lambda_)):
            raise ValidationError(f"lambda must be finite and >= 0, got {self.lambda_}")
        if int(self.budget) != self.budget or self.budget < 1:
            raise ValidationError(f"budget must be a positive integer, got {self.budget}")
        if self.solver not in SOLVERS:
            raise ValidationError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.branching not in BRANCHING:
            raise ValidationError(f"unknown branching rule {self.branching!r}; choose from {BRANCHING}")
        if self.gap_tolerance is not None and self.gap_tolerance < 0:
            raise ValidationError("gap_tolerance must be >= 0")


@dataclass(frozen=True)
class SolveResult:
    selection: SelectionVector
    objective: float
    linear_term: float
    balance_term: float
    proof: str
    wall_time: float
    nodes: int = 0
    gap: float = 0.0
    lambda_: float = field(default=0.0, repr=False)


# ---------------------------------------------------------------------------
# helpers


def _check_inputs(scores, p: ProbabilityMatrix, target: BalanceTarget, b: int):
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.shape[0] != p.n:
        raise DimensionMismatch(f"scores have shape {s.shape}, P has {p.n} rows")
    if not np.all(np.isfinite(s)):
        raise ValidationError("scores must be finite")
    if target.c_classes != p.c_classes:
        raise DimensionMismatch(f"target has {target.c_classes} classes, P has {p.c_classes}")
    if b > p.n:
        raise InfeasibleBudget(f"budget {b} exceeds pool size {p.n}")
    if b < 1:
        raise InfeasibleBudget("budget must be >= 1")
    return s


def evaluate(scores, p: ProbabilityMatrix, target: BalanceTarget, indices, lam: float):
    """Return ``(objective, linear_term, balance_term)`` for an index set."""
    idx = np.asarray(sorted(indices), dtype=np.int64)
    s = np.asarray(scores, dtype=float)
    linear = float(s[idx].sum())
    balance = float(np.abs(target.counts - p.values[idx].sum(axis=0)).sum())
    return linear + lam * balance, linear, balance


def _result(s, p, target, idx, lam, proof, t0, nodes=0, gap=0.0) -> SolveResult:
    obj, lin, bal = evaluate(s, p, target, idx, lam)
    return SolveResult(
        selection=SelectionVector(tuple(int(i) for i in idx), p.n),
        objective=obj,
        linear_term=lin,
        balance_term=bal,
        proof=proof,
        wall_time=time.perf_counter() - t0,
        nodes=nodes,
        gap=gap,
        lambda_=lam,
    )


def bottom_b(scores, b: int) -> np.ndarray:
    """Indices of the b smallest scores; ties go to the lower index."""
    order = np.argsort(np.asarray(scores, dtype=float), kind="stable")
    return np.sort(order[:b])


# ---------------------------------------------------------------------------
# enumeration


def solve_enumeration(scores, p, target, b, lam, cap: int = ENUMERATION_CAP) -> SolveResult:
    """Exhaustive search; ties go to the lexicographically smallest index set."""
    t0 = time.perf_counter()
    s = _check_inputs(scores, p, target, b)
    total = math.comb(p.n, b)
    if total > cap:
        raise InstanceTooLarge(f"C({p.n}, {b}) = {total} subsets exceeds cap {cap}")
    chunk = max(1, 2**20 // max(1, b * p.c_classes))
    combos = itertools.combinations(range(p.n), b)
    best_obj = math.inf
    best_idx = None
    tol = 1e-12
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        lin = s[block].sum(axis=1)
        bal = np.abs(target.counts - p.values[block].sum(axis=1)).sum(axis=1)
        obj = lin + lam * bal
        m = float(obj.min())
        if m < best_obj - tol * max(1.0, abs(best_obj) if math.isfinite(best_obj) else 1.0):
            first = int(np.flatnonzero(obj <= m + tol * max(1.0, abs(m)))[0])
            best_obj = m
            best_idx = block[first]
    return _result(s, p, target, best_idx, lam, "optimal", t0, nodes=total)


# ---------------------------------------------------------------------------
# branch and bound


class _Relaxation:
    """LP relaxation with the l1 term split into ``u - v = omega - P^T z``.

    Variables are ``[z (N), u (C), v (C)]``; rows are the C class balances
    followed by the cardinality row. At an optimum ``u_i + v_i`` equals the
    absolute deviation of class i, i.e. the auxiliary bound variable ``t_i``.
    """

    def __init__(self, s, p: ProbabilityMatrix, target: BalanceTarget, b: int, lam: float):
        N, C = p.n, p.c_classes
        self.N, self.C, self.b = N, C, b
        self.s = s
        self.P = p.values
        self.omega = target.counts
        A = np.zeros((C + 1, N + 2 * C))
        A[:C, :N] = p.values.T
        A[:C, N : N + C] = np.eye(C)
        A[:C, N + C :] = -np.eye(C)
        A[C, :N] = 1.0
        self.A = A
        self.rhs = np.concatenate([target.counts, [float(b)]])
        self.c = np.concatenate([s, np.full(2 * C, lam)])
        self.hi_aux = np.full(2 * C, np.inf)

    def lp(self, lo_z, hi_z) -> BoundedLP:
        lo = np.concatenate([lo_z, np.zeros(2 * self.C)])
        hi = np.concatenate([hi_z, self.hi_aux])
        return BoundedLP(self.A, self.rhs, self.c, lo, hi)

    def start_basis(self, lo_z, hi_z):
        """A primal-feasible basis built directly, so no phase 1 is needed."""
        N, C = self.N, self.C
        ones = np.flatnonzero(lo_z > 0.5)
        free = np.flatnonzero(hi_z > lo_z)
        need = self.b - ones.size
        if need < 0 or need > free.size:
            raise LPInfeasible("branching bounds leave no way to pick b samples")
        at_upper = np.zeros(N + 2 * C, dtype=bool)
        at_upper[ones] = True
        z = lo_z.astype(float).copy()
        if free.size:
            order = free[np.argsort(self.s[free], kind="stable")]
            if need > 0:
                at_upper[order[: need - 1]] = True
                basic_z = int(order[need - 1])
            else:
                basic_z = int(order[0])
            z[order[:need]] = 1.0
        else:
            basic_z = int(ones[0]) if ones.size else 0
            at_upper[basic_z] = False
        resid = self.omega - self.P.T @ z
        aux = np.where(resid >= 0, N + np.arange(C), N + C + np.arange(C))
        basis = np.concatenate([aux, [basic_z]])
        return basis, at_upper


def lp_relaxation_bound(scores, p: ProbabilityMatrix, target: BalanceTarget, b: int, lam: float) -> float:
    """Optimal value of the continuous relaxation, a lower bound on every selection."""
    s = _check_inputs(scores, p, target, b)
    rel = _Relaxation(s, p, target, b, lam)
    lo, hi = np.zeros(p.n), np.ones(p.n)
    basis, at_upper = rel.start_basis(lo, hi)
    return rel.lp(lo, hi).primal(basis, at_upper).objective


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lo: np.ndarray = field(compare=False)
    hi: np.ndarray = field(compare=False)
    lp_value: float = field(compare=False)
    x: np.ndarray = field(compare=False)
    basis: np.ndarray = field(compare=False)
    at_upper: np.ndarray = field(compare=False)
    reduced_costs: np.ndarray = field(compare=False)
    binv: np.ndarray = field(compare=False)


def _fix_by_reduced_cost(node: _Node, N: int, cutoff: float) -> None:
    """Fix nonbasic z_j whose move off its bound alone lifts the LP value past ``cutoff``."""
    d = node.reduced_costs[:N]
    free = node.hi > node.lo
    nonbasic = np.ones(N, dtype=bool)
    nonbasic[node.basis[node.basis < N]] = False
    at_up = node.at_upper[:N]
    cand = free & nonbasic
    to_zero = cand & ~at_up & (node.lp_value + d >= cutoff)
    to_one = cand & at_up & (node.lp_value - d >= cutoff)
    if to_zero.any() or to_one.any():
        node.lo = node.lo.copy()
        node.hi = node.hi.copy()
        node.hi[to_zero] = 0.0
        node.lo[to_one] = 1.0


def _round(x_z, lo_z, hi_z, b):
    """Top-b of the relaxed z (fixed ones first, fixed zeros never)."""
    key = np.where(hi_z < 0.5, -np.inf, np.where(lo_z > 0.5, np.inf, x_z))
    order = np.lexsort((np.arange(key.size), -key))
    return np.sort(order[:b])


def solve_branch_and_bound(scores, p, target, cfg: SelectorConfig, incumbent=None) -> SolveResult:
    """Exact solve by LP-based branch and bound.

    Best-first on the LP bound. The branching variable is the fractional
    ``z_i`` with the largest dual penalty (the smaller of its down and up
    penalties, see :func:`_dual_penalties`); ``branching="most_fractional"``
    picks the ``z_i`` closest to 0.5 instead.
    Incumbents come from rounding each node's relaxation; a known feasible
    index set may be passed as ``incumbent`` to warm the search.
    Child relaxations are re-solved with the dual simplex from the parent's
    optimal basis.
    """
    t0 = time.perf_counter()
    b, lam = int(cfg.budget), float(cfg.lambda_)
    s = _check_inputs(scores, p, target, b)
    N = p.n
    if lam == 0.0:
        # cardinality-constrained linear objective: the relaxation is integral
        return _result(s, p, target, bottom_b(s, b), lam, "optimal", t0, nodes=1)

    rel = _Relaxation(s, p, target, b, lam)
    best = [math.inf, None]

    def offer(idx):
        obj = evaluate(s, p, target, idx, lam)[0]
        if obj < best[0] - 1e-12 * max(1.0, abs(obj)):
            best[0], best[1] = obj, np.asarray(idx)

    if incumbent is not None:
        offer(np.asarray(sorted(incumbent), dtype=np.int64))

    lo0 = np.zeros(N)
    hi0 = np.ones(N)
    basis, at_upper = rel.start_basis(lo0, hi0)
    sol = rel.lp(lo0, hi0).primal(basis, at_upper)
    seq = itertools.count()
    heap = [_Node(sol.objective, next(seq), lo0, hi0, sol.objective, sol.x, sol.basis, sol.at_upper, sol.reduced_costs, sol.binv)]
    offer(_round(sol.x[:N], lo0, hi0, b))
    root_bound = sol.objective
    nodes = 1
    gap_tol = cfg.gap_tolerance

    def prune_level():
        return best[0] - 1e-10 * max(1.0, abs(best[0]))

    proof = "optimal"
    lower = root_bound
    while heap:
        node = heap[0]
        lower = node.bound
        if lower >= prune_level():
            heap.clear()
            break
        if gap_tol is not None and math.isfinite(best[0]):
            if (best[0] - lower) <= gap_tol * max(abs(best[0]), 1e-10):
                proof = "gap-bounded"
                break
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            if best[1] is None:
                raise Timeout(f"no feasible selection found within {cfg.time_limit}s")
            # the incumbent stands, with its measured gap but no guarantee
            proof = "heuristic"
            break
        heapq.heappop(heap)
        if math.isfinite(best[0]):
            _fix_by_reduced_cost(node, N, prune_level())
        xz = node.x[:N]
        frac = np.minimum(xz - node.lo, node.hi - xz)
        frac = np.where(node.hi > node.lo, frac, 0.0)
        if frac.max() <= INT_TOL:
            offer(np.flatnonzero(xz > 0.5))
            continue
        fractional = np.flatnonzero(frac > INT_TOL)
        if cfg.branching == "most_fractional":
            q = int(fractional[np.argmin(np.abs(xz[fractional] - 0.5))])
            pen = {1.0: 0.0, 0.0: 0.0}
        else:
            down, up = _dual_penalties(rel, node, fractional)
            lo_pen, hi_pen = np.minimum(down, up), np.maximum(down, up)
            k = int(np.lexsort((fractional, -hi_pen, -lo_pen))[0])
            q = int(fractional[k])
            pen = {1.0: float(up[k]), 0.0: float(down[k])}
        for val in (1.0, 0.0):
            if node.lp_value + pen[val] >= prune_level():
                continue
            lo, hi = node.lo.copy(), node.hi.copy()
            lo[q] = hi[q] = val
            try:
                child = _solve_child(rel, lo, hi, node)
            except LPInfeasible:
                continue
            nodes += 1
            bound = max(child.objective, node.bound, node.lp_value + pen[val])
            offer(_round(child.x[:N], lo, hi, b))
            if bound < prune_level():
                heapq.heappush(
                    heap,
                    _Node(bound, next(seq), lo, hi, child.objective, child.x, child.basis, child.at_upper,
                          child.reduced_costs, child.binv),
                )
    if best[1] is None:
        raise NumericalFailure("branch and bound finished without a feasible selection")
    if heap and proof != "optimal":
        lower = heap[0].bound
    gap = 0.0 if proof == "optimal" else max(0.0, best[0] - lower) / max(abs(best[0]), 1e-10)
    return _result(s, p, target, best[1], lam, proof, t0, nodes=nodes, gap=gap)


def _dual_penalties(rel: _Relaxation, node: _Node, fractional):
    """Lower bounds on the LP increase from rounding each fractional z down / up.

    One dual simplex ratio test per basic row: the first dual pivot raises the
    objective by (primal infeasibility) x (dual step), and later pivots never
    lower it.
    """
    N, C = rel.N, rel.C
    pos = np.empty(N + 2 * C, dtype=np.int64)
    pos[node.basis] = np.arange(node.basis.size)
    rows = pos[fractional]
    alpha = node.binv[rows] @ rel.A
    hi = np.concatenate([node.hi, rel.hi_aux])
    lo = np.concatenate([node.lo, np.zeros(2 * C)])
    movable = hi > lo
    movable[node.basis] = False
    at_up = node.at_upper
    absd = np.abs(node.reduced_costs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = absd / np.abs(alpha)
    tol = 1e-9
    elig_down = np.where(at_up, alpha < -tol, alpha > tol) & movable
    elig_up = np.where(at_up, alpha > tol, alpha < -tol) & movable
    step_down = np.where(elig_down, ratio, np.inf).min(axis=1)
    step_up = np.where(elig_up, ratio, np.inf).min(axis=1)
    f = node.x[fractional]
    return f * step_down, (1.0 - f) * step_up


def _solve_child(rel: _Relaxation, lo, hi, parent: _Node):
    lp = rel.lp(lo, hi)
    try:
        return lp.dual(parent.basis, parent.at_upper, parent.binv)
    except NumericalFailure:
        basis, at_upper = rel.start_basis(lo, hi)
        return lp.primal(basis, at_upper)


# ---------------------------------------------------------------------------
# local search


def _l1_change(r, P, colmax, rowsum, buf):
    """``||r - p_j||_1 - ||r||_1`` for every row ``p_j`` of ``P``.

    Per class the change is ``p - 2 * min(p, r)`` when ``r > 0`` and ``+p``
    otherwise. Classes with ``r_i >= max_j p_ji`` therefore contribute
    ``-p_ji`` and need no elementwise work. ``rowsum`` holds the row sums of
    ``P`` and ``buf`` is scratch space shaped like ``P``.
    """
    full = r >= colmax
    if full.all():
        return -rowsum
    np.minimum(P, np.where(full, 0.0, np.maximum(r, 0.0)), out=buf)
    out = rowsum - 2.0 * buf.sum(axis=1)
    if full.any():
        out -= 2.0 * (P @ full.astype(float))
    return out


def solve_local_search(scores, p, target, cfg: SelectorConfig) -> SolveResult:
    """Greedy construction plus first-improvement 1-swap descent."""
    t0 = time.perf_counter()
    b, lam = int(cfg.budget), float(cfg.lambda_)
    s = _check_inputs(scores, p, target, b)
    P = p.values
    colmax = P.max(axis=0)
    rowsum = P.sum(axis=1)
    buf = np.empty_like(P)
    N = p.n
    deadline = None if cfg.time_limit is None else t0 + cfg.time_limit

    chosen = np.zeros(N, dtype=bool)
    r = target.counts.astype(float).copy()
    for step in range(b):
        if deadline is not None and time.perf_counter() > deadline:
            raise Timeout(f"greedy construction incomplete after {cfg.time_limit}s ({step}/{b})")
        gain = s if lam == 0.0 else s + lam * _l1_change(r, P, colmax, rowsum, buf)
        gain = np.where(chosen, np.inf, gain)
        j = int(np.argmin(gain))
        chosen[j] = True
        r -= P[j]

    proof = "heuristic"
    if lam > 0.0:
        improved = True
        while improved:
            improved = False
            for j in np.flatnonzero(chosen):
                if deadline is not None and time.perf_counter() > deadline:
                    improved = False
                    break
                if not chosen[j]:
                    continue
                rj = r + P[j]
                base = np.abs(rj).sum() - np.abs(r).sum()
                cur = float(np.abs(r).sum()) * lam + float(s[chosen].sum())
                # each swap-in changes the l1 term by at least -rowsum[k]
                floor = np.where(chosen, np.inf, s - lam * rowsum).min() - s[j] + lam * base
                if floor >= -1e-12 * max(1.0, abs(cur)):
                    continue
                delta = s - s[j] + lam * (_l1_change(rj, P, colmax, rowsum, buf) + base)
                delta = np.where(chosen, np.inf, delta)
                k = int(np.argmin(delta))
                if delta[k] < -1e-12 * max(1.0, abs(cur)):
                    chosen[j] = False
                    chosen[k] = True
                    r = rj - P[k]
                    improved = True
    return _result(s, p, target, np.flatnonzero(chosen), lam, proof, t0)


# ---------------------------------------------------------------------------


def solve_cbal(scores, p: ProbabilityMatrix, target: BalanceTarget, cfg: SelectorConfig) -> SolveResult:
    """Dispatch to the solver named in ``cfg``.

    ``scores`` is the per-sample cost vector: the output of
    :func:`cbal.scoring.batch_negative_entropy` for entropy selection, or
    ``UncertaintyVector.as_costs()`` for uncertainty-vector and BALD scores.
    """
    if cfg.solver == "enumeration":
        return solve_enumeration(scores, p, target, int(cfg.budget), float(cfg.lambda_), cfg.enumeration_cap)
    if cfg.solver == "branch_and_bound":
        return solve_branch_and_bound(scores, p, target, cfg)
    return solve_local_search(scores, p, target, cfg)
