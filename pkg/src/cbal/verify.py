"""Built-in self-check suite.

Each check family compares a production routine with an independent
reference on seeded random instances and reports the worst discrepancy.
A fault can be injected into any family to confirm a failure is detected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balance import l1_score
from .core import BalanceTarget, DistanceMatrix, validate_probability_matrix
from .greedy import greedy_class_balanced, kcenter_greedy
from .scoring import batch_negative_entropy
from .simulator.learner import loss_and_grad
from .solvers import SelectorConfig, lp_relaxation_bound, solve_branch_and_bound, solve_cbal, solve_enumeration


@dataclass(frozen=True)
class CheckResult:
    family: str
    passed: bool
    instances: int
    worst: float
    detail: str


def _instance(rng, max_n=12, max_c=4, max_b=4):
    N = int(rng.integers(4, max_n + 1))
    C = int(rng.integers(2, max_c + 1))
    b = int(rng.integers(1, min(max_b, N) + 1))
    P = validate_probability_matrix(rng.dirichlet(np.ones(C), size=N))
    omega = BalanceTarget(rng.uniform(0, b / C + 1, size=C))
    return P, batch_negative_entropy(P), omega, b


def _check_bnb(rng, n, fault):
    worst = 0.0
    for _ in range(n):
        P, s, omega, b = _instance(rng)
        lam = float(rng.choice([0.0, 0.5, 1.0, 5.0]))
        exact = solve_enumeration(s, P, omega, b, lam).objective
        bnb = solve_branch_and_bound(s, P, omega, SelectorConfig(lam, b)).objective + fault
        worst = max(worst, abs(bnb - exact))
    return worst <= 1e-9, worst, "|B&B - enumeration| objective"


def _check_lambda0_entropy(rng, n, fault):
    worst = 0.0
    for _ in range(n):
        P, s, omega, b = _instance(rng, max_n=30, max_b=8)
        # reference: sort by entropy descending, index ascending on ties
        ent = -s
        ref = sorted(range(P.n), key=lambda j: (-ent[j], j))[:b]
        got = solve_cbal(s, P, omega, SelectorConfig(0.0, b)).selection.indices
        mism = len(set(ref) ^ set(got)) + fault
        worst = max(worst, float(mism))
    return worst == 0, worst, "samples differing from the top-b entropy set"


def _check_lambda0_kcenter(rng, n, fault):
    worst = 0.0
    for _ in range(n):
        N, L, d = int(rng.integers(5, 30)), int(rng.integers(1, 6)), int(rng.integers(1, 5))
        C = int(rng.integers(2, 5))
        b = int(rng.integers(1, N + 1))
        U, Lf = rng.normal(size=(N, d)), rng.normal(size=(L, d))
        dist = DistanceMatrix(np.sqrt(((U[:, None] - Lf[None]) ** 2).sum(-1)))
        P = validate_probability_matrix(rng.dirichlet(np.ones(C), size=N))
        omega = BalanceTarget(np.full(C, b / C))
        a = kcenter_greedy(dist, b, U).indices
        g = greedy_class_balanced(P, dist, omega, 0.0, b, U).indices
        worst = max(worst, float(a != g) + fault)
    return worst == 0, worst, "instances where the selections differ"


def _check_gradient(rng, n, fault):
    worst = 0.0
    h = 1e-6
    for _ in range(n):
        m, d, C = int(rng.integers(3, 12)), int(rng.integers(1, 5)), int(rng.integers(2, 5))
        X, y = rng.normal(size=(m, d)), rng.integers(0, C, size=m)
        W, bias = rng.normal(size=(C, d)), rng.normal(size=C)
        l2 = float(rng.uniform(0, 0.1))
        _, gW, gb = loss_and_grad(W, bias, X, y, l2)
        num_W = np.zeros_like(W)
        for idx in np.ndindex(*W.shape):
            Wp, Wm = W.copy(), W.copy()
            Wp[idx] += h
            Wm[idx] -= h
            num_W[idx] = (loss_and_grad(Wp, bias, X, y, l2)[0] - loss_and_grad(Wm, bias, X, y, l2)[0]) / (2 * h)
        num_b = np.zeros_like(bias)
        for k in range(C):
            bp, bm = bias.copy(), bias.copy()
            bp[k] += h
            bm[k] -= h
            num_b[k] = (loss_and_grad(W, bp, X, y, l2)[0] - loss_and_grad(W, bm, X, y, l2)[0]) / (2 * h)
        ana = np.concatenate([gW.ravel(), gb]) + fault
        num = np.concatenate([num_W.ravel(), num_b])
        rel = np.linalg.norm(ana - num) / max(np.linalg.norm(ana) + np.linalg.norm(num), 1e-12)
        worst = max(worst, float(rel))
    return worst <= 1e-5, worst, "relative error of analytic vs finite-difference gradient"


def _check_lp_bound(rng, n, fault):
    worst = -np.inf
    for _ in range(n):
        P, s, omega, b = _instance(rng)
        lam = float(rng.choice([0.5, 1.0, 5.0]))
        bound = lp_relaxation_bound(s, P, omega, b, lam) + fault
        exact = solve_enumeration(s, P, omega, b, lam).objective
        worst = max(worst, bound - exact)
    return worst <= 1e-9, worst, "LP bound minus integer optimum (must be <= 0)"


def _check_l1_formula(rng, n, fault):
    worst = 0.0
    for _ in range(n):
        C = int(rng.integers(2, 12))
        b = C * int(rng.integers(1, 6))
        uniform = l1_score(np.full(C, b // C), b)
        single = l1_score(np.eye(C, dtype=int)[0] * b, b)
        worst = max(worst, abs(uniform) + fault, abs(single - 1.0) + fault)
    return worst <= 1e-12, worst, "deviation from 0 (uniform) and 1 (single class)"


CHECKS = {
    "bnb_vs_enumeration": (_check_bnb, 30),
    "lambda0_entropy": (_check_lambda0_entropy, 30),
    "lambda0_kcenter": (_check_lambda0_kcenter, 30),
    "gradient": (_check_gradient, 10),
    "lp_bound": (_check_lp_bound, 20),
    "l1_score_extremes": (_check_l1_formula, 20),
}


def run_checks(seed: int = 0, inject_fault: str | None = None) -> list[CheckResult]:
    """Run every family; ``inject_fault`` names a family (or ``"all"``) to corrupt."""
    if inject_fault is not None and inject_fault != "all" and inject_fault not in CHECKS:
        raise ValueError(f"unknown check family {inject_fault!r}; choose from {sorted(CHECKS)} or 'all'")
    results = []
    for k, (name, (fn, n)) in enumerate(CHECKS.items()):
        rng = np.random.default_rng((seed, k))
        fault = 1.0 if inject_fault in (name, "all") else 0.0
        passed, worst, detail = fn(rng, n, fault)
        results.append(CheckResult(name, bool(passed), n, float(worst), detail))
    return results


def format_report(results) -> str:
    width = max(len(r.family) for r in results)
    lines = [f"{'check':<{width}}  status  n    worst        measure"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.family:<{width}}  {status}    {r.instances:<4d} {r.worst:<12.3g} {r.detail}")
    return "\n".join(lines)
