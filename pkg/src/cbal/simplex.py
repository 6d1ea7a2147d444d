"""Dense bounded-variable revised simplex.

Solves ``min c^T x  s.t.  A x = rhs,  lo <= x <= hi`` where ``hi`` may be
``inf``. Nonbasic variables sit at one of their bounds; ``at_upper`` records
which. The primal routine needs a primal-feasible starting basis, the dual
routine a dual-feasible one (typically the optimal basis of a parent problem
whose bounds were then tightened, as in branch and bound).

Pricing is Dantzig's rule, switching to Bland's lowest-index rule after a
run of degenerate pivots so that cycling cannot occur.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPInfeasible, NumericalFailure

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
OPT_TOL = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_STREAK = 20


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    at_upper: np.ndarray
    iterations: int
    reduced_costs: np.ndarray | None = None
    binv: np.ndarray | None = None


class BoundedLP:
    def __init__(self, A, rhs, c, lo, hi, max_iter: int | None = None):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.rhs = np.asarray(rhs, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.lo = np.asarray(lo, dtype=float).copy()
        self.hi = np.asarray(hi, dtype=float).copy()
        m, n = self.A.shape
        if self.rhs.shape != (m,) or self.c.shape != (n,) or self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("inconsistent LP dimensions")
        if np.any(self.lo > self.hi):
            raise LPInfeasible("lower bound exceeds upper bound")
        self.m, self.n = m, n
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 1000

    # helpers -------------------------------------------------------------
    def _factor(self, basis):
        B = self.A[:, basis]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis") from exc
        if not np.all(np.isfinite(Binv)):
            raise NumericalFailure("singular basis")
        return Binv

    def _nonbasic_x(self, basis, at_upper):
        x = np.where(at_upper, self.hi, self.lo)
        x[basis] = 0.0
        return x

    def _basic_values(self, Binv, basis, at_upper):
        x = self._nonbasic_x(basis, at_upper)
        x[basis] = Binv @ (self.rhs - self.A @ x)
        return x

    def _reduced_costs(self, Binv, basis):
        y = self.c[basis] @ Binv
        d = self.c - y @ self.A
        d[basis] = 0.0
        return d

    @staticmethod
    def _pivot(Binv, w, r):
        row = Binv[r] / w[r]
        Binv -= np.outer(w, row)
        Binv[r] = row

    def _solution(self, Binv, basis, at_upper, it, d=None):
        x = self._basic_values(Binv, basis, at_upper)
        return LPSolution(x, float(self.c @ x), basis.copy(), at_upper.copy(), it, d, Binv.copy())

    # primal --------------------------------------------------------------
    def primal(self, basis, at_upper, binv=None) -> LPSolution:
        basis = np.array(basis, dtype=np.int64)
        at_upper = np.array(at_upper, dtype=bool)
        is_basic = np.zeros(self.n, dtype=bool)
        is_basic[basis] = True
        movable = self.hi > self.lo
        Binv = self._factor(basis) if binv is None else np.array(binv, dtype=float)
        x = self._basic_values(Binv, basis, at_upper)
        if np.any(x[basis] < self.lo[basis] - 1e-7) or np.any(x[basis] > self.hi[basis] + 1e-7):
            raise NumericalFailure("primal simplex started from an infeasible basis")
        degenerate = 0
        since_factor = 0
        for it in range(self.max_iter):
            if since_factor >= REFACTOR_EVERY:
                Binv = self._factor(basis)
                since_factor = 0
            d = self._reduced_costs(Binv, basis)
            eligible = movable & ~is_basic & np.where(at_upper, d > OPT_TOL, d < -OPT_TOL)
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return self._solution(Binv, basis, at_upper, it, d)
            if degenerate >= DEGENERATE_STREAK:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = -1.0 if at_upper[q] else 1.0
            w = Binv @ self.A[:, q]
            xb = x[basis]
            dw = direction * w
            lob, hib = self.lo[basis], self.hi[basis]
            ratios = np.full(self.m, np.inf)
            dec = dw > PIVOT_TOL
            inc = dw < -PIVOT_TOL
            ratios[dec] = (xb[dec] - lob[dec]) / dw[dec]
            ratios[inc] = (hib[inc] - xb[inc]) / -dw[inc]
            ratios = np.maximum(ratios, 0.0)
            flip = self.hi[q] - self.lo[q]
            r = -1
            theta = flip
            if ratios.size and np.min(ratios) < flip:
                theta = float(np.min(ratios))
                ties = np.flatnonzero(ratios <= theta + 1e-12)
                if degenerate >= DEGENERATE_STREAK:
                    r = int(ties[np.argmin(basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(w[ties]))])
            if not np.isfinite(theta):
                raise NumericalFailure("LP relaxation is unbounded")
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            if r < 0:
                at_upper[q] = not at_upper[q]
                x = self._basic_values(Binv, basis, at_upper)
                continue
            leaving = basis[r]
            at_upper[leaving] = bool(dw[r] < 0)
            is_basic[leaving] = False
            is_basic[q] = True
            basis[r] = q
            at_upper[q] = False
            self._pivot(Binv, w, r)
            since_factor += 1
            x = self._basic_values(Binv, basis, at_upper)
        raise NumericalFailure(f"primal simplex exceeded {self.max_iter} iterations")

    # dual ----------------------------------------------------------------
    def dual(self, basis, at_upper, binv=None) -> LPSolution:
        """Dual simplex from a dual-feasible basis; finishes with a primal clean-up pass.

        ``binv`` may carry the inverse of the starting basis (e.g. from a
        parent node) to skip the initial factorization.
        """
        basis = np.array(basis, dtype=np.int64)
        at_upper = np.array(at_upper, dtype=bool)
        is_basic = np.zeros(self.n, dtype=bool)
        is_basic[basis] = True
        at_upper &= np.isfinite(self.hi)
        movable = self.hi > self.lo
        Binv = self._factor(basis) if binv is None else np.array(binv, dtype=float)
        x = self._basic_values(Binv, basis, at_upper)
        d = self._reduced_costs(Binv, basis)
        since_factor = 0
        degenerate = 0
        for it in range(self.max_iter):
            if since_factor >= REFACTOR_EVERY:
                Binv = self._factor(basis)
                x = self._basic_values(Binv, basis, at_upper)
                d = self._reduced_costs(Binv, basis)
                since_factor = 0
            xb = x[basis]
            below = self.lo[basis] - xb
            above = xb - self.hi[basis]
            viol = np.maximum(below, above)
            if viol.max() <= FEAS_TOL:
                sol = self.primal(basis, at_upper, Binv)
                sol.iterations += it
                return sol
            if degenerate >= DEGENERATE_STREAK:
                rows = np.flatnonzero(viol > FEAS_TOL)
                r = int(rows[np.argmin(basis[rows])])
            else:
                r = int(np.argmax(viol))
            to_upper = bool(above[r] > below[r])
            alpha = Binv[r] @ self.A
            if to_upper:
                eligible = np.where(at_upper, alpha < -PIVOT_TOL, alpha > PIVOT_TOL)
            else:
                eligible = np.where(at_upper, alpha > PIVOT_TOL, alpha < -PIVOT_TOL)
            eligible &= movable & ~is_basic
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                raise LPInfeasible("bounds admit no feasible point")
            ratio = np.abs(d[cand]) / np.abs(alpha[cand])
            best = ratio.min()
            ties = cand[ratio <= best + 1e-12]
            if degenerate >= DEGENERATE_STREAK:
                q = int(ties[0])
            else:
                q = int(ties[np.argmax(np.abs(alpha[ties]))])
            degenerate = degenerate + 1 if best <= 1e-12 else 0
            w = Binv @ self.A[:, q]
            if abs(w[r]) < PIVOT_TOL:
                raise NumericalFailure("dual simplex pivot below tolerance")
            leaving = basis[r]
            target = self.hi[leaving] if to_upper else self.lo[leaving]
            theta = (xb[r] - target) / w[r]
            x[basis] -= theta * w
            x[q] += theta
            x[leaving] = target
            step = d[q] / alpha[q]
            d -= step * alpha
            d[q] = 0.0
            at_upper[leaving] = to_upper
            is_basic[leaving] = False
            is_basic[q] = True
            basis[r] = q
            at_upper[q] = False
            self._pivot(Binv, w, r)
            since_factor += 1
        raise NumericalFailure(f"dual simplex exceeded {self.max_iter} iterations")

    # two-phase -----------------------------------------------------------
    def solve(self) -> LPSolution:
        """Solve from scratch with an artificial-variable phase 1.

        Requires finite lower bounds. Artificials are pinned to zero for
        phase 2, so they can linger in the basis only at value zero.
        """
        if not np.all(np.isfinite(self.lo)):
            raise ValueError("two-phase start needs finite lower bounds")
        x0 = self.lo.copy()
        resid = self.rhs - self.A @ x0
        sign = np.where(resid >= 0, 1.0, -1.0)
        A1 = np.hstack([self.A, np.diag(sign)])
        n = self.n
        lo1 = np.concatenate([self.lo, np.zeros(self.m)])
        hi1 = np.concatenate([self.hi, np.full(self.m, np.inf)])
        c1 = np.concatenate([np.zeros(n), np.ones(self.m)])
        basis = np.arange(n, n + self.m)
        at_upper = np.zeros(n + self.m, dtype=bool)
        phase1 = BoundedLP(A1, self.rhs, c1, lo1, hi1, self.max_iter)
        s1 = phase1.primal(basis, at_upper)
        if s1.objective > 1e-7 * max(1.0, float(np.abs(self.rhs).max(initial=0.0))):
            raise LPInfeasible("phase 1 could not remove artificials")
        hi1[n:] = 0.0
        c2 = np.concatenate([self.c, np.zeros(self.m)])
        phase2 = BoundedLP(A1, self.rhs, c2, lo1, hi1, self.max_iter)
        s2 = phase2.primal(s1.basis, s1.at_upper)
        s2.x = s2.x[:n]
        s2.at_upper = s2.at_upper[:n]
        s2.iterations += s1.iterations
        return s2
