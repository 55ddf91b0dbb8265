"""Dense bounded-variable revised primal simplex.

Two phases over the standard form ``A x + s = b`` with ``l <= x <= u``:
phase one minimizes the artificial infeasibility from a slack/artificial
basis, phase two minimizes the real objective.  Pricing is Dantzig's rule;
after ``stall_limit`` consecutive degenerate pivots the engine switches to
Bland's rule until the objective strictly improves, which rules out cycling.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .model import MilpModel, MilpSolution, Status

# SUPERBASIC marks a nonbasic variable resting strictly between its bounds,
# which only arises when a basis repair removes it from the basis.
AT_LOWER, AT_UPPER, AT_ZERO, BASIC, SUPERBASIC = 0, 1, 2, 3, 4

FEAS_TOL = 1e-8
# fallback settings after a numerically singular basis: larger pivots, fresher inverses
STRICT = {"pivot_tol": 1e-7, "pivot_rel": 1e-6, "refactor_every": 10}


class SingularBasisError(RuntimeError):
    """The basis matrix became numerically singular."""

    def __init__(self, cond: float, iteration: int):
        super().__init__(f"basis matrix numerically singular (condition estimate {cond:.3e} "
                         f"at iteration {iteration})")
        self.cond = cond
        self.iteration = iteration


class IterationLimitError(RuntimeError):
    pass


@dataclass
class LpResult:
    status: Status
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    reduced_costs: np.ndarray | None
    state: np.ndarray | None
    iterations: int
    warm: tuple[np.ndarray, np.ndarray] | None = None


def equilibrate(A: np.ndarray, passes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors (powers of two) bringing nonzeros of ``A`` near 1.

    Alternating geometric-mean passes; powers of two keep the scaling exact
    in floating point.
    """
    m, n = A.shape
    r, c = np.ones(m), np.ones(n)
    if A.size == 0:
        return r, c
    absA = np.abs(A)
    nz = absA > 0
    if not nz.any():
        return r, c
    for _ in range(passes):
        S = absA * r[:, None] * c[None, :]
        big = np.where(nz, S, 0.0).max(axis=1)
        small = np.where(nz, S, np.inf).min(axis=1)
        has = nz.any(axis=1)
        r[has] /= np.sqrt(big[has] * small[has])
        S = absA * r[:, None] * c[None, :]
        big = np.where(nz, S, 0.0).max(axis=0)
        small = np.where(nz, S, np.inf).min(axis=0)
        has = nz.any(axis=0)
        c[has] /= np.sqrt(big[has] * small[has])
    return np.exp2(np.round(np.log2(r))), np.exp2(np.round(np.log2(c)))


class LpEngine:
    """Holds the standard form of a model so repeated solves only swap bounds."""

    def __init__(self, model: MilpModel, opt_tol: float = 1e-9, pivot_tol: float = 1e-9,
                 refactor_every: int = 50, stall_limit: int = 40, max_cond: float = 1e13,
                 harris_tol: float = 1e-9, pivot_rel: float = 1e-7, scale: bool = True):
        self.model = model
        self.pivot_rel = pivot_rel
        self.harris_tol = harris_tol
        self.opt_tol = opt_tol
        self.pivot_tol = pivot_tol
        self.refactor_every = refactor_every
        self.stall_limit = stall_limit
        self.max_cond = max_cond

        A = model.dense()
        m, n = A.shape
        senses = np.array(model.senses, dtype=object)
        self.row_sign = np.where(senses == ">=", -1.0, 1.0) if m else np.zeros(0)
        A = A * self.row_sign[:, None] if m else A
        self.rs, self.cs = equilibrate(A) if scale else (np.ones(m), np.ones(n))
        A = self.rs[:, None] * A * self.cs[None, :]
        self.b = self.rs * model.rhs * self.row_sign if m else np.zeros(0)
        ineq_rows = np.flatnonzero(senses != "=") if m else np.zeros(0, int)
        s = len(ineq_rows)
        S = np.zeros((m, s))
        S[ineq_rows, np.arange(s)] = 1.0
        self.slack_of_row = np.full(m, -1, dtype=np.int64)
        self.slack_of_row[ineq_rows] = n + np.arange(s)
        self.A = np.hstack([A, S, np.eye(m)])
        self._nz_r, self._nz_c = np.nonzero(self.A)
        self._nz_v = self.A[self._nz_r, self._nz_c]
        # row covered by each unit column (slacks, artificials), -1 for structurals
        self.unit_row = np.full(n + s + m, -1, dtype=np.int64)
        self.unit_row[n:n + s] = ineq_rows
        self.unit_row[n + s:] = np.arange(m)
        self.m, self.n, self.s = m, n, s
        self.N = n + s + m
        self.art0 = n + s
        self.c = np.concatenate([model.c * self.cs, np.zeros(s + m)])

    # ------------------------------------------------------------------
    def solve(self, lb: np.ndarray | None = None, ub: np.ndarray | None = None,
              max_iter: int | None = None) -> LpResult:
        model = self.model
        m, n, N = self.m, self.n, self.N
        lb = model.lb if lb is None else lb
        ub = model.ub if ub is None else ub
        if np.any(lb > ub + 1e-12):
            return LpResult(Status.INFEASIBLE, None, np.inf, None, None, None, 0)
        self.max_iter = max_iter or 100 * (m + N) + 1000
        lbs, ubs = lb / self.cs, ub / self.cs

        l = np.concatenate([lbs, np.zeros(self.s), np.zeros(m)])
        u = np.concatenate([ubs, np.full(self.s, np.inf), np.zeros(m)])
        x = np.zeros(N)
        state = np.full(N, AT_LOWER, dtype=np.int8)
        fl, fu = np.isfinite(lbs), np.isfinite(ubs)
        x[:n] = np.where(fl, lbs, np.where(fu, ubs, 0.0))
        state[:n] = np.where(fl, AT_LOWER, np.where(fu, AT_UPPER, AT_ZERO))

        r = self.b - self.A[:, :n] @ x[:n] if m else np.zeros(0)
        basis = np.empty(m, dtype=np.int64)
        cost1 = np.zeros(N)
        for i in range(m):
            k = self.slack_of_row[i]
            if k >= 0 and r[i] >= 0:
                basis[i] = k
            else:
                k = self.art0 + i
                basis[i] = k
                if r[i] >= 0:
                    u[k] = np.inf
                    cost1[k] = 1.0
                else:
                    l[k] = -np.inf
                    cost1[k] = -1.0
            x[k] = r[i]
            state[k] = BASIC

        self._l, self._u, self._x, self._state, self._basis = l, u, x, state, basis
        self._Binv = np.eye(m)
        self._etas = []
        self._iters = 0
        self._reset_tabu()

        status = self._iterate(cost1)
        infeas = float(cost1 @ x)
        tol = FEAS_TOL * max(1.0, float(np.max(np.abs(self.b), initial=0.0)))
        if status == "unbounded" or infeas > tol:
            return LpResult(Status.INFEASIBLE, None, np.inf, None, None, None, self._iters)

        arts = np.arange(self.art0, N)
        l[arts] = 0.0
        u[arts] = 0.0
        nonbasic_art = arts[state[arts] != BASIC]
        x[nonbasic_art] = 0.0
        state[nonbasic_art] = AT_LOWER

        status = self._iterate(self.c)
        if status == "unbounded":
            return LpResult(Status.UNBOUNDED, None, -np.inf, None, None, None, self._iters)
        return self._finish(lb, ub)

    def resolve(self, lb: np.ndarray, ub: np.ndarray, warm: tuple[np.ndarray, np.ndarray],
                max_iter: int | None = None) -> LpResult:
        """Re-solve after bound changes, starting from an optimal basis ``warm``.

        Runs the bounded dual simplex from the previous basis (which stays dual
        feasible when only bounds move) and finishes with primal clean-up
        pivots.  Falls back to a cold start if the warm basis misbehaves.
        """
        m, n, N = self.m, self.n, self.N
        if np.any(lb > ub + 1e-12):
            return LpResult(Status.INFEASIBLE, None, np.inf, None, None, None, 0)
        self.max_iter = max_iter or 100 * (m + N) + 1000
        basis, state = warm[0].copy(), warm[1].copy()
        l = np.concatenate([lb / self.cs, np.zeros(self.s), np.zeros(m)])
        u = np.concatenate([ub / self.cs, np.full(self.s, np.inf), np.zeros(m)])
        x = np.zeros(N)
        sb = state == SUPERBASIC
        if sb.any():
            # the resting value is not part of the warm start; restart at a bound
            state[sb] = np.where(np.isfinite(l[sb]), AT_LOWER,
                                 np.where(np.isfinite(u[sb]), AT_UPPER, AT_ZERO))
        nb = state != BASIC
        st = state[nb]
        x[nb] = np.where(st == AT_LOWER, l[nb], np.where(st == AT_UPPER, u[nb], 0.0))
        # a nonbasic variable whose bound became infinite cannot stay there
        bad = nb & ~np.isfinite(x)
        if bad.any():
            return self.solve(lb, ub, max_iter)
        self._l, self._u, self._x, self._state, self._basis = l, u, x, state, basis
        self._iters = 0
        self._reset_tabu()
        try:
            self._refactor()
            status = self._dual_iterate()
        except (SingularBasisError, IterationLimitError):
            return self.solve(lb, ub, max_iter)
        if status == "infeasible":
            return LpResult(Status.INFEASIBLE, None, np.inf, None, None, None, self._iters)
        status = self._iterate(self.c)
        if status == "unbounded":
            return LpResult(Status.UNBOUNDED, None, -np.inf, None, None, None, self._iters)
        return self._finish(lb, ub)

    _primal = False

    def _reset_tabu(self) -> None:
        # columns swapped out by a basis repair stay out of pricing for a while,
        # otherwise they re-enter at once and rebuild the same singular basis
        self._tabu = np.zeros(self.N, bool)
        self._tabu_clears = 0

    def _finish(self, lb: np.ndarray, ub: np.ndarray) -> LpResult:
        m, n, model = self.m, self.n, self.model
        x, state, basis = self._x, self._state, self._basis
        self._refactor()
        xs = x[:n] * self.cs
        # snap nonbasic structurals exactly onto their bounds
        at_l = state[:n] == AT_LOWER
        at_u = state[:n] == AT_UPPER
        xs[at_l] = lb[at_l]
        xs[at_u] = ub[at_u]
        y = self.c[basis] @ self._Binv if m else np.zeros(0)
        d = self.c - self._yA(y) if m else self.c.copy()
        d[basis] = 0.0
        obj = float(model.c @ xs + model.obj_constant)
        return LpResult(Status.OPTIMAL, xs, obj, y * self.rs * self.row_sign, d[:n] / self.cs,
                        state[:n].copy(), self._iters, (basis.copy(), state.copy()))

    # ------------------------------------------------------------------
    def _dual_iterate(self) -> str:
        """Bounded dual simplex until the basic variables are within bounds."""
        A, c, l, u, x, state, basis = (self.A, self.c, self._l, self._u, self._x, self._state,
                                       self._basis)
        m = self.m
        if m == 0:
            return "optimal"
        movable = u > l
        tol = FEAS_TOL
        piv = self.pivot_tol
        while True:
            if self._iters > self.max_iter:
                raise IterationLimitError(f"dual simplex exceeded {self.max_iter} iterations")
            nonbasic = state != BASIC
            xB = self._ftran(self.b - self._Ax(np.where(nonbasic, x, 0.0)))
            x[basis] = xB
            lB, uB = l[basis], u[basis]
            below = lB - xB
            above = xB - uB
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas))
            if infeas[r] <= tol * max(1.0, abs(xB[r])):
                return "optimal"
            to_lower = below[r] > above[r]
            y = self._btran(c[basis])
            d = c - self._yA(y)
            e = np.zeros(m)
            e[r] = 1.0
            alpha_r = self._yA(self._btran(e))
            lo = (state == AT_LOWER) & movable
            hi = (state == AT_UPPER) & movable
            fr = (state == AT_ZERO) | (state == SUPERBASIC)
            if to_lower:   # basic var must increase: x_j up with alpha<0, down with alpha>0
                elig = (lo & (alpha_r < -piv)) | (hi & (alpha_r > piv)) | (fr & (np.abs(alpha_r) > piv))
            else:
                elig = (lo & (alpha_r > piv)) | (hi & (alpha_r < -piv)) | (fr & (np.abs(alpha_r) > piv))
            if (elig & ~self._tabu).any():
                elig &= ~self._tabu
            if not elig.any():
                return "infeasible"
            elig &= np.abs(alpha_r) > self.pivot_rel * max(1.0, float(np.abs(alpha_r).max()))
            if not elig.any():
                return "infeasible"
            cand = np.flatnonzero(elig)
            ratios = np.abs(d[cand]) / np.abs(alpha_r[cand])
            relaxed = (np.abs(d[cand]) + self.opt_tol) / np.abs(alpha_r[cand])
            ties = cand[ratios <= max(relaxed.min(), ratios.min())]
            j = int(ties[np.argmax(np.abs(alpha_r[ties]))])
            leaving = basis[r]
            x[leaving] = lB[r] if to_lower else uB[r]
            state[leaving] = AT_LOWER if to_lower else AT_UPPER
            alpha = self._ftran(A[:, j])
            basis[r] = j
            state[j] = BASIC
            self._iters += 1
            self._pivot(r, alpha)

    def _yA(self, y: np.ndarray) -> np.ndarray:
        """``y @ A`` using the sparsity of ``A``."""
        return np.bincount(self._nz_c, weights=y[self._nz_r] * self._nz_v, minlength=self.N)

    def _Ax(self, x: np.ndarray) -> np.ndarray:
        return np.bincount(self._nz_r, weights=self._nz_v * x[self._nz_c], minlength=self.m)

    def _refactor(self) -> None:
        m = self.m
        self._etas = []
        if m == 0:
            return
        try:
            Binv, cond = self._block_inverse()
        except SingularBasisError:
            Binv, cond = None, np.inf
        repaired = False
        for tol in (1e-11, 1e-9, 1e-7, 1e-5):
            if Binv is not None and np.isfinite(cond) and cond <= self.max_cond:
                break
            self._repair(tol)
            repaired = True
            Binv, cond = self._block_inverse()
        if Binv is None or not np.isfinite(cond) or cond > self.max_cond:
            raise SingularBasisError(float(cond), self._iters)
        self._Binv = Binv
        nonbasic = self._state != BASIC
        xB = Binv @ (self.b - self._Ax(np.where(nonbasic, self._x, 0.0)))
        self._x[self._basis] = xB
        if repaired and self._primal:
            # The primal simplex needs a feasible basis.  If the values read
            # off the old, nearly singular basis were already corrupt, the
            # repaired one is infeasible and there is nothing sound to continue.
            lB, uB = self._l[self._basis], self._u[self._basis]
            viol = np.maximum(lB - xB, xB - uB) / np.maximum(1.0, np.abs(xB))
            if float(viol.max(initial=0.0)) > 1e-6:
                raise SingularBasisError(float(cond), self._iters)

    def _split(self):
        urow = self.unit_row[self._basis]
        unit_pos = np.flatnonzero(urow >= 0)
        struct_pos = np.flatnonzero(urow < 0)
        covered = np.zeros(self.m, bool)
        covered[urow[unit_pos]] = True
        return urow, unit_pos, struct_pos, np.flatnonzero(~covered)

    def _block_inverse(self) -> tuple[np.ndarray, float]:
        # Slack and artificial columns are unit vectors, so only the block of
        # structural columns on the rows they must cover needs inverting:
        # with B = [[C_V, 0], [C_U, I]] (rows V uncovered, U covered by units),
        # B^-1 = [[C_V^-1, 0], [-C_U C_V^-1, I]].
        m = self.m
        B = self.A[:, self._basis]
        urow, unit_pos, struct_pos, V = self._split()
        if len(V) != len(struct_pos) or len(np.unique(urow[unit_pos])) != len(unit_pos):
            raise SingularBasisError(np.inf, self._iters)
        Binv = np.zeros((m, m))
        if len(V):
            try:
                Cinv = np.linalg.inv(B[np.ix_(V, struct_pos)])
            except np.linalg.LinAlgError:
                raise SingularBasisError(np.inf, self._iters) from None
            Binv[np.ix_(struct_pos, V)] = Cinv
            if len(unit_pos):
                U = urow[unit_pos]
                Binv[np.ix_(unit_pos, V)] = -B[np.ix_(U, struct_pos)] @ Cinv
        Binv[unit_pos, urow[unit_pos]] = 1.0
        return Binv, float(np.linalg.norm(B, 1) * np.linalg.norm(Binv, 1))

    def _repair(self, tol: float) -> None:
        """Swap numerically dependent structural columns out of the basis.

        Gaussian elimination with complete pivoting on the structural block
        finds a well-conditioned subset of columns; every column left over is
        replaced by the slack (or artificial) of a row the subset leaves
        uncovered.  The removed variable keeps its current value as a
        superbasic, so the primal point, and with it feasibility, is unchanged.
        """
        basis, state = self._basis, self._state
        urow, unit_pos, struct_pos, V = self._split()
        # duplicated unit columns cannot both stay
        seen: set[int] = set()
        for pos in unit_pos:
            if urow[pos] in seen:
                struct_pos = np.append(struct_pos, pos)
            seen.add(int(urow[pos]))
        C = self.A[np.ix_(V, basis[struct_pos])].copy()
        rows, cols = list(range(len(V))), list(range(len(struct_pos)))
        big = float(np.abs(C).max(initial=0.0))
        kept_r, kept_c = [], []
        W = C
        while rows and cols:
            sub = np.abs(W[np.ix_(rows, cols)])
            k = int(np.argmax(sub))
            i, j = divmod(k, len(cols))
            if sub[i, j] <= tol * max(big, 1.0):
                break
            pr, pc = rows[i], cols[j]
            kept_r.append(pr)
            kept_c.append(pc)
            rows.pop(i)
            cols.pop(j)
            if rows and cols:
                ri, cj = np.array(rows), np.array(cols)
                W[np.ix_(ri, cj)] -= np.outer(W[ri, pc] / W[pr, pc], W[pr, cj])
        free_rows = [int(V[r]) for r in rows]
        for r_i, c_i in zip(free_rows, cols):
            pos = struct_pos[c_i]
            old = basis[pos]
            k = self.slack_of_row[r_i]
            if k < 0 or state[k] == BASIC:
                k = self.art0 + r_i
            # the unit variable enters at the value that leaves x unchanged
            basis[pos] = k
            state[k] = BASIC
            lo_, up_ = self._l[old], self._u[old]
            if self._x[old] <= lo_:
                state[old] = AT_LOWER
            elif self._x[old] >= up_:
                state[old] = AT_UPPER
            else:
                state[old] = SUPERBASIC
            self._tabu[old] = True
        self.repairs = getattr(self, "repairs", 0) + 1

    # The current inverse is E_k ... E_1 B0^-1 (product form); each eta
    # (r, alpha) records one pivot on row r with entering column alpha.
    def _ftran(self, v: np.ndarray) -> np.ndarray:
        w = self._Binv @ v
        for r, alpha in self._etas:
            wr = w[r] / alpha[r]
            if wr != 0.0:
                w -= wr * alpha
            w[r] = wr
        return w

    def _btran(self, c: np.ndarray) -> np.ndarray:
        c = np.array(c, dtype=float)
        for r, alpha in reversed(self._etas):
            c[r] = (c[r] - (c @ alpha - c[r] * alpha[r])) / alpha[r]
        return c @ self._Binv

    def _pivot(self, r: int, alpha: np.ndarray) -> bool:
        """Record a basis change; returns True when the inverse was rebuilt."""
        self._etas.append((r, alpha))
        if len(self._etas) >= self.refactor_every:
            self._refactor()
            return True
        return False

    def _iterate(self, cost: np.ndarray) -> str:
        self._primal = True
        try:
            return self._primal_loop(cost)
        finally:
            self._primal = False

    def _primal_loop(self, cost: np.ndarray) -> str:
        A, l, u, x, state, basis = self.A, self._l, self._u, self._x, self._state, self._basis
        m = self.m
        opt_tol, piv = self.opt_tol, self.pivot_tol
        movable = u > l
        stall = 0
        bland = False
        # entering candidates skipped because their only blocking pivot was tiny
        rejected = np.zeros(self.N, bool)
        refreshed = False
        while True:
            if self._iters > self.max_iter:
                raise IterationLimitError(f"simplex exceeded {self.max_iter} iterations")
            y = self._btran(cost[basis]) if m else np.zeros(0)
            d = cost - self._yA(y) if m else cost.copy()
            viol = np.zeros(len(d))
            lo = (state == AT_LOWER) & movable & (d < -opt_tol)
            hi = (state == AT_UPPER) & movable & (d > opt_tol)
            fr = ((state == AT_ZERO) | (state == SUPERBASIC)) & (np.abs(d) > opt_tol)
            elig = (lo | hi | fr) & ~rejected & ~self._tabu
            if not elig.any():
                if rejected.any() and not refreshed:
                    # a fresh inverse may show the tiny pivots were round-off
                    self._refactor()
                    rejected[:] = False
                    refreshed = True
                    continue
                if ((lo | hi | fr) & self._tabu).any() and self._tabu_clears < 2:
                    self._tabu[:] = False
                    self._tabu_clears += 1
                    continue
                return "optimal"
            if bland:
                j = int(np.flatnonzero(elig)[0])
            else:
                viol[elig] = np.abs(d[elig])
                j = int(np.argmax(viol))
            sigma = 1.0 if (state[j] == AT_LOWER or (state[j] in (AT_ZERO, SUPERBASIC) and d[j] < 0)) else -1.0

            alpha = self._ftran(A[:, j]) if m else np.zeros(0)
            dx = -sigma * alpha
            lB, uB, xB = l[basis], u[basis], x[basis]
            t = np.full(m, np.inf)
            t_relaxed = np.full(m, np.inf)
            dec = dx < -piv
            inc = dx > piv
            t[dec] = (xB[dec] - lB[dec]) / -dx[dec]
            t[inc] = (uB[inc] - xB[inc]) / dx[inc]
            np.maximum(t, 0.0, out=t)
            # Harris pass: among rows blocking within a small bound relaxation,
            # pivot on the largest |alpha| for numerical stability
            t_relaxed[dec] = (xB[dec] - lB[dec] + self.harris_tol) / -dx[dec]
            t_relaxed[inc] = (uB[inc] - xB[inc] + self.harris_tol) / dx[inc]
            t_flip = (u[j] - x[j]) if sigma > 0 else (x[j] - l[j])
            if not np.isfinite(t_flip):
                t_flip = np.inf
            t_min = float(t.min()) if m else np.inf
            if t_flip <= t_min:
                if not np.isfinite(t_flip):
                    return "unbounded"
                step = t_flip
                if m:
                    x[basis] = xB + step * dx
                x[j] = u[j] if sigma > 0 else l[j]
                state[j] = AT_UPPER if sigma > 0 else AT_LOWER
                self._iters += 1
                if step > 1e-12:
                    stall, bland = 0, False
                continue
            if not np.isfinite(t_min):
                return "unbounded"
            if bland:
                ties = np.flatnonzero(t <= t_min + 1e-12)
                r = int(ties[np.argmin(basis[ties])])
            else:
                ties = np.flatnonzero(t <= max(float(t_relaxed.min()), t_min))
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            if abs(alpha[r]) < self.pivot_rel * max(1.0, float(np.abs(alpha).max())):
                rejected[j] = True
                continue
            rejected[:] = False
            refreshed = False
            step = float(t[r])
            x[basis] = xB + step * dx
            x[j] = x[j] + sigma * step
            leaving = basis[r]
            x[leaving] = lB[r] if dx[r] < 0 else uB[r]
            state[leaving] = AT_LOWER if dx[r] < 0 else AT_UPPER
            if not np.isfinite(x[leaving]):
                # free basic variables never block; defensive fallback
                x[leaving] = 0.0
                state[leaving] = AT_ZERO
            basis[r] = j
            state[j] = BASIC
            self._iters += 1
            self._pivot(r, alpha)
            if step <= 1e-12:
                stall += 1
                if stall >= self.stall_limit:
                    bland = True
            else:
                stall, bland = 0, False


def solve_lp(model: MilpModel, **engine_kw) -> MilpSolution:
    """Solve the continuous relaxation of ``model``.

    Integrality flags are ignored.  Raises :class:`SingularBasisError` if the
    basis degenerates numerically.
    """
    t0 = time.perf_counter()
    try:
        res = LpEngine(model, **engine_kw).solve()
    except SingularBasisError:
        res = LpEngine(model, **{**engine_kw, **STRICT}).solve()
    wall = time.perf_counter() - t0
    if res.status == Status.OPTIMAL:
        return MilpSolution(Status.OPTIMAL, res.x, res.objective, res.objective, 0.0, wall,
                            nodes=1, iterations=res.iterations, duals=res.duals,
                            reduced_costs=res.reduced_costs, basis_state=res.state)
    bound = -np.inf if res.status == Status.UNBOUNDED else np.inf
    return MilpSolution(res.status, None, bound, bound, np.inf, wall, nodes=1,
                        iterations=res.iterations)
