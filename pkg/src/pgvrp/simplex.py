"""Dense LP core: two-phase primal simplex over bounded variables.

Minimizes c.x subject to rows with senses =, <=, >= and variable bounds
0 <= x <= u (u may be infinite). The solver reports primal values, row
duals, an unbounded ray when there is one, and the final basis; a basis can
warm-start a re-solve after appending a cutting plane (dual simplex).

Representation is dense throughout; anti-cycling falls back to Bland's rule
after an objective stall. Phase one minimizes the artificial-variable sum;
a big-M single phase is available behind an option.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

LE, GE, EQ = "<=", ">=", "="
_SENSES = (LE, GE, EQ)


class SimplexError(RuntimeError):
    """Numeric breakdown or iteration-limit failure; never silent."""


@dataclass
class SimplexOptions:
    tol_feas: float = 1e-8
    tol_opt: float = 1e-8
    tol_pivot: float = 1e-10
    stall_limit: int = 400
    max_iterations: int = 200_000
    refactor_every: int = 120
    method: str = "two-phase"  # or "big-m"


@dataclass(eq=False)
class LinearProgram:
    """min c.x  s.t.  A x (senses) b,  0 <= x <= upper."""

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        if self.A.size == 0:
            self.A = self.A.reshape((len(self.b), len(self.c)))
        if self.upper is None:
            self.upper = np.full(len(self.c), np.inf)
        else:
            self.upper = np.asarray(self.upper, dtype=float)
        m, n = self.A.shape
        if len(self.c) != n or len(self.b) != m or len(self.senses) != m:
            raise SimplexError(
                f"dimension mismatch: A is {m}x{n}, c has {len(self.c)}, "
                f"b has {len(self.b)}, senses has {len(self.senses)}"
            )
        bad = [s for s in self.senses if s not in _SENSES]
        if bad:
            raise SimplexError(f"unknown row sense {bad[0]!r}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))):
            raise SimplexError("non-finite coefficient")

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    def with_row(self, a: Sequence[float], sense: str, rhs: float) -> "LinearProgram":
        return LinearProgram(
            c=self.c.copy(),
            A=np.vstack([self.A, np.asarray(a, dtype=float)]) if self.n_rows else np.asarray([a], dtype=float),
            senses=list(self.senses) + [sense],
            b=np.append(self.b, rhs),
            upper=self.upper.copy(),
        )


@dataclass(eq=False)
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    ray: np.ndarray | None = None
    basis: tuple[int, ...] | None = None  # column labels, see _Core
    iterations: int = 0


class _Core:
    """Working arrays for one solve.

    Column labels are stable across re-solves of extended LPs:
    label j < n            -> structural variable j
    n <= label < n + m     -> slack of row (label - n)
    label >= n + m         -> artificial of row (label - n - m)
    """

    def __init__(self, lp: LinearProgram, options: SimplexOptions):
        self.lp = lp
        self.opt = options
        m, n = lp.n_rows, lp.n_vars
        self.m, self.n = m, n

        sign = np.ones(m)
        A = lp.A.copy()
        b = lp.b.copy()
        senses = list(lp.senses)
        for i in range(m):
            if b[i] < 0:
                A[i] *= -1.0
                b[i] *= -1.0
                sign[i] = -1.0
                if senses[i] == LE:
                    senses[i] = GE
                elif senses[i] == GE:
                    senses[i] = LE
        self.row_sign = sign
        self.senses = senses
        self.b = b

        labels = list(range(n))
        extra: list[tuple[int, float]] = []  # (row, coefficient) unit columns
        ub_extra: list[float] = []
        self.slack_col: dict[int, int] = {}
        for i, s in enumerate(senses):
            if s == EQ:
                continue
            extra.append((i, 1.0 if s == LE else -1.0))
            labels.append(n + i)
            ub_extra.append(np.inf)
            self.slack_col[i] = len(labels) - 1
        self.art_col: dict[int, int] = {}
        for i in range(m):
            # '<=' rows start from their slack, as do '>=' rows with a zero
            # right-hand side (slack basic at 0); the rest need artificials
            if senses[i] == LE or (senses[i] == GE and b[i] == 0.0):
                continue
            extra.append((i, 1.0))
            labels.append(n + m + i)
            ub_extra.append(np.inf)
            self.art_col[i] = len(labels) - 1
        self.N = n + len(extra)
        self.Aext = np.zeros((m, self.N))
        self.Aext[:, :n] = A
        for k, (i, coef) in enumerate(extra):
            self.Aext[i, n + k] = coef
        self.labels = np.array(labels)
        self.ub = np.concatenate([lp.upper, np.array(ub_extra)])

        self.basis = np.array(
            [self.art_col.get(i, self.slack_col.get(i, -1)) for i in range(m)],
            dtype=int,
        )
        if np.any(self.basis < 0):
            raise SimplexError("internal: row without initial basic column")
        self.at_upper = np.zeros(self.N, dtype=bool)
        self.in_basis = np.zeros(self.N, dtype=bool)
        self.in_basis[self.basis] = True
        self.iterations = 0
        self.bland = False
        self._stall = 0
        self._best_obj = np.inf
        # the initial basis is a signed diagonal: invert it directly
        diag = np.array([self.Aext[i, self.basis[i]] for i in range(m)])
        self.Binv = np.diag(1.0 / diag) if m else np.eye(0)
        self.xB = b / diag if m else b.copy()

    # -- linear algebra helpers ------------------------------------------

    def refactor(self):
        if self.m == 0:
            return
        B = self.Aext[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis during refactorization") from exc
        self.recompute_xB()

    def recompute_xB(self):
        rhs = self.b.copy()
        up = np.where(self.at_upper)[0]
        if up.size:
            rhs = rhs - self.Aext[:, up] @ self.ub[up]
        self.xB = self.Binv @ rhs

    def solution_values(self) -> np.ndarray:
        x = np.zeros(self.N)
        x[self.at_upper] = self.ub[self.at_upper]
        x[self.basis] = self.xB
        return x

    def duals(self, cost: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        return cost[self.basis] @ self.Binv

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        rc = cost - self.duals(cost) @ self.Aext
        rc[self.basis] = 0.0
        return rc

    # -- primal simplex ---------------------------------------------------

    def primal(self, cost: np.ndarray) -> str:
        """Iterate to optimality; returns 'optimal' or 'unbounded'."""
        tol = self.opt.tol_opt
        self._stall = 0
        self._best_obj = np.inf
        while True:
            if self.iterations > self.opt.max_iterations:
                raise SimplexError("iteration limit exceeded")
            rc = self.reduced_costs(cost)
            viol = np.where(self.at_upper, rc, -rc)
            viol[self.in_basis] = -np.inf
            viol[self.ub == 0.0] = -np.inf  # fixed columns never enter
            if self.bland:
                elig = np.where(viol > tol)[0]
                if elig.size == 0:
                    return "optimal"
                q = int(elig[np.argsort(self.labels[elig], kind="stable")[0]])
            else:
                q = int(np.argmax(viol))
                if viol[q] <= tol:
                    return "optimal"
            if not self._step(cost, q):
                return "unbounded"
            obj = float(cost @ self.solution_values())
            if obj < self._best_obj - 1e-12:
                self._best_obj = obj
                self._stall = 0
            else:
                self._stall += 1
                if self._stall > self.opt.stall_limit:
                    self.bland = True

    def _step(self, cost: np.ndarray, q: int) -> bool:
        """One pivot with entering column q; False means unbounded."""
        sigma = -1.0 if self.at_upper[q] else 1.0  # direction of x_q
        aq = self.Binv @ self.Aext[:, q]
        dB = -sigma * aq
        tol = self.opt.tol_pivot

        # largest step before a basic variable or x_q itself hits a bound
        t_own = self.ub[q] if np.isfinite(self.ub[q]) else np.inf
        blocker = -1  # -1: bound flip of q
        if self.m:
            ubB = self.ub[self.basis]
            down = dB < -tol
            up = (dB > tol) & np.isfinite(ubB)
            ratios = np.full(self.m, np.inf)
            ratios[down] = self.xB[down] / -dB[down]
            ratios[up] = (ubB[up] - self.xB[up]) / dB[up]
            np.maximum(ratios, 0.0, out=ratios)
            t_min = float(ratios.min()) if self.m else np.inf
            if t_min < t_own + 1e-12 and np.isfinite(t_min):
                # prefer large pivots within a small ratio tolerance; tiny
                # pivots degrade the maintained inverse
                window = t_min + 1e-9 * (1.0 + abs(t_min))
                cand = np.where(ratios <= window)[0]
                if self.bland:
                    blocker = int(cand[np.argmin(self.labels[self.basis[cand]])])
                else:
                    blocker = int(cand[np.argmax(np.abs(dB[cand]))])
                t_best = t_min
            else:
                t_best = t_own
        else:
            t_best = t_own
        if not np.isfinite(t_best):
            self._ray_col = q
            return False

        t = max(t_best, 0.0)
        self.xB += t * dB
        self.iterations += 1
        if blocker < 0:
            self.at_upper[q] = ~self.at_upper[q]
            self.recompute_xB()
            return True

        leave = self.basis[blocker]
        hits_upper = dB[blocker] > 0
        piv = aq[blocker]
        if abs(piv) < tol:
            raise SimplexError("pivot element below threshold")
        # elementary update of the basis inverse
        self.Binv[blocker] /= piv
        scale = aq.copy()
        scale[blocker] = 0.0
        self.Binv -= np.outer(scale, self.Binv[blocker])
        self.basis[blocker] = q
        self.in_basis[q] = True
        self.in_basis[leave] = False
        self.at_upper[q] = False
        self.at_upper[leave] = bool(hits_upper and np.isfinite(self.ub[leave]))
        if self.iterations % self.opt.refactor_every == 0:
            self.refactor()
        else:
            self.recompute_xB()
        return True

    # -- dual simplex (for warm restarts after adding rows) ---------------

    def dual(self, cost: np.ndarray) -> str:
        """Restore primal feasibility keeping dual feasibility.

        Returns 'optimal' or 'infeasible'. Reduced costs are updated
        incrementally along the pivot row and refreshed on refactorization.
        """
        tol = self.opt.tol_feas
        if self.m == 0:
            return "optimal"
        rc = self.reduced_costs(cost)
        fresh_at = self.iterations
        while True:
            if self.iterations > self.opt.max_iterations:
                raise SimplexError("iteration limit exceeded (dual)")
            ubB = self.ub[self.basis]
            below = -self.xB
            above = self.xB - ubB
            worst = np.maximum(below, above)
            r = int(np.argmax(worst))
            if worst[r] <= tol:
                return "optimal"
            too_low = below[r] >= above[r]
            row = self.Binv[r] @ self.Aext
            sign = -1.0 if too_low else 1.0
            eligible = ~self.in_basis & (self.ub != 0.0)
            improving = np.where(
                self.at_upper, sign * row < -self.opt.tol_pivot, sign * row > self.opt.tol_pivot
            )
            cand = np.where(eligible & improving)[0]
            if cand.size == 0:
                return "infeasible"
            ratios = np.abs(rc[cand]) / np.abs(row[cand])
            best = float(ratios.min())
            ties = cand[ratios <= best + 1e-12]
            q = int(ties[np.argmin(self.labels[ties])])
            self._dual_pivot(r, q, too_low)
            if self.iterations - fresh_at >= self.opt.refactor_every:
                rc = self.reduced_costs(cost)
                fresh_at = self.iterations
            else:
                rc = rc - (rc[q] / row[q]) * row
                rc[self.basis] = 0.0

    def _dual_pivot(self, r: int, q: int, too_low: bool):
        aq = self.Binv @ self.Aext[:, q]
        piv = aq[r]
        if abs(piv) < self.opt.tol_pivot:
            raise SimplexError("dual pivot element below threshold")
        leave = self.basis[r]
        self.Binv[r] /= piv
        scale = aq.copy()
        scale[r] = 0.0
        self.Binv -= np.outer(scale, self.Binv[r])
        self.basis[r] = q
        self.in_basis[q] = True
        self.in_basis[leave] = False
        self.at_upper[q] = False
        self.at_upper[leave] = bool(not too_low and np.isfinite(self.ub[leave]))
        self.iterations += 1
        if self.iterations % self.opt.refactor_every == 0:
            self.refactor()
        else:
            self.recompute_xB()

    # -- result assembly ---------------------------------------------------

    def phase2_cost(self) -> np.ndarray:
        cost = np.zeros(self.N)
        cost[: self.n] = self.lp.c
        return cost

    def freeze_artificials(self):
        for col in self.art_col.values():
            self.ub[col] = 0.0
            self.at_upper[col] = False

    def result(self, status: str) -> LpSolution:
        if status == "infeasible":
            return LpSolution(status="infeasible", iterations=self.iterations)
        x = self.solution_values()[: self.n]
        cost = self.phase2_cost()
        if status == "unbounded":
            ray = np.zeros(self.N)
            q = self._ray_col
            ray[q] = 1.0
            if self.m:
                ray[self.basis] = -(self.Binv @ self.Aext[:, q])
            return LpSolution(
                status="unbounded",
                x=x,
                ray=ray[: self.n],
                basis=tuple(int(self.labels[k]) for k in self.basis),
                iterations=self.iterations,
            )
        y = self.duals(cost) * self.row_sign
        return LpSolution(
            status="optimal",
            x=x,
            duals=y,
            objective=float(self.lp.c @ x),
            basis=tuple(int(self.labels[k]) for k in self.basis),
            iterations=self.iterations,
        )


def solve(lp: LinearProgram, options: SimplexOptions | None = None) -> LpSolution:
    """Two-phase (or big-M) simplex solve of a bounded-variable LP.

    A numerically degraded run (singular refactorization, vanishing
    pivots) is retried once on a conservative path: Bland's rule from the
    start, frequent refactorization, stricter pivot threshold.
    """
    opt = options or SimplexOptions()
    try:
        return _solve_once(lp, opt)
    except SimplexError:
        careful = replace(
            opt, stall_limit=0, refactor_every=20, tol_pivot=max(opt.tol_pivot, 1e-8)
        )
        return _solve_once(lp, careful)


def _solve_once(lp: LinearProgram, opt: SimplexOptions) -> LpSolution:
    core = _Core(lp, opt)

    if opt.method == "big-m":
        cost = core.phase2_cost()
        scale = 1.0 + float(np.abs(lp.c).max(initial=0.0))
        big = 1e7 * scale
        for col in core.art_col.values():
            cost[col] = big
        status = core.primal(cost)
        if status == "optimal":
            arts = np.array(sorted(core.art_col.values()), dtype=int)
            if arts.size and core.solution_values()[arts].sum() > opt.tol_feas * (
                1.0 + float(np.abs(core.b).sum())
            ):
                return core.result("infeasible")
            core.freeze_artificials()
        return core.result(status)

    if core.art_col:
        cost1 = np.zeros(core.N)
        for col in core.art_col.values():
            cost1[col] = 1.0
        status = core.primal(cost1)
        if status != "optimal":
            raise SimplexError("phase one cannot be unbounded")
        infeas = float(cost1 @ core.solution_values())
        if infeas > opt.tol_feas * (1.0 + float(np.abs(core.b).sum())):
            return core.result("infeasible")
        core.freeze_artificials()
        core.bland = False
    status = core.primal(core.phase2_cost())
    return core.result(status)


def warm_solve(
    lp: LinearProgram,
    basis_labels: Sequence[int],
    x_prev: np.ndarray | None,
    new_rows: Sequence[int] = (),
    options: SimplexOptions | None = None,
) -> LpSolution:
    """Solve starting from a dual-feasible basis of a related LP.

    `basis_labels` is the previous basis expressed in this LP's labels
    (structural j, slack n+i, artificial n+m+i); `new_rows` lists the rows
    absent from that LP, each an inequality whose slack completes the
    basis. Bound tightenings and added cut rows both leave the basis dual
    feasible, so the dual simplex repairs primal feasibility, then a
    primal pass confirms optimality. Falls back to a cold solve whenever
    the basis cannot be applied.
    """
    opt = options or SimplexOptions()
    if len(basis_labels) + len(new_rows) != lp.n_rows:
        return solve(lp, opt)
    core = _Core(lp, opt)
    core.freeze_artificials()  # warm starts never touch artificial columns
    label_to_col = {int(l): k for k, l in enumerate(core.labels)}
    basis_cols = []
    for lbl in basis_labels:
        col = label_to_col.get(int(lbl))
        if col is None:
            return solve(lp, opt)
        basis_cols.append(col)
    for i in new_rows:
        slack = core.slack_col.get(int(i))
        if slack is None:
            return solve(lp, opt)  # a new equality row cannot warm-start
        basis_cols.append(slack)
    core.basis = np.array(basis_cols, dtype=int)
    core.in_basis[:] = False
    core.in_basis[core.basis] = True
    core.at_upper[:] = False
    if x_prev is not None:
        for j in range(min(len(x_prev), lp.n_vars)):
            if not core.in_basis[j] and np.isfinite(core.ub[j]) and core.ub[j] > 0:
                if x_prev[j] >= core.ub[j] - 1e-9:
                    core.at_upper[j] = True
    try:
        core.refactor()
    except SimplexError:
        return solve(lp, opt)
    cost = core.phase2_cost()
    try:
        status = core.dual(cost)
        if status == "infeasible":
            return core.result("infeasible")
        status = core.primal(cost)
    except SimplexError:
        return solve(lp, opt)
    return core.result(status)


def resolve_with_added_row(
    lp: LinearProgram,
    solution: LpSolution,
    a: Sequence[float],
    sense: str,
    rhs: float,
    options: SimplexOptions | None = None,
) -> LpSolution:
    """Re-solve lp extended by one row, warm-starting from a previous basis.

    The previous optimal basis stays dual feasible after the row is added
    (the new row's slack completes it), so the dual simplex repairs primal
    feasibility in a few pivots. Falls back to a cold solve when the basis
    cannot be reused (equality row, or artificials still basic).
    """
    extended = lp.with_row(a, sense, rhs)
    opt = options or SimplexOptions()
    if solution.status != "optimal" or solution.basis is None or sense == EQ:
        return solve(extended, opt)
    # artificial labels refer to rows of the same index; they stay valid
    labels = tuple(
        lbl if lbl < lp.n_vars + lp.n_rows else lbl + 1 for lbl in solution.basis
    )
    return warm_solve(extended, labels, solution.x, [extended.n_rows - 1], opt)


def lp_dump(lp: LinearProgram) -> str:
    """Human-readable one-row-per-line dump for debugging."""
    out = ["min " + " + ".join(f"{v:g}*x{j}" for j, v in enumerate(lp.c) if v)]
    for i in range(lp.n_rows):
        terms = " + ".join(f"{lp.A[i, j]:g}*x{j}" for j in range(lp.n_vars) if lp.A[i, j])
        out.append(f"  {terms or '0'} {lp.senses[i]} {lp.b[i]:g}")
    bounds = ", ".join(
        f"x{j}<={u:g}" for j, u in enumerate(lp.upper) if np.isfinite(u)
    )
    out.append(f"  0 <= x{'; ' + bounds if bounds else ''}")
    return "\n".join(out)
