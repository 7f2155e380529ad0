"""Bounded-variable revised simplex for LPs of the form

    max/min  c x   s.t.  A x = d,   l <= x <= u   (l finite, u may be +inf).

One solver serves the master problem, the membership separation LP and the
explicit multiplier-space cut LP used for cross-checking.  Feasibility is
restored from any starting basis by a composite phase 1 (maximize the
negated total bound violation of the basic variables), so a stale basis is
usable as a crash start.  Pricing is Dantzig with a switch to Bland's rule
when the objective stalls.  The basis inverse is kept explicitly and
updated in product form, with periodic refactorization.
"""

from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .standard_form import Basis, SingularBasisError

REFRESH_EVERY = 100  # pivots between refactorizations
PIVOT_TOL = 1e-9  # ratio-test pivot acceptance
ETA_TOL = 1e-11  # product-form update pivot floor
DEFAULT_MAX_ITER = 50_000
DEFAULT_BLAND_WINDOW = 1_000


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class BoundedLp:
    """max/min c x over A x = d, l <= x <= u.

    Lower bounds must be finite (shift free variables or split them
    before building the LP) and A must have full row rank; every system
    produced in this package carries an identity slack block, which
    guarantees that.
    """

    sense: str  # 'min' or 'max'
    objective: np.ndarray
    a_eq: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.a_eq = np.asarray(self.a_eq, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        r, c = self.a_eq.shape
        if not (
            self.objective.shape == (c,)
            and self.rhs.shape == (r,)
            and self.lower.shape == (c,)
            and self.upper.shape == (c,)
        ):
            raise ValueError("inconsistent LP dimensions")
        if self.sense not in ("min", "max"):
            raise ValueError(f"bad sense {self.sense!r}")
        if not np.all(np.isfinite(self.lower)):
            raise ValueError("lower bounds must be finite")
        if np.any(self.upper < self.lower):
            raise ValueError("empty bound interval (upper < lower)")

    @property
    def num_rows(self) -> int:
        return self.a_eq.shape[0]

    @property
    def num_cols(self) -> int:
        return self.a_eq.shape[1]


@dataclass
class SimplexResult:
    status: Status
    value: float
    x: np.ndarray
    basis: Basis | None
    reduced_costs: np.ndarray | None
    duals: np.ndarray | None
    pivots: int
    phase1_pivots: int

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def solve(
    lp: BoundedLp,
    start: Basis | None = None,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    time_limit: float | None = None,
    bland_window: int = DEFAULT_BLAND_WINDOW,
) -> SimplexResult:
    """Solve ``lp``, optionally warm-starting from ``start``.

    A singular or ill-sized starting basis silently falls back to a crash
    basis.  Hitting ``max_iter`` or ``time_limit`` yields the
    iteration-limit status.  The result is deterministic for identical
    inputs and limits.
    """
    if lp.num_rows == 0:
        return _solve_unconstrained(lp)
    worker = _Worker(
        lp, start, max_iter=max_iter, time_limit=time_limit,
        bland_window=bland_window,
    )
    return worker.run()


def _solve_unconstrained(lp: BoundedLp) -> SimplexResult:
    cmax = lp.objective if lp.sense == "max" else -lp.objective
    x = np.where(cmax > 0, lp.upper, lp.lower)
    unbounded = (cmax > 0) & ~np.isfinite(lp.upper)
    if np.any(unbounded):
        value = np.inf if lp.sense == "max" else -np.inf
        return SimplexResult(Status.UNBOUNDED, value, x, None, None, None, 0, 0)
    value = float(cmax @ x)
    reduced = lp.objective.copy()
    basis = Basis(np.zeros(0, dtype=int), cmax > 0)
    if lp.sense == "min":
        value = -value
    return SimplexResult(
        Status.OPTIMAL, value, x, basis, reduced, np.zeros(0), 0, 0
    )


class _Worker:
    def __init__(self, lp, start, *, max_iter, bland_window, time_limit=None):
        self.lp = lp
        self.a = lp.a_eq
        self.d = lp.rhs
        self.l = lp.lower
        self.u = lp.upper
        self.r, self.ncols = self.a.shape
        self.cmax = lp.objective if lp.sense == "max" else -lp.objective
        self.fixed = self.u - self.l <= 0.0
        self.deadline = None
        if time_limit is not None:
            self.deadline = time.perf_counter() + max(time_limit, 0.0)
        scale = max(
            1.0,
            float(np.abs(self.d).max(initial=0.0)),
            float(np.abs(self.l).max(initial=0.0)),
            float(np.abs(self.u[np.isfinite(self.u)]).max(initial=0.0)),
        )
        self.ftol = 1e-9 * scale
        self.dtol = 1e-9 * max(1.0, float(np.abs(self.cmax).max(initial=0.0)))
        self.max_iter = max_iter
        self.bland_window = bland_window
        self.pivots = 0
        self.phase1_pivots = 0
        self.bland = False
        self._since_improve = 0
        self._best = -np.inf
        self._ger = None  # scratch buffer for the rank-1 inverse update
        self._init_basis(start)

    # -- basis handling ----------------------------------------------------

    def _init_basis(self, start: Basis | None) -> None:
        self.atup = np.zeros(self.ncols, dtype=bool)
        basic = None
        if start is not None and start.basic.shape[0] == self.r:
            cand = np.asarray(start.basic, dtype=int)
            ok = (
                cand.min(initial=0) >= 0
                and cand.max(initial=-1) < self.ncols
                and np.unique(cand).size == self.r
            )
            if ok:
                try:
                    binv = self._invert(cand)
                    basic = cand.copy()
                    self.binv = binv
                    if start.at_upper.shape[0] == self.ncols:
                        self.atup = start.at_upper.copy()
                except SingularBasisError:
                    basic = None
        if basic is None:
            basic = self._crash_basis()
            self.binv = self._invert(basic)
            self.atup = np.zeros(self.ncols, dtype=bool)
        self.basic = basic
        self.inb = np.zeros(self.ncols, dtype=bool)
        self.inb[self.basic] = True
        # drop meaningless statuses: basic columns and infinite uppers
        self.atup[self.inb] = False
        self.atup[~np.isfinite(self.u)] = False
        self.x = np.where(self.atup, self.u, self.l).astype(float)
        self._recompute_basics()

    def _invert(self, basic: np.ndarray) -> np.ndarray:
        bmat = self.a[:, basic]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(bmat, check_finite=False)
        diag = np.abs(np.diag(lu))
        scale = max(1.0, float(np.abs(bmat).max(initial=0.0)))
        if diag.size and diag.min() < 1e-10 * scale:
            raise SingularBasisError("singular basis")
        return scipy.linalg.lu_solve((lu, piv), np.eye(self.r), check_finite=False)

    def _crash_basis(self) -> np.ndarray:
        # QR with column pivoting yields a deterministic independent set.
        _, rmat, perm = scipy.linalg.qr(self.a, pivoting=True, mode="economic")
        diag = np.abs(np.diag(rmat))
        scale = max(1.0, float(np.abs(self.a).max(initial=0.0)))
        rank = int(np.sum(diag > 1e-10 * scale))
        if rank < self.r:
            raise ValueError("constraint matrix is row-rank deficient")
        return np.sort(perm[: self.r]).astype(int)

    def _recompute_basics(self) -> None:
        xn = self.x.copy()
        xn[self.basic] = 0.0
        self.x[self.basic] = self.binv @ (self.d - self.a @ xn)

    # -- pricing and pivoting ----------------------------------------------

    def _price(self, g: np.ndarray) -> np.ndarray:
        y = g[self.basic] @ self.binv
        return g - y @ self.a, y

    def _entering(self, cbar: np.ndarray) -> int | None:
        eligible = ~self.inb & ~self.fixed
        improving = eligible & (
            (~self.atup & (cbar > self.dtol)) | (self.atup & (cbar < -self.dtol))
        )
        idx = np.nonzero(improving)[0]
        if idx.size == 0:
            return None
        if self.bland:
            return int(idx[0])
        return int(idx[np.argmax(np.abs(cbar[idx]))])

    def _ratio_test(self, sigma: float, w: np.ndarray, phase1: bool):
        """Largest step for entering movement sigma*t; returns
        (t, leave_pos, leave_to_upper) with leave_pos None for a bound flip."""
        delta = -sigma * w  # basic movement per unit step
        xb = self.x[self.basic]
        lb = self.l[self.basic]
        ub = self.u[self.basic]
        ratios = np.full(self.r, np.inf)
        to_upper = np.zeros(self.r, dtype=bool)
        up = delta > PIVOT_TOL
        dn = delta < -PIVOT_TOL
        if phase1:
            too_low = xb < lb - self.ftol
            too_high = xb > ub + self.ftol
            # increasing: violated-low variables block at their lower bound,
            # feasible ones at a finite upper; violated-high run free.
            blk = up & too_low
            ratios[blk] = (lb[blk] - xb[blk]) / delta[blk]
            blk = up & ~too_low & ~too_high & np.isfinite(ub)
            ratios[blk] = (ub[blk] - xb[blk]) / delta[blk]
            to_upper[blk] = True
            blk = dn & too_high
            ratios[blk] = (ub[blk] - xb[blk]) / delta[blk]
            to_upper[blk] = True
            blk = dn & ~too_high & ~too_low
            ratios[blk] = (lb[blk] - xb[blk]) / delta[blk]
        else:
            blk = up & np.isfinite(ub)
            ratios[blk] = (ub[blk] - xb[blk]) / delta[blk]
            to_upper[blk] = True
            blk = dn
            ratios[blk] = (lb[blk] - xb[blk]) / delta[blk]
        np.maximum(ratios, 0.0, out=ratios)  # degenerate, within tolerance

        e_range = self.u[self._enter] - self.l[self._enter]
        t = float(min(ratios.min(initial=np.inf), e_range))
        if not np.isfinite(t):
            return np.inf, None, False
        if e_range <= t and not np.any(ratios <= t + 1e-12 * (1.0 + t)):
            return t, None, False  # bound flip
        near = ratios <= t + 1e-12 * (1.0 + t)
        cand = np.nonzero(near)[0]
        if self.bland:
            pos = cand[np.argmin(self.basic[cand])]
        else:
            pos = cand[np.argmax(np.abs(delta[cand]))]
        return float(max(ratios[pos], 0.0)), int(pos), bool(to_upper[pos])

    def _ratio_test_long(self, sigma: float, w: np.ndarray, slope: float):
        """Piecewise phase-1 ratio test: pass breakpoints while the
        infeasibility keeps decreasing, stop at the one where the
        directional slope turns non-positive.

        Every bound crossing of a basic variable changes the slope by
        |delta_i|: violated variables reaching the bound they violate stop
        contributing, feasible ones crossing outward start counting
        against.  The walk must terminate because the violated rows'
        favorable contributions are all consumed eventually.
        """
        delta = -sigma * w
        xb = self.x[self.basic]
        lb = self.l[self.basic]
        ub = self.u[self.basic]
        up = delta > PIVOT_TOL
        dn = delta < -PIVOT_TOL
        too_low = xb < lb - self.ftol
        too_high = xb > ub + self.ftol

        masks_targets = [
            (up & too_low, lb, False),
            (up & ~too_low & ~too_high & np.isfinite(ub), ub, True),
            (dn & too_high, ub, True),
            (dn & ~too_high & ~too_low, lb, False),
        ]
        ts, drops, poss, toups = [], [], [], []
        for mask, target, toup in masks_targets:
            idx = np.nonzero(mask)[0]
            if idx.size == 0:
                continue
            t = (target[idx] - xb[idx]) / delta[idx]
            ts.append(np.maximum(t, 0.0))
            drops.append(np.abs(delta[idx]))
            poss.append(idx)
            toups.append(np.full(idx.size, toup))
        e_range = self.u[self._enter] - self.l[self._enter]
        if np.isfinite(e_range):
            ts.append(np.array([e_range]))
            drops.append(np.array([np.inf]))
            poss.append(np.array([-1]))
            toups.append(np.array([False]))
        if not ts:
            return np.inf, None, False
        ts = np.concatenate(ts)
        drops = np.concatenate(drops)
        poss = np.concatenate(poss)
        toups = np.concatenate(toups)
        order = np.lexsort((poss, ts))
        for i in order:
            slope -= drops[i]
            if slope <= 1e-12 * (1.0 + abs(slope)):
                if poss[i] < 0:
                    return float(ts[i]), None, False  # bound flip
                return float(ts[i]), int(poss[i]), bool(toups[i])
        # numerically the slope should have been exhausted; stop at the
        # last breakpoint rather than diverging
        i = order[-1]
        if poss[i] < 0:
            return float(ts[i]), None, False
        return float(ts[i]), int(poss[i]), bool(toups[i])

    def _apply_pivot(self, sigma, t, w, leave_pos, leave_to_upper) -> None:
        e = self._enter
        self.x[self.basic] += t * (-sigma * w)
        if leave_pos is None:  # bound flip, no basis change
            self.x[e] = self.u[e] if sigma > 0 else self.l[e]
            self.atup[e] = sigma > 0
            self.pivots += 1
            return
        lv = int(self.basic[leave_pos])
        self.x[e] = self.x[e] + sigma * t
        self.x[lv] = self.u[lv] if leave_to_upper else self.l[lv]
        self.atup[lv] = leave_to_upper
        self.atup[e] = False
        self.basic[leave_pos] = e
        self.inb[e] = True
        self.inb[lv] = False
        wr = w[leave_pos]
        if abs(wr) < ETA_TOL:
            self.binv = self._invert(self.basic)
            self._recompute_basics()
        else:
            br = self.binv[leave_pos] / wr
            if self._ger is None or self._ger.shape[0] != self.r:
                self._ger = np.empty((self.r, self.r))
            np.multiply(w[:, None], br[None, :], out=self._ger)
            self.binv -= self._ger
            self.binv[leave_pos] = br
        self.pivots += 1
        if self.pivots % REFRESH_EVERY == 0:
            self.binv = self._invert(self.basic)
            self._recompute_basics()

    def _track_progress(self, obj: float) -> None:
        if obj > self._best + 1e-10 * (1.0 + abs(self._best)):
            self._best = obj
            self._since_improve = 0
        else:
            self._since_improve += 1
            if self._since_improve > self.bland_window:
                self.bland = True

    def _reset_progress(self) -> None:
        self._best = -np.inf
        self._since_improve = 0
        self.bland = False

    # -- phases --------------------------------------------------------------

    def _infeasibility(self) -> float:
        xb = self.x[self.basic]
        return float(
            np.maximum(self.l[self.basic] - xb, 0.0).sum()
            + np.maximum(xb - self.u[self.basic], 0.0).sum()
        )

    def _out_of_budget(self) -> bool:
        if self.pivots >= self.max_iter:
            return True
        return (
            self.deadline is not None
            and self.pivots % 64 == 0
            and time.perf_counter() > self.deadline
        )

    def _phase1(self) -> Status:
        self._reset_progress()
        while not self._out_of_budget():
            xb = self.x[self.basic]
            low = xb < self.l[self.basic] - self.ftol
            high = xb > self.u[self.basic] + self.ftol
            if not (low.any() or high.any()):
                return Status.OPTIMAL
            # the violation gradient lives on few basic positions: price
            # through those rows of the inverse directly
            y = self.binv[low].sum(axis=0) - self.binv[high].sum(axis=0)
            cbar = -(y @ self.a)
            cbar[self.basic[low]] += 1.0
            cbar[self.basic[high]] -= 1.0
            e = self._entering(cbar)
            if e is None:
                return Status.INFEASIBLE
            self._enter = e
            sigma = -1.0 if self.atup[e] else 1.0
            w = self.binv @ self.a[:, e]
            if self.bland:
                # short, provably non-cycling steps under Bland's rule
                t, pos, to_up = self._ratio_test(sigma, w, phase1=True)
            else:
                t, pos, to_up = self._ratio_test_long(sigma, w, abs(cbar[e]))
            if not np.isfinite(t):
                # cannot happen for an improving phase-1 direction
                return Status.INFEASIBLE
            self._apply_pivot(sigma, t, w, pos, to_up)
            self.phase1_pivots += 1
            self._track_progress(-self._infeasibility())
        return Status.ITERATION_LIMIT

    def _phase2(self) -> Status:
        self._reset_progress()
        while not self._out_of_budget():
            cbar, _ = self._price(self.cmax)
            e = self._entering(cbar)
            if e is None:
                return Status.OPTIMAL
            self._enter = e
            sigma = -1.0 if self.atup[e] else 1.0
            w = self.binv @ self.a[:, e]
            t, pos, to_up = self._ratio_test(sigma, w, phase1=False)
            if not np.isfinite(t):
                return Status.UNBOUNDED
            self._apply_pivot(sigma, t, w, pos, to_up)
            self._track_progress(float(self.cmax @ self.x))
            if self._phase1_needed():
                st = self._phase1()
                if st is not Status.OPTIMAL:
                    return st
                self._reset_progress()
        return Status.ITERATION_LIMIT

    def _phase1_needed(self) -> bool:
        # numerical drift check, only worth doing occasionally
        if self.pivots % REFRESH_EVERY:
            return False
        return self._infeasibility() > 10.0 * self.ftol * self.r

    def run(self) -> SimplexResult:
        st = self._phase1()
        if st is Status.OPTIMAL:
            st = self._phase2()
        return self._finish(st)

    def _finish(self, st: Status) -> SimplexResult:
        cbar, y = self._price(self.cmax)
        cbar[self.basic] = 0.0
        value = float(self.cmax @ self.x)
        if st is Status.UNBOUNDED:
            value = np.inf
        if st is Status.INFEASIBLE:
            value = np.nan
        if self.lp.sense == "min":
            value = -value
            cbar = -cbar
            y = -y
        basis = Basis(self.basic.copy(), self.atup.copy())
        return SimplexResult(
            status=st,
            value=value,
            x=self.x.copy(),
            basis=basis,
            reduced_costs=cbar,
            duals=y,
            pivots=self.pivots,
            phase1_pivots=self.phase1_pivots,
        )


def dual_objective(lp: BoundedLp, result: SimplexResult) -> float:
    """Dual value y d + sum of reduced costs times active bounds.

    Coincides with the primal objective at any basic solution; used by the
    post-hoc optimality checks.
    """
    y = result.duals
    cbar = result.reduced_costs
    active = np.where(result.basis.at_upper, lp.upper, lp.lower)
    nonbasic = np.ones(lp.num_cols, dtype=bool)
    nonbasic[result.basis.basic] = False
    return float(y @ lp.rhs + cbar[nonbasic] @ active[nonbasic])
