"""Kelley cutting-plane loop over the membership separation oracle.

``optimize_closure`` drives the elementary-closure computation: solve the
master LP, separate the fractional integer coordinates of its optimum
through the membership LP, add the violated cuts (plain cuts for the
simple closure, strengthened cuts for the GMI closure approximation) and
repeat.  Separation always runs against the original rows only, so every
emitted cut is rank 1.  ``gmi_rounds`` is the textbook comparison
baseline: read GMI cuts straight from the optimal tableau of the growing
master, letting the rank increase round by round.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import membership, simplex
from .cuts import (
    CutRow,
    DynamismError,
    EmptyDisjunctionError,
    FractionalityError,
    eliminate_slacks,
    gmi_cut,
    same_cut,
)
from .instances import NormalizedMilp
from .simplex import BoundedLp, Status
from .standard_form import Basis, StandardLp, tableau_row, to_standard

GAP_TOL = 1e-9
MONOTONE_TOL = 1e-7


class ClosureError(ValueError):
    """Relaxation unbounded or infeasible; no closure bound exists."""


@dataclass
class ClosureConfig:
    mode: str = "pestar"  # 'pe', 'pestar' or 'gmi'
    eps: float = 1e-4
    time_limit: float = 3600.0
    tail_window: int = 10
    tail_tol: float = 1e-4
    rounds: int = 1  # gmi mode only
    max_active_cuts: int = 5000
    pool_park_after: int = 30
    pool_slack_scale: float = 1e-7  # threshold = scale * (1 + max|b|)
    max_simplex_iter: int = simplex.DEFAULT_MAX_ITER
    threads: int = 1

    def __post_init__(self):
        if self.mode not in ("pe", "pestar", "gmi"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.tail_window < 2:
            raise ValueError("tail window must be at least 2")


@dataclass
class IterationLog:
    index: int
    objective: float  # master optimum, original sense
    separations: int
    cuts_found: int
    no_cuts: int
    inconclusive: int
    reactivated: int
    wall_time: float


@dataclass
class ClosureReport:
    instance: str
    mode: str
    z_lp: float
    z_cut: float | None
    z_opt: float | None
    gap_closed: float | None
    termination: str  # 'proved' | 'time_limit' | 'stalled' | 'rounds_done'
    iterations: list[IterationLog] = field(default_factory=list)
    num_master_solves: int = 0
    num_separations: int = 0
    num_cuts: int = 0
    num_no_cuts: int = 0
    num_inconclusive: int = 0
    cuts_active: int = 0
    cuts_parked: int = 0
    master_pivots: int = 0
    separation_pivots: int = 0
    master_time: float = 0.0
    separation_time: float = 0.0
    total_time: float = 0.0
    config: dict = field(default_factory=dict)
    cut_rows: list[CutRow] = field(default_factory=list, repr=False)
    x_final: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "mode": self.mode,
            "z_lp": self.z_lp,
            "z_cut": self.z_cut,
            "z_opt": self.z_opt,
            "gap_closed": self.gap_closed,
            "termination": self.termination,
            "iterations": len(self.iterations),
            "separations": {
                "total": self.num_separations,
                "cut": self.num_cuts,
                "no_cut": self.num_no_cuts,
                "inconclusive": self.num_inconclusive,
            },
            "cuts": {"active": self.cuts_active, "parked": self.cuts_parked},
            "pivots": {
                "master": self.master_pivots,
                "separation": self.separation_pivots,
                "total": self.master_pivots + self.separation_pivots,
            },
            "time": {
                "master": self.master_time,
                "separation": self.separation_time,
                "total": self.total_time,
            },
            "config": dict(self.config),
        }


def gap_closed(z_lp: float, z_cut: float, z_opt: float | None) -> float | None:
    """Percentage of the LP-to-optimum distance recovered by the bound.

    Returns None when no reference optimum is available.  When the
    instance has no integrality gap the convention is 100 provided the
    bound did not move either; anything else is undefined.
    """
    if z_opt is None:
        return None
    denom = z_opt - z_lp
    if abs(denom) <= GAP_TOL * (1.0 + abs(z_lp)):
        if abs(z_cut - z_lp) <= GAP_TOL * (1.0 + abs(z_lp)):
            return 100.0
        raise ValueError("reference optimum equals the LP bound; gap undefined")
    return float(min(100.0, max(0.0, 100.0 * (z_cut - z_lp) / denom)))


class CutPool:
    """Active and parked cuts with scale-free duplicate detection.

    A cut whose master slack stays above the threshold for
    ``park_after`` consecutive solves is parked (dropped from the
    master but retained); parked cuts violated by a later master optimum
    are reactivated.
    """

    def __init__(self, slack_threshold: float, park_after: int):
        self.slack_threshold = slack_threshold
        self.park_after = park_after
        self.active: list[CutRow] = []
        self.parked: list[CutRow] = []
        self.inactivity: list[int] = []
        self._buckets: dict[bytes, list[CutRow]] = {}

    def _key(self, cut: CutRow) -> bytes:
        norm = cut.normalized()
        return np.round(norm.coeffs, 5).tobytes() + np.float64(
            round(norm.rhs, 5)
        ).tobytes()

    def _find(self, cut: CutRow) -> CutRow | None:
        for other in self._buckets.get(self._key(cut), []):
            if same_cut(cut, other):
                return other
        return None

    def add(self, cut: CutRow) -> str:
        """'added', 'duplicate_active' or 'reactivated' (was parked)."""
        existing = self._find(cut)
        if existing is not None:
            if existing in self.parked:
                self.parked.remove(existing)
                self.active.append(existing)
                self.inactivity.append(0)
                return "reactivated"
            return "duplicate_active"
        self._buckets.setdefault(self._key(cut), []).append(cut)
        self.active.append(cut)
        self.inactivity.append(0)
        return "added"

    def maintain(self, x: np.ndarray, basis: Basis, num_orig_rows: int, eps: float):
        """Update activity counters; park stale cuts; reactivate violated ones.

        Returns the number of cuts parked and reactivated.  Only cuts
        whose slack is basic in the current master basis are parked, so
        dropping their row keeps the remaining basis nonsingular.
        """
        in_basis = basis.in_basis_mask() if basis is not None else None
        keep: list[CutRow] = []
        keep_inact: list[int] = []
        parked_now = 0
        for i, cut in enumerate(self.active):
            slack = cut.coeffs @ x - cut.rhs
            if slack > self.slack_threshold:
                self.inactivity[i] += 1
            else:
                self.inactivity[i] = 0
            slack_col_basic = (
                in_basis is not None and in_basis[num_orig_rows + i]
            )
            if self.inactivity[i] >= self.park_after and slack_col_basic:
                self.parked.append(cut)
                parked_now += 1
            else:
                keep.append(cut)
                keep_inact.append(self.inactivity[i])
        self.active = keep
        self.inactivity = keep_inact

        reactivated = 0
        still_parked: list[CutRow] = []
        for cut in self.parked:
            if cut.violation_at(x) > eps:
                self.active.append(cut)
                self.inactivity.append(0)
                reactivated += 1
            else:
                still_parked.append(cut)
        self.parked = still_parked
        return parked_now, reactivated


class _Master:
    """Master LP over the canonical rows plus the active cuts."""

    def __init__(self, nm: NormalizedMilp, max_iter: int):
        self.nm = nm
        self.max_iter = max_iter
        self.slp: StandardLp | None = None
        self.basis: Basis | None = None
        self.result = None
        self.pivots = 0
        self.solves = 0
        self.time = 0.0
        self._cuts: list[CutRow] = []

    def solve(self, cuts: list[CutRow], time_limit: float | None = None):
        t0 = time.perf_counter()
        old_slp = self.slp
        old_cuts = self._cuts
        self._cuts = list(cuts)
        self.slp = to_standard(self.nm, self._cuts)
        if self.basis is not None and old_slp is not None:
            start = self._remap_basis(old_slp, old_cuts)
        else:
            start = self.slp.slack_basis()
        lp = BoundedLp(
            sense="max",
            objective=self.slp.c,
            a_eq=self.slp.a,
            rhs=self.slp.b,
            lower=np.zeros(self.slp.num_cols),
            upper=np.full(self.slp.num_cols, np.inf),
        )
        self.result = simplex.solve(
            lp, start=start, max_iter=self.max_iter, time_limit=time_limit
        )
        self.basis = self.result.basis
        self.pivots += self.result.pivots
        self.solves += 1
        self.time += time.perf_counter() - t0
        return self.result

    def _remap_basis(self, old_slp: StandardLp, old_cuts: list[CutRow]) -> Basis:
        """Carry the previous optimal basis over to the current row set.

        Original slacks keep their index, surviving cut slacks follow
        their cut's new row position, structural columns shift by the
        row-count delta, and each genuinely new row enters with its own
        slack basic.  Dropped rows take their (basic) slack with them, so
        the carried basis stays square and nonsingular.
        """
        m_old = old_slp.num_rows
        m_new = self.slp.num_rows
        m0 = self.nm.num_rows
        new_pos = {id(cut): i for i, cut in enumerate(self._cuts)}
        basic = []
        for col in self.basis.basic:
            col = int(col)
            if col >= m_old:  # structural
                basic.append(col - m_old + m_new)
            elif col < m0:  # original slack
                basic.append(col)
            else:  # old cut slack: follow the cut, or vanish with its row
                pos = new_pos.get(id(old_cuts[col - m0]))
                if pos is not None:
                    basic.append(m0 + pos)
        old_ids = {id(c) for c in old_cuts}
        for i, cut in enumerate(self._cuts):
            if id(cut) not in old_ids:
                basic.append(m0 + i)
        if len(basic) != m_new or len(set(basic)) != m_new:
            return self.slp.slack_basis()  # defensive recrash
        return Basis(np.array(sorted(basic)), np.zeros(self.slp.num_cols, bool))


def _structural_point(slp: StandardLp, x: np.ndarray) -> np.ndarray:
    return x[slp.num_rows : slp.num_rows + slp.num_struct]


def optimize_closure(nm: NormalizedMilp, cfg: ClosureConfig) -> ClosureReport:
    """Optimize over the elementary closure (mode 'pe') or approximate the
    strengthened closure (mode 'pestar').

    Follows the cutting-plane scheme: keep a working list K of integer
    variables worth separating (all of them after a re-initialization),
    separate the fractional ones in increasing order of their value with
    warm-started membership LPs, add every violated cut at the end of the
    pass, and stop once a full pass produced no cut, which certifies the
    master optimum up to eps.  Tailing off of the master objective forces
    a full pass.
    """
    if cfg.mode == "gmi":
        return gmi_rounds(nm, cfg.rounds, cfg=cfg)
    t_start = time.perf_counter()
    p = nm.num_integer
    sep_slp = to_standard(nm)  # separation system: original rows, always
    sep_fingerprint = sep_slp.row_fingerprint()
    master = _Master(nm, cfg.max_simplex_iter)
    pool = CutPool(
        slack_threshold=cfg.pool_slack_scale
        * (1.0 + float(np.abs(nm.b).max(initial=0.0))),
        park_after=cfg.pool_park_after,
    )
    report = ClosureReport(
        instance=nm.name,
        mode=cfg.mode,
        z_lp=np.nan,
        z_cut=None,
        z_opt=None,
        gap_closed=None,
        termination="stalled",
        config=_config_dict(cfg),
    )
    sep_time = 0.0
    sep_pivots = 0

    def remaining() -> float:
        return cfg.time_limit - (time.perf_counter() - t_start)

    res = master.solve(pool.active, time_limit=max(remaining(), 1.0))
    if res.status is Status.UNBOUNDED:
        raise ClosureError("LP relaxation is unbounded")
    if res.status is not Status.OPTIMAL:
        raise ClosureError(f"LP relaxation not solved: {res.status.value}")
    z_lp_norm = res.value
    report.z_lp = nm.original_objective(z_lp_norm)
    history = [res.value]

    K = set(range(p))
    reinit = True
    termination = None
    while True:
        iter_t0 = time.perf_counter()
        if time.perf_counter() - t_start > cfg.time_limit:
            termination = "time_limit"
            break
        xhat = _structural_point(master.slp, res.x)
        parked, reactivated = pool.maintain(
            xhat, master.basis, nm.num_rows, cfg.eps
        )
        if reactivated:
            # master must honor reactivated rows before the next pass
            report.iterations.append(
                IterationLog(
                    index=len(report.iterations),
                    objective=nm.original_objective(res.value),
                    separations=0,
                    cuts_found=0,
                    no_cuts=0,
                    inconclusive=0,
                    reactivated=reactivated,
                    wall_time=time.perf_counter() - iter_t0,
                )
            )
            res = master.solve(pool.active, time_limit=remaining())
            if res.status is Status.INFEASIBLE:
                termination = "proved"
                break
            if res.status is not Status.OPTIMAL:
                termination = "time_limit" if remaining() <= 0 else "stalled"
                break
            history.append(res.value)
            continue

        pt = membership.FractionalPoint.from_point(nm, xhat, tol=1e-6)
        fr = pt.fracs
        candidates = [
            k for k in sorted(K) if min(fr[k], 1.0 - fr[k]) >= cfg.eps
        ]
        order = sorted(candidates, key=lambda k: (pt.x[k], k))
        K = set()

        assert sep_slp.row_fingerprint() == sep_fingerprint  # rank-1 discipline
        outcomes, pass_time, pass_pivots, timed_out = _run_separations(
            nm, pt, order, sep_slp, cfg, t_start
        )
        sep_time += pass_time
        sep_pivots += pass_pivots

        n_cut = n_nocut = n_inconcl = 0
        new_rows = 0
        for k, sep in outcomes:
            report.num_separations += 1
            if sep.found:
                n_cut += 1
                K.add(k)
                cut = sep.strengthened if cfg.mode == "pestar" else sep.plain
                if pool.add(cut) != "duplicate_active":
                    new_rows += 1
            elif sep.inconclusive:
                n_inconcl += 1
            else:
                n_nocut += 1
        report.num_cuts += n_cut
        report.num_no_cuts += n_nocut
        report.num_inconclusive += n_inconcl
        report.iterations.append(
            IterationLog(
                index=len(report.iterations),
                objective=nm.original_objective(res.value),
                separations=len(outcomes),
                cuts_found=n_cut,
                no_cuts=n_nocut,
                inconclusive=n_inconcl,
                reactivated=0,
                wall_time=time.perf_counter() - iter_t0,
            )
        )

        if timed_out:
            termination = "time_limit"
            break
        if not K and reinit:
            termination = "proved" if n_inconcl == 0 else "stalled"
            break
        if K and new_rows == 0:
            # every violated cut already sits in the master: no progress
            # is possible, an honest stall
            termination = "stalled"
            break
        if len(pool.active) > cfg.max_active_cuts:
            termination = "stalled"
            break

        tail = _tailing_off(history, cfg)
        if not K or tail:
            K = set(range(p))
            reinit = True
        else:
            reinit = False

        res = master.solve(pool.active, time_limit=remaining())
        if res.status is Status.INFEASIBLE:
            # valid cuts emptied the master: the closure is empty, hence
            # the instance has no integer point; nothing left to separate
            termination = "proved"
            break
        if res.status is not Status.OPTIMAL:
            termination = "time_limit" if remaining() <= 0 else "stalled"
            break
        history.append(res.value)

    report.termination = termination
    report.z_cut = nm.original_objective(history[-1])
    if master.result.status is Status.OPTIMAL:
        report.x_final = _structural_point(master.slp, master.result.x)
    report.num_master_solves = master.solves
    report.master_pivots = master.pivots
    report.master_time = master.time
    report.separation_pivots = sep_pivots
    report.separation_time = sep_time
    report.cuts_active = len(pool.active)
    report.cuts_parked = len(pool.parked)
    report.cut_rows = pool.active + pool.parked
    report.total_time = time.perf_counter() - t_start
    return report


def _run_separations(nm, pt, order, sep_slp, cfg, t_start):
    """Separate every k in ``order``; returns outcomes in pass order.

    Sequential mode chains the previous terminal basis as a crash start
    (the constraint system is identical when consecutive points share
    the same value, and close otherwise).  With threads > 1 separations
    run independently and are merged by ascending variable index.
    """
    outcomes: list[tuple[int, membership.Separation]] = []
    pass_time = 0.0
    pass_pivots = 0
    timed_out = False
    if cfg.threads > 1 and len(order) > 1:
        from concurrent.futures import ThreadPoolExecutor

        t0 = time.perf_counter()
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool_:
            results = list(
                pool_.map(
                    lambda k: (
                        k,
                        membership.separate(
                            nm, pt, k, slp=sep_slp, eps=cfg.eps,
                            max_iter=cfg.max_simplex_iter,
                        ),
                    ),
                    order,
                )
            )
        pass_time = time.perf_counter() - t0
        outcomes = sorted(results, key=lambda kv: kv[0])
        pass_pivots = sum(s.pivots for _, s in outcomes)
        return outcomes, pass_time, pass_pivots, timed_out

    warm: Basis | None = None
    for k in order:
        budget = cfg.time_limit - (time.perf_counter() - t_start)
        if budget <= 0:
            timed_out = True
            break
        t0 = time.perf_counter()
        sep = membership.separate(
            nm, pt, k, warm=warm, slp=sep_slp, eps=cfg.eps,
            max_iter=cfg.max_simplex_iter, time_limit=budget,
        )
        pass_time += time.perf_counter() - t0
        pass_pivots += sep.pivots
        if sep.basis is not None:
            warm = sep.basis
        outcomes.append((k, sep))
    return outcomes, pass_time, pass_pivots, timed_out


def _tailing_off(history: list[float], cfg: ClosureConfig) -> bool:
    w = cfg.tail_window
    if len(history) <= w:
        return False
    improvement = history[-w - 1] - history[-1]  # non-increasing sequence
    return improvement < cfg.tail_tol * (1.0 + abs(history[-w - 1]))


def gmi_rounds(
    nm: NormalizedMilp, rounds: int, cfg: ClosureConfig | None = None
) -> ClosureReport:
    """Textbook GMI scheme: each round reads one cut per fractional basic
    integer variable from the optimal tableau of the current master.

    Cuts from earlier rounds stay in the master used for generation, so
    the cut rank grows with the round number (unlike the closure loop,
    which only ever separates against the original rows).
    """
    if cfg is None:
        cfg = ClosureConfig(mode="gmi", rounds=rounds)
    t_start = time.perf_counter()
    master = _Master(nm, cfg.max_simplex_iter)
    cuts: list[CutRow] = []
    report = ClosureReport(
        instance=nm.name,
        mode="gmi",
        z_lp=np.nan,
        z_cut=None,
        z_opt=None,
        gap_closed=None,
        termination="rounds_done",
        config={**_config_dict(cfg), "rounds": rounds},
    )
    res = master.solve(cuts, time_limit=max(cfg.time_limit, 1.0))
    if res.status is Status.UNBOUNDED:
        raise ClosureError("LP relaxation is unbounded")
    if res.status is not Status.OPTIMAL:
        raise ClosureError(f"LP relaxation not solved: {res.status.value}")
    report.z_lp = nm.original_objective(res.value)
    history = [res.value]

    for _ in range(rounds):
        if time.perf_counter() - t_start > cfg.time_limit:
            report.termination = "time_limit"
            break
        slp = master.slp
        m = slp.num_rows
        xhat = _structural_point(slp, res.x)
        fr = xhat[: nm.num_integer] - np.floor(xhat[: nm.num_integer])
        targets = [
            k
            for k in range(nm.num_integer)
            if min(fr[k], 1.0 - fr[k]) >= cfg.eps
            and np.any(res.basis.basic == m + k)
        ]
        integer_cols = np.zeros(slp.num_cols, dtype=bool)
        integer_cols[m : m + nm.num_integer] = True
        added = 0
        for k in targets:
            row = tableau_row(slp, res.basis, m + k)
            try:
                full = gmi_cut(row, integer_cols, slp, eps=cfg.eps)
                cut = eliminate_slacks(full, slp)
            except (FractionalityError, DynamismError, EmptyDisjunctionError):
                continue
            if not any(same_cut(cut, c) for c in cuts):
                cuts.append(cut)
                added += 1
        report.num_cuts += added
        report.iterations.append(
            IterationLog(
                index=len(report.iterations),
                objective=nm.original_objective(res.value),
                separations=len(targets),
                cuts_found=added,
                no_cuts=len(targets) - added,
                inconclusive=0,
                reactivated=0,
                wall_time=0.0,
            )
        )
        if added == 0:
            break
        budget = cfg.time_limit - (time.perf_counter() - t_start)
        res = master.solve(cuts, time_limit=budget)
        if res.status is Status.INFEASIBLE:
            break  # valid cuts emptied the region: integer infeasible
        if res.status is not Status.OPTIMAL:
            report.termination = "time_limit" if budget <= 0 else "stalled"
            break
        history.append(res.value)

    report.z_cut = nm.original_objective(history[-1])
    if master.result.status is Status.OPTIMAL:
        report.x_final = _structural_point(master.slp, master.result.x)
    report.num_master_solves = master.solves
    report.master_pivots = master.pivots
    report.master_time = master.time
    report.cuts_active = len(cuts)
    report.cut_rows = list(cuts)
    report.total_time = time.perf_counter() - t_start
    return report


def _config_dict(cfg: ClosureConfig) -> dict:
    return {
        "mode": cfg.mode,
        "eps": cfg.eps,
        "time_limit": cfg.time_limit,
        "tail_window": cfg.tail_window,
        "tail_tol": cfg.tail_tol,
        "max_active_cuts": cfg.max_active_cuts,
        "pool_park_after": cfg.pool_park_after,
        "threads": cfg.threads,
    }
