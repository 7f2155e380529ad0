"""Independent oracles for the structural guarantees of the method.

Four families of checks, each runnable over a seeded corpus of small
random instances:

* theorem3 - the cut assembled from a terminal separation certificate
  equals (after slack elimination and max-norm scaling) the plain
  intersection cut read from the same basis and tableau row;
* theorem4 - the strengthened certificate cut equals the GMI cut from
  that row;
* duality  - the membership optimum equals the optimum of the explicit
  multiplier LP with normalization u0 + v0 = 1;
* validity - no emitted cut removes any integer-feasible point, checked
  by exhaustive lattice enumeration with exact continuous completions.

The random instances use integer data and explicit box rows so both the
vertex and the lattice enumerations stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import simplex
from .closure import ClosureConfig, optimize_closure
from .cuts import CutRow, eliminate_slacks, gmi_cut, intersection_cut, strengthen
from .instances import NormalizedMilp
from .membership import (
    DualCertificate,
    FractionalPoint,
    assemble_cut,
    build_cglp,
    build_membership_lp,
    certificate_from_basis,
    membership_value,
    solve_cglp,
)
from .simplex import BoundedLp, Status
from .standard_form import Basis, to_standard

COEFF_TOL = 1e-7
PROP3_Y_TOL = 1e-8
PROP3_VAL_TOL = 1e-9
VALIDITY_TOL = 1e-7


@dataclass
class EnumerationDomain:
    """Integer ranges 0..cap per integer variable for brute force."""

    caps: list[int]
    max_points: int = 10**6

    @property
    def num_points(self) -> int:
        total = 1
        for c in self.caps:
            total *= c + 1
        return total


@dataclass
class RandomMilp:
    nm: NormalizedMilp
    box: np.ndarray  # upper bound used per variable (all finite)
    x_seed: np.ndarray  # the feasible point the rhs was built around


@dataclass
class CheckRecord:
    name: str
    passed: bool
    skipped: str | None = None
    deviation: float = 0.0
    detail: str = ""


@dataclass
class SuiteResult:
    suite: str
    cases: int = 0
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    failures: list[str] = field(default_factory=list)

    def record(self, rec: CheckRecord) -> None:
        self.cases += 1
        if rec.skipped is not None:
            self.skipped += 1
        elif rec.passed:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(f"{rec.name}: {rec.detail}")

    @property
    def ok(self) -> bool:
        return self.failed == 0


def random_milp(
    rng: np.random.Generator,
    *,
    n_range: tuple[int, int] = (2, 6),
    m_range: tuple[int, int] = (2, 6),
    coeff_bound: int = 5,
    box_range: tuple[int, int] = (1, 4),
) -> RandomMilp:
    """Small random instance with integer data, feasible and bounded.

    The rhs is built around a random interior point and explicit box rows
    -x_j >= -U_j keep the relaxation bounded, so vertex and lattice
    enumerations are exact.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    p = int(rng.integers(1, n + 1))
    a = rng.integers(-coeff_bound, coeff_bound + 1, size=(m, n)).astype(float)
    box = rng.integers(box_range[0], box_range[1] + 1, size=n).astype(float)
    x0 = rng.uniform(0.0, box)
    slack = rng.uniform(0.0, 3.0, size=m)
    b = np.floor(a @ x0 - slack)
    c = rng.integers(-coeff_bound, coeff_bound + 1, size=n).astype(float)
    if not np.any(c):
        c[int(rng.integers(0, n))] = 1.0

    bound_rows = -np.eye(n)
    a_full = np.vstack([a, bound_rows])
    b_full = np.concatenate([b, -box])
    nm = NormalizedMilp(
        name="random",
        objective=c,
        a=a_full,
        b=b_full,
        num_integer=p,
        objective_offset=0.0,
        objective_sign=1.0,
        perm=np.arange(n),
        shift=np.zeros(n),
        col_names=[f"x{j}" for j in range(n)],
        row_labels=[f"r{i}" for i in range(m)] + [f"box{j}" for j in range(n)],
    )
    return RandomMilp(nm=nm, box=box, x_seed=x0)


def _normalized_pair(cut: CutRow) -> tuple[np.ndarray, float]:
    norm = cut.normalized()
    return norm.coeffs, norm.rhs


def check_theorem3(
    nm: NormalizedMilp, basis: Basis, k: int, pt: FractionalPoint
) -> CheckRecord:
    """Certificate cut vs plain intersection cut from the same basis/row."""
    return _equivalence_check(nm, basis, k, pt, strengthened=False)


def check_theorem4(
    nm: NormalizedMilp, basis: Basis, k: int, pt: FractionalPoint
) -> CheckRecord:
    """Strengthened certificate cut vs GMI cut from the same basis/row."""
    return _equivalence_check(nm, basis, k, pt, strengthened=True)


def _equivalence_check(nm, basis, k, pt, *, strengthened: bool) -> CheckRecord:
    name = "theorem4" if strengthened else "theorem3"
    slp = to_standard(nm)
    prob = build_membership_lp(nm, pt, k, slp=slp)
    cert = certificate_from_basis(basis, prob)
    if not isinstance(cert, DualCertificate):
        return CheckRecord(name, True, skipped=cert.reason)
    row = cert.row
    f0 = row.rhs - math.floor(row.rhs)
    if min(f0, 1.0 - f0) < 1e-12:
        return CheckRecord(name, True, skipped="terminal rhs numerically integral")

    lifted = assemble_cut(cert, nm)
    if strengthened:
        lifted = strengthen(cert, lifted, nm)
        integer_cols = np.zeros(slp.num_cols, dtype=bool)
        integer_cols[slp.num_rows : slp.num_rows + slp.num_int] = True
        reference = gmi_cut(row, integer_cols, slp, eps=1e-12)
    else:
        reference = intersection_cut(row, slp, eps=1e-12)
    a1, b1 = _normalized_pair(eliminate_slacks(lifted, slp))
    a2, b2 = _normalized_pair(eliminate_slacks(reference, slp))
    dev = max(float(np.abs(a1 - a2).max()), abs(b1 - b2))
    return CheckRecord(
        name,
        passed=dev < COEFF_TOL,
        deviation=dev,
        detail=f"max coefficient deviation {dev:.3e}",
    )


def check_duality(nm: NormalizedMilp, pt: FractionalPoint, k: int) -> CheckRecord:
    """Membership optimum against the explicit multiplier-LP optimum."""
    prob = build_membership_lp(nm, pt, k)
    value, res = membership_value(prob)
    if value is None:
        return CheckRecord("duality", True, skipped=f"membership {res.status.value}")
    pi = np.zeros(nm.num_cols)
    pi[k] = 1.0
    cglp = build_cglp(nm, pt, pi, math.floor(pt.x[k]))
    cvalue, cres = solve_cglp(cglp)
    if cvalue is None:
        return CheckRecord("duality", True, skipped=f"cglp {cres.status.value}")
    dev = abs(value - cvalue)
    tol = 1e-7 * (1.0 + abs(value))
    return CheckRecord(
        "duality",
        passed=dev < tol,
        deviation=dev,
        detail=f"membership {value:.12g} vs multiplier LP {cvalue:.12g}",
    )


def check_proposition3(
    nm: NormalizedMilp, pt: FractionalPoint, k: int
) -> CheckRecord:
    """At a vertex the membership optimum is y = f x with value (f-1)f."""
    prob = build_membership_lp(nm, pt, k)
    value, res = membership_value(prob)
    if value is None:
        return CheckRecord(
            "proposition3", True, skipped=f"membership {res.status.value}"
        )
    f = pt.fracs[k]
    m = prob.slp.num_rows
    y = res.x[m:]
    ydev = float(np.abs(y - f * pt.x).max())
    vdev = abs(value - (f - 1.0) * f)
    return CheckRecord(
        "proposition3",
        passed=ydev < PROP3_Y_TOL and vdev < PROP3_VAL_TOL,
        deviation=max(ydev, vdev),
        detail=f"|y - f x| = {ydev:.3e}, |value - (f-1)f| = {vdev:.3e}",
    )


def check_validity(
    nm: NormalizedMilp,
    cuts: list[CutRow],
    dom: EnumerationDomain,
    *,
    tol: float = VALIDITY_TOL,
) -> CheckRecord:
    """No cut may remove any integer-feasible point of the instance.

    Enumerates all integer assignments inside the domain; for mixed
    instances each assignment's continuous completion polytope is probed
    per cut by minimizing the cut activity exactly (same simplex, phase-1
    feasibility included).
    """
    if not cuts:
        return CheckRecord("validity", True, detail="no cuts to check")
    p = nm.num_integer
    n = nm.num_cols
    if dom.num_points > dom.max_points:
        return CheckRecord(
            "validity", True, skipped=f"{dom.num_points} lattice points over cap"
        )
    slp = to_standard(nm)
    m = slp.num_rows
    witnesses = []
    for assignment in product(*(range(c + 1) for c in dom.caps)):
        xi = np.array(assignment, dtype=float)
        if p == n:
            if np.all(nm.a @ xi >= nm.b - 1e-9):
                for idx, cut in enumerate(cuts):
                    if cut.coeffs @ xi < cut.rhs - tol:
                        witnesses.append((assignment, idx))
            continue
        lower = np.zeros(m + n)
        upper = np.full(m + n, np.inf)
        lower[m : m + p] = xi
        upper[m : m + p] = xi
        feasible = True
        for idx, cut in enumerate(cuts):
            obj = np.concatenate([np.zeros(m), cut.coeffs])
            lp = BoundedLp(
                sense="min",
                objective=obj,
                a_eq=slp.a,
                rhs=slp.b,
                lower=lower,
                upper=upper,
            )
            res = simplex.solve(lp, start=slp.slack_basis())
            if res.status is Status.INFEASIBLE:
                feasible = False
                break
            if res.status is Status.OPTIMAL and res.value < cut.rhs - tol:
                witnesses.append((assignment, idx))
        if not feasible:
            continue
    if witnesses:
        a0, i0 = witnesses[0]
        return CheckRecord(
            "validity",
            passed=False,
            detail=(
                f"{len(witnesses)} violations; first: integer part {a0} "
                f"violates cut #{i0}"
            ),
        )
    return CheckRecord("validity", True, detail=f"{dom.num_points} points checked")


# ---------------------------------------------------------------------------
# Suite drivers


def _master_vertex(nm: NormalizedMilp, objective: np.ndarray | None = None):
    slp = to_standard(nm)
    obj = slp.c if objective is None else np.concatenate(
        [np.zeros(slp.num_rows), objective]
    )
    lp = BoundedLp(
        sense="max",
        objective=obj,
        a_eq=slp.a,
        rhs=slp.b,
        lower=np.zeros(slp.num_cols),
        upper=np.full(slp.num_cols, np.inf),
    )
    res = simplex.solve(lp, start=slp.slack_basis())
    if res.status is not Status.OPTIMAL:
        return None
    return res.x[slp.num_rows :]


def _fractional_ks(pt: FractionalPoint, eps: float = 1e-4) -> list[int]:
    return [
        k
        for k, f in enumerate(pt.fracs)
        if min(float(f), 1.0 - float(f)) >= eps
    ]


def _case_points(inst: RandomMilp, rng: np.random.Generator):
    """A vertex of the relaxation plus, when available, a non-vertex
    interior point (midpoint of two distinct vertices)."""
    nm = inst.nm
    x1 = _master_vertex(nm)
    if x1 is None:
        return []
    points = []
    try:
        points.append((FractionalPoint.from_point(nm, x1), True))
    except ValueError:
        return []
    c2 = rng.integers(-5, 6, size=nm.num_cols).astype(float)
    x2 = _master_vertex(nm, objective=c2)
    if x2 is not None and np.abs(x1 - x2).max() > 1e-7:
        mid = 0.5 * (x1 + x2)
        try:
            points.append((FractionalPoint.from_point(nm, mid), False))
        except ValueError:
            pass
    return points


def run_suite(
    suite: str,
    count: int = 100,
    seed: int = 0,
    *,
    corrupt_rhs: float = 0.0,
    max_attempts_factor: int = 50,
) -> SuiteResult:
    """Run one oracle family over ``count`` random instances.

    An instance only counts once it contributes at least one executed
    check; fully-skipped draws (no fractional coordinate, say) are
    replaced by fresh ones up to the attempt cap.  ``corrupt_rhs`` is a
    fault-injection self-test hook: the validity suite tightens every
    checked cut by that amount, so a positive value must produce
    failures.
    """
    if suite not in ("theorem3", "theorem4", "duality", "validity", "proposition3"):
        raise ValueError(f"unknown suite {suite!r}")
    rng = np.random.default_rng(seed)
    out = SuiteResult(suite=suite)
    attempts = 0
    instances_done = 0
    while instances_done < count and attempts < max_attempts_factor * count:
        attempts += 1
        inst = random_milp(rng)
        recs = _run_instance(suite, inst, rng, corrupt_rhs)
        executed = [r for r in recs if r.skipped is None]
        if not executed:
            continue
        instances_done += 1
        for rec in recs:
            out.record(rec)
    return out


def _run_instance(suite: str, inst: RandomMilp, rng, corrupt_rhs: float = 0.0):
    nm = inst.nm
    if suite == "validity":
        return _validity_case(inst, corrupt_rhs)
    recs: list[CheckRecord] = []
    for pt, is_vertex in _case_points(inst, rng):
        ks = _fractional_ks(pt)
        for k in ks[:2]:
            if suite == "duality":
                recs.append(check_duality(nm, pt, k))
                continue
            if suite == "proposition3":
                if is_vertex:
                    recs.append(check_proposition3(nm, pt, k))
                continue
            prob = build_membership_lp(nm, pt, k)
            _, res = membership_value(prob)
            if res.status is not Status.OPTIMAL:
                continue
            if suite == "theorem3":
                recs.append(check_theorem3(nm, res.basis, k, pt))
            else:
                recs.append(check_theorem4(nm, res.basis, k, pt))
    return recs


def _validity_case(inst: RandomMilp, corrupt_rhs: float = 0.0) -> list[CheckRecord]:
    nm = inst.nm
    dom = EnumerationDomain(caps=[int(b) for b in inst.box[: nm.num_integer]])
    if dom.num_points > dom.max_points:
        return [CheckRecord("validity", True, skipped="domain over cap")]
    cuts: list[CutRow] = []
    for mode in ("pe", "pestar"):
        try:
            report = optimize_closure(nm, ClosureConfig(mode=mode, time_limit=10.0))
        except Exception as exc:  # infeasible relaxations are legitimate draws
            return [CheckRecord("validity", True, skipped=f"closure: {exc}")]
        cuts.extend(report.cut_rows)
    if not cuts:
        return [CheckRecord("validity", True, skipped="no cuts emitted")]
    if corrupt_rhs:
        cuts = [
            CutRow(
                coeffs=c.coeffs.copy(),
                rhs=c.rhs + corrupt_rhs,
                space=c.space,
                source_var=c.source_var,
                strengthened=c.strengthened,
            )
            for c in cuts
        ]
    return [check_validity(nm, cuts, dom)]
