"""Membership separation: does a relaxation point lie in the hull of an
elementary split disjunction, and if not, which cut proves it?

For a point xh in the relaxation and an integer variable k with
fractional value, the membership LP keeps the original constraint matrix
and merely changes bounds and right-hand side:

    max  y_k - ceil(xh_k) f      (f = frac(xh_k))
    s.t. A y = b f   over the slack-augmented system A = (-I A'),
         0 <= y_slacks <= A'xh - b,
         0 <= y_struct <= xh.

Its optimum is >= 0 exactly when xh lies in the disjunctive hull.  A
negative optimum yields multipliers (u, v, s, t, u0, v0) read from the
terminal tableau row of y_k, from which both the plain (intersection) cut
and the strengthened (GMI) cut are assembled.  The explicit multiplier
LP with normalization u0 + v0 = 1 is also built here, solely as a
cross-check oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .cuts import (
    CutRow,
    DynamismError,
    EmptyDisjunctionError,
    FractionalityError,
    eliminate_slacks,
    gmi_cut,
    intersection_cut,
)
from .instances import NormalizedMilp
from .simplex import BoundedLp, SimplexResult, Status
from .standard_form import Basis, StandardLp, TableauRow, tableau_row, to_standard

ACTIVITY_TOL = 1e-7
DUAL_SIGN_TOL = 1e-6
DEFAULT_EPS = 1e-4


class DualContractError(RuntimeError):
    """The terminal basis violates the dual-feasibility sign pattern."""


@dataclass
class FractionalPoint:
    """A point of the current relaxation with cached row activities."""

    x: np.ndarray
    activities: np.ndarray  # A'x - b, clipped at zero
    fracs: np.ndarray  # fractional part of each integer coordinate

    @classmethod
    def from_point(
        cls, nm: NormalizedMilp, x: np.ndarray, *, tol: float = ACTIVITY_TOL
    ) -> "FractionalPoint":
        x = np.asarray(x, dtype=float)
        act = nm.a @ x - nm.b
        worst = float(act.min(initial=0.0))
        if worst < -tol:
            raise ValueError(
                f"point violates the relaxation by {-worst:.3e} (> {tol:.0e})"
            )
        xs = np.maximum(x, 0.0)
        fr = xs[: nm.num_integer] - np.floor(xs[: nm.num_integer])
        return cls(x=xs, activities=np.maximum(act, 0.0), fracs=fr)


@dataclass
class MembershipProblem:
    """Bound-revised LP encoding of the membership question for one k."""

    lp: BoundedLp
    k: int
    f: float
    floor_k: float
    ceil_k: float
    constant: float  # -ceil(xh_k) * f, kept out of the LP objective
    point: FractionalPoint
    slp: StandardLp


@dataclass
class DualCertificate:
    """Multipliers (u, v, s, t, u0, v0) read from a terminal tableau row."""

    u: np.ndarray
    v: np.ndarray
    s: np.ndarray
    t: np.ndarray
    u0: float
    v0: float
    value: float  # membership optimum = multiplier-LP objective
    source_var: int
    floor_k: float
    ceil_k: float
    basis_fingerprint: str
    row: TableauRow
    slp_rhs: float  # rhs of the same row against the master system


@dataclass
class NoCut:
    value: float | None
    reason: str
    inconclusive: bool = False


@dataclass
class Separation:
    """Outcome of one membership separation."""

    found: bool
    value: float | None
    plain: CutRow | None = None
    strengthened: CutRow | None = None
    basis: Basis | None = None
    reason: str = ""
    inconclusive: bool = False
    pivots: int = 0


def build_membership_lp(
    nm: NormalizedMilp,
    pt: FractionalPoint,
    k: int,
    slp: StandardLp | None = None,
    *,
    eps: float = DEFAULT_EPS,
) -> MembershipProblem:
    """Set up the membership LP for integer variable k at point pt.

    Tight rows (zero activity) keep their slack fixed at 0 rather than
    being dropped, so terminal bases stay bases of the master system.
    """
    f = float(pt.fracs[k])
    if min(f, 1.0 - f) < eps:
        raise FractionalityError(
            f"x[{k}] = {pt.x[k]} is integral within eps={eps}"
        )
    if slp is None:
        slp = to_standard(nm)
    m = slp.num_rows
    n = slp.num_struct
    lower = np.zeros(m + n)
    upper = np.concatenate([pt.activities, pt.x])
    obj = np.zeros(m + n)
    obj[m + k] = 1.0
    lp = BoundedLp(
        sense="max",
        objective=obj,
        a_eq=slp.a,
        rhs=slp.b * f,
        lower=lower,
        upper=upper,
    )
    floor_k = math.floor(pt.x[k])
    return MembershipProblem(
        lp=lp,
        k=k,
        f=f,
        floor_k=floor_k,
        ceil_k=floor_k + 1.0,
        constant=-(floor_k + 1.0) * f,
        point=pt,
        slp=slp,
    )


def membership_value(
    prob: MembershipProblem,
    start: Basis | None = None,
    *,
    max_iter: int = simplex.DEFAULT_MAX_ITER,
    time_limit: float | None = None,
) -> tuple[float | None, SimplexResult]:
    """Optimum of the membership LP plus the carried constant.

    Non-negative value (within tolerance) certifies membership in the
    disjunctive hull; a negative value promises a violated cut.  A
    non-optimal simplex status yields value None (inconclusive).
    """
    result = simplex.solve(
        prob.lp, start=start, max_iter=max_iter, time_limit=time_limit
    )
    if result.status is not Status.OPTIMAL:
        return None, result
    return float(result.value + prob.constant), result


def extract_dual_certificate(
    result: SimplexResult, prob: MembershipProblem
) -> DualCertificate | NoCut:
    """Read the multipliers off the terminal basis of a solved problem."""
    if result.status is not Status.OPTIMAL:
        return NoCut(None, "separation LP not solved to optimality", True)
    return certificate_from_basis(
        result.basis, prob, value=float(result.value + prob.constant)
    )


def certificate_from_basis(
    basis: Basis, prob: MembershipProblem, value: float | None = None
) -> DualCertificate | NoCut:
    """Multipliers defined by any dual-feasible basis (case split on y_k).

    If y_k is nonbasic it must sit at its upper bound and no inequality
    can be generated.  Otherwise the tableau row of y_k against the
    master right-hand side supplies the multipliers: nonbasic-at-upper
    columns feed u (rows) and s (structurals), nonbasic-at-lower feed v
    and t.  Certificates failing u0 > 0, v0 > 0 cannot cut the point.
    """
    slp = prob.slp
    m = slp.num_rows
    col = m + prob.k
    if value is None:
        value = _basis_objective(basis, prob)
    if not np.any(basis.basic == col):
        return NoCut(value, "auxiliary variable nonbasic at its upper bound")
    row = tableau_row(slp, basis, col)
    abar = row.coeffs
    nonbasic = ~basis.in_basis_mask()
    ranged = prob.lp.upper - prob.lp.lower > 0.0

    # J+ / J- split: recorded bound statuses for ranged columns; fixed
    # columns take the side that keeps their multiplier non-negative
    # (either status is dual feasible when lower == upper)
    plus = np.where(ranged, basis.at_upper, abar < 0.0) & nonbasic
    minus = nonbasic & ~plus
    scale = max(1.0, float(np.abs(abar).max()))
    bad = (plus & ranged & (abar > DUAL_SIGN_TOL * scale)) | (
        minus & ranged & (abar < -DUAL_SIGN_TOL * scale)
    )
    if np.any(bad):
        c = int(np.argmax(bad))
        raise DualContractError(
            f"column {c} nonbasic at {'upper' if plus[c] else 'lower'} bound "
            f"with tableau entry {abar[c]:.3e}"
        )
    pos_part = np.where(plus, np.maximum(-abar, 0.0), 0.0)
    neg_part = np.where(minus, np.maximum(abar, 0.0), 0.0)
    u, s = pos_part[:m], pos_part[m:]
    v, t = neg_part[:m], neg_part[m:]

    u0 = prob.ceil_k + float((v - u) @ slp.b)
    v0 = 1.0 - u0
    if u0 <= 0.0 or v0 <= 0.0:
        return NoCut(
            value,
            "associated master basic value lies outside the unit window",
        )
    return DualCertificate(
        u=u,
        v=v,
        s=s,
        t=t,
        u0=u0,
        v0=v0,
        value=value,
        source_var=prob.k,
        floor_k=prob.floor_k,
        ceil_k=prob.ceil_k,
        basis_fingerprint=basis.fingerprint(),
        row=row,
        slp_rhs=row.rhs,
    )


def _basis_objective(basis: Basis, prob: MembershipProblem) -> float:
    """Membership objective at the basic solution defined by ``basis``."""
    from .standard_form import BasisFactors

    lp = prob.lp
    x = np.where(basis.at_upper & np.isfinite(lp.upper), lp.upper, lp.lower)
    x[basis.basic] = 0.0
    factors = BasisFactors(lp.a_eq, basis)
    x[basis.basic] = factors.solve(lp.rhs - lp.a_eq @ x)
    m = prob.slp.num_rows
    return float(x[m + prob.k] + prob.constant)


def assemble_cut(cert: DualCertificate, nm: NormalizedMilp) -> CutRow:
    """Structural-space cut defined by a certificate (unnormalized).

    alpha = A'^T u + s - u0 e_k,  beta = u b - u0 floor(xh_k); by duality
    the violation beta - alpha xh equals minus the membership value.
    Certificates outside the u0, v0 > 0 window are refused: the
    inequality they define need not be valid.
    """
    if cert.u0 <= 0.0 or cert.v0 <= 0.0:
        raise ValueError("certificate outside the unit window defines no valid cut")
    k = cert.source_var
    alpha = nm.a.T @ cert.u + cert.s
    alpha[k] -= cert.u0
    beta = float(cert.u @ nm.b) - cert.u0 * cert.floor_k
    return CutRow(
        coeffs=alpha,
        rhs=beta,
        space="structural",
        source_var=k,
        basis_fingerprint=cert.basis_fingerprint,
        strengthened=False,
    )


def separate(
    nm: NormalizedMilp,
    pt: FractionalPoint,
    k: int,
    warm: Basis | None = None,
    slp: StandardLp | None = None,
    *,
    eps: float = DEFAULT_EPS,
    max_iter: int = simplex.DEFAULT_MAX_ITER,
    time_limit: float | None = None,
) -> Separation:
    """Full separation for variable k: build, solve, extract, assemble.

    Returns a cut pair (plain intersection / strengthened GMI, both in
    structural space, max-norm normalized) when the membership value is
    <= -eps; otherwise a no-cut outcome.  The emitted cuts are read from
    the terminal tableau row of the master system; the certificate path
    is exercised separately by the verification oracles.
    """
    prob = build_membership_lp(nm, pt, k, slp=slp, eps=eps)
    value, result = membership_value(
        prob, start=warm, max_iter=max_iter, time_limit=time_limit
    )
    if value is None:
        return Separation(
            found=False,
            value=None,
            reason=f"simplex status {result.status.value}",
            inconclusive=True,
            basis=result.basis,
            pivots=result.pivots,
        )
    if value > -eps:
        return Separation(
            found=False,
            value=value,
            reason="membership value above -eps",
            basis=result.basis,
            pivots=result.pivots,
        )
    # below -eps a certificate must exist (nonbasic-at-upper and outside-
    # window bases both imply a non-negative value); extraction can still
    # decline defensively on numerical edge cases
    outcome = extract_dual_certificate(result, prob)
    if isinstance(outcome, NoCut):
        return Separation(
            found=False,
            value=value,
            reason=outcome.reason,
            inconclusive=True,
            basis=result.basis,
            pivots=result.pivots,
        )
    slp_ref = prob.slp
    row = outcome.row
    f0 = row.rhs - math.floor(row.rhs)
    if min(f0, 1.0 - f0) < 1e-12:
        return Separation(
            found=False,
            value=value,
            reason="terminal basic value numerically integral",
            inconclusive=True,
            basis=result.basis,
            pivots=result.pivots,
        )
    integer_cols = np.zeros(slp_ref.num_cols, dtype=bool)
    integer_cols[slp_ref.num_rows : slp_ref.num_rows + slp_ref.num_int] = True
    try:
        plain = eliminate_slacks(intersection_cut(row, slp_ref, eps=1e-12), slp_ref)
        strengthened = eliminate_slacks(
            gmi_cut(row, integer_cols, slp_ref, eps=1e-12), slp_ref
        )
    except (EmptyDisjunctionError, DynamismError) as exc:
        # degenerate or numerically hopeless cut; never count this as a
        # membership proof (the value *is* below -eps)
        return Separation(
            found=False,
            value=value,
            reason=f"cut rejected: {exc}",
            inconclusive=True,
            basis=result.basis,
            pivots=result.pivots,
        )
    fp = result.basis.fingerprint()
    for cut in (plain, strengthened):
        cut.source_var = k
        cut.basis_fingerprint = fp
        cut.violation = cut.violation_at(pt.x)
    return Separation(
        found=True,
        value=value,
        plain=plain,
        strengthened=strengthened,
        basis=result.basis,
        pivots=result.pivots,
    )


# ---------------------------------------------------------------------------
# Explicit multiplier-space LP (cross-check oracle only)


@dataclass
class CglpProblem:
    """Literal encoding of the normalized multiplier LP.

    Free variables (alpha, beta, u0, v0) are encoded as differences of
    non-negative pairs so the bounded simplex can solve it; ``unsplit``
    recovers the natural variables from a solution vector.
    """

    lp: BoundedLp
    n: int
    m: int
    offsets: dict = field(default_factory=dict)

    def unsplit(self, x: np.ndarray) -> dict:
        o = self.offsets
        n, m = self.n, self.m
        alpha = x[o["ap"] : o["ap"] + n] - x[o["am"] : o["am"] + n]
        beta = x[o["bp"]] - x[o["bm"]]
        return {
            "alpha": alpha,
            "beta": float(beta),
            "u": x[o["u"] : o["u"] + m],
            "v": x[o["v"] : o["v"] + m],
            "s": x[o["s"] : o["s"] + n],
            "t": x[o["t"] : o["t"] + n],
            "u0": float(x[o["u0p"]] - x[o["u0m"]]),
            "v0": float(x[o["v0p"]] - x[o["v0m"]]),
        }


def build_cglp(
    nm: NormalizedMilp,
    pt: FractionalPoint,
    pi: np.ndarray,
    pi0: float,
    *,
    eps: float = DEFAULT_EPS,
) -> CglpProblem:
    """Multiplier-space cut LP with normalization u0 + v0 = 1.

    min alpha xh - beta subject to both disjunctive sides producing
    (alpha, beta); u0 and v0 are sign-free, which keeps the LP the exact
    dual of the membership LP.  Supports general split directions pi;
    the closure loop itself only ever uses elementary ones.
    """
    pi = np.asarray(pi, dtype=float)
    n = nm.num_cols
    m = nm.num_rows
    gap = float(pi @ pt.x) - pi0
    if min(gap, 1.0 - gap) < eps:
        raise FractionalityError(
            f"pi.xh - pi0 = {gap} is not strictly inside (0, 1)"
        )

    sizes = [("ap", n), ("am", n), ("bp", 1), ("bm", 1), ("u", m), ("v", m),
             ("s", n), ("t", n), ("u0p", 1), ("u0m", 1), ("v0p", 1), ("v0m", 1)]
    offsets = {}
    pos = 0
    for name, size in sizes:
        offsets[name] = pos
        pos += size
    ncols = pos
    rows = 2 * n + 3
    a = np.zeros((rows, ncols))
    rhs = np.zeros(rows)
    eye = np.eye(n)
    # alpha - A'^T u - s + u0 pi = 0
    for i in range(n):
        a[i, offsets["ap"] + i] = 1.0
        a[i, offsets["am"] + i] = -1.0
    a[:n, offsets["u"] : offsets["u"] + m] = -nm.a.T
    a[:n, offsets["s"] : offsets["s"] + n] = -eye
    a[:n, offsets["u0p"]] = pi
    a[:n, offsets["u0m"]] = -pi
    # alpha - A'^T v - t - v0 pi = 0
    for i in range(n):
        a[n + i, offsets["ap"] + i] = 1.0
        a[n + i, offsets["am"] + i] = -1.0
    a[n : 2 * n, offsets["v"] : offsets["v"] + m] = -nm.a.T
    a[n : 2 * n, offsets["t"] : offsets["t"] + n] = -eye
    a[n : 2 * n, offsets["v0p"]] = -pi
    a[n : 2 * n, offsets["v0m"]] = pi
    # beta - u b + pi0 u0 = 0
    r = 2 * n
    a[r, offsets["bp"]] = 1.0
    a[r, offsets["bm"]] = -1.0
    a[r, offsets["u"] : offsets["u"] + m] = -nm.b
    a[r, offsets["u0p"]] = pi0
    a[r, offsets["u0m"]] = -pi0
    # beta - v b - (pi0 + 1) v0 = 0
    r = 2 * n + 1
    a[r, offsets["bp"]] = 1.0
    a[r, offsets["bm"]] = -1.0
    a[r, offsets["v"] : offsets["v"] + m] = -nm.b
    a[r, offsets["v0p"]] = -(pi0 + 1.0)
    a[r, offsets["v0m"]] = pi0 + 1.0
    # u0 + v0 = 1
    r = 2 * n + 2
    a[r, offsets["u0p"]] = 1.0
    a[r, offsets["u0m"]] = -1.0
    a[r, offsets["v0p"]] = 1.0
    a[r, offsets["v0m"]] = -1.0
    rhs[r] = 1.0

    obj = np.zeros(ncols)
    obj[offsets["ap"] : offsets["ap"] + n] = pt.x
    obj[offsets["am"] : offsets["am"] + n] = -pt.x
    obj[offsets["bp"]] = -1.0
    obj[offsets["bm"]] = 1.0

    lp = BoundedLp(
        sense="min",
        objective=obj,
        a_eq=a,
        rhs=rhs,
        lower=np.zeros(ncols),
        upper=np.full(ncols, np.inf),
    )
    return CglpProblem(lp=lp, n=n, m=m, offsets=offsets)


def solve_cglp(
    cglp: CglpProblem, *, max_iter: int = simplex.DEFAULT_MAX_ITER
) -> tuple[float | None, SimplexResult]:
    result = simplex.solve(cglp.lp, max_iter=max_iter)
    if result.status is not Status.OPTIMAL:
        return None, result
    return float(result.value), result
