"""Cut formulas: intersection cut, GMI cut, multiplier strengthening and
slack elimination into the structural space.

Conventions: a cut is alpha x >= beta.  Cuts read from a tableau row live
over all slack+structural columns until ``eliminate_slacks`` substitutes
s_i = A'_i x - b_i; structural-space cuts are normalized to max|alpha| = 1
before they are stored or compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .standard_form import StandardLp, TableauRow

FRAC_EPS_DEFAULT = 1e-4  # disjunction usefulness threshold on f0
DYNAMISM_LIMIT = 1e8  # max|alpha| / min nonzero |alpha| rejection
ZERO_COEF_TOL = 1e-12
DUPLICATE_TOL = 1e-7


class FractionalityError(ValueError):
    """Tableau right-hand side is integral within tolerance; no cut."""


class EmptyDisjunctionError(ValueError):
    """All row coefficients vanish with a fractional rhs: the relaxation
    region is empty on the disjunction (0 >= f0(1-f0) is unsatisfiable)."""


class DynamismError(ValueError):
    """Cut coefficient spread exceeds the numerical-hygiene limit."""


@dataclass(eq=False)  # identity semantics: pools track cut objects
class CutRow:
    """Sparse-in-spirit inequality alpha x >= beta over a known column set.

    ``space`` is 'structural' (length n, pool-ready) or 'full' (length
    m+n, pre-elimination).  Provenance records where the cut came from.
    Value equality is deliberately not defined; use ``same_cut`` for the
    scale-free mathematical comparison.
    """

    coeffs: np.ndarray
    rhs: float
    space: str = "structural"
    source_var: int | None = None
    basis_fingerprint: str | None = None
    strengthened: bool = False
    violation: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if not np.any(np.abs(self.coeffs) > ZERO_COEF_TOL):
            raise EmptyDisjunctionError(
                "cut has no nonzero coefficient; the disjunction admits no "
                "relaxation point"
            )

    def normalized(self) -> "CutRow":
        scale = float(np.abs(self.coeffs).max())
        cut = CutRow.__new__(CutRow)
        cut.coeffs = self.coeffs / scale
        cut.rhs = self.rhs / scale
        cut.space = self.space
        cut.source_var = self.source_var
        cut.basis_fingerprint = self.basis_fingerprint
        cut.strengthened = self.strengthened
        cut.violation = self.violation / scale
        cut.meta = dict(self.meta)
        # the largest coefficient must be exactly +-1 after scaling
        k = int(np.argmax(np.abs(cut.coeffs)))
        cut.coeffs[k] = math.copysign(1.0, cut.coeffs[k])
        return cut

    def dynamism(self) -> float:
        mags = np.abs(self.coeffs)
        nz = mags[mags > ZERO_COEF_TOL]
        return float(nz.max() / nz.min())

    def violation_at(self, x: np.ndarray) -> float:
        return float(self.rhs - self.coeffs @ x)


def same_cut(a: CutRow, b: CutRow, tol: float = DUPLICATE_TOL) -> bool:
    """Scale-free equality: compare after max-norm normalization."""
    if a.coeffs.shape != b.coeffs.shape:
        return False
    na, nb = a.normalized(), b.normalized()
    return (
        float(np.abs(na.coeffs - nb.coeffs).max()) < tol
        and abs(na.rhs - nb.rhs) < tol
    )


def _fractional_parts(row: TableauRow, eps: float):
    f0 = row.rhs - math.floor(row.rhs)
    if min(f0, 1.0 - f0) < eps:
        raise FractionalityError(
            f"tableau rhs {row.rhs} is integral within eps={eps}"
        )
    return f0


def intersection_cut(
    row: TableauRow, lp: StandardLp, *, eps: float = FRAC_EPS_DEFAULT
) -> CutRow:
    """Simple intersection cut from the unit interval around the rhs.

    Nonbasic column j receives max{a_j (1-f0), -a_j f0}; the rhs is
    f0 (1-f0); all basic columns (including the source row's variable)
    get zero.
    """
    f0 = _fractional_parts(row, eps)
    coeffs = np.maximum(row.coeffs * (1.0 - f0), -row.coeffs * f0)
    coeffs[row.basic_col] = 0.0
    _zero_basic(coeffs, row, lp)
    return CutRow(
        coeffs=coeffs,
        rhs=f0 * (1.0 - f0),
        space="full",
        source_var=row.basic_col,
        strengthened=False,
    )


def gmi_cut(
    row: TableauRow,
    integer_cols: np.ndarray,
    lp: StandardLp,
    *,
    eps: float = FRAC_EPS_DEFAULT,
) -> CutRow:
    """Gomory mixed-integer cut from the same row.

    Integer nonbasic columns j use the rounded coefficients
    f_j (1-f0) when f_j <= f0, else (1-f_j) f0; continuous columns keep
    the intersection-cut value.  Dominates the intersection cut
    componentwise on the integer columns.
    """
    f0 = _fractional_parts(row, eps)
    coeffs = np.maximum(row.coeffs * (1.0 - f0), -row.coeffs * f0)
    mask = np.asarray(integer_cols, dtype=bool).copy()
    mask[row.basic_col] = False
    fj = row.coeffs[mask] - np.floor(row.coeffs[mask])
    coeffs[mask] = np.where(fj <= f0, fj * (1.0 - f0), (1.0 - fj) * f0)
    coeffs[row.basic_col] = 0.0
    _zero_basic(coeffs, row, lp)
    return CutRow(
        coeffs=coeffs,
        rhs=f0 * (1.0 - f0),
        space="full",
        source_var=row.basic_col,
        strengthened=True,
    )


def _zero_basic(coeffs: np.ndarray, row: TableauRow, lp: StandardLp) -> None:
    # Basic columns carry the unit pattern of (A^B)^-1 A^B; the cut is a
    # statement about nonbasic variables only.
    if row.basic_cols is not None:
        coeffs[row.basic_cols] = 0.0


def eliminate_slacks(cut: CutRow, lp: StandardLp) -> CutRow:
    """Substitute s_i = A'_i x - b_i and return a normalized structural cut.

    Already-structural cuts are returned unchanged up to normalization,
    which makes the operation idempotent.
    """
    m = lp.num_rows
    if cut.space == "structural":
        out = cut
    else:
        gamma = cut.coeffs[:m]
        alpha = cut.coeffs[m:].copy()
        alpha += gamma @ lp.structural_part()
        beta = cut.rhs + float(gamma @ lp.b)
        out = CutRow(
            coeffs=alpha,
            rhs=beta,
            space="structural",
            source_var=cut.source_var,
            basis_fingerprint=cut.basis_fingerprint,
            strengthened=cut.strengthened,
            meta=dict(cut.meta),
        )
    out = out.normalized()
    if out.dynamism() > DYNAMISM_LIMIT:
        raise DynamismError(
            f"cut dynamism {out.dynamism():.3e} exceeds {DYNAMISM_LIMIT:.0e}"
        )
    return out


def strengthen(cert, base_cut: CutRow, nm) -> CutRow:
    """Round the multipliers of integer structural columns (monoidal step).

    For integer j != k the coefficient becomes
        min{u A'^j - u0 floor(m_j),  v A'^j + v0 ceil(m_j)},
    m_j = (u A'^j - v A'^j) / (u0 + v0).  Requires u0, v0 > 0 (otherwise
    the certificate cannot cut and the base cut is returned untouched).
    ``base_cut`` must be the raw assembled structural cut, not a
    normalized copy.
    """
    if cert.u0 <= 0.0 or cert.v0 <= 0.0:
        return base_cut
    if base_cut.space != "structural":
        raise ValueError("strengthening applies to structural-space cuts")
    p = nm.num_integer
    k = cert.source_var
    coeffs = base_cut.coeffs.copy()
    ua = cert.u @ nm.a  # u A'^j for every structural j
    va = cert.v @ nm.a
    for j in range(p):
        if j == k:
            continue
        mj = (ua[j] - va[j]) / (cert.u0 + cert.v0)
        coeffs[j] = min(
            ua[j] - cert.u0 * math.floor(mj),
            va[j] + cert.v0 * math.ceil(mj),
        )
    return CutRow(
        coeffs=coeffs,
        rhs=base_cut.rhs,
        space="structural",
        source_var=k,
        basis_fingerprint=base_cut.basis_fingerprint,
        strengthened=True,
        meta=dict(base_cut.meta),
    )
