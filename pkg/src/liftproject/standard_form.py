"""Slack-augmented standard form and basis algebra.

The canonical model A'x >= b, x >= 0 becomes Ax = b with A = (-I A'):
slack variables occupy columns 0..m-1, structural variables columns
m..m+n-1, and the integer structural variables are the first p of those.
Both the master LP and the membership separation LP share this matrix,
which is what lets a terminal separation basis be reinterpreted as a basis
of the master system.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .instances import NormalizedMilp

SINGULAR_TOL = 1e-10


class SingularBasisError(ValueError):
    pass


@dataclass
class Basis:
    """Ordered basic columns plus bound statuses of the nonbasic ones.

    ``basic[r]`` is the column basic in row r.  ``at_upper[j]`` only
    carries meaning while j is nonbasic (it defines the J+ / J- split).
    """

    basic: np.ndarray
    at_upper: np.ndarray

    def __post_init__(self):
        self.basic = np.asarray(self.basic, dtype=int)
        self.at_upper = np.asarray(self.at_upper, dtype=bool)

    @property
    def num_cols(self) -> int:
        return self.at_upper.shape[0]

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.at_upper.copy())

    def in_basis_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_cols, dtype=bool)
        mask[self.basic] = True
        return mask

    def position_of(self, col: int) -> int:
        pos = np.nonzero(self.basic == col)[0]
        if pos.size == 0:
            raise ValueError(f"column {col} is not basic")
        return int(pos[0])

    def fingerprint(self) -> str:
        h = hashlib.sha1()
        h.update(np.sort(self.basic).astype(np.int64).tobytes())
        nonbasic = np.setdiff1d(np.arange(self.num_cols), self.basic)
        h.update(self.at_upper[nonbasic].tobytes())
        return h.hexdigest()[:16]


@dataclass
class StandardLp:
    """The system Ax = b with A = (-I A') and c zero on slacks."""

    a: np.ndarray  # (m, m+n)
    b: np.ndarray  # (m,)
    c: np.ndarray  # (m+n,)
    num_struct: int
    num_int: int

    @property
    def num_rows(self) -> int:
        return self.a.shape[0]

    @property
    def num_cols(self) -> int:
        return self.a.shape[1]

    def struct_slice(self) -> slice:
        return slice(self.num_rows, self.num_rows + self.num_struct)

    def structural_part(self) -> np.ndarray:
        """A' as stored inside A (rows may include appended cut rows)."""
        return self.a[:, self.struct_slice()]

    def row_fingerprint(self) -> str:
        h = hashlib.sha1()
        h.update(self.structural_part().tobytes())
        h.update(self.b.tobytes())
        return h.hexdigest()[:16]

    def slack_basis(self) -> Basis:
        return Basis(np.arange(self.num_rows), np.zeros(self.num_cols, dtype=bool))


@dataclass
class TableauRow:
    """One row of (A^B)^-1 A together with its right-hand side."""

    basic_col: int
    position: int
    coeffs: np.ndarray  # full length m+n; basic columns are unit pattern
    rhs: float
    basic_cols: np.ndarray | None = None


def to_standard(nm: NormalizedMilp, extra_cuts=()) -> StandardLp:
    """Slack-augment A'x >= b (plus optional cut rows alpha x >= beta).

    Cut rows are appended after the original rows, before slack
    augmentation; separation always uses the cut-free system so that
    generated cuts stay rank 1.
    """
    n = nm.num_cols
    blocks = [nm.a]
    rhs = [nm.b]
    for cut in extra_cuts:
        coeffs = np.asarray(cut.coeffs, dtype=float)
        if coeffs.shape[0] != n:
            raise ValueError("cut is not in structural space")
        blocks.append(coeffs.reshape(1, n))
        rhs.append(np.array([cut.rhs]))
    a_struct = np.vstack(blocks)
    b = np.concatenate(rhs)
    m = a_struct.shape[0]
    a = np.hstack([-np.eye(m), a_struct])
    c = np.concatenate([np.zeros(m), nm.objective])
    return StandardLp(a=a, b=b, c=c, num_struct=n, num_int=nm.num_integer)


class BasisFactors:
    """LU factors of A^B with an explicit singularity check."""

    def __init__(self, a: np.ndarray, basis: Basis):
        m = a.shape[0]
        if basis.basic.shape[0] != m:
            raise ValueError("basis size does not match row count")
        bmat = a[:, basis.basic]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(bmat, check_finite=False)
        diag = np.abs(np.diag(lu))
        scale = max(1.0, float(np.abs(bmat).max(initial=0.0)))
        if diag.size and diag.min() < SINGULAR_TOL * scale:
            raise SingularBasisError("basis matrix is numerically singular")
        self._lu = (lu, piv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, rhs, check_finite=False)

    def solve_transpose(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, rhs, trans=1, check_finite=False)


def tableau_row(lp: StandardLp, basis: Basis, basic_col: int) -> TableauRow:
    """Row of (A^B)^-1 A for ``basic_col``, with rhs from (A^B)^-1 b."""
    pos = basis.position_of(basic_col)
    factors = BasisFactors(lp.a, basis)
    e = np.zeros(lp.num_rows)
    e[pos] = 1.0
    w = factors.solve_transpose(e)
    coeffs = w @ lp.a
    rhs = float(w @ lp.b)
    return TableauRow(
        basic_col=basic_col,
        position=pos,
        coeffs=coeffs,
        rhs=rhs,
        basic_cols=basis.basic.copy(),
    )


def basic_point(lp: StandardLp, basis: Basis) -> np.ndarray:
    """Primal basic solution of the standard system, nonbasics at zero.

    StandardLp carries only the implicit bounds x >= 0, so nonbasic
    variables always sit at 0 regardless of statuses recorded for other
    bound systems sharing this basis.
    """
    factors = BasisFactors(lp.a, basis)
    x = np.zeros(lp.num_cols)
    x[basis.basic] = factors.solve(lp.b)
    return x
