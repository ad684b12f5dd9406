"""Small dense exact linear algebra over the rationals.

Matrices are lists of rows of Fractions.  Sizes here are desk scale (tens of
rows), so plain Gaussian elimination is fine.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .reals import CertifiedReal

Matrix = list[list[Fraction]]

_ZERO = Fraction(0)


def zeros(rows: int, cols: int) -> Matrix:
    return [[_ZERO] * cols for _ in range(rows)]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def transpose(m: Matrix) -> Matrix:
    return [list(col) for col in zip(*m)] if m else []


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), _ZERO) for col in bt] for row in a]


def rref(m: Sequence[Sequence[Fraction]]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and the list of pivot columns."""
    a = [list(map(Fraction, row)) for row in m]
    if not a:
        return a, []
    rows, cols = len(a), len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a, pivots


def rank(m: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(m)[1])


def independent_rows(m: Sequence[Sequence[Fraction]]) -> list[int]:
    """Indices of a maximal linearly independent subset of rows (greedy, in order)."""
    chosen: list[int] = []
    basis: Matrix = []
    for i, row in enumerate(m):
        trial = basis + [list(row)]
        if rank(trial) == len(trial):
            basis = trial
            chosen.append(i)
    return chosen


def solve(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction] | None:
    """One exact solution of ``a @ x = b`` (free variables set to 0), or None."""
    if not a:
        return [] if all(v == 0 for v in b) else None
    cols = len(a[0])
    aug = [list(row) + [Fraction(v)] for row, v in zip(a, b)]
    red, piv = rref(aug)
    if cols in piv:
        return None
    x = [_ZERO] * cols
    for r, c in enumerate(piv):
        x[c] = red[r][cols]
    return x


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(row) + e for row, e in zip(a, identity(n))]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in red]


def det(a: Matrix) -> Fraction:
    m = [list(row) for row in a]
    n = len(m)
    out = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return _ZERO
        if p != c:
            m[c], m[p] = m[p], m[c]
            out = -out
        out *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return out


def psd_status(a: Matrix) -> str:
    """Classify a symmetric rational matrix: ``"pd"``, ``"psd_singular"`` or ``"not_psd"``.

    Symmetric elimination with positive diagonal pivots; an exhausted
    diagonal is PSD only if the whole remaining block vanishes.
    """
    m = [list(row) for row in a]
    live = list(range(len(m)))
    while live:
        diag = [(m[i][i], i) for i in live]
        if any(d < 0 for d, _ in diag):
            return "not_psd"
        d, p = max(diag)
        if d == 0:
            if any(m[i][j] != 0 for i in live for j in live):
                return "not_psd"
            return "psd_singular"
        live.remove(p)
        row_p = m[p]
        for i in live:
            f = m[i][p] / d
            if f != 0:
                row_i = m[i]
                for j in live:
                    row_i[j] -= f * row_p[j]
    return "pd"


def _shifted(g: Matrix, t: Fraction) -> Matrix:
    n = len(g)
    return [[(t if i == j else _ZERO) - g[i][j] for j in range(n)] for i in range(n)]


def certified_lambda_max(g: Matrix, rel_width: float = 1e-12) -> CertifiedReal:
    """Largest eigenvalue of a symmetric PSD rational matrix, as ``sqrt``-ready enclosure.

    The returned :class:`CertifiedReal` encloses ``sqrt(lambda_max)``; its
    ``sq_lo``/``sq_hi`` bound ``lambda_max`` itself.  The lower end is an exact
    Rayleigh quotient, the upper end is proven by an exact PSD test of
    ``U*I - g``.  Exact when the float estimate rounds to the true value.
    """
    n = len(g)
    if n == 0 or all(x == 0 for row in g for x in row):
        return CertifiedReal.ZERO
    if n == 1:
        return CertifiedReal.from_square(g[0][0])
    gf = np.array([[float(x) for x in row] for row in g])
    w, v = np.linalg.eigh(gf)
    mu = float(w[-1])
    for cand in (Fraction(round(mu)), Fraction(mu).limit_denominator(10**6)):
        if cand > 0 and psd_status(_shifted(g, cand)) == "psd_singular":
            return CertifiedReal.from_square(cand)
    vec = [Fraction(float(x)) for x in v[:, -1]]
    gv = [sum((gij * vj for gij, vj in zip(row, vec)), _ZERO) for row in g]
    num = sum((a * b for a, b in zip(vec, gv)), _ZERO)
    den = sum((a * a for a in vec), _ZERO)
    lower = num / den if den else _ZERO
    slack = max(abs(mu), 1e-300) * rel_width
    for _ in range(60):
        upper = Fraction(mu) + Fraction(slack)
        if psd_status(_shifted(g, upper)) == "pd":
            return CertifiedReal(max(lower, _ZERO), upper)
        slack *= 4
    raise ArithmeticError("could not certify the largest eigenvalue")
