"""
Exact linear algebra over the rationals.
"""

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

Matrix = List[List[Fraction]]


def to_fraction_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def rational_ldl(matrix: Sequence[Sequence[Fraction]]) -> Optional[Tuple[Matrix, List[Fraction]]]:
    """LDL^T factorization of a symmetric matrix, or ``None`` if it is not PSD.

    Zero pivots are allowed as long as the rest of their column vanishes,
    so singular positive semidefinite matrices factor as well.
    """
    n = len(matrix)
    a = to_fraction_matrix(matrix)
    for i in range(n):
        if len(a[i]) != n:
            raise ValueError("matrix must be square")
        for j in range(i):
            if a[i][j] != a[j][i]:
                raise ValueError("matrix must be symmetric")
    lower: Matrix = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    diag: List[Fraction] = [Fraction(0)] * n
    for k in range(n):
        d = a[k][k] - sum(lower[k][j] ** 2 * diag[j] for j in range(k))
        if d < 0:
            return None
        diag[k] = d
        for i in range(k + 1, n):
            s = a[i][k] - sum(lower[i][j] * lower[k][j] * diag[j] for j in range(k))
            if d == 0:
                if s != 0:
                    return None
                lower[i][k] = Fraction(0)
            else:
                lower[i][k] = s / d
    return lower, diag


def is_psd_exact(matrix: Sequence[Sequence[Fraction]]) -> bool:
    return rational_ldl(matrix) is not None


def solve_rational(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> Optional[List[Fraction]]:
    """One exact solution of ``a x = b``, or ``None`` when inconsistent.

    Free variables are set to zero.
    """
    rows = len(a)
    cols = len(a[0]) if rows else 0
    m = [[Fraction(x) for x in row] + [Fraction(rhs)] for row, rhs in zip(a, b)]
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        lead = m[r][c]
        m[r] = [x / lead for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                factor = m[i][c]
                m[i] = [x - factor * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    for i in range(r, rows):
        if m[i][cols] != 0:
            return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = m[i][cols]
    return x


def min_norm_correction(a: Sequence[Sequence[Fraction]], r: Sequence[Fraction]) -> Optional[List[Fraction]]:
    """Smallest ``delta`` with ``a delta = r``, computed as ``a^T z`` with ``a a^T z = r``."""
    rows = len(a)
    cols = len(a[0]) if rows else 0
    gram = [
        [sum((a[i][k] * a[j][k] for k in range(cols) if a[i][k] and a[j][k]), Fraction(0)) for j in range(rows)]
        for i in range(rows)
    ]
    z = solve_rational(gram, r)
    if z is None:
        return None
    return [sum((a[i][k] * z[i] for i in range(rows) if a[i][k] and z[i]), Fraction(0)) for k in range(cols)]
