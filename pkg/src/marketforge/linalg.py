"""Small dense linear algebra over exact rationals or floats.

Everything is elimination based so that exact mode is bit-exact with
Fractions.  Rank decisions in float mode use a relative pivot threshold
(tolerance times the largest entry of the matrix being reduced); in exact
mode a pivot is zero only when it is literally zero.

Matrices are lists of row lists, vectors are flat lists.  Functions never
mutate their arguments.
"""

from __future__ import annotations

from .arith import Arithmetic, Num


class LinalgError(ValueError):
    pass


def zeros(n: int) -> list[Num]:
    return [0] * n


def identity(n: int) -> list[list[Num]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def dot(u, v) -> Num:
    if len(u) != len(v):
        raise LinalgError("dot: length mismatch")
    return sum((a * b for a, b in zip(u, v)), 0)


def outer(u, v) -> list[list[Num]]:
    return [[a * b for b in v] for a in u]


def transpose(A) -> list[list[Num]]:
    return [list(col) for col in zip(*A)] if A else []


def mat_vec(A, v) -> list[Num]:
    return [dot(row, v) for row in A]


def vec_mat(v, A) -> list[Num]:
    """Row vector times matrix."""
    return mat_vec(transpose(A), v)


def mat_mul(A, B) -> list[list[Num]]:
    Bt = transpose(B)
    return [[dot(row, col) for col in Bt] for row in A]


def mat_add(A, B, sign: int = 1) -> list[list[Num]]:
    return [[a + sign * b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, c: Num) -> list[list[Num]]:
    return [[c * x for x in row] for row in A]


def vec_add(u, v, sign: int = 1) -> list[Num]:
    return [a + sign * b for a, b in zip(u, v)]


def vec_scale(u, c: Num) -> list[Num]:
    return [c * x for x in u]


def matrix_scale(A) -> Num:
    """Magnitude reference for pivot thresholds: the largest absolute entry."""
    entries = [abs(x) for row in A for x in row]
    return max(entries) if entries else 0


def vec_is_zero(v, arith: Arithmetic, scale: Num = 1) -> bool:
    return all(arith.negligible(x, scale) for x in v)


def is_symmetric(A, arith: Arithmetic) -> bool:
    n = len(A)
    if any(len(row) != n for row in A):
        return False
    scale = matrix_scale(A)
    return all(
        arith.negligible(A[i][j] - A[j][i], scale)
        for i in range(n)
        for j in range(i + 1, n)
    )


def rref(A, arith: Arithmetic, scale: Num | None = None):
    """Reduced row echelon form.  Returns (R, pivot_columns).

    Partial pivoting by largest absolute value; deterministic in both modes.
    """
    R = [list(row) for row in A]
    m = len(R)
    n = len(R[0]) if m else 0
    if scale is None:
        scale = matrix_scale(R)
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        best = max(range(r, m), key=lambda i: abs(R[i][c]))
        if arith.negligible(R[best][c], scale):
            continue
        R[r], R[best] = R[best], R[r]
        piv = R[r][c]
        R[r] = [x / piv for x in R[r]]
        for i in range(m):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
    return R, pivots


def rank(A, arith: Arithmetic) -> int:
    if not A or not A[0]:
        return 0
    _, pivots = rref(A, arith)
    return len(pivots)


def null_space(A, arith: Arithmetic) -> list[list[Num]]:
    """Basis of the solution space of A x = 0, one vector per free column."""
    if not A:
        return []
    n = len(A[0])
    R, pivots = rref(A, arith)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = zeros(n)
        v[f] = 1
        for row_idx, p in enumerate(pivots):
            v[p] = -R[row_idx][f]
        basis.append(v)
    return basis


def independent_columns(A, arith: Arithmetic) -> list[int]:
    """Indices of a maximal independent set of columns (RREF pivot columns)."""
    if not A or not A[0]:
        return []
    _, pivots = rref(A, arith)
    return pivots


def solve_pd(M, b, arith: Arithmetic) -> list[Num]:
    """Solve M x = b for symmetric positive definite M (raises if singular)."""
    n = len(M)
    R, pivots = rref([list(row) + [rhs] for row, rhs in zip(M, b)], arith)
    if len(pivots) != n or pivots != list(range(n)):
        raise LinalgError("solve_pd: matrix is singular")
    return [R[i][n] for i in range(n)]


def project_columns(A, v, arith: Arithmetic) -> list[Num]:
    """Orthogonal projection of v onto the column space of A."""
    cols = independent_columns(A, arith)
    if not cols:
        return zeros(len(v))
    C = [[row[c] for c in cols] for row in A]
    Ct = transpose(C)
    G = mat_mul(Ct, C)
    y = solve_pd(G, mat_vec(Ct, v), arith)
    return mat_vec(C, y)


def lstsq_min_norm(A, b, arith: Arithmetic):
    """Minimum-norm least-squares solution of A x = b.

    Returns (x, residual) with residual = b - A x.  In exact mode this is
    the Moore-Penrose solution: x lies in the row space of A and the
    residual is orthogonal to the column space.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    if len(b) != m:
        raise LinalgError("lstsq_min_norm: shape mismatch")
    if n == 0:
        return [], list(b)
    At = transpose(A)
    M = mat_mul(At, A)  # normal equations keep one code path for all shapes
    c = mat_vec(At, b)
    scale = matrix_scale(M)
    R, pivots = rref([list(row) + [rhs] for row, rhs in zip(M, c)], arith, scale=scale)
    x0 = zeros(n)
    for row_idx, p in enumerate(pivots):
        if p < n:
            x0[p] = R[row_idx][n]
    # Minimum norm: remove the null-space component of the particular solution.
    N = null_space(M, arith)
    if N and not vec_is_zero(x0, arith):
        Nt_cols = N  # each entry is one basis vector
        G = [[dot(u, v) for v in Nt_cols] for u in Nt_cols]
        rhs = [dot(u, x0) for u in Nt_cols]
        coeffs = solve_pd(G, rhs, arith)
        for u, a in zip(Nt_cols, coeffs):
            x0 = vec_add(x0, vec_scale(u, a), sign=-1)
    residual = vec_add(b, mat_vec(A, x0), sign=-1)
    return x0, residual


def is_psd(A, arith: Arithmetic) -> bool:
    """Positive semidefiniteness of a symmetric matrix via pivoted elimination."""
    n = len(A)
    M = [list(row) for row in A]
    scale = matrix_scale(M)
    order = list(range(n))
    for k in range(n):
        p = max(range(k, n), key=lambda i: M[i][i])
        if M[p][p] < 0 and not arith.negligible(M[p][p], scale):
            return False
        if arith.negligible(M[p][p], scale):
            # Largest remaining diagonal is zero: the whole block must vanish.
            for i in range(k, n):
                for j in range(k, n):
                    if not arith.negligible(M[i][j], scale):
                        return False
            return True
        if p != k:
            M[k], M[p] = M[p], M[k]
            for row in M:
                row[k], row[p] = row[p], row[k]
            order[k], order[p] = order[p], order[k]
        piv = M[k][k]
        for i in range(k + 1, n):
            if M[i][k] != 0:
                f = M[i][k] / piv
                for j in range(k, n):
                    M[i][j] -= f * M[k][j]
    return True


def pinv_psd(G, arith: Arithmetic) -> list[list[Num]]:
    """Moore-Penrose inverse of a symmetric PSD matrix.

    Built from a column-space basis B as B (B' G B)^-1 B', which satisfies
    all four Penrose identities for symmetric G.
    """
    n = len(G)
    cols = independent_columns(G, arith)
    if not cols:
        return [[0] * n for _ in range(n)]
    B = [[row[c] for c in cols] for row in G]
    Bt = transpose(B)
    H = mat_mul(Bt, mat_mul(G, B))
    Hinv_cols = [solve_pd(H, [1 if i == j else 0 for i in range(len(cols))], arith)
                 for j in range(len(cols))]
    Hinv = transpose(Hinv_cols)
    return mat_mul(B, mat_mul(Hinv, Bt))
