"""Structured matrices behind every decoder, and exact solvers for them.

Builds Cauchy-Vandermonde matrices (left block of Cauchy entries
``1/(f_j - a_i)``, right block of Vandermonde powers), their confluent
generalization with pole multiplicities, and lower triangular Toeplitz
matrices.  Systems are solved by dense Gaussian elimination over GF(q) with
first-nonzero pivoting; a Berlekamp-Welch decoder handles the Byzantine
setting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecodingFailureError, ParameterError, SingularMatrixError
from .ffield import PrimeField, poly_divmod, poly_eval, poly_trim

# Test instrumentation: number of solve_batch invocations since import.
solve_calls = 0


@dataclass(frozen=True)
class CVSpec:
    """Points defining a (confluent) Cauchy-Vandermonde system.

    ``poles`` are the f values (flattened, length L), ``samples`` the alpha
    values (length R), ``order`` the pole multiplicity (order 1 is the plain
    Cauchy-Vandermonde case).
    """

    poles: tuple[int, ...]
    samples: tuple[int, ...]
    order: int = 1

    def __post_init__(self):
        pts = list(self.poles) + list(self.samples)
        if len(set(pts)) != len(pts):
            raise ParameterError("poles and samples must be pairwise distinct")
        if self.order < 1:
            raise ParameterError("confluence order must be positive")
        if len(self.samples) < self.order * len(self.poles):
            raise ParameterError(
                "need R >= order * L so the Vandermonde tail is nonnegative"
            )


def cv_matrix(field: PrimeField, spec: CVSpec) -> np.ndarray:
    """R x R Cauchy-Vandermonde matrix for an order-1 spec."""
    if spec.order != 1:
        raise ParameterError("cv_matrix requires confluence order 1")
    return confluent_cv_matrix(field, spec)


def confluent_cv_matrix(field: PrimeField, spec: CVSpec) -> np.ndarray:
    """R x R confluent Cauchy-Vandermonde matrix.

    For each pole f the columns run 1/(f-a)^order down to 1/(f-a), followed
    by the Vandermonde tail 1, a, ..., a^(R - order*L - 1).
    """
    R = len(spec.samples)
    L = len(spec.poles)
    r1 = spec.order
    m = np.zeros((R, R), dtype=np.int64)
    for i, a in enumerate(spec.samples):
        col = 0
        for f in spec.poles:
            c = field.inv(field.sub(f, a))
            p = field.pow(c, r1)
            for j in range(r1):
                m[i, col + j] = p
                # step down one multiplicity: (f-a)^-(r1-j) -> (f-a)^-(r1-j-1)
                p = p * field.sub(f, a) % field.q
            col += r1
        p = 1
        for j in range(R - r1 * L):
            m[i, col + j] = p
            p = p * a % field.q
    return m


def lt_toeplitz(field: PrimeField, column) -> np.ndarray:
    """n x n lower triangular Toeplitz matrix with the given first column."""
    c = [x % field.q for x in column]
    n = len(c)
    m = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1):
            m[i, j] = c[i - j]
    return m


def solve_batch(field: PrimeField, mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``mat @ x = rhs`` exactly over GF(q) for every rhs column.

    One forward elimination is shared across the whole batch.  Pivoting is
    first-nonzero in each column; a column with no pivot raises
    SingularMatrixError carrying the column index.
    """
    global solve_calls
    solve_calls += 1
    q = field.q
    n = mat.shape[0]
    if mat.shape[0] != mat.shape[1]:
        raise ParameterError("solve_batch requires a square matrix")
    rhs2d = rhs.reshape(n, -1)
    aug = np.concatenate([mat % q, rhs2d % q], axis=1).astype(np.int64)
    for col in range(n):
        piv = col
        while piv < n and aug[piv, col] == 0:
            piv += 1
        if piv == n:
            raise SingularMatrixError(col)
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] * field.inv(int(aug[col, col])) % q
        below = aug[col + 1 :, col]
        if below.size and below.any():
            aug[col + 1 :] = (aug[col + 1 :] - np.outer(below, aug[col])) % q
    for col in range(n - 1, 0, -1):
        above = aug[:col, col]
        if above.any():
            aug[:col] = (aug[:col] - np.outer(above, aug[col])) % q
    return aug[:, n:].reshape(rhs.shape)


def solve_any(field: PrimeField, mat: np.ndarray, rhs: np.ndarray):
    """Any solution of a (possibly rectangular) consistent system, or None.

    Free variables are set to zero.  Used by the Berlekamp-Welch decoder,
    whose linear system is underdetermined when fewer errors occurred than
    budgeted.
    """
    q = field.q
    rows, cols = mat.shape
    aug = np.concatenate([mat % q, rhs.reshape(rows, 1) % q], axis=1).astype(np.int64)
    pivots = []
    r = 0
    for c in range(cols):
        piv = r
        while piv < rows and aug[piv, c] == 0:
            piv += 1
        if piv == rows:
            continue
        if piv != r:
            aug[[r, piv]] = aug[[piv, r]]
        aug[r] = aug[r] * field.inv(int(aug[r, c])) % q
        others = aug[:, c].copy()
        others[r] = 0
        aug = (aug - np.outer(others, aug[r])) % q
        pivots.append(c)
        r += 1
        if r == rows:
            break
    # Rows of the form 0 = nonzero mean the system is inconsistent.
    for i in range(r, rows):
        if aug[i, cols] != 0:
            return None
    x = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(pivots):
        x[c] = aug[i, cols]
    return x


def rs_error_correct(field: PrimeField, samples, values, degree_bound: int,
                     max_errors: int) -> tuple[list[int], list[int]]:
    """Correct up to ``max_errors`` corrupted evaluations of a polynomial.

    The clean values are assumed to lie on a polynomial of degree <
    ``degree_bound`` at the given sample points, with at least
    ``degree_bound + 2*max_errors`` observations (an MDS distance argument
    makes the corrected codeword unique).  Returns the corrected value list
    and the positions (indices into ``samples``) that were repaired, using
    Berlekamp-Welch rational interpolation.
    """
    xs = [x % field.q for x in samples]
    ys = [y % field.q for y in values]
    n = len(xs)
    d = degree_bound
    b = max_errors
    if len(set(xs)) != n:
        raise ParameterError("sample points must be distinct")
    if n < d + 2 * b:
        raise ParameterError("need at least degree_bound + 2*max_errors points")
    if b == 0:
        return list(ys), []
    # Unknowns: N(x) with deg < d + b, and monic E(x) with deg = b.
    # Constraints: N(x_i) = y_i * E(x_i) for every i.
    q = field.q
    num_n = d + b
    mat = np.zeros((n, num_n + b), dtype=np.int64)
    rhs = np.zeros(n, dtype=np.int64)
    for i, (x, y) in enumerate(zip(xs, ys)):
        p = 1
        for j in range(num_n):
            mat[i, j] = p
            p = p * x % q
        p = 1
        for j in range(b):
            mat[i, num_n + j] = (-y * p) % q
            p = p * x % q
        rhs[i] = y * p % q  # y * x^b from the monic leading term
    sol = solve_any(field, mat, rhs)
    if sol is None:
        raise DecodingFailureError("error locator system is inconsistent")
    n_poly = poly_trim([int(c) for c in sol[:num_n]])
    e_poly = poly_trim([int(c) for c in sol[num_n:]] + [1])
    quot, rem = poly_divmod(field, n_poly, e_poly)
    if rem:
        raise DecodingFailureError("more errors than the correction budget")
    corrected = [poly_eval(field, quot, x) for x in xs]
    positions = [i for i in range(n) if corrected[i] != ys[i]]
    if len(positions) > b:
        raise DecodingFailureError("more errors than the correction budget")
    return corrected, positions
