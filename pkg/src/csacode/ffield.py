"""Exact arithmetic in the prime field GF(q) plus basic polynomial utilities.

Field elements are canonical least nonnegative residues (plain Python ints);
matrices and vectors of field elements are numpy ``int64`` arrays.  The
modulus travels with a :class:`PrimeField` instance, never global state, so
several fields can coexist in one process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MODULUS = 65537


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all 64-bit inputs."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """Arithmetic context for GF(q), q prime.

    All scalar methods take and return ints in ``[0, q)``.  Matrix helpers
    operate on ``int64`` numpy arrays with entries already reduced mod q.
    """

    q: int = DEFAULT_MODULUS

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"modulus {self.q} is not prime")
        # products of two residues must fit int64 for the array paths
        if self.q >= 2**31:
            raise ValueError("modulus must be below 2**31")

    def element(self, x: int) -> int:
        return x % self.q

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def inv(self, a: int) -> int:
        """Multiplicative inverse via the extended Euclidean algorithm."""
        a %= self.q
        if a == 0:
            raise ZeroDivisionError("inverse of zero in GF(q)")
        r0, r1 = self.q, a
        t0, t1 = 0, 1
        while r1:
            k = r0 // r1
            r0, r1 = r1, r0 - k * r1
            t0, t1 = t1, t0 - k * t1
        return t0 % self.q

    def div(self, a: int, b: int) -> int:
        return a * self.inv(b) % self.q

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.q)

    def batch_inv(self, values) -> list[int]:
        """Invert a vector of nonzero elements with a single inversion
        (Montgomery's trick)."""
        values = [v % self.q for v in values]
        prefix = [1]
        for v in values:
            prefix.append(prefix[-1] * v % self.q)
        if prefix[-1] == 0:
            raise ZeroDivisionError("inverse of zero in GF(q)")
        acc = self.inv(prefix[-1])
        out = [0] * len(values)
        for i in range(len(values), 0, -1):
            out[i - 1] = prefix[i - 1] * acc % self.q
            acc = acc * values[i - 1] % self.q
        return out

    # ---- numpy matrix helpers ----

    def array(self, data) -> np.ndarray:
        return np.asarray(data, dtype=np.int64) % self.q

    def zeros(self, *shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.int64)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Exact matrix product mod q.

        int64 accumulation is safe while ``inner * (q-1)^2 < 2^62``; longer
        inner dimensions are accumulated in chunks (a single product always
        fits thanks to the q < 2^31 bound).
        """
        inner = a.shape[-1]
        bound = (self.q - 1) ** 2
        if inner * bound < 2**62:
            return (a @ b) % self.q
        step = max(1, 2**61 // bound)
        acc = np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
        for lo in range(0, inner, step):
            acc = (acc + a[..., lo : lo + step] @ b[lo : lo + step, ...]) % self.q
        return acc

    def scale(self, c: int, a: np.ndarray) -> np.ndarray:
        return (c % self.q) * a % self.q

    def rand_matrix(self, rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
        return rng.integers(0, self.q, size=(rows, cols), dtype=np.int64)


# ---- polynomials: coefficient lists, ascending degree, no trailing zeros ----


def poly_trim(coeffs: list[int]) -> list[int]:
    """Strip trailing zeros; the zero polynomial is the empty list."""
    n = len(coeffs)
    while n and coeffs[n - 1] == 0:
        n -= 1
    return list(coeffs[:n])


def poly_eval(field: PrimeField, coeffs, x: int) -> int:
    """Horner evaluation of a coefficient list at x."""
    acc = 0
    for c in reversed(list(coeffs)):
        acc = (acc * x + c) % field.q
    return acc


def poly_mul(field: PrimeField, a, b) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            out[i + j] = (out[i + j] + ca * cb) % field.q
    return poly_trim(out)


def poly_add(field: PrimeField, a, b) -> list[int]:
    out = [0] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % field.q
    return poly_trim(out)


def poly_divmod(field: PrimeField, num, den) -> tuple[list[int], list[int]]:
    """Long division over GF(q): returns (quotient, remainder)."""
    num = poly_trim(num)
    den = poly_trim(den)
    if not den:
        raise ZeroDivisionError("division by the zero polynomial")
    if len(num) < len(den):
        return [], num
    num = list(num)
    inv_lead = field.inv(den[-1])
    quot = [0] * (len(num) - len(den) + 1)
    for i in range(len(quot) - 1, -1, -1):
        c = num[i + len(den) - 1] * inv_lead % field.q
        quot[i] = c
        if c:
            for j, d in enumerate(den):
                num[i + j] = (num[i + j] - c * d) % field.q
    return poly_trim(quot), poly_trim(num)


def lagrange_interpolate(field: PrimeField, points) -> list[int]:
    """Unique polynomial of degree < len(points) through the given (x, y) pairs.

    Raises ValueError on duplicate x-values.
    """
    points = list(points)
    xs = [x % field.q for x, _ in points]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate x-values in interpolation input")
    # Z(t) = prod (t - x_j), then peel off one root per basis polynomial.
    z = [1]
    for x in xs:
        z = poly_mul(field, z, [(-x) % field.q, 1])
    out = []
    for (x, y) in points:
        x %= field.q
        basis, rem = poly_divmod(field, z, [(-x) % field.q, 1])
        if rem:
            raise AssertionError("root division left a remainder")
        denom = poly_eval(field, basis, x)
        c = (y % field.q) * field.inv(denom) % field.q
        out = poly_add(field, out, [c * b % field.q for b in basis])
    return out
