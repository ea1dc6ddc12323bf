"""Cross-subspace alignment codes for batch matrix multiplication.

A batch of L = ell * kc products is split into ell groups of kc.  Within a
group, A matrices are combined along Cauchy terms 1/(f - alpha) with the
group's pole product as prefactor (which clears every denominator), B
matrices along bare Cauchy terms.  Each server returns the sum of its ell
coded products; desired products stay separable along the Cauchy coordinates
while all cross terms collapse into a kc - 1 dimensional Vandermonde tail,
giving recovery threshold (ell + 1) * kc - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientAnswersError, ParameterError
from .ffield import PrimeField
from .structmat import CVSpec, cv_matrix, solve_batch


@dataclass(frozen=True)
class CSAParams:
    ell: int
    kc: int
    servers: int
    poles: tuple[int, ...]    # f values, group-major, length ell * kc
    samples: tuple[int, ...]  # alpha values, one per server

    @property
    def batch_size(self) -> int:
        return self.ell * self.kc

    def pole(self, l: int, k: int) -> int:
        """f_{l,k} with 0-based group and slot indices."""
        return self.poles[l * self.kc + k]


def csa_threshold(ell: int, kc: int) -> int:
    return (ell + 1) * kc - 1


def default_points(field: PrimeField, batch: int, servers: int) -> tuple[tuple, tuple]:
    """Canonical point assignment: poles 1..L, samples L+1..L+S (mod q)."""
    poles = tuple(x % field.q for x in range(1, batch + 1))
    samples = tuple((batch + s) % field.q for s in range(1, servers + 1))
    return poles, samples


def csa_params(field: PrimeField, ell: int, kc: int, servers: int,
               poles=None, samples=None, systematic: bool = False) -> CSAParams:
    """Validated parameter bundle; default points follow the canonical layout."""
    if min(ell, kc, servers) < 1:
        raise ParameterError("ell, kc and server count must be positive")
    batch = ell * kc
    r = csa_threshold(ell, kc)
    if r > servers:
        raise ParameterError(f"R <= S violated: threshold {r} exceeds {servers} servers")
    if systematic and servers < batch:
        raise ParameterError("systematic layout needs S >= L")
    if poles is None or samples is None:
        dp, ds = default_points(field, batch, servers)
        poles = dp if poles is None else poles
        samples = ds if samples is None else samples
    poles = tuple(x % field.q for x in poles)
    samples = tuple(x % field.q for x in samples)
    if len(poles) != batch or len(samples) != servers:
        raise ParameterError("need ell*kc poles and one sample per server")
    # Systematic servers 1..L never evaluate at their alpha, so those slots
    # are exempt from the distinctness requirement (smaller fields suffice).
    used = poles + (samples[batch:] if systematic else samples)
    if len(set(used)) != len(used):
        raise ParameterError("evaluation points must be pairwise distinct")
    if not systematic and batch > field.q - servers:
        raise ParameterError("L <= q - S violated: field too small for S + L points")
    return CSAParams(ell, kc, servers, poles, samples)


def scaling_constants(field: PrimeField, params: CSAParams, power: int = 1) -> list[int]:
    """c_{l,k} = prod_{k' != k} (f_{l,k'} - f_{l,k}) ** power, group-major."""
    out = []
    for l in range(params.ell):
        for k in range(params.kc):
            c = 1
            for k2 in range(params.kc):
                if k2 != k:
                    c = c * field.sub(params.pole(l, k2), params.pole(l, k)) % field.q
            out.append(field.pow(c, power))
    return out


def csa_encode_a(field: PrimeField, batch_a, params: CSAParams, s: int) -> list[np.ndarray]:
    """A-side share for server s: ell matrices, one per group.

    Uses the expanded polynomial form prod_{k' != k}(f_{l,k'} - alpha), so no
    inversions are needed on the A side.
    """
    _check_batch(batch_a, params)
    alpha = params.samples[s]
    shares = []
    for l in range(params.ell):
        acc = np.zeros_like(batch_a[0])
        for k in range(params.kc):
            w = 1
            for k2 in range(params.kc):
                if k2 != k:
                    w = w * field.sub(params.pole(l, k2), alpha) % field.q
            acc = (acc + w * batch_a[l * params.kc + k]) % field.q
        shares.append(acc)
    return shares


def csa_encode_b(field: PrimeField, batch_b, params: CSAParams, s: int) -> list[np.ndarray]:
    """B-side share for server s: bare Cauchy combination with explicit inverses."""
    _check_batch(batch_b, params)
    alpha = params.samples[s]
    inv = field.batch_inv([field.sub(f, alpha) for f in params.poles])
    shares = []
    for l in range(params.ell):
        acc = np.zeros_like(batch_b[0])
        for k in range(params.kc):
            acc = (acc + inv[l * params.kc + k] * batch_b[l * params.kc + k]) % field.q
        shares.append(acc)
    return shares


def csa_answer(field: PrimeField, share_a, share_b, counter=None) -> np.ndarray:
    """Server-side work: Y_s = sum_l A~_l B~_l."""
    if len(share_a) != len(share_b):
        raise ParameterError("share group counts differ")
    acc = None
    for a, b in zip(share_a, share_b):
        if a.shape[1] != b.shape[0]:
            raise ParameterError("share shapes are not conformable")
        if counter is not None:
            counter.mults += a.shape[0] * a.shape[1] * b.shape[1]
        prod = field.matmul(a, b)
        acc = prod if acc is None else (acc + prod) % field.q
    return acc


def _decode_matrix(field: PrimeField, params: CSAParams, alphas) -> np.ndarray:
    r = len(alphas)
    mat = cv_matrix(field, CVSpec(params.poles, tuple(alphas)))
    consts = scaling_constants(field, params)
    for j, c in enumerate(consts):
        mat[:, j] = mat[:, j] * c % field.q
    return mat


def csa_decode(field: PrimeField, answers, params: CSAParams) -> list[np.ndarray]:
    """Recover the L products from any R = (ell+1)kc - 1 answers.

    ``answers`` is an iterable of (server_index, Y) pairs, 0-based indices.
    """
    r = csa_threshold(params.ell, params.kc)
    answers = _take_answers(answers, r, params.servers)
    alphas = [params.samples[s] for s, _ in answers]
    mat = _decode_matrix(field, params, alphas)
    stacked = np.stack([y.reshape(-1) for _, y in answers])
    sol = solve_batch(field, mat, stacked)
    shape = answers[0][1].shape
    return [sol[j].reshape(shape) for j in range(params.batch_size)]


# ---- systematic layout ----


def systematic_encode(field: PrimeField, batch_a, batch_b, params: CSAParams) -> list:
    """Shares for all S servers: the first L get the raw matrix pair,
    the rest get ordinary coded shares."""
    _check_batch(batch_a, params)
    _check_batch(batch_b, params)
    if params.servers < params.batch_size:
        raise ParameterError("systematic layout needs S >= L")
    shares = []
    for s in range(params.servers):
        if s < params.batch_size:
            shares.append(("raw", batch_a[s], batch_b[s]))
        else:
            shares.append(
                ("coded", csa_encode_a(field, batch_a, params, s),
                 csa_encode_b(field, batch_b, params, s))
            )
    return shares


def systematic_answer(field: PrimeField, share, counter=None) -> np.ndarray:
    kind = share[0]
    if kind == "raw":
        _, a, b = share
        if counter is not None:
            counter.mults += a.shape[0] * a.shape[1] * b.shape[1]
        return field.matmul(a, b)
    _, sa, sb = share
    return csa_answer(field, sa, sb, counter)


def systematic_decode(field: PrimeField, answers, params: CSAParams) -> list[np.ndarray]:
    """Decode mixed raw/coded answers; raw products are read off and their
    Cauchy contributions eliminated before the reduced solve."""
    batch = params.batch_size
    r = batch + params.kc - 1  # same value as the non-systematic threshold
    answers = _take_answers(answers, r, params.servers)
    known = {s: y for s, y in answers if s < batch}
    coded = [(s, y) for s, y in answers if s >= batch]
    if len(known) == batch:
        return [known[i] for i in range(batch)]
    consts = scaling_constants(field, params)
    unknown = [i for i in range(batch) if i not in known]
    alphas = [params.samples[s] for s, _ in coded]
    rp = len(coded)
    shape = answers[0][1].shape
    # Reduced system: Cauchy columns of the unknown products plus the full
    # Vandermonde tail; known products are subtracted from the answers.
    mat = np.zeros((rp, rp), dtype=np.int64)
    rhs = np.zeros((rp, shape[0] * shape[1]), dtype=np.int64)
    for i, (s, y) in enumerate(coded):
        alpha = params.samples[s]
        y = y.reshape(-1).copy()
        for idx, prod in known.items():
            w = consts[idx] * field.inv(field.sub(params.poles[idx], alpha)) % field.q
            y = (y - w * prod.reshape(-1)) % field.q
        rhs[i] = y
        for j, idx in enumerate(unknown):
            mat[i, j] = consts[idx] * field.inv(field.sub(params.poles[idx], alpha)) % field.q
        p = 1
        for j in range(params.kc - 1):
            mat[i, len(unknown) + j] = p
            p = p * alpha % field.q
    sol = solve_batch(field, mat, rhs)
    out = []
    for i in range(batch):
        if i in known:
            out.append(known[i])
        else:
            out.append(sol[unknown.index(i)].reshape(shape))
    return out


# ---- interference structure ----


def cross_term_matrix(field: PrimeField, params: CSAParams) -> np.ndarray:
    """Map from cross products A_{l,k} B_{l,k'} (k != k') to server answers.

    Row s, column (l, k, k') holds prod_{k'' not in {k, k'}}(f_{l,k''} - alpha_s),
    the exact coefficient those interference terms carry in Y_s.
    """
    cols = []
    for l in range(params.ell):
        for k in range(params.kc):
            for k2 in range(params.kc):
                if k2 == k:
                    continue
                col = []
                for alpha in params.samples:
                    w = 1
                    for k3 in range(params.kc):
                        if k3 != k and k3 != k2:
                            w = w * field.sub(params.pole(l, k3), alpha) % field.q
                    col.append(w)
                cols.append(col)
    if not cols:  # kc = 1 produces no cross terms at all
        return np.zeros((params.servers, 0), dtype=np.int64)
    return np.array(cols, dtype=np.int64).T


def matrix_rank(field: PrimeField, mat: np.ndarray) -> int:
    """Rank over GF(q) by row reduction."""
    m = mat.copy() % field.q
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        piv = rank
        while piv < rows and m[piv, c] == 0:
            piv += 1
        if piv == rows:
            continue
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
        m[rank] = m[rank] * field.inv(int(m[rank, c])) % field.q
        below = m[rank + 1 :, c]
        if below.size and below.any():
            m[rank + 1 :] = (m[rank + 1 :] - np.outer(below, m[rank])) % field.q
        rank += 1
        if rank == rows:
            break
    return rank


def interference_rank(field: PrimeField, params: CSAParams) -> int:
    """Dimension spanned by all cross-term coefficient vectors."""
    return matrix_rank(field, cross_term_matrix(field, params))


# ---- shared helpers ----


def _check_batch(batch, params: CSAParams):
    if len(batch) != params.batch_size:
        raise ParameterError(
            f"batch of {len(batch)} matrices does not match L = {params.batch_size}"
        )
    shapes = {m.shape for m in batch}
    if len(shapes) != 1:
        raise ParameterError("batch matrices must share one shape")
    if any(not np.issubdtype(m.dtype, np.integer) for m in batch):
        raise ParameterError("batch matrices must hold integer residues")


def _take_answers(answers, r: int, servers: int):
    answers = list(answers)
    seen = set()
    taken = []
    for s, y in answers:
        if not 0 <= s < servers:
            raise ParameterError(f"server index {s} out of range")
        if s in seen:
            raise ParameterError(f"duplicate answer from server {s}")
        seen.add(s)
        taken.append((s, y))
        if len(taken) == r:
            return taken
    raise InsufficientAnswersError(f"need {r} answers, got {len(taken)}")
