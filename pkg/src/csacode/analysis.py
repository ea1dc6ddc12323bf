"""Parameter-space exploration: communication-cost frontiers and latency curves.

Enumerates every parameter tuple of a code family that fits a server count
and threshold budget, computes exact (balanced upload, download) cost pairs,
and reduces them to the lower-left convex hull.  The latency comparison
evaluates the balanced upload/download time of partitioning-only codes
against the batch-plus-partitioning construction under a per-server
computation budget; those formulas model wall-clock time and are the only
floating-point arithmetic in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import ParameterError


@dataclass(frozen=True)
class HullPoint:
    upload: Fraction    # balanced upload cost, max(U_A, U_B)
    download: Fraction
    witness: dict


@dataclass(frozen=True)
class LatencyPoint:
    k: float
    ep_lower: float
    gcsa_upper: float
    witness: dict


def enumerate_costs(family: str, servers: int, r_max: int,
                    pmn_bound: Optional[int] = None):
    """Yield (upload, download, witness) for every feasible parameter tuple."""
    if family == "ep":
        for p in range(1, r_max + 2):
            if p * 1 * 1 + p - 1 > r_max:
                break
            for m in range(1, r_max + 1):
                if p * m + p - 1 > r_max:
                    break
                for n in range(1, r_max + 1):
                    r = p * m * n + p - 1
                    if r > r_max:
                        break
                    u = max(Fraction(servers, p * m), Fraction(servers, p * n))
                    d = Fraction(r, m * n)
                    yield u, d, {"p": p, "m": m, "n": n}
    elif family == "csa":
        for ell in range(1, r_max + 1):
            if (ell + 1) * 1 - 1 > r_max:
                break
            for kc in range(1, r_max + 1):
                r = (ell + 1) * kc - 1
                if r > r_max:
                    break
                u = Fraction(servers, kc)
                d = Fraction(r, ell * kc)
                yield u, d, {"ell": ell, "kc": kc}
    elif family == "gcsa":
        for p in range(1, r_max + 2):
            if p + p - 1 > r_max:
                break
            for m in range(1, r_max + 1):
                if p * m + p - 1 > r_max:
                    break
                for n in range(1, r_max + 1):
                    rp = p * m * n
                    if rp + p - 1 > r_max:
                        break
                    if pmn_bound is not None and rp > pmn_bound:
                        break
                    for ell in range(1, r_max + 1):
                        if rp * ((ell + 1) - 1) + p - 1 > r_max:
                            break
                        for kc in range(1, r_max + 1):
                            r = rp * ((ell + 1) * kc - 1) + p - 1
                            if r > r_max:
                                break
                            u = max(Fraction(servers, kc * p * m),
                                    Fraction(servers, kc * p * n))
                            d = Fraction(r, m * n * ell * kc)
                            yield u, d, {"ell": ell, "kc": kc, "p": p,
                                         "m": m, "n": n}
    else:
        raise ParameterError(f"unknown code family {family!r}")


def _witness_key(w: dict):
    return tuple(sorted(w.items()))


def pareto_hull(family: str, servers: int, r_max: int,
                pmn_bound: Optional[int] = None) -> list[HullPoint]:
    """Lower-left convex hull of the achievable (U, D) pairs.

    Ties on U are broken toward smaller D, then lexicographic witnesses;
    dominated points are staircase-filtered before the monotone chain.
    """
    if r_max < 1 or servers <= r_max:
        raise ParameterError("need S > R_max >= 1")
    pts = sorted(
        ((u, d, w) for u, d, w in enumerate_costs(family, servers, r_max, pmn_bound)),
        key=lambda t: (t[0], t[1], _witness_key(t[2])),
    )
    if not pts:
        return []
    # strict Pareto staircase; input is sorted so equal-U runs keep the best D
    stair = []
    best = None
    for u, d, w in pts:
        if best is None or d < best:
            stair.append((u, d, w))
            best = d
    hull = []
    for pt in stair:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return [HullPoint(u, d, w) for u, d, w in hull]


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def min_max_cost(family: str, servers: int, r_max: int,
                 pmn_bound: Optional[int] = None):
    """Minimum over the family of max(U, D), with a witness tuple."""
    best = None
    best_w = None
    for u, d, w in enumerate_costs(family, servers, r_max, pmn_bound):
        cost = max(u, d)
        if best is None or cost < best or (cost == best and _witness_key(w) < _witness_key(best_w)):
            best, best_w = cost, w
    if best is None:
        raise ParameterError("empty feasible set")
    return best, best_w


# ---- latency under a per-server computation budget ----


def ep_latency_lower(job_size: int, eta: float, k: float) -> float:
    """Balanced upload/download time lower bound for partitioning-only codes.

    Continuous relaxation: the partition size m = (eta*J*K/2)^(1/3) balances
    upload and download while meeting the per-server budget; time is
    normalized by lambda^2 * T_c.
    """
    if job_size < 1 or not 0 < eta < 1 or k <= 0:
        raise ParameterError("need J >= 1, 0 < eta < 1, K > 0")
    m = (eta * job_size * k / 2.0) ** (1.0 / 3.0)
    return job_size * (2 * m**3 / eta + 2 * m / eta - 1) / m**2


def gcsa_latency_upper(job_size: int, eta: float, k: float):
    """Achievable balanced time of the batch-plus-partitioning construction.

    Integer search over the square partition size m (with p = ceil(2m/eta)
    balancing the upload sides) subject to the latency constraint
    p*m^2 >= K; below K = 1 no partitioning is needed and the pure batch
    point 2*ceil((2J-1)/eta) applies.  Returns (time, witness).
    """
    if job_size < 1 or not 0 < eta < 1:
        raise ParameterError("need J >= 1 and 0 < eta < 1")
    if k < 1:
        value = 2.0 * math.ceil((2 * job_size - 1) / eta)
        return value, {"ell": 1, "kc": job_size, "p": 1, "m": 1, "n": 1}
    best = None
    best_w = None
    hi = max(1, math.ceil((k * eta / 2.0) ** (1.0 / 3.0))) + 8
    for m in range(1, hi + 1):
        p = math.ceil(2 * m / eta)
        if p * m * m < k:
            continue
        value = ((2 * job_size - 1) * p * m * m + p - 1) / (m * m)
        if best is None or value < best:
            best = value
            best_w = {"ell": 1, "kc": job_size, "p": p, "m": m, "n": m}
    return best, best_w


def latency_curve(job_size: int, eta: float, ks) -> list[LatencyPoint]:
    out = []
    for k in ks:
        upper, witness = gcsa_latency_upper(job_size, eta, k)
        out.append(LatencyPoint(float(k), ep_latency_lower(job_size, eta, k),
                                upper, witness))
    return out
