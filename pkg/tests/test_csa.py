import itertools
from fractions import Fraction

import numpy as np
import pytest

from csacode import harness, structmat
from csacode.csa import (csa_answer, csa_decode, csa_encode_a,
                         csa_encode_b, csa_params, csa_threshold,
                         interference_rank, scaling_constants,
                         systematic_answer, systematic_decode,
                         systematic_encode)
from csacode.errors import InsufficientAnswersError, ParameterError
from csacode.ffield import PrimeField

FIELD = PrimeField(65537)


def make_instance(rng, ell, kc, servers, rows=2, inner=2, cols=2):
    params = csa_params(FIELD, ell, kc, servers)
    batch = params.batch_size
    aa = [FIELD.rand_matrix(rng, rows, inner) for _ in range(batch)]
    bb = [FIELD.rand_matrix(rng, inner, cols) for _ in range(batch)]
    answers = []
    for s in range(servers):
        sa = csa_encode_a(FIELD, aa, params, s)
        sb = csa_encode_b(FIELD, bb, params, s)
        answers.append((s, csa_answer(FIELD, sa, sb)))
    return params, aa, bb, answers


def test_threshold_table():
    assert csa_threshold(1, 2) == 3
    assert csa_threshold(2, 2) == 5
    assert csa_threshold(1, 3) == 5
    assert csa_threshold(1, 4) == 7
    assert csa_threshold(2, 4) == 11


def test_params_validation():
    with pytest.raises(ParameterError):
        csa_params(FIELD, 2, 2, 4)  # R = 5 > S
    with pytest.raises(ParameterError):
        csa_params(FIELD, 1, 2, 5, poles=(1, 1))
    with pytest.raises(ParameterError):
        csa_params(FIELD, 1, 2, 5, poles=(1, 2), samples=(2, 9, 10, 11, 12))
    small = PrimeField(13)
    with pytest.raises(ParameterError):
        csa_params(small, 2, 4, 8)  # L = 8 > q - S


def test_encode_a_single_slot_is_plain_copy():
    rng = np.random.default_rng(0)
    params = csa_params(FIELD, 3, 1, 5)
    aa = [FIELD.rand_matrix(rng, 2, 2) for _ in range(3)]
    for s in range(5):
        shares = csa_encode_a(FIELD, aa, params, s)
        assert all(np.array_equal(sh, a) for sh, a in zip(shares, aa))


def test_encode_b_single_slot_cauchy():
    rng = np.random.default_rng(1)
    params = csa_params(FIELD, 1, 1, 3)
    bb = [FIELD.rand_matrix(rng, 2, 2)]
    for s in range(3):
        w = FIELD.inv(FIELD.sub(params.poles[0], params.samples[s]))
        assert np.array_equal(csa_encode_b(FIELD, bb, params, s)[0],
                              w * bb[0] % FIELD.q)


def test_encode_matches_printed_two_slot_form():
    rng = np.random.default_rng(2)
    params = csa_params(FIELD, 1, 2, 4)
    aa = [FIELD.rand_matrix(rng, 2, 2) for _ in range(2)]
    f11, f12 = params.poles
    for s in range(4):
        alpha = params.samples[s]
        want = (FIELD.sub(f12, alpha) * aa[0] + FIELD.sub(f11, alpha) * aa[1]) % FIELD.q
        assert np.array_equal(csa_encode_a(FIELD, aa, params, s)[0], want)


def test_encode_a_matches_rational_form():
    # expanded form == Delta * sum_k (f - alpha)^{-1} A with explicit inverses
    rng = np.random.default_rng(3)
    params = csa_params(FIELD, 2, 3, 12)
    aa = [FIELD.rand_matrix(rng, 2, 2) for _ in range(6)]
    for s in (0, 5, 11):
        alpha = params.samples[s]
        shares = csa_encode_a(FIELD, aa, params, s)
        for l in range(2):
            delta = 1
            for k in range(3):
                delta = delta * FIELD.sub(params.pole(l, k), alpha) % FIELD.q
            acc = np.zeros_like(aa[0])
            for k in range(3):
                w = delta * FIELD.inv(FIELD.sub(params.pole(l, k), alpha)) % FIELD.q
                acc = (acc + w * aa[3 * l + k]) % FIELD.q
            assert np.array_equal(shares[l], acc)


def test_answer_matches_symbolic_expansion():
    # Y_s = sum over (l, k, k') of the cleared-denominator cross products
    rng = np.random.default_rng(4)
    params = csa_params(FIELD, 2, 2, 6)
    aa = [FIELD.rand_matrix(rng, 2, 2) for _ in range(4)]
    bb = [FIELD.rand_matrix(rng, 2, 2) for _ in range(4)]
    for s in range(6):
        alpha = params.samples[s]
        sa = csa_encode_a(FIELD, aa, params, s)
        sb = csa_encode_b(FIELD, bb, params, s)
        y = csa_answer(FIELD, sa, sb)
        acc = np.zeros_like(y)
        for l in range(2):
            for k in range(2):
                for k2 in range(2):
                    w = 1
                    for k3 in range(2):
                        if k3 != k:
                            w = w * FIELD.sub(params.pole(l, k3), alpha) % FIELD.q
                    w = w * FIELD.inv(FIELD.sub(params.pole(l, k2), alpha)) % FIELD.q
                    prod = FIELD.matmul(aa[2 * l + k], bb[2 * l + k2])
                    acc = (acc + w * prod) % FIELD.q
        assert np.array_equal(y, acc)


def test_decode_single_product():
    rng = np.random.default_rng(5)
    params, aa, bb, answers = make_instance(rng, 1, 1, 3)
    got = csa_decode(FIELD, answers[2:], params)
    assert np.array_equal(got[0], FIELD.matmul(aa[0], bb[0]))


def test_decode_2x2_all_56_subsets():
    rng = np.random.default_rng(6)
    params, aa, bb, answers = make_instance(rng, 2, 2, 8)
    truth = harness.direct_products(FIELD, aa, bb)
    count = 0
    for subset in itertools.combinations(range(8), 5):
        got = csa_decode(FIELD, [answers[s] for s in subset], params)
        assert all(np.array_equal(g, t) for g, t in zip(got, truth))
        count += 1
    assert count == 56


def test_double_batch_same_interference_budget():
    # doubling the batch from one group of four to two groups of four only
    # raises the threshold from 7 to 11: the three interference dimensions
    # are shared across groups
    rng = np.random.default_rng(60)
    assert csa_threshold(1, 4) == 7
    assert csa_threshold(2, 4) == 11
    params, aa, bb, answers = make_instance(rng, 2, 4, 14)
    truth = harness.direct_products(FIELD, aa, bb)
    for s, (sa_idx, y) in enumerate(answers):
        sa = csa_encode_a(FIELD, aa, params, s)
        sb = csa_encode_b(FIELD, bb, params, s)
        # the answer is the two-group sum of coded products
        want = (FIELD.matmul(sa[0], sb[0]) + FIELD.matmul(sa[1], sb[1])) % FIELD.q
        assert np.array_equal(y, want)
    rng2 = np.random.default_rng(61)
    subsets = list(itertools.combinations(range(14), 11))
    for i in rng2.choice(len(subsets), size=30, replace=False):
        got = csa_decode(FIELD, [answers[s] for s in subsets[int(i)]], params)
        assert all(np.array_equal(g, t) for g, t in zip(got, truth))


def test_scaling_constants_printed_1x3():
    params = csa_params(FIELD, 1, 3, 6)
    f11, f12, f13 = params.poles
    c = scaling_constants(FIELD, params)
    assert c[0] == FIELD.mul(FIELD.sub(f12, f11), FIELD.sub(f13, f11))
    assert c[1] == FIELD.mul(FIELD.sub(f11, f12), FIELD.sub(f13, f12))
    assert c[2] == FIELD.mul(FIELD.sub(f11, f13), FIELD.sub(f12, f13))


def test_oracle_equivalence_parameter_sweep():
    rng = np.random.default_rng(7)
    for ell, kc in [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3)]:
        r = csa_threshold(ell, kc)
        params, aa, bb, answers = make_instance(rng, ell, kc, r + 3)
        truth = harness.direct_products(FIELD, aa, bb)
        for subset in itertools.combinations(range(r + 3), r):
            got = csa_decode(FIELD, [answers[s] for s in subset], params)
            assert all(np.array_equal(g, t) for g, t in zip(got, truth))


def test_decode_order_independent():
    rng = np.random.default_rng(62)
    params, aa, bb, answers = make_instance(rng, 2, 2, 8)
    truth = harness.direct_products(FIELD, aa, bb)
    shuffled = [answers[s] for s in (6, 0, 7, 3, 1)]
    got = csa_decode(FIELD, shuffled, params)
    assert all(np.array_equal(g, t) for g, t in zip(got, truth))


def test_float_batch_rejected():
    params = csa_params(FIELD, 1, 2, 5)
    floats = [np.ones((2, 2)) * 0.5, np.ones((2, 2))]
    with pytest.raises(ParameterError):
        csa_encode_a(FIELD, floats, params, 0)


def test_decode_insufficient():
    rng = np.random.default_rng(8)
    params, _, _, answers = make_instance(rng, 2, 2, 8)
    with pytest.raises(InsufficientAnswersError):
        csa_decode(FIELD, answers[:4], params)


def test_interference_rank_is_kc_minus_one():
    for ell in (1, 2, 3):
        params = csa_params(FIELD, ell, 2, csa_threshold(ell, 2) + 3)
        assert interference_rank(FIELD, params) == 1
    for ell in (1, 2):
        params = csa_params(FIELD, ell, 3, csa_threshold(ell, 3) + 3)
        assert interference_rank(FIELD, params) == 2


def test_cost_counters():
    rng = np.random.default_rng(9)
    params = csa_params(FIELD, 2, 2, 8)
    aa = [FIELD.rand_matrix(rng, 2, 3) for _ in range(4)]
    bb = [FIELD.rand_matrix(rng, 3, 2) for _ in range(4)]
    _, report = harness.run_cdbmm(FIELD, "csa", params, aa, bb,
                                  harness.StragglerModel(count=6, seed=0))
    assert report.theory.uploads == (Fraction(8, 2), Fraction(8, 2))
    assert report.theory.download == Fraction(5, 4)
    assert report.measured == report.theory
    # ell matrix products of 2x3 by 3x2 per server
    assert report.server_mults == 2 * 2 * 3 * 2


# ---- systematic construction ----


def test_systematic_first_l_shares_raw():
    rng = np.random.default_rng(10)
    params = csa_params(FIELD, 1, 2, 5, systematic=True)
    aa = [FIELD.rand_matrix(rng, 2, 2) for _ in range(2)]
    bb = [FIELD.rand_matrix(rng, 2, 2) for _ in range(2)]
    shares = systematic_encode(FIELD, aa, bb, params)
    for s in range(2):
        kind, a, b = shares[s]
        assert kind == "raw"
        assert np.array_equal(a, aa[s]) and np.array_equal(b, bb[s])
    assert shares[2][0] == "coded"


def test_systematic_all_raw_needs_zero_solves():
    rng = np.random.default_rng(11)
    params = csa_params(FIELD, 1, 2, 5, systematic=True)
    aa = [FIELD.rand_matrix(rng, 2, 2) for _ in range(2)]
    bb = [FIELD.rand_matrix(rng, 2, 2) for _ in range(2)]
    shares = systematic_encode(FIELD, aa, bb, params)
    answers = [(s, systematic_answer(FIELD, shares[s])) for s in (0, 1, 4)]
    before = structmat.solve_calls
    got = systematic_decode(FIELD, answers, params)
    assert structmat.solve_calls == before
    truth = harness.direct_products(FIELD, aa, bb)
    assert all(np.array_equal(g, t) for g, t in zip(got, truth))


def test_systematic_matches_plain_decode_everywhere():
    rng = np.random.default_rng(12)
    params = csa_params(FIELD, 1, 2, 5, systematic=True)
    plain = csa_params(FIELD, 1, 2, 5)
    aa = [FIELD.rand_matrix(rng, 2, 2) for _ in range(2)]
    bb = [FIELD.rand_matrix(rng, 2, 2) for _ in range(2)]
    truth = harness.direct_products(FIELD, aa, bb)
    shares = systematic_encode(FIELD, aa, bb, params)
    answers = [(s, systematic_answer(FIELD, shares[s])) for s in range(5)]
    plain_answers = []
    for s in range(5):
        sa = csa_encode_a(FIELD, aa, plain, s)
        sb = csa_encode_b(FIELD, bb, plain, s)
        plain_answers.append((s, csa_answer(FIELD, sa, sb)))
    for subset in itertools.combinations(range(5), 3):
        got = systematic_decode(FIELD, [answers[s] for s in subset], params)
        assert all(np.array_equal(g, t) for g, t in zip(got, truth))
        if min(subset) >= 2:
            # coded-only answers coincide with the non-systematic code
            assert all(np.array_equal(answers[s][1], plain_answers[s][1])
                       for s in subset)
            via_plain = csa_decode(FIELD, [answers[s] for s in subset], plain)
            assert all(np.array_equal(g, v) for g, v in zip(got, via_plain))


def test_systematic_requires_enough_servers():
    with pytest.raises(ParameterError):
        csa_params(FIELD, 2, 2, 3, systematic=True)


def test_systematic_relaxed_field_size():
    # q = 13 cannot host S + L = 11 + 8 points, but the systematic layout
    # only needs the coded servers' samples to avoid the poles
    small = PrimeField(13)
    with pytest.raises(ParameterError):
        csa_params(small, 2, 4, 11)
    # raw servers 0..7 never use their sample slot, so only 10..12 matter
    params = csa_params(small, 2, 4, 11, samples=tuple(range(2, 13)),
                        poles=None, systematic=True)
    rng = np.random.default_rng(13)
    aa = [small.rand_matrix(rng, 2, 2) for _ in range(8)]
    bb = [small.rand_matrix(rng, 2, 2) for _ in range(8)]
    shares = systematic_encode(small, aa, bb, params)
    answers = [(s, systematic_answer(small, shares[s])) for s in range(11)]
    got = systematic_decode(small, answers, params)
    truth = harness.direct_products(small, aa, bb)
    assert all(np.array_equal(g, t) for g, t in zip(got, truth))
