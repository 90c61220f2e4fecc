import csv
import io
import json
import random

import numpy as np
import pytest

from polydyn.arith import m_pair
from polydyn.classify import (
    CHEBYSHEV,
    POWER,
    RANDOM,
    UNKNOWN,
    classify,
    classify_dim1,
    classify_dimN,
    dim1_primes,
    dimN_primes,
    fit_exponent,
    gather_evidence,
    partitions,
    signatures,
)
from polydyn.formulas import SplitSignature
from polydyn.maps import (
    BlackBox,
    Chebyshev,
    Poly,
    Power,
    RandomMap,
    conjugate,
    power_n,
    random_poly,
    random_unimodular,
    split,
)
from polydyn.primes import MERSENNE, verify_form_consequences


def test_evidence_examples():
    assert [r.periodic for r in gather_evidence(Power(2), [7, 11, 13]).rows] == [4, 6, 4]
    assert [r.periodic for r in gather_evidence(Chebyshev(2), [7]).rows] == [2]


def test_evidence_is_sorted_and_threads_agree():
    a = gather_evidence(Chebyshev(3), [29, 5, 11, 17])
    b = gather_evidence(Chebyshev(3), [5, 11, 17, 29], threads=3)
    assert [r.p for r in a.rows] == [5, 11, 17, 29]
    assert a.rows == b.rows


def test_evidence_skips_bad_reduction():
    spec = conjugate(Power(2), [[1, 0], [0, 3]])
    ev = gather_evidence(spec, [3, 5, 7])
    assert [r.p for r in ev.rows] == [5, 7]
    assert [p for p, _ in ev.skipped] == [3]
    assert ev.to_json()["skipped"][0]["p"] == 3


def test_quadratic_tracks_sqrt_p():
    ev = gather_evidence(Poly((1, 0, 1)), dim1_primes(2))
    assert fit_exponent(ev.primes, ev.counts) < 0.75


def test_fit_exponent():
    x = np.array([10.0, 100.0, 1000.0])
    assert fit_exponent(x, 3 * x**0.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fit_exponent([3.0], [1.0])


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_dim1_primes_have_the_right_form(d):
    primes = dim1_primes(d)
    assert len(primes) >= 4 and primes == sorted(primes)
    if d in (2, 4):
        for p in primes:
            verify_form_consequences(p, d, MERSENNE)


def test_conjugated_power_is_power():
    alpha = random_unimodular(2, random.Random(3))
    v = classify(conjugate(Power(3), alpha))
    assert v.label == POWER and v.confidence == 1.0


def test_chebyshev_over_mersenne():
    v = classify_dim1(gather_evidence(Chebyshev(4), [7, 31, 127, 8191]), 4)
    assert v.label == CHEBYSHEV and v.confidence == 1.0
    assert [row["chebyshev"] for row in v.table] == [2, 8, 32, 2048]


def test_random_polynomial_is_random():
    v = classify(random_poly(4, 11))
    assert v.label == RANDOM
    assert v.count_exponent < 0.75


def test_unknown_when_nothing_matches():
    identity = BlackBox(lambda c, p: c, 1, 2)
    v = classify(identity)
    assert v.label == UNKNOWN and v.unknown


def test_dim1_needs_four_primes():
    with pytest.raises(ValueError):
        classify_dim1(gather_evidence(Power(2), [7, 31, 127]), 2)


def test_partitions_and_signatures():
    assert list(partitions(4)) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    sigs = list(signatures(2, 2))
    assert len(sigs) == 3 + 2 + 1 + 1
    assert all(s.N == 2 for s in sigs)
    assert all(max(s.random_dims) == 2 for s in signatures(3, 2, max_block=2) if s.K)


def test_split_group_maps_are_recovered_exactly():
    v = classify(split(Power(2), Chebyshev(2), Chebyshev(2)), primes=[7, 13, 97])
    assert v.signature == SplitSignature(1, 2, (), 2)
    assert v.confidence == 1.0
    assert all(row["observed"] == row["predicted"] for row in v.table)


def test_conjugated_power_product():
    rng = random.Random(8)
    spec = conjugate(power_n(2, 2), random_unimodular(3, rng))
    v = classify(spec)
    assert v.signature == SplitSignature(2, 0, (), 2) and v.confidence == 1.0


def test_random_block_size_from_tails():
    # same K = 2 random dimensions, split as 1 + 1 or as one block of 2
    primes = [7, 13, 97, 193]
    small = classify(split(Power(2), RandomMap(1, 21), RandomMap(1, 22)), primes=primes)
    big = classify(split(RandomMap(2, 23), Power(2)), primes=primes)
    assert small.signature == SplitSignature(1, 0, (1, 1), 2)
    assert big.signature == SplitSignature(1, 0, (2,), 2)
    assert small.tail_exponent < big.tail_exponent


def test_verdict_serialisation():
    v = classify(split(Power(2), RandomMap(1, 5)))
    doc = json.loads(json.dumps(v.to_json()))
    sig = doc["signature"]
    assert sig["a"] + sig["b"] + sig["K"] == doc["dim"] == 2
    assert 0.0 <= doc["confidence"] <= 1.0
    rows = list(csv.DictReader(io.StringIO(v.plot_csv())))
    assert [int(r["p"]) for r in rows] == [row["p"] for row in v.table]
    assert str(v.signature) in rows[0]


def test_determinism():
    spec = split(Chebyshev(2), RandomMap(1, 9))
    assert classify(spec).to_json() == classify(spec).to_json()


def test_dimN_requires_shared_m_minus():
    with pytest.raises(ValueError):
        classify_dimN(power_n(2, 2), 2, primes=[7, 11, 13])


def test_dimN_primes_share_m_minus():
    primes = dimN_primes(2, 2)
    assert len({m_pair(p, 2).m_minus for p in primes}) == 1
    assert len(primes) >= 5
