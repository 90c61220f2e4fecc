import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cheby_recurrence
from polydyn.arith import Fp
from polydyn.graph import census
from polydyn.maps import (
    BadReduction,
    BlackBox,
    Chebyshev,
    PglMatrix,
    PointIndex,
    Poly,
    Power,
    RandomMap,
    Split,
    cheby_array,
    conjugate,
    eval_affine,
    eval_cheby,
    eval_power,
    eval_projective,
    map_from_json,
    map_to_json,
    power_n,
    random_poly,
    random_table,
    random_unimodular,
    split,
)
from polydyn.space import AFFINE, PROJECTIVE, Space

PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61]


@given(st.integers(1, 40), st.sampled_from(PRIMES), st.integers(0, 60))
def test_cheby_matches_recurrence(d, p, z):
    assert int(eval_cheby(d, Fp(p, z))) == cheby_recurrence(d, z, p)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6, 9, 12])
def test_cheby_array_matches_scalar(d):
    p = 101
    x = np.arange(p)
    assert [int(v) for v in cheby_array(d, x, p)] == [int(eval_cheby(d, Fp(p, z))) for z in range(p)]


def test_cheby_normalisation():
    p = 1009
    assert int(eval_cheby(2, Fp(p, 5))) == 23
    assert int(eval_cheby(3, Fp(p, 5))) == 110


@given(st.sampled_from(PRIMES), st.integers(1, 12))
def test_cheby_semiconjugate_to_power(p, d):
    # T_d(z + 1/z) = z^d + z^-d for every unit z
    for z in range(1, p):
        w = Fp(p, z)
        assert eval_cheby(d, w + w.inverse()) == w**d + (w**d).inverse()


@given(st.sampled_from(PRIMES), st.integers(1, 6), st.integers(1, 6))
def test_cheby_composition(p, a, b):
    for z in range(p):
        x = Fp(p, z)
        assert eval_cheby(a, eval_cheby(b, x)) == eval_cheby(a * b, x)


def test_eval_power():
    assert int(eval_power(3, Fp(11, 2))) == 8


def test_poly_horner_and_leading_coefficient():
    f = Poly((1, 0, 1))
    assert eval_affine(f, (3,), 7) == (3,)
    assert f.degree == 2
    g = Poly((1, 2, 5))
    with pytest.raises(BadReduction):
        census(g, Space(PROJECTIVE, 1, 5))


def test_poly_trailing_zeros_are_dropped():
    assert Poly((1, 2, 0, 0)).degree == 1


def test_random_poly_is_deterministic_and_monic():
    f = random_poly(4, 7)
    assert f == random_poly(4, 7)
    assert f.coeffs[-1] == 1 and f.degree == 4
    assert f != random_poly(4, 8)


def test_random_table_deterministic():
    a = random_table(3, 11, 2)
    assert np.array_equal(a, random_table(3, 11, 2))
    assert a.shape == (121,) and a.min() >= 0 and a.max() < 121
    assert not np.array_equal(a, random_table(4, 11, 2))


def test_random_map_uses_table():
    spec = RandomMap(1, 5)
    table = random_table(5, 13, 1)
    assert [eval_affine(spec, (z,), 13)[0] for z in range(13)] == list(table)


def test_split_acts_coordinatewise():
    spec = split(Power(2), Chebyshev(2))
    assert eval_affine(spec, (3, 3), 11) == (9, 7)
    assert spec.dim == 2 and spec.degree == 2


def test_split_requires_common_degree():
    with pytest.raises(ValueError):
        split(Power(2), Chebyshev(3))


def test_power_n():
    assert power_n(3, 2) == Split((Power(3), Power(3)))


def test_projective_chart_agrees_with_affine():
    spec = split(Power(2), Chebyshev(2), RandomMap(1, 3))
    p = 7
    for z in [(0, 0, 0), (1, 2, 3), (6, 5, 4)]:
        assert eval_projective(spec, z + (1,), p) == eval_affine(spec, z, p) + (1,)
        assert eval_projective(spec, tuple(2 * v for v in z) + (2,), p) == eval_affine(spec, z, p) + (1,)


def test_hyperplane_at_infinity_uses_leading_forms():
    p = 7
    assert eval_projective(Power(3), (1, 0), p) == (1, 0)
    assert eval_projective(split(Power(2), Chebyshev(2)), (3, 1, 0), p) == (2, 1, 0)


def test_point_index_evaluation():
    space = Space(AFFINE, 2, 5)
    spec = power_n(2, 2)
    img = eval_affine(spec, PointIndex(space, 7), 5)
    assert img.coords == (4, 1)
    with pytest.raises(ValueError):
        eval_affine(spec, PointIndex(Space(AFFINE, 2, 7), 0), 5)


def test_unimodular_matrices_invertible_everywhere():
    rng = random.Random(1)
    for n in (2, 3, 4):
        for _ in range(10):
            m = random_unimodular(n, rng)
            for p in (2, 3, 5, 7, 11):
                assert m.det_mod(p) != 0
            assert random_unimodular(n, rng, affine=True).is_affine()


def _stats_tuple(spec, space):
    s = census(spec, space).stats
    return s.per_count, s.pre_count, s.leaf_count, s.cycle_count


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([3, 5, 7, 11]))
def test_conjugation_preserves_statistics(seed, p):
    rng = random.Random(seed)
    inner = rng.choice([Power(2), Chebyshev(2), split(Power(2), Chebyshev(2)), RandomMap(1, seed % 97, 2)])
    alpha = random_unimodular(inner.dim + 1, rng)
    conj = conjugate(inner, alpha)
    assert _stats_tuple(conj, Space(PROJECTIVE, inner.dim, p)) == _stats_tuple(inner, Space(PROJECTIVE, inner.dim, p))
    aff = conjugate(inner, random_unimodular(inner.dim + 1, rng, affine=True))
    assert _stats_tuple(aff, Space(AFFINE, inner.dim, p)) == _stats_tuple(inner, Space(AFFINE, inner.dim, p))


def test_conjugation_by_translation_is_explicit():
    # alpha(x) = x + 1, so the conjugate is (x + 1)^2 - 1 = x^2 + 2x
    conj = conjugate(Power(2), [[1, 1], [0, 1]])
    assert [eval_affine(conj, (z,), 11)[0] for z in range(11)] == [(z * z + 2 * z) % 11 for z in range(11)]


def test_singular_conjugation():
    with pytest.raises(ValueError):
        conjugate(Power(2), [[1, 2], [2, 4]])
    conj = conjugate(Power(2), [[1, 0], [0, 3]])
    with pytest.raises(BadReduction):
        census(conj, Space(PROJECTIVE, 1, 3))


def test_non_affine_conjugate_is_projective_only():
    conj = conjugate(Power(2), [[1, 0], [1, 1]])
    assert not conj.supports_affine()
    with pytest.raises(ValueError):
        census(conj, Space(AFFINE, 1, 5))


def test_black_box_affine_and_projective():
    bb = BlackBox(lambda c, p: c * c % p, 1, 2)
    assert _stats_tuple(bb, Space(AFFINE, 1, 13)) == _stats_tuple(Power(2), Space(AFFINE, 1, 13))
    proj = BlackBox(lambda c, p: c * c % p, 1, 2, projective=True)
    assert _stats_tuple(proj, Space(PROJECTIVE, 1, 13)) == _stats_tuple(Power(2), Space(PROJECTIVE, 1, 13))


@pytest.mark.parametrize(
    "spec",
    [
        Power(3),
        Chebyshev(4),
        Poly((3, 0, 1)),
        RandomMap(2, 9, 3),
        split(Power(2), Chebyshev(2), RandomMap(1, 4)),
        conjugate(split(Power(2), Chebyshev(2)), PglMatrix(((1, 1, 0), (0, 1, 0), (1, 0, 1)))),
    ],
)
def test_json_round_trip(spec):
    doc = map_to_json(spec)
    assert map_from_json(doc) == spec
    assert map_from_json(json.dumps(doc)) == spec


def test_json_rejects_inconsistent_documents():
    with pytest.raises(ValueError):
        map_from_json({"kind": "power", "d": 2, "N": 2})
    with pytest.raises(ValueError):
        map_from_json({"kind": "spiral"})
    with pytest.raises(ValueError):
        map_from_json({"kind": "conj", "components": [{"kind": "power", "d": 2}]})


@pytest.mark.parametrize("a,b", [(2, 3), (3, 4), (2, 5), (4, 9), (2, 2), (3, 3)])
def test_chebyshev_composition_periodicity_and_tails(a, b):
    # periodic for T_ab iff periodic for both; tails combine by max when gcd(a, b) = 1
    for p in PRIMES:
        space = Space(AFFINE, 1, p)
        t_ab, t_a, t_b = (census(Chebyshev(k), space).tail for k in (a * b, a, b))
        assert np.array_equal(t_ab == 0, (t_a == 0) & (t_b == 0))
        if np.gcd(a, b) == 1:
            assert np.array_equal(t_ab, np.maximum(t_a, t_b))


def test_chebyshev_tail_law_fails_for_shared_factors():
    # T_4 = T_2 o T_2 halves tails: 0 -> -2 -> 2 under T_2 but 0 -> 2 under T_4
    space = Space(AFFINE, 1, 7)
    assert census(Chebyshev(2), space).tail[0] == 2
    assert census(Chebyshev(4), space).tail[0] == 1
