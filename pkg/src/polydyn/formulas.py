"""Closed-form predictions for power, Chebyshev and split maps.

Every prediction carries a provenance tag and, when (p, d) falls outside
the hypotheses the counting results were proved under (odd p, p not
dividing d), a flag saying so.  Where only an order of growth is known the
prediction is an envelope: an exponent of p plus a heuristic coefficient.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import divisors, euler_phi, is_prime, m_pair, mult_order, prime_factors, valuation
from .graph import OrbitStats
from .space import AFFINE, PROJECTIVE

EXACT = "exact"
LOWER = "lower"
STRICT_LOWER = "strict-lower"
ENVELOPE = "envelope"

# Flajolet-Odlyzko constants as used for the reference curves
PERIODIC_COEFF = math.sqrt(math.pi / 8)
TAIL_COEFF = math.log(2) * math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class Prediction:
    """An exact count, a bound, or an envelope coefficient * p**exponent."""

    value: int | Fraction | None
    provenance: str
    relation: str = EXACT
    exponent: Fraction | None = None
    coefficient: float | None = None
    flags: tuple[str, ...] = ()

    @property
    def exact(self) -> bool:
        return self.relation == EXACT

    def curve(self, p: int) -> float:
        """Numeric value at p: the exact value, or the envelope evaluated at p."""
        if self.relation == ENVELOPE:
            return self.coefficient * p ** float(self.exponent)
        return float(self.value)

    def holds_for(self, observed: int) -> bool:
        if self.relation == EXACT:
            return observed == self.value
        if self.relation == LOWER:
            return observed >= self.value
        if self.relation == STRICT_LOWER:
            return observed > self.value
        raise ValueError("envelopes make no pointwise claim")

    def to_json(self) -> dict:
        out = {"provenance": self.provenance, "relation": self.relation, "flags": list(self.flags)}
        if self.value is not None:
            out["value"] = self.value if isinstance(self.value, int) else str(self.value)
        if self.exponent is not None:
            out["exponent"] = str(self.exponent)
            out["coefficient"] = self.coefficient
        return out


@dataclass(frozen=True)
class Dim1Prediction:
    periodic: Prediction
    max_tail: Prediction
    leaf_bound: Prediction | None = None


def hypothesis_flags(p: int, d: int) -> tuple[str, ...]:
    flags = []
    if p == 2:
        flags.append("p=2: excluded, every power map permutes F_2")
    if d % p == 0:
        flags.append(f"p={p} divides d={d}: outside the counting hypotheses")
    return tuple(flags)


def _check_space(space: str) -> None:
    if space not in (AFFINE, PROJECTIVE):
        raise ValueError(f"space must be {AFFINE!r} or {PROJECTIVE!r}")


def _power_tail(p: int, d: int) -> int:
    return max((-(-valuation(p - 1, q) // valuation(d, q)) for q in prime_factors(d)), default=0)


def _cheby_tail(p: int, d: int) -> int:
    best = 0
    for q in prime_factors(d):
        vd = valuation(d, q)
        best = max(best, -(-valuation(p - 1, q) // vd), -(-valuation(p + 1, q) // vd))
    return best


def predict_power_dim1(p: int, d: int, space: str = AFFINE) -> Dim1Prediction:
    _check_space(space)
    mp = m_pair(p, d)
    flags = hypothesis_flags(p, d)
    count = mp.m_minus + (2 if space == PROJECTIVE else 1)
    periodic = Prediction(count, "power-dim1-periodic", flags=flags)
    tail = Prediction(_power_tail(p, d), "power-dim1-max-tail", flags=flags)
    leaves = Prediction(Fraction(p - 1, 2), "power-dim1-leaves", LOWER, flags=flags)
    if math.gcd(d, p - 1) == 1:
        leaves = Prediction(0, "power-dim1-leaves", EXACT, flags=flags + ("permutation",))
    return Dim1Prediction(periodic, tail, leaves)


def predict_cheby_dim1(p: int, d: int, space: str = AFFINE) -> Dim1Prediction:
    _check_space(space)
    mp = m_pair(p, d)
    flags = hypothesis_flags(p, d)
    total = mp.m_minus + mp.m_plus
    if total % 2:
        raise ArithmeticError(f"m- + m+ is odd for p={p}, d={d}")
    count = total // 2 + (1 if space == PROJECTIVE else 0)
    periodic = Prediction(count, "cheby-dim1-periodic", flags=flags)
    tail = Prediction(_cheby_tail(p, d), "cheby-dim1-max-tail", flags=flags)
    return Dim1Prediction(periodic, tail)


def predict_cheby_leaves(p: int, d: int) -> Prediction:
    """Leaf count of T_d on A^1(F_p) for prime d."""
    if not is_prime(d):
        raise ValueError("the Chebyshev leaf count needs prime d")
    flags = hypothesis_flags(p, d)
    if d == 2:
        return Prediction((p - 1) // 2, "cheby-leaves", flags=flags)
    if (p - 1) % d == 0:
        value = (d - 1) * (p - 1) // (2 * d)
    elif (p + 1) % d == 0:
        value = (d - 1) * (p + 1) // (2 * d)
    else:
        value = 0
    return Prediction(value, "cheby-leaves", flags=flags)


@dataclass(frozen=True)
class SplitSignature:
    """P_d^a x T_d^b x prod R_k, with random block dimensions listed in random_dims."""

    a: int
    b: int
    random_dims: tuple[int, ...] = ()
    d: int = 2

    def __post_init__(self):
        dims = tuple(sorted((int(k) for k in self.random_dims), reverse=True))
        if self.a < 0 or self.b < 0 or any(k < 1 for k in dims):
            raise ValueError("signature parts must be non-negative, random blocks >= 1")
        if self.d < 2:
            raise ValueError("degree must be >= 2")
        object.__setattr__(self, "random_dims", dims)

    @property
    def K(self) -> int:
        return sum(self.random_dims)

    @property
    def N(self) -> int:
        return self.a + self.b + self.K

    @property
    def multiplicities(self) -> dict[int, int]:
        """k_i -> c_i."""
        return dict(Counter(self.random_dims))

    def __str__(self):
        parts = [f"a={self.a}", f"b={self.b}"]
        if self.random_dims:
            parts.append("R=" + "+".join(map(str, self.random_dims)))
        return ",".join(parts)

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "random_dims": list(self.random_dims), "d": self.d,
                "K": self.K, "N": self.N}


def group_factor(sig: SplitSignature, p: int) -> int:
    """Exact periodic count of the P_d^a x T_d^b part on A^(a+b)."""
    mp = m_pair(p, sig.d)
    return (mp.m_minus + 1) ** sig.a * ((mp.m_minus + mp.m_plus) // 2) ** sig.b


def predict_split(sig: SplitSignature, p: int, space: str = AFFINE) -> Prediction:
    _check_space(space)
    flags = hypothesis_flags(p, sig.d)
    group = group_factor(sig, p)
    if sig.K == 0:
        value = group
        if space == PROJECTIVE:
            mm = m_pair(p, sig.d).m_minus
            value += sum((mm + 1) ** i for i in range(sig.N))
        return Prediction(value, "split-periodic", flags=flags)
    coeff = group * PERIODIC_COEFF ** len(sig.random_dims)
    return Prediction(
        None,
        "split-periodic",
        ENVELOPE,
        exponent=Fraction(sig.K, 2),
        coefficient=coeff,
        flags=flags + ("heuristic coefficient",),
    )


def predict_split_tail(sig: SplitSignature, p: int) -> Prediction:
    flags = hypothesis_flags(p, sig.d)
    if sig.K:
        return Prediction(
            None,
            "split-max-tail",
            ENVELOPE,
            exponent=Fraction(max(sig.random_dims), 2),
            coefficient=TAIL_COEFF,
            flags=flags + ("heuristic coefficient",),
        )
    if sig.b:
        return Prediction(_cheby_tail(p, sig.d), "split-max-tail", flags=flags)
    if sig.a:
        return Prediction(_power_tail(p, sig.d), "split-max-tail", flags=flags)
    return Prediction(0, "split-max-tail", flags=flags)


# -- the powering map on A^N / P^N ---------------------------------------------


def predict_power_dimN_total(p: int, d: int, N: int, space: str = AFFINE) -> Prediction:
    _check_space(space)
    mm = m_pair(p, d).m_minus
    if space == AFFINE:
        value = (mm + 1) ** N
    else:
        value = sum((mm + 1) ** D for D in range(N + 1))
    return Prediction(value, "power-dimN-periodic", flags=hypothesis_flags(p, d))


def power_period_profile(p: int, d: int, N: int, space: str = AFFINE) -> dict[int, int]:
    """Exact #Per_k of P_d on A^N or P^N for every k that occurs.

    Each coordinate is either 0 (fixed) or a unit whose order-divisor k | m-
    puts it on a cycle of length ord_k(d); there are phi(k) such units.  The
    period of a point is the lcm over its coordinates, folded one coordinate
    at a time over the distinct cycle lengths.
    """
    _check_space(space)
    mm = m_pair(p, d).m_minus
    weights: Counter[int] = Counter({1: 1})
    for k in divisors(mm):
        weights[mult_order(d, k)] += euler_phi(k)
    dist: Counter[int] = Counter({1: 1})
    totals: Counter[int] = Counter(dist)
    for _ in range(N):
        nxt: Counter[int] = Counter()
        for lcm_so_far, count in dist.items():
            for r, w in weights.items():
                nxt[math.lcm(lcm_so_far, r)] += count * w
        dist = nxt
        totals.update(dist)
    chosen = dist if space == AFFINE else totals
    return dict(sorted(chosen.items()))


def predict_power_dimN_period_k(p: int, d: int, N: int, k: int, space: str = AFFINE) -> Prediction:
    if k < 1:
        raise ValueError("period must be >= 1")
    value = power_period_profile(p, d, N, space).get(k, 0)
    return Prediction(value, "power-dimN-period-k", flags=hypothesis_flags(p, d))


def predict_power_dimN_point(p: int, d: int, z) -> OrbitStats:
    mm = m_pair(p, d).m_minus
    qs = prime_factors(d)
    tail, period = 0, 1
    for zi in z:
        zi %= p
        if zi == 0:
            continue
        o = mult_order(zi, p)
        tail = max(tail, max(-(-valuation(o, q) // valuation(d, q)) for q in qs))
        period = math.lcm(period, mult_order(d, math.gcd(o, mm)))
    return OrbitStats(tail, period)


def power_tail_counts(p: int, d: int, N: int, space: str = AFFINE) -> dict[int, int]:
    """#Pre_k of P_d for k >= 1 (prime d); zero outside 1 <= k <= v_d(p - 1).

    With e zero coordinates, the points of tail exactly k number
    (d^(N-e) - 1) * C(N, e) * m^(N-e) * d^((N-e)(k-1)).
    """
    _check_space(space)
    if not is_prime(d):
        raise ValueError("per-tail counts need prime d")
    mm = m_pair(p, d).m_minus
    nu = valuation(p - 1, d)

    def affine(D: int, k: int) -> int:
        return sum(
            (d ** (D - e) - 1) * math.comb(D, e) * mm ** (D - e) * d ** ((D - e) * (k - 1))
            for e in range(D + 1)
        )

    dims = [N] if space == AFFINE else list(range(N + 1))
    return {k: sum(affine(D, k) for D in dims) for k in range(1, nu + 1)}


@dataclass(frozen=True)
class PreperiodicPrediction:
    total: Prediction
    per_tail: dict[int, int] | None = field(default=None)


def predict_power_dimN_preperiodic(p: int, d: int, N: int, space: str = AFFINE) -> PreperiodicPrediction:
    """Strictly preperiodic points of P_d; per-tail counts only for prime d."""
    _check_space(space)
    mm = m_pair(p, d).m_minus
    if space == AFFINE:
        value = p**N - (mm + 1) ** N
    else:
        value = sum(p**D - (mm + 1) ** D for D in range(N + 1))
    total = Prediction(value, "power-dimN-preperiodic", flags=hypothesis_flags(p, d))
    per_tail = power_tail_counts(p, d, N, space) if is_prime(d) else None
    return PreperiodicPrediction(total, per_tail)


def predict_power_dimN_leaves(p: int, d: int, N: int, space: str = AFFINE) -> Prediction:
    """Lower bound on the number of leaves of P_d.

    Dimension 1 uses the (p - 1)/2 bound; from dimension 2 on the bound is
    half the points, strictly.
    """
    _check_space(space)
    flags = hypothesis_flags(p, d)
    if math.gcd(d, p - 1) == 1:
        return Prediction(0, "power-dimN-leaves", EXACT, flags=flags + ("permutation",))
    if N == 1:
        return Prediction(Fraction(p - 1, 2), "power-dimN-leaves", LOWER, flags=flags)
    size = p**N if space == AFFINE else sum(p**D for D in range(N + 1))
    return Prediction(Fraction(size, 2), "power-dimN-leaves", STRICT_LOWER, flags=flags)


def power_leaf_count(p: int, d: int, N: int, space: str = AFFINE) -> int:
    """Exact leaf count of P_d: points with some coordinate not a d-th power."""
    _check_space(space)
    powers = 1 + (p - 1) // math.gcd(d, p - 1)
    if space == AFFINE:
        return p**N - powers**N
    return sum(p**D - powers**D for D in range(N + 1))


def preimage_profile(p: int, d: int, z) -> int:
    """Number of preimages of the affine point z under P_d.

    Each nonzero coordinate that is a d-th power has gcd(d, p - 1) roots;
    a single non-residue coordinate leaves the point without preimages.
    """
    g = math.gcd(d, p - 1)
    count = 1
    for zi in z:
        zi %= p
        if zi == 0:
            continue
        if pow(zi, (p - 1) // g, p) != 1:
            return 0
        count *= g
    return count


# -- random mappings -----------------------------------------------------------


@dataclass(frozen=True)
class RandomAsymptotics:
    """Reference curves for a uniformly random self-map of an n-element set."""

    n: int
    periodic_coeff: float = PERIODIC_COEFF
    tail_coeff: float = TAIL_COEFF

    @property
    def periodic(self) -> float:
        return self.periodic_coeff * math.sqrt(self.n)

    @property
    def max_tail(self) -> float:
        return self.tail_coeff * math.sqrt(self.n)

    @staticmethod
    def tau(k: int) -> float:
        t = 0.0
        for _ in range(k):
            t = math.exp(-1 + t)
        return t

    def image_count(self, k: int) -> float:
        """Expected size of the k-th iterate image f^k(S)."""
        return (1 - self.tau(k)) * self.n


def random_asymptotics(n: int) -> RandomAsymptotics:
    if n < 1:
        raise ValueError("n must be >= 1")
    return RandomAsymptotics(n)
