"""Prime sequences with prescribed m- / m+ behaviour."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arith import is_prime, m_pair, prime_factors

MERSENNE = "mersenne"
SOPHIE_GERMAIN = "sophie-germain"
MINUS_ONE_MOD = "minus-one-mod"
CONSTANT_M_MINUS = "constant-m-minus"
FORMS = (MERSENNE, SOPHIE_GERMAIN, MINUS_ONE_MOD, CONSTANT_M_MINUS)

DEFAULT_CAP = 2**40
_SIEVE_LIMIT = 10**8


@dataclass(frozen=True)
class PrimeSequenceSpec:
    form: str
    d: int | None = None
    target_m_minus: int | None = None
    min_p: int = 2
    max_p: int = 10**4
    max_count: int | None = None

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown prime form {self.form!r}; choose from {FORMS}")
        if self.max_p > DEFAULT_CAP:
            raise ValueError(f"max_p above the cap {DEFAULT_CAP}")
        if self.min_p > self.max_p:
            raise ValueError("min_p exceeds max_p")
        if self.form == MINUS_ONE_MOD:
            if self.d is None or self.d < 2:
                raise ValueError("p = -1 mod d needs a modulus d >= 2")
            if self.d % 2 == 0:
                raise ValueError("p = -1 mod d is only used for odd d")
        if self.form == CONSTANT_M_MINUS:
            if self.d is None or self.d < 2:
                raise ValueError("constant m- sequences need a degree d >= 2")
            if self.target_m_minus is None or self.target_m_minus < 1:
                raise ValueError("constant m- sequences need a positive target")


def sieve(limit: int) -> np.ndarray:
    """All primes <= limit."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for i in range(3, int(limit**0.5) + 1, 2):
        if flags[i]:
            flags[i * i :: 2 * i] = False
    return np.flatnonzero(flags).astype(np.int64)


def _primes_between(lo: int, hi: int):
    if hi <= _SIEVE_LIMIT:
        for q in sieve(hi):
            if q >= lo:
                yield int(q)
        return
    n = max(lo, 2)
    while n <= hi:
        if is_prime(n):
            yield n
        n += 1


def _mersenne(spec: PrimeSequenceSpec):
    q = 2
    while 2**q - 1 <= spec.max_p:
        p = 2**q - 1
        if is_prime(q) and p >= spec.min_p and is_prime(p):
            yield p
        q += 1


def _sophie_germain(spec: PrimeSequenceSpec):
    bad = set(prime_factors(spec.d)) if spec.d else set()
    for q in _primes_between(2, (spec.max_p - 1) // 2):
        p = 2 * q + 1
        if p >= spec.min_p and q not in bad and is_prime(p):
            yield p


def _minus_one_mod(spec: PrimeSequenceSpec):
    d = spec.d
    p = max(spec.min_p, 2)
    p += (-1 - p) % d
    while p <= spec.max_p:
        if is_prime(p):
            yield p
        p += d


def _constant_m_minus(spec: PrimeSequenceSpec):
    # p - 1 = target * s where s only has prime factors dividing d
    qs = prime_factors(spec.d)
    target = spec.target_m_minus
    if any(target % q == 0 for q in qs):
        return
    limit = (spec.max_p - 1) // target
    smooth = [1]
    for q in qs:
        smooth = [s * q**e for s in smooth for e in range(64) if s * q**e <= limit]
    for s in sorted(smooth):
        p = target * s + 1
        if spec.min_p <= p <= spec.max_p and is_prime(p) and m_pair(p, spec.d).m_minus == target:
            yield p


_GENERATORS = {
    MERSENNE: _mersenne,
    SOPHIE_GERMAIN: _sophie_germain,
    MINUS_ONE_MOD: _minus_one_mod,
    CONSTANT_M_MINUS: _constant_m_minus,
}


def generate(spec: PrimeSequenceSpec) -> list[int]:
    """Increasing list of primes of the requested form; possibly empty."""
    out = []
    for p in _GENERATORS[spec.form](spec):
        out.append(p)
        if spec.max_count is not None and len(out) >= spec.max_count:
            break
    return out


def constant_m_minus_sequence(d: int, max_p: int, min_count: int = 5, min_p: int = 3) -> tuple[int, list[int]]:
    """Pick the target m- with the most primes below max_p.

    The smallest target reaching ``min_count`` primes wins; if none does,
    the target with the longest sequence (smallest on ties) is returned.
    """
    qs = prime_factors(d)
    counts: dict[int, list[int]] = {}
    for p in _primes_between(max(min_p, 3), max_p):
        if d % p == 0:
            continue
        counts.setdefault(m_pair(p, d).m_minus, []).append(p)
    if not counts:
        raise ValueError(f"no primes in [{min_p}, {max_p}]")
    for target in sorted(counts):
        if len(counts[target]) >= min_count and all(target % q for q in qs):
            return target, counts[target]
    target = max(sorted(counts), key=lambda t: len(counts[t]))
    return target, counts[target]


class FormViolation(AssertionError):
    """A generated prime does not have the m-/m+ values its form guarantees."""


def verify_form_consequences(p: int, d: int, form: str) -> dict:
    """Check the m-/m+ values guaranteed by the prime form; return what was checked.

    Raises FormViolation on a mismatch and ValueError when the form does not
    apply to (p, d).
    """
    mp = m_pair(p, d)
    checked: dict = {"p": p, "d": d, "form": form, "m_minus": mp.m_minus, "m_plus": mp.m_plus}
    if form == MERSENNE:
        q = (p + 1).bit_length() - 1
        if 2**q != p + 1 or not is_prime(q):
            raise ValueError(f"{p} is not a Mersenne prime")
        if d & (d - 1):
            raise ValueError("the Mersenne form needs d a power of 2")
        expected = {"m_plus": 1, "m_minus": 2 ** (q - 1) - 1}
    elif form == SOPHIE_GERMAIN:
        q = (p - 1) // 2
        if p % 2 == 0 or not is_prime(q):
            raise ValueError(f"{p} is not of the form 2q + 1 with q prime")
        if d % 2 or d % q == 0:
            raise ValueError("the Sophie Germain form needs d even and q not dividing d")
        expected = {"m_minus": q}
    elif form == MINUS_ONE_MOD:
        if d % 2 == 0 or (p + 1) % d:
            raise ValueError("needs d odd and p = -1 mod d")
        expected = {"m_minus": p - 1}
    else:
        raise ValueError(f"form {form!r} carries no guaranteed m-/m+ values")
    for key, value in expected.items():
        if checked[key] != value:
            raise FormViolation(f"{form} prime {p}, d={d}: {key}={checked[key]}, expected {value}")
    checked["expected"] = expected
    return checked
