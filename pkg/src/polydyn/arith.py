"""Integer and prime-field kernel.

Everything here works on Python ints, so products never overflow.  The
vectorised evaluation code in :mod:`polydyn.maps` keeps its own int64 path.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

# Deterministic Miller-Rabin witnesses for n < 3.3 * 10**24 (covers 2**64).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def is_prime(n: int) -> bool:
    """Deterministic primality test, exact for every n below 2**64."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    u, t = n - 1, 0
    while u % 2 == 0:
        u //= 2
        t += 1
    for a in _MR_BASES:
        x = pow(a, u, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(t - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _require_prime(p: int) -> None:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")


def _pollard_rho(n: int) -> int:
    """Return a nontrivial factor of the odd composite n (Brent's variant)."""
    rng = random.Random(n)
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g, r, q = 1, 1, 1
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


@lru_cache(maxsize=4096)
def _factor_cached(n: int) -> tuple[tuple[int, int], ...]:
    counts: Counter[int] = Counter()
    for q in (2, 3, 5):
        while n % q == 0:
            counts[q] += 1
            n //= q
    q, step = 7, 4
    # wheel mod 6 trial division up to a small bound, then rho
    while q * q <= n and q < 10_000:
        while n % q == 0:
            counts[q] += 1
            n //= q
        q += step
        step = 6 - step
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_prime(m):
            counts[m] += 1
            continue
        f = _pollard_rho(m)
        stack.extend((f, m // f))
    return tuple(sorted(counts.items()))


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation of n >= 1 as {prime: exponent}."""
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    return dict(_factor_cached(n))


def prime_factors(n: int) -> list[int]:
    return [q for q, _ in _factor_cached(n)]


def valuation(x: int, q: int) -> int:
    """Largest e with q**e dividing x."""
    if x == 0:
        raise ValueError("valuation of 0 is infinite")
    if q < 2:
        raise ValueError("valuation base must be >= 2")
    x = abs(x)
    e = 0
    while x % q == 0:
        x //= q
        e += 1
    return e


def euler_phi(n: int) -> int:
    if n < 1:
        raise ValueError("euler_phi needs n >= 1")
    result = n
    for q in prime_factors(n):
        result -= result // q
    return result


def divisors(n: int) -> list[int]:
    """All positive divisors of n, ascending."""
    if n < 1:
        raise ValueError("divisors needs n >= 1")
    divs = [1]
    for q, e in _factor_cached(n):
        divs = [d * q**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def mult_order(a: int, n: int) -> int:
    """Multiplicative order of a modulo n; order modulo 1 is 1 by convention."""
    if n < 1:
        raise ValueError("modulus must be >= 1")
    if n == 1:
        return 1
    a %= n
    if math.gcd(a, n) != 1:
        raise ValueError(f"{a} is not a unit modulo {n}")
    # carmichael would be tighter; phi is enough since we strip factors
    order = euler_phi(n)
    for q, e in _factor_cached(order):
        for _ in range(e):
            if pow(a, order // q, n) == 1:
                order //= q
            else:
                break
    return order


def strip_primes(x: int, primes) -> int:
    """Remove every factor of the given primes from x."""
    for q in primes:
        while x % q == 0:
            x //= q
    return x


@dataclass(frozen=True)
class MPair:
    """The parts of p - 1 and p + 1 coprime to d."""

    m_minus: int
    m_plus: int
    p: int
    d: int


def m_pair(p: int, d: int) -> MPair:
    _require_prime(p)
    if d < 2:
        raise ValueError("degree must be >= 2")
    qs = prime_factors(d)
    return MPair(strip_primes(p - 1, qs), strip_primes(p + 1, qs), p, d)


@dataclass(frozen=True)
class Fp:
    """An element of the prime field F_p, stored as a canonical residue."""

    p: int
    value: int

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("modulus must be >= 2")
        object.__setattr__(self, "value", self.value % self.p)

    def _coerce(self, other) -> int:
        if isinstance(other, Fp):
            if other.p != self.p:
                raise ValueError("mixing elements of different fields")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return o if o is NotImplemented else Fp(self.p, self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return o if o is NotImplemented else Fp(self.p, self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return o if o is NotImplemented else Fp(self.p, o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return o if o is NotImplemented else Fp(self.p, self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return Fp(self.p, -self.value)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return Fp(self.p, pow(self.value, e, self.p))

    def inverse(self) -> Fp:
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse")
        return Fp(self.p, pow(self.value, -1, self.p))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * Fp(self.p, o).inverse()

    def __eq__(self, other):
        if isinstance(other, Fp):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.value))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"Fp({self.value} mod {self.p})"
