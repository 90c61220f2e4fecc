"""Map families on A^N(F_p) and P^N(F_p).

A map spec is an immutable description that can be reduced modulo any
prime.  Every spec evaluates a whole batch of points at once: affine
coordinates come in as a (dim, n) int64 array and leave the same way.
Projective evaluation homogenises the map with the extra coordinate placed
last, so the affine chart is {x_N = 1} and the hyperplane at infinity is
{x_N = 0}; there the map acts through its leading forms.

Vectorised arithmetic stays in int64, which limits evaluation primes to
p < 2**31.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .arith import Fp
from .space import (
    Space,
    affine_decode,
    affine_encode,
    normalize,
    point_coords,
    point_index,
    pow_mod,
)

MAX_VECTOR_PRIME = 2**31


class BadReduction(ValueError):
    """The map does not reduce to a well-defined morphism modulo p."""


def _check_prime(p: int) -> None:
    if p >= MAX_VECTOR_PRIME:
        raise ValueError(f"evaluation prime {p} exceeds the int64 kernel limit")


# -- scalar evaluation -------------------------------------------------------


def eval_power(d: int, z: Fp) -> Fp:
    return z**d


def eval_cheby(d: int, z: Fp) -> Fp:
    """T_d(z) for the monic Chebyshev polynomial with T_2 = z^2 - 2."""
    if d < 1:
        raise ValueError("Chebyshev degree must be >= 1")
    p, x = z.p, z.value
    lo, hi = 2 % p, x
    # invariant: (lo, hi) = (T_k(x), T_{k+1}(x)) for k = bits read so far
    for bit in bin(d)[2:]:
        if bit == "1":
            lo, hi = (lo * hi - x) % p, (hi * hi - 2) % p
        else:
            lo, hi = (lo * lo - 2) % p, (lo * hi - x) % p
    return Fp(p, lo)


def cheby_array(d: int, x: np.ndarray, p: int) -> np.ndarray:
    """Vectorised T_d(x) mod p, same halving scheme as :func:`eval_cheby`."""
    if d < 1:
        raise ValueError("Chebyshev degree must be >= 1")
    x = np.asarray(x, dtype=np.int64) % p
    lo = np.full_like(x, 2 % p)
    hi = x.copy()
    for bit in bin(d)[2:]:
        cross = (lo * hi - x) % p
        if bit == "1":
            lo, hi = cross, (hi * hi - 2) % p
        else:
            lo, hi = (lo * lo - 2) % p, cross
    return lo


# -- PGL matrices ------------------------------------------------------------


def _det_mod(rows: list[list[int]], p: int) -> int:
    m = [[v % p for v in r] for r in rows]
    n, det = len(m), 1
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det = det * m[c][c] % p
        inv = pow(m[c][c], -1, p)
        for r in range(c + 1, n):
            f = m[r][c] * inv % p
            if f:
                m[r] = [(a - f * b) % p for a, b in zip(m[r], m[c])]
    return det % p


def _inverse_mod(rows: list[list[int]], p: int) -> list[list[int]]:
    n = len(rows)
    aug = [[v % p for v in r] + [int(i == j) for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c]), None)
        if piv is None:
            raise BadReduction(f"matrix is singular modulo {p}")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = pow(aug[c][c], -1, p)
        aug[c] = [v * inv % p for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [(a - f * b) % p for a, b in zip(aug[r], aug[c])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class PglMatrix:
    """Integer (N+1)x(N+1) matrix acting on homogeneous column vectors.

    Entries are reduced modulo the evaluation prime; a matrix singular
    modulo p makes the conjugated map undefined there (bad reduction).
    """

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.entries)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError("PGL matrix must be square and nonempty")
        object.__setattr__(self, "entries", rows)

    @property
    def size(self) -> int:
        return len(self.entries)

    def det_mod(self, p: int) -> int:
        return _det_mod([list(r) for r in self.entries], p)

    def is_affine(self) -> bool:
        """True if the matrix fixes the hyperplane at infinity {x_N = 0}."""
        last = self.entries[-1]
        return all(v == 0 for v in last[:-1]) and last[-1] != 0

    def array(self, p: int) -> np.ndarray:
        if self.det_mod(p) == 0:
            raise BadReduction(f"PGL matrix is singular modulo {p}")
        return np.array(self.entries, dtype=np.int64) % p

    def inverse_array(self, p: int) -> np.ndarray:
        return np.array(_inverse_mod([list(r) for r in self.entries], p), dtype=np.int64)

    @classmethod
    def identity(cls, n: int) -> PglMatrix:
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))


def _matmul_mod(mat: np.ndarray, coords: np.ndarray, p: int) -> np.ndarray:
    out = np.zeros_like(coords)
    for i in range(mat.shape[0]):
        acc = np.zeros(coords.shape[1], dtype=np.int64)
        for j in range(mat.shape[1]):
            if mat[i, j]:
                acc = (acc + mat[i, j] * coords[j]) % p
        out[i] = acc
    return out


def random_unimodular(n: int, rng: random.Random, steps: int = 12, affine: bool = False) -> PglMatrix:
    """Random integer matrix with determinant +-1, so it is invertible mod every p.

    With ``affine=True`` the last row stays (0, ..., 0, 1) and the matrix acts
    on A^{n-1} by an affine change of variables.
    """
    m = [[int(i == j) for j in range(n)] for i in range(n)]
    rows = n - 1 if affine else n
    for _ in range(steps):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if n > 1 and i < rows:
            c = rng.choice((-2, -1, 1, 2))
            m[i] = [a + c * b for a, b in zip(m[i], m[j])]
        if rows > 1 and rng.random() < 0.3:
            a, b = rng.sample(range(rows), 2)
            m[a], m[b] = m[b], m[a]
    return PglMatrix(tuple(tuple(r) for r in m))


# -- map specs ---------------------------------------------------------------


class MapSpec:
    """Base class for self-maps of A^dim, homogenisable in degree ``degree``."""

    dim: int
    degree: int

    def affine_images(self, coords: np.ndarray, p: int) -> np.ndarray:
        raise NotImplementedError

    def leading_images(self, coords: np.ndarray, p: int) -> np.ndarray:
        """Degree-d leading forms applied to points of the hyperplane at infinity."""
        raise NotImplementedError

    def supports_affine(self) -> bool:
        return True

    def projective_images(self, coords: np.ndarray, p: int) -> np.ndarray:
        """Images of normalised homogeneous coordinates (dim + 1, n), re-normalised."""
        coords = np.asarray(coords, dtype=np.int64)
        out = np.empty_like(coords)
        chart = coords[-1] != 0
        if chart.any():
            out[:-1, chart] = self.affine_images(coords[:-1, chart], p)
            out[-1, chart] = 1
        inf = ~chart
        if inf.any():
            lead = self.leading_images(coords[:-1, inf], p) % p
            if not (lead != 0).any(axis=0).all():
                raise BadReduction(f"leading forms vanish at a point at infinity mod {p}")
            out[:-1, inf] = normalize(lead, p)
            out[-1, inf] = 0
        return out

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Power(MapSpec):
    degree: int
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("power degree must be >= 1")

    def affine_images(self, coords, p):
        _check_prime(p)
        return pow_mod(coords, self.degree, p)

    def leading_images(self, coords, p):
        return pow_mod(coords, self.degree, p)

    def to_json(self):
        return {"kind": "power", "d": self.degree, "N": 1}


@dataclass(frozen=True)
class Chebyshev(MapSpec):
    degree: int
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("Chebyshev degree must be >= 1")

    def affine_images(self, coords, p):
        _check_prime(p)
        return cheby_array(self.degree, coords[0], p).reshape(1, -1)

    def leading_images(self, coords, p):
        return pow_mod(coords, self.degree, p)

    def to_json(self):
        return {"kind": "cheby", "d": self.degree, "N": 1}


@dataclass(frozen=True)
class Poly(MapSpec):
    """Single-variable integer polynomial, coefficients lowest degree first."""

    coeffs: tuple[int, ...]
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def affine_images(self, coords, p):
        _check_prime(p)
        x = coords[0] % p
        acc = np.zeros_like(x)
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % p
        return acc.reshape(1, -1)

    def leading_images(self, coords, p):
        lead = self.coeffs[-1] % p
        if lead == 0:
            raise BadReduction(f"leading coefficient vanishes mod {p}")
        return lead * pow_mod(coords, self.degree, p) % p

    def to_json(self):
        return {"kind": "poly", "d": self.degree, "N": 1, "coeffs": list(self.coeffs)}


def random_poly(degree: int, seed: int, bound: int = 10**6) -> Poly:
    """Monic integer polynomial with seeded random lower coefficients."""
    rng = random.Random(seed)
    return Poly(tuple(rng.randint(-bound, bound) for _ in range(degree)) + (1,))


_TABLE_LOCK = threading.Lock()
_TABLES: dict[tuple[int, int, int], np.ndarray] = {}


def random_table(seed: int, p: int, k: int) -> np.ndarray:
    """Uniform image table on F_p^k, a pure function of (seed, p, k)."""
    key = (seed, p, k)
    table = _TABLES.get(key)
    if table is None:
        with _TABLE_LOCK:
            table = _TABLES.get(key)
            if table is None:
                gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, p, k])))
                table = gen.integers(0, p**k, size=p**k, dtype=np.int64)
                table.setflags(write=False)
                _TABLES[key] = table
    return table


@dataclass(frozen=True)
class RandomMap(MapSpec):
    """Uniformly random self-map of A^k, with a degree used for homogenising.

    On the hyperplane at infinity it acts by the d-th power map, i.e. it is
    treated as a degree-d map whose leading forms are monic monomials.
    """

    k: int
    seed: int
    degree: int = 2

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("random block dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.k

    def affine_images(self, coords, p):
        table = random_table(self.seed, p, self.k)
        return affine_decode(table[affine_encode(coords % p, p)], p, self.k)

    def leading_images(self, coords, p):
        return pow_mod(coords, self.degree, p)

    def to_json(self):
        return {"kind": "random", "d": self.degree, "N": self.k, "seed": self.seed}


@dataclass(frozen=True)
class Split(MapSpec):
    components: tuple[MapSpec, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("split map needs at least one component")
        degrees = {c.degree for c in comps}
        if len(degrees) != 1:
            raise ValueError(
                f"split components must share one degree, got {sorted(degrees)}; "
                "the homogenisation would not be a morphism"
            )
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return sum(c.dim for c in self.components)

    @property
    def degree(self) -> int:
        return self.components[0].degree

    def supports_affine(self) -> bool:
        return all(c.supports_affine() for c in self.components)

    def _apply(self, coords, p, method):
        out = np.empty_like(coords)
        start = 0
        for c in self.components:
            stop = start + c.dim
            out[start:stop] = getattr(c, method)(coords[start:stop], p)
            start = stop
        return out

    def affine_images(self, coords, p):
        return self._apply(coords, p, "affine_images")

    def leading_images(self, coords, p):
        return self._apply(coords, p, "leading_images")

    def to_json(self):
        return {
            "kind": "split",
            "d": self.degree,
            "N": self.dim,
            "components": [c.to_json() for c in self.components],
        }


@dataclass(frozen=True)
class Conjugated(MapSpec):
    """alpha^{-1} o inner o alpha for alpha in PGL_{N+1}."""

    inner: MapSpec
    alpha: PglMatrix

    def __post_init__(self):
        if self.alpha.size != self.inner.dim + 1:
            raise ValueError(
                f"alpha must be {self.inner.dim + 1}x{self.inner.dim + 1} for a map on A^{self.inner.dim}"
            )

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def degree(self) -> int:
        return self.inner.degree

    def supports_affine(self) -> bool:
        return self.alpha.is_affine() and self.inner.supports_affine()

    def affine_images(self, coords, p):
        if not self.alpha.is_affine():
            raise ValueError("conjugation by a non-affine alpha only acts on projective space")
        ones = np.ones((1, coords.shape[1]), dtype=np.int64)
        hom = np.vstack([coords % p, ones])
        moved = normalize(_matmul_mod(self.alpha.array(p), hom, p), p)
        image = self.inner.affine_images(moved[:-1], p)
        back = _matmul_mod(self.alpha.inverse_array(p), np.vstack([image, ones]), p)
        return normalize(back, p)[:-1]

    def leading_images(self, coords, p):
        raise NotImplementedError("conjugated maps evaluate projectively as a whole")

    def projective_images(self, coords, p):
        moved = normalize(_matmul_mod(self.alpha.array(p), coords, p), p)
        image = self.inner.projective_images(moved, p)
        return normalize(_matmul_mod(self.alpha.inverse_array(p), image, p), p)

    def to_json(self):
        return {
            "kind": "conj",
            "d": self.degree,
            "N": self.dim,
            "components": [self.inner.to_json()],
            "alpha": [list(r) for r in self.alpha.entries],
        }


@dataclass(frozen=True)
class BlackBox(MapSpec):
    """Opaque evaluator ``func(coords, p) -> coords``.

    With ``projective=False`` it receives and returns affine coordinates
    (dim, n).  With ``projective=True`` it receives normalised homogeneous
    coordinates (dim + 1, n) and may return any scaling of the images.
    Raising :class:`BadReduction` or ZeroDivisionError marks p as bad.
    """

    func: Callable[[np.ndarray, int], np.ndarray]
    dim: int
    degree: int
    projective: bool = False

    def supports_affine(self) -> bool:
        return not self.projective

    def affine_images(self, coords, p):
        if self.projective:
            raise ValueError("this black box only evaluates projectively")
        return np.asarray(self.func(coords, p), dtype=np.int64) % p

    def projective_images(self, coords, p):
        if not self.projective:
            return super().projective_images(coords, p)
        return normalize(np.asarray(self.func(coords, p), dtype=np.int64) % p, p)

    def leading_images(self, coords, p):
        return pow_mod(coords, self.degree, p)

    def to_json(self):
        raise TypeError("black-box maps have no JSON form")


def conjugate(spec: MapSpec, alpha: PglMatrix | Sequence[Sequence[int]]) -> Conjugated:
    if not isinstance(alpha, PglMatrix):
        alpha = PglMatrix(tuple(tuple(r) for r in alpha))
    if _int_det(alpha) == 0:
        raise ValueError("alpha is singular")
    return Conjugated(spec, alpha)


def _int_det(alpha: PglMatrix) -> int:
    from fractions import Fraction

    m = [[Fraction(v) for v in r] for r in alpha.entries]
    n, det = len(m), Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return int(det)


def split(*components: MapSpec) -> Split:
    return Split(tuple(components))


def power_n(d: int, n: int) -> Split:
    return Split(tuple(Power(d) for _ in range(n)))


# -- point-level helpers -----------------------------------------------------


@dataclass(frozen=True)
class PointIndex:
    space: Space
    index: int

    @property
    def coords(self) -> tuple[int, ...]:
        return point_coords(self.space, self.index)


def eval_affine(spec: MapSpec, pt, p: int):
    """Image of one affine point, given as coordinates or a PointIndex."""
    if isinstance(pt, PointIndex):
        if pt.space.projective or pt.space.dim != spec.dim or pt.space.p != p:
            raise ValueError(f"point of {pt.space} does not match a map on A^{spec.dim}(F_{p})")
        img = eval_affine(spec, pt.coords, p)
        return PointIndex(pt.space, point_index(pt.space, img))
    col = np.asarray(pt, dtype=np.int64).reshape(-1, 1) % p
    if col.shape[0] != spec.dim:
        raise ValueError(f"expected {spec.dim} coordinates, got {col.shape[0]}")
    return tuple(int(v) for v in spec.affine_images(col, p)[:, 0])


def eval_projective(spec: MapSpec, pt, p: int):
    """Image of one projective point; coordinates need not be normalised."""
    if isinstance(pt, PointIndex):
        if not pt.space.projective or pt.space.dim != spec.dim or pt.space.p != p:
            raise ValueError(f"point of {pt.space} does not match a map on P^{spec.dim}(F_{p})")
        img = eval_projective(spec, pt.coords, p)
        return PointIndex(pt.space, point_index(pt.space, img))
    col = np.asarray(pt, dtype=np.int64).reshape(-1, 1) % p
    if col.shape[0] != spec.dim + 1:
        raise ValueError(f"expected {spec.dim + 1} homogeneous coordinates, got {col.shape[0]}")
    return tuple(int(v) for v in spec.projective_images(normalize(col, p), p)[:, 0])


# -- serialisation -----------------------------------------------------------


def map_from_json(doc: dict | str) -> MapSpec:
    """Build a spec from the JSON schema documented in docs/formats.md."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    kind = doc.get("kind")
    comps = doc.get("components", [])
    if kind == "power":
        spec: MapSpec = Power(int(doc["d"]))
    elif kind == "cheby":
        spec = Chebyshev(int(doc["d"]))
    elif kind == "poly":
        spec = Poly(tuple(int(c) for c in doc["coeffs"]))
    elif kind == "random":
        spec = RandomMap(int(doc.get("N", 1)), int(doc.get("seed", 0)), int(doc.get("d", 2)))
    elif kind == "split":
        spec = Split(tuple(map_from_json(c) for c in comps))
    elif kind == "conj":
        if len(comps) != 1 or "alpha" not in doc:
            raise ValueError("conj needs exactly one component and an alpha matrix")
        spec = conjugate(map_from_json(comps[0]), doc["alpha"])
    else:
        raise ValueError(f"unknown map kind {kind!r}")
    if "N" in doc and int(doc["N"]) != spec.dim:
        raise ValueError(f"declared N={doc['N']} but the map has dimension {spec.dim}")
    if "d" in doc and int(doc["d"]) != spec.degree:
        raise ValueError(f"declared d={doc['d']} but the map has degree {spec.degree}")
    return spec


def map_to_json(spec: MapSpec) -> dict:
    return spec.to_json()
