"""Dense integer indexing of A^N(F_p) and P^N(F_p).

Affine points are encoded by their base-p digits, coordinate 0 least
significant.  Projective points are normalised so the last nonzero
coordinate equals 1.  Grouping them by the position D of that coordinate
splits P^N into blocks isomorphic to A^0, A^1, ..., A^N; block D starts at
offset (p^D - 1)/(p - 1) and is indexed by the affine index of its first D
coordinates.  The indices below offset(N) are thus exactly the hyperplane at
infinity, itself P^{N-1} in the same encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AFFINE = "affine"
PROJECTIVE = "projective"


@dataclass(frozen=True)
class Space:
    kind: str
    dim: int
    p: int

    def __post_init__(self):
        if self.kind not in (AFFINE, PROJECTIVE):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.dim < 0:
            raise ValueError("dimension must be >= 0")
        if self.p < 2:
            raise ValueError("p must be >= 2")

    @property
    def projective(self) -> bool:
        return self.kind == PROJECTIVE

    @property
    def size(self) -> int:
        if self.projective:
            return block_offset(self.p, self.dim + 1)
        return self.p**self.dim

    @property
    def ncoords(self) -> int:
        """Number of stored coordinates per point (homogeneous for P^N)."""
        return self.dim + 1 if self.projective else self.dim

    def __str__(self):
        letter = "P" if self.projective else "A"
        return f"{letter}^{self.dim}(F_{self.p})"


def block_offset(p: int, D: int) -> int:
    """Number of projective points whose last nonzero coordinate sits before D."""
    return (p**D - 1) // (p - 1)


def affine_decode(index: np.ndarray, p: int, dim: int) -> np.ndarray:
    """(dim, n) coordinate array of the given affine indices."""
    index = np.asarray(index, dtype=np.int64)
    coords = np.empty((dim, index.size), dtype=np.int64)
    rest = index.copy()
    for i in range(dim):
        coords[i] = rest % p
        rest //= p
    return coords


def affine_encode(coords: np.ndarray, p: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.int64)
    out = np.zeros(coords.shape[1], dtype=np.int64)
    for i in range(coords.shape[0] - 1, -1, -1):
        out = out * p + coords[i]
    return out


def projective_decode(index: np.ndarray, p: int, dim: int) -> np.ndarray:
    """(dim + 1, n) normalised homogeneous coordinates."""
    index = np.asarray(index, dtype=np.int64)
    coords = np.zeros((dim + 1, index.size), dtype=np.int64)
    offsets = np.array([block_offset(p, D) for D in range(dim + 2)], dtype=np.int64)
    block = np.searchsorted(offsets, index, side="right") - 1
    local = index - offsets[block]
    for D in range(dim + 1):
        sel = block == D
        if not sel.any():
            continue
        if D:
            coords[:D, sel] = affine_decode(local[sel], p, D)
        coords[D, sel] = 1
    return coords


def normalize(coords: np.ndarray, p: int) -> np.ndarray:
    """Scale homogeneous coordinates so the last nonzero entry is 1.

    Raises ValueError if some column is identically zero.
    """
    coords = np.asarray(coords, dtype=np.int64) % p
    nz = coords != 0
    if not nz.any(axis=0).all():
        raise ValueError("zero vector is not a projective point")
    last = coords.shape[0] - 1 - np.argmax(nz[::-1], axis=0)
    lead = coords[last, np.arange(coords.shape[1])]
    inv = inverse_mod(lead, p)
    return coords * inv % p


def projective_encode(coords: np.ndarray, p: int) -> np.ndarray:
    """Index of (not necessarily normalised) homogeneous coordinates."""
    coords = normalize(coords, p)
    nrows = coords.shape[0]
    nz = coords != 0
    last = nrows - 1 - np.argmax(nz[::-1], axis=0)
    out = np.empty(coords.shape[1], dtype=np.int64)
    for D in range(nrows):
        sel = last == D
        if not sel.any():
            continue
        local = affine_encode(coords[:D, sel], p) if D else 0
        out[sel] = block_offset(p, D) + local
    return out


def decode(space: Space, index) -> np.ndarray:
    if space.projective:
        return projective_decode(index, space.p, space.dim)
    return affine_decode(index, space.p, space.dim)


def encode(space: Space, coords) -> np.ndarray:
    if space.projective:
        return projective_encode(coords, space.p)
    return affine_encode(coords, space.p)


def point_index(space: Space, point) -> int:
    """Index of a single point given as a coordinate sequence."""
    col = np.asarray(point, dtype=np.int64).reshape(-1, 1)
    if col.shape[0] != space.ncoords:
        raise ValueError(f"{space} points have {space.ncoords} coordinates")
    return int(encode(space, col % space.p)[0])


def point_coords(space: Space, index: int) -> tuple[int, ...]:
    if not 0 <= index < space.size:
        raise IndexError(f"index {index} outside {space}")
    return tuple(int(c) for c in decode(space, np.array([index]))[:, 0])


def pow_mod(x: np.ndarray, e: int, p: int) -> np.ndarray:
    """Elementwise x**e mod p by square-and-multiply; needs p < 2**31."""
    x = np.asarray(x, dtype=np.int64) % p
    result = np.ones_like(x)
    base = x.copy()
    while e:
        if e & 1:
            result = result * base % p
        e >>= 1
        if e:
            base = base * base % p
    return result


def inverse_mod(x: np.ndarray, p: int) -> np.ndarray:
    """Elementwise inverse mod prime p (0 maps to 0)."""
    x = np.asarray(x, dtype=np.int64) % p
    return pow_mod(x, p - 2, p) * (x != 0)
