"""Affine GF(2) hash functions for privacy amplification.

Bitstrings are ``uint8`` numpy arrays of 0/1. Internally a string of
length ``n`` is packed into a Python int with string index ``j`` at bit
``j`` (least significant first); matrix rows are stored the same way.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


def as_bits(x) -> np.ndarray:
    bits = np.asarray(x, dtype=np.uint8).reshape(-1)
    if bits.size and bits.max() > 1:
        raise ValueError("bitstrings may only contain 0 and 1")
    return bits


def bits_to_int(x) -> int:
    bits = as_bits(x)
    if bits.size == 0:
        return 0
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def int_to_bits(value: int, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(value.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].copy()


def bits_to_hex(x) -> str:
    bits = as_bits(x)
    return format(bits_to_int(bits), "x").zfill(max(1, (bits.size + 3) // 4))


def hex_to_bits(text: str, n: int) -> np.ndarray:
    return int_to_bits(int(text, 16), n)


@dataclass(frozen=True)
class AffineHash:
    """``x -> M x + b`` over GF(2), ``M`` an ``ell x n`` matrix held as packed rows."""

    n: int
    ell: int
    rows: tuple[int, ...]
    offset: int

    def __post_init__(self):
        if not 1 <= self.ell <= self.n:
            raise ValueError(f"need 1 <= ell <= n, got ell={self.ell}, n={self.n}")
        if len(self.rows) != self.ell:
            raise ValueError("matrix must have exactly ell rows")
        if any(row >> self.n for row in self.rows) or self.offset >> self.ell:
            raise ValueError("matrix rows or offset exceed the declared dimensions")

    @classmethod
    def from_matrix(cls, matrix, offset) -> "AffineHash":
        m = np.asarray(matrix, dtype=np.uint8)
        if m.ndim != 2:
            raise ValueError("hash matrix must be two-dimensional")
        return cls(m.shape[1], m.shape[0], tuple(bits_to_int(row) for row in m), bits_to_int(offset))

    @classmethod
    def identity(cls, n: int) -> "AffineHash":
        return cls(n, n, tuple(1 << j for j in range(n)), 0)

    def matrix(self) -> np.ndarray:
        return np.array([int_to_bits(row, self.n) for row in self.rows], dtype=np.uint8)

    def eval_int(self, x: int) -> int:
        out = self.offset
        for i, row in enumerate(self.rows):
            out ^= ((row & x).bit_count() & 1) << i
        return out

    def __call__(self, x) -> np.ndarray:
        bits = as_bits(x)
        if bits.size != self.n:
            raise ValueError(f"hash expects {self.n} input bits, got {bits.size}")
        return int_to_bits(self.eval_int(bits_to_int(bits)), self.ell)

    def rank(self) -> int:
        return gf2_rank(self.matrix())

    def to_dict(self) -> dict:
        width = max(1, (self.n + 3) // 4)
        return {"n": self.n, "ell": self.ell,
                "rows": [format(row, "x").zfill(width) for row in self.rows],
                "offset": format(self.offset, "x").zfill(max(1, (self.ell + 3) // 4))}

    @classmethod
    def from_dict(cls, data: dict) -> "AffineHash":
        return cls(int(data["n"]), int(data["ell"]), tuple(int(row, 16) for row in data["rows"]),
                   int(data["offset"], 16))


def evaluate(h: AffineHash, x) -> np.ndarray:
    return h(x)


def sample_hash(n: int, ell: int, rng: np.random.Generator) -> AffineHash:
    """Uniformly random affine map ``{0,1}^n -> {0,1}^ell``."""
    if not 1 <= ell <= n:
        raise ValueError(f"need 1 <= ell <= n, got ell={ell}, n={n}")
    bits = rng.integers(0, 2, size=(ell + 1, n), dtype=np.uint8)
    return AffineHash(n, ell, tuple(bits_to_int(row) for row in bits[:ell]), bits_to_int(bits[ell, :ell]))


def pad_input(x, n: int) -> np.ndarray:
    """Zero-extend ``x`` to ``n`` bits."""
    bits = as_bits(x)
    if bits.size > n:
        raise ValueError(f"cannot pad {bits.size} bits down to {n}")
    out = np.zeros(n, dtype=np.uint8)
    out[:bits.size] = bits
    return out


def all_affine_hashes(n: int, ell: int):
    """Every affine map ``{0,1}^n -> {0,1}^ell`` (``2**((n + 1) * ell)`` of them)."""
    for rows in itertools.product(range(1 << n), repeat=ell):
        for offset in range(1 << ell):
            yield AffineHash(n, ell, rows, offset)


def gf2_rank(matrix) -> int:
    m = np.array(matrix, dtype=np.uint8) % 2
    rank = 0
    rows, cols = m.shape
    for col in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank
