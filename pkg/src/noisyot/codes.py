"""Block-wise linear codes with syndrome decoding.

A string is split into ``n_block``-bit blocks (zero padded at the end);
each block's syndrome ``H x`` is sent, and the receiver corrects with a
coset-leader table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hashing import as_bits, bits_to_hex, gf2_rank, hex_to_bits

MAX_SYNDROME_BITS = 16


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _syndrome_index(syn_bits: np.ndarray) -> np.ndarray:
    """Read syndrome rows as integers, first parity-check row most significant."""
    weights = 1 << np.arange(syn_bits.shape[-1] - 1, -1, -1)
    return syn_bits.astype(np.int64) @ weights


@dataclass(frozen=True)
class LinearCode:
    parity_check: np.ndarray
    name: str = "custom"
    leaders: np.ndarray = field(init=False, repr=False, compare=False)
    t: int = field(init=False)

    def __post_init__(self):
        H = np.asarray(self.parity_check, dtype=np.uint8) % 2
        if H.ndim != 2 or H.shape[0] >= H.shape[1]:
            raise ValueError("parity-check matrix must be (n - k) x n with n - k < n")
        if H.shape[0] > MAX_SYNDROME_BITS:
            raise ValueError(f"coset-leader table limited to {MAX_SYNDROME_BITS} syndrome bits")
        if gf2_rank(H) != H.shape[0]:
            raise ValueError("parity-check matrix must have full row rank")
        H.setflags(write=False)
        object.__setattr__(self, "parity_check", H)
        leaders, t = _coset_leaders(H)
        object.__setattr__(self, "leaders", leaders)
        object.__setattr__(self, "t", t)

    @property
    def n_block(self) -> int:
        return self.parity_check.shape[1]

    @property
    def k_block(self) -> int:
        return self.n_block - self.parity_check.shape[0]

    @property
    def syndrome_bits_per_block(self) -> int:
        return self.parity_check.shape[0]

    @property
    def rate(self) -> float:
        return self.k_block / self.n_block

    def n_blocks(self, length: int) -> int:
        return -(-length // self.n_block)

    def syndrome_length(self, length: int) -> int:
        return self.n_blocks(length) * self.syndrome_bits_per_block


def _coset_leaders(H: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-weight leader per syndrome, and the guaranteed correction radius ``t``."""
    r, n = H.shape
    leaders = np.zeros((1 << r, n), dtype=np.uint8)
    filled = np.zeros(1 << r, dtype=bool)
    filled[0] = True
    t = None
    for weight in range(1, n + 1):
        collision = False
        for support in itertools.combinations(range(n), weight):
            e = np.zeros(n, dtype=np.uint8)
            e[list(support)] = 1
            s = int(_syndrome_index(H @ e % 2))
            if filled[s]:
                collision = True
            else:
                leaders[s] = e
                filled[s] = True
        if collision and t is None:
            t = weight - 1
        if filled.all() and t is not None:
            break
    leaders.setflags(write=False)
    return leaders, (t if t is not None else n)


def hamming_parity_check(r: int = 3) -> np.ndarray:
    """Hamming code parity check: column ``j`` is ``j + 1`` in binary, MSB in row 0."""
    n = (1 << r) - 1
    cols = np.arange(1, n + 1)
    return np.array([(cols >> (r - 1 - i)) & 1 for i in range(r)], dtype=np.uint8)


def hamming74() -> LinearCode:
    return LinearCode(hamming_parity_check(3), name="hamming(7,4)")


def load_parity_check(path: "str | Path") -> LinearCode:
    """Read a code from a text file with one parity-check row of 0/1 per line.

    Blank lines and ``#`` comments are ignored; digits may be separated by
    whitespace or commas.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        digits = line.split() if " " in line else list(line)
        rows.append([int(d) for d in digits])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: rows must be non-empty and of equal length")
    return LinearCode(np.array(rows, dtype=np.uint8), name=Path(path).stem)


@dataclass(frozen=True)
class SyndromeBundle:
    bits: np.ndarray
    total_bits: int
    length: int

    def to_dict(self) -> dict:
        return {"bits": bits_to_hex(self.bits), "total_bits": self.total_bits, "length": self.length}

    @classmethod
    def from_dict(cls, data: dict) -> "SyndromeBundle":
        total = int(data["total_bits"])
        return cls(hex_to_bits(data["bits"], total), total, int(data["length"]))


def _blocks(code: LinearCode, x: np.ndarray) -> np.ndarray:
    padded = np.zeros(code.n_blocks(x.size) * code.n_block, dtype=np.uint8)
    padded[:x.size] = x
    return padded.reshape(-1, code.n_block)


def syndrome(code: LinearCode, x) -> SyndromeBundle:
    x = as_bits(x)
    syn = (_blocks(code, x).astype(np.int64) @ code.parity_check.T.astype(np.int64)) % 2
    bits = syn.astype(np.uint8).reshape(-1)
    return SyndromeBundle(bits, bits.size, x.size)


def decode(code: LinearCode, x_noisy, syn_ref: SyndromeBundle) -> np.ndarray:
    """Correct ``x_noisy`` towards the string whose syndrome is ``syn_ref``.

    Exact whenever every block carries at most ``code.t`` errors; beyond that
    the nearest coset leader is applied and the result may be wrong.
    """
    x_noisy = as_bits(x_noisy)
    if syn_ref.length != x_noisy.size:
        raise ValueError("syndrome was computed for a string of different length")
    blocks = _blocks(code, x_noisy)
    own = (blocks.astype(np.int64) @ code.parity_check.T.astype(np.int64)) % 2
    diff = own ^ syn_ref.bits.reshape(own.shape)
    corrected = blocks ^ code.leaders[_syndrome_index(diff)]
    return corrected.reshape(-1)[:x_noisy.size].copy()


def syndrome_bits_asymptotic(m: float, p_error: float) -> float:
    """Asymptotic syndrome length ``h(p_error) * m`` of a capacity-achieving code."""
    if not 0 <= p_error < 0.5:
        raise ValueError(f"p_error must lie in [0, 1/2), got {p_error!r}")
    return binary_entropy(p_error) * m


def block_failure_probability(code: LinearCode, p_error: float, length: int | None = None) -> float:
    """Probability that a block carries an error pattern outside the coset-leader set.

    ``length`` below ``n_block`` handles the zero-padded last block, where
    only the first ``length`` positions can be hit.
    """
    n = code.n_block
    length = n if length is None else length
    if not 0 < length <= n:
        raise ValueError(f"block length must lie in [1, {n}], got {length}")
    inside = ~code.leaders[:, length:].any(axis=1)
    weights = code.leaders[inside].sum(axis=1)
    counts = np.bincount(weights, minlength=length + 1)
    ok = sum(int(c) * p_error ** w * (1 - p_error) ** (length - w) for w, c in enumerate(counts))
    return 1 - ok


def decode_success_probability(code: LinearCode, length: int, p_error: float) -> float:
    """Probability that a ``length``-bit string through a BSC is decoded exactly."""
    if length == 0:
        return 1.0
    full, rest = divmod(length, code.n_block)
    out = (1 - block_failure_probability(code, p_error)) ** full
    if rest:
        out *= 1 - block_failure_probability(code, p_error, rest)
    return out
