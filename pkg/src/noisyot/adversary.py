"""Dishonest-receiver strategies and post-reveal guessing.

Every strategy acts on each incoming qubit separately. Its exact action on
a BB84 state is a list of :class:`~noisyot.channels.StoredRecord` branches
(:meth:`records`), which drives both the sampled storage phase and the
exact oracles.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from .attack_opt import AttackParams, symmetrize
from .channels import StoredRecord, apply, depolarize, measure_and_store, MeasurementFamily
from .distinguish import CqEnsemble, branch_pairs, nonuniformity, records_guess
from .qstate import BREIDBART_GUESS, Basis, basis_vectors, bb84_state, breidbart_vectors, kron_all

MAX_EXACT_SLOTS = 8
MAX_EXACT_ELL = 2
MAX_EXACT_ENTRIES = 1 << 22


class Strategy:
    """Base class; subclasses are frozen dataclasses describing one per-qubit attack."""

    kind = "abstract"
    reports_all_erased = False

    def records(self, rho: np.ndarray) -> list[StoredRecord]:
        raise NotImplementedError

    def slot(self, i: int) -> "Strategy":
        return self

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Store(Strategy):
    r: float
    kind = "store"

    def __post_init__(self):
        if not 0 <= self.r <= 1:
            raise ValueError(f"store: r must lie in [0, 1], got {self.r!r}")

    def records(self, rho):
        return [StoredRecord(None, apply(depolarize(self.r), rho), 1.0)]

    def describe(self):
        return f"store:r={self.r:g}"


@dataclass(frozen=True)
class Breidbart(Strategy):
    kind = "breidbart"

    def records(self, rho):
        return measure_and_store(MeasurementFamily.projective(breidbart_vectors()), None, rho)


@dataclass(frozen=True)
class BasisMeasure(Strategy):
    basis: Basis
    kind = "basis"

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis.parse(self.basis))
        if self.basis is Basis.BREIDBART:
            raise ValueError("use the breidbart strategy for the Breidbart basis")

    def records(self, rho):
        return measure_and_store(MeasurementFamily.projective(basis_vectors(self.basis)), None, rho)

    def describe(self):
        return f"basis:b={self.basis.value}"


@dataclass(frozen=True)
class Partial(Strategy):
    params: AttackParams
    r: float
    kind = "partial"

    def records(self, rho):
        return measure_and_store(symmetrize(self.params.operator()), depolarize(self.r), rho)

    def describe(self):
        p = self.params
        return f"partial:alpha={p.alpha!r},x={p.x!r},y={p.y!r},z={p.z!r},r={self.r!r}"


@dataclass(frozen=True)
class BeamSplit(Strategy):
    """Weak-pulse attack: multi-photon pulses (probability ``mu/2``) are read in both bases.

    Single-photon pulses are measured in the Breidbart basis. ``p_detect`` is
    the probability that Bob's detector fires; it only affects which slots
    he reports as erased in the practical protocol.
    """

    mu: float
    p_detect: float = 1.0
    kind = "beamsplit"

    def __post_init__(self):
        if not 0 <= self.mu <= 1:
            raise ValueError(f"beamsplit: mu must lie in [0, 1], got {self.mu!r}")
        if not 0 <= self.p_detect <= 1:
            raise ValueError(f"beamsplit: p_detect must lie in [0, 1], got {self.p_detect!r}")

    @property
    def multi_photon_probability(self) -> float:
        return self.mu / 2

    def records(self, rho):
        q = self.multi_photon_probability
        recs = []
        plus, times = basis_vectors(Basis.PLUS), basis_vectors(Basis.TIMES)
        for a, va in enumerate(plus):
            for b, vb in enumerate(times):
                w = q * float(np.vdot(va, rho @ va).real) * float(np.vdot(vb, rho @ vb).real)
                if w > 1e-14:
                    recs.append(StoredRecord(("multi", a, b), None, w))
        for rec in Breidbart().records(rho):
            recs.append(StoredRecord(("single", rec.outcome), None, (1 - q) * rec.weight))
        return recs

    def describe(self):
        return f"beamsplit:mu={self.mu:g},p_detect={self.p_detect:g}"


@dataclass(frozen=True)
class EraseAll(Strategy):
    """Claims every slot was lost; the practical protocol must abort."""

    kind = "erase-all"
    reports_all_erased = True

    def records(self, rho):
        return [StoredRecord("erased", None, 1.0)]


@dataclass(frozen=True)
class Hybrid(Strategy):
    """Different strategy per slot; the pattern repeats if shorter than the run."""

    strategies: tuple
    kind = "hybrid"

    def __post_init__(self):
        if not self.strategies:
            raise ValueError("hybrid strategy needs at least one entry")
        object.__setattr__(self, "strategies", tuple(self.strategies))

    def slot(self, i):
        return self.strategies[i % len(self.strategies)]

    def records(self, rho):
        raise TypeError("a hybrid strategy only acts through its per-slot entries")

    def describe(self):
        return "hybrid:" + ";".join(s.describe() for s in self.strategies)


def parse_strategy(text: str) -> Strategy:
    """Parse descriptors such as ``store:r=0.7``, ``partial:alpha=0.3,r=0.9``, ``beamsplit:mu=0.2``."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.lower()
    if kind == "hybrid":
        return Hybrid(tuple(parse_strategy(part) for part in rest.split(";") if part.strip()))
    args: dict[str, str] = {}
    positional = []
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if eq:
            args[key.strip().lower()] = value.strip()
        else:
            positional.append(key)

    def num(name, default=None):
        if name not in args:
            if default is None:
                raise ValueError(f"{kind}: missing parameter {name!r}")
            return default
        return float(args.pop(name))

    if kind == "store":
        strategy = Store(num("r"))
    elif kind == "breidbart":
        strategy = Breidbart()
    elif kind == "basis":
        b = args.pop("b", positional.pop(0) if positional else None)
        if b is None:
            raise ValueError("basis: missing basis, e.g. basis:b=+")
        strategy = BasisMeasure(Basis.parse(b))
    elif kind == "partial":
        alpha, r = num("alpha"), num("r")
        x = num("x", 1 / math.sqrt(2))
        y = num("y", 0.0)
        z = num("z", math.sqrt(max(1 - x * x - y * y, 0.0)))
        strategy = Partial(AttackParams(alpha, x, y, z), r)
    elif kind in ("beamsplit", "beam-split", "beam_split"):
        strategy = BeamSplit(num("mu"), num("p_detect", 1.0))
    elif kind in ("erase-all", "erase_all", "eraseall"):
        strategy = EraseAll()
    else:
        raise ValueError(f"unknown strategy {text!r}")
    if args or positional:
        raise ValueError(f"{kind}: unexpected parameters {sorted(args) + positional}")
    return strategy


@functools.lru_cache(maxsize=4096)
def bb84_records(strategy: Strategy, bit: int, basis: Basis) -> tuple:
    """Exact branches of ``strategy`` applied to the BB84 state ``(bit, basis)``."""
    return tuple(strategy.records(bb84_state(bit, basis)))


def slot_guess_probability(strategy: Strategy, basis: "Basis | str") -> float:
    basis = Basis.parse(basis)
    return records_guess(bb84_records(strategy, 0, basis), bb84_records(strategy, 1, basis))


def strategy_delta(strategy: Strategy) -> float:
    return math.sqrt(slot_guess_probability(strategy, Basis.PLUS)
                     * slot_guess_probability(strategy, Basis.TIMES))


@dataclass
class StoredLab:
    """Bob's lab after the storage phase: per-slot strategy and the branch that occurred."""

    slots: list
    observed: list
    multi_photon: list = field(default_factory=list)

    @classmethod
    def exact(cls, strategy: Strategy, n: int) -> "StoredLab":
        """A lab that only carries the strategy, for exact (non-sampled) oracles."""
        return cls([strategy.slot(i) for i in range(n)], [None] * n, [False] * n)

    @property
    def n(self) -> int:
        return len(self.slots)


def storage_phase(strategy: Strategy, qubits: Sequence[tuple[int, Basis]],
                  rng: np.random.Generator) -> StoredLab:
    """Sample one branch per incoming qubit ``(bit, basis)``; ``None`` marks a discarded slot."""
    n = len(qubits)
    slots = [strategy.slot(i) for i in range(n)]
    observed: list = [None] * n
    groups: dict = {}
    for i, qubit in enumerate(qubits):
        if qubit is not None:
            groups.setdefault((slots[i], int(qubit[0]), Basis.parse(qubit[1])), []).append(i)
    # one vectorized draw per distinct (strategy, bit, basis); fixed group order keeps runs reproducible
    for key, members in groups.items():
        recs = bb84_records(*key)
        weights = np.array([rec.weight for rec in recs])
        picks = rng.choice(len(recs), size=len(members), p=weights / weights.sum())
        for i, k in zip(members, picks):
            observed[i] = recs[k]
    multi = [rec is not None and isinstance(rec.outcome, tuple) and rec.outcome[0] == "multi"
             for rec in observed]
    return StoredLab(slots, observed, multi)


@functools.lru_cache(maxsize=4096)
def _guess_table(strategy: Strategy, basis: Basis) -> tuple[dict, float]:
    """Per outcome label: the probability that the Helstrom rule answers 0, and the slot's success."""
    r0, r1 = bb84_records(strategy, 0, basis), bb84_records(strategy, 1, basis)
    table = {}
    for label, a0, a1 in branch_pairs(r0, r1):
        if a0.shape == (1, 1):
            d = float((a0 - a1).real[0, 0])
            table[label] = 0.5 if abs(d) < 1e-14 else float(d > 0)
        else:
            w, v = np.linalg.eigh(a0 - a1)
            pos = v[:, w > 0]
            table[label] = pos @ pos.conj().T
    return table, records_guess(r0, r1)


def post_reveal_guess(lab: StoredLab, theta: Sequence, index_set: Sequence[int],
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Guess ``X`` on ``index_set`` once the bases are known.

    Returns the guessed bits and, per bit, the exact optimal success
    probability of the slot (their product is the exact probability of
    guessing the whole substring).
    """
    m = len(index_set)
    p0 = np.full(m, 0.5)
    probs = np.zeros(m)
    for j, i in enumerate(index_set):
        table, probs[j] = _guess_table(lab.slots[i], Basis.parse(theta[i]))
        rec = lab.observed[i]
        if rec is None:
            continue
        entry = table[rec.outcome]
        if rec.state is None:
            p0[j] = entry
        else:
            p0[j] = float(np.trace(entry @ rec.state).real)
    guesses = (rng.random(m) >= p0).astype(np.uint8)
    return guesses, probs


def choice_bit_cprime(strategy: Strategy, n: Optional[int] = None) -> Basis:
    """The basis Bob is effectively committed to: the one he guesses better overall.

    Ties resolve to ``+``. ``n`` is required for hybrid strategies.
    """
    slots = [strategy] if n is None else [strategy.slot(i) for i in range(n)]
    if isinstance(strategy, Hybrid) and n is None:
        raise ValueError("pass n for a hybrid strategy")
    log_plus = sum(math.log(slot_guess_probability(s, Basis.PLUS)) for s in slots)
    log_times = sum(math.log(slot_guess_probability(s, Basis.TIMES)) for s in slots)
    return Basis.PLUS if log_plus >= log_times - 1e-12 else Basis.TIMES


def beam_split_delta(mu: float) -> float:
    if not 0 <= mu <= 1:
        raise ValueError(f"mu must lie in [0, 1], got {mu!r}")
    return BREIDBART_GUESS + mu * (1 - 1 / math.sqrt(2)) / 4


def _slot_blocks(strategy: Strategy, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """Block-diagonal classical-quantum state of one slot for bit 0 and bit 1."""
    pairs = list(branch_pairs(bb84_records(strategy, 0, basis), bb84_records(strategy, 1, basis)))
    return block_diag(*(a0 for _, a0, _ in pairs)), block_diag(*(a1 for _, _, a1 in pairs))


def _affine_images(m: int, ell: int, rows: Sequence[int], offset: int) -> np.ndarray:
    xs = np.arange(1 << m)
    out = np.full(xs.shape, offset)
    for i, row in enumerate(rows):
        parity = np.zeros(xs.shape, dtype=np.int64)
        masked = xs & row
        while masked.any():
            parity ^= masked & 1
            masked >>= 1
        out ^= parity << i
    return out


def exact_string_distinguisher(lab: StoredLab, theta: Sequence, ell: int,
                               hash=None, cprime: Optional[Basis] = None) -> float:
    """Exact non-uniformity of the hashed string Bob is not committed to.

    With ``hash=None`` the value is averaged over the full affine hash family
    (the hash is public, so this is ``d(F(X)|F, rho_B)``). A specific
    :class:`~noisyot.hashing.AffineHash` on ``lab.n`` padded bits may be given
    instead.
    """
    if ell > MAX_EXACT_ELL:
        raise ValueError(f"exhaustive regime supports ell <= {MAX_EXACT_ELL}")
    n = lab.n
    if cprime is None:
        cprime = choice_bit_cprime(Hybrid(tuple(lab.slots)), n)
    target = cprime.other
    index_set = [i for i in range(n) if Basis.parse(theta[i]) is target]
    m = len(index_set)
    if m > MAX_EXACT_SLOTS:
        raise ValueError(f"exhaustive regime supports at most {MAX_EXACT_SLOTS} slots, got {m}")
    blocks = [_slot_blocks(lab.slots[i], target) for i in index_set]
    dim = int(np.prod([b[0].shape[0] for b in blocks])) if blocks else 1
    if (1 << m) * dim * dim > MAX_EXACT_ENTRIES or (1 << ell) * dim > 1024:
        raise ValueError(f"exact ensemble too large (dimension {dim}, {m} slots)")
    xs = range(1 << m)
    states = np.array([kron_all(blocks[j][(x >> j) & 1] for j in range(m)) for x in xs]) / (1 << m)

    def value(images):
        entries = []
        for s in range(1 << ell):
            mask = images == s
            p = float(mask.sum()) / (1 << m)
            rho = states[mask].sum(axis=0) / p if p > 0 else np.eye(dim) / dim
            entries.append((s, p, rho))
        return nonuniformity(CqEnsemble(tuple(entries)), 1 << ell)

    if hash is not None:
        if hash.n != n or hash.ell != ell:
            raise ValueError("hash dimensions do not match the lab")
        # X restricted to the index set is zero padded, so only the first m columns act
        return value(_affine_images(m, ell, _pad_rows(hash.rows, m), hash.offset))

    total, count = 0.0, 0
    for rows in np.ndindex(*([1 << m] * ell)):
        for offset in range(1 << ell):
            total += value(_affine_images(m, ell, rows, offset))
            count += 1
    return total / count


def _pad_rows(rows, m):
    return [row & ((1 << m) - 1) for row in rows]


def exact_delta_sec(strategy: Strategy, n: int, ell: int) -> float:
    """Exact sender-security distance averaged over all ``2**n`` basis strings."""
    import itertools

    lab = StoredLab.exact(strategy, n)
    cprime = choice_bit_cprime(Hybrid(tuple(lab.slots)), n)
    cache: dict = {}
    total = 0.0
    for theta in itertools.product((Basis.PLUS, Basis.TIMES), repeat=n):
        key = tuple(lab.slots[i] for i in range(n) if theta[i] is cprime.other)
        if key not in cache:
            cache[key] = exact_string_distinguisher(lab, theta, ell, cprime=cprime)
        total += cache[key]
    return total / (1 << n)


def intermediate_bound(strategy: Strategy, n: int, ell: int) -> float:
    """``2**(ell/2 - 1) * sqrt(2**-n * prod_i (1 + P_g,i))`` on the non-committed basis."""
    cprime = choice_bit_cprime(Hybrid(tuple(strategy.slot(i) for i in range(n))), n)
    prod = 1.0
    for i in range(n):
        prod *= (1 + slot_guess_probability(strategy.slot(i), cprime.other)) / 2
    return 2.0 ** (ell / 2 - 1) * math.sqrt(prod)
