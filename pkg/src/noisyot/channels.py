"""Single-qubit CPTP maps and measure-then-store super-operators.

Bob's storage is modelled as an optional partial measurement followed by
noise. Anything that turns an input state into a list of weighted
:class:`StoredRecord` branches counts as a *storage map*; see
:func:`as_storage`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

from .qstate import I2, X, Y, Z, check_density, eigvalsh, projector

CHANNEL_ATOL = 1e-10
# branches lighter than this are dropped before normalizing the post-state
PRUNE_WEIGHT = 1e-14


def _completeness_error(ops) -> float:
    total = sum(k.conj().T @ k for k in ops)
    return float(np.abs(total - np.eye(total.shape[0])).max())


def choi_matrix(ops) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) K(|i><j|)`` of a Kraus list."""
    d = ops[0].shape[1]
    choi = np.zeros((d * ops[0].shape[0], d * ops[0].shape[0]), dtype=complex)
    for i in range(d):
        for j in range(d):
            eij = np.zeros((d, d), dtype=complex)
            eij[i, j] = 1
            choi += np.kron(eij, sum(k @ eij @ k.conj().T for k in ops))
    return choi


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        if any(k.shape != (2, 2) for k in ops):
            raise ValueError("Kraus operators must be 2x2")
        err = _completeness_error(ops)
        if err > CHANNEL_ATOL:
            raise ValueError(f"Kraus operators are not complete (error {err:.3g})")
        if eigvalsh(choi_matrix(ops)).min() < -CHANNEL_ATOL:
            raise ValueError("channel is not completely positive")
        object.__setattr__(self, "operators", ops)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """The composition ``other o self`` (self acts first)."""
        return KrausChannel(tuple(b @ a for b in other.operators for a in self.operators))


def apply(ch: KrausChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return sum(k @ rho @ k.conj().T for k in ch.operators)


def identity_channel() -> KrausChannel:
    return KrausChannel((I2,))


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),))


def depolarize(r: float) -> KrausChannel:
    """Depolarizing channel ``rho -> r rho + (1 - r) I/2``; ``r`` is the survival probability."""
    if not 0 <= r <= 1:
        raise ValueError(f"depolarizing parameter must lie in [0, 1], got {r!r}")
    return KrausChannel((
        np.sqrt((1 + 3 * r) / 4) * I2,
        np.sqrt((1 - r) / 4) * X,
        np.sqrt((1 - r) / 4) * Y,
        np.sqrt((1 - r) / 4) * Z,
    ))


def bloch_map(ch: KrausChannel) -> tuple[np.ndarray, np.ndarray]:
    """Affine Bloch-sphere action ``v -> T v + t`` of a channel."""
    paulis = (X, Y, Z)
    t = np.array([np.trace(p @ apply(ch, I2 / 2)).real for p in paulis])
    T = np.array([[np.trace(p @ apply(ch, q / 2)).real for q in paulis] for p in paulis])
    return T, t


@dataclass(frozen=True)
class MeasurementFamily:
    """Labelled measurement operators ``F_k`` with ``sum F_k^dag F_k = I``."""

    operators: tuple

    def __post_init__(self):
        ops = tuple((label, np.asarray(f, dtype=complex)) for label, f in self.operators)
        labels = [label for label, _ in ops]
        if len(set(labels)) != len(labels):
            raise ValueError("measurement outcome labels must be distinct")
        err = _completeness_error([f for _, f in ops])
        if err > CHANNEL_ATOL:
            raise ValueError(f"measurement operators are not complete (error {err:.3g})")
        object.__setattr__(self, "operators", ops)

    @classmethod
    def from_operators(cls, ops: Sequence[np.ndarray]) -> "MeasurementFamily":
        return cls(tuple(enumerate(ops)))

    @classmethod
    def projective(cls, kets: Sequence[np.ndarray]) -> "MeasurementFamily":
        return cls(tuple((i, projector(v)) for i, v in enumerate(kets)))

    @property
    def labels(self) -> list:
        return [label for label, _ in self.operators]

    def mix(self, other: "MeasurementFamily", weight: float) -> "MeasurementFamily":
        """Use ``self`` with probability ``weight`` and ``other`` otherwise."""
        a = tuple((("a", k), np.sqrt(weight) * f) for k, f in self.operators)
        b = tuple((("b", k), np.sqrt(1 - weight) * f) for k, f in other.operators)
        return MeasurementFamily(a + b)

    def conjugated(self, g: np.ndarray) -> "MeasurementFamily":
        return MeasurementFamily(tuple((k, g @ f @ g.conj().T) for k, f in self.operators))


@dataclass(frozen=True)
class StoredRecord:
    """One measurement branch: classical outcome, stored state (or none), probability."""

    outcome: Optional[Hashable]
    state: Optional[np.ndarray]
    weight: float


@dataclass(frozen=True)
class ErasureFlag:
    erased: bool
    state: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.erased and self.state is not None:
            raise ValueError("an erased slot carries no state")


def erase(p: float, rho: np.ndarray, rng: np.random.Generator) -> ErasureFlag:
    if not 0 <= p <= 1:
        raise ValueError(f"erasure probability must lie in [0, 1], got {p!r}")
    if rng.random() < p:
        return ErasureFlag(True)
    return ErasureFlag(False, rho)


def erasure_records(p: float, rho: np.ndarray) -> list[StoredRecord]:
    """Exact branch list of the flagged erasure model (erased slots hold nothing)."""
    records = []
    if p > PRUNE_WEIGHT:
        records.append(StoredRecord("erased", None, p))
    if 1 - p > PRUNE_WEIGHT:
        records.append(StoredRecord("kept", np.asarray(rho, dtype=complex), 1 - p))
    return records


def measure_and_store(fam: MeasurementFamily, noise: Optional[KrausChannel],
                      rho: np.ndarray) -> list[StoredRecord]:
    """Measure ``rho`` with ``fam``, then push each post-measurement state through ``noise``.

    With ``noise=None`` the measurement is destructive and only the
    classical outcome is kept.
    """
    rho = np.asarray(rho, dtype=complex)
    records = []
    for label, f in fam.operators:
        unnorm = f @ rho @ f.conj().T
        weight = float(np.trace(unnorm).real)
        if weight < PRUNE_WEIGHT:
            continue
        if noise is None:
            records.append(StoredRecord(label, None, weight))
        else:
            records.append(StoredRecord(label, apply(noise, unnorm / weight), weight))
    return records


StorageMap = Callable[[np.ndarray], list]


def as_storage(storage) -> StorageMap:
    """Normalize the accepted storage descriptions to a state -> records callable.

    Accepts a :class:`KrausChannel` (pure storage), a
    :class:`MeasurementFamily` (destructive measurement), a
    ``(MeasurementFamily, KrausChannel | None)`` pair, or any callable.
    """
    if isinstance(storage, KrausChannel):
        return lambda rho: [StoredRecord(None, apply(storage, rho), 1.0)]
    if isinstance(storage, MeasurementFamily):
        return lambda rho: measure_and_store(storage, None, rho)
    if isinstance(storage, tuple) and len(storage) == 2 and isinstance(storage[0], MeasurementFamily):
        fam, noise = storage
        return lambda rho: measure_and_store(fam, noise, rho)
    if callable(storage):
        return storage
    raise TypeError(f"cannot interpret {storage!r} as a storage map")


def check_records(records: Sequence[StoredRecord], atol: float = CHANNEL_ATOL) -> None:
    total = sum(rec.weight for rec in records)
    if abs(total - 1) > atol:
        raise ValueError(f"branch weights sum to {total!r}")
    for rec in records:
        if rec.state is not None:
            check_density(rec.state, atol)
