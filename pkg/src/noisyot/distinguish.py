"""State discrimination: Helstrom values, dual certificates, non-uniformity.

Guessing probabilities here always refer to a uniformly distributed bit
(or bit string), which is the only setting the protocols need.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import StoredRecord, as_storage
from .qstate import ATOL_LOOSE, Basis, bb84_state, eigvalsh, kron_all, trace_norm

MAX_LABEL_BITS = 4
MAX_JOINT_DIM = 1024


def helstrom(rho0: np.ndarray, rho1: np.ndarray) -> float:
    """Optimal probability of telling ``rho0`` from ``rho1`` under equal priors."""
    return 0.5 + 0.25 * trace_norm(np.asarray(rho0) - np.asarray(rho1))


@dataclass(frozen=True)
class DualCertificate:
    """A feasible point ``Q >= rho_x`` of the discrimination dual, with its objective value."""

    Q: np.ndarray
    value: float
    margin: float


def _certify(Q: np.ndarray, hypotheses) -> DualCertificate:
    hypotheses = list(hypotheses)
    margin = min(float(eigvalsh(Q - rho).min()) for rho in hypotheses)
    if margin < -ATOL_LOOSE:
        raise ArithmeticError(f"dual certificate infeasible (margin {margin:.3g})")
    return DualCertificate(Q, float(np.trace(Q).real) / len(hypotheses), margin)


def dual_certificate(rho0: np.ndarray, rho1: np.ndarray) -> DualCertificate:
    """Analytic optimal dual point ``Q = (rho0 + rho1)/2 + |rho0 - rho1|/2``."""
    rho0 = np.asarray(rho0, dtype=complex)
    rho1 = np.asarray(rho1, dtype=complex)
    w, v = np.linalg.eigh(rho0 - rho1)
    absdiff = (v * np.abs(w)) @ v.conj().T
    cert = _certify((rho0 + rho1) / 2 + absdiff / 2, (rho0, rho1))
    if abs(cert.value - helstrom(rho0, rho1)) > ATOL_LOOSE:
        raise ArithmeticError("dual certificate value disagrees with the Helstrom value")
    return cert


def tensor_certificate(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> DualCertificate:
    """Tensor-product dual point for guessing a whole string encoded bitwise.

    The single-bit optimal points are multiplied together and feasibility is
    checked against every one of the ``2**n`` product hypotheses.
    """
    singles = [dual_certificate(r0, r1) for r0, r1 in pairs]
    Q = kron_all(c.Q for c in singles)
    hypotheses = (kron_all(pairs[i][b] for i, b in enumerate(bits))
                  for bits in itertools.product((0, 1), repeat=len(pairs)))
    return _certify(Q, hypotheses)


@dataclass(frozen=True)
class CqEnsemble:
    """Classical-quantum ensemble: ``(label, probability, state)`` triples."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((label, float(p), np.asarray(rho, dtype=complex))
                        for label, p, rho in self.entries)
        if not entries:
            raise ValueError("empty ensemble")
        total = sum(p for _, p, _ in entries)
        if abs(total - 1) > 1e-10:
            raise ValueError(f"ensemble probabilities sum to {total!r}")
        if any(p < -1e-12 for _, p, _ in entries):
            raise ValueError("negative probability in ensemble")
        dims = {rho.shape for _, _, rho in entries}
        if len(dims) != 1:
            raise ValueError("all ensemble states must share one dimension")
        labels = [label for label, _, _ in entries]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels in ensemble")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def binary(cls, rho0: np.ndarray, rho1: np.ndarray, p0: float = 0.5) -> "CqEnsemble":
        return cls(((0, p0, rho0), (1, 1 - p0, rho1)))

    @property
    def dim(self) -> int:
        return self.entries[0][2].shape[0]

    def marginal(self) -> np.ndarray:
        return sum(p * rho for _, p, rho in self.entries)

    def tensor(self, side: np.ndarray) -> "CqEnsemble":
        """Attach an independent register ``side`` to every branch."""
        return CqEnsemble(tuple((x, p, np.kron(rho, side)) for x, p, rho in self.entries))


def product_guess(ensembles: Sequence[CqEnsemble]) -> float:
    """Exact probability of guessing a uniform string whose bits are encoded independently."""
    out = 1.0
    for ens in ensembles:
        if len(ens.entries) != 2 or any(abs(p - 0.5) > 1e-10 for _, p, _ in ens.entries):
            raise ValueError("product_guess expects uniform binary ensembles")
        (_, _, r0), (_, _, r1) = ens.entries
        out *= helstrom(r0, r1)
    return out


def nonuniformity(ens: CqEnsemble, alphabet_size: int | None = None) -> float:
    """Half the trace distance between the ensemble and its uniform-label ideal.

    The cq state and its ideal are built as explicit block matrices over the
    whole label alphabet, so ``alphabet_size * dim`` is capped at
    ``MAX_JOINT_DIM``. Labels missing from ``ens`` count as probability zero.
    """
    size = alphabet_size if alphabet_size is not None else len(ens.entries)
    if size & (size - 1) or size < 1:
        raise ValueError(f"alphabet size must be a power of two, got {size}")
    if size > 2 ** MAX_LABEL_BITS:
        raise ValueError(f"at most {MAX_LABEL_BITS} label bits are supported")
    if len(ens.entries) > size:
        raise ValueError("ensemble has more labels than the alphabet")
    d = ens.dim
    if size * d > MAX_JOINT_DIM:
        raise ValueError(f"joint dimension {size * d} exceeds {MAX_JOINT_DIM}")
    marg = ens.marginal()
    real = np.zeros((size * d, size * d), dtype=complex)
    for slot, (_, p, rho) in enumerate(ens.entries):
        real[slot * d:(slot + 1) * d, slot * d:(slot + 1) * d] = p * rho
    ideal = np.kron(np.eye(size) / size, marg)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(ideal - real)).sum())


def pa_bound(ell: int, k: int, pg: float) -> float:
    """Privacy-amplification bound ``2**((ell + k)/2 - 1) * sqrt(pg)``."""
    if not 0 <= pg <= 1:
        raise ValueError(f"guessing probability must lie in [0, 1], got {pg!r}")
    return 2.0 ** ((ell + k) / 2 - 1) * math.sqrt(pg)


def _branch_operator(rec: StoredRecord) -> np.ndarray:
    if rec.state is None:
        return np.array([[rec.weight]], dtype=complex)
    return rec.weight * rec.state


def branch_pairs(records0: Sequence[StoredRecord], records1: Sequence[StoredRecord]):
    """Pair up branches of the two hypotheses by outcome label.

    Yields ``(label, A0, A1)`` with ``A_b = p(k|b) * state_k|b`` (a 1x1 matrix
    for a destructive branch); a branch present on only one side is paired
    with zero.
    """
    by0 = {rec.outcome: rec for rec in records0}
    by1 = {rec.outcome: rec for rec in records1}
    labels = list(by0) + [k for k in by1 if k not in by0]
    for label in labels:
        a0 = _branch_operator(by0[label]) if label in by0 else None
        a1 = _branch_operator(by1[label]) if label in by1 else None
        if a0 is None:
            a0 = np.zeros_like(a1)
        if a1 is None:
            a1 = np.zeros_like(a0)
        if a0.shape != a1.shape:
            raise ValueError(f"outcome {label!r} stores states of different dimension")
        yield label, a0, a1


def records_guess(records0: Sequence[StoredRecord], records1: Sequence[StoredRecord]) -> float:
    """Optimal probability of guessing a uniform bit from measured-and-stored branches.

    Conditions on the classical outcome and applies Helstrom's rule to the
    weighted post-measurement states of each branch.
    """
    return 0.5 + 0.25 * sum(trace_norm(a0 - a1) for _, a0, a1 in branch_pairs(records0, records1))


def guess_probability(storage, basis: "Basis | str") -> float:
    """``P_g(X | S(sigma_b))`` for a bit encoded in ``basis`` and passed through ``storage``."""
    store = as_storage(storage)
    return records_guess(store(bb84_state(0, basis)), store(bb84_state(1, basis)))


def delta_of_channel(storage) -> float:
    """The uncertainty quantity ``sqrt(P_g(+) * P_g(x))`` of a storage map."""
    return math.sqrt(guess_probability(storage, Basis.PLUS) * guess_probability(storage, Basis.TIMES))


def random_measurement_family(rng: np.random.Generator, n_ops: int | None = None):
    """Random complete family of 2-4 rank-one operators (Haar directions, then normalized)."""
    from .channels import MeasurementFamily

    k = int(rng.integers(2, 5)) if n_ops is None else n_ops
    kets = rng.normal(size=(k, 2)) + 1j * rng.normal(size=(k, 2))
    kets /= np.linalg.norm(kets, axis=1, keepdims=True)
    weights = rng.uniform(0.05, 1.0, size=k)
    raw = [np.sqrt(w) * np.outer(v, v.conj()) for w, v in zip(weights, kets)]
    s = sum(f.conj().T @ f for f in raw)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v / np.sqrt(w)) @ v.conj().T
    return MeasurementFamily.from_operators([f @ s_inv_half for f in raw])

