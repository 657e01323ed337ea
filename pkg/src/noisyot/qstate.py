"""Single-qubit states, bases and norms.

Density matrices are plain ``(2, 2)`` complex numpy arrays; tensor
products of a few qubits are ``(2**k, 2**k)`` arrays. Validation helpers
check the usual invariants (Hermitian, unit trace, PSD) at ``ATOL``.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np

ATOL = 1e-12
# composed / optimized quantities
ATOL_LOOSE = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (X, Y, Z)

MAXIMALLY_MIXED = I2 / 2

COS_PI_8 = math.cos(math.pi / 8)
SIN_PI_8 = math.sin(math.pi / 8)
# cos^2(pi/8) = 1/2 + 1/(2 sqrt 2): optimal single-basis guess after a Breidbart measurement
BREIDBART_GUESS = 0.5 + 1 / (2 * math.sqrt(2))


class Basis(str, enum.Enum):
    PLUS = "+"
    TIMES = "x"
    BREIDBART = "B"

    @classmethod
    def parse(cls, value: "str | Basis") -> "Basis":
        if isinstance(value, Basis):
            return value
        aliases = {"+": cls.PLUS, "plus": cls.PLUS, "z": cls.PLUS, "0": cls.PLUS,
                   "x": cls.TIMES, "×": cls.TIMES, "times": cls.TIMES, "1": cls.TIMES,
                   "b": cls.BREIDBART, "breidbart": cls.BREIDBART}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ValueError(f"unknown basis {value!r}") from None

    @property
    def other(self) -> "Basis":
        if self is Basis.PLUS:
            return Basis.TIMES
        if self is Basis.TIMES:
            return Basis.PLUS
        raise ValueError("the Breidbart basis has no conjugate partner here")


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)


def ket(amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex).reshape(2)
    if abs(np.vdot(v, v).real - 1) > ATOL:
        raise ValueError("state vector is not normalized")
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def basis_vectors(basis: "Basis | str") -> tuple[np.ndarray, np.ndarray]:
    """Return the two orthonormal kets of ``basis`` (bit 0 first)."""
    basis = Basis.parse(basis)
    if basis is Basis.PLUS:
        return ket([1, 0]), ket([0, 1])
    if basis is Basis.TIMES:
        s = 1 / math.sqrt(2)
        return ket([s, s]), ket([s, -s])
    return breidbart_vectors()


def breidbart_vectors() -> tuple[np.ndarray, np.ndarray]:
    """The Breidbart basis ``(|0>_B, |1>_B)``, bisecting the + and x bases."""
    return ket([COS_PI_8, SIN_PI_8]), ket([SIN_PI_8, -COS_PI_8])


def bb84_state(bit: int, basis: "Basis | str") -> np.ndarray:
    """Density matrix encoding ``bit`` in the computational (+) or Hadamard (x) basis."""
    basis = Basis.parse(basis)
    if basis is Basis.BREIDBART:
        raise ValueError("the Breidbart basis is not a BB84 encoding basis")
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return projector(basis_vectors(basis)[bit])


def basis_average(basis: "Basis | str") -> np.ndarray:
    """Uniform mixture of the two BB84 states of a basis (always I/2)."""
    return (bb84_state(0, basis) + bb84_state(1, basis)) / 2


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=atol, rtol=0)


def check_density(rho: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Validate and return ``rho`` as a complex density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if not is_hermitian(rho, atol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > atol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real!r}")
    if eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def is_density(rho: np.ndarray, atol: float = ATOL) -> bool:
    try:
        check_density(rho, atol)
    except ValueError:
        return False
    return True


def eigvalsh2(m: np.ndarray) -> np.ndarray:
    """Closed-form ascending eigenvalues of (a batch of) 2x2 Hermitian matrices."""
    m = np.asarray(m)
    a = m[..., 0, 0].real
    d = m[..., 1, 1].real
    b = m[..., 0, 1]
    mean = (a + d) / 2
    rad = np.sqrt(((a - d) / 2) ** 2 + np.abs(b) ** 2)
    return np.stack([mean - rad, mean + rad], axis=-1)


def eigvalsh(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.shape[-2:] == (2, 2):
        return eigvalsh2(m)
    return np.linalg.eigvalsh(m)


def trace_norm(m: np.ndarray) -> float:
    """Trace norm ``Tr sqrt(M^dag M)``, i.e. the sum of singular values."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"trace norm needs a square matrix, got shape {m.shape}")
    if is_hermitian(m, atol=1e-14):
        return float(np.abs(eigvalsh(m)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def trace_norm2(m: np.ndarray) -> np.ndarray:
    """Vectorized trace norm of a batch of 2x2 Hermitian matrices."""
    return np.abs(eigvalsh2(m)).sum(axis=-1)


def to_bloch(rho: np.ndarray) -> BlochVector:
    rho = check_density(rho)
    return BlochVector(*(float(np.trace(rho @ p).real) for p in PAULIS))


def from_bloch(v) -> np.ndarray:
    v = BlochVector(*(float(c) for c in v))
    if v.norm() > 1 + ATOL:
        raise ValueError(f"Bloch vector of length {v.norm():.6g} exceeds 1")
    return (I2 + v.x * X + v.y * Y + v.z * Z) / 2


def kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def random_density(rng: np.random.Generator, pure: bool = False) -> np.ndarray:
    """Uniformly random pure state, or a mixed state from the Hilbert-Schmidt measure."""
    if pure:
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return projector(v / np.linalg.norm(v))
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    g = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
