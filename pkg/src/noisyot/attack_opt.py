"""Optimal partial-measurement attack against depolarizing storage.

The adversary measures with the four operators ``g F g^dag``
(``g`` in ``{I, X, Z, XZ}``) for a Hermitian ``F = beta I + (alpha - beta)|phi><phi|``
with ``alpha**2 + beta**2 = 1/2``, then stores the post-measurement state
in a depolarizing memory of survival probability ``r``. For this family the
per-basis guessing probability is ``1/2 + ||r F D F + (1 - r) Tr(F D F) I/2||_tr``
with ``D = Z`` (computational basis) or ``D = X`` (Hadamard basis).

:func:`optimize_delta` searches ``(alpha, phi)`` numerically; the analytic
optimum is :func:`theorem2_delta`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channels import MeasurementFamily, depolarize
from .distinguish import guess_probability
from .qstate import BREIDBART_GUESS, I2, X, Y, Z, Basis, from_bloch, trace_norm2

ALPHA_MAX = 1 / math.sqrt(2)
R_THRESHOLD = 1 / math.sqrt(2)
SYMMETRY_GROUP = (("I", I2), ("X", X), ("Z", Z), ("XZ", X @ Z))


@dataclass(frozen=True)
class AttackParams:
    alpha: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not -1e-12 <= self.alpha <= ALPHA_MAX + 1e-12:
            raise ValueError(f"alpha must lie in [0, 1/sqrt(2)], got {self.alpha!r}")
        if abs(self.x ** 2 + self.y ** 2 + self.z ** 2 - 1) > 1e-10:
            raise ValueError("(x, y, z) must be a unit Bloch vector")

    @classmethod
    def in_xz_plane(cls, alpha: float, angle: float) -> "AttackParams":
        """``phi`` at polar angle ``angle`` from +Z towards +X."""
        return cls(alpha, math.sin(angle), 0.0, math.cos(angle))

    @classmethod
    def breidbart(cls) -> "AttackParams":
        # alpha = 0 keeps only |phi_perp>; the symmetrized family covers both Breidbart vectors
        return cls.in_xz_plane(0.0, math.pi / 4)

    @classmethod
    def store(cls) -> "AttackParams":
        return cls.in_xz_plane(0.5, math.pi / 4)

    @property
    def beta(self) -> float:
        return math.sqrt(max(0.5 - self.alpha ** 2, 0.0))

    def operator(self) -> np.ndarray:
        return self.beta * I2 + (self.alpha - self.beta) * from_bloch((self.x, self.y, self.z))


def symmetrize(F: np.ndarray) -> MeasurementFamily:
    """The four-outcome measurement ``{g F g^dag}``; requires ``Tr(F^2) = 1/2``."""
    F = np.asarray(F, dtype=complex)
    if not np.allclose(F, F.conj().T, atol=1e-10):
        raise ValueError("F must be Hermitian")
    if abs(np.trace(F @ F).real - 0.5) > 1e-10:
        raise ValueError("F must satisfy Tr(F^2) = 1/2")
    return MeasurementFamily(tuple((name, g @ F @ g.conj().T) for name, g in SYMMETRY_GROUP))


def _basis_norms(alpha, x, y, z, r):
    """Vectorized ``(||P||_tr, ||T||_tr)`` from the explicit 2x2 matrices."""
    alpha, x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, x, y, z)))
    beta = np.sqrt(np.clip(0.5 - alpha ** 2, 0.0, None))
    F = 0.5 * ((alpha + beta)[..., None, None] * I2
               + (alpha - beta)[..., None, None] * (x[..., None, None] * X + y[..., None, None] * Y
                                                   + z[..., None, None] * Z))
    out = []
    for D in (Z, X):
        FDF = F @ D @ F
        tr = np.trace(FDF, axis1=-2, axis2=-1).real
        M = r * FDF + ((1 - r) * tr / 2)[..., None, None] * I2
        out.append(trace_norm2(M))
    return out[0], out[1]


def objective_C(params: AttackParams, r: float) -> float:
    """Sum over both bases of the trace norm of the noisy, measured bit difference."""
    p_norm, t_norm = _basis_norms(params.alpha, params.x, params.y, params.z, r)
    return float(p_norm + t_norm)


def basis_success(params: AttackParams, r: float) -> tuple[float, float]:
    """Guessing probabilities ``(p_+, p_x)`` of the symmetrized attack."""
    p_norm, t_norm = _basis_norms(params.alpha, params.x, params.y, params.z, r)
    return 0.5 + float(p_norm), 0.5 + float(t_norm)


def attack_delta(params: AttackParams, r: float) -> float:
    p_plus, p_times = basis_success(params, r)
    return math.sqrt(p_plus * p_times)


def _delta_batch(alpha, x, y, z, r):
    p_norm, t_norm = _basis_norms(alpha, x, y, z, r)
    return np.sqrt((0.5 + p_norm) * (0.5 + t_norm))


def noisy_difference_matrices(params: AttackParams, r: float) -> tuple[np.ndarray, np.ndarray]:
    """The explicit matrices ``P`` (computational basis) and ``T`` (Hadamard basis)."""
    F = params.operator()
    mats = []
    for D in (Z, X):
        FDF = F @ D @ F
        mats.append(r * FDF + (1 - r) * np.trace(FDF).real * I2 / 2)
    return mats[0], mats[1]


def closed_form_eigs(alpha, x, z, r):
    """Analytic eigenvalues ``(l1(P), l2(P), l1(T), l2(T))``, each pair ascending."""
    alpha, x, z = (np.asarray(v, dtype=float) for v in (alpha, x, z))
    a2 = alpha ** 2
    lead = 4 * a2 - 1

    def root(u):
        return np.sqrt(np.clip(u ** 2 + 8 * a2 * (2 * a2 - 1) * (u ** 2 - 1), 0.0, None))

    return ((lead * z - r * root(z)) / 4, (lead * z + r * root(z)) / 4,
            (lead * x - r * root(x)) / 4, (lead * x + r * root(x)) / 4)


def f_term(alpha, x):
    return (np.asarray(alpha) ** 2 - 0.25) * np.asarray(x)


def g_term(alpha, x):
    alpha, x = np.asarray(alpha), np.asarray(x)
    return 0.25 * np.sqrt(np.clip(x ** 2 + 8 * alpha ** 2 * (2 * alpha ** 2 - 1) * (x ** 2 - 1), 0.0, None))


def h_term(alpha, x, r):
    """Per-basis trace norm ``|f + r g| + |f - r g|`` as a function of one Bloch component."""
    f, g = f_term(alpha, x), g_term(alpha, x)
    return np.abs(f + r * g) + np.abs(f - r * g)


def success_sum(fam: MeasurementFamily, r: float) -> float:
    """``p_+ + p_x`` for an arbitrary measurement followed by depolarizing storage."""
    noise = depolarize(r)
    return (guess_probability((fam, noise), Basis.PLUS)
            + guess_probability((fam, noise), Basis.TIMES))


def theorem2_delta(r: float) -> float:
    """Analytic maximum of the uncertainty quantity under depolarizing storage."""
    if not 0 <= r <= 1:
        raise ValueError(f"r must lie in [0, 1], got {r!r}")
    return max(BREIDBART_GUESS, (1 + r) / 2)


@dataclass(frozen=True)
class OptResult:
    delta_max: float
    best: AttackParams
    regime: str
    r: float
    grid_best: float
    spot_check_best: float
    evaluations: int


def canonical_params(params: AttackParams, degenerate_tol: float = 1e-6) -> AttackParams:
    """Map to the equivalent representative with ``alpha <= 1/2``.

    Swapping ``alpha`` and ``beta`` exchanges ``phi`` and ``phi_perp``; the XZ
    conjugate of that is the same operator with ``y`` negated. When
    ``F`` is proportional to the identity, ``phi`` is irrelevant and is
    reported as the Breidbart direction.
    """
    if params.alpha > 0.5:
        params = AttackParams(params.beta, params.x, -params.y, params.z)
    if abs(params.alpha - params.beta) < degenerate_tol:
        params = replace(AttackParams.store(), alpha=params.alpha)
    return params


def _coordinate_descent(r, alpha, angle, step, tol, counter):
    def value(a, t):
        counter[0] += 1
        return float(_delta_batch(a, math.sin(t), 0.0, math.cos(t), r))

    bounds = ((0.0, ALPHA_MAX), (0.0, math.pi / 2))
    point = [alpha, angle]
    best = value(*point)
    steps = [step, 2 * step]
    while max(steps) > tol:
        improved = False
        for i in range(2):
            for sign in (1, -1):
                trial = list(point)
                trial[i] = min(max(trial[i] + sign * steps[i], bounds[i][0]), bounds[i][1])
                v = value(*trial)
                if v > best:
                    best, point, improved = v, trial, True
                    break
        if not improved:
            steps = [s / 2 for s in steps]
    return best, point


def optimize_delta(r: float, grid_step: float = 0.01, refine_tol: float = 1e-9) -> OptResult:
    """Numerically maximize the uncertainty quantity over symmetrized partial measurements.

    A grid over ``alpha`` (step ``grid_step``) and the XZ-plane direction of
    ``phi`` (x step ``2 * grid_step``) is refined by coordinate descent to
    ``refine_tol``. A coarser grid over the full ``(alpha, x, y, z)`` sphere
    cross-checks that leaving the XZ plane never helps.
    """
    if not 0 <= r <= 1:
        raise ValueError(f"r must lie in [0, 1], got {r!r}")
    alphas = np.append(np.arange(0.0, ALPHA_MAX, grid_step), ALPHA_MAX)
    xs = np.append(np.arange(0.0, 1.0, 2 * grid_step), 1.0)
    A, Xg = np.meshgrid(alphas, xs, indexing="ij")
    Zg = np.sqrt(np.clip(1 - Xg ** 2, 0.0, None))
    grid = _delta_batch(A, Xg, 0.0, Zg, r)
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    grid_best = float(grid[i, j])

    # off-plane spot checks: y = sqrt(1 - x^2 - z^2) > 0
    coarse = np.linspace(0.0, 1.0, 11)
    A3, X3, Z3 = np.meshgrid(alphas[::5], coarse, coarse, indexing="ij")
    inside = X3 ** 2 + Z3 ** 2 <= 1
    Y3 = np.sqrt(np.clip(1 - X3 ** 2 - Z3 ** 2, 0.0, None))
    spot = _delta_batch(A3[inside], X3[inside], Y3[inside], Z3[inside], r)
    spot_best = float(spot.max())

    counter = [grid.size + spot.size]
    angle0 = math.asin(min(float(Xg[i, j]), 1.0))
    best, (alpha_star, angle_star) = _coordinate_descent(r, float(A[i, j]), angle0, grid_step,
                                                          refine_tol, counter)
    params = canonical_params(AttackParams.in_xz_plane(alpha_star, angle_star))
    regime = "breidbart" if params.alpha < 0.25 else "store"
    return OptResult(delta_max=max(best, spot_best), best=params, regime=regime, r=r,
                     grid_best=grid_best, spot_check_best=spot_best, evaluations=counter[0])


def sweep(r_values, grid_step: float = 0.01, refine_tol: float = 1e-9) -> list[OptResult]:
    return [optimize_delta(float(r), grid_step, refine_tol) for r in r_values]
