"""Closed-form sender-security bounds, thresholds and the trade-off surface.

All logarithms are base 2. ``LAMBDA = log2(4/3)`` is the exponent that
turns ``2**-n * prod(1 + p_i)`` into a power of the per-qubit cap.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .attack_opt import R_THRESHOLD, theorem2_delta
from .codes import LinearCode, binary_entropy, hamming74
from .qstate import BREIDBART_GUESS

LAMBDA = math.log2(4 / 3)
ACCOUNTING = ("asymptotic", "concrete")


def _pow2(x: float) -> float:
    return math.inf if x > 1023 else 2.0 ** x


def _check_delta(delta_max: float) -> None:
    if not 0 < delta_max <= 1:
        raise ValueError(f"delta_max must lie in (0, 1], got {delta_max!r}")


def log2_delta_sec_perfect(ell: int, n: float, delta_max: float) -> float:
    _check_delta(delta_max)
    return ell / 2 - 1 + LAMBDA / 2 * n * math.log2(delta_max)


def delta_sec_perfect(ell: int, n: float, delta_max: float) -> float:
    """``2**(ell/2 - 1) * delta_max**(LAMBDA/2 * n)``."""
    return _pow2(log2_delta_sec_perfect(ell, n, delta_max))


def concrete_syndrome_bits(m: int, code: Optional[LinearCode] = None) -> int:
    """Syndrome bits actually sent for one basis, taking ``m_b = m / 2``."""
    code = code or hamming74()
    return code.syndrome_length(int(math.ceil(m / 2)))


def _leak(m: float, p_error: float, accounting: str, k_bits: Optional[int], code) -> float:
    if accounting == "asymptotic":
        return binary_entropy(p_error) * m / 4
    if accounting == "concrete":
        k = k_bits if k_bits is not None else concrete_syndrome_bits(int(m), code)
        return k / 2
    raise ValueError(f"accounting must be one of {ACCOUNTING}, got {accounting!r}")


def log2_delta_sec_practical(ell: int, m: float, p_error: float, delta_max: float,
                             accounting: str = "asymptotic", k_bits: Optional[int] = None,
                             code: Optional[LinearCode] = None) -> float:
    _check_delta(delta_max)
    if not 0 <= p_error < 0.5:
        raise ValueError(f"p_error must lie in [0, 1/2), got {p_error!r}")
    return ell / 2 - 1 + _leak(m, p_error, accounting, k_bits, code) + LAMBDA / 2 * m * math.log2(delta_max)


def delta_sec_practical(ell: int, m: float, p_error: float, delta_max: float,
                        accounting: str = "asymptotic", k_bits: Optional[int] = None,
                        code: Optional[LinearCode] = None) -> float:
    """Bound for the practical protocol with ``m`` retained slots.

    ``asymptotic`` charges ``h(p_error) m / 4`` for the syndromes;
    ``concrete`` charges ``k_bits / 2`` with ``k_bits`` the syndrome length
    actually sent for one basis (defaults to Hamming(7,4) on ``m / 2`` bits).
    """
    return _pow2(log2_delta_sec_practical(ell, m, p_error, delta_max, accounting, k_bits, code))


def exponent_rate(p_error: float, delta_max: float, accounting: str = "perfect",
                  code: Optional[LinearCode] = None) -> float:
    """Coefficient of the slot count in the log2 bound; negative means the bound decays."""
    _check_delta(delta_max)
    base = LAMBDA / 2 * math.log2(delta_max)
    if accounting == "perfect":
        return base
    if accounting == "asymptotic":
        return base + binary_entropy(p_error) / 4
    if accounting == "concrete":
        code = code or hamming74()
        return base + code.syndrome_bits_per_block / code.n_block / 4
    raise ValueError(f"unknown accounting {accounting!r}")


@dataclass(frozen=True)
class ProductBound:
    holds: bool
    lhs: float
    rhs: float


def lemma5_check(p_list: Sequence[float], p_cap: float, rtol: float = 1e-12) -> ProductBound:
    """Compare ``2**-n prod(1 + p_i)`` with ``p_cap**(LAMBDA n)``."""
    p = np.asarray(p_list, dtype=float)
    n = p.size
    if n == 0:
        raise ValueError("need at least one probability")
    if np.any(p < 0.5) or np.any(p > 1) or not 0.5 <= p_cap <= 1:
        raise ValueError("probabilities must lie in [1/2, 1]")
    if np.log(p).sum() > n * math.log(p_cap) + 1e-12:
        raise ValueError("product of the p_i exceeds p_cap**n")
    log_lhs = float(np.log2(1 + p).sum()) - n
    log_rhs = LAMBDA * n * math.log2(p_cap)
    return ProductBound(log_lhs <= log_rhs + rtol * max(1.0, abs(log_rhs)), 2.0 ** log_lhs, 2.0 ** log_rhs)


def tradeoff_value(r: float, a: float) -> float:
    """``h((1 - a r)/2)/4 + log2((1 + r)/2) * LAMBDA / 2``; negative means secure."""
    if not 0 < r <= 1:
        raise ValueError(f"r must lie in (0, 1], got {r!r}")
    if a < 1:
        raise ValueError(f"a must be at least 1, got {a!r}")
    if a * r > 1 + 1e-12:
        raise ValueError(f"a * r must not exceed 1 (a={a!r}, r={r!r})")
    p_error = max((1 - a * r) / 2, 0.0)
    return binary_entropy(p_error) / 4 + math.log2((1 + r) / 2) * LAMBDA / 2


def tradeoff_grid(r_values: Iterable[float], a_values: Iterable[float]) -> list[tuple]:
    """Rows ``(r, a, value, secure)`` for every admissible grid point (``a r <= 1``)."""
    rows = []
    a_values = list(a_values)
    for r in r_values:
        if r <= 0:
            continue
        for a in a_values:
            if a * r > 1 + 1e-12 or a < 1:
                continue
            v = tradeoff_value(r, a)
            rows.append((float(r), float(a), v, int(v < 0)))
    return rows


def write_tradeoff_csv(rows: Sequence[tuple], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("r", "a", "value", "secure"))
        for r, a, v, s in rows:
            writer.writerow((f"{r:.6g}", f"{a:.6g}", f"{v:.12g}", s))


def tradeoff_root_r(a: float, xtol: float = 1e-12) -> float:
    """Noise level ``r`` where the surface crosses zero at fixed ``a``.

    The admissible range is ``(0, 1/a]``. At ``a = 1`` the surface is
    positive for every ``r < 1`` and touches zero only at ``r = 1``, so the
    root sits on the boundary.
    """
    if a < 1:
        raise ValueError(f"a must be at least 1, got {a!r}")
    hi = 1 / a
    if tradeoff_value(hi, a) >= -1e-15:
        return hi
    lo = 1e-9
    if tradeoff_value(lo, a) < 0:
        raise ArithmeticError("surface already negative near r = 0")
    return brentq(lambda r: tradeoff_value(r, a), lo, hi, xtol=xtol)


def tradeoff_boundary_a(r: float, xtol: float = 1e-12) -> Optional[float]:
    """Smallest ``a`` (``1 <= a <= 1/r``) where the surface is negative, or ``None``."""
    if tradeoff_value(r, 1.0) < 0:
        return 1.0
    hi = 1 / r
    if r == 1 or tradeoff_value(r, hi) >= 0:
        return None
    return brentq(lambda a: tradeoff_value(r, a), 1.0, hi, xtol=xtol)


def perror_threshold(delta_max: float, xtol: float = 1e-12) -> float:
    """Largest ``p_error`` with a decaying asymptotic bound: ``h(p) = -2 LAMBDA log2(delta_max)``."""
    _check_delta(delta_max)
    target = -2 * LAMBDA * math.log2(delta_max)
    if target <= 0:
        return 0.0
    if target >= 1:
        return 0.5
    return brentq(lambda p: binary_entropy(p) - target, 1e-15, 0.5, xtol=xtol)


def breidbart_perror_threshold() -> float:
    return perror_threshold(BREIDBART_GUESS)


def erasure_delta(p_erase: float) -> float:
    """Uncertainty quantity of a storage that loses the qubit with probability ``p_erase``."""
    if not 0 <= p_erase <= 1:
        raise ValueError(f"p_erase must lie in [0, 1], got {p_erase!r}")
    return 1 - p_erase / 2


def min_n_for_security(epsilon: float, ell: int, delta_max: float, p_error: float = 0.0,
                       mode: str = "perfect", code: Optional[LinearCode] = None) -> Optional[int]:
    """Smallest qubit (or retained-slot) count with bound ``<= epsilon``; ``None`` if none exists.

    ``mode`` is ``perfect``, ``asymptotic`` or ``concrete``.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    target = math.log2(epsilon)

    def bound(k):
        if mode == "perfect":
            return log2_delta_sec_perfect(ell, k, delta_max)
        return log2_delta_sec_practical(ell, k, p_error, delta_max, mode, code=code)

    if bound(0) <= target:
        return 0
    rate = exponent_rate(p_error, delta_max, mode, code)
    if rate >= 0:
        return None
    if mode != "concrete":
        k = max(0, math.ceil((target - bound(0)) / rate) - 1)
        while bound(k) > target:
            k += 1
        return k
    # the syndrome length grows in steps; walk up from the linear estimate
    k = max(0, math.floor((target - (ell / 2 - 1)) / rate) - 4 * (code or hamming74()).n_block)
    while bound(k) > target:
        k += 1
    return k


@dataclass(frozen=True)
class SecurityReport:
    delta_sec_bound: float
    log2_bound: float
    exponent_rate: float
    negative_exponent: bool
    regime: str
    mode: str
    accounting: str
    ell: int
    slots: float
    p_error: float
    r: Optional[float]
    delta_max: float
    rigorous: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        return (f"mode={self.mode} accounting={self.accounting} regime={self.regime} "
                f"delta_max={self.delta_max:.6f} slots={self.slots:g} "
                f"log2_bound={self.log2_bound:.6f} exponent_rate={self.exponent_rate:.6f} "
                f"negative_exponent={self.negative_exponent}")


def security_report(ell: int, n: int, mode: str = "perfect", r: Optional[float] = None,
                    delta_max: Optional[float] = None, p_error: float = 0.0, p_erase: float = 0.0,
                    accounting: str = "asymptotic", mu: Optional[float] = None,
                    code: Optional[LinearCode] = None) -> SecurityReport:
    """Bound for ``n`` sent qubits. Practical mode uses ``m = (1 - p_erase) n`` retained slots.

    ``delta_max`` defaults to the depolarizing optimum at ``r``; passing ``mu``
    switches to the beam-splitting estimate, which is a heuristic and is
    flagged non-rigorous.
    """
    from .adversary import beam_split_delta

    rigorous, note = True, ""
    if mu is not None:
        delta_max = beam_split_delta(mu)
        regime = "beamsplit"
        rigorous = False
        note = "beam-splitting estimate: weak-pulse security is heuristic"
    elif delta_max is None:
        if r is None:
            raise ValueError("give r, delta_max or mu")
        delta_max = theorem2_delta(r)
        regime = "store" if r > R_THRESHOLD else "breidbart"
    else:
        regime = "custom"
    if mode == "perfect":
        slots = float(n)
        log2b = log2_delta_sec_perfect(ell, slots, delta_max)
        rate = exponent_rate(0.0, delta_max, "perfect")
        accounting = "none"
    elif mode == "practical":
        slots = (1 - p_erase) * n
        log2b = log2_delta_sec_practical(ell, slots, p_error, delta_max, accounting, code=code)
        rate = exponent_rate(p_error, delta_max, accounting, code)
    else:
        raise ValueError(f"mode must be perfect or practical, got {mode!r}")
    return SecurityReport(_pow2(log2b), log2b, rate, rate < 0, regime, mode, accounting, ell,
                          slots, p_error, r, delta_max, rigorous, note)
