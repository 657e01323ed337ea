"""Self-checks grouped by module, used by ``noisyot verify``.

Each check compares an implementation against an independent oracle
(closed form, brute force or Monte Carlo with a binomial tolerance) at a
size that keeps the full suite under a couple of minutes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import stats

from . import adversary as adv
from .attack_opt import (ALPHA_MAX, AttackParams, attack_delta, closed_form_eigs, noisy_difference_matrices,
                         optimize_delta, symmetrize, theorem2_delta)
from .channels import MeasurementFamily, bloch_map, depolarize, erasure_records
from .codes import decode, decode_success_probability, hamming74, syndrome
from .distinguish import (CqEnsemble, delta_of_channel, guess_probability, nonuniformity,
                          product_guess, random_measurement_family, tensor_certificate)
from .hashing import AffineHash, sample_hash
from .protocol import Honest, Params, derive_seed, run, run_batch
from .qstate import (BREIDBART_GUESS, COS_PI_8, Basis, bb84_state, breidbart_vectors, is_density,
                     random_density, trace_norm)
from .security import (breidbart_perror_threshold, delta_sec_perfect, erasure_delta, lemma5_check,
                       tradeoff_grid, tradeoff_value)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.suite}.{self.name}: {self.detail}"


def _rng(tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(20240917, spawn_key=(tag,))))


def check_qstate():
    rng = _rng(1)
    states = [bb84_state(b, s) for b in (0, 1) for s in (Basis.PLUS, Basis.TIMES)]
    yield "bb84_densities", all(is_density(s) for s in states), "four valid states"
    v0, v1 = breidbart_vectors()
    gram = abs(np.vdot(v0, v1)) + abs(np.vdot(v0, v0) - 1) + abs(np.vdot(v1, v1) - 1)
    yield "breidbart_orthonormal", gram < 1e-12, f"gram error {gram:.2e}"
    err = 0.0
    for _ in range(200):
        m = random_density(rng) - random_density(rng)
        err = max(err, abs(trace_norm(m) - np.linalg.svd(m, compute_uv=False).sum()))
    yield "trace_norm_vs_svd", err < 1e-12, f"max error {err:.2e}"


def check_channels():
    worst = 0.0
    for r in np.linspace(0, 1, 11):
        T, t = bloch_map(depolarize(r))
        worst = max(worst, np.abs(T - r * np.eye(3)).max(), np.abs(t).max())
    yield "depolarize_bloch_contraction", worst < 1e-12, f"max deviation {worst:.2e}"
    recs = erasure_records(0.4, bb84_state(0, Basis.PLUS))
    yield "erasure_weights", abs(sum(r.weight for r in recs) - 1) < 1e-12, f"{len(recs)} branches"


def check_distinguish():
    fam = MeasurementFamily.projective(breidbart_vectors())
    d = delta_of_channel(fam)
    yield "breidbart_constant", abs(d - 0.8535533906) < 1e-9, f"delta={d:.10f}"
    rng = _rng(2)
    worst = -1.0
    for _ in range(300):
        f = random_measurement_family(rng)
        worst = max(worst, guess_probability(f, "+") * guess_probability(f, "x") - BREIDBART_GUESS ** 2)
    yield "uncertainty_relation", worst <= 1e-9, f"max excess {worst:.2e}"
    err, margin = 0.0, 1.0
    for _ in range(30):
        pairs = [(random_density(rng), random_density(rng)) for _ in range(2)]
        cert = tensor_certificate(pairs)
        err = max(err, abs(cert.value - product_guess([CqEnsemble.binary(*p) for p in pairs])))
        margin = min(margin, cert.margin)
    yield "tensor_certificate", err < 1e-9 and margin >= -1e-9, f"max error {err:.2e}, margin {margin:.2e}"
    ens = CqEnsemble.binary(bb84_state(0, "+"), bb84_state(1, "+"))
    d = nonuniformity(ens, 2)
    yield "nonuniformity_correlated", abs(d - 0.5) < 1e-12, f"d={d:.12f}"


def check_attack_opt():
    worst = 0.0
    for r in np.round(np.arange(0, 1.0001, 0.1), 10):
        worst = max(worst, abs(optimize_delta(float(r)).delta_max - theorem2_delta(float(r))))
    yield "closed_form_delta_grid", worst < 1e-4, f"max gap {worst:.2e}"
    rng = _rng(3)
    err = 0.0
    for _ in range(500):
        alpha, angle, r = rng.uniform(0, ALPHA_MAX), rng.uniform(0, 2 * math.pi), rng.uniform(0, 1)
        params = AttackParams.in_xz_plane(alpha, angle)
        P, T = noisy_difference_matrices(params, r)
        closed = np.array(closed_form_eigs(alpha, params.x, params.z, r), dtype=float)
        numeric = np.concatenate([np.linalg.eigvalsh(P), np.linalg.eigvalsh(T)])
        err = max(err, np.abs(closed - numeric).max())
    yield "closed_form_eigenvalues", err < 1e-9, f"max error {err:.2e}"
    p = AttackParams.in_xz_plane(0.3, 0.7)
    gap = abs(attack_delta(p, 0.6) - delta_of_channel((symmetrize(p.operator()), depolarize(0.6))))
    yield "objective_vs_channel", gap < 1e-12, f"gap {gap:.2e}"


def check_hashing():
    n, ell = 8, 3
    zero_rows = sum(1 for row in range(1 << n) if (row & 0b1011).bit_count() % 2 == 0)
    yield "row_balance", zero_rows == 1 << (n - 1), f"{zero_rows} of {1 << n} rows annihilate a fixed difference"
    rng = _rng(4)
    samples = 4000
    hits = np.zeros(1 << n)
    for _ in range(samples):
        h = sample_hash(n, ell, rng)
        base = h.eval_int(0)
        hits += np.array([h.eval_int(d) == base for d in range(1 << n)])
    rate = hits[1:] / samples
    sigma = math.sqrt(2 ** -ell * (1 - 2 ** -ell) / samples)
    worst = float(np.abs(rate - 2 ** -ell).max())
    yield "two_universal_sampled", worst < 5 * sigma, f"max deviation {worst:.4f} (5 sigma {5 * sigma:.4f})"
    h = sample_hash(20, 5, rng)
    yield "hash_roundtrip", AffineHash.from_dict(h.to_dict()) == h, "hex serialization"


def check_codes():
    code = hamming74()
    rng = _rng(5)
    failures = 0
    for length in range(1, 29):
        for _ in range(3):
            x = rng.integers(0, 2, size=length, dtype=np.uint8)
            syn = syndrome(code, x)
            for j in range(length):
                y = x.copy()
                y[j] ^= 1
                failures += not np.array_equal(decode(code, y, syn), x)
    yield "single_error_recovery", failures == 0, f"{failures} failures over lengths 1..28"


def check_protocol():
    bad = 0
    for seed in range(40):
        for c in (Basis.PLUS, Basis.TIMES):
            bad += not run(Params(n=32, ell=8, seed=seed), Honest(c)).correct
    yield "perfect_honest_correct", bad == 0, f"{bad} incorrect of 80"
    p = Params(n=48, ell=6, seed=11)
    reduced = run(Params(n=48, ell=6, seed=11, mode="practical"), Honest(Basis.TIMES))
    full = run(p, Honest(Basis.TIMES))
    same = np.array_equal(reduced.s_plus, full.s_plus) and np.array_equal(reduced.bob_output, full.bob_output)
    yield "noiseless_practical_reduces", same, "identical outputs at p_erase = p_error = 0"
    yield "deterministic", run(p, Honest("+")).to_json() == run(p, Honest("+")).to_json(), "byte-identical"

    q = Params(n=2048, ell=32, p_erase=0.3, p_error=0.01, mode="practical", seed=5)
    runs = run_batch(q, Honest(Basis.PLUS), 300, workers=1)
    aborted = sum(t.aborted for t in runs)
    done = [t for t in runs if not t.aborted]
    observed = np.mean([t.correct for t in done])
    code = hamming74()
    predicted = np.mean([decode_success_probability(code, t.index_plus.size, q.p_error) for t in done])
    sigma = math.sqrt(predicted * (1 - predicted) / len(done))
    yield "practical_matches_decoder_model", abs(observed - predicted) < 4 * sigma, \
        f"success {observed:.3f} vs predicted {predicted:.3f} (4 sigma {4 * sigma:.3f})"
    yield "false_abort_rate", aborted / len(runs) <= 0.01, f"{aborted} aborts of {len(runs)}"

    counts = {c: [] for c in (Basis.PLUS, Basis.TIMES)}
    base = Params(n=64, ell=4, p_erase=0.3, mode="practical", seed=9)
    for i in range(1000):
        for k, c in enumerate(counts):
            t = run(replace(base, seed=derive_seed(base.seed, 2 * i + k)), Honest(c))
            counts[c].append(int(t.erasure_report.sum()))
    p_value = _chi_square_counts(counts[Basis.PLUS], counts[Basis.TIMES])
    yield "erasure_report_independent", p_value > 0.01, f"chi-square p={p_value:.3f}"


def _chi_square_counts(a, b, bins: int = 8) -> float:
    edges = np.quantile(np.concatenate([a, b]), np.linspace(0, 1, bins + 1)[1:-1])
    table = np.array([np.bincount(np.searchsorted(edges, v, side="right"), minlength=bins) for v in (a, b)])
    table = table[:, table.sum(axis=0) > 0]
    return float(stats.chi2_contingency(table)[1])


def check_adversary():
    g = adv.slot_guess_probability
    ok = all(abs(g(adv.Store(r), b) - (1 + r) / 2) < 1e-12 for r in (0, 0.3, 1) for b in ("+", "x"))
    yield "store_guess", ok, "(1 + r)/2 in both bases"
    ok = all(abs(g(adv.Breidbart(), b) - COS_PI_8 ** 2) < 1e-12 for b in ("+", "x"))
    yield "breidbart_guess", ok, "cos^2(pi/8) in both bases"
    yield "conjugate_basis_guess", abs(g(adv.BasisMeasure(Basis.PLUS), "x") - 0.5) < 1e-12, "1/2"
    yield "cprime_rules", (adv.choice_bit_cprime(adv.Breidbart()) is Basis.PLUS
                           and adv.choice_bit_cprime(adv.BasisMeasure(Basis.TIMES)) is Basis.TIMES), "ties to +"
    gap = abs(adv.beam_split_delta(0.2) - adv.strategy_delta(adv.BeamSplit(0.2)))
    yield "beam_split_delta", gap < 1e-12, f"formula vs channel gap {gap:.2e}"
    worst = -1.0
    for r in np.linspace(0, 1, 11):
        for s in (adv.Store(r), adv.Breidbart(), adv.Partial(AttackParams.in_xz_plane(0.3, 0.6), r)):
            worst = max(worst, g(s, adv.choice_bit_cprime(s).other) - theorem2_delta(r))
    yield "per_bit_below_closed_form", worst <= 1e-9, f"max excess {worst:.2e}"
    bad = 0
    for s in (adv.Store(0.6), adv.Breidbart(), adv.BasisMeasure(Basis.PLUS)):
        for n in (2, 3, 4):
            exact = adv.exact_delta_sec(s, n, 1)
            bad += exact > delta_sec_perfect(1, n, adv.strategy_delta(s)) + 1e-12
    yield "exact_below_bound", bad == 0, f"{bad} violations (n <= 4)"


def check_security():
    t = breidbart_perror_threshold()
    yield "perror_threshold", 0.028 <= t <= 0.030, f"p={t:.7f}"
    rng = _rng(6)
    bad = 0
    for _ in range(2000):
        n = int(rng.integers(1, 21))
        p = rng.uniform(0.5, 1, size=n)
        cap = min(1.0, float(np.exp(np.log(p).mean())) * (1 + rng.uniform(0, 0.01)))
        bad += not lemma5_check(p, cap).holds
    yield "product_inequality_random", bad == 0, f"{bad} violations"
    yield "lemma5_equality", abs(lemma5_check([0.5] * 7, 0.5).lhs - 0.75 ** 7) < 1e-15, "(3/4)^n"
    gap = abs(erasure_delta(0.4) - delta_of_channel(lambda rho: erasure_records(0.4, rho)))
    yield "erasure_delta", gap < 1e-12, f"gap {gap:.2e}"
    rows = tradeoff_grid(np.arange(0.02, 1.0001, 0.02), np.arange(1, 2.0001, 0.05))
    secure = sum(row[3] for row in rows)
    yield "tradeoff_secure_region", secure > 0, f"{secure} secure points of {len(rows)}"
    mono = all(tradeoff_value(r, a + 0.01) <= tradeoff_value(r, a) + 1e-15
               for r in np.linspace(0.05, 0.95, 19) for a in np.arange(1, 1 / r - 0.01, 0.01))
    yield "tradeoff_nonincreasing_in_a", mono, "fixed r"


SUITES: dict[str, Callable] = {
    "qstate": check_qstate,
    "channels": check_channels,
    "distinguish": check_distinguish,
    "attack_opt": check_attack_opt,
    "hashing": check_hashing,
    "codes": check_codes,
    "protocol": check_protocol,
    "adversary": check_adversary,
    "security": check_security,
}


def run_suite(name: str):
    """Yield :class:`Check` results for one suite, or for every suite with ``all``."""
    names = list(SUITES) if name == "all" else [name]
    for suite in names:
        if suite not in SUITES:
            raise ValueError(f"unknown suite {suite!r}")
        try:
            for check, passed, detail in SUITES[suite]():
                yield Check(suite, check, bool(passed), detail)
        except Exception as exc:  # a crashing oracle is a failed check, not a crash of the runner
            yield Check(suite, "error", False, f"{type(exc).__name__}: {exc}")
