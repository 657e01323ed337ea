"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import csv
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from noisyot.adversary import BasisMeasure, Breidbart, Store, exact_delta_sec, strategy_delta
from noisyot.attack_opt import (ALPHA_MAX, R_THRESHOLD, AttackParams, closed_form_eigs,
                                noisy_difference_matrices, optimize_delta, theorem2_delta)
from noisyot.channels import MeasurementFamily
from noisyot.cli import main
from noisyot.codes import decode, hamming74, syndrome
from noisyot.distinguish import (CqEnsemble, delta_of_channel, guess_probability, product_guess,
                                 random_measurement_family, tensor_certificate)
from noisyot.hashing import all_affine_hashes, sample_hash
from noisyot.protocol import Honest, Params, derive_seed, run, run_batch
from noisyot.qstate import BREIDBART_GUESS, Basis, breidbart_vectors, random_density
from noisyot.security import (breidbart_perror_threshold, delta_sec_perfect, lemma5_check,
                              tradeoff_root_r, tradeoff_value)
from noisyot.verify import _chi_square_counts

# golden root of the trade-off function on the a = 1 edge
ROOT_AT_A1 = 1.0


@pytest.fixture
def report(capsys, request):
    start = time.perf_counter()

    def emit(passed, detail):
        name = request.node.name.removeprefix("test_")
        with capsys.disabled():
            print(f"\n{'PASS' if passed else 'FAIL'} {name}: {detail} "
                  f"({time.perf_counter() - start:.1f}s)")
        assert passed, detail

    return emit


def test_c01_delta_max_closed_form(report):
    worst = 0.0
    for r in np.round(np.arange(0, 1.0001, 0.05), 10):
        worst = max(worst, abs(optimize_delta(r).delta_max - theorem2_delta(r)))
    # first r on a fine grid where the optimizer reports the storing regime
    grid = np.arange(R_THRESHOLD - 0.03, R_THRESHOLD + 0.03, 0.0025)
    switch = next(r for r in grid if optimize_delta(r, grid_step=0.02).regime == "store")
    ok = worst < 1e-4 and abs(switch - R_THRESHOLD) <= 0.01
    report(ok, f"max |opt - closed form| = {worst:.2e}, regime switch at r = {switch:.4f}")


def test_c02_breidbart_constant(report):
    value = delta_of_channel(MeasurementFamily.projective(breidbart_vectors()))
    report(abs(value - 0.8535533906) <= 1e-9 and abs(value - BREIDBART_GUESS) < 1e-12,
           f"delta = {value:.12f}")


def test_c03_threshold(report):
    t = breidbart_perror_threshold()
    report(0.028 <= t <= 0.030, f"p_error threshold = {t:.6f}")


def test_c04_eigenvalue_closed_forms(report):
    rng = np.random.default_rng(40)
    n = 10_000
    alpha = rng.uniform(0, ALPHA_MAX, n)
    ang = rng.uniform(0, 2 * math.pi, n)
    r = rng.uniform(0, 1, n)
    x, z = np.sin(ang), np.cos(ang)
    closed = np.stack(closed_form_eigs(alpha, x, z, r), axis=-1)
    worst = 0.0
    for i in range(n):
        P, T = noisy_difference_matrices(AttackParams(alpha[i], x[i], 0.0, z[i]), r[i])
        numeric = np.concatenate([np.linalg.eigvalsh(P), np.linalg.eigvalsh(T)])
        worst = max(worst, np.abs(closed[i] - numeric).max())
    report(worst < 1e-9, f"max eigenvalue gap {worst:.2e} over {n} draws")


def test_c05_uncertainty_relation(report):
    rng = np.random.default_rng(50)
    excess = -1.0
    for _ in range(1000):
        fam = random_measurement_family(rng)
        excess = max(excess, guess_probability(fam, "+") * guess_probability(fam, "x") - BREIDBART_GUESS ** 2)
    report(excess <= 1e-9, f"max P(+)P(x) - bound = {excess:.3e} over 1000 families")


def test_c06_tensor_certificate(report):
    rng = np.random.default_rng(60)
    gap, margin = 0.0, math.inf
    for _ in range(100):
        pairs = [(random_density(rng), random_density(rng)) for _ in range(2)]
        cert = tensor_certificate(pairs)
        gap = max(gap, abs(cert.value - product_guess([CqEnsemble.binary(*p) for p in pairs])))
        margin = min(margin, cert.margin)
    report(gap <= 1e-9 and margin >= -1e-9, f"max value gap {gap:.2e}, min PSD margin {margin:.2e}")


def test_c07_exhaustive_sender_security(report):
    strategies = [Store(r) for r in (0.0, 0.3, 0.6, 0.9, 1.0)]
    strategies += [Breidbart(), BasisMeasure(Basis.PLUS), BasisMeasure(Basis.TIMES)]
    violations, checked, worst = 0, 0, -math.inf
    for s in strategies:
        for n in range(1, 7):
            exact = exact_delta_sec(s, n, 1)
            bound = delta_sec_perfect(1, n, strategy_delta(s))
            violations += exact > bound + 1e-12
            worst = max(worst, exact - bound)
            checked += 1
    report(violations == 0, f"{checked} instances, {violations} violations, max exact - bound {worst:.3e}")


def test_c08_protocol_correctness(report):
    p = Params(n=2048, ell=128, p_erase=0.3, p_error=0.01, mode="practical", seed=8)
    runs = run_batch(p, Honest(Basis.PLUS), 1000)
    aborts = sum(t.aborted for t in runs)
    done = [t for t in runs if not t.aborted]
    success = sum(bool(t.correct) for t in done) / max(1, len(done))
    report(success >= 0.999 and aborts / len(runs) <= 0.01,
           f"honest success {success:.3f} (need 0.999), false aborts {aborts}/1000")


def test_c09_receiver_security_proxy(report):
    base = Params(n=64, ell=4, p_erase=0.3, p_error=0.01, mode="practical", seed=90)
    counts = {c: [] for c in (Basis.PLUS, Basis.TIMES)}
    for i in range(5000):
        for k, c in enumerate(counts):
            t = run(replace(base, seed=derive_seed(base.seed, 2 * i + k)), Honest(c))
            counts[c].append(int(t.erasure_report.sum()))
    p_value = _chi_square_counts(counts[Basis.PLUS], counts[Basis.TIMES])
    report(p_value > 0.01, f"chi-square p = {p_value:.3f} over 10000 runs")


def test_c10_tradeoff_surface(report, tmp_path):
    path = tmp_path / "surface.csv"
    assert main(["tradeoff", "--csv", str(path)]) == 0
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    secure = sum(float(x["value"]) < 0 for x in rows)
    bad = 0
    for r in np.round(np.arange(0.02, 1.0001, 0.02), 10):
        a = np.arange(1, min(2, 1 / r) + 1e-12, 0.05)
        v = [tradeoff_value(r, x) for x in a]
        bad += any(y > x + 1e-15 for x, y in zip(v, v[1:]))
    roots = [tradeoff_root_r(1.0) for _ in range(3)]
    ok = secure > 0 and bad == 0 and all(abs(x - ROOT_AT_A1) <= 1e-6 for x in roots)
    report(ok, f"{secure} secure points of {len(rows)}, {bad} monotonicity breaks, root at a=1 {roots[0]}")


def test_c11_product_inequality(report):
    exact = all(lemma5_check([0.5] * n, 0.5).holds
                and lemma5_check([0.5] * n, 0.5).lhs == pytest.approx(0.75 ** n, rel=1e-13)
                and lemma5_check([0.5] * n, 0.5).rhs == pytest.approx(0.75 ** n, rel=1e-13)
                for n in range(1, 21))
    rng = np.random.default_rng(110)
    failures = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 21))
        ps = rng.uniform(0.5, 1, n)
        cap = min(1.0, math.exp(np.log(ps).mean()) * (1 + rng.uniform(0, 0.1)))
        failures += not lemma5_check(ps, cap).holds
    report(exact and failures == 0, f"equality at 1/2: {exact}, {failures} failures in 10000 instances")


def test_c12_hashing_and_codes(report):
    rng = np.random.default_rng(120)
    n, ell, samples = 8, 3, 10_000
    # x != y collide iff M (x ^ y) = 0, so the rate per difference covers all pairs
    hits = np.zeros(1 << n)
    for _ in range(samples):
        h = sample_hash(n, ell, rng)
        images = np.array([h.eval_int(d) for d in range(1 << n)])
        hits += images == images[0]
    rate = hits[1:] / samples
    tol = 4 * math.sqrt(2 ** -ell * (1 - 2 ** -ell) / samples)
    universal = rate.max() <= 2 ** -ell + tol
    family = list(all_affine_hashes(n, 1))
    exact = all(sum(h.eval_int(0) == h.eval_int(d) for h in family) * 2 == len(family) for d in range(1, 1 << n))

    code = hamming74()
    errors = 0
    for length in range(1, 29):
        for x_int in rng.integers(0, 1 << length, 4):
            x = np.array([(int(x_int) >> j) & 1 for j in range(length)], dtype=np.uint8)
            syn = syndrome(code, x)
            for j in range(length):
                y = x.copy()
                y[j] ^= 1
                errors += not np.array_equal(decode(code, y, syn), x)
    report(universal and exact and errors == 0,
           f"max collision rate {rate.max():.4f} (cap {2 ** -ell + tol:.4f}), exact l=1 family {exact}, "
           f"{errors} single-flip decode errors")
