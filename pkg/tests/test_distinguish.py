import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisyot.channels import MeasurementFamily, depolarize, erasure_records
from noisyot.distinguish import (CqEnsemble, dual_certificate, guess_probability, helstrom, nonuniformity,
                                 pa_bound, product_guess, random_measurement_family, records_guess,
                                 delta_of_channel, tensor_certificate)
from noisyot.qstate import BREIDBART_GUESS, basis_vectors, bb84_state, breidbart_vectors, random_density


def brute_force_guess(rho0, rho1, samples=20000, rng=None):
    """Best two-outcome projective measurement found by scanning Bloch directions."""
    best = 0.0
    thetas = np.linspace(0, math.pi, 181)
    phis = np.linspace(0, 2 * math.pi, 181)
    for th in thetas:
        for ph in phis:
            v = np.array([math.cos(th / 2), np.exp(1j * ph) * math.sin(th / 2)])
            p = np.outer(v, v.conj())
            best = max(best, 0.5 * (np.trace(p @ rho0).real + np.trace((np.eye(2) - p) @ rho1).real))
    return best


def test_helstrom_examples():
    assert helstrom(bb84_state(0, "+"), bb84_state(1, "+")) == pytest.approx(1.0, abs=1e-15)
    assert helstrom(bb84_state(0, "+"), bb84_state(0, "x")) == pytest.approx(BREIDBART_GUESS, abs=1e-15)
    assert helstrom(np.eye(2) / 2, np.eye(2) / 2) == pytest.approx(0.5)


def test_helstrom_against_measurement_scan(rng):
    for _ in range(3):
        r0, r1 = random_density(rng), random_density(rng)
        assert brute_force_guess(r0, r1) <= helstrom(r0, r1) + 1e-12
        assert brute_force_guess(r0, r1) >= helstrom(r0, r1) - 2e-4


def test_dual_certificate_is_tight(rng):
    for _ in range(20):
        r0, r1 = random_density(rng), random_density(rng)
        cert = dual_certificate(r0, r1)
        assert cert.margin >= -1e-12
        assert cert.value == pytest.approx(helstrom(r0, r1), abs=1e-12)


def test_tensor_certificate_three_bits(rng):
    pairs = [(random_density(rng), random_density(rng)) for _ in range(3)]
    cert = tensor_certificate(pairs)
    assert cert.value == pytest.approx(product_guess([CqEnsemble.binary(*p) for p in pairs]), abs=1e-12)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        CqEnsemble(((0, 0.7, np.eye(2) / 2),))
    with pytest.raises(ValueError):
        CqEnsemble(((0, 0.5, np.eye(2) / 2), (0, 0.5, np.eye(2) / 2)))
    with pytest.raises(ValueError):
        product_guess([CqEnsemble.binary(np.eye(2) / 2, np.eye(2) / 2, p0=0.7)])


def test_nonuniformity_cases():
    rho0, rho1 = bb84_state(0, "+"), bb84_state(1, "+")
    assert nonuniformity(CqEnsemble.binary(rho0, rho1)) == pytest.approx(0.5, abs=1e-14)
    assert nonuniformity(CqEnsemble.binary(np.eye(2) / 2, np.eye(2) / 2)) == pytest.approx(0, abs=1e-14)
    # classical bias without side information: d = |p - 1/2|
    one = np.eye(1)
    assert nonuniformity(CqEnsemble.binary(one, one, p0=0.8)) == pytest.approx(0.3, abs=1e-14)
    # a missing label counts as probability zero
    assert nonuniformity(CqEnsemble(((0, 1.0, one),)), 4) == pytest.approx(0.75, abs=1e-14)


def test_nonuniformity_limits():
    with pytest.raises(ValueError):
        nonuniformity(CqEnsemble.binary(np.eye(2) / 2, np.eye(2) / 2), 3)
    with pytest.raises(ValueError):
        nonuniformity(CqEnsemble.binary(np.eye(128) / 128, np.eye(128) / 128), 16)


def test_pa_bound():
    assert pa_bound(1, 0, 1.0) == pytest.approx(2 ** -0.5)
    assert pa_bound(4, 2, 0.25) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        pa_bound(1, 0, 1.5)


def test_guess_probability_cases():
    fam_plus = MeasurementFamily.projective(basis_vectors("+"))
    assert guess_probability(fam_plus, "+") == pytest.approx(1.0)
    assert guess_probability(fam_plus, "x") == pytest.approx(0.5)
    for r in (0, 0.5, 1):
        assert guess_probability(depolarize(r), "x") == pytest.approx((1 + r) / 2, abs=1e-14)
    assert delta_of_channel(MeasurementFamily.projective(breidbart_vectors())) == pytest.approx(
        0.8535533906, abs=1e-9)


def test_erasure_channel_delta():
    for p in (0, 0.4, 1):
        assert delta_of_channel(lambda rho: erasure_records(p, rho)) == pytest.approx(1 - p / 2, abs=1e-12)


def test_records_guess_one_sided_branch():
    from noisyot.channels import StoredRecord

    r0 = [StoredRecord("a", None, 1.0)]
    r1 = [StoredRecord("b", None, 1.0)]
    assert records_guess(r0, r1) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_uncertainty_relation_random_families(seed):
    fam = random_measurement_family(np.random.default_rng(seed))
    assert guess_probability(fam, "+") * guess_probability(fam, "x") <= BREIDBART_GUESS ** 2 + 1e-9
