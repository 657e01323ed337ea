import math

import numpy as np
import pytest

from noisyot.channels import (ErasureFlag, KrausChannel, MeasurementFamily, StoredRecord, apply, as_storage,
                              bloch_map, check_records, depolarize, erase, erasure_records,
                              identity_channel, measure_and_store, unitary_channel)
from noisyot.qstate import I2, X, Z, bb84_state, breidbart_vectors, random_density


def test_depolarize_formula(rng):
    for r in (0, 0.3, 0.71, 1):
        rho = random_density(rng)
        assert np.allclose(apply(depolarize(r), rho), r * rho + (1 - r) * I2 / 2, atol=1e-14)


def test_depolarize_bloch_map_is_isotropic_contraction():
    T, t = bloch_map(depolarize(0.4))
    assert np.allclose(T, 0.4 * np.eye(3), atol=1e-14)
    assert np.allclose(t, 0, atol=1e-14)


def test_channel_validation():
    with pytest.raises(ValueError):
        depolarize(1.2)
    with pytest.raises(ValueError):
        KrausChannel((np.eye(2) * 0.5,))


def test_channel_composition(rng):
    u = unitary_channel(X)
    rho = random_density(rng)
    both = depolarize(0.5).then(u)
    assert np.allclose(both(rho), X @ apply(depolarize(0.5), rho) @ X, atol=1e-14)
    assert np.allclose(identity_channel()(rho), rho)


def test_measurement_family_validation():
    with pytest.raises(ValueError):
        MeasurementFamily(((0, np.eye(2) / 2),))
    with pytest.raises(ValueError):
        MeasurementFamily(((0, np.eye(2) / math.sqrt(2)), (0, np.eye(2) / math.sqrt(2))))


def test_mixing_and_conjugation_keep_completeness():
    fam = MeasurementFamily.projective(breidbart_vectors())
    flipped = fam.conjugated(Z)
    mixed = fam.mix(flipped, 0.3)
    assert len(mixed.labels) == 4
    total = sum(f.conj().T @ f for _, f in mixed.operators)
    assert np.allclose(total, np.eye(2))


def test_measure_and_store_branches():
    fam = MeasurementFamily.projective(breidbart_vectors())
    recs = measure_and_store(fam, None, bb84_state(0, "+"))
    check_records(recs)
    assert math.isclose(recs[0].weight, math.cos(math.pi / 8) ** 2, abs_tol=1e-15)
    assert all(rec.state is None for rec in recs)
    stored = measure_and_store(fam, depolarize(0.5), bb84_state(0, "+"))
    check_records(stored)
    assert all(np.isclose(np.trace(rec.state), 1) for rec in stored)


def test_erasure_model(rng):
    rho = bb84_state(1, "x")
    recs = erasure_records(0.25, rho)
    assert [r.outcome for r in recs] == ["erased", "kept"]
    assert math.isclose(sum(r.weight for r in recs), 1.0)
    flags = [erase(0.25, rho, rng) for _ in range(4000)]
    rate = np.mean([f.erased for f in flags])
    assert abs(rate - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 4000)
    with pytest.raises(ValueError):
        ErasureFlag(True, rho)


def test_as_storage_accepts_all_forms():
    rho = bb84_state(0, "+")
    fam = MeasurementFamily.projective(breidbart_vectors())
    for storage in (depolarize(0.2), fam, (fam, depolarize(0.2)), lambda r: [StoredRecord(None, r, 1.0)]):
        check_records(as_storage(storage)(rho))
    with pytest.raises(TypeError):
        as_storage(42)
