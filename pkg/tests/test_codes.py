import itertools
import math

import numpy as np
import pytest

from noisyot.codes import (LinearCode, SyndromeBundle, binary_entropy, block_failure_probability, decode,
                           decode_success_probability, hamming74, hamming_parity_check, load_parity_check,
                           syndrome, syndrome_bits_asymptotic)


@pytest.fixture(scope="module")
def code():
    return hamming74()


def test_dimensions(code):
    assert (code.n_block, code.k_block, code.syndrome_bits_per_block) == (7, 4, 3)
    assert code.rate == pytest.approx(4 / 7)
    assert code.t == 1
    assert code.syndrome_length(28) == 12
    assert code.syndrome_length(29) == 15


def test_codewords_have_zero_syndrome(code):
    H = code.parity_check.astype(int)
    for bits in itertools.product((0, 1), repeat=7):
        x = np.array(bits, dtype=np.uint8)
        if not (H @ x % 2).any():
            assert not syndrome(code, x).bits.any()


def test_single_flip_syndrome_is_position(code):
    for j in range(7):
        e = np.zeros(7, dtype=np.uint8)
        e[j] = 1
        syn = syndrome(code, e).bits
        assert int("".join(map(str, syn)), 2) == j + 1


def test_syndrome_length_accounting(code, rng):
    for length in (1, 6, 7, 8, 100, 700):
        x = rng.integers(0, 2, size=length, dtype=np.uint8)
        assert syndrome(code, x).total_bits == math.ceil(length / 7) * 3


def test_decode_noiseless(code, rng):
    x = rng.integers(0, 2, size=50, dtype=np.uint8)
    assert np.array_equal(decode(code, x, syndrome(code, x)), x)


def test_exhaustive_single_flip_recovery(code, rng):
    for length in range(1, 29):
        for _ in range(4):
            x = rng.integers(0, 2, size=length, dtype=np.uint8)
            syn = syndrome(code, x)
            for j in range(length):
                y = x.copy()
                y[j] ^= 1
                assert np.array_equal(decode(code, y, syn), x)


def test_one_error_per_block_recovery(code, rng):
    x = rng.integers(0, 2, size=28, dtype=np.uint8)
    syn = syndrome(code, x)
    for positions in itertools.product(range(8), repeat=4):
        e = np.zeros(28, dtype=np.uint8)
        for block, pos in enumerate(positions):
            if pos < 7:
                e[7 * block + pos] = 1
        assert np.array_equal(decode(code, x ^ e, syn), x)


def test_two_flips_in_a_block_fail(code):
    x = np.zeros(7, dtype=np.uint8)
    syn = syndrome(code, x)
    wrong = 0
    for i, j in itertools.combinations(range(7), 2):
        y = x.copy()
        y[[i, j]] = 1
        wrong += not np.array_equal(decode(code, y, syn), x)
    assert wrong == 21


def test_decode_length_mismatch(code):
    with pytest.raises(ValueError):
        decode(code, np.zeros(8, dtype=np.uint8), syndrome(code, np.zeros(9, dtype=np.uint8)))


def test_bundle_roundtrip(code, rng):
    syn = syndrome(code, rng.integers(0, 2, size=40, dtype=np.uint8))
    back = SyndromeBundle.from_dict(syn.to_dict())
    assert np.array_equal(back.bits, syn.bits) and back.length == 40


def test_entropy_and_asymptotic_bits():
    assert syndrome_bits_asymptotic(1000, 0) == 0
    assert syndrome_bits_asymptotic(1000, 0.5 - 1e-9) == pytest.approx(1000, rel=1e-6)
    h = -0.029 * math.log2(0.029) - 0.971 * math.log2(0.971)
    assert syndrome_bits_asymptotic(1000, 0.029) == pytest.approx(1000 * h, abs=1e-9)
    assert syndrome_bits_asymptotic(1000, 0.029) == pytest.approx(189.35, abs=0.01)
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-4)


def test_block_failure_probability_against_enumeration(code):
    p = 0.01
    fail = 0.0
    for bits in itertools.product((0, 1), repeat=7):
        e = np.array(bits, dtype=np.uint8)
        w = int(e.sum())
        ok = np.array_equal(decode(code, e, syndrome(code, np.zeros(7, dtype=np.uint8))), np.zeros(7))
        fail += (not ok) * p ** w * (1 - p) ** (7 - w)
    assert block_failure_probability(code, p) == pytest.approx(fail, abs=1e-15)
    assert block_failure_probability(code, p, 3) == pytest.approx(3 * p * p * (1 - p) + p ** 3, abs=1e-15)
    assert decode_success_probability(code, 10, p) == pytest.approx(
        (1 - fail) * (1 - block_failure_probability(code, p, 3)))


def test_custom_code_from_file(tmp_path):
    path = tmp_path / "rep3.txt"
    path.write_text("# repetition code\n1 1 0\n0,1,1\n")
    code = load_parity_check(path)
    assert code.t == 1 and code.k_block == 1
    x = np.array([1, 1, 1, 0, 0, 0], dtype=np.uint8)
    assert np.array_equal(decode(code, x ^ np.array([0, 1, 0, 0, 0, 1], dtype=np.uint8), syndrome(code, x)), x)


def test_larger_hamming_code():
    code = LinearCode(hamming_parity_check(4))
    assert (code.n_block, code.k_block, code.t) == (15, 11, 1)


def test_invalid_codes():
    with pytest.raises(ValueError):
        LinearCode(np.array([[1, 1], [1, 1]]))
    with pytest.raises(ValueError):
        LinearCode(np.array([[1, 0, 1], [1, 0, 1]]))
