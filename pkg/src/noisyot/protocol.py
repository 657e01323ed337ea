"""Randomized 1-2 OT in the bounded-noisy-storage setting.

Two executable protocols share one skeleton:

* ``perfect``: ideal single qubits, no loss, no honest noise;
* ``practical``: photonic slots with honest erasures (reported by Bob),
  a binary symmetric channel on honest outcomes, an abort rule on the
  per-basis counts, and syndrome-based error correction.

Both parties live in one process. Randomness comes from one declared seed
split into named Philox streams, so a run is reproducible bit for bit and
changing one party's behaviour never shifts another party's draws.
"""

from __future__ import annotations

import configparser
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .adversary import (BeamSplit, Strategy, choice_bit_cprime, Hybrid, parse_strategy,
                        post_reveal_guess, storage_phase)
from .codes import LinearCode, SyndromeBundle, decode, hamming74, syndrome
from .hashing import AffineHash, bits_to_hex, hex_to_bits, pad_input, sample_hash
from .qstate import Basis

log = logging.getLogger(__name__)

MODES = ("perfect", "practical")
STREAMS = ("alice_x", "alice_theta", "bob", "erasure", "bsc", "hash", "adversary")
THETA_SYMBOLS = {Basis.PLUS: "+", Basis.TIMES: "x"}


@dataclass(frozen=True)
class Params:
    n: int
    ell: int
    T: float = 1.0
    r: float = 0.0
    p_erase: float = 0.0
    p_error: float = 0.0
    mu: float = 0.0
    c_abort: float = 3.0
    seed: int = 0
    mode: str = "perfect"

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"n must be at least 8, got {self.n}")
        if not 1 <= self.ell <= self.n:
            raise ValueError(f"need 1 <= ell <= n, got ell={self.ell}")
        for name in ("p_erase", "p_error"):
            value = getattr(self, name)
            if not 0 <= value < 0.5:
                raise ValueError(f"{name} must lie in [0, 1/2), got {value!r}")
        if not 0 <= self.r <= 1:
            raise ValueError(f"r must lie in [0, 1], got {self.r!r}")
        if not 0 <= self.mu <= 1:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu!r}")
        if self.c_abort < 0:
            raise ValueError("c_abort must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def from_mapping(cls, data: dict) -> "Params":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown parameters: {sorted(unknown)}")
        casts = {"n": int, "ell": int, "seed": int, "mode": str}
        return cls(**{k: casts.get(k, float)(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: "str | Path") -> dict:
    """Read ``key = value`` pairs; an optional ``[params]`` header is allowed.

    Dashes in keys become underscores, so ``p-erase = 0.3`` works too.
    """
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not text.lstrip().startswith("["):
        text = "[params]\n" + text
    parser.read_string(text)
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[key.replace("-", "_")] = value
    return out


@dataclass(frozen=True)
class Honest:
    choice: Basis

    def __post_init__(self):
        object.__setattr__(self, "choice", Basis.parse(self.choice))
        if self.choice is Basis.BREIDBART:
            raise ValueError("honest choice must be + or x")

    def describe(self) -> str:
        return f"honest:{THETA_SYMBOLS[self.choice]}"


Bob = Union[Honest, Strategy]


def parse_bob(text: str) -> Bob:
    kind, _, rest = text.strip().partition(":")
    if kind.lower() == "honest":
        return Honest(Basis.parse(rest.strip() or "+"))
    return parse_strategy(text)


def choice_bit(basis: Basis) -> int:
    """OT convention: ``+`` is choice 0, ``x`` is choice 1."""
    return 0 if Basis.parse(basis) is Basis.PLUS else 1


def streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent named generators split from one seed."""
    return {name: np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))
            for k, name in enumerate(STREAMS)}


def derive_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th run of a batch rooted at ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=(len(STREAMS), index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def abort_threshold(n: int, p_erase: float, c_abort: float = 3.0) -> tuple[int, bool]:
    """``floor((1 - p_erase) n / 2 - c_abort sqrt(n))`` and whether it was clamped at 0."""
    if not 0 <= p_erase <= 1:
        raise ValueError(f"p_erase must lie in [0, 1], got {p_erase!r}")
    value = math.floor((1 - p_erase) * n / 2 - c_abort * math.sqrt(n))
    if value < 0:
        return 0, True
    return value, False


@dataclass(frozen=True)
class Transcript:
    params: Params
    bob: str
    choice: Optional[Basis]
    x: np.ndarray
    theta: np.ndarray
    erasure_report: Optional[np.ndarray]
    index_plus: np.ndarray
    index_times: np.ndarray
    hash_plus: Optional[AffineHash]
    hash_times: Optional[AffineHash]
    syndrome_plus: Optional[SyndromeBundle]
    syndrome_times: Optional[SyndromeBundle]
    s_plus: Optional[np.ndarray]
    s_times: Optional[np.ndarray]
    bob_output: Optional[np.ndarray]
    aborted: bool
    threshold: Optional[int] = None
    notes: tuple = ()
    adversary: Optional[dict] = None

    @property
    def seed(self) -> int:
        return self.params.seed

    @property
    def index_sets(self) -> tuple[np.ndarray, np.ndarray]:
        return self.index_plus, self.index_times

    def s(self, basis: Basis) -> Optional[np.ndarray]:
        return self.s_plus if Basis.parse(basis) is Basis.PLUS else self.s_times

    @property
    def correct(self) -> Optional[bool]:
        """Honest runs only: did Bob obtain ``S_C``? ``None`` if aborted or dishonest."""
        if self.aborted or self.choice is None:
            return None
        return bool(np.array_equal(self.bob_output, self.s(self.choice)))

    def to_dict(self) -> dict:
        def hexed(bits):
            return None if bits is None else bits_to_hex(bits)

        theta = "".join("+" if b == 0 else "x" for b in self.theta)
        return {
            "params": self.params.to_dict(),
            "bob": self.bob,
            "choice": None if self.choice is None else THETA_SYMBOLS[self.choice],
            "x": hexed(self.x),
            "theta": theta,
            "erasure_report": hexed(self.erasure_report),
            "index_sets": {"+": self.index_plus.tolist(), "x": self.index_times.tolist()},
            "hashes": {"+": self.hash_plus and self.hash_plus.to_dict(),
                       "x": self.hash_times and self.hash_times.to_dict()},
            "syndromes": {"+": self.syndrome_plus and self.syndrome_plus.to_dict(),
                          "x": self.syndrome_times and self.syndrome_times.to_dict()},
            "s_plus": hexed(self.s_plus),
            "s_times": hexed(self.s_times),
            "bob_output": hexed(self.bob_output),
            "aborted": self.aborted,
            "threshold": self.threshold,
            "notes": list(self.notes),
            "adversary": self.adversary,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        params = Params.from_mapping(data["params"])
        n, ell = params.n, params.ell

        def bits(key, length):
            return None if data[key] is None else hex_to_bits(data[key], length)

        def opt(kind, key, loader):
            value = data[kind][key]
            return None if value is None else loader(value)

        choice = data["choice"]
        return cls(
            params=params, bob=data["bob"],
            choice=None if choice is None else Basis.parse(choice),
            x=bits("x", n),
            theta=np.array([0 if c == "+" else 1 for c in data["theta"]], dtype=np.uint8),
            erasure_report=bits("erasure_report", n),
            index_plus=np.array(data["index_sets"]["+"], dtype=np.int64),
            index_times=np.array(data["index_sets"]["x"], dtype=np.int64),
            hash_plus=opt("hashes", "+", AffineHash.from_dict),
            hash_times=opt("hashes", "x", AffineHash.from_dict),
            syndrome_plus=opt("syndromes", "+", SyndromeBundle.from_dict),
            syndrome_times=opt("syndromes", "x", SyndromeBundle.from_dict),
            s_plus=bits("s_plus", ell), s_times=bits("s_times", ell),
            bob_output=bits("bob_output", ell), aborted=bool(data["aborted"]),
            threshold=data["threshold"], notes=tuple(data["notes"]), adversary=data["adversary"])

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        return cls.from_dict(json.loads(text))


def _hash_substring(h: AffineHash, x: np.ndarray, index: np.ndarray) -> np.ndarray:
    return h(pad_input(x[index], h.n))


def _qubits(x: np.ndarray, theta: np.ndarray, keep: np.ndarray):
    return [(int(x[i]), Basis.PLUS if theta[i] == 0 else Basis.TIMES) if keep[i] else None
            for i in range(x.size)]


def _dishonest(strategy: Strategy, p: Params, rng, x, theta, keep, idx_plus, idx_times,
               hashes, syndromes, code):
    """Storage phase, then the best guess of both substrings once the bases are public."""
    lab = storage_phase(strategy, _qubits(x, theta, keep), rng["adversary"])
    cprime = choice_bit_cprime(Hybrid(tuple(strategy.slot(i) for i in range(p.n))), p.n)
    sets = {Basis.PLUS: idx_plus, Basis.TIMES: idx_times}
    stats = {"strategy": strategy.describe(), "cprime": THETA_SYMBOLS[cprime],
             "multi_photon_slots": int(sum(lab.multi_photon))}
    theta_b = [Basis.PLUS if t == 0 else Basis.TIMES for t in theta]
    guess_c = None
    for basis in (cprime, cprime.other):
        index = sets[basis]
        guess, probs = post_reveal_guess(lab, theta_b, index.tolist(), rng["adversary"])
        if syndromes is not None:
            # the syndrome is public; use it the same way honest Bob would
            guess = decode(code, guess, syndromes[basis])
        tag = "committed" if basis is cprime else "other"
        stats[f"{tag}_bits"] = int(index.size)
        stats[f"{tag}_correct_bits"] = int((guess == x[index]).sum())
        stats[f"{tag}_expected_correct_bits"] = float(probs.sum())
        stats[f"{tag}_log2_guess_probability"] = float(np.log2(probs).sum()) if probs.size else 0.0
        if basis is cprime:
            guess_c = guess
    output = hashes[cprime](pad_input(guess_c, p.n))
    stats["other_hash_guessed"] = bool(np.array_equal(
        hashes[cprime.other](pad_input(guess, p.n)), hashes[cprime.other](pad_input(x[sets[cprime.other]], p.n))))
    return output, stats


def _run(p: Params, bob: Bob, code: Optional[LinearCode]) -> Transcript:
    rng = streams(p.seed)
    n = p.n
    x = rng["alice_x"].integers(0, 2, size=n, dtype=np.uint8)
    theta = rng["alice_theta"].integers(0, 2, size=n, dtype=np.uint8)
    practical = p.mode == "practical"
    notes = []

    # erasures: honest loss is basis independent; a dishonest Bob sees a lossless
    # channel and only decides what to report
    if practical and isinstance(bob, BeamSplit):
        report = (rng["erasure"].random(n) >= bob.p_detect).astype(np.uint8)
    elif practical and getattr(bob, "reports_all_erased", False):
        report = np.ones(n, dtype=np.uint8)
    elif practical:
        report = (rng["erasure"].random(n) < p.p_erase).astype(np.uint8)
    else:
        report = None
    keep = np.ones(n, dtype=bool) if report is None else report == 0

    idx_plus = np.flatnonzero(keep & (theta == 0))
    idx_times = np.flatnonzero(keep & (theta == 1))

    threshold = None
    if practical:
        threshold, clamped = abort_threshold(n, p.p_erase, p.c_abort)
        if clamped:
            notes.append("abort threshold clamped to 0")
            log.info("abort threshold clamped to 0 for n=%d, p_erase=%g", n, p.p_erase)
        if idx_plus.size <= threshold or idx_times.size <= threshold:
            return Transcript(p, bob.describe(), getattr(bob, "choice", None), x, theta, report,
                              idx_plus, idx_times, None, None, None, None, None, None, None,
                              True, threshold, tuple(notes))

    hashes = {Basis.PLUS: sample_hash(n, p.ell, rng["hash"]),
              Basis.TIMES: sample_hash(n, p.ell, rng["hash"])}
    sets = {Basis.PLUS: idx_plus, Basis.TIMES: idx_times}
    syndromes = None
    if practical:
        syndromes = {b: syndrome(code, x[sets[b]]) for b in sets}
    s_plus = _hash_substring(hashes[Basis.PLUS], x, idx_plus)
    s_times = _hash_substring(hashes[Basis.TIMES], x, idx_times)

    adversary = None
    if isinstance(bob, Honest):
        c = bob.choice
        own = sets[c]
        if own.size == 0:
            notes.append(f"empty index set for basis {THETA_SYMBOLS[c]}; output is the hash of zeros")
        # same basis: deterministic outcome; the conjugate basis gives a coin flip
        coins = rng["bob"].integers(0, 2, size=n, dtype=np.uint8)
        basis_c = 0 if c is Basis.PLUS else 1
        x_bob = np.where(theta == basis_c, x, coins).astype(np.uint8)
        if practical and p.p_error > 0:
            x_bob ^= (rng["bsc"].random(n) < p.p_error).astype(np.uint8)
        sub = x_bob[own]
        if practical:
            sub = decode(code, sub, syndromes[c])
        bob_output = hashes[c](pad_input(sub, n))
    else:
        bob_output, adversary = _dishonest(bob, p, rng, x, theta, keep, idx_plus, idx_times,
                                           hashes, syndromes, code)

    return Transcript(p, bob.describe(), getattr(bob, "choice", None), x, theta, report,
                      idx_plus, idx_times, hashes[Basis.PLUS], hashes[Basis.TIMES],
                      None if syndromes is None else syndromes[Basis.PLUS],
                      None if syndromes is None else syndromes[Basis.TIMES],
                      s_plus, s_times, bob_output, False, threshold, tuple(notes), adversary)


def run_rot_perfect(p: Params, bob: Bob) -> Transcript:
    if p.mode != "perfect":
        raise ValueError("run_rot_perfect needs mode='perfect'")
    return _run(p, bob, None)


def run_rot_practical(p: Params, bob: Bob, code: Optional[LinearCode] = None) -> Transcript:
    if p.mode != "practical":
        raise ValueError("run_rot_practical needs mode='practical'")
    return _run(p, bob, code if code is not None else hamming74())


def run(p: Params, bob: Bob, code: Optional[LinearCode] = None) -> Transcript:
    return run_rot_perfect(p, bob) if p.mode == "perfect" else run_rot_practical(p, bob, code)


def _run_indexed(args):
    p, bob, code, index = args
    return run(replace(p, seed=derive_seed(p.seed, index)), bob, code)


def run_batch(p: Params, bob: Bob, runs: int, workers: Optional[int] = None,
              code: Optional[LinearCode] = None) -> list[Transcript]:
    """``runs`` independent runs with seeds derived from ``p.seed``, in run order.

    ``workers=1`` stays in-process; ``None`` uses every logical core.
    """
    jobs = [(p, bob, code, i) for i in range(runs)]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or runs < 2:
        return [_run_indexed(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_indexed, jobs, chunksize=max(1, runs // (4 * workers))))


@dataclass(frozen=True)
class OtInputs:
    s0_hat: np.ndarray
    s1_hat: np.ndarray
    c: int

    def __post_init__(self):
        a, b = np.asarray(self.s0_hat, dtype=np.uint8), np.asarray(self.s1_hat, dtype=np.uint8)
        if a.shape != b.shape:
            raise ValueError("OT inputs must have equal length")
        if self.c not in (0, 1):
            raise ValueError("choice bit must be 0 or 1")
        object.__setattr__(self, "s0_hat", a)
        object.__setattr__(self, "s1_hat", b)


def rot_to_ot(t: Transcript, inputs: OtInputs) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray]:
    """One-time pad Alice's inputs with the ROT strings; Bob unpads his chosen one."""
    if t.aborted:
        raise ValueError("cannot build OT from an aborted transcript")
    if inputs.s0_hat.size != t.params.ell:
        raise ValueError(f"OT inputs must have {t.params.ell} bits")
    if t.choice is not None and choice_bit(t.choice) != inputs.c:
        raise ValueError("choice bit disagrees with the ROT choice")
    pads = (inputs.s0_hat ^ t.s_plus, inputs.s1_hat ^ t.s_times)
    return pads, t.bob_output ^ pads[inputs.c]
