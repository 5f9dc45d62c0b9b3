import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehpolar.channel import bec, bsc, symmetrize, validate_channel
from ehpolar.construction import build_tables, select_information_set
from ehpolar.errors import (
    AlphabetMismatch,
    ImpossibleObservation,
    IndexOutOfRange,
    LengthNotPowerOfTwo,
    MessageLengthMismatch,
)
from ehpolar.polar_core import (
    CodeSpec,
    decode,
    decode_batch,
    encode,
    encode_batch,
    frozen_variates,
    log2_length,
    polar_transform,
    sample_frozen_bit,
    sc_channel_posterior,
    sc_source_posterior,
)
from oracles import gn_matrix, posterior_bruteforce, source_chain_bruteforce

NOISELESS = validate_channel([[1, 0], [0, 1]])


def test_transform_examples():
    assert polar_transform([0, 0, 0, 0]).tolist() == [0, 0, 0, 0]
    assert polar_transform([1, 0, 1, 1]).tolist() == [1, 1, 0, 1]
    assert polar_transform([1, 1, 0, 1]).tolist() == [1, 0, 1, 1]
    assert polar_transform([0, 0, 0, 1]).tolist() == [1, 1, 1, 1]
    with pytest.raises(LengthNotPowerOfTwo):
        polar_transform([1, 0, 1])
    with pytest.raises(LengthNotPowerOfTwo):
        log2_length(0)


@pytest.mark.parametrize("k", range(0, 7))
def test_transform_matches_kronecker_matrix(k):
    n = 1 << k
    G = gn_matrix(n)
    u = np.random.default_rng(k).integers(0, 2, (50, n))
    assert np.array_equal(polar_transform(u), (u @ G) % 2)


@pytest.mark.parametrize("k", range(1, 17))
def test_transform_involution_and_linearity(k):
    n = 1 << k
    rng = np.random.default_rng(100 + k)
    T = max(4, min(10_000, (1 << 22) // n))
    u = rng.integers(0, 2, (T, n), dtype=np.uint8)
    v = rng.integers(0, 2, (T, n), dtype=np.uint8)
    xu = polar_transform(u)
    assert np.array_equal(polar_transform(xu), u)
    assert np.array_equal(polar_transform(u ^ v), xu ^ polar_transform(v))


def test_transform_does_not_mutate_input():
    u = np.array([1, 0, 1, 1], dtype=np.uint8)
    polar_transform(u)
    assert u.tolist() == [1, 0, 1, 1]


def test_channel_posterior_examples():
    sym = symmetrize(bsc(0.11), 0.5)
    assert sc_channel_posterior(sym, [(0, 0)], [], 0) == pytest.approx((0.89, 0.11))
    sym = symmetrize(bec(0.5), 0.5)
    assert sc_channel_posterior(sym, [(0, "e"), (0, "e")], [], 0) == pytest.approx((0.5, 0.5))
    sym = symmetrize(NOISELESS, 0.5)
    u = np.array([1, 0, 1, 1])
    x = polar_transform(u)
    for i in range(4):
        post = sc_channel_posterior(sym, [(0, int(b)) for b in x], u, i)
        assert post[u[i]] == pytest.approx(1.0)


def test_channel_posterior_errors():
    sym = symmetrize(bsc(0.11), 0.5)
    with pytest.raises(IndexOutOfRange):
        sc_channel_posterior(sym, [0, 0], [], 2)
    with pytest.raises(IndexOutOfRange):
        sc_channel_posterior(sym, [0, 0], [], 1)
    with pytest.raises(AlphabetMismatch):
        sc_channel_posterior(sym, [0, 9], [], 0)
    with pytest.raises(LengthNotPowerOfTwo):
        sc_channel_posterior(sym, [0, 0, 0], [], 0)
    noiseless = symmetrize(NOISELESS, 0.5)
    # x = (0, 0) forces u_0 = 0, so prefix u_0 = 1 is impossible
    with pytest.raises(ImpossibleObservation):
        sc_channel_posterior(noiseless, [(0, 0), (0, 0)], [1], 1)


def test_source_posterior_examples():
    for prefix in ([], [0], [1]):
        i = len(prefix)
        assert sc_source_posterior(0.5, prefix, i, 1) == pytest.approx((0.5, 0.5))
    assert sc_source_posterior(0.25, [], 0, 1) == pytest.approx((0.625, 0.375))
    assert sc_source_posterior(0.25, [0], 1, 1) == pytest.approx((0.9, 0.1))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_source_posterior_matches_enumeration(k):
    n = 1 << k
    P = source_chain_bruteforce(0.3, n)
    for u in itertools.product((0, 1), repeat=n):
        for i in range(n):
            marg = P.sum(axis=tuple(range(i + 1, n)))[u[:i]]
            if marg.sum() == 0:
                continue
            got = sc_source_posterior(0.3, u, i, k)
            assert got == pytest.approx(tuple(marg / marg.sum()), abs=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_asymmetric_posterior_matches_enumeration(k):
    # posterior of the pair (p_X, q) equals the SC posterior on q^ at (0^n, y^n)
    n = 1 << k
    ch = validate_channel([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
    sym = symmetrize(ch, 0.35)
    rng = np.random.default_rng(k)
    for _ in range(20):
        y = rng.integers(0, 3, n)
        u = rng.integers(0, 2, n)
        for i in range(n):
            want = posterior_bruteforce(ch.w, 0.35, n, y, u, i)
            got = sc_channel_posterior(sym, [(0, int(v)) for v in y], u, i)
            assert got == pytest.approx(tuple(want), abs=1e-12)


def test_sample_frozen_bit_examples():
    assert sample_frozen_bit((0.5, 0.5), 0.49) == 1
    for omega in (0.0, 0.3, 0.999):
        assert sample_frozen_bit((1.0, 0.0), omega) == 0
    assert sample_frozen_bit((0.9, 0.1), 0.05) == 1
    assert sample_frozen_bit((0.9, 0.1), 0.5) == 0


def test_frozen_variates_keyed():
    a = frozen_variates(3, 64)
    assert np.array_equal(a, frozen_variates(3, 64))
    assert np.array_equal(frozen_variates(3, 16), a[:16])
    assert not np.array_equal(a, frozen_variates(4, 64))
    assert not np.array_equal(frozen_variates(3, 64, 0), frozen_variates(3, 64, 1))
    assert np.all((a >= 0) & (a < 1))


def test_codespec_validation():
    with pytest.raises(IndexOutOfRange):
        CodeSpec(2, (4,), bsc(0.1))
    spec = CodeSpec(2, (3, 1), bsc(0.1))
    assert spec.info_set == (1, 3) and spec.rate == 0.5
    with pytest.raises(MessageLengthMismatch):
        encode(spec, [1])


def test_encode_all_information():
    spec = CodeSpec(3, tuple(range(8)), bsc(0.1))
    msg = np.array([1, 0, 1, 1, 0, 0, 1, 0])
    u, x = encode(spec, msg)
    assert np.array_equal(u, msg)
    assert np.array_equal(x, polar_transform(msg))


def test_encode_uniform_frozen_bits_follow_stream():
    spec = CodeSpec(3, (7,), bsc(0.1), frozen_seed=11)
    u, _ = encode(spec, [1])
    omega = frozen_variates(11, 8)
    assert np.array_equal(u[:7], (omega[:7] < 0.5).astype(np.uint8))


def test_encode_biased_source_threshold():
    spec = CodeSpec(1, (1,), bsc(0.1), p1=0.25, frozen_seed=5)
    u, x = encode(spec, [0])
    omega = frozen_variates(5, 2)
    assert u[0] == int(omega[0] < 0.375)
    assert u[1] == 0
    assert np.array_equal(x, polar_transform(u))


def test_encode_biased_frozen_bits_have_source_law():
    # frozen-only code: x should be i.i.d. Bern(p1)
    spec = CodeSpec(2, (), bsc(0.1), p1=0.2)
    _, x = encode_batch(spec, np.zeros((20_000, 0), dtype=np.uint8), range(20_000))
    freq = np.bincount(x.astype(np.int64) @ np.array([8, 4, 2, 1]), minlength=16) / 20_000
    want = np.array([np.prod([0.2 if b else 0.8 for b in map(int, f"{v:04b}")]) for v in range(16)])
    assert np.all(np.abs(freq - want) <= 4 * np.sqrt(want * (1 - want) / 20_000) + 1e-12)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("p1", [0.5, 0.3])
def test_noiseless_roundtrip_exhaustive(k, p1):
    n = 1 << k
    rng = np.random.default_rng(k)
    info = tuple(sorted(rng.choice(n, size=max(1, n // 2), replace=False)))
    spec = CodeSpec(k, info, NOISELESS, p1=p1, frozen_seed=2)
    msgs = np.array(list(itertools.product((0, 1), repeat=len(info))), dtype=np.uint8)
    trials = range(len(msgs))
    u, x = encode_batch(spec, msgs, trials)
    uhat, est = decode_batch(spec, x, trials)
    assert np.array_equal(est, msgs)
    assert np.array_equal(uhat, u)


def test_tie_broken_to_zero():
    ch = bec(1.0)
    spec = CodeSpec(2, (3,), ch)
    erased = [1, 1, 1, 1]
    uhat, msg = decode(spec, erased)
    assert msg.tolist() == [0]


def test_decode_rejects_bad_outputs():
    spec = CodeSpec(1, (1,), bsc(0.1))
    with pytest.raises(AlphabetMismatch):
        decode(spec, [0, 2])
    with pytest.raises(LengthNotPowerOfTwo):
        decode(spec, [0, 1, 0, 1])


def test_decoder_matches_bruteforce_map_bsc4():
    ch = bsc(0.11)
    zt = build_tables(ch, 0.5, 2, "exact")
    order = np.argsort(zt.z_channel)
    info = tuple(sorted(int(i) for i in order[:2]))
    spec = CodeSpec(2, info, ch, frozen_seed=9)
    msg = np.array([1, 0], dtype=np.uint8)
    u, x = encode(spec, msg)
    for flip in range(4):
        y = x.copy()
        y[flip] ^= 1
        uhat, est = decode(spec, y)
        # oracle: per-bit MAP on enumerated p(u^i, y^n) using the decoder's own prefix
        for i in range(4):
            post = posterior_bruteforce(ch.w, 0.5, 4, y, uhat, i)
            if i in info:
                # exact ties (up to rounding) go to 0
                assert uhat[i] == int(post[1] > post[0] + 1e-12)
        assert np.array_equal(est, uhat[list(info)])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 6), st.integers(0, 2**32), st.floats(0.05, 0.95))
def test_frozen_reproducibility(k, seed, p1):
    n = 1 << k
    rng = np.random.default_rng(seed)
    info = tuple(int(i) for i in np.flatnonzero(rng.random(n) < 0.5))
    spec = CodeSpec(k, info, NOISELESS, p1=p1, frozen_seed=seed)
    msg = rng.integers(0, 2, len(info))
    u1, x1 = encode(spec, msg, trial=3)
    u2, x2 = encode(spec, msg, trial=3)
    assert np.array_equal(u1, u2) and np.array_equal(x1, x2)
    # decoder regenerates the same frozen bits from the same stream
    uhat, est = decode(spec, x1, trial=3)
    assert np.array_equal(uhat, u1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 1000))
def test_uniform_threshold_code_on_bec(k, seed):
    zt = build_tables(bec(0.2), 0.5, k, "bec")
    info = select_information_set(zt)
    spec = CodeSpec(k, info, bec(0.2), frozen_seed=seed)
    msg = np.random.default_rng(seed).integers(0, 2, len(info))
    _, x = encode(spec, msg)
    _, est = decode(spec, 2 * x.astype(int))
    assert np.array_equal(est, msg)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_source_prefix_chain(k):
    n = 1 << k
    p1 = 0.3
    for u in itertools.product((0, 1), repeat=n):
        prob = 1.0
        for i in range(n):
            post = sc_source_posterior(p1, u, i, k)
            assert sum(post) == pytest.approx(1.0, abs=1e-15)
            prob *= post[u[i]]
        x = polar_transform(np.array(u))
        assert prob == pytest.approx(np.prod(np.where(x == 1, p1, 1 - p1)), abs=1e-14)
