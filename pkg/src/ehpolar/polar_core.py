"""Polarization transform, successive cancellation, and the randomized-frozen-bit code.

Conventions: ``x = u G_n`` with ``G_n = F^{(x)k}``, ``F = [[1, 0], [1, 1]]`` and
no bit-reversal, so ``G_n`` is its own inverse.  Bit indices are 0-based.

The SC engine works on likelihood pairs in the probability domain, renormalized
after every combination, and is vectorized over a leading batch axis.  Several
"streams" can share one pass: the decoder runs the channel posterior and the
source posterior side by side so that frozen bits can be regenerated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import BinaryInputChannel, SymmetrizedChannel, single_output, symmetrize
from .errors import (
    AlphabetMismatch,
    ImpossibleObservation,
    IndexOutOfRange,
    LengthNotPowerOfTwo,
    MessageLengthMismatch,
)

_MASK64 = (1 << 64) - 1


def log2_length(n: int) -> int:
    k = int(n).bit_length() - 1
    if n < 1 or (1 << k) != n:
        raise LengthNotPowerOfTwo(f"length {n} is not a power of two")
    return k


def polar_transform(u) -> np.ndarray:
    """Return ``u G_n`` over GF(2) along the last axis (batched, O(n log n))."""
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    log2_length(n)
    lead = x.shape[:-1]
    h = 1
    while h < n:
        v = x.reshape(*lead, n // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


# --------------------------------------------------------------------------
# successive cancellation engine


class _Stop(Exception):
    def __init__(self, post):
        self.post = post


def _normalize(P: np.ndarray, strict: bool) -> np.ndarray:
    s = P.sum(axis=-1, keepdims=True)
    zero = s <= 0
    if zero.any():
        if strict:
            raise ImpossibleObservation("posterior masses are both zero")
        s = np.where(zero, 1.0, s)
        return np.where(zero, 0.5, P / s)
    return P / s


def sc_pass(lik: np.ndarray, decide: Callable[[int, np.ndarray], np.ndarray], strict: bool = False):
    """Run one successive-cancellation sweep.

    ``lik`` has shape ``(T, n, S, 2)``: for each of ``T`` batch rows, ``n``
    coordinates and ``S`` streams, the likelihood of the coordinate bit being 0/1.
    ``decide(i, post)`` receives the renormalized posteriors of ``U_i`` with shape
    ``(T, S, 2)`` and returns the ``T`` decided bits.  Returns ``(u, x)`` with
    ``x = polar_transform(u)``.
    """
    T, n = lik.shape[:2]
    log2_length(n)
    u = np.zeros((T, n), dtype=np.uint8)

    def rec(P, offset):
        m = P.shape[1]
        if m == 1:
            b = np.asarray(decide(offset, P[:, 0]), dtype=np.uint8)
            u[:, offset] = b
            return b[:, None]
        h = m // 2
        A, B = P[:, :h], P[:, h:]
        minus = np.empty_like(A)
        minus[..., 0] = A[..., 0] * B[..., 0] + A[..., 1] * B[..., 1]
        minus[..., 1] = A[..., 1] * B[..., 0] + A[..., 0] * B[..., 1]
        c = rec(_normalize(minus, strict), offset)
        flip = c.astype(bool)[:, :, None, None]
        plus = np.where(flip, A[..., ::-1], A) * B
        b = rec(_normalize(plus, strict), offset + h)
        return np.concatenate([c ^ b, b], axis=1)

    x = rec(_normalize(np.asarray(lik, dtype=float), strict), 0)
    return u, x


def _forced_posterior(lik: np.ndarray, prefix, i: int) -> tuple[float, float]:
    n = lik.shape[0]
    if not 0 <= i < n:
        raise IndexOutOfRange(f"index {i} outside [0, {n})")
    prefix = np.asarray(prefix, dtype=np.uint8).reshape(-1)
    if len(prefix) < i:
        raise IndexOutOfRange(f"prefix of length {len(prefix)} too short for index {i}")

    def decide(j, post):
        if j == i:
            raise _Stop(post[0, 0])
        return prefix[j : j + 1]

    try:
        sc_pass(lik[None, :, None, :], decide, strict=True)
    except _Stop as stop:
        return float(stop.post[0]), float(stop.post[1])
    raise AssertionError("unreachable")


def _obs_indices(sym: BinaryInputChannel, obs) -> np.ndarray:
    labels = {lab: j for j, lab in enumerate(sym.outputs)}
    idx = [labels[o] if isinstance(o, tuple) else int(o) for o in obs]
    idx = np.asarray(idx, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= sym.n_outputs):
        raise AlphabetMismatch("observation outside the channel output alphabet")
    return idx


def sc_channel_posterior(sym: SymmetrizedChannel, obs: Sequence, prefix, i: int) -> tuple[float, float]:
    """``(p(U_i=0 | u^{i-1}, obs), p(U_i=1 | ...))`` on the symmetric channel ``sym``.

    ``obs`` holds output indices or ``(b, y)`` labels.  Observing ``(0, y^n)``
    gives the posterior of the asymmetric pair the channel was built from.
    """
    idx = _obs_indices(sym, obs)
    log2_length(len(idx))
    return _forced_posterior(sym.w[:, idx].T, prefix, i)


def sc_source_posterior(p1: float, prefix, i: int, k: int) -> tuple[float, float]:
    """``p(U_i | u^{i-1})`` when ``X^n`` is i.i.d. with ``Pr{X=1} = p1``."""
    sym = symmetrize(single_output(), p1)
    return sc_channel_posterior(sym, [0] * (1 << k), prefix, i)


def sample_frozen_bit(post, omega: float) -> int:
    return int(omega < post[1])


def frozen_variates(seed: int, n: int, trial: int | None = None) -> np.ndarray:
    """Shared uniforms ``omega_0..omega_{n-1}`` from a counter-based generator.

    Variate ``i`` depends only on ``(seed, trial, i)``, so the encoder and decoder
    stay aligned index by index whatever the decoder decided before.
    """
    key = int(seed) & _MASK64
    if trial is not None:
        key |= (int(trial) + 1) << 64
    return np.random.Generator(np.random.Philox(key=key)).random(n)


# --------------------------------------------------------------------------
# codes


@dataclass(frozen=True, eq=False)
class CodeSpec:
    k: int
    info_set: tuple
    channel: BinaryInputChannel
    p1: float = 0.5
    z_channel: np.ndarray | None = None
    z_source: np.ndarray | None = None
    backend: str = "manual"
    frozen_seed: int = 0

    def __post_init__(self):
        info = tuple(sorted(int(i) for i in self.info_set))
        if info and (info[0] < 0 or info[-1] >= self.n):
            raise IndexOutOfRange("information index outside [0, n)")
        object.__setattr__(self, "info_set", info)

    @property
    def n(self) -> int:
        return 1 << self.k

    @property
    def rate(self) -> float:
        return len(self.info_set) / self.n

    @property
    def info_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.info_set)] = True
        return mask


def _omegas(spec: CodeSpec, trials) -> np.ndarray:
    if trials is None:
        return frozen_variates(spec.frozen_seed, spec.n)[None]
    return np.stack([frozen_variates(spec.frozen_seed, spec.n, t) for t in trials])


def _source_lik(p1: float, T: int, n: int) -> np.ndarray:
    return np.broadcast_to(np.array([1.0 - p1, p1]), (T, n, 1, 2))


def encode_batch(spec: CodeSpec, messages, trials=None) -> tuple[np.ndarray, np.ndarray]:
    """Encode a ``(T, |I|)`` array of messages.

    ``trials`` (length ``T``) selects per-row frozen-bit streams; ``None`` uses the
    single stream keyed by ``spec.frozen_seed``.
    """
    messages = np.atleast_2d(np.asarray(messages, dtype=np.uint8))
    T = messages.shape[0]
    if messages.shape[1] != len(spec.info_set):
        raise MessageLengthMismatch(f"message has {messages.shape[1]} bits, code carries {len(spec.info_set)}")
    omega = _omegas(spec, trials)
    slot = -np.ones(spec.n, dtype=np.int64)
    slot[list(spec.info_set)] = np.arange(len(spec.info_set))

    def decide(i, post):
        if slot[i] >= 0:
            return messages[:, slot[i]]
        return omega[:, i] < post[:, 0, 1]

    if spec.p1 == 0.5:
        # every source posterior is (1/2, 1/2), so no SC pass is needed
        u = (omega < 0.5).astype(np.uint8)
        u = np.broadcast_to(u, (T, spec.n)).copy()
        u[:, list(spec.info_set)] = messages
        return u, polar_transform(u)
    return sc_pass(_source_lik(spec.p1, T, spec.n), decide)


def encode(spec: CodeSpec, message, trial: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    u, x = encode_batch(spec, [message], None if trial is None else [trial])
    return u[0], x[0]


def decode_batch(spec: CodeSpec, y, trials=None) -> tuple[np.ndarray, np.ndarray]:
    """SC-decode a ``(T, n)`` array of channel-output indices; returns ``(uhat, messages)``."""
    y = np.atleast_2d(np.asarray(y, dtype=np.int64))
    T, n = y.shape
    if n != spec.n:
        raise LengthNotPowerOfTwo(f"received {n} symbols, code length is {spec.n}")
    if np.any(y < 0) or np.any(y >= spec.channel.n_outputs):
        raise AlphabetMismatch("received symbol outside the channel output alphabet")
    sym = symmetrize(spec.channel, spec.p1)
    info = spec.info_mask
    omega = _omegas(spec, trials)
    uniform = spec.p1 == 0.5

    # observations (0, y_j) of the symmetrized channel occupy the first L indices
    streams = [sym.w[:, y].transpose(1, 2, 0)]
    if not uniform:
        streams.append(_source_lik(spec.p1, T, n)[:, :, 0, :])
    lik = np.stack(streams, axis=2)

    def decide(i, post):
        if info[i]:
            return post[:, 0, 1] > post[:, 0, 0]
        p_one = 0.5 if uniform else post[:, 1, 1]
        return omega[:, i] < p_one

    u, _ = sc_pass(lik, decide)
    return u, u[:, info]


def decode(spec: CodeSpec, y, trial: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    u, msg = decode_batch(spec, [y], None if trial is None else [trial])
    return u[0], msg[0]
