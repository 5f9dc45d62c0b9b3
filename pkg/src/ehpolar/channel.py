"""Binary-input discrete memoryless channels and their information quantities.

A channel is a 2 x L row-stochastic matrix ``w[x, y] = q(y|x)``.  Input
distributions are passed around as the single number ``p1 = Pr{X = 1}``.
All logarithms are base 2 and ``0 log 0 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ConstraintOutOfRange, NegativeProbability, RowSumMismatch

INPUT_TOL = 1e-9
EXACT_TOL = 1e-12

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class BinaryInputChannel:
    """Transition matrix ``w`` (shape ``(2, L)``) with output labels."""

    w: np.ndarray
    outputs: tuple = ()

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if not self.outputs:
            object.__setattr__(self, "outputs", tuple(range(w.shape[1])))

    @property
    def n_outputs(self) -> int:
        return self.w.shape[1]

    def __repr__(self):
        return f"BinaryInputChannel(w={self.w.tolist()!r})"


@dataclass(frozen=True, eq=False)
class SymmetrizedChannel(BinaryInputChannel):
    """Symmetric channel over outputs ``(b, y)`` built from an asymmetric pair.

    Output index ``b * L + y`` stands for the label ``(b, y)``.
    """

    source: BinaryInputChannel | None = field(default=None)
    p1: float = 0.5

    def mirror(self) -> np.ndarray:
        """Index permutation ``(b, y) -> (b ^ 1, y)``."""
        L = self.n_outputs // 2
        return np.concatenate([np.arange(L, 2 * L), np.arange(L)])


def validate_channel(raw, outputs: Sequence[Any] = ()) -> BinaryInputChannel:
    w = np.asarray(raw, dtype=float)
    if w.ndim != 2 or w.shape[0] != 2 or w.shape[1] < 1:
        raise ValueError(f"channel matrix must have shape (2, L>=1), got {w.shape}")
    if np.any(w < 0):
        raise NegativeProbability(f"negative transition probability in {w.tolist()}")
    sums = w.sum(axis=1)
    bad = np.abs(sums - 1.0) > INPUT_TOL
    if np.any(bad):
        row = int(np.argmax(bad))
        raise RowSumMismatch(f"row {row} sums to {sums[row]!r}")
    return BinaryInputChannel(w, tuple(outputs))


def bsc(p: float) -> BinaryInputChannel:
    return validate_channel([[1 - p, p], [p, 1 - p]])


def bec(eps: float) -> BinaryInputChannel:
    return validate_channel([[1 - eps, eps, 0.0], [0.0, eps, 1 - eps]], (0, "e", 1))


def z_channel(delta: float) -> BinaryInputChannel:
    """Z-channel: input 0 is noiseless, input 1 is read as 0 with prob ``delta``."""
    return validate_channel([[1.0, 0.0], [delta, 1 - delta]])


def single_output() -> BinaryInputChannel:
    """The useless one-symbol channel; polarizing it polarizes the source."""
    return validate_channel([[1.0], [1.0]])


def channel_from_spec(spec: dict) -> BinaryInputChannel:
    """Build a channel from a record such as ``{"type": "bsc", "p": 0.11}``."""
    kind = spec.get("type")
    if kind == "bsc":
        return bsc(float(spec["p"]))
    if kind == "bec":
        return bec(float(spec["eps"]))
    if kind == "zchannel":
        return z_channel(float(spec["delta"]))
    if kind == "matrix":
        return validate_channel(spec["matrix"], spec.get("outputs", ()))
    raise ValueError(f"unknown channel type {kind!r}")


def _check_p1(p1: float) -> None:
    if not 0.0 <= p1 <= 1.0:
        raise ConstraintOutOfRange(f"p1={p1} outside [0, 1]")


def _xlog2(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def binary_entropy(p: float) -> float:
    return float(-_xlog2(np.array([p, 1.0 - p])).sum())


def joint_distribution(ch: BinaryInputChannel, p1: float) -> np.ndarray:
    """``p(x, y)`` as a 2 x L array."""
    _check_p1(p1)
    return np.array([1.0 - p1, p1])[:, None] * ch.w


def mutual_information(ch: BinaryInputChannel, p1: float) -> float:
    joint = joint_distribution(ch, p1)
    hy = -_xlog2(joint.sum(axis=0)).sum()
    hy_x = -_xlog2(joint).sum() + _xlog2(np.array([1.0 - p1, p1])).sum()
    return float(min(max(hy - hy_x, 0.0), 1.0))


def capacity(ch: BinaryInputChannel, tol: float = 1e-10) -> tuple[float, float]:
    """Return ``(C, p1*)`` by golden-section search on the concave map p1 -> I."""
    a, b = 0.0, 1.0
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = mutual_information(ch, c)
    fd = mutual_information(ch, d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = mutual_information(ch, c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = mutual_information(ch, d)
    p = 0.5 * (a + b)
    return mutual_information(ch, p), p


def capacity_cost(ch: BinaryInputChannel, P: float) -> float:
    # E[X] = P pins p1 = P for a binary input
    if not 0.0 <= P <= 1.0:
        raise ConstraintOutOfRange(f"mean-input constraint P={P} outside [0, 1]")
    return mutual_information(ch, P)


def bhattacharyya(joint) -> float:
    """``Z(U|O) = 2 sum_o sqrt(p(0, o) p(1, o))`` for a 2 x |O| joint mass array."""
    joint = np.asarray(joint, dtype=float)
    return float(2.0 * np.sqrt(joint[0] * joint[1]).sum())


def conditional_entropy(joint) -> float:
    """``H(U|O)`` in bits for a 2 x |O| joint mass array."""
    joint = np.asarray(joint, dtype=float)
    return float(-_xlog2(joint).sum() + _xlog2(joint.sum(axis=0)).sum())


def symmetrize(ch: BinaryInputChannel, p1: float) -> SymmetrizedChannel:
    """Channel ``q^((x^ + x, y) | x^) = p_X(x) q(y|x)`` over outputs {0,1} x Y."""
    _check_p1(p1)
    joint = joint_distribution(ch, p1)
    w = np.empty((2, 2 * ch.n_outputs))
    # output (b, y) from input xhat means x = xhat ^ b
    w[0] = np.concatenate([joint[0], joint[1]])
    w[1] = np.concatenate([joint[1], joint[0]])
    labels = tuple((b, y) for b in (0, 1) for y in ch.outputs)
    return SymmetrizedChannel(w, labels, source=ch, p1=float(p1))


def is_symmetric(ch: BinaryInputChannel, perm: np.ndarray, tol: float = 1e-14) -> bool:
    perm = np.asarray(perm)
    if not np.array_equal(perm[perm], np.arange(len(perm))):
        return False
    return bool(np.all(np.abs(ch.w[1] - ch.w[0][perm]) <= tol))
