"""Energy arrivals, the save-and-transmit wrapper, and the saving-phase length rule.

Symbol cost is ``c(x) = x``: sending a 1 spends one unit of energy, a 0 is free.
The battery has infinite capacity.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import BlocklengthTooSmall, InfeasibleBlocklength

FAMILIES = ("constant", "bernoulli", "exponential")


@dataclass(frozen=True)
class EnergyProcess:
    """I.i.d. nonnegative arrivals.

    ``bernoulli`` arrivals take the value ``amplitude`` with probability
    ``rho`` and 0 otherwise, so the mean is ``amplitude * rho``.
    """

    family: str
    mean: float
    amplitude: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown energy family {self.family!r}")
        if self.mean < 0 or (self.family != "constant" and not self.mean > 0):
            raise ValueError("mean energy must be positive (a constant process may be 0)")
        if self.family == "bernoulli" and not self.amplitude >= self.mean:
            raise ValueError("bernoulli amplitude must be at least the mean")

    @classmethod
    def constant(cls, value: float) -> EnergyProcess:
        return cls("constant", float(value))

    @classmethod
    def bernoulli(cls, amplitude: float, rho: float) -> EnergyProcess:
        return cls("bernoulli", float(amplitude) * float(rho), float(amplitude))

    @classmethod
    def exponential(cls, mean: float) -> EnergyProcess:
        return cls("exponential", float(mean))

    @classmethod
    def from_spec(cls, spec: dict) -> EnergyProcess:
        fam = spec["family"]
        if fam == "constant":
            return cls.constant(spec["value"])
        if fam == "bernoulli":
            return cls.bernoulli(spec["amplitude"], spec["rho"])
        if fam == "exponential":
            return cls.exponential(spec["mean"])
        raise ValueError(f"unknown energy family {fam!r}")

    @property
    def rho(self) -> float:
        return self.mean / self.amplitude if self.family == "bernoulli" else 1.0

    @property
    def second_moment(self) -> float:
        if self.family == "constant":
            return self.mean**2
        if self.family == "bernoulli":
            return self.amplitude**2 * self.rho
        return 2.0 * self.mean**2

    @property
    def a(self) -> float:
        return max(self.second_moment, math.e)

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        if self.family == "constant":
            return np.full(size, self.mean)
        if self.family == "bernoulli":
            return self.amplitude * (rng.random(size) < self.rho)
        return rng.exponential(self.mean, size)

    def sample_sum(self, m: int, size, rng: np.random.Generator) -> np.ndarray:
        """Draw sums of ``m`` arrivals directly from their exact distribution."""
        if m == 0:
            return np.zeros(size)
        if self.family == "constant":
            return np.full(size, m * self.mean)
        if self.family == "bernoulli":
            return self.amplitude * rng.binomial(m, self.rho, size)
        return rng.gamma(m, self.mean, size)


def energy_moments(proc: EnergyProcess) -> tuple[float, float, float]:
    return proc.mean, proc.second_moment, proc.a


def sample_energy_sequence(proc: EnergyProcess, N: int, seed: int) -> np.ndarray:
    if N < 1:
        raise ValueError("N must be >= 1")
    return proc.sample(N, np.random.default_rng(seed))


def feasibility(n: int, P: float, a: float) -> bool:
    """Blocklength condition ``n / ln n >= a / P^2``."""
    if n < 3:
        raise BlocklengthTooSmall(f"n={n} < 3")
    return n / math.log(n) >= a / P**2


def _require_feasible(n, P, a):
    if not feasibility(n, P, a):
        raise InfeasibleBlocklength(f"n={n} violates n/ln n >= a/P^2 with a={a}, P={P}")


def saving_length(n: int, P: float, a: float) -> int:
    _require_feasible(n, P, a)
    return math.ceil(6.0 * math.sqrt(a * n * math.log(n)) / P)


def outage_bound(m: int, n: int, P: float, a: float) -> float:
    """Upper bound on the chance that an i.i.d. codeword outruns the battery after ``m`` saving slots."""
    _require_feasible(n, P, a)
    if m < 0:
        raise ValueError("m must be nonnegative")
    ln = math.log(n)
    expo = 2.0 * ln - 0.5 * m * P * math.sqrt(ln / (a * n))
    return min(1.0, math.exp(0.4 + expo) / ln)


@dataclass(frozen=True, eq=False)
class BatteryTrace:
    arrival: np.ndarray
    attempted: np.ndarray
    transmitted: np.ndarray
    battery: np.ndarray

    CSV_HEADER = ("slot", "arrival", "attempted", "transmitted", "battery")

    def to_csv(self) -> str:
        out = io.StringIO()
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow(self.CSV_HEADER)
        for i in range(len(self.arrival)):
            wr.writerow([i, repr(float(self.arrival[i])), int(self.attempted[i]),
                         int(self.transmitted[i]), repr(float(self.battery[i]))])
        return out.getvalue()


def save_and_transmit_run(x_tilde, m: int, energy) -> tuple[np.ndarray, BatteryTrace, set]:
    """Stay silent for ``m`` slots, then send ``x_tilde`` while the battery allows.

    A 1 that the battery cannot cover is sent as 0.  Returns the ``m + n``
    transmitted symbols, the per-slot trace, and the set of zeroed slots (0-based,
    counted over all ``m + n`` slots).
    """
    x_tilde = np.asarray(x_tilde, dtype=np.uint8)
    energy = np.asarray(energy, dtype=float)
    N = m + len(x_tilde)
    if len(energy) != N:
        raise ValueError(f"need {N} energy arrivals, got {len(energy)}")
    if np.any(energy < 0):
        raise ValueError("energy arrivals must be nonnegative")
    attempted = np.concatenate([np.zeros(m, dtype=np.uint8), x_tilde])
    sent = np.zeros(N, dtype=np.uint8)
    level = np.empty(N)
    mismatch = set()
    battery = 0.0
    for i in range(N):
        battery += energy[i]
        if attempted[i] and battery >= 1.0:
            sent[i] = 1
            battery -= 1.0
        elif attempted[i]:
            mismatch.add(i)
        assert battery >= -1e-12
        level[i] = battery
    return sent, BatteryTrace(energy, attempted, sent, level), mismatch


def save_and_transmit_batch(x_tilde: np.ndarray, initial: np.ndarray, arrivals: np.ndarray):
    """Vectorized transmission phase for ``T`` rows.

    ``initial`` holds the energy saved during the first ``m`` slots and
    ``arrivals`` the ``(T, n)`` arrivals of the transmission phase.  Returns the
    ``(T, n)`` transmitted symbols and a mask of rows with any zeroed symbol.
    """
    x_tilde = np.asarray(x_tilde, dtype=np.uint8)
    T, n = x_tilde.shape
    battery = np.array(initial, dtype=float)
    sent = np.zeros_like(x_tilde)
    short = np.zeros(T, dtype=bool)
    for i in range(n):
        battery += arrivals[:, i]
        want = x_tilde[:, i].astype(bool)
        ok = want & (battery >= 1.0)
        sent[:, i] = ok
        battery -= ok
        short |= want & ~ok
    return sent, short


def violation_mask(x_tilde: np.ndarray, initial: np.ndarray, arrivals: np.ndarray) -> np.ndarray:
    """Rows where cumulative demand ever exceeds cumulative arrivals.

    Equals the "any zeroed symbol" mask of :func:`save_and_transmit_batch`: up to
    the first shortfall the wrapper sends ``x_tilde`` unchanged.
    """
    demand = np.cumsum(x_tilde, axis=1, dtype=float)
    supply = np.asarray(initial, dtype=float)[:, None] + np.cumsum(arrivals, axis=1)
    return np.any(demand > supply, axis=1)
