"""Monte Carlo error rates, exact total-variation checks, and rate-gap scaling sweeps."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from .channel import (
    BinaryInputChannel,
    bhattacharyya,
    capacity,
    capacity_cost,
    conditional_entropy,
    mutual_information,
    symmetrize,
)
from .construction import build_tables, sample_outputs, select_by_budget, select_information_set
from .eh import EnergyProcess, save_and_transmit_batch, saving_length, violation_mask
from .errors import BlocklengthTooLargeForExact, NonpositiveGap
from .polar_core import CodeSpec, decode_batch, encode_batch, polar_transform

REPORT_SCHEMA = "ehpolar-report/1"
SWEEP_SCHEMA = "ehpolar-sweep/1"
Z95 = 1.959963984540054
DEFAULT_CHUNK = 2000


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class ErrorReport:
    trials: int
    block_errors: int
    error_rate: float
    wilson95: tuple
    tv_term: float
    z_sum: float
    outage_events: int | None = None
    outage_rate: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        """Binomial standard error of ``error_rate``."""
        p = self.error_rate
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def outage_sigma(self) -> float:
        p = self.outage_rate or 0.0
        return math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wilson95"] = list(self.wilson95)
        return {"schema": REPORT_SCHEMA, "version": __version__, **d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _make_report(spec: CodeSpec, trials: int, errors: int, outages=None, extra=None) -> ErrorReport:
    z_sum = 0.0
    if spec.z_channel is not None:
        z_sum = math.fsum(float(spec.z_channel[i]) / 2 for i in spec.info_set)
    return ErrorReport(
        trials=trials,
        block_errors=errors,
        error_rate=errors / trials,
        wilson95=wilson_interval(errors, trials),
        tv_term=2 * math.sqrt(math.log(2)) / spec.n,
        z_sum=z_sum,
        outage_events=outages,
        outage_rate=None if outages is None else outages / trials,
        extra=extra or {},
    )


def _chunks(trials: int, chunk_size: int):
    return [(c, c * chunk_size, min(chunk_size, trials - c * chunk_size))
            for c in range(math.ceil(trials / chunk_size))]


def _rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chunk)]))


def _plain_chunk(args):
    spec, seed, chunk, start, size = args
    rng = _rng(seed, chunk)
    ids = range(start, start + size)
    msgs = rng.integers(0, 2, (size, len(spec.info_set)), dtype=np.uint8)
    _, x = encode_batch(spec, msgs, ids)
    y = sample_outputs(spec.channel, x, rng)
    _, est = decode_batch(spec, y, ids)
    return int(np.any(est != msgs, axis=1).sum()), 0


def _eh_chunk(args):
    spec, seed, chunk, start, size, proc, m = args
    rng = _rng(seed, chunk)
    ids = range(start, start + size)
    msgs = rng.integers(0, 2, (size, len(spec.info_set)), dtype=np.uint8)
    _, x_tilde = encode_batch(spec, msgs, ids)
    saved = proc.sample_sum(m, size, rng)
    arrivals = proc.sample((size, spec.n), rng)
    sent, short = save_and_transmit_batch(x_tilde, saved, arrivals)
    # saving-phase outputs carry no information and are discarded by the decoder
    y = sample_outputs(spec.channel, sent, rng)
    _, est = decode_batch(spec, y, ids)
    return int(np.any(est != msgs, axis=1).sum()), int(short.sum())


def _run(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(fn, jobs))
    else:
        results = [fn(j) for j in jobs]
    return sum(r[0] for r in results), sum(r[1] for r in results)


def simulate_plain(spec: CodeSpec, trials: int, seed: int, *, workers: int = 1,
                   chunk_size: int = DEFAULT_CHUNK) -> ErrorReport:
    """Block-error rate ``Pr{Uhat_I != U_I}`` over uniform messages.

    Trial ``t`` uses frozen-bit stream ``(spec.frozen_seed, t)``, so the estimate
    averages over the randomized frozen-bit maps.  Chunks of ``chunk_size``
    trials are seeded by ``(seed, chunk)``; the result does not depend on
    ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(spec, seed, c, s, z) for c, s, z in _chunks(trials, chunk_size)]
    errors, _ = _run(_plain_chunk, jobs, workers)
    return _make_report(spec, trials, errors)


def simulate_eh(spec: CodeSpec, proc: EnergyProcess, m: int, trials: int, seed: int, *,
                workers: int = 1, chunk_size: int = DEFAULT_CHUNK) -> ErrorReport:
    """Save-and-transmit runs: ``m`` silent slots, then the codeword under the battery constraint."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(spec, seed, c, s, z, proc, m) for c, s, z in _chunks(trials, chunk_size)]
    errors, outages = _run(_eh_chunk, jobs, workers)
    return _make_report(spec, trials, errors, outages, {"m": int(m), "N": int(m + spec.n)})


def iid_outage_rate(proc: EnergyProcess, n: int, m: int, p1: float, trials: int, seed: int,
                    chunk_size: int = 20_000) -> tuple[int, int]:
    """Count runs where an i.i.d. ``Bern(p1)`` codeword gets a symbol zeroed.

    Returns ``(events, trials)``.
    """
    events = 0
    for c, _, size in _chunks(trials, chunk_size):
        rng = _rng(seed, c)
        x = (rng.random((size, n)) < p1).astype(np.uint8)
        saved = proc.sample_sum(m, size, rng)
        arrivals = proc.sample((size, n), rng)
        events += int(violation_mask(x, saved, arrivals).sum())
    return events, trials


# --------------------------------------------------------------------------
# exact total variation


def _prefix_marginals(p_u: np.ndarray, n: int) -> list:
    return [p_u.reshape(1 << i, -1).sum(axis=1) for i in range(n + 1)]


def source_distribution(p1: float, n: int) -> np.ndarray:
    """``p(u^n)`` indexed by the integer with ``u_0`` as most significant bit."""
    x = ((np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
    u = polar_transform(x)
    idx = u.astype(np.int64) @ (1 << np.arange(n - 1, -1, -1))
    px = np.prod(np.where(x == 1, p1, 1.0 - p1), axis=1)
    p_u = np.zeros(1 << n)
    np.add.at(p_u, idx, px)
    return p_u


def tv_distance_exact(spec: CodeSpec, max_n: int = 16) -> float:
    """Exact ``||p_{U^n} - r_{U^n}||`` between the i.i.d. chain and the code's distribution."""
    n = spec.n
    if n > max_n:
        raise BlocklengthTooLargeForExact(f"n={n} > {max_n}")
    marg = _prefix_marginals(source_distribution(spec.p1, n), n)
    info = spec.info_mask
    # r on prefixes: 1/2 for information bits, the source conditional for frozen bits
    r = np.ones(1)
    ratio = np.ones(1)
    for i in range(n):
        parent = marg[i][np.arange(1 << (i + 1)) >> 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(parent > 0, marg[i + 1] / parent, 0.5)
        r = np.repeat(r, 2)
        ratio = np.repeat(ratio, 2)
        if info[i]:
            r = r * 0.5
            with np.errstate(divide="ignore"):
                ratio = ratio * np.where(cond > 0, 0.5 / cond, 0.0)
        else:
            r = r * cond
    p = marg[n]
    # r = p * prod(1/2 / cond) wherever p > 0; this keeps the identical-process cases exact
    r = np.where(p > 0, p * ratio, r)
    return 0.5 * math.fsum(np.abs(p - r))


# --------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class ScalingPoint:
    k: int
    n: int
    m: int
    N: int
    info_size: int
    rate: float
    capacity: float
    gap: float


def scaling_sweep(ch: BinaryInputChannel, p1: float, k_range, *, policy: str = "threshold", budget: float = 0.0,
                  eh: EnergyProcess | None = None, backend: str = "auto", nu: float = 4.0, **table_opts) -> list:
    """Rate gaps ``C - |I| / N`` for each ``k``; ``N = m + n`` when ``eh`` is given."""
    if eh is not None:
        if abs(p1 - eh.mean) > 1e-12:
            raise ValueError("save-and-transmit sweeps need p1 equal to the mean energy P")
        C = capacity_cost(ch, eh.mean)
    else:
        C = capacity(ch)[0]
    points = []
    for k in k_range:
        n = 1 << k
        zt = build_tables(ch, p1, k, backend, **table_opts)
        if policy == "threshold":
            info = select_information_set(zt, nu=nu)
        elif policy == "budget":
            info = select_by_budget(zt, budget, nu=nu)
        else:
            raise ValueError(f"unknown selection policy {policy!r}")
        m = saving_length(n, eh.mean, eh.a) if eh is not None else 0
        N = n + m
        rate = len(info) / N
        points.append(ScalingPoint(k, n, m, N, len(info), rate, C, C - rate))
    return points


def fit_exponent(points) -> tuple[float, float, float]:
    """Least-squares fit of ``gap = t * N^(-1/mu)``; returns ``(mu, t, R^2)``."""
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    N = np.array([p.N for p in points], dtype=float)
    gap = np.array([p.gap for p in points], dtype=float)
    if np.any(gap <= 0):
        raise NonpositiveGap("all gaps must be positive to fit a power law")
    res = stats.linregress(np.log(N), np.log(gap))
    return -1.0 / res.slope, math.exp(res.intercept), res.rvalue**2


def sweep_csv(points) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["k", "n", "m", "N", "info_size", "rate", "capacity", "gap"])
    for p in points:
        wr.writerow([p.k, p.n, p.m, p.N, p.info_size, repr(p.rate), repr(p.capacity), repr(p.gap)])
    return out.getvalue()


# --------------------------------------------------------------------------
# verification suite


def enumerate_z_tables(ch: BinaryInputChannel, p1: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Bhattacharyya tables by summing ``p(u^n, x^n, y^n)`` over all sequences (tiny n only)."""
    n = 1 << k
    L = ch.n_outputs
    xs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)
    us = polar_transform(xs)
    uidx = us.astype(np.int64) @ (1 << np.arange(n - 1, -1, -1))
    ys = np.array(list(itertools.product(range(L), repeat=n)))
    px = np.where(xs == 1, p1, 1 - p1).prod(axis=1)
    lik = np.prod(ch.w[xs[:, None, :], ys[None, :, :]], axis=2)
    P = np.zeros((1 << n, len(ys)))
    np.add.at(P, uidx, px[:, None] * lik)
    zc, zs = np.zeros(n), np.zeros(n)
    for i in range(n):
        m = P.reshape(1 << i, 2, -1, len(ys)).sum(axis=2)
        zc[i] = bhattacharyya(m.transpose(1, 0, 2).reshape(2, -1))
        zs[i] = bhattacharyya(m.sum(axis=2).T)
    return zc, zs


def run_checks(seed: int = 0) -> list:
    """Desk-scale checks of the structural results; returns ``(name, passed, detail)`` rows."""
    from .channel import z_channel
    from .construction import evolve_exact
    from .channel import single_output
    from .eh import outage_bound

    rng = np.random.default_rng(seed)
    rows = []

    ch, p1 = z_channel(0.5), 0.4
    worst = 0.0
    for k in (1, 2, 3):
        zc, zs = enumerate_z_tables(ch, p1, k)
        ec = evolve_exact(symmetrize(ch, p1), k)[1]
        es = evolve_exact(symmetrize(single_output(), p1), k)[1]
        worst = max(worst, np.abs(zc - ec).max(), np.abs(zs - es).max())
    rows.append(("symmetrized-evolution-equals-enumeration", bool(worst <= 1e-10), f"max|dZ|={worst:.2e}"))

    ok, worst_ratio = True, 0.0
    for _ in range(24):
        k = int(rng.integers(1, 5))
        q = float(rng.uniform(0.3, 0.7))
        n = 1 << k
        zs = evolve_exact(symmetrize(single_output(), q), k)[1]
        cand = np.flatnonzero(zs >= 1 - float(n) ** -4)
        info = cand[rng.random(len(cand)) < 0.5]
        spec = CodeSpec(k, tuple(info), ch, q)
        tv = tv_distance_exact(spec)
        bound = math.sqrt(math.log(2)) / n
        ok = ok and bool(tv <= bound + 1e-12)
        worst_ratio = max(worst_ratio, tv / bound)
    rows.append(("randomized-frozen-tv-bound", ok, f"max tv/bound={worst_ratio:.3f}"))

    joints = rng.dirichlet(np.ones(8), size=1000).reshape(1000, 2, 4)
    gaps = [bhattacharyya(j) ** 2 - conditional_entropy(j) for j in joints]
    rows.append(("z-squared-below-entropy", bool(max(gaps) <= 1e-12), f"max Z^2-H={max(gaps):.2e}"))

    u = rng.integers(0, 2, (200, 1 << 12), dtype=np.uint8)
    rows.append(("transform-involution", bool(np.array_equal(polar_transform(polar_transform(u)), u)), "n=4096"))

    proc, n = EnergyProcess.bernoulli(2.0, 0.25), 1024
    m = saving_length(n, proc.mean, proc.a)
    events, trials = iid_outage_rate(proc, n, m, proc.mean, 20_000, seed)
    rate = events / trials
    bound = outage_bound(m, n, proc.mean, proc.a)
    sigma = math.sqrt(max(rate * (1 - rate), 1e-300) / trials)
    rows.append(("saving-phase-outage-bound", bool(rate <= bound + 3 * sigma), f"rate={rate:.2e} bound={bound:.2e} m={m}"))

    I = mutual_information(ch, p1)
    rows.append(("mutual-information-range", bool(0.0 <= I <= 1.0), f"I={I:.6f}"))
    return rows
