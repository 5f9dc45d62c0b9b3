"""Bhattacharyya tables for all synthesized channels and information-set selection.

Synthesized channels of the symmetrized channel are stored in the standard
"mixture of BSCs" form: a list of mass pairs ``(hi, lo)`` with ``hi >= lo``,
where a pair stands for an output symbol together with its mirror image.  The
pairs sum to one and ``Z = 2 sum sqrt(hi * lo)``.  Children of a node are kept
adjacent (minus first), which is exactly the natural index order of
``u G_n`` without bit-reversal.

Backends
--------
``exact``   merges only symbols with equal posteriors (relative ``merge_tol``).
``binned``  additionally merges symbols whose posteriors share a logarithmic bin.
            Merging degrades a channel, so every Z it reports is an upper bound.
``bec``     closed-form erasure recursion.
``mc``      Monte Carlo estimate over SC sweeps with the true prefix.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import __version__
from .channel import BinaryInputChannel, SymmetrizedChannel, single_output, symmetrize
from .errors import AlphabetExplosion
from .polar_core import CodeSpec, polar_transform, sc_pass

DEFAULT_CAP = 10**6
TABLE_FORMAT = "ehpolar-ztables/1"


class SynthesizedChannel(NamedTuple):
    hi: np.ndarray
    lo: np.ndarray

    @property
    def z(self) -> float:
        return float(2.0 * np.sqrt(self.hi * self.lo).sum())

    @property
    def size(self) -> int:
        return len(self.hi)


def root_channel(sym: SymmetrizedChannel) -> SynthesizedChannel:
    L = sym.n_outputs // 2
    # symbol (0, y) merged with its mirror (1, y)
    a, b = sym.w[0, :L], sym.w[1, :L]
    return _merge_exact(np.maximum(a, b), np.minimum(a, b), 0.0)


def _merge_exact(hi, lo, tol) -> SynthesizedChannel:
    s = hi + lo
    keep = s > 0
    hi, lo, s = hi[keep], lo[keep], s[keep]
    r = lo / s
    order = np.argsort(r, kind="stable")
    hi, lo, r = hi[order], lo[order], r[order]
    if len(r) == 0:
        return SynthesizedChannel(hi, lo)
    start = np.empty(len(r), dtype=bool)
    start[0] = True
    start[1:] = np.diff(r) > tol * r[1:]
    group = np.cumsum(start) - 1
    return SynthesizedChannel(np.bincount(group, hi), np.bincount(group, lo))


def _merge_binned(hi, lo, width, r_floor) -> SynthesizedChannel:
    s = hi + lo
    keep = s > 0
    hi, lo, s = hi[keep], lo[keep], s[keep]
    r = lo / s
    log_floor = math.log(r_floor)
    with np.errstate(divide="ignore"):
        lr = np.log(r)
    # bin 0 collects r < r_floor (including r = 0)
    key = np.maximum(np.floor((lr - log_floor) / width) + 1, 0).astype(np.int64)
    H = np.bincount(key, hi)
    Lo = np.bincount(key, lo)
    nz = (H + Lo) > 0
    return SynthesizedChannel(H[nz], Lo[nz])


def _children(ch: SynthesizedChannel):
    a0, a1 = ch.hi, ch.lo
    p00 = np.multiply.outer(a0, a0).ravel()
    p11 = np.multiply.outer(a1, a1).ravel()
    p01 = np.multiply.outer(a0, a1).ravel()
    p10 = np.multiply.outer(a1, a0).ravel()
    minus = (p00 + p11, p01 + p10)
    plus = (np.concatenate([p00, np.maximum(p01, p10)]), np.concatenate([p11, np.minimum(p01, p10)]))
    return minus, plus


def evolve_levels(root: SynthesizedChannel, k: int, merge) -> Iterator[list]:
    """Yield the synthesized channels of every level ``0..k`` in natural order."""
    level = [root]
    yield level
    for _ in range(k):
        nxt = []
        for ch in level:
            (mh, ml), (ph, pl) = _children(ch)
            nxt.append(merge(mh, ml))
            nxt.append(merge(ph, pl))
        level = nxt
        yield level


def _exact_merger(merge_tol: float, cap: int):
    def merge(hi, lo):
        ch = _merge_exact(hi, lo, merge_tol)
        if ch.size > cap:
            raise AlphabetExplosion(f"synthesized alphabet reached {ch.size} > cap {cap}")
        return ch

    return merge


def evolve_exact(sym: SymmetrizedChannel, k: int, merge_tol: float = 1e-12, max_alphabet: int = DEFAULT_CAP):
    """Exact synthesized channels at depth ``k``; returns ``(channels, z)``."""
    for level in evolve_levels(root_channel(sym), k, _exact_merger(merge_tol, max_alphabet)):
        pass
    return level, np.array([c.z for c in level])


def evolve_binned(sym: SymmetrizedChannel, k: int, bin_width: float = 0.05, r_floor: float = 1e-20):
    """Degraded synthesized channels; each returned Z upper-bounds the exact one."""

    def merge(hi, lo):
        return _merge_binned(hi, lo, bin_width, r_floor)

    for level in evolve_levels(merge(*root_channel(sym)), k, merge):
        pass
    return level, np.array([c.z for c in level])


def evolve_bec(eps: float, k: int) -> np.ndarray:
    z = np.array([float(eps)])
    for _ in range(k):
        z = np.stack([2 * z - z * z, z * z], axis=1).ravel()
    return z


# --------------------------------------------------------------------------
# tables


@dataclass(frozen=True, eq=False)
class ZTables:
    z_channel: np.ndarray
    z_source: np.ndarray
    backend: str
    k: int
    stderr: np.ndarray | None = None
    stderr_source: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return 1 << self.k


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chunk)]))


def sample_outputs(ch: BinaryInputChannel, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Pass bits ``x`` (any shape) through the channel; returns output indices."""
    cdf = np.cumsum(ch.w, axis=1)
    cdf[:, -1] = 1.0
    v = rng.random(x.shape)
    return (v[..., None] >= cdf[x]).sum(axis=-1)


def _mc_chunk(ch, p1, k, size, seed, chunk):
    n = 1 << k
    rng = _chunk_rng(seed, chunk)
    x = (rng.random((size, n)) < p1).astype(np.uint8)
    y = sample_outputs(ch, x, rng)
    u = polar_transform(x)
    sym = symmetrize(ch, p1)
    lik = np.stack([sym.w[:, y].transpose(1, 2, 0), np.broadcast_to([1.0 - p1, p1], (size, n, 2))], axis=2)
    zsum = np.zeros((2, n))
    zsq = np.zeros((2, n))

    def decide(i, post):
        z = 2.0 * np.sqrt(post[:, :, 0] * post[:, :, 1])
        zsum[:, i] = z.sum(axis=0)
        zsq[:, i] = (z * z).sum(axis=0)
        return u[:, i]

    sc_pass(lik, decide)
    return zsum, zsq


def estimate_z_mc(ch: BinaryInputChannel, p1: float, k: int, trials: int, seed: int, chunk_size: int = 1000) -> ZTables:
    """Monte Carlo tables: mean of ``2 sqrt(p0 p1)`` at the true prefix.

    Trials are cut into fixed chunks seeded by ``(seed, chunk)``, so the result
    does not depend on how chunks are scheduled.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sums, sqs = [], []
    done, chunk = 0, 0
    while done < trials:
        size = min(chunk_size, trials - done)
        s, q = _mc_chunk(ch, p1, k, size, seed, chunk)
        sums.append(s)
        sqs.append(q)
        done += size
        chunk += 1
    S = np.stack(sums)
    Q = np.stack(sqs)
    tot = np.apply_along_axis(math.fsum, 0, S)
    tot2 = np.apply_along_axis(math.fsum, 0, Q)
    mean = tot / trials
    var = np.maximum(tot2 / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    se = np.sqrt(var / trials)
    return ZTables(np.clip(mean[0], 0, 1), np.clip(mean[1], 0, 1), "mc", k, se[0], se[1],
                   {"channel": channel_hash(ch), "p1": float(p1), "trials": int(trials), "seed": int(seed)})


def _is_erasure_like(ch: BinaryInputChannel) -> float | None:
    w = ch.w
    both = (w[0] > 0) & (w[1] > 0)
    if np.any(both & ~np.isclose(w[0], w[1], rtol=0, atol=1e-15)):
        return None
    return float(w[0][both].sum())


def build_tables(ch: BinaryInputChannel, p1: float, k: int, backend: str = "auto", *,
                 merge_tol: float = 1e-12, max_alphabet: int = DEFAULT_CAP, bin_width: float = 0.05,
                 mc_trials: int = 10_000, seed: int = 0) -> ZTables:
    """Channel- and source-side tables for ``(ch, p1)`` at ``n = 2^k``.

    ``auto`` tries ``exact`` and falls back to ``mc`` on alphabet explosion.
    Source tables are computed exactly whenever that is feasible.
    """
    sym = symmetrize(ch, p1)
    src = symmetrize(single_output(), p1)
    meta = {"channel": channel_hash(ch), "p1": float(p1)}
    if backend == "bec":
        eps = _is_erasure_like(ch)
        if eps is None or p1 != 0.5:
            raise ValueError("bec backend needs an erasure-like channel with uniform input")
        return ZTables(evolve_bec(eps, k), np.ones(1 << k), "bec", k, meta=meta)
    if backend == "mc":
        zt = estimate_z_mc(ch, p1, k, mc_trials, seed)
        try:
            zs = evolve_exact(src, k, merge_tol, max_alphabet)[1]
        except AlphabetExplosion:
            zs = zt.z_source
        return ZTables(zt.z_channel, np.clip(zs, 0, 1), "mc", k, zt.stderr, None, {**meta, **zt.meta})
    if backend == "binned":
        zc = evolve_binned(sym, k, bin_width)[1]
        # binning inflates Z, which is not conservative for the source condition
        try:
            zs = evolve_exact(src, k, merge_tol, max_alphabet)[1]
        except AlphabetExplosion:
            zs = evolve_binned(src, k, bin_width)[1]
        return ZTables(np.clip(zc, 0, 1), np.clip(zs, 0, 1), "binned", k, meta={**meta, "bin_width": bin_width})
    if backend in ("exact", "auto"):
        try:
            zc = evolve_exact(sym, k, merge_tol, max_alphabet)[1]
            zs = evolve_exact(src, k, merge_tol, max_alphabet)[1]
        except AlphabetExplosion:
            if backend == "exact":
                raise
            return build_tables(ch, p1, k, "mc", merge_tol=merge_tol, max_alphabet=max_alphabet,
                                mc_trials=mc_trials, seed=seed)
        return ZTables(np.clip(zc, 0, 1), np.clip(zs, 0, 1), "exact", k, meta=meta)
    raise ValueError(f"unknown backend {backend!r}")


# --------------------------------------------------------------------------
# selection


def select_information_set(zt: ZTables, n: int | None = None, nu: float = 4.0) -> tuple:
    """Indices with ``zChannel <= n^-nu`` and ``zSource >= 1 - n^-nu``."""
    n = zt.n if n is None else n
    thr = float(n) ** -nu
    ok = (zt.z_channel <= thr) & (zt.z_source >= 1.0 - thr)
    return tuple(int(i) for i in np.flatnonzero(ok))


def select_by_budget(zt: ZTables, error_budget: float, n: int | None = None, nu: float = 4.0) -> tuple:
    """Greedy largest set with ``sum zChannel / 2 <= error_budget`` among near-uniform indices."""
    n = zt.n if n is None else n
    if error_budget <= 0:
        return ()
    cand = np.flatnonzero(zt.z_source >= 1.0 - float(n) ** -nu)
    order = cand[np.argsort(zt.z_channel[cand], kind="stable")]
    spent = np.cumsum(zt.z_channel[order] / 2.0)
    take = int(np.searchsorted(spent, error_budget, side="right"))
    return tuple(sorted(int(i) for i in order[:take]))


def build_code(ch: BinaryInputChannel, p1: float, k: int, *, policy: str = "threshold", budget: float = 0.0,
               backend: str = "auto", frozen_seed: int = 0, nu: float = 4.0, tables: ZTables | None = None,
               **table_opts) -> CodeSpec:
    zt = tables if tables is not None else build_tables(ch, p1, k, backend, **table_opts)
    if policy == "threshold":
        info = select_information_set(zt, nu=nu)
    elif policy == "budget":
        info = select_by_budget(zt, budget, nu=nu)
    else:
        raise ValueError(f"unknown selection policy {policy!r}")
    return CodeSpec(k, info, ch, p1, zt.z_channel, zt.z_source, zt.backend, frozen_seed)


# --------------------------------------------------------------------------
# serialization


def channel_hash(ch: BinaryInputChannel) -> str:
    blob = json.dumps(ch.w.tolist()).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def dump_tables(zt: ZTables, seed: int | None = None, extra: dict | None = None) -> str:
    """Versioned text form: ``#`` header lines, then ``index,zChannel,zSource[,stderr]`` rows.

    ``extra`` adds further ``# key=value`` header lines (sorted by key).
    """
    out = io.StringIO()
    out.write(f"# format={TABLE_FORMAT}\n")
    out.write(f"# version={__version__}\n")
    for key in sorted(extra or {}):
        out.write(f"# {key}={extra[key]}\n")
    out.write(f"# backend={zt.backend}\n# k={zt.k}\n")
    p1 = zt.meta.get("p1")
    out.write(f"# channel={zt.meta.get('channel', '')}\n# p1={'' if p1 is None else repr(p1)}\n")
    out.write(f"# seed={seed if seed is not None else zt.meta.get('seed', '')}\n")
    has_se = zt.stderr is not None
    out.write("index,zChannel,zSource" + (",stderr" if has_se else "") + "\n")
    for i in range(zt.n):
        row = f"{i},{float(zt.z_channel[i])!r},{float(zt.z_source[i])!r}"
        if has_se:
            row += f",{float(zt.stderr[i])!r}"
        out.write(row + "\n")
    return out.getvalue()


def load_tables(text: str) -> ZTables:
    head = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            head[key] = val
        elif line and not line.startswith("index"):
            rows.append([float(v) for v in line.split(",")])
    if head.get("format") != TABLE_FORMAT:
        raise ValueError(f"unsupported table format {head.get('format')!r}")
    arr = np.array(rows)
    stderr = arr[:, 3] if arr.shape[1] > 3 else None
    meta = {"channel": head.get("channel", "")}
    if head.get("p1"):
        meta["p1"] = float(head["p1"])
    return ZTables(arr[:, 1], arr[:, 2], head["backend"], int(head["k"]), stderr, meta=meta)
