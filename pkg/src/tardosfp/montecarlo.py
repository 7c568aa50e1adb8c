"""Monte Carlo harness for innocent scores, coalition scores and K_b.

Each trial draws m segments. Per segment: a bias vector, the c colluder symbols,
the attack output y and one innocent symbol. Trials are processed in fixed-size
chunks, each with its own child of a root :class:`numpy.random.SeedSequence`,
and accumulators are reduced in chunk order. Results therefore depend on the
seed only, not on the number of worker threads.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import Sequence

import numba as nb
import numpy as np

from tardosfp.attacks import Strategy, all_count_vectors
from tardosfp.model import CodeParams

CHUNK_TRIALS = 1 << 15
MIN_RATE = 1e-7
MIN_EXPECTED_HITS = 25
MAX_TABLE_ROWS = 10**7


class SimulationReachError(ValueError):
    """Requested tail probability is too small for plain Monte Carlo."""


def wilson_interval(hits: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval; (0, 1) when there are no samples."""
    if n == 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = hits / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    # the bounds are exactly 0 and 1 at the extremes; avoid rounding residue there
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == n else min(1.0, centre + half)
    return lo, hi


def _encode_weights(q: int, c: int) -> np.ndarray:
    return (c + 1) ** np.arange(q, dtype=np.int64)


def cumulative_theta(strategy: Strategy, q: int, c: int) -> np.ndarray:
    """Cumulative θ rows indexed by the base-(c+1) code of σ.

    Entries from the last symbol with θ > 0 onward are pinned to 1 so a uniform
    draw can never land on a symbol the coalition does not hold.
    """
    rows = (c + 1) ** q
    if rows > MAX_TABLE_ROWS:
        raise ValueError(f"θ lookup table would need {rows} rows; reduce q or c")
    out = np.ones((rows, q))
    weights = _encode_weights(q, c)
    for sigma in all_count_vectors(q, c):
        th = strategy.theta(sigma)
        cum = np.cumsum(th)
        last = int(np.flatnonzero(th > 0)[-1])
        cum[last:] = 1.0
        out[int(np.dot(sigma, weights))] = cum
    return out


@nb.njit(nogil=True, cache=True)
def _kernel(rng, n_trials, m, q, c, kappa, cum_theta, totals, acc, kb_n, kb_hit):
    p = np.empty(q)
    cp = np.empty(q)
    cnt = np.zeros(q, np.int64)
    for t in range(n_trials):
        total = 0.0
        for _ in range(m):
            while True:
                s = 0.0
                for a in range(q):
                    p[a] = rng.standard_gamma(kappa)
                    s += p[a]
                ok = s > 0.0
                for a in range(q):
                    p[a] /= s
                    if not (p[a] > 0.0 and p[a] < 1.0):
                        ok = False
                if ok:
                    break
            run = 0.0
            for a in range(q):
                run += p[a]
                cp[a] = run
            cnt[:] = 0
            for _j in range(c):
                u = rng.random()
                a = 0
                while a < q - 1 and u >= cp[a]:
                    a += 1
                cnt[a] += 1
            key = 0
            mul = 1
            for a in range(q):
                key += cnt[a] * mul
                mul *= c + 1
            u = rng.random()
            y = 0
            while u >= cum_theta[key, y]:
                y += 1
            py = p[y]
            g0 = -math.sqrt(py / (1.0 - py))
            g1 = math.sqrt((1.0 - py) / py)
            inn = g1 if rng.random() < py else g0
            total += inn
            acc[0] += inn
            acc[1] += inn * inn
            col = cnt[y] * g1 + (c - cnt[y]) * g0
            acc[2] += col
            acc[3] += col * col
            kb_n[cnt[0]] += 1
            if y == 0:
                kb_hit[cnt[0]] += 1
        totals[t] = total


@dataclass
class _Chunk:
    totals: np.ndarray
    acc: np.ndarray
    kb_n: np.ndarray
    kb_hit: np.ndarray


def _run_chunk(index: int, n: int, root: np.random.SeedSequence, params: CodeParams, m: int, cum_theta) -> _Chunk:
    child = np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (index,))
    rng = np.random.Generator(np.random.PCG64(child))
    totals = np.empty(n)
    acc = np.zeros(4)
    kb_n = np.zeros(params.c + 1, np.int64)
    kb_hit = np.zeros(params.c + 1, np.int64)
    _kernel(rng, n, m, params.q, params.c, float(params.kappa), cum_theta, totals, acc, kb_n, kb_hit)
    return _Chunk(totals, acc, kb_n, kb_hit)


def _root_seed(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    if seed is None:
        return np.random.SeedSequence()
    return np.random.SeedSequence(int(seed))


@dataclass
class KbEstimate:
    b: int
    value: float | None
    lo: float
    hi: float
    samples: int
    bounded: bool


@dataclass
class TailCount:
    z_tilde: float
    hits: int
    rate: float
    lo: float
    hi: float


@dataclass
class SimReport:
    samples: int
    segments: int
    seed: int | None
    params: dict
    strategy: str
    confidence: float
    innocent_mean: float
    innocent_var: float
    innocent_mean_stderr: float
    mu_tilde: float
    mu_tilde_stderr: float
    kb: list[KbEstimate]
    tails: list[TailCount]
    totals: np.ndarray = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("totals")
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def histogram(self, bins: int | Sequence[float] = 100) -> tuple[np.ndarray, np.ndarray]:
        counts, edges = np.histogram(self.totals, bins=bins)
        return edges, counts

    def write_histogram(self, path, bins: int | Sequence[float] = 100) -> None:
        edges, counts = self.histogram(bins)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count"])
            for i, n in enumerate(counts):
                w.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(n)])


def _tail(totals: np.ndarray, m: int, z: float, confidence: float) -> TailCount:
    hits = int(np.count_nonzero(totals > z * math.sqrt(m)))
    lo, hi = wilson_interval(hits, totals.size, confidence)
    return TailCount(float(z), hits, hits / totals.size, lo, hi)


def simulate_scores(params: CodeParams, strategy: Strategy, trials: int, rng=None, *,
                    thresholds: Sequence[float] = (1.0, 2.0, 3.0), confidence: float = 0.95,
                    workers: int = 1, chunk_trials: int = CHUNK_TRIALS, min_kb_samples: int = 30) -> SimReport:
    """Simulate ``trials`` independent codes of length ``params.m``.

    ``rng`` is a seed, a SeedSequence or a Generator (from which a root seed is drawn).
    Tail counts use S > Z̃√m for each entry of ``thresholds``.
    """
    if trials < 1:
        raise ValueError("trials must be ≥ 1")
    root = _root_seed(rng)
    m, c = params.m, params.c
    cum_theta = cumulative_theta(strategy, params.q, c)
    sizes = [min(chunk_trials, trials - s) for s in range(0, trials, chunk_trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(lambda a: _run_chunk(a[0], a[1], root, params, m, cum_theta), enumerate(sizes)))
    else:
        chunks = [_run_chunk(i, n, root, params, m, cum_theta) for i, n in enumerate(sizes)]

    totals = np.concatenate([ch.totals for ch in chunks])
    acc = np.zeros(4)
    kb_n = np.zeros(c + 1, np.int64)
    kb_hit = np.zeros(c + 1, np.int64)
    for ch in chunks:
        acc += ch.acc
        kb_n += ch.kb_n
        kb_hit += ch.kb_hit

    n_seg = trials * m
    mean = acc[0] / n_seg
    var = acc[1] / n_seg - mean * mean
    mu = acc[2] / n_seg
    mu_var = acc[3] / n_seg - mu * mu
    kb = []
    for b in range(c + 1):
        n = int(kb_n[b])
        lo, hi = wilson_interval(int(kb_hit[b]), n, confidence)
        bounded = n >= min_kb_samples
        kb.append(KbEstimate(b, float(kb_hit[b]) / n if n else None, lo, hi, n, bounded))
    tails = [_tail(totals, m, z, confidence) for z in thresholds]
    seed = int(root.entropy) if isinstance(root.entropy, int) and not root.spawn_key else None
    return SimReport(
        samples=trials, segments=m, seed=seed,
        params={"q": params.q, "c": c, "kappa": params.kappa, "m": m},
        strategy=getattr(strategy, "name", type(strategy).__name__), confidence=confidence,
        innocent_mean=float(mean), innocent_var=float(var),
        innocent_mean_stderr=float(math.sqrt(max(var, 0.0) / n_seg)),
        mu_tilde=float(mu), mu_tilde_stderr=float(math.sqrt(max(mu_var, 0.0) / n_seg)),
        kb=kb, tails=tails, totals=totals,
    )


def empirical_kb(params: CodeParams, strategy: Strategy, trials: int, rng=None, *,
                 confidence: float = 0.95, min_samples: int = 30) -> list[KbEstimate]:
    """Pr[attack outputs symbol 0 | σ₀ = b] for b = 0..c over trials·m segments.

    Entries with fewer than ``min_samples`` conditioning segments have ``bounded=False``.
    """
    rep = simulate_scores(params, strategy, trials, rng, thresholds=(), confidence=confidence,
                          min_kb_samples=min_samples)
    return rep.kb


@dataclass
class FPEstimate:
    z_tilde: float
    rate: float
    lo: float
    hi: float
    hits: int
    trials: int

    @property
    def sigma(self) -> float:
        return math.sqrt(max(self.rate * (1 - self.rate), 0.0) / self.trials)


def empirical_fp(params: CodeParams, strategy: Strategy, m: int, z_tilde, trials: int, rng=None, *,
                 confidence: float = 0.95, workers: int = 1, check_reach: bool = True):
    """Fraction of innocent users with S > Z̃√m, with a Wilson interval.

    ``z_tilde`` may be a scalar or a sequence; a sequence reuses one sample.
    Refuses (SimulationReachError) when the Gaussian proxy tail is below 1e-7,
    when fewer than 25 hits are expected, or when no hit at all is observed.
    """
    from tardosfp.fourier import gaussian_tail

    scalar = np.isscalar(z_tilde)
    zs = [float(z_tilde)] if scalar else [float(z) for z in z_tilde]
    if check_reach:
        for z in zs:
            omega = float(gaussian_tail(z))
            if omega < MIN_RATE:
                raise SimulationReachError(
                    f"tail at Z̃={z} is about {omega:.2e}, below the simulation reach {MIN_RATE:g}")
            if trials * omega < MIN_EXPECTED_HITS:
                raise SimulationReachError(
                    f"{trials} trials expect only {trials * omega:.1f} hits at Z̃={z}; need ≥ {MIN_EXPECTED_HITS}")
    rep = simulate_scores(params.with_(m=m), strategy, trials, rng, thresholds=zs,
                          confidence=confidence, workers=workers)
    out = []
    for t in rep.tails:
        if check_reach and t.hits == 0:
            raise SimulationReachError(f"no exceedance observed at Z̃={t.z_tilde}; refusing to report a zero rate")
        out.append(FPEstimate(t.z_tilde, t.rate, t.lo, t.hi, t.hits, trials))
    return out[0] if scalar else out
