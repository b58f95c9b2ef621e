"""Monte Carlo sampling of busy-period heights.

Three samplers share one reproducibility scheme:

``ladder`` (default)
    Exact-in-law sampling of the height alone.  By the strong Markov
    property the excursion's running maximum climbs one level at a time:
    given that level k was reached, level k+1 is reached before the
    excursion ends with probability v_k = P(hit k+1 before 0 | at k),
    independently of the past.  The v_k come from the first-passage
    module (:mod:`bdheight.oracle`), not from the closed-form law, so a
    distributional comparison against :mod:`bdheight.exactdist` still
    crosses two independent code paths.  Cost is O(N) setup plus O(1)
    vectorized work per sample per level.

``jump-chain``
    Literal step-by-step walk of the embedded jump chain from state 1
    until it hits 0, recording the maximum.  Exact but only *feasible*
    when excursions are short: the mean excursion length equals the
    stationary return time of the embedded chain to state 0, which is
    of order (1 + rho)^N / (N rho) jumps; already at N = 50, rho = 0.8
    that is ~10^13 steps per excursion.  ``run_batch`` therefore
    estimates the cost analytically up front (a 100-excursion pilot
    would itself never terminate in the regimes it is supposed to warn
    about) and refuses batches whose estimate exceeds the configured
    budget.  Holding times are irrelevant to the height, so this walk
    samples the same height law as ``full-ctmc``.

``full-ctmc``
    The same walk with exponential holding times (rate i mu + (N-i) nu
    at state i); additionally records the busy-period duration in units
    of 1/mu.  Same feasibility constraint.

Reproducibility
---------------
Samples are partitioned into fixed-size chunks (the size depends only on
N, never on the worker count) and chunk c draws from its own
counter-based Philox stream seeded by ``SeedSequence((seed, c))``.
Workers are assigned whole chunks and results are merged in chunk order,
so a fixed ``SimulationConfig`` produces bit-identical summaries for any
``worker_count``.  Scalar aggregates are computed exactly (integer
moments; ``math.fsum`` for durations, which is order-independent because
it rounds the exact sum once), so no merge order can leak into the
output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from . import exactdist, oracle
from .errors import CapacityError, ParameterError, SimulationAbort
from .model import ModelParams, jump_up_probs

__all__ = [
    "LADDER",
    "JUMP_CHAIN",
    "FULL_CTMC",
    "SimulationConfig",
    "SimulationSummary",
    "dkw_epsilon",
    "estimate_mean_excursion_steps",
    "sample_height",
    "sample_excursion_ctmc",
    "run_batch",
]

LADDER = "ladder"
JUMP_CHAIN = "jump-chain"
FULL_CTMC = "full-ctmc"
_MODES = (LADDER, JUMP_CHAIN, FULL_CTMC)

DEFAULT_MAX_EXCURSION_STEPS = 10**10
DEFAULT_MAX_TOTAL_STEPS = 1e9


@dataclass(frozen=True)
class SimulationConfig:
    """Everything that determines a batch; equal configs give equal bytes."""

    params: ModelParams
    n_samples: int
    seed: int
    mode: str = LADDER
    worker_count: int = 1
    dkw_delta: float = 0.01
    max_excursion_steps: int = DEFAULT_MAX_EXCURSION_STEPS
    max_total_steps: float = DEFAULT_MAX_TOTAL_STEPS

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ParameterError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise ParameterError(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ParameterError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not isinstance(self.worker_count, int) or self.worker_count < 1:
            raise ParameterError(f"worker_count must be >= 1, got {self.worker_count!r}")
        if not 0.0 < self.dkw_delta < 1.0:
            raise ParameterError(f"dkw_delta must be in (0, 1), got {self.dkw_delta!r}")


@dataclass(frozen=True)
class SimulationSummary:
    """Batch output.  Deliberately excludes the worker count: the
    partitioning of work is an execution detail and must not show up in
    the serialized artifact."""

    N: int
    rho: float
    nu: float
    mu: float
    mode: str
    n_samples: int
    seed: int
    counts: tuple[int, ...]
    empirical_mean: float
    empirical_variance: float
    sup_distance: float
    dkw_delta: float
    dkw_epsilon: float
    dkw_pass: bool
    mean_busy_duration: float | None = None  # full-ctmc only, in units of 1/mu

    @property
    def empirical_pmf(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n_samples

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "rho": self.rho,
            "nu": self.nu,
            "mu": self.mu,
            "mode": self.mode,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "counts": list(self.counts),
            "empirical_pmf": self.empirical_pmf.tolist(),
            "empirical_mean": self.empirical_mean,
            "empirical_variance": self.empirical_variance,
            "sup_distance": self.sup_distance,
            "dkw_delta": self.dkw_delta,
            "dkw_epsilon": self.dkw_epsilon,
            "dkw_pass": self.dkw_pass,
            "mean_busy_duration": self.mean_busy_duration,
        }

    def to_json_bytes(self) -> bytes:
        import json

        return json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")


def dkw_epsilon(n_samples: int, delta: float) -> float:
    """Half-width of the level-(1 - delta) distribution-free ECDF band."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n_samples))


def estimate_mean_excursion_steps(p: ModelParams) -> float:
    """Mean number of jumps per excursion, computed analytically.

    The embedded jump chain visits state 0 with stationary frequency
    pi_0 lam_0 / sum_j pi_j lam_j (lam_j is the total rate out of j), so
    the mean return time, and hence the mean excursion length, is the
    reciprocal.  Evaluated in the log domain; returns ``inf`` when the
    value overflows a double.
    """
    j = np.arange(p.N + 1, dtype=float)
    log_pi = (gammaln(p.N + 1) - gammaln(j + 1) - gammaln(p.N - j + 1)
              + j * math.log(p.rho) - p.N * math.log1p(p.rho))
    lam = j * p.mu + (p.N - j) * p.nu
    log_return = float(np.logaddexp.reduce(log_pi + np.log(lam))
                       - (log_pi[0] + math.log(lam[0])))
    if log_return > 700.0:
        return math.inf
    return math.expm1(log_return)  # return time minus the jump out of 0


def sample_height(p: ModelParams, rng: np.random.Generator,
                  *, max_steps: int = DEFAULT_MAX_EXCURSION_STEPS) -> int:
    """One literal jump-chain excursion from state 1; returns the peak state.

    Raises ``SimulationAbort`` if the excursion has not hit 0 after
    ``max_steps`` jumps.
    """
    up = jump_up_probs(p)
    state, peak, steps = 1, 1, 0
    while state != 0:
        steps += 1
        if steps > max_steps:
            raise SimulationAbort(
                f"excursion exceeded {max_steps} jump steps at N={p.N}, rho={p.rho}; "
                f"current state {state}, peak {peak}",
                steps_taken=steps)
        state += 1 if rng.random() < up[state] else -1
        if state > peak:
            peak = state
    return peak


def sample_excursion_ctmc(p: ModelParams, rng: np.random.Generator,
                          *, max_steps: int = DEFAULT_MAX_EXCURSION_STEPS
                          ) -> tuple[int, float]:
    """One excursion with exponential holding times: (height, duration).

    The holding time in state i has rate i mu + (N - i) nu; the duration
    sums the holds over the busy period (time unit 1/mu when mu = 1).
    """
    up = jump_up_probs(p)
    state, peak, steps, duration = 1, 1, 0, 0.0
    while state != 0:
        steps += 1
        if steps > max_steps:
            raise SimulationAbort(
                f"excursion exceeded {max_steps} jump steps at N={p.N}, rho={p.rho}",
                steps_taken=steps)
        rate = state * p.mu + (p.N - state) * p.nu
        duration += rng.exponential(1.0) / rate
        state += 1 if rng.random() < up[state] else -1
        if state > peak:
            peak = state
    return peak, duration


# --- batched machinery ------------------------------------------------------

def _chunk_samples(N: int) -> int:
    # Fixed function of N alone so the chunk layout (and therefore the
    # stream layout) never depends on worker_count or available memory.
    return max(256, min(4096, (1 << 22) // max(N, 1)))


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, chunk_index))))


def _ladder_chunk(v: np.ndarray, n: int, rng: np.random.Generator, N: int) -> np.ndarray:
    if v.size == 0:  # N == 1: the only reachable height is 1
        return np.ones(n, dtype=np.int64)
    u = rng.random((n, v.size))
    failed = u >= v  # row s, column k-1: ascent k -> k+1 failed
    any_fail = failed.any(axis=1)
    first_fail = failed.argmax(axis=1) + 1
    return np.where(any_fail, first_fail, N).astype(np.int64)


def _walk_chunk(p: ModelParams, n: int, rng: np.random.Generator,
                with_durations: bool, max_steps: int
                ) -> tuple[np.ndarray, np.ndarray | None]:
    # All excursions of the chunk advance in lockstep; finished ones drop
    # out.  The per-round counter bounds the per-excursion step count, so
    # the circuit breaker semantics match the scalar samplers.
    up = jump_up_probs(p)
    rates = np.arange(p.N + 1, dtype=float) * p.mu + (p.N - np.arange(p.N + 1, dtype=float)) * p.nu
    state = np.ones(n, dtype=np.int64)
    peak = np.ones(n, dtype=np.int64)
    heights = np.zeros(n, dtype=np.int64)
    durations = np.zeros(n) if with_durations else None
    active = np.arange(n)
    rounds = 0
    while active.size:
        rounds += 1
        if rounds > max_steps:
            raise SimulationAbort(
                f"excursions exceeded {max_steps} jump steps at N={p.N}, rho={p.rho}; "
                f"{n - active.size} of {n} chunk samples completed",
                steps_taken=rounds,
                completed_heights=heights[heights > 0].copy())
        s = state[active]
        if with_durations:
            durations[active] += rng.exponential(1.0, s.size) / rates[s]
        go_up = rng.random(s.size) < up[s]
        s = s + np.where(go_up, 1, -1)
        state[active] = s
        peak[active] = np.maximum(peak[active], s)
        done = s == 0
        if done.any():
            finished = active[done]
            heights[finished] = peak[finished]
            active = active[~done]
    return heights, durations


def _exact_counts_moments(counts: np.ndarray, n: int) -> tuple[float, float]:
    # Heights are integers, so the sample moments are ratios of integers;
    # computing them that way makes the summary independent of any
    # accumulation order.
    ints = [int(c) for c in counts]
    s1 = sum((k + 1) * c for k, c in enumerate(ints))
    s2 = sum((k + 1) * (k + 1) * c for k, c in enumerate(ints))
    mean = Fraction(s1, n)
    var = Fraction(n * s2 - s1 * s1, n * n)
    return float(mean), float(var)


def run_batch(cfg: SimulationConfig) -> SimulationSummary:
    """Draw ``cfg.n_samples`` i.i.d. heights and compare against the exact law.

    Raises ``CapacityError`` for walk modes whose analytically estimated
    total step count exceeds ``cfg.max_total_steps`` (use the ladder mode
    there), and propagates ``SimulationAbort`` from the circuit breaker.
    """
    p = cfg.params
    n = cfg.n_samples

    if cfg.mode in (JUMP_CHAIN, FULL_CTMC):
        est = estimate_mean_excursion_steps(p) * n
        if est > cfg.max_total_steps:
            raise CapacityError(
                f"direct {cfg.mode} simulation of {n} excursions at N={p.N}, "
                f"rho={p.rho} needs ~{est:.3g} jump steps "
                f"(budget {cfg.max_total_steps:.3g}); the '{LADDER}' mode samples "
                f"the same height law in O(N) per excursion")

    chunk_size = _chunk_samples(p.N)
    chunks = [(c, lo, min(lo + chunk_size, n))
              for c, lo in enumerate(range(0, n, chunk_size))]

    if cfg.mode == LADDER:
        v = oracle.conditional_ascent_probs(p, cap=max(p.N, oracle.ORACLE_CAP_DEFAULT))

        def work(chunk):
            c, lo, hi = chunk
            return _ladder_chunk(v, hi - lo, _chunk_rng(cfg.seed, c), p.N), None
    else:
        with_durations = cfg.mode == FULL_CTMC

        def work(chunk):
            c, lo, hi = chunk
            return _walk_chunk(p, hi - lo, _chunk_rng(cfg.seed, c),
                               with_durations, cfg.max_excursion_steps)

    if cfg.worker_count > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.worker_count) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(chunk) for chunk in chunks]

    heights = np.concatenate([r[0] for r in results])
    counts = np.bincount(heights, minlength=p.N + 1)[1:]

    mean, var = _exact_counts_moments(counts, n)

    exact = exactdist.height_distribution(p)
    ecdf = np.cumsum(counts) / n
    sup = float(np.max(np.abs(ecdf - exact.cdf_values())))
    eps = dkw_epsilon(n, cfg.dkw_delta)

    mean_duration = None
    if cfg.mode == FULL_CTMC:
        # expressed in units of the mean service time 1/mu; fsum rounds
        # the exact sum once, so the value is independent of merge order
        all_durations = np.concatenate([r[1] for r in results])
        mean_duration = math.fsum(all_durations) / n * p.mu

    return SimulationSummary(
        N=p.N, rho=p.rho, nu=p.nu, mu=p.mu, mode=cfg.mode,
        n_samples=n, seed=cfg.seed, counts=tuple(int(c) for c in counts),
        empirical_mean=mean, empirical_variance=var,
        sup_distance=sup, dkw_delta=cfg.dkw_delta, dkw_epsilon=eps,
        dkw_pass=sup <= eps, mean_busy_duration=mean_duration)
