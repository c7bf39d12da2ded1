"""Attack probabilities, latency formulas and message counts.

All probability tails are evaluated with exact integer arithmetic and only
converted to floats at the end. Latency formulas are exact over fractions.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction

from .ledger import Time, as_time


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class SecurityParams:
    N: int
    k: int
    k_bar: int
    m: int

    def __post_init__(self):
        if not 1 <= self.k_bar <= self.k <= self.N:
            raise AnalysisError(f"need 1 <= k_bar <= k <= N, got N={self.N}, k={self.k}, k_bar={self.k_bar}")
        if not 0 <= self.m <= self.N:
            raise AnalysisError(f"need 0 <= m <= N, got m={self.m}, N={self.N}")

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.k_bar, self.k)


@dataclass(frozen=True)
class TimingParams:
    block_interval: Time
    propagation_delay: Time = Fraction(0)
    request_wait: Time = Fraction(0)
    endpoint_delay: Time = Fraction(0)
    per_message_time: Time = Fraction(0)
    verifier_count: int = 1

    def __post_init__(self):
        for name in ("block_interval", "propagation_delay", "request_wait", "endpoint_delay", "per_message_time"):
            object.__setattr__(self, name, as_time(getattr(self, name)))
        if self.block_interval <= 0:
            raise AnalysisError("block_interval must be positive")
        if min(self.propagation_delay, self.request_wait, self.endpoint_delay, self.per_message_time) < 0:
            raise AnalysisError("timing parameters must be non-negative")
        if self.request_wait >= self.block_interval:
            raise AnalysisError("request_wait must be below block_interval")
        if self.verifier_count < 0:
            raise AnalysisError("verifier_count must be non-negative")


def _comb(n: int, r: int) -> int:
    return math.comb(n, r) if 0 <= r <= n else 0


def p_exact_rational(params: SecurityParams) -> Fraction:
    """P[at least k_bar of a uniformly drawn k-subset are among the m corrupted]."""
    N, k, k_bar, m = params.N, params.k, params.k_bar, params.m
    hits = sum(_comb(m, i) * _comb(N - m, k - i) for i in range(k_bar, k + 1))
    return Fraction(hits, math.comb(N, k))


def p_exact(params: SecurityParams) -> float:
    return float(p_exact_rational(params))


def dos_params(params: SecurityParams) -> SecurityParams:
    """Blocking needs at least k - k_bar + 1 silent members (strictly more than k - k_bar)."""
    return replace(params, k_bar=params.k - params.k_bar + 1)


def p_dos(params: SecurityParams) -> float:
    return p_exact(dos_params(params))


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    trials: int
    hits: int

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        se = math.sqrt(target * (1 - target) / self.trials)
        return abs(self.value - target) <= sigmas * se


def p_montecarlo(params: SecurityParams, trials: int, seed: int = 0) -> Estimate:
    """Estimate ``p_exact`` by sampling committees without replacement."""
    if trials < 1:
        raise AnalysisError("trials must be >= 1")
    if params.m == 0:
        return Estimate(0.0, 0.0, trials, 0)
    rng = random.Random(seed)
    population = range(params.N)
    hits = 0
    for _ in range(trials):
        # ids below m are the corrupted ones
        corrupted = sum(1 for x in rng.sample(population, params.k) if x < params.m)
        hits += corrupted >= params.k_bar
    p = hits / trials
    return Estimate(p, math.sqrt(p * (1 - p) / trials), trials, hits)


def blocks_to_acceptance(t: TimingParams, k: int) -> int:
    """ceil((2p + e + kW) / b); the ceiling of 0 is 0."""
    span = 2 * t.propagation_delay + t.endpoint_delay + k * t.per_message_time
    return math.ceil(span / t.block_interval)


def latency_p3(t: TimingParams, k: int) -> Time:
    return blocks_to_acceptance(t, k) * t.block_interval + 2 * t.propagation_delay + t.request_wait


def latency_p4(t: TimingParams, k: int) -> Time:
    return (blocks_to_acceptance(t, k) + 1) * t.block_interval + 2 * t.propagation_delay + t.request_wait


def latency_basic(t: TimingParams) -> Time:
    return t.endpoint_delay + t.verifier_count * t.per_message_time


def messages_basic(v: int) -> int:
    return v


def messages_decentralized(k: int) -> int:
    return k


@dataclass(frozen=True)
class Comparison:
    verifiers: int
    k: int
    messages_basic: int
    messages_decentralized: int
    message_ratio: Fraction | None
    break_even_verifiers: int
    latency_basic: Time
    latency_p3: Time
    latency_p4: Time

    @property
    def decentralized_fewer_messages(self) -> bool:
        return self.messages_decentralized < self.messages_basic

    @property
    def decentralized_faster(self) -> bool:
        return self.latency_p3 < self.latency_basic


def compare(t: TimingParams, k: int, v: int | None = None) -> Comparison:
    v = t.verifier_count if v is None else v
    t = replace(t, verifier_count=v)
    mb, md = messages_basic(v), messages_decentralized(k)
    return Comparison(
        verifiers=v,
        k=k,
        messages_basic=mb,
        messages_decentralized=md,
        message_ratio=Fraction(mb, md) if md else None,
        break_even_verifiers=k,
        latency_basic=latency_basic(t),
        latency_p3=latency_p3(t, k),
        latency_p4=latency_p4(t, k),
    )
