"""Acceptance criteria, one check per criterion.

Each check emits a single ``PASS``/``FAIL`` line with its runtime, and the
matching test asserts it. Under pytest the lines are collected into an
"acceptance criteria" section of the terminal summary (see conftest.py).
Run directly with ``python3 tests/test_acceptance.py`` for the lines alone.
"""
from __future__ import annotations

import math
import sys
import time
from fractions import Fraction
from itertools import combinations

import pytest

from endpointcert.analysis import SecurityParams, TimingParams, latency_p3, latency_p4, p_exact, p_exact_rational
from endpointcert.channels import Channel, ChannelProfile, EndpointAddress
from endpointcert.config import ScenarioConfig
from endpointcert.crypto import generate_keypair
from endpointcert.protocols import BasicSubject, run_basic_p1, run_basic_p2, run_trial


LINES: list[str] = []


def report(cid: str, ok: bool, elapsed: float, budget: float, detail: str) -> bool:
    ok = ok and elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'}  {cid:<4} {elapsed:8.2f}s (budget {budget:g}s)  {detail}"
    LINES.append(line)
    print(line, flush=True)
    return ok


def scenario(**kw) -> ScenarioConfig:
    return ScenarioConfig.from_dict(kw)


# -- 1, 2: closed-form attack probability ---------------------------------------

def check_c1() -> bool:
    t = time.perf_counter()
    p = p_exact(SecurityParams(1000, 100, 50, 500))
    return report("C1", 0.4 <= p <= 0.6, time.perf_counter() - t, 1, f"p(N=1000,k=100,kb=50,m=500) = {p:.4f}")


def check_c2() -> bool:
    t = time.perf_counter()
    p = p_exact(SecurityParams(1000, 100, 50, 375))
    return report("C2", p < 0.01, time.perf_counter() - t, 1, f"p(N=1000,k=100,kb=50,m=375) = {p:.3e}")


# -- 3: exhaustive enumeration ---------------------------------------------------

def check_c3() -> bool:
    t = time.perf_counter()
    cases = mismatches = 0
    for n in range(1, 13):
        for k in range(1, min(5, n) + 1):
            subsets = list(combinations(range(n), k))
            for m in range(n + 1):
                # subjects 0..m-1 are the corrupted ones
                hist = [0] * (k + 1)
                for s in subsets:
                    hist[sum(1 for x in s if x < m)] += 1
                for kb in range(1, k + 1):
                    brute = Fraction(sum(hist[kb:]), len(subsets))
                    cases += 1
                    mismatches += p_exact_rational(SecurityParams(n, k, kb, m)) != brute
    return report("C3", mismatches == 0, time.perf_counter() - t, 30,
                  f"{cases} parameter points, {mismatches} mismatches against enumeration")


# -- 4: simulated attack frequency -----------------------------------------------

C4_TRIALS = 10_000


def check_c4() -> bool:
    t = time.perf_counter()
    ok, parts = True, []
    for m in (20, 100, 180):
        cfg = scenario(protocol="p3", population=200, committee=10, threshold=5, channel="email",
                       adversary={"strategy": "miscertify_accept", "corrupted_count": m}, seed=m)
        hits = sum(bool(run_trial(cfg, i).attack_success) for i in range(C4_TRIALS))
        p = p_exact(SecurityParams(200, 10, 5, m))
        sigma = math.sqrt(p * (1 - p) / C4_TRIALS)
        freq = hits / C4_TRIALS
        ok &= abs(freq - p) <= 3 * sigma
        parts.append(f"m={m}: {freq:.4f} vs {p:.4f} ({(freq - p) / sigma:+.2f} sd)")
    return report("C4", ok, time.perf_counter() - t, 300, "; ".join(parts))


# -- 5: latency formulas ---------------------------------------------------------

def check_c5() -> bool:
    t = time.perf_counter()
    p, e = Fraction(1), Fraction(2)
    points = mismatches = 0
    for b in (10, 15, 30):
        for w in (Fraction(1, 2), Fraction(2), Fraction(5)):
            for k in (3, 7, 12):
                for protocol in ("p3", "p4"):
                    cfg = scenario(protocol=protocol, population=40, committee=k, threshold=k, channel="email",
                                   timing={"block_interval": b, "propagation_delay": p,
                                           "endpoint_delay": e, "per_message_time": str(w)},
                                   seed=b * 100 + k)
                    r = run_trial(cfg, 0)
                    tp = TimingParams(b, p, r.request_wait, e, w)
                    expected = latency_p3(tp, k) if protocol == "p3" else latency_p4(tp, k)
                    points += 1
                    mismatches += r.latency != expected
    return report("C5", mismatches == 0, time.perf_counter() - t, 60,
                  f"{points} grid points (P3 and P4), {mismatches} inexact latencies")


# -- 6: message counts -----------------------------------------------------------

def check_c6() -> bool:
    t = time.perf_counter()
    bad, configs = [], 0
    for protocol in ("p3", "p4"):
        for channel in ("phone_sms", "email", "dns", "web"):
            for k in (1, 5, 10, 25):
                for kb in {1, (k + 1) // 2, k}:
                    for b in (12, 600):
                        cfg = scenario(protocol=protocol, population=60, committee=k, threshold=kb, channel=channel,
                                       timing={"block_interval": b, "propagation_delay": 1}, seed=k * b + kb)
                        r = run_trial(cfg, 0)
                        configs += 1
                        if r.endpoint_messages != k:
                            bad.append(f"{protocol}/{channel} k={k} kb={kb} b={b}: {r.endpoint_messages}")
    unit = ChannelProfile("email", 1, 2, False, False)
    for v in (1, 5, 20, 100):
        e = EndpointAddress("email", "basic")
        s = BasicSubject(generate_keypair(b"acceptance-basic"))
        for name, fn in (("basic1", run_basic_p1), ("basic2", run_basic_p2)):
            out = fn(v, s, e, Channel(unit))
            configs += 1
            if out.endpoint_messages != v:
                bad.append(f"{name} v={v}: {out.endpoint_messages}")
    return report("C6", not bad, time.perf_counter() - t, 60,
                  f"{configs} configurations: P3/P4 send k through E, basic send v" if not bad else ", ".join(bad))


# -- 7: soundness on a non-spoofable, non-eavesdroppable channel -----------------

C7_TRIALS = 1000


def check_c7() -> bool:
    t = time.perf_counter()
    configs = [
        scenario(protocol=protocol, population=200, committee=10, threshold=5, channel="dns",
                 adversary={"strategy": strategy, "corrupted_count": m}, seed=m)
        for protocol, strategies in (("p3", ("miscertify_accept", "spoof")), ("p4", ("miscertify_disclose", "eavesdrop")))
        for strategy in strategies
        for m in (4, 40)
    ]
    miscert = counted = skipped = trial = 0
    while counted < C7_TRIALS:
        for cfg in configs:
            r = run_trial(cfg, trial)
            if r.committee_corrupted >= 5:
                skipped += 1  # committee reached the threshold: outside this property
                continue
            counted += 1
            miscert += bool(r.attack_success)
            if counted == C7_TRIALS:
                break
        trial += 1
    return report("C7", miscert == 0, time.perf_counter() - t, 120,
                  f"{counted} trials with committees below threshold ({skipped} skipped), {miscert} miscertifications")


# -- 8: channel weaknesses let m = 0 win -----------------------------------------

def check_c8() -> bool:
    t = time.perf_counter()
    results = {}
    for protocol, strategy in (("p3", "spoof"), ("p4", "eavesdrop")):
        cfg = scenario(protocol=protocol, population=50, committee=8, threshold=5, channel="email",
                       adversary={"strategy": strategy, "corrupted_count": 0})
        results[strategy] = [run_trial(cfg, i).attack_success for i in range(5)]
    ok = all(all(v) for v in results.values())
    detail = ", ".join(f"{s}: {sum(v)}/{len(v)} miscertified" for s, v in results.items())
    return report("C8", ok, time.perf_counter() - t, 10, detail)


# -- 9: denial of service threshold ----------------------------------------------

def check_c9() -> bool:
    t = time.perf_counter()
    outcome = {}
    for protocol in ("p3", "p4"):
        for silent in (4, 5):
            # the whole population is the committee, so "first" silences exactly `silent` members
            cfg = scenario(protocol=protocol, population=10, committee=10, threshold=6, channel="email",
                           adversary={"strategy": "dos_silence", "corrupted_count": silent, "selection": "first"})
            outcome[protocol, silent] = run_trial(cfg, 0).certified
    ok = all(outcome[p, 4] and not outcome[p, 5] for p in ("p3", "p4"))
    detail = ", ".join(f"{p} silent={s}: {'certified' if c else 'blocked'}" for (p, s), c in outcome.items())
    return report("C9", ok, time.perf_counter() - t, 10, detail)


# -- 10: mean request wait --------------------------------------------------------

C10_TRIALS = 10_000


def check_c10() -> bool:
    t = time.perf_counter()
    b = 15
    cfg = scenario(protocol="p3", population=20, committee=3, threshold=2, channel="email",
                   timing={"block_interval": b, "propagation_delay": 1}, seed=10)
    waits = [run_trial(cfg, i).request_wait for i in range(C10_TRIALS)]
    mean = float(sum(waits)) / len(waits)
    ok = abs(mean - b / 2) <= 0.05 * b / 2
    return report("C10", ok, time.perf_counter() - t, 60, f"mean wait {mean:.3f} vs b/2 = {b / 2}")


CHECKS = [check_c1, check_c2, check_c3, check_c4, check_c5, check_c6, check_c7, check_c8, check_c9, check_c10]


@pytest.mark.parametrize("check", CHECKS, ids=lambda f: f.__name__.removeprefix("check_"))
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
