"""Scenario execution and analysis sweeps behind the command line."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product

from . import analysis
from .analysis import AnalysisError, SecurityParams, TimingParams
from .channels import Channel, EndpointAddress
from .config import ScenarioConfig, SweepConfig, expand_range
from .crypto import generate_keypair, pack, u64
from .protocols import BasicSubject, run_basic_p1, run_basic_p2, run_trial, trial_seed

SCHEMA_VERSION = 1


@dataclass
class MetricsReport:
    config: dict
    rows: list[dict]
    groups: list[dict]

    def to_json(self) -> str:
        return json.dumps(
            {"schema": SCHEMA_VERSION, "config": self.config, "groups": self.groups, "runs": self.rows},
            indent=2, sort_keys=True,
        ) + "\n"

    def to_csv(self) -> str:
        out = io.StringIO()
        if self.rows:
            writer = csv.DictWriter(out, fieldnames=list(self.rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)
        return out.getvalue()


def _mean(values):
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def aggregate(rows: list[dict], config: ScenarioConfig, corrupted: int) -> dict:
    n = len(rows)
    successes = sum(1 for r in rows if r["certified"])
    rate = successes / n
    group = {
        "corrupted": corrupted,
        "trials": n,
        "certified_rate": rate,
        "certified_stderr": math.sqrt(rate * (1 - rate) / n),
        "mean_latency": _mean(r["latency"] for r in rows),
        "mean_request_wait": _mean(r.get("request_wait") for r in rows),
        "mean_endpoint_messages": _mean(r["endpoint_messages"] for r in rows),
        "mean_endpoint_cost": _mean(r["endpoint_cost"] for r in rows),
    }
    attacks = [r["attack_success"] for r in rows if r.get("attack_success") is not None]
    if attacks:
        a = sum(attacks) / len(attacks)
        group["attack_success_rate"] = a
        group["attack_success_stderr"] = math.sqrt(a * (1 - a) / len(attacks))
    if config.protocol in ("p3", "p4") and config.adversary.strategy != "none":
        try:
            params = SecurityParams(config.population, config.committee, config.k_bar, corrupted)
        except AnalysisError:
            params = None
        if params is not None and config.sortition == "distinct":
            strategy = config.adversary.strategy
            if strategy in ("miscertify_accept", "miscertify_disclose"):
                group["p_exact"] = analysis.p_exact(params)
            elif strategy == "dos_silence":
                group["p_exact"] = analysis.p_dos(params)
    group["attack_cost"] = float(config.adversary.cost_per_subject * corrupted)
    return group


def _basic_row(config: ScenarioConfig, trial: int) -> dict:
    seed = trial_seed(config.seed, trial)
    profile = config.channel_profile()
    keys = generate_keypair(pack([b"basic-subject", u64(seed)]))
    endpoint = EndpointAddress(profile.kind, "basic-subject")
    spoof = config.adversary.strategy == "spoof"
    subject = BasicSubject(keys, controls_endpoint=not spoof)
    channel = Channel(profile)
    if config.protocol == "basic1":
        out = run_basic_p1(config.verifiers, subject, endpoint, channel, seed=seed)
    else:
        out = run_basic_p2(config.verifiers, subject, endpoint, channel, seed=seed, spoof=spoof)
    return {
        "trial": trial,
        "seed": seed,
        "protocol": config.protocol,
        "strategy": config.adversary.strategy,
        "corrupted": 0,
        "certified": out.success,
        "reason": out.reason,
        "latency": None if out.latency is None else float(out.latency),
        "request_wait": None,
        "endpoint_messages": out.endpoint_messages,
        "endpoint_cost": float(out.endpoint_cost),
        "acceptances": 0,
        "disclosures": 0,
        "committee_corrupted": 0,
        "duplicates": 0,
        "attack_success": out.success if spoof else None,
        "subject_id": None,
    }


def _one(args) -> dict:
    config, trial = args
    if config.protocol in ("basic1", "basic2"):
        return _basic_row(config, trial)
    return run_trial(config, trial).row()


def run_scenario(config: ScenarioConfig, *, workers: int = 1) -> MetricsReport:
    """Run every trial (and every swept corrupted count) of a scenario.

    Rows are ordered by (corrupted count, trial index) whatever the worker count.
    """
    config.validate()
    counts = [config.adversary.corrupted_count]
    if config.sweep is not None:
        counts = [c for c in expand_range(config.sweep["corrupted_count"], "sweep.corrupted_count")]
    jobs = []
    for m in counts:
        cfg = replace(config, adversary=replace(config.adversary, corrupted_count=m), sweep=None)
        cfg.validate()
        jobs.extend((cfg, t) for t in range(config.trials))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_one(job) for job in jobs]
    groups = []
    for i, m in enumerate(counts):
        chunk = rows[i * config.trials:(i + 1) * config.trials]
        groups.append(aggregate(chunk, config, m))
    return MetricsReport(config.to_dict(), rows, groups)


SWEEP_COLUMNS = [
    "row_type", "N", "k", "k_bar", "m", "alpha", "p_exact", "p_dos", "p_montecarlo", "p_montecarlo_se",
    "block_interval", "propagation_delay", "request_wait", "endpoint_delay", "per_message_time",
    "verifiers", "latency_p3", "latency_p4", "latency_basic", "messages_basic", "messages_decentralized",
    "warning",
]


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x


def run_analysis(sweep: SweepConfig) -> str:
    """One CSV row per grid point; invalid points become warning rows."""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=SWEEP_COLUMNS, lineterminator="\n", restval="")
    writer.writeheader()
    for N, k, k_bar, m in product(sweep.N, sweep.k, sweep.k_bar, sweep.m):
        try:
            params = SecurityParams(N, k, k_bar, m)
        except AnalysisError as exc:
            writer.writerow({"row_type": "warning", "N": N, "k": k, "k_bar": k_bar, "m": m, "warning": str(exc)})
            continue
        row = {
            "row_type": "security", "N": N, "k": k, "k_bar": k_bar, "m": m,
            "alpha": float(params.alpha), "p_exact": analysis.p_exact(params), "p_dos": analysis.p_dos(params),
            "messages_decentralized": k,
        }
        if sweep.montecarlo_trials:
            est = analysis.p_montecarlo(params, sweep.montecarlo_trials, sweep.seed)
            row["p_montecarlo"], row["p_montecarlo_se"] = est.value, est.stderr
        writer.writerow(row)
    if sweep.timing is not None:
        g = sweep.timing
        for b, p, bbar, e, w, v, k in product(
            g["block_interval"], g["propagation_delay"], g["request_wait"], g["endpoint_delay"],
            g["per_message_time"], g["verifiers"], g["k"],
        ):
            base = {"block_interval": _num(b), "propagation_delay": _num(p), "request_wait": _num(bbar),
                    "endpoint_delay": _num(e), "per_message_time": _num(w), "verifiers": v, "k": k}
            try:
                t = TimingParams(b, p, bbar, e, w, v)
            except AnalysisError as exc:
                writer.writerow({"row_type": "warning", **base, "warning": str(exc)})
                continue
            writer.writerow({
                "row_type": "timing", **base,
                "latency_p3": _num(analysis.latency_p3(t, k)),
                "latency_p4": _num(analysis.latency_p4(t, k)),
                "latency_basic": _num(analysis.latency_basic(t)),
                "messages_basic": analysis.messages_basic(v),
                "messages_decentralized": analysis.messages_decentralized(k),
            })
    return out.getvalue()
