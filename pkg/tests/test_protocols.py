import pytest

from endpointcert.analysis import TimingParams, latency_basic, latency_p3, latency_p4
from endpointcert.channels import Channel, ChannelProfile, EndpointAddress, preset
from endpointcert.config import ScenarioConfig
from endpointcert.crypto import generate_keypair
from endpointcert.protocols import (
    BasicSubject,
    Simulation,
    build_simulation,
    population,
    run_basic_p1,
    run_basic_p2,
    run_p3,
    run_p4,
    run_trial,
)
from endpointcert.registry import ProtocolParams, Registry, replay_certified


def scenario(**kw):
    base = {"protocol": "p3", "population": 40, "committee": 6, "threshold": 4, "channel": "email"}
    return ScenarioConfig.from_dict({**base, **kw})


@pytest.mark.parametrize("protocol", ["p3", "p4"])
def test_honest_run_certifies(protocol):
    r = run_trial(scenario(protocol=protocol), 0)
    assert r.certified and r.reason == "certified"
    assert r.subject_id == 40
    assert r.committee_corrupted == 0


def test_run_p3_p4_guard_protocol():
    with pytest.raises(ValueError):
        run_p3(scenario(protocol="p4"))
    with pytest.raises(ValueError):
        run_p4(scenario(protocol="p3"))


@pytest.mark.parametrize("protocol", ["p3", "p4"])
def test_latency_matches_formula(protocol):
    cfg = scenario(protocol=protocol, committee=5, threshold=5,
                   timing={"block_interval": 10, "propagation_delay": 1, "per_message_time": 3, "endpoint_delay": 2})
    for trial in range(5):
        r = run_trial(cfg, trial)
        t = TimingParams(10, 1, r.request_wait, 2, 3)
        expected = latency_p3(t, 5) if protocol == "p3" else latency_p4(t, 5)
        assert r.latency == expected


def test_fixed_submit_time_gives_fixed_wait():
    r = run_trial(scenario(submit_time=3, timing={"block_interval": 10, "propagation_delay": 1}), 0)
    assert r.request_wait == 6


@pytest.mark.parametrize("protocol", ["p3", "p4"])
def test_endpoint_sees_k_messages(protocol):
    r = run_trial(scenario(protocol=protocol, committee=7, threshold=3), 2)
    assert r.endpoint_messages == 7
    assert r.endpoint_cost == 7 * preset("email").cost_per_message


def test_offline_members_block_certification():
    cfg = scenario(population=6, committee=6, threshold=4, offline_members=3)
    r = run_trial(cfg, 0)
    assert not r.certified and r.reason == "insufficient acceptances"
    r4 = run_trial(scenario(protocol="p4", population=6, committee=6, threshold=4, offline_members=3), 0)
    assert not r4.certified and r4.reason == "insufficient challenges"


def test_new_subject_can_serve_on_later_committees():
    pop = population(5)
    sim = Simulation(pop, ProtocolParams(5, 3), preset("email"), block_interval=10, propagation_delay=1, seed=3)
    keys = sim.new_keys(b"s")
    first = sim.launch(keys, EndpointAddress("email", "first"), "p3", 0)
    sim.run()
    assert first.certified and sim.registry.size == 6
    second = sim.launch(sim.new_keys(b"t"), EndpointAddress("email", "second"), "p3", sim.now)
    sim.run()
    assert second.certified
    assert replay_certified(sim.ledger, sim.params) == {first.tx_id, second.tx_id}


@pytest.mark.parametrize("protocol", ["p3", "p4"])
def test_simulated_registry_equals_replay(protocol):
    sim = build_simulation(scenario(protocol=protocol, population=12, committee=4, threshold=2), 0)
    runs = [sim.launch(sim.new_keys(b"x"), EndpointAddress("email", f"e{i}"), protocol, i) for i in range(4)]
    sim.run()
    assert all(r.certified for r in runs)
    rebuilt = Registry.from_chain(sim.ledger, sim.params)
    assert [(s.public_key, s.endpoint) for s in rebuilt.subjects] == \
        [(s.public_key, s.endpoint) for s in sim.registry.subjects]
    assert replay_certified(sim.ledger, sim.params) == {r.tx_id for r in runs}


def test_same_binding_certified_once():
    sim = build_simulation(scenario(), 0)
    keys = sim.new_keys(b"dup")
    e = EndpointAddress("email", "dup")
    a = sim.launch(keys, e, "p3", 0)
    b = sim.launch(keys, e, "p3", 20)
    sim.run()
    assert a.certified and not b.certified
    assert sim.registry.size == 41


def test_deadline_expires_slow_channels():
    slow = {"preset": "email", "delivery_delay": 1000}
    r = run_trial(scenario(channel=slow, deadline_blocks=5), 0)
    assert not r.certified
    ok = run_trial(scenario(channel=slow, deadline_blocks=100), 0)
    assert ok.certified


def test_early_discloser_prevents_use_of_its_challenge():
    sim = build_simulation(scenario(protocol="p4", population=5, committee=5, threshold=5), 0)
    sim.early_disclosers.update(range(5))
    run = sim.launch(sim.new_keys(b"e"), EndpointAddress("email", "early"), "p4", 0)
    sim.run()
    assert not run.certified


def test_seed_reproducibility():
    cfg = scenario(protocol="p4")
    assert run_trial(cfg, 3) == run_trial(cfg, 3)
    assert run_trial(cfg, 3).request_wait != run_trial(cfg, 4).request_wait


# -- basic protocols -------------------------------------------------------------

def unit_channel(spoofable=False):
    return Channel(ChannelProfile("email", 1, 2, spoofable, False))


def test_basic_p1_latency_and_messages():
    subject = BasicSubject(generate_keypair(b"basic"))
    out = run_basic_p1(5, subject, EndpointAddress("email", "me"), unit_channel())
    assert out.success and out.verified == 5
    assert out.latency == 7 == latency_basic(TimingParams(10, 0, 0, 2, 1, 5))
    assert out.endpoint_messages == 5


def test_basic_p2_honest_and_spoofed():
    e = EndpointAddress("email", "victim")
    honest = run_basic_p2(4, BasicSubject(generate_keypair(b"h")), e, unit_channel())
    assert honest.success and honest.endpoint_messages == 4
    attacker = BasicSubject(generate_keypair(b"a"), controls_endpoint=False)
    assert not run_basic_p2(4, attacker, e, unit_channel(), spoof=False).success
    assert not run_basic_p2(4, attacker, e, unit_channel(spoofable=False), spoof=True).success
    assert run_basic_p2(4, attacker, e, unit_channel(spoofable=True), spoof=True).success


def test_basic_offline_subject_fails():
    out = run_basic_p1(3, BasicSubject(generate_keypair(b"o"), online=False), EndpointAddress("email", "o"),
                       unit_channel())
    assert not out.success and out.reason == "timeout" and out.latency is None
