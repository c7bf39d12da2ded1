from fractions import Fraction

import pytest

from endpointcert.channels import (
    PRESETS,
    Channel,
    ChannelError,
    ChannelProfile,
    EndpointAddress,
    preset,
)

A = EndpointAddress("email", "a")
B = EndpointAddress("email", "b")
C = EndpointAddress("email", "c")


def profile(**kw):
    base = dict(kind="email", per_message_time=1, delivery_delay=2, spoofable=False, eavesdroppable=False)
    return ChannelProfile(**{**base, **kw})


def test_three_messages_serialize_on_one_endpoint():
    ch = Channel(profile())
    times = [ch.send(A, B, b"m", 0).delivered_at for _ in range(3)]
    assert times == [3, 4, 5]


def test_messages_also_occupy_the_receiver():
    ch = Channel(profile())
    ch.send(A, B, b"1", 0)
    assert ch.send(C, B, b"2", 0).delivered_at == 4
    assert ch.send(C, A, b"3", 10).delivered_at == 13


def test_spoof_refused_on_unspoofable_channel():
    ch = Channel(profile())
    assert ch.attempt_spoof(object(), A, B, b"x", 0) is None


def test_spoof_delivers_claimed_sender_without_occupying_it():
    ch = Channel(profile(spoofable=True))
    msg = ch.attempt_spoof(object(), A, B, b"x", 0)
    assert msg.sender == A and msg.spoofed
    assert ch.send(A, C, b"y", 0).delivered_at == 3
    assert ch.message_count(A) == 1


def test_eavesdrop_registers_tap_only_when_allowed():
    adv = object()
    assert not Channel(profile()).attempt_eavesdrop(adv, A)
    ch = Channel(profile(eavesdroppable=True))
    assert ch.attempt_eavesdrop(adv, A)
    assert ch.eavesdroppers(A) == [adv]
    assert ch.eavesdroppers(B) == []


def test_cost_and_trace():
    ch = Channel(profile(cost_per_message=Fraction(1, 4)))
    ch.send(A, B, b"1", 0)
    ch.send(A, C, b"2", 0)
    assert ch.cost(A) == Fraction(1, 2)
    assert ch.cost(C) == Fraction(1, 4)
    rows = ch.export_trace().splitlines()
    assert len(rows) == 3


def test_endpoint_address_text_roundtrip():
    e = EndpointAddress.parse("phone_sms:+15551234")
    assert e.kind == "phone_sms" and e.address == "+15551234"
    assert str(e) == "phone_sms:+15551234"
    with pytest.raises(ChannelError):
        EndpointAddress.parse("noseparator")


@pytest.mark.parametrize("kw", [{"per_message_time": 0}, {"delivery_delay": -1}])
def test_profile_validation(kw):
    with pytest.raises(ChannelError):
        profile(**kw)


def test_presets_cover_all_kinds():
    assert {"phone_sms", "postal", "email", "ip", "web", "dns", "bank"} <= set(PRESETS)
    assert not preset("dns").spoofable and not preset("dns").eavesdroppable
    assert preset("email").spoofable
    with pytest.raises(ChannelError):
        preset("pigeon")


def test_with_timing_overrides():
    p = preset("email").with_timing(per_message_time=3)
    assert p.per_message_time == 3 and p.delivery_delay == preset("email").delivery_delay


def test_unknown_endpoint_kind_rejected():
    with pytest.raises(ChannelError):
        EndpointAddress("carrier_pigeon", "x")
