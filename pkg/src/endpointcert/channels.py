"""Simulated endpoint communication technology.

A transmission occupies both the sending and the receiving endpoint for
``per_message_time`` (W) and is delivered ``delivery_delay`` (e) after the
occupancy ends. Messages sharing an endpoint therefore serialize, and k
back-to-back messages through one endpoint complete at ``e + k*W``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

from .ledger import Time, as_time

ENDPOINT_KINDS = ("phone_sms", "phone_ivr", "postal", "email", "ip", "web", "dns", "bank")


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class EndpointAddress:
    kind: str
    address: str

    def __post_init__(self):
        if self.kind not in ENDPOINT_KINDS:
            raise ChannelError(f"unknown endpoint kind {self.kind!r}")

    def __str__(self) -> str:
        return f"{self.kind}:{self.address}"

    def encode(self) -> bytes:
        return str(self).encode()

    @classmethod
    def parse(cls, text: str) -> "EndpointAddress":
        kind, sep, address = text.partition(":")
        if not sep:
            raise ChannelError(f"endpoint {text!r} is not of the form kind:address")
        return cls(kind, address)


@dataclass(frozen=True)
class ChannelProfile:
    kind: str
    per_message_time: Time
    delivery_delay: Time
    spoofable: bool
    eavesdroppable: bool
    cost_per_message: Fraction = Fraction(0)
    suggested: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ENDPOINT_KINDS:
            raise ChannelError(f"unknown endpoint kind {self.kind!r}")
        object.__setattr__(self, "per_message_time", as_time(self.per_message_time))
        object.__setattr__(self, "delivery_delay", as_time(self.delivery_delay))
        object.__setattr__(self, "cost_per_message", as_time(self.cost_per_message))
        if self.per_message_time <= 0:
            raise ChannelError("per_message_time must be positive")
        if self.delivery_delay < 0:
            raise ChannelError("delivery_delay must be non-negative")

    def with_timing(self, per_message_time=None, delivery_delay=None) -> "ChannelProfile":
        return replace(
            self,
            per_message_time=self.per_message_time if per_message_time is None else per_message_time,
            delivery_delay=self.delivery_delay if delivery_delay is None else delivery_delay,
        )


# Timings (seconds) and costs are illustrative defaults; only the
# spoofing/eavesdropping capabilities follow the qualitative endpoint survey.
PRESETS: Mapping[str, ChannelProfile] = {
    "phone_sms": ChannelProfile("phone_sms", 1, 5, False, True, Fraction("0.05"), ("p3",)),
    "phone_ivr": ChannelProfile("phone_ivr", 30, 10, False, True, Fraction("0.10"), ("p3",)),
    "postal": ChannelProfile("postal", 60, 172800, True, True, Fraction("1.00"), ("p4",)),
    "email": ChannelProfile("email", Fraction("0.5"), 2, True, True, Fraction(0), ("p4",)),
    "ip": ChannelProfile("ip", Fraction("0.01"), Fraction("0.05"), True, True, Fraction(0), ("p4",)),
    "web": ChannelProfile("web", Fraction("0.5"), 1, True, True, Fraction(0), ("p3",)),
    "dns": ChannelProfile("dns", 1, 60, False, False, Fraction(0), ("p3",)),
    "bank": ChannelProfile("bank", 60, 86400, False, False, Fraction("0.50"), ("p3", "p4")),
}


def preset(name: str) -> ChannelProfile:
    try:
        return PRESETS[name]
    except KeyError:
        raise ChannelError(f"unknown channel preset {name!r}; known: {', '.join(PRESETS)}") from None


@dataclass(frozen=True)
class ChannelMessage:
    sender: EndpointAddress
    to: EndpointAddress
    payload: bytes
    sent_at: Time
    delivered_at: Time
    spoofed: bool = False
    start: Time = Fraction(0)


@dataclass
class Channel:
    """Per-simulation channel state: endpoint occupancy, trace, cost and taps."""

    profile: ChannelProfile
    busy_until: dict[EndpointAddress, Time] = field(default_factory=dict)
    trace: list[ChannelMessage] = field(default_factory=list)
    taps: dict[EndpointAddress, list[object]] = field(default_factory=dict)
    occupancy: dict[EndpointAddress, list[tuple[Time, Time]]] = field(default_factory=dict)

    def send(self, sender: EndpointAddress, to: EndpointAddress, payload: bytes, now) -> ChannelMessage:
        now = as_time(now)
        w = self.profile.per_message_time
        start = max(now, self.busy_until.get(sender, now), self.busy_until.get(to, now))
        end = start + w
        for endpoint in (sender, to):
            self.busy_until[endpoint] = end
            self.occupancy.setdefault(endpoint, []).append((start, end))
        msg = ChannelMessage(sender, to, payload, now, end + self.profile.delivery_delay, False, start)
        self.trace.append(msg)
        return msg

    def attempt_spoof(self, adversary, claimed_from: EndpointAddress, to: EndpointAddress,
                      payload: bytes, now) -> ChannelMessage | None:
        """Inject a message that appears to come from ``claimed_from``.

        Spoofed traffic travels over the adversary's own resources, so it never
        occupies honest endpoints.
        """
        if not self.profile.spoofable:
            return None
        now = as_time(now)
        delivered = now + self.profile.per_message_time + self.profile.delivery_delay
        msg = ChannelMessage(claimed_from, to, payload, now, delivered, True, now)
        self.trace.append(msg)
        return msg

    def attempt_eavesdrop(self, adversary, target: EndpointAddress) -> bool:
        if not self.profile.eavesdroppable:
            return False
        self.taps.setdefault(target, []).append(adversary)
        return True

    def eavesdroppers(self, endpoint: EndpointAddress) -> list[object]:
        return list(self.taps.get(endpoint, ()))

    # -- accounting -----------------------------------------------------------

    def honest_messages(self, endpoint: EndpointAddress | None = None) -> list[ChannelMessage]:
        return [
            m for m in self.trace
            if not m.spoofed and (endpoint is None or endpoint in (m.sender, m.to))
        ]

    def message_count(self, endpoint: EndpointAddress | None = None) -> int:
        return len(self.honest_messages(endpoint))

    def cost(self, endpoint: EndpointAddress | None = None) -> Fraction:
        return self.profile.cost_per_message * self.message_count(endpoint)

    def export_trace(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["sent_at", "delivered_at", "from", "to", "size", "spoofed"])
        for m in self.trace:
            writer.writerow([
                float(m.sent_at), float(m.delivered_at), str(m.sender), str(m.to),
                len(m.payload), int(m.spoofed),
            ])
        return out.getvalue()
