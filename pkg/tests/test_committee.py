import math

import pytest

from endpointcert.committee import CommitteeError, draw, is_member, select
from endpointcert.crypto import digest, u64

BH = digest([b"block"])


def test_golden_committee(golden):
    g = golden["committee"]
    req, bh = bytes.fromhex(g["request_hex"]), bytes.fromhex(g["block_hash_hex"])
    assert list(select(req, bh, g["N"], g["k"]).members) == g["replace"]
    assert list(select(req, bh, g["N"], g["k"], distinct=True).members) == g["distinct"]
    s = golden["small_committee"]
    assert list(select(req, bh, s["N"], s["k"]).members) == s["replace"]
    assert list(select(req, bh, s["N"], s["k"], distinct=True).members) == s["distinct"]


def test_select_is_deterministic_and_request_bound():
    a = select(b"r1", BH, 100, 8)
    assert a == select(b"r1", BH, 100, 8)
    assert a.members != select(b"r2", BH, 100, 8).members
    assert a.members != select(b"r1", digest([b"other"]), 100, 8).members


def test_slots_are_one_based_draws():
    c = select(b"r", BH, 50, 5)
    assert c.members == tuple(draw(b"r", BH, 50, i) for i in range(1, 6))
    for slot, member in enumerate(c.members, 1):
        assert slot in c.slots_of(member)


def test_distinct_mode_has_no_duplicates():
    for i in range(200):
        c = select(u64(i), BH, 12, 12, distinct=True)
        assert sorted(c.members) == list(range(12))
        assert c.duplicates == 0


def test_duplicate_rate_matches_birthday_bound():
    n, k, trials = 50, 10, 4000
    p_dup = 1 - math.prod((n - i) / n for i in range(k))
    hits = sum(select(u64(i), BH, n, k).duplicates > 0 for i in range(trials))
    se = math.sqrt(p_dup * (1 - p_dup) / trials)
    assert abs(hits / trials - p_dup) <= 3 * se


def test_select_and_is_member_agree_exhaustively():
    for n in range(1, 51):
        for k in range(1, 11):
            req = u64(n * 100 + k)
            c = select(req, BH, n, k)
            for s in range(n):
                ok, slots = is_member(req, BH, n, k, s)
                assert ok == (s in c.distinct_members)
                assert slots == c.slots_of(s)
            if k <= n:
                c = select(req, BH, n, k, distinct=True)
                assert all(is_member(req, BH, n, k, s, distinct=True)[0] == (s in c.members) for s in range(n))


@pytest.mark.parametrize("n,k,distinct", [(0, 1, False), (5, 0, False), (3, 4, True)])
def test_invalid_sizes(n, k, distinct):
    with pytest.raises(CommitteeError):
        select(b"r", BH, n, k, distinct=distinct)


def test_replace_mode_allows_k_above_n():
    c = select(b"r", BH, 3, 10)
    assert len(c.members) == 10 and c.duplicates >= 7
