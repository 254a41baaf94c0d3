import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdike.errors import AlreadyConsumed, KeyNotFound, PoolExhausted, SessionExpired, UnknownKsid
from qkdike.kme import KmePair, KmePairConfig, Side
from qkdike.netsim import VirtualClock

A, B = Side.A, Side.B


# -- ETSI 004 -----------------------------------------------------------

def test_open_then_join_shares_session(kme):
    ksid = kme.open_connect(A)
    assert len(ksid) == 16
    assert kme.open_connect(B, ksid) == ksid
    assert kme._sessions[ksid].open_on == {A, B}


def test_join_unknown_ksid(kme):
    with pytest.raises(UnknownKsid):
        kme.open_connect(B, b"\x42" * 16)


def test_two_fresh_opens_are_distinct(kme):
    assert kme.open_connect(A) != kme.open_connect(A)


def test_index_zero_identical_from_both_sides(kme):
    ksid = kme.open_connect(A)
    kme.open_connect(B, ksid)
    a, ia = kme.get_key_004(A, ksid, 0)
    b, ib = kme.get_key_004(B, ksid, 0)
    assert a == b and ia == ib == 0 and len(a) == 32


def test_distinct_indices_distinct_material(kme):
    ksid = kme.open_connect(A)
    assert kme.get_key_004(A, ksid, 0)[0] != kme.get_key_004(A, ksid, 1)[0]


def test_cursor_advances_per_side_explicit_index_does_not(kme):
    ksid = kme.open_connect(A)
    kme.open_connect(B, ksid)
    assert kme.get_key_004(A, ksid)[1] == 0
    assert kme.get_key_004(A, ksid, 5)[1] == 5
    assert kme.get_key_004(A, ksid)[1] == 1
    # B's cursor is independent and replays the same stream
    first_b, idx = kme.get_key_004(B, ksid)
    assert idx == 0 and first_b == kme.get_key_004(A, ksid, 0)[0]


def test_get_key_requires_membership(kme):
    ksid = kme.open_connect(A)
    with pytest.raises(UnknownKsid):
        kme.get_key_004(B, ksid, 0)


def test_close_lifecycle(kme):
    ksid = kme.open_connect(A)
    kme.open_connect(B, ksid)
    material, _ = kme.get_key_004(A, ksid, 0)
    kme.close(A, ksid)
    # peer keeps reading
    assert kme.get_key_004(B, ksid, 0)[0] == material
    kme.close(B, ksid)
    with pytest.raises(UnknownKsid):
        kme.get_key_004(B, ksid, 0)
    with pytest.raises(UnknownKsid):
        kme.open_connect(A, ksid)


def test_double_close_is_loud(kme):
    ksid = kme.open_connect(A)
    kme.open_connect(B, ksid)
    kme.close(A, ksid)
    with pytest.raises(UnknownKsid):
        kme.close(A, ksid)


def test_session_ttl():
    clock = VirtualClock()
    kme = KmePair(KmePairConfig(seed=1), clock)
    ksid = kme.open_connect(A, qos_ttl=2.0)
    kme.get_key_004(A, ksid, 0)
    clock.advance(2000.0)
    kme.get_key_004(A, ksid, 0)  # exactly at the limit is still fine
    clock.advance(0.5)
    with pytest.raises(SessionExpired):
        kme.get_key_004(A, ksid, 0)
    with pytest.raises(SessionExpired):
        kme.open_connect(B, ksid)


def test_stream_draws_count_against_pool():
    kme = KmePair(KmePairConfig(pool_capacity=2, seed=1))
    ksid = kme.open_connect(A)
    kme.open_connect(B, ksid)
    kme.get_key_004(A, ksid, 0)
    kme.get_key_004(B, ksid, 0)  # same index, no new draw
    assert kme.stored_key_count == 1
    kme.get_key_004(A, ksid, 1)
    with pytest.raises(PoolExhausted):
        kme.get_key_004(A, ksid, 2)
    with pytest.raises(PoolExhausted):
        kme.open_connect(A)


# -- ETSI 014 -----------------------------------------------------------

def test_get_key_single(kme):
    ((key_id, key),) = kme.get_key_014(A, 1)
    assert len(key_id) == 16 and len(key) == 32


def test_get_key_over_capacity(kme):
    with pytest.raises(PoolExhausted):
        kme.get_key_014(A, 101)
    assert kme.stored_key_count == 100


def test_successive_calls_fresh_ids(kme):
    first = {k for k, _ in kme.get_key_014(A, 5)}
    second = {k for k, _ in kme.get_key_014(A, 5)}
    assert not first & second


def test_peer_retrieves_same_material(kme):
    keys = kme.get_key_014(A, 3)
    got = kme.get_key_with_ids_014(B, [k for k, _ in keys])
    assert got == keys


def test_unknown_id(kme):
    with pytest.raises(KeyNotFound):
        kme.get_key_with_ids_014(B, [b"\x00" * 16])


def test_own_id_is_not_retrievable(kme):
    ((key_id, _),) = kme.get_key_014(A, 1)
    with pytest.raises(KeyNotFound):
        kme.get_key_with_ids_014(A, [key_id])


def test_replay_of_consumed_id(kme):
    ((key_id, _),) = kme.get_key_014(A, 1)
    kme.get_key_with_ids_014(B, [key_id])
    with pytest.raises(AlreadyConsumed):
        kme.get_key_with_ids_014(B, [key_id])


def test_failed_batch_consumes_nothing(kme):
    ((key_id, _),) = kme.get_key_014(A, 1)
    with pytest.raises(KeyNotFound):
        kme.get_key_with_ids_014(B, [key_id, b"\x01" * 16])
    kme.get_key_with_ids_014(B, [key_id])


def test_status_accounting(kme):
    assert kme.get_status(A)["stored_key_count"] == 100
    kme.get_key_014(A, 3)
    assert kme.get_status(B)["stored_key_count"] == 97
    empty = KmePair(KmePairConfig(pool_capacity=0))
    st = empty.get_status(A)
    assert st["stored_key_count"] == 0 and st["key_size"] == 32


def test_replenish_rate():
    clock = VirtualClock()
    kme = KmePair(KmePairConfig(pool_capacity=10, replenish_rate=2.0, seed=1), clock)
    kme.get_key_014(A, 10)
    assert kme.stored_key_count == 0
    clock.advance(1250.0)  # 2.5 keys worth
    assert kme.get_status(A)["stored_key_count"] == 2
    clock.advance(250.0)
    assert kme.get_status(A)["stored_key_count"] == 3
    clock.advance(60_000.0)
    assert kme.get_status(A)["stored_key_count"] == 10


def test_every_call_costs_response_latency():
    kme = KmePair(KmePairConfig(response_latency=7.5, seed=1))
    caller = VirtualClock(100.0)
    ksid = kme.open_connect(A, clock=caller)
    kme.get_key_004(A, ksid, clock=caller)
    kme.get_key_014(B, 1, clock=caller)
    kme.get_status(A, clock=caller)
    kme.close(A, ksid, clock=caller)
    assert caller.now == 100.0 + 5 * 7.5
    assert [c.end - c.start for c in kme.calls] == [7.5] * 5
    assert kme.clock.now == 0.0


# -- symmetry / conservation properties ---------------------------------

@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("AB"), st.integers(0, 50)), min_size=1, max_size=60),
       st.integers(0, 2**32))
def test_004_symmetry_over_random_access(accesses, seed):
    kme = KmePair(KmePairConfig(pool_capacity=1000, seed=seed))
    ksid = kme.open_connect(A)
    kme.open_connect(B, ksid)
    seen = {}
    for side, index in accesses:
        material, _ = kme.get_key_004(side, ksid, index)
        assert seen.setdefault(index, material) == material
    assert kme.stored_key_count == 1000 - len(seen)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=15), st.integers(0, 2**32))
def test_014_conservation_and_symmetry(batches, seed):
    kme = KmePair(KmePairConfig(pool_capacity=40, seed=seed))
    delivered = 0
    rng = random.Random(seed)
    for count in batches:
        side = rng.choice([A, B])
        if count > kme.stored_key_count:
            with pytest.raises(PoolExhausted):
                kme.get_key_014(side, count)
            continue
        keys = kme.get_key_014(side, count)
        delivered += count
        assert kme.get_key_with_ids_014(side.peer, [k for k, _ in keys]) == keys
        assert kme.stored_key_count == 40 - delivered >= 0
