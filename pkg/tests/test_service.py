import base64

import pytest
from fastapi.testclient import TestClient

from qkdike.kme import KmePair, KmePairConfig
from qkdike.service import create_app
from qkdike.service.client import Etsi014Client, Etsi014Error


@pytest.fixture
def client():
    app = create_app(KmePair(KmePairConfig(pool_capacity=10, seed=2)))
    return Etsi014Client(http=TestClient(app))


def test_status(client):
    st = client.status("bob")
    assert st["master_SAE_ID"] == "alice" and st["slave_SAE_ID"] == "bob"
    assert st["stored_key_count"] == 10 and st["key_size"] == 256


def test_enc_then_dec_round_trip(client):
    keys = client.enc_keys("bob", number=3)["keys"]
    assert len(keys) == 3
    assert all(len(base64.b64decode(k["key"])) == 32 for k in keys)
    got = client.dec_keys("alice", [k["key_ID"] for k in keys])["keys"]
    assert got == keys
    assert client.status("alice")["stored_key_count"] == 7


def test_requested_size(client):
    (key,) = client.enc_keys("bob", size=128)["keys"]
    assert len(base64.b64decode(key["key"])) == 16


def test_replay_and_unknown_ids(client):
    (key,) = client.enc_keys("bob")["keys"]
    client.dec_keys("alice", [key["key_ID"]])
    with pytest.raises(Etsi014Error) as info:
        client.dec_keys("alice", [key["key_ID"]])
    assert info.value.status_code == 400
    with pytest.raises(Etsi014Error):
        client.dec_keys("alice", ["not-a-uuid"])


def test_exhaustion_is_503(client):
    with pytest.raises(Etsi014Error) as info:
        client.enc_keys("bob", number=11)
    assert info.value.status_code == 503


def test_unknown_sae_is_401(client):
    with pytest.raises(Etsi014Error) as info:
        client.status("mallory")
    assert info.value.status_code == 401


def test_bad_size_is_rejected(client):
    with pytest.raises(Etsi014Error) as info:
        client.enc_keys("bob", size=100)
    assert info.value.status_code == 400
    with pytest.raises(Etsi014Error) as info:
        client.enc_keys("bob", number=0)
    assert info.value.status_code == 422
