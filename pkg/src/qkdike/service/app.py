from __future__ import annotations

import base64
import threading
import uuid
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from ..errors import KeyNotFound, KmeError, PoolExhausted
from ..kme import KmePair, Side
from .schemas import Key, KeyContainer, KeyIDs, KeyRequest, Status


class SaeError(Exception):
    pass


def _uuid(key_id: bytes) -> str:
    return str(uuid.UUID(bytes=key_id))


def create_app(kme: Optional[KmePair] = None, master_sae: str = "alice", slave_sae: str = "bob") -> FastAPI:
    """Build the facade. ``master_sae`` talks to side A, ``slave_sae`` to side B.

    The SAE in the URL names the *peer*; the caller is the other SAE, as in
    the standard (enc_keys is addressed to the slave, dec_keys to the master).
    """
    kme = kme or KmePair()
    sides = {master_sae: Side.A, slave_sae: Side.B}
    lock = threading.Lock()
    app = FastAPI(title="QKD KME (ETSI GS QKD 014 facade)")
    app.state.kme = kme

    def caller_of(peer_sae: str) -> Side:
        try:
            return sides[peer_sae].peer
        except KeyError:
            raise SaeError(f"unknown SAE {peer_sae!r}") from None

    @app.exception_handler(SaeError)
    async def _sae(request, exc):
        return JSONResponse(status_code=401, content={"message": str(exc)})

    @app.exception_handler(PoolExhausted)
    async def _exhausted(request, exc):
        return JSONResponse(status_code=503, content={"message": str(exc)})

    @app.exception_handler(KmeError)
    async def _kme_error(request, exc):
        return JSONResponse(status_code=400, content={"message": str(exc)})

    @app.exception_handler(ValueError)
    async def _bad_request(request, exc):
        return JSONResponse(status_code=400, content={"message": str(exc)})

    @app.get("/api/v1/keys/{slave_SAE_ID}/status", response_model=Status)
    def status(slave_SAE_ID: str):
        side = caller_of(slave_SAE_ID)
        with lock:
            st = kme.get_status(side)
        master = master_sae if side is Side.A else slave_sae
        bits = st["key_size"] * 8
        return Status(
            source_KME_ID=f"KME-{side.value}",
            target_KME_ID=f"KME-{side.peer.value}",
            master_SAE_ID=master,
            slave_SAE_ID=slave_SAE_ID,
            key_size=bits,
            stored_key_count=st["stored_key_count"],
            max_key_count=st["max_key_count"],
            max_key_per_request=st["max_per_request"],
            max_key_size=bits,
            min_key_size=bits,
        )

    @app.post("/api/v1/keys/{slave_SAE_ID}/enc_keys", response_model=KeyContainer)
    def enc_keys(slave_SAE_ID: str, body: KeyRequest):
        side = caller_of(slave_SAE_ID)
        size = None
        if body.size is not None:
            if body.size % 8:
                raise ValueError("size must be a multiple of 8 bits")
            size = body.size // 8
        with lock:
            keys = kme.get_key_014(side, body.number, size)
        return KeyContainer(keys=[Key(key_ID=_uuid(k), key=base64.b64encode(m).decode()) for k, m in keys])

    @app.post("/api/v1/keys/{master_SAE_ID}/dec_keys", response_model=KeyContainer)
    def dec_keys(master_SAE_ID: str, body: KeyIDs):
        side = caller_of(master_SAE_ID)
        try:
            ids = [uuid.UUID(k.key_ID).bytes for k in body.key_IDs]
        except ValueError:
            raise KeyNotFound("malformed key_ID") from None
        with lock:
            keys = kme.get_key_with_ids_014(side, ids)
        return KeyContainer(keys=[Key(key_ID=_uuid(k), key=base64.b64encode(m).decode()) for k, m in keys])

    return app

