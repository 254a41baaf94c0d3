"""Minimal ETSI GS QKD 014 client used by the ``qkdike kme`` subcommands."""

from __future__ import annotations

from typing import Iterable, Optional

import httpx


class Etsi014Error(RuntimeError):
    def __init__(self, status_code: int, message: str):
        super().__init__(f"{status_code}: {message}")
        self.status_code = status_code


class Etsi014Client:
    def __init__(self, base_url: str = "http://127.0.0.1:8014", http: Optional[httpx.Client] = None):
        self._http = http or httpx.Client(base_url=base_url, timeout=10.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self._http.close()

    def _check(self, resp: httpx.Response) -> dict:
        if resp.status_code != 200:
            try:
                message = resp.json().get("message", resp.text)
            except ValueError:
                message = resp.text
            raise Etsi014Error(resp.status_code, message)
        return resp.json()

    def status(self, slave_sae: str) -> dict:
        return self._check(self._http.get(f"/api/v1/keys/{slave_sae}/status"))

    def enc_keys(self, slave_sae: str, number: int = 1, size: Optional[int] = None) -> dict:
        body = {"number": number}
        if size is not None:
            body["size"] = size
        return self._check(self._http.post(f"/api/v1/keys/{slave_sae}/enc_keys", json=body))

    def dec_keys(self, master_sae: str, key_ids: Iterable[str]) -> dict:
        body = {"key_IDs": [{"key_ID": k} for k in key_ids]}
        return self._check(self._http.post(f"/api/v1/keys/{master_sae}/dec_keys", json=body))
