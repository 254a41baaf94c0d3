"""Request/response bodies mirroring ETSI GS QKD 014 JSON shapes."""

from typing import List, Optional

from pydantic import BaseModel, Field


class Status(BaseModel):
    source_KME_ID: str
    target_KME_ID: str
    master_SAE_ID: str
    slave_SAE_ID: str
    key_size: int
    stored_key_count: int
    max_key_count: int
    max_key_per_request: int
    max_key_size: int
    min_key_size: int
    max_SAE_ID_count: int = 0


class KeyRequest(BaseModel):
    number: int = Field(1, ge=1)
    size: Optional[int] = Field(None, ge=8, description="key size in bits")


class Key(BaseModel):
    key_ID: str
    key: str


class KeyContainer(BaseModel):
    keys: List[Key]


class KeyID(BaseModel):
    key_ID: str


class KeyIDs(BaseModel):
    key_IDs: List[KeyID]


class Error(BaseModel):
    message: str
